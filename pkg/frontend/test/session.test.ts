import { describe, expect, it } from "vitest";
import { AnnotationDoc } from "../src/schema";
import { AnnotationSession } from "../src/session";

function doc(): AnnotationDoc {
  return {
    shape_id: "t",
    points: Array.from({ length: 8 }, (_, i) => [i, 0, 0]) as [
      number,
      number,
      number,
    ][],
    parts: [
      { indices: [0, 1, 2, 3], motions: [] },
      { indices: [4, 5, 6, 7], motions: [] },
    ],
  };
}

describe("annotation session", () => {
  it("paint then undo restores the document", () => {
    const session = new AnnotationSession(doc());
    const before = JSON.stringify(session.doc.parts);
    session.selectedPart = 0;
    session.paint([4, 5]);
    expect(JSON.stringify(session.doc.parts)).not.toBe(before);
    expect(session.undo()).toBe(true);
    expect(JSON.stringify(session.doc.parts)).toBe(before);
  });

  it("painting steals points from other parts", () => {
    const session = new AnnotationSession(doc());
    session.selectedPart = 0;
    session.paint([4, 5]);
    expect(session.doc.parts[0].indices).toEqual([0, 1, 2, 3, 4, 5]);
    expect(session.doc.parts[1].indices).toEqual([6, 7]);
    // every point still belongs to at most one part
    expect(validatePartition(session)).toBe(true);
  });

  it("empty selection is a no-op", () => {
    const session = new AnnotationSession(doc());
    session.paint([]);
    expect(session.dirty).toBe(false);
    expect(session.undo()).toBe(false);
  });

  it("save is skipped when nothing changed", () => {
    const session = new AnnotationSession(doc());
    expect(session.needsSave()).toBe(false);
    session.paint([1]);
    expect(session.needsSave()).toBe(true);
    session.markSaved();
    expect(session.needsSave()).toBe(false);
  });

  it("invalid edits block saving", () => {
    const session = new AnnotationSession(doc());
    session.setMotion(0, 0, {
      type: "R",
      anchor: [0, 0, 0],
      direction: [0, 0, 3],
    });
    expect(session.needsSave()).toBe(false);
    expect(session.validationError()?.field).toBe(
      "parts[0].motions[0].direction",
    );
  });

  it("out-of-range paints are dropped", () => {
    const session = new AnnotationSession(doc());
    session.paint([99, -1, 2.5]);
    expect(session.dirty).toBe(false);
  });
});

function validatePartition(session: AnnotationSession): boolean {
  const seen = new Set<number>();
  for (const part of session.doc.parts) {
    for (const i of part.indices) {
      if (seen.has(i)) return false;
      seen.add(i);
    }
  }
  return true;
}
