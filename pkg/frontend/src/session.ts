/**
 * Annotation session state: the working document, part painting with undo,
 * the dirty flag guarding saves, and animation state.
 *
 * Pure logic, no DOM or rendering; the viewer drives it.
 */
import { AnnotationDoc, MotionDoc, validateAnnotation } from "./schema";

export interface AnimationState {
  partIndex: number;
  motionIndex: number;
  phase: number; // 0..1
}

function clonePartIndices(doc: AnnotationDoc): number[][] {
  return doc.parts.map((p) => [...p.indices]);
}

export class AnnotationSession {
  readonly shapeId: string;
  doc: AnnotationDoc;
  dirty = false;
  selectedPart = 0;
  animation: AnimationState | null = null;
  private undoStack: number[][][] = [];

  constructor(doc: AnnotationDoc) {
    const error = validateAnnotation(doc);
    if (error) {
      throw new Error(`invalid document: ${error.field}: ${error.message}`);
    }
    this.shapeId = doc.shape_id;
    this.doc = doc;
  }

  get pointCount(): number {
    return this.doc.points.length;
  }

  /** Map from point index to owning part (-1 when unassigned). */
  partLabels(): Int32Array {
    const labels = new Int32Array(this.pointCount).fill(-1);
    this.doc.parts.forEach((part, pi) => {
      for (const idx of part.indices) {
        labels[idx] = pi;
      }
    });
    return labels;
  }

  addPart(): number {
    this.pushUndo();
    this.doc.parts.push({ indices: [], motions: [] });
    this.selectedPart = this.doc.parts.length - 1;
    return this.selectedPart;
  }

  /**
   * Assign points to the selected part. A point belongs to at most one
   * part: painting steals from previous owners. Empty selections are a
   * no-op (and do not push an undo entry).
   */
  paint(selection: Iterable<number>): void {
    const chosen = [...selection].filter(
      (i) => Number.isInteger(i) && i >= 0 && i < this.pointCount,
    );
    if (chosen.length === 0 || this.doc.parts.length === 0) {
      return;
    }
    this.pushUndo();
    const stolen = new Set(chosen);
    this.doc.parts.forEach((part, pi) => {
      if (pi !== this.selectedPart) {
        part.indices = part.indices.filter((i) => !stolen.has(i));
      }
    });
    const target = this.doc.parts[this.selectedPart];
    const merged = new Set(target.indices);
    for (const i of chosen) {
      merged.add(i);
    }
    target.indices = [...merged].sort((a, b) => a - b);
    this.dirty = true;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) {
      return false;
    }
    // parts may have been added since; drop extras beyond the snapshot
    this.doc.parts = this.doc.parts.slice(0, prev.length);
    prev.forEach((indices, pi) => {
      this.doc.parts[pi].indices = indices;
    });
    this.dirty = true;
    if (this.selectedPart >= this.doc.parts.length) {
      this.selectedPart = Math.max(0, this.doc.parts.length - 1);
    }
    return true;
  }

  setMotion(partIndex: number, motionIndex: number, motion: MotionDoc): void {
    const motions = this.doc.parts[partIndex].motions;
    if (motionIndex === motions.length) {
      motions.push(motion);
    } else {
      motions[motionIndex] = motion;
    }
    this.dirty = true;
  }

  removeMotion(partIndex: number, motionIndex: number): void {
    this.doc.parts[partIndex].motions.splice(motionIndex, 1);
    this.dirty = true;
  }

  /** Null when the document is ready to save, else the blocking error. */
  validationError() {
    return validateAnnotation(this.doc);
  }

  /** Whether a save request should actually hit the server. */
  needsSave(): boolean {
    return this.dirty && this.validationError() === null;
  }

  markSaved(): void {
    this.dirty = false;
  }

  private pushUndo(): void {
    this.undoStack.push(clonePartIndices(this.doc));
    if (this.undoStack.length > 64) {
      this.undoStack.shift();
    }
  }
}
