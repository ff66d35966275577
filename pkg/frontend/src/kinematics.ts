/**
 * Client-side motion kinematics.
 *
 * Duplicates the server's rigid-motion math so animation scrubbing runs at
 * frame rate without round trips; agreement with the server reference is a
 * tested contract (see test/kinematics.test.ts).
 *
 * Conventions match the backend: rotations are degrees, counter-clockwise
 * about the axis direction; translations are model units along it; a
 * combined motion applies rotation first. Full amounts at phase 1 are 90
 * degrees and 15% of the bounding-box diagonal.
 */

export type Vec3 = [number, number, number];
export type MotionTypeCode = "T" | "R" | "RT";

export const FULL_ROTATION_DEG = 90.0;
export const FULL_TRANSLATION_FRACTION = 0.15;

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  if (n < 1e-12) {
    throw new Error("cannot normalize a zero vector");
  }
  return scale(a, 1 / n);
}

/** Rodrigues rotation of a point about the line (anchor, direction). */
export function rotateAboutLine(
  p: Vec3,
  anchor: Vec3,
  direction: Vec3,
  degrees: number,
): Vec3 {
  const k = normalize(direction);
  const theta = (degrees * Math.PI) / 180;
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  const rel = sub(p, anchor);
  const term1 = scale(rel, c);
  const term2 = scale(cross(k, rel), s);
  const term3 = scale(k, dot(rel, k) * (1 - c));
  return add(add(add(term1, term2), term3), anchor);
}

/**
 * Transform a point by a motion at a phase in [0, 1] of the full amounts.
 * `diagonal` is the cloud bounding-box diagonal in model units.
 */
export function transformAtPhase(
  p: Vec3,
  type: MotionTypeCode,
  anchor: Vec3,
  direction: Vec3,
  phase: number,
  diagonal: number,
): Vec3 {
  const rotation = phase * FULL_ROTATION_DEG;
  const translation = phase * FULL_TRANSLATION_FRACTION * diagonal;
  const dir = normalize(direction);
  if (type === "T") {
    return add(p, scale(dir, translation));
  }
  const rotated = rotateAboutLine(p, anchor, dir, rotation);
  if (type === "R") {
    return rotated;
  }
  return add(rotated, scale(dir, translation));
}

/** Bounding-box diagonal of a flat xyz array. */
export function bboxDiagonal(points: Float32Array | number[]): number {
  if (points.length < 3) {
    return 0;
  }
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < points.length; i += 3) {
    for (let c = 0; c < 3; c++) {
      const v = points[i + c] as number;
      if (v < lo[c]) lo[c] = v;
      if (v > hi[c]) hi[c] = v;
    }
  }
  const dx = hi[0] - lo[0];
  const dy = hi[1] - lo[1];
  const dz = hi[2] - lo[2];
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}
