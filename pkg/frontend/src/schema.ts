/**
 * Annotation document types and validation.
 *
 * Mirrors the backend schema; the UI never sends a document that fails
 * these checks, and save surfaces the failing field inline.
 */

export interface MotionDoc {
  type: "T" | "R" | "RT";
  anchor: [number, number, number];
  direction: [number, number, number];
}

export interface PartDoc {
  indices: number[];
  motions: MotionDoc[];
}

export interface AnnotationDoc {
  shape_id: string;
  points: [number, number, number][];
  normals?: [number, number, number][];
  parts: PartDoc[];
}

export interface FieldError {
  field: string;
  message: string;
}

function isVec3(x: unknown): x is [number, number, number] {
  return (
    Array.isArray(x) &&
    x.length === 3 &&
    x.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

/** Validate a document; returns null when valid, else the first error. */
export function validateAnnotation(doc: unknown): FieldError | null {
  if (typeof doc !== "object" || doc === null) {
    return { field: "", message: "document must be an object" };
  }
  const d = doc as Record<string, unknown>;
  if (typeof d.shape_id !== "string" || d.shape_id.length === 0) {
    return { field: "shape_id", message: "must be a non-empty string" };
  }
  if (!Array.isArray(d.points) || d.points.length === 0) {
    return { field: "points", message: "must be a non-empty array" };
  }
  const n = d.points.length;
  for (let i = 0; i < n; i++) {
    if (!isVec3(d.points[i])) {
      return { field: `points[${i}]`, message: "must be [x, y, z]" };
    }
  }
  if (d.normals !== undefined && d.normals !== null) {
    if (!Array.isArray(d.normals) || d.normals.length !== n) {
      return { field: "normals", message: "must match points in length" };
    }
    for (let i = 0; i < n; i++) {
      const v = d.normals[i];
      if (!isVec3(v)) {
        return { field: `normals[${i}]`, message: "must be [x, y, z]" };
      }
      const len = Math.hypot(v[0], v[1], v[2]);
      if (Math.abs(len - 1) > 1e-6) {
        return { field: `normals[${i}]`, message: "must be unit length" };
      }
    }
  }
  if (!Array.isArray(d.parts)) {
    return { field: "parts", message: "must be an array" };
  }
  for (let pi = 0; pi < d.parts.length; pi++) {
    const part = d.parts[pi] as Record<string, unknown>;
    if (typeof part !== "object" || part === null) {
      return { field: `parts[${pi}]`, message: "must be an object" };
    }
    const indices = part.indices;
    if (!Array.isArray(indices) || indices.length === 0) {
      return {
        field: `parts[${pi}].indices`,
        message: "must be a non-empty array",
      };
    }
    let prev = -1;
    for (let k = 0; k < indices.length; k++) {
      const idx = indices[k];
      if (!Number.isInteger(idx) || (idx as number) < 0 || (idx as number) >= n) {
        return {
          field: `parts[${pi}].indices[${k}]`,
          message: `index out of range (N=${n})`,
        };
      }
      if ((idx as number) <= prev) {
        return {
          field: `parts[${pi}].indices`,
          message: "must be sorted and unique",
        };
      }
      prev = idx as number;
    }
    if (!Array.isArray(part.motions)) {
      return { field: `parts[${pi}].motions`, message: "must be an array" };
    }
    for (let mi = 0; mi < part.motions.length; mi++) {
      const motion = part.motions[mi] as Record<string, unknown>;
      const where = `parts[${pi}].motions[${mi}]`;
      if (motion.type !== "T" && motion.type !== "R" && motion.type !== "RT") {
        return { field: `${where}.type`, message: "must be T, R, or RT" };
      }
      if (!isVec3(motion.anchor)) {
        return { field: `${where}.anchor`, message: "must be [x, y, z]" };
      }
      if (!isVec3(motion.direction)) {
        return { field: `${where}.direction`, message: "must be [x, y, z]" };
      }
      const v = motion.direction as [number, number, number];
      if (Math.abs(Math.hypot(v[0], v[1], v[2]) - 1) > 1e-6) {
        return { field: `${where}.direction`, message: "must be unit length" };
      }
    }
  }
  return null;
}
