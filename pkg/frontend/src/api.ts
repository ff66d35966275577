/** Thin client for the shape server. */
import { AnnotationDoc } from "./schema";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly field: string | null,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let field: string | null = null;
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && body.error) {
      message = body.error.message ?? JSON.stringify(body.error);
      field = body.error.field ?? null;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, field, message);
}

export class ShapeApi {
  constructor(readonly base: string = "") {}

  async listShapes(): Promise<string[]> {
    const resp = await fetch(`${this.base}/shapes`);
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }

  async getShape(id: string): Promise<AnnotationDoc> {
    const resp = await fetch(`${this.base}/shapes/${id}`);
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }

  async putShape(id: string, doc: AnnotationDoc): Promise<void> {
    const resp = await fetch(`${this.base}/shapes/${id}`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
    if (!resp.ok) throw await parseError(resp);
  }

  async getResult(id: string): Promise<AnnotationDoc | null> {
    const resp = await fetch(`${this.base}/shapes/${id}/result`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }

  async runPipeline(id: string): Promise<AnnotationDoc> {
    const resp = await fetch(`${this.base}/shapes/${id}/run`, {
      method: "POST",
    });
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }

  /** Server-side reference positions for a motion at a phase. */
  async flowReference(
    id: string,
    indices: number[],
    type: string,
    anchor: number[],
    direction: number[],
    phase: number,
  ): Promise<{ points: number[][]; diagonal: number }> {
    const resp = await fetch(`${this.base}/shapes/${id}/flow`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ indices, type, anchor, direction, phase }),
    });
    if (!resp.ok) throw await parseError(resp);
    return resp.json();
  }
}
