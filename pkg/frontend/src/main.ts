/** App wiring: shape list, part panel, motion editor, animation scrubber. */
import { ShapeApi, ApiError } from "./api";
import { AnnotationSession } from "./session";
import { Viewer } from "./viewer";
import { MotionDoc } from "./schema";
import { normalize } from "./kinematics";

const api = new ShapeApi("");
let session: AnnotationSession | null = null;
let viewer: Viewer;
let showingResult = false;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function setStatus(text: string, isError = false): void {
  const node = el<HTMLDivElement>("status");
  node.textContent = text;
  node.className = isError ? "status error" : "status";
}

async function loadShapeList(): Promise<void> {
  try {
    const ids = await api.listShapes();
    const select = el<HTMLSelectElement>("shape-select");
    select.innerHTML = "";
    for (const id of ids) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      select.appendChild(option);
    }
    if (ids.length) {
      await loadShape(ids[0]);
    }
  } catch (e) {
    setStatus(`server unreachable: ${e}. retry?`, true);
  }
}

async function loadShape(id: string): Promise<void> {
  try {
    const doc = await api.getShape(id);
    session = new AnnotationSession(doc);
    showingResult = false;
    viewer.loadDocument(doc, session.partLabels());
    refreshPanels();
    setStatus(`${id}: ${doc.points.length} points, ${doc.parts.length} parts`);
  } catch (e) {
    if (e instanceof ApiError && e.status === 404) {
      setStatus(`shape "${id}" not found`, true);
    } else {
      setStatus(String(e), true);
    }
  }
}

function refreshPanels(): void {
  if (!session) return;
  const list = el<HTMLUListElement>("part-list");
  list.innerHTML = "";
  session.doc.parts.forEach((part, pi) => {
    const item = document.createElement("li");
    item.className = pi === session!.selectedPart ? "selected" : "";
    const motions = part.motions.map((m) => m.type).join(",") || "static";
    item.textContent = `part ${pi}: ${part.indices.length} pts (${motions})`;
    item.onclick = () => {
      session!.selectedPart = pi;
      refreshPanels();
    };
    list.appendChild(item);
  });
  const animSelect = el<HTMLSelectElement>("anim-select");
  animSelect.innerHTML = "<option value=''>rest pose</option>";
  session.doc.parts.forEach((part, pi) => {
    part.motions.forEach((m, mi) => {
      const option = document.createElement("option");
      option.value = `${pi}:${mi}`;
      option.textContent = `part ${pi} ${m.type}`;
      animSelect.appendChild(option);
    });
  });
  el<HTMLButtonElement>("save-btn").disabled = !session.dirty;
}

function wireUi(): void {
  el<HTMLSelectElement>("shape-select").onchange = (e) =>
    loadShape((e.target as HTMLSelectElement).value);

  el<HTMLButtonElement>("paint-btn").onclick = () => {
    viewer.paintMode = !viewer.paintMode;
    viewer.controls.enabled = !viewer.paintMode;
    el<HTMLButtonElement>("paint-btn").textContent = viewer.paintMode
      ? "painting (click to orbit)"
      : "paint";
  };

  el<HTMLButtonElement>("add-part-btn").onclick = () => {
    session?.addPart();
    refreshPanels();
  };

  el<HTMLButtonElement>("undo-btn").onclick = () => {
    if (session?.undo()) {
      viewer.applyLabels(session.partLabels());
      viewer.drawAxes(session.doc);
      refreshPanels();
    }
  };

  el<HTMLButtonElement>("add-motion-btn").onclick = () => {
    if (!session) return;
    const type = el<HTMLSelectElement>("motion-type").value as
      | "T"
      | "R"
      | "RT";
    const anchor = ["ax", "ay", "az"].map(
      (id) => parseFloat(el<HTMLInputElement>(id).value) || 0,
    ) as [number, number, number];
    let direction: [number, number, number];
    try {
      direction = normalize(
        ["dx", "dy", "dz"].map(
          (id) => parseFloat(el<HTMLInputElement>(id).value) || 0,
        ) as [number, number, number],
      );
    } catch {
      setStatus("direction must be nonzero", true);
      return;
    }
    const motion: MotionDoc = { type, anchor, direction };
    const part = session.selectedPart;
    session.setMotion(part, session.doc.parts[part].motions.length, motion);
    viewer.drawAxes(session.doc);
    refreshPanels();
  };

  el<HTMLInputElement>("phase").oninput = (e) => {
    if (!session) return;
    const phase = parseFloat((e.target as HTMLInputElement).value);
    const chosen = el<HTMLSelectElement>("anim-select").value;
    if (!chosen) {
      session.animation = null;
    } else {
      const [pi, mi] = chosen.split(":").map(Number);
      session.animation = { partIndex: pi, motionIndex: mi, phase };
    }
    viewer.pose(session.doc, session.animation);
  };

  el<HTMLButtonElement>("save-btn").onclick = async () => {
    if (!session) return;
    const error = session.validationError();
    if (error) {
      setStatus(`cannot save: ${error.field}: ${error.message}`, true);
      return;
    }
    if (!session.needsSave()) {
      setStatus("nothing to save");
      return;
    }
    try {
      await api.putShape(session.shapeId, session.doc);
      session.markSaved();
      refreshPanels();
      setStatus("saved");
    } catch (e) {
      if (e instanceof ApiError && e.status === 422) {
        setStatus(`rejected: ${e.field ?? ""} ${e.message}`, true);
      } else {
        setStatus(String(e), true);
      }
    }
  };

  el<HTMLButtonElement>("run-btn").onclick = async () => {
    if (!session) return;
    setStatus("running pipeline...");
    try {
      const result = await api.runPipeline(session.shapeId);
      showingResult = true;
      const labels = new Int32Array(result.points.length).fill(-1);
      result.parts.forEach((part, pi) =>
        part.indices.forEach((i) => (labels[i] = pi)),
      );
      viewer.loadDocument(result, labels);
      setStatus(
        `result: ${result.parts.length} parts, ` +
          `${result.parts.reduce((a, p) => a + p.motions.length, 0)} motions`,
      );
    } catch (e) {
      setStatus(`pipeline failed: ${e}`, true);
    }
  };
}

window.addEventListener("DOMContentLoaded", () => {
  viewer = new Viewer(el<HTMLDivElement>("viewport"));
  viewer.onBrush = (indices) => {
    if (!session || showingResult) return;
    session.paint(indices);
    viewer.applyLabels(session.partLabels());
    refreshPanels();
  };
  wireUi();
  loadShapeList();
});
