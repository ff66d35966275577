"""Loopback HTTP server exposing shapes, annotations, and pipeline results.

Endpoints (JSON unless noted):
    GET  /shapes                 -> list of shape ids
    GET  /shapes/{id}            -> annotation document
    PUT  /shapes/{id}            -> store an edited annotation (422 with a
                                    field-level message on invariant errors)
    GET  /shapes/{id}/result     -> stored pipeline result, or 404
    POST /shapes/{id}/run        -> run the pipeline, store and return result
    POST /shapes/{id}/flow       -> reference kinematics for the given
                                    mobility at a phase in [0, 1]

Data directory layout: {id}.json per shape, index.json with the id list,
results/ for pipeline outputs. Static UI files are served from an optional
directory under /ui/.
"""
from __future__ import annotations

import json
import mimetypes
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from mobkit.bench.codec import AnnotationFormatError, read_annotation, write_annotation
from mobkit.core import Line, MotionType, MoveAmounts, bbox_diagonal, transform_points
from mobkit.pipeline import PipelineConfig, run_pipeline

_ID_RE = re.compile(r"^[A-Za-z0-9_\-]+$")


class ShapeStore:
    def __init__(self, data_dir: str):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "results").mkdir(exist_ok=True)
        self.lock = threading.Lock()

    def ids(self) -> list[str]:
        index = self.root / "index.json"
        if index.exists():
            return json.loads(index.read_text())
        return sorted(p.stem for p in self.root.glob("*.json")
                      if p.name != "index.json")

    def _path(self, shape_id: str) -> Path:
        if not _ID_RE.match(shape_id):
            raise KeyError(shape_id)
        return self.root / f"{shape_id}.json"

    def load(self, shape_id: str) -> bytes:
        path = self._path(shape_id)
        if not path.exists():
            raise KeyError(shape_id)
        return path.read_bytes()

    def store(self, shape_id: str, data: bytes):
        read_annotation(data)  # validate before persisting
        with self.lock:
            self._path(shape_id).write_bytes(data)
            index = self.root / "index.json"
            ids = set(self.ids())
            ids.add(shape_id)
            index.write_text(json.dumps(sorted(ids)))

    def result_path(self, shape_id: str) -> Path:
        return self.root / "results" / f"{shape_id}.json"


def _result_document(ann, result) -> dict:
    # No timings in the document: result files are byte-deterministic.
    doc = json.loads(write_annotation(
        result.to_annotation(ann.shape_id, ann.cloud)).decode())
    if result.report is not None:
        doc["report"] = result.report.as_dict()
    return doc


class _Handler(BaseHTTPRequestHandler):
    server_version = "mobkit"
    store: ShapeStore
    config: PipelineConfig
    ui_dir: Path | None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, payload, content_type="application/json"):
        if isinstance(payload, (dict, list)):
            body = json.dumps(payload).encode()
        elif isinstance(payload, str):
            body = payload.encode()
        else:
            body = payload
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length", "0"))
        return self.rfile.read(length)

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if parts == ["shapes"]:
            return self._send(200, self.store.ids())
        if len(parts) == 2 and parts[0] == "shapes":
            try:
                return self._send(200, self.store.load(parts[1]))
            except KeyError:
                return self._send(404, {"error": "unknown shape id"})
        if len(parts) == 3 and parts[0] == "shapes" and parts[2] == "result":
            path = self.store.result_path(parts[1])
            if not path.exists():
                return self._send(404, {"error": "no result for this shape"})
            return self._send(200, path.read_bytes())
        if self.ui_dir is not None and (not parts or parts[0] == "ui"):
            rel = "/".join(parts[1:]) if parts else ""
            target = (self.ui_dir / (rel or "index.html")).resolve()
            if target.is_file() and str(target).startswith(str(self.ui_dir.resolve())):
                ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
                return self._send(200, target.read_bytes(), ctype)
            return self._send(404, {"error": "not found"})
        self._send(404, {"error": "not found"})

    def do_PUT(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if len(parts) == 2 and parts[0] == "shapes":
            try:
                self.store.store(parts[1], self._body())
            except AnnotationFormatError as e:
                return self._send(422, {"error": {"message": str(e)}})
            except KeyError:
                return self._send(404, {"error": "bad shape id"})
            return self._send(200, {"stored": parts[1]})
        self._send(404, {"error": "not found"})

    def do_POST(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        if len(parts) == 3 and parts[0] == "shapes" and parts[2] == "run":
            try:
                ann = read_annotation(self.store.load(parts[1]))
            except KeyError:
                return self._send(404, {"error": "unknown shape id"})
            gt = ann if any(p.motions for p in ann.parts) else None
            result = run_pipeline(ann.cloud, self.config, gt=gt)
            doc = _result_document(ann, result)
            self.store.result_path(parts[1]).write_text(json.dumps(doc))
            return self._send(200, doc)
        if len(parts) == 3 and parts[0] == "shapes" and parts[2] == "flow":
            return self._flow(parts[1])
        self._send(404, {"error": "not found"})

    def _flow(self, shape_id: str):
        """Reference positions of a part moved to a phase of the canonical
        amounts; the UI checks its client-side animation against this."""
        try:
            ann = read_annotation(self.store.load(shape_id))
        except KeyError:
            return self._send(404, {"error": "unknown shape id"})
        try:
            req = json.loads(self._body().decode())
            indices = np.asarray(req["indices"], dtype=np.int64)
            motion_type = MotionType.from_code(req["type"])
            line = Line(np.asarray(req["anchor"], float),
                        np.asarray(req["direction"], float))
            phase = float(req.get("phase", 1.0))
        except (KeyError, ValueError, json.JSONDecodeError) as e:
            return self._send(422, {"error": {"message": f"bad flow request: {e}"}})
        if indices.size == 0 or indices.min() < 0 or indices.max() >= len(ann.cloud):
            return self._send(422, {"error": {"message": "indices out of range"}})
        amounts = MoveAmounts()
        diag = bbox_diagonal(ann.cloud)
        if motion_type is MotionType.TRANSLATION:
            amount = phase * amounts.translation_delta * diag
        elif motion_type is MotionType.ROTATION:
            amount = phase * amounts.rotation_delta
        else:
            amount = (phase * amounts.rotation_delta,
                      phase * amounts.translation_delta * diag)
        moved = transform_points(ann.cloud.points[indices], line, motion_type, amount)
        return self._send(200, {"points": moved.tolist(), "diagonal": diag})


def make_server(data_dir: str, port: int = 7373,
                config: PipelineConfig = PipelineConfig(),
                ui_dir: str | None = None) -> ThreadingHTTPServer:
    handler = type("Handler", (_Handler,), {
        "store": ShapeStore(data_dir),
        "config": config,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve(data_dir: str, port: int = 7373,
          config: PipelineConfig = PipelineConfig(),
          ui_dir: str | None = None):
    server = make_server(data_dir, port, config, ui_dir)
    print(f"serving {data_dir} on http://127.0.0.1:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
