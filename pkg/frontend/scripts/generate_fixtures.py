"""Regenerate test fixtures from the shape server.

Spins up the backend in-process, requests reference kinematics frames over
the HTTP API for a spread of (axis, type, phase) triples, and freezes them
into fixtures/kinematics.json. Run from the frontend directory:

    python3 scripts/generate_fixtures.py
"""
import json
import sys
import tempfile
import threading
import urllib.request
from pathlib import Path

from mobkit.bench import generate, write_annotation
from mobkit.server import make_server

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "kinematics.json"


def main() -> int:
    ann = generate("laptop", 42, 512)
    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp)
        (data / "laptop.json").write_bytes(write_annotation(ann))
        (data / "index.json").write_text('["laptop"]')
        server = make_server(str(data), port=0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{server.server_address[1]}"

        directions = [
            [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
            [0.7071067811865476, 0.7071067811865476, 0.0],
            [0.5773502691896258, 0.5773502691896258, 0.5773502691896258],
        ]
        anchors = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1]]
        cases = []
        triples = []
        for t, ty in enumerate(["R", "T", "RT", "R"]):
            for k in range(5):
                triples.append((ty, directions[k % len(directions)],
                                anchors[(t + k) % len(anchors)],
                                0.25 * ((t + k) % 4) + 0.25))
        triples = triples[:20]
        sample = [int(i) for i in range(0, len(ann.cloud), 37)][:12]
        for ty, direction, anchor, phase in triples:
            body = json.dumps({
                "indices": sample,
                "type": ty,
                "anchor": anchor,
                "direction": direction,
                "phase": phase,
            }).encode()
            req = urllib.request.Request(f"{base}/shapes/laptop/flow",
                                         method="POST", data=body)
            with urllib.request.urlopen(req) as resp:
                doc = json.loads(resp.read().decode())
            cases.append({
                "type": ty,
                "anchor": anchor,
                "direction": direction,
                "phase": phase,
                "indices": sample,
                "input": [list(map(float, ann.cloud.points[i])) for i in sample],
                "expected": doc["points"],
                "diagonal": doc["diagonal"],
            })
        server.shutdown()
        server.server_close()

    OUT.write_text(json.dumps({"cases": cases}, indent=1))
    print(f"wrote {OUT} with {len(cases)} cases")
    return 0


if __name__ == "__main__":
    sys.exit(main())
