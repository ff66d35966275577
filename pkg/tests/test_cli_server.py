import json
import threading
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from mobkit.bench import generate, read_annotation, write_annotation
from mobkit.cli import main
from mobkit.pipeline import PipelineConfig
from mobkit.server import make_server


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        config = PipelineConfig(tau_sim=80.0, top_refine=2)
        path = tmp_path / "config.txt"
        path.write_text(config.to_text())
        again = PipelineConfig.from_text(path.read_text())
        assert again == config

    def test_comments_and_unknown_keys(self):
        assert PipelineConfig.from_text("# comment\n tau_sim = 50\n").tau_sim == 50
        with pytest.raises(ValueError, match="unknown option"):
            PipelineConfig.from_text("nonsense = 1\n")


class TestGen:
    def test_single_file_deterministic(self, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        for out in (out1, out2):
            assert main(["gen", "--archetype", "laptop", "--seed", "5",
                         "--points", "512", "--out", str(out)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_dataset_mode(self, tmp_path):
        out = tmp_path / "data"
        assert main(["gen", "--archetype", "wheel", "--seed", "0,1",
                     "--points", "512", "--out-dir", str(out)]) == 0
        ids = json.loads((out / "index.json").read_text())
        assert ids == ["wheel_000", "wheel_001"]
        ann = read_annotation((out / "wheel_000.json").read_bytes())
        assert len(ann.parts) == 2


class TestAugmentCli:
    def test_poses_written(self, tmp_path):
        src = tmp_path / "laptop.json"
        main(["gen", "--archetype", "laptop", "--seed", "3", "--points", "512",
              "--out", str(src)])
        out = tmp_path / "aug"
        assert main(["augment", "--input", str(src), "--poses", "3",
                     "--out-dir", str(out)]) == 0
        ids = json.loads((out / "index.json").read_text())
        assert len(ids) == 3


class TestRun:
    def test_run_on_laptop(self, tmp_path, laptop42):
        src = tmp_path / "laptop.json"
        src.write_bytes(write_annotation(laptop42))
        out = tmp_path / "result.json"
        fig = tmp_path / "result.png"
        assert main(["run", "--input", str(src), "--out", str(out),
                     "--figure", str(fig)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["parts"]) == 2
        assert doc["report"]["iou"] >= 0.95
        assert fig.exists() and fig.stat().st_size > 1000

    def test_missing_input_exit_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--input", str(tmp_path / "nope.json"),
                  "--out", str(tmp_path / "r.json")])
        assert exc.value.code == 2
        assert "cannot read input" in capsys.readouterr().err

    def test_deterministic_output(self, tmp_path):
        src = tmp_path / "wheel.json"
        main(["gen", "--archetype", "wheel", "--seed", "4", "--points", "1024",
              "--out", str(src)])
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            main(["run", "--input", str(src), "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSweep:
    def test_tau_conf_sweep(self, tmp_path, capsys):
        data = tmp_path / "data"
        main(["gen", "--archetype", "laptop", "--seed", "1", "--points", "1024",
              "--out-dir", str(data)])
        out = tmp_path / "sweep"
        assert main(["sweep", "--dataset", str(data), "--parameter", "tau_conf",
                     "--values", "0.3,0.5,0.7", "--out-dir", str(out)]) == 0
        table = capsys.readouterr().out
        assert "recall" in table and table.count("\n") >= 4
        rows = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(rows) == 4  # header + 3 values
        assert (out / "sweep.png").exists()

    def test_tau_sim_uses_similarity_route(self, tmp_path):
        data = tmp_path / "data"
        main(["gen", "--archetype", "laptop", "--seed", "1", "--points", "512",
              "--out-dir", str(data)])
        assert main(["sweep", "--dataset", str(data), "--parameter", "tau_sim",
                     "--values", "50,100"]) == 0

    def test_unknown_parameter(self, tmp_path, capsys):
        data = tmp_path / "data"
        main(["gen", "--archetype", "laptop", "--seed", "1", "--points", "512",
              "--out-dir", str(data)])
        assert main(["sweep", "--dataset", str(data), "--parameter", "bogus",
                     "--values", "1"]) == 2
        assert "unknown parameter" in capsys.readouterr().err

    def test_empty_dataset(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--dataset", str(empty), "--parameter", "tau_conf",
                  "--values", "0.5"])
        assert exc.value.code == 2
        assert "no shapes found" in capsys.readouterr().err


@pytest.fixture()
def served(tmp_path, laptop42):
    data = tmp_path / "data"
    data.mkdir()
    (data / "laptop_042.json").write_bytes(write_annotation(laptop42))
    (data / "index.json").write_text(json.dumps(["laptop_042"]))
    server = make_server(str(data), port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base, data
    server.shutdown()
    server.server_close()


def _get(url):
    with urllib.request.urlopen(url) as resp:
        return resp.status, json.loads(resp.read().decode())


class TestServer:
    def test_list_and_fetch(self, served):
        base, _ = served
        status, ids = _get(f"{base}/shapes")
        assert status == 200 and ids == ["laptop_042"]
        status, doc = _get(f"{base}/shapes/laptop_042")
        assert status == 200 and len(doc["parts"]) == 2

    def test_unknown_shape_404(self, served):
        base, _ = served
        with pytest.raises(urllib.error.HTTPError) as exc:
            _get(f"{base}/shapes/nope")
        assert exc.value.code == 404

    def test_put_validates(self, served, laptop42):
        base, _ = served
        doc = json.loads(write_annotation(laptop42).decode())
        doc["parts"][0]["indices"] = [0, 10 ** 6]
        req = urllib.request.Request(f"{base}/shapes/edited", method="PUT",
                                     data=json.dumps(doc).encode())
        with pytest.raises(urllib.error.HTTPError) as exc:
            urllib.request.urlopen(req)
        assert exc.value.code == 422
        body = json.loads(exc.value.read().decode())
        assert "out-of-range" in body["error"]["message"]

    def test_put_then_get_round_trip(self, served, laptop42):
        base, _ = served
        data = write_annotation(laptop42)
        req = urllib.request.Request(f"{base}/shapes/copy", method="PUT",
                                     data=data)
        with urllib.request.urlopen(req) as resp:
            assert resp.status == 200
        status, doc = _get(f"{base}/shapes/copy")
        assert status == 200
        again = write_annotation(read_annotation(json.dumps(doc).encode()))
        assert again == data

    def test_result_404_then_run(self, served):
        base, _ = served
        with pytest.raises(urllib.error.HTTPError) as exc:
            _get(f"{base}/shapes/laptop_042/result")
        assert exc.value.code == 404
        req = urllib.request.Request(f"{base}/shapes/laptop_042/run",
                                     method="POST", data=b"")
        with urllib.request.urlopen(req, timeout=300) as resp:
            doc = json.loads(resp.read().decode())
        assert doc["report"]["iou"] >= 0.95
        status, stored = _get(f"{base}/shapes/laptop_042/result")
        assert status == 200 and stored == doc

    def test_flow_reference(self, served, laptop42):
        base, _ = served
        lid = laptop42.parts[1]
        mt, line = lid.motions[0]
        req_doc = {
            "indices": lid.indices.tolist(),
            "type": mt.code,
            "anchor": line.point.tolist(),
            "direction": line.direction.tolist(),
            "phase": 0.5,
        }
        req = urllib.request.Request(f"{base}/shapes/laptop_042/flow",
                                     method="POST",
                                     data=json.dumps(req_doc).encode())
        with urllib.request.urlopen(req) as resp:
            doc = json.loads(resp.read().decode())
        from mobkit.core import transform_points

        expected = transform_points(laptop42.cloud.points[lid.indices], line,
                                    mt, 0.5 * 90.0)
        np.testing.assert_allclose(np.asarray(doc["points"]), expected,
                                   atol=1e-9)
