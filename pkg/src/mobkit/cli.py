"""Command-line interface.

Subcommands: gen, augment, run, eval, sweep, serve. Report paths write a
delimited table plus matplotlib figures next to it. Outputs are
byte-deterministic for fixed inputs, seeds, and config.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from mobkit.bench import (
    ARCHETYPES,
    augment_motion,
    generate,
    jitter,
    read_annotation,
    write_annotation,
)
from mobkit.bench.codec import AnnotationFormatError
from mobkit.bench.metrics import evaluate, proposal_recall
from mobkit.core import MoveAmounts
from mobkit.partprop import propose_parts, similarity_proposals
from mobkit.pipeline import PipelineConfig, run_pipeline
from mobkit.server import _result_document, serve


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = PipelineConfig.from_text(Path(args.config).read_text())
    overrides = {}
    for name in ("tau_sim", "tau_conf", "part_overlap_iou"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return config.override(**overrides)


def _read_annotation_file(path: str):
    try:
        return read_annotation(Path(path).read_bytes())
    except FileNotFoundError:
        print(f"cannot read input: {path}", file=sys.stderr)
        raise SystemExit(2)
    except AnnotationFormatError as e:
        print(f"invalid input {path}: {e}", file=sys.stderr)
        raise SystemExit(2)


def _dataset_items(directory: str) -> list[str]:
    index = Path(directory) / "index.json"
    if index.exists():
        ids = json.loads(index.read_text())
    else:
        ids = sorted(p.stem for p in Path(directory).glob("*.json")
                     if p.name != "index.json")
    if not ids:
        print(f"no shapes found in {directory}", file=sys.stderr)
        raise SystemExit(2)
    return ids


def cmd_gen(args) -> int:
    archetypes = list(ARCHETYPES) if args.archetype == "all" else [args.archetype]
    seeds = [int(s) for s in str(args.seed).split(",")]
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ids = []
        for arch in archetypes:
            for seed in seeds:
                ann = generate(arch, seed, args.points)
                (out_dir / f"{ann.shape_id}.json").write_bytes(write_annotation(ann))
                ids.append(ann.shape_id)
        (out_dir / "index.json").write_text(json.dumps(sorted(ids)))
        print(f"wrote {len(ids)} shapes to {out_dir}")
        return 0
    if len(archetypes) != 1 or len(seeds) != 1:
        print("--out requires a single archetype and seed; use --out-dir",
              file=sys.stderr)
        return 2
    ann = generate(archetypes[0], seeds[0], args.points)
    Path(args.out).write_bytes(write_annotation(ann))
    print(f"wrote {args.out}")
    return 0


def cmd_augment(args) -> int:
    ann = _read_annotation_file(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = augment_motion(ann, args.poses)
    if args.jitter > 0:
        variants = [jitter(v, args.jitter, seed=k) for k, v in enumerate(variants)]
    ids = []
    for v in variants:
        (out_dir / f"{v.shape_id}.json").write_bytes(write_annotation(v))
        ids.append(v.shape_id)
    (out_dir / "index.json").write_text(json.dumps(sorted(ids)))
    print(f"wrote {len(ids)} augmented shapes to {out_dir}")
    return 0


def cmd_run(args) -> int:
    ann = _read_annotation_file(args.input)
    config = _load_config(args)
    gt = ann if any(p.motions for p in ann.parts) else None
    result = run_pipeline(ann.cloud, config, gt=gt)
    doc = _result_document(ann, result)
    Path(args.out).write_text(json.dumps(doc))
    if args.figure:
        from mobkit.report import save_shape_figure

        save_shape_figure(result.to_annotation(ann.shape_id, ann.cloud),
                          args.figure, title=f"{ann.shape_id} (extracted)")
    if result.report is not None:
        r = result.report
        print(f"{ann.shape_id}: parts={len(result.parts)} "
              f"mobilities={len(result.mobilities)} iou={r.iou:.3f} "
              f"oe={r.oe:.2f} md={r.md:.4f} ta={r.ta:.2f} "
              f"({result.seconds:.1f}s)")
    else:
        print(f"{ann.shape_id}: parts={len(result.parts)} "
              f"mobilities={len(result.mobilities)} ({result.seconds:.1f}s)")
    return 0


def _eval_one(task):
    directory, shape_id, config_text = task
    config = PipelineConfig.from_text(config_text)
    ann = read_annotation((Path(directory) / f"{shape_id}.json").read_bytes())
    result = run_pipeline(ann.cloud, config, gt=ann)
    r = result.report
    return {"shape_id": shape_id, "iou": r.iou, "epe": r.epe, "md": r.md,
            "oe": r.oe, "ta": r.ta, "recall": result.recall,
            "seconds": round(result.seconds, 2)}


def _run_dataset(directory: str, config: PipelineConfig, workers: int):
    ids = _dataset_items(directory)
    tasks = [(directory, sid, config.to_text()) for sid in ids]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_eval_one, tasks))
    else:
        rows = [_eval_one(t) for t in tasks]
    return rows


def cmd_eval(args) -> int:
    config = _load_config(args)
    workers = args.workers or os.cpu_count() or 1
    if args.pred and args.gt:
        pred_ann = _read_annotation_file(args.pred)
        gt_ann = _read_annotation_file(args.gt)
        report = evaluate(pred_ann.mobilities(), gt_ann, MoveAmounts())
        print(json.dumps(report.as_dict(), indent=2))
        return 0
    rows = _run_dataset(args.dataset, config, workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    # timings stay on stdout; files are byte-deterministic
    csv_fields = [k for k in rows[0].keys() if k != "seconds"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=csv_fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    from mobkit.report import save_metrics_figure

    save_metrics_figure(rows, str(out_dir / "metrics.png"))
    mean = {k: float(np.mean([r[k] for r in rows]))
            for k in ("iou", "epe", "md", "oe", "ta", "recall")}
    print(_table(rows, ("shape_id", "iou", "epe", "md", "oe", "ta", "recall",
                        "seconds")))
    print("mean: " + "  ".join(f"{k}={v:.4f}" for k, v in mean.items()))
    print(f"wrote {csv_path} and metrics.png")
    return 0


_SWEEPABLE = ("tau_sim", "tau_conf", "part_overlap_iou", "attribute_energy_max",
              "contact_band", "margin")


def _table(rows: list[dict], fields) -> str:
    def fmt(v):
        return f"{v:.4f}" if isinstance(v, float) else str(v)

    widths = {f: max(len(f), max((len(fmt(r[f])) for r in rows), default=0))
              for f in fields}
    head = "  ".join(f.ljust(widths[f]) for f in fields)
    sep = "  ".join("-" * widths[f] for f in fields)
    body = "\n".join("  ".join(fmt(r[f]).ljust(widths[f]) for f in fields)
                     for r in rows)
    return "\n".join([head, sep, body])


def cmd_sweep(args) -> int:
    if args.parameter not in _SWEEPABLE:
        print(f"unknown parameter {args.parameter!r}; choose from {_SWEEPABLE}",
              file=sys.stderr)
        return 2
    config = _load_config(args)
    ids = _dataset_items(args.dataset)
    values = [float(v) for v in args.values.split(",")]
    rows = []
    for value in values:
        cfg = config.override(**{args.parameter: value})
        recalls = []
        ious = []
        for sid in ids:
            ann = read_annotation((Path(args.dataset) / f"{sid}.json").read_bytes())
            if args.parameter in ("tau_sim", "margin"):
                proposals = similarity_proposals(ann.cloud, tau_sim=cfg.tau_sim)
            else:
                proposals = propose_parts(ann.cloud, cfg.proposer())
            recalls.append(proposal_recall(proposals, ann))
            best = [max((len(np.intersect1d(p.indices, part.indices)) /
                         len(np.union1d(p.indices, part.indices))
                         for p in proposals), default=0.0)
                    for part in ann.parts]
            ious.append(float(np.mean(best)))
        rows.append({"value": value, "recall": float(np.mean(recalls)),
                     "mean_iou": float(np.mean(ious))})
    print(_table(rows, ("value", "recall", "mean_iou")))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["value", "recall", "mean_iou"])
            writer.writeheader()
            writer.writerows(rows)
        from mobkit.report import save_sweep_figure

        save_sweep_figure(args.parameter, [r["value"] for r in rows],
                          [r["recall"] for r in rows],
                          [r["mean_iou"] for r in rows],
                          str(out_dir / "sweep.png"))
        print(f"wrote {out_dir / 'sweep.csv'} and sweep.png")
    return 0


def cmd_serve(args) -> int:
    serve(args.data, port=args.port, config=_load_config(args),
          ui_dir=args.ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobkit",
        description="Part mobility extraction from static 3D point clouds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic annotated shapes")
    p.add_argument("--archetype", default="all",
                   choices=list(ARCHETYPES) + ["all"])
    p.add_argument("--seed", default="0",
                   help="seed or comma-separated seeds")
    p.add_argument("--points", type=int, default=2048)
    p.add_argument("--out", help="single-shape output file")
    p.add_argument("--out-dir", help="dataset directory output")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("augment", help="motion-variation augmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--poses", type=int, default=4)
    p.add_argument("--jitter", type=float, default=0.0,
                   help="gaussian noise sigma as a fraction of the diagonal")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("run", help="run the extraction pipeline on one shape")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--figure", help="also render the result to this image")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="evaluate the pipeline over a dataset")
    p.add_argument("--dataset")
    p.add_argument("--pred", help="evaluate a prediction file directly")
    p.add_argument("--gt", help="ground truth for --pred")
    p.add_argument("--config")
    p.add_argument("--out-dir", default="eval_out")
    p.add_argument("--workers", type=int, default=0,
                   help="parallel workers (default: cpu count)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="sweep a threshold over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--parameter", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--config")
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("serve", help="serve shapes and results over HTTP")
    p.add_argument("--data", required=True)
    p.add_argument("--port", type=int, default=7373)
    p.add_argument("--config")
    p.add_argument("--ui-dir", help="serve a built UI from this directory")
    p.set_defaults(fn=cmd_serve)

    for sp in sub.choices.values():
        sp.add_argument("--tau-sim", dest="tau_sim", type=float)
        sp.add_argument("--tau-conf", dest="tau_conf", type=float)
        sp.add_argument("--part-overlap-iou", dest="part_overlap_iou", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
