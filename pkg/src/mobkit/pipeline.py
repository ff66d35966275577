"""End-to-end pipeline: part proposals, attribute proposals, motion-driven
matching, refinement of the best combinations, and final extraction.

The result keeps every surviving part; parts whose best attribute stays above
the acceptance ceiling are reported as static (no motions)."""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field, fields, replace

import numpy as np

from mobkit.attrprop import propose_attributes
from mobkit.bench.generate import AnnotatedPart, Annotation
from mobkit.bench.metrics import EvalReport, evaluate, proposal_recall
from mobkit.core import Line, Mobility, MotionType, MoveAmounts, PointCloud
from mobkit.extract import ExtractionConfig, nms_parts, select_attributes
from mobkit.matching import MobilityProposal, match_proposals, plausibility_energy
from mobkit.partprop import PartProposal, ProposerConfig, propose_parts
from mobkit.refine import RefineConfig, SnapshotSchedule, refine_mobility


@dataclass(frozen=True)
class PipelineConfig:
    # similarity-route thresholds (sweepable)
    tau_sim: float = 100.0
    margin: float = 100.0
    # clustering proposer
    tau_conf: float = 0.5
    knn: int = 12
    scales: tuple[float, ...] = (0.01, 0.02, 0.04)
    min_cluster: int = 16
    # canonical motion amounts
    translation_delta: float = 0.15
    rotation_delta: float = 90.0
    # snapshots
    snapshot_translations: tuple[float, float, float] = (0.05, 0.10, 0.15)
    snapshot_rotations: tuple[float, float, float] = (30.0, 60.0, 90.0)
    # matching / energy
    contact_band: float = 0.05
    distance_clamp: float = 0.1
    # refinement
    top_refine: int = 3
    refine_skip_error: float = 0.02
    max_rounds: int = 10
    displacement_step: float = 0.05
    displacement_floor: float = 1e-3
    orientation_step: float = 10.0
    orientation_floor: float = 0.1
    # extraction
    part_overlap_iou: float = 0.5
    attribute_collection_iou: float = 0.5
    rotation_angle_min: float = 45.0
    rt_tie_margin: float = 0.002
    # An attribute is reported when its energy on the kept part is within
    # attribute_energy_rel of the part's best attribute, bounded below by
    # the floor (so exact-zero bests don't reject siblings) and above by
    # the hard cap.
    attribute_energy_max: float = 0.005
    attribute_energy_floor: float = 0.001
    attribute_energy_rel: float = 4.0
    min_part_fraction: float = 0.025

    def amounts(self) -> MoveAmounts:
        return MoveAmounts(self.translation_delta, self.rotation_delta)

    def schedule(self) -> SnapshotSchedule:
        return SnapshotSchedule(tuple(self.snapshot_translations),
                                tuple(self.snapshot_rotations))

    def proposer(self) -> ProposerConfig:
        return ProposerConfig(k_neighbors=self.knn, scales=tuple(self.scales),
                              tau_conf=self.tau_conf, min_cluster=self.min_cluster)

    def refine(self) -> RefineConfig:
        return RefineConfig(max_rounds=self.max_rounds,
                            displacement_step=self.displacement_step,
                            displacement_floor=self.displacement_floor,
                            orientation_step_deg=self.orientation_step,
                            orientation_floor_deg=self.orientation_floor,
                            contact_band=self.contact_band,
                            distance_clamp=self.distance_clamp)

    def extraction(self) -> ExtractionConfig:
        return ExtractionConfig(part_overlap_iou=self.part_overlap_iou,
                                attribute_collection_iou=self.attribute_collection_iou,
                                rotation_angle_min_deg=self.rotation_angle_min,
                                rt_tie_margin=self.rt_tie_margin)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PipelineConfig":
        known = {f.name: f for f in fields(cls)}
        values = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in known:
                raise ValueError(f"line {ln}: unknown option {key!r}")
            default = getattr(cls, key)
            if isinstance(default, tuple):
                values[key] = tuple(float(x) for x in val.split(","))
            elif isinstance(default, bool):
                values[key] = val.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                values[key] = int(val)
            else:
                values[key] = float(val)
        return cls(**values)

    def override(self, **kwargs) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


@dataclass(frozen=True)
class PipelineResult:
    parts: tuple[AnnotatedPart, ...]
    mobilities: tuple[Mobility, ...]
    report: EvalReport | None
    recall: float | None
    seconds: float

    def to_annotation(self, shape_id: str, cloud: PointCloud) -> Annotation:
        return Annotation(shape_id, cloud, self.parts)


def _root_part(cloud: PointCloud, kept, contact_band: float,
               margin: float = 1.25) -> bytes | None:
    """Pick the static root among the kept parts, when unambiguous.

    A frictionless joint admits the relative motion from either side, so one
    part must be designated world-anchored. Joint hardware (hinge barrels,
    rails, pins) sits on the chassis side and is sampled densely, making
    "largest contact footprint with the other parts" the root signal; when
    the leader does not beat the runner-up by ``margin`` no part is stripped.
    """
    from scipy.spatial import cKDTree

    if len(kept) < 2:
        return None
    diag = float(np.linalg.norm(cloud.points.max(0) - cloud.points.min(0)))
    n = len(cloud)
    scores = []
    for k in kept:
        part = k.mobility.part
        rest = np.setdiff1d(np.arange(n, dtype=np.int64), part)
        if rest.size == 0:
            continue
        tree = cKDTree(cloud.points[rest])
        d, _ = tree.query(cloud.points[part], k=1)
        count = int((d <= contact_band * diag).sum())
        scores.append(((count, int(part.size), -int(part[0])), part.tobytes()))
    if not scores:
        return None
    scores.sort(reverse=True)
    if len(scores) > 1 and scores[0][0][0] < margin * scores[1][0][0]:
        return None
    return scores[0][1]


def _reanchor_translation(m: Mobility, cloud: PointCloud) -> Mobility:
    """Pin a pure translation's line through its part centroid: the position
    of a slide direction is a free gauge, fixed here by convention."""
    if m.motion_type is not MotionType.TRANSLATION:
        return m
    centroid = cloud.points[m.part].mean(axis=0)
    from mobkit.attrprop import encode_axis

    return Mobility(m.part, m.motion_type,
                    encode_axis(Line(centroid, m.axis.orientation), cloud))


def run_pipeline(cloud: PointCloud, config: PipelineConfig = PipelineConfig(),
                 gt: Annotation | None = None) -> PipelineResult:
    """Extract part mobilities from a cloud; evaluates when GT is given."""
    t0 = time.perf_counter()
    amounts = config.amounts()
    schedule = config.schedule()
    n = len(cloud)

    part_props = propose_parts(cloud, config.proposer())
    recall = proposal_recall(part_props, gt) if gt is not None else None
    # The whole-cloud cluster has no static remainder and cannot carry a
    # mobility, and parts below the size floor can never survive extraction;
    # drop both before the expensive scoring stages.
    min_part = max(config.min_cluster, int(config.min_part_fraction * n))
    part_props = [p for p in part_props
                  if min_part <= p.indices.size < n]

    scored = match_proposals(
        cloud, part_props,
        lambda idx: propose_attributes(cloud, idx, contact_band=config.contact_band),
        amounts, contact_band=config.contact_band,
        distance_clamp=config.distance_clamp)

    by_part: dict[bytes, list[MobilityProposal]] = defaultdict(list)
    for p in scored:
        by_part[p.mobility.part.tobytes()].append(p)

    # Pool entries keep a link to the original (pre-refinement) part so that
    # suppression and root selection cannot be gamed by a refined variant
    # that shed its own joint hardware.
    refined: list[tuple[bytes, MobilityProposal]] = []
    for key, plist in by_part.items():
        # Refine the best few distinct axes per part (near-duplicate
        # directions share one refinement slot) and always include the best
        # candidate of each motion type; everything else stays in the pool
        # unrefined.
        diag = float(np.linalg.norm(cloud.points.max(0) - cloud.points.min(0)))

        def dedup_key(p):
            axis = p.mobility.axis
            line = axis.line(cloud)
            foot = line.point - (line.point @ line.direction) * line.direction
            return (p.mobility.motion_type,
                    tuple(np.round(axis.orientation, 1)),
                    tuple(np.round(foot / (0.03 * diag)).astype(int)))

        chosen: list[MobilityProposal] = []
        seen_keys = set()
        for p in plist:
            if len(chosen) >= config.top_refine:
                break
            dedup = dedup_key(p)
            if dedup in seen_keys:
                continue
            seen_keys.add(dedup)
            chosen.append(p)
        # The best candidate of each motion type gets a slot even beyond the
        # budget: a part's true slide must not lose refinement to a pile of
        # slightly-better-looking junk rotations.
        chosen_ids = {id(p) for p in chosen}
        best_of_type: dict[MotionType, MobilityProposal] = {}
        for p in plist:
            if p.mobility.motion_type is not MotionType.ROTATION_TRANSLATION:
                best_of_type.setdefault(p.mobility.motion_type, p)
        for p in best_of_type.values():
            if id(p) not in chosen_ids:
                chosen.append(p)
                chosen_ids.add(id(p))
        refined.extend((key, p) for p in plist if id(p) not in chosen_ids)
        for p in chosen:
            if p.matching_error > config.refine_skip_error:
                refined.append((key, p))
                continue
            r = refine_mobility(cloud, p, schedule, config.refine())
            error = r.energy_after
            if r.mobility.part.size != p.mobility.part.size or \
                    not np.array_equal(r.mobility.part, p.mobility.part):
                # Score refined axes on the original cluster so a variant
                # that shed awkward contact points cannot undercut honest
                # candidates for the same part.
                error = plausibility_energy(
                    cloud, Mobility(p.mobility.part, r.mobility.motion_type,
                                    r.mobility.axis),
                    amounts, contact_band=config.contact_band,
                    distance_clamp=config.distance_clamp)
            refined.append((key, MobilityProposal(r.mobility, p.confidence,
                                                  error)))

    extraction = config.extraction()
    sized = [(key, p) for key, p in refined
             if p.mobility.part.size >= min_part]
    pool = [p for _, p in sized]

    # NMS runs over one representative per original part (its best variant),
    # with suppression geometry taken from the original cluster.
    best_by_orig: dict[bytes, MobilityProposal] = {}
    orig_indices: dict[bytes, np.ndarray] = {}
    for key, p in sized:
        if key not in best_by_orig or \
                p.matching_error < best_by_orig[key].matching_error:
            best_by_orig[key] = p
        orig_indices.setdefault(key, np.frombuffer(key, dtype=np.int64))
    nms_input = [
        MobilityProposal(Mobility(orig_indices[key], p.mobility.motion_type,
                                  p.mobility.axis), p.confidence,
                         p.matching_error)
        for key, p in best_by_orig.items()]
    kept_orig = nms_parts(nms_input, extraction)
    root_key = _root_part(cloud, kept_orig, config.contact_band)
    parts = []
    mobilities = []
    for k_orig in kept_orig:
        key = k_orig.mobility.part.tobytes()
        motions = []
        out_part = orig_indices[key]
        if key != root_key:
            selected = select_attributes(k_orig, pool, extraction)
            # Report the part as refined by the trustworthiest selected
            # attribute's variant; a variant that shed its own contacts only
            # represents its own (junk) axis, not the part.
            def pool_entry(m):
                cands = [p for p in pool if p.mobility.axis is m.axis]
                return min(cands, key=lambda p: p.matching_error) if cands else None
            if selected:
                entries = [pool_entry(m) for m in selected]
                best = min((e for e in entries if e is not None),
                           key=lambda p: p.matching_error, default=None)
                if best is not None:
                    out_part = best.mobility.part
            rebased = [Mobility(out_part, m.motion_type, m.axis)
                       for m in selected]
            # Score every selected attribute on the reported part itself;
            # pool errors can be stale (measured on another variant).
            energies = [
                plausibility_energy(cloud, m, amounts,
                                    contact_band=config.contact_band,
                                    distance_clamp=config.distance_clamp)
                for m in rebased]
            ceiling = config.attribute_energy_max
            if energies:
                ceiling = min(ceiling,
                              max(config.attribute_energy_floor,
                                  config.attribute_energy_rel * min(energies)))
            for m, energy in zip(rebased, energies):
                if energy > ceiling:
                    continue
                m = _reanchor_translation(m, cloud)
                motions.append((m.motion_type, m.axis.line(cloud)))
                mobilities.append(m)
        parts.append(AnnotatedPart(out_part, tuple(motions)))

    report = evaluate(mobilities, gt, amounts) if gt is not None else None
    return PipelineResult(tuple(parts), tuple(mobilities), report, recall,
                          time.perf_counter() - t0)
