"""Joint refinement of a mobility proposal.

Given a proposal, alternate two descent steps on the plausibility energy
until neither improves it:

* axis step: derivative-free pattern search over a displacement residual
  (shifting the axis line) and an orientation residual (tilting it), with
  step halving from coarse to fine;
* label step: every point within the contact band of the part/static
  interface flips its membership iff that strictly decreases the energy,
  sweeping in global index order once per round.

The energy never increases; the refined axis is reported together with the
total residuals applied, so the routine honors the same input/output contract
as a learned refiner (labels in, labels + two residual vectors out).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from mobkit.core import (
    Line,
    Mobility,
    MotionAxis,
    MotionType,
    PointCloud,
    bbox_diagonal,
    rotate_about_line,
    transform_points,
)
from mobkit.matching import MobilityProposal

# Minimum energy decrease for a move or toggle to count as an improvement;
# smaller differences are below the sampling-quantization noise floor.
_EPS_IMPROVE = 1e-5


@dataclass(frozen=True)
class SnapshotSchedule:
    """Motion amounts for the dynamic snapshots: translation as fractions of
    the diagonal, rotation in degrees; three strictly increasing entries."""

    translation_fractions: tuple[float, float, float] = (0.05, 0.10, 0.15)
    rotation_degrees: tuple[float, float, float] = (30.0, 60.0, 90.0)

    def __post_init__(self):
        for name in ("translation_fractions", "rotation_degrees"):
            vals = getattr(self, name)
            if len(vals) != 3 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be 3 strictly increasing values")

    def amounts(self, motion_type: MotionType, diag: float) -> list:
        if motion_type is MotionType.TRANSLATION:
            return [f * diag for f in self.translation_fractions]
        if motion_type is MotionType.ROTATION:
            return list(self.rotation_degrees)
        return [(r, f * diag) for r, f in
                zip(self.rotation_degrees, self.translation_fractions)]


@dataclass(frozen=True)
class ResidualPair:
    displacement_residual: np.ndarray
    orientation_residual: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.displacement_residual, dtype=np.float64)
        o = np.asarray(self.orientation_residual, dtype=np.float64)
        d.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "displacement_residual", d)
        object.__setattr__(self, "orientation_residual", o)

    def apply(self, axis: MotionAxis) -> MotionAxis:
        orientation = axis.orientation + self.orientation_residual
        orientation = orientation / np.linalg.norm(orientation)
        return MotionAxis(axis.anchor_index,
                          axis.displacement + self.displacement_residual,
                          orientation)


@dataclass(frozen=True)
class RefinedMobility:
    mobility: Mobility
    residuals_applied: ResidualPair
    energy_before: float
    energy_after: float


@dataclass(frozen=True)
class RefineConfig:
    max_rounds: int = 10
    displacement_step: float = 0.05       # fractions of the diagonal
    displacement_floor: float = 1e-3
    orientation_step_deg: float = 10.0
    orientation_floor_deg: float = 0.1
    contact_band: float = 0.05
    distance_clamp: float = 0.1
    no_contact_penalty: float = 1.0
    # Label toggles keep the part within these factors of its input size;
    # refinement corrects boundaries, it does not re-segment.
    min_part_factor: float = 0.7
    max_part_factor: float = 1.4
    # Motions that move the part less than this (mean displacement at the
    # full amounts, as a fraction of the diagonal) score the full penalty.
    min_motion: float = 0.03
    # Points may join the part only from within this distance (fraction of
    # the diagonal): membership can be corrected across a sampling gap but
    # not across a genuine joint clearance.
    label_add_band: float = 0.015
    # Label sweeps only run while the energy is low enough that the motion
    # could plausibly be reported; re-segmenting around a hopeless axis just
    # burns time shedding its own contacts.
    label_sweep_max: float = 0.02


class RefinementFailedError(RuntimeError):
    """Refinement hit a degenerate state; carries the last valid result."""

    def __init__(self, message: str, last_state: RefinedMobility | None = None):
        super().__init__(message)
        self.last_state = last_state


def dynamic_snapshots(cloud: PointCloud, m: Mobility,
                      schedule: SnapshotSchedule = SnapshotSchedule()):
    """Moved copies of the cloud at the schedule amounts, with per-point
    moving vectors (zero for static points)."""
    diag = bbox_diagonal(cloud)
    line = m.axis.line(cloud)
    out = []
    for amount in schedule.amounts(m.motion_type, diag):
        pts = np.array(cloud.points)
        pts[m.part] = transform_points(pts[m.part], line, m.motion_type, amount)
        vectors = pts - cloud.points
        out.append((pts, vectors))
    return out


def residual_targets(proposal_axis: MotionAxis, gt_axis: MotionAxis,
                     cloud: PointCloud) -> ResidualPair:
    """Ground-truth correction vectors for a proposed axis.

    The displacement residual moves the proposal's line onto the true line,
    measured at the proposal's anchor point; the orientation residual is the
    raw direction difference (pre-normalization convention). Applying both to
    the proposal reproduces the true line exactly.
    """
    anchor = cloud.points[proposal_axis.anchor_index]
    gt_line = gt_axis.line(cloud)
    gt_offset = gt_line.closest_point(anchor) - anchor
    return ResidualPair(gt_offset - proposal_axis.displacement,
                        gt_axis.orientation - proposal_axis.orientation)


def mon_loss(pred_labels, pred_residuals: ResidualPair, gt_labels,
             gt_residuals: ResidualPair) -> float:
    """Per-point label NLL plus squared-L2 errors of the two residuals."""
    p = np.asarray(pred_labels, dtype=np.float64)
    y = np.asarray(gt_labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError("label length mismatch")
    prob_true = np.where(y > 0.5, p, 1.0 - p)
    nll = -float(np.log(np.maximum(prob_true, 1e-12)).sum())
    dd = pred_residuals.displacement_residual - gt_residuals.displacement_residual
    do = pred_residuals.orientation_residual - gt_residuals.orientation_residual
    return nll + float(dd @ dd) + float(do @ do)


# ---------------------------------------------------------------------------
# energy workspace
# ---------------------------------------------------------------------------

class _Workspace:
    """Caches for exact energy evaluation during refinement.

    The static k-d tree is reused across axis probes; label toggles are
    evaluated exactly against the current state (adding a point to the static
    side only min-updates distances, removing one falls back to the cached
    second-nearest neighbor) and any accepted toggle rebuilds the caches.
    """

    def __init__(self, cloud: PointCloud, motion_type: MotionType,
                 schedule: SnapshotSchedule, config: RefineConfig):
        self.points = cloud.points
        self.n = len(cloud)
        self.motion_type = motion_type
        self.diag = bbox_diagonal(cloud)
        self.band = config.contact_band * self.diag
        self.clamp = config.distance_clamp * self.diag
        self.penalty = config.no_contact_penalty
        self.motion_floor = config.min_motion * self.diag
        self.add_band = config.label_add_band * self.diag
        self.amounts = schedule.amounts(motion_type, self.diag)

    def set_part(self, part: np.ndarray, line: Line):
        self.part = np.asarray(part, dtype=np.int64)
        mask = np.zeros(self.n, dtype=bool)
        mask[self.part] = True
        self.part_mask = mask
        self.static_idx = np.nonzero(~mask)[0]
        self.tree = cKDTree(self.points[self.static_idx])
        self.line = line
        self._refresh(line)

    def _moved(self, pts: np.ndarray, line: Line) -> list[np.ndarray]:
        return [transform_points(pts, line, self.motion_type, a)
                for a in self.amounts]

    def _refresh(self, line: Line):
        ppts = self.points[self.part]
        d0, i0 = self.tree.query(ppts, k=2)
        self.disp_full = None
        self.d0 = d0[:, 0]
        self.d0_idx = i0[:, 0]
        self.d0_second = d0[:, 1]
        self.moved = self._moved(ppts, line)
        self.d1 = []
        self.d1_idx = []
        self.d1_second = []
        for mp in self.moved:
            d, i = self.tree.query(mp, k=2)
            self.d1.append(d[:, 0])
            self.d1_idx.append(i[:, 0])
            self.d1_second.append(d[:, 1])
        self.contact = self.d0 <= self.band
        self.disp_full = np.linalg.norm(self.moved[-1] - ppts, axis=1)
        self.centroid = ppts.mean(axis=0)

    def energy(self) -> float:
        if float(self.disp_full.mean()) < self.motion_floor:
            return self.penalty
        if not self.contact.any():
            return self.penalty
        total = 0.0
        d0c = self.d0[self.contact]
        for d1 in self.d1:
            total += float(np.minimum(np.abs(d1[self.contact] - d0c),
                                      self.clamp).sum())
        return total / (len(self.amounts) * int(self.contact.sum()) * self.diag)

    def energy_with_line(self, line: Line) -> float:
        """Energy of the current part under a different axis line."""
        return self.energy_with_lines([line])[0]

    def _motion_floor_ok(self, line: Line) -> bool:
        """True when the motion moves the part enough. Uses a cheap lower
        bound first (mean distance-to-axis is at least the centroid's
        distance, by convexity) and only transforms the part when close."""
        if self.motion_type is MotionType.TRANSLATION:
            return True
        theta = math.radians(self.amounts[-1][0]
                             if self.motion_type is MotionType.ROTATION_TRANSLATION
                             else self.amounts[-1])
        chord = 2.0 * math.sin(min(abs(theta), math.pi) / 2.0)
        rel = self.centroid - line.point
        centroid_dist = np.linalg.norm(rel - (rel @ line.direction) * line.direction)
        if chord * centroid_dist >= self.motion_floor:
            return True
        ppts = self.points[self.part]
        full = transform_points(ppts, line, self.motion_type, self.amounts[-1])
        return float(np.linalg.norm(full - ppts, axis=1).mean()) >= self.motion_floor

    def energy_with_lines(self, lines, subsample: int = 1) -> np.ndarray:
        """Energies of the current part under several axis lines (batched).

        ``subsample`` > 1 evaluates every n-th contact point: used only to
        rank probe moves cheaply, never as an accepted energy.
        """
        if not self.contact.any():
            return np.full(len(lines), self.penalty)
        cpts = self.points[self.part[self.contact]][::subsample]
        d0c = self.d0[self.contact][::subsample]
        moved = np.concatenate([
            transform_points(cpts, line, self.motion_type, a)
            for line in lines for a in self.amounts])
        d1, _ = self.tree.query(moved, k=1)
        d1 = d1.reshape(len(lines), len(self.amounts), -1)
        per = np.minimum(np.abs(d1 - d0c[None, None, :]), self.clamp)
        out = per.sum(axis=(1, 2)) / (len(self.amounts) * cpts.shape[0] * self.diag)
        for li, line in enumerate(lines):
            if not self._motion_floor_ok(line):
                out[li] = self.penalty
        return out

    # -- exact toggle evaluation -------------------------------------------

    def _energy_from(self, d0, d1_list, extra_d0=None, extra_d1=None) -> float:
        contact = d0 <= self.band
        parts = [np.minimum(np.abs(d1[contact] - d0[contact]), self.clamp)
                 for d1 in d1_list]
        count = int(contact.sum())
        total = sum(float(p.sum()) for p in parts)
        if extra_d0 is not None and extra_d0 <= self.band:
            count += 1
            total += sum(min(abs(e1 - extra_d0), self.clamp) for e1 in extra_d1)
        if count == 0:
            return self.penalty
        return total / (len(self.amounts) * count * self.diag)

    def removal_energy(self, pos: int) -> float:
        """Energy if part point at part-array position ``pos`` turns static."""
        if self.part.size <= 1:
            return math.inf
        keep = np.ones(self.part.size, dtype=bool)
        keep[pos] = False
        if float(self.disp_full[keep].mean()) < self.motion_floor:
            return self.penalty
        p_static = self.points[self.part[pos]]
        d0 = np.minimum(self.d0[keep],
                        np.linalg.norm(self.points[self.part[keep]] - p_static,
                                       axis=1))
        d1 = [np.minimum(self.d1[s][keep],
                         np.linalg.norm(self.moved[s][keep] - p_static, axis=1))
              for s in range(len(self.amounts))]
        return self._energy_from(d0, d1)

    def addition_energy(self, j: int) -> float:
        """Energy if static point ``j`` (global index) joins the part."""
        if self.static_idx.size < 2:
            return math.inf
        pj_full = transform_points(self.points[j], self.line, self.motion_type,
                                   self.amounts[-1])[0]
        dj = float(np.linalg.norm(pj_full - self.points[j]))
        mean_disp = (float(self.disp_full.sum()) + dj) / (self.part.size + 1)
        if mean_disp < self.motion_floor:
            return self.penalty
        sj = int(np.searchsorted(self.static_idx, j))
        d0 = np.where(self.d0_idx == sj, self.d0_second, self.d0)
        d1 = [np.where(self.d1_idx[s] == sj, self.d1_second[s], self.d1[s])
              for s in range(len(self.amounts))]
        pj = self.points[j]
        dq, iq = self.tree.query(pj, k=2)
        extra_d0 = float(dq[1] if iq[0] == sj else dq[0])
        extra_d1 = []
        moved_j = [transform_points(pj, self.line, self.motion_type, a)[0]
                   for a in self.amounts]
        for mj in moved_j:
            dq, iq = self.tree.query(mj, k=2)
            extra_d1.append(float(dq[1] if iq[0] == sj else dq[0]))
        return self._energy_from(d0, d1, extra_d0, extra_d1)


# ---------------------------------------------------------------------------
# refinement driver
# ---------------------------------------------------------------------------

def _steps(start: float, floor: float) -> list[float]:
    out = []
    step = start
    while step >= floor * (1 - 1e-12):
        out.append(step)
        step /= 2.0
    return out


_PROBE_DIRECTIONS = np.array([
    [1, 0, 0], [0, 1, 0], [0, 0, 1],
    [1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1], [0, 1, 1], [0, 1, -1],
], dtype=np.float64)
_PROBE_DIRECTIONS /= np.linalg.norm(_PROBE_DIRECTIONS, axis=1, keepdims=True)


def _axis_search(ws: _Workspace, anchor: np.ndarray, axis: MotionAxis,
                 energy: float, config: RefineConfig, start_level: int = 0):
    """Pattern search over displacement/orientation residuals; greedy per
    step level, halving coarse to fine. Coarse levels probe the coordinate
    axes plus the in-plane diagonals (diagonal valleys stall otherwise);
    fine levels polish along the coordinate axes only."""
    displacement = np.array(axis.displacement)
    orientation = np.array(axis.orientation)
    moved_any = False
    d_steps = _steps(config.displacement_step * ws.diag,
                     config.displacement_floor * ws.diag)
    o_steps = _steps(config.orientation_step_deg, config.orientation_floor_deg)
    levels = max(len(d_steps), len(o_steps))
    # Displacement moves cannot change a pure translation field: skip them.
    search_displacement = ws.motion_type is not MotionType.TRANSLATION
    n_contacts = int(ws.contact.sum())
    subsample = max(1, n_contacts // 250)
    scale_hint = 1.05 if subsample > 1 else 1.0
    for li in range(start_level, levels):
        basis = _PROBE_DIRECTIONS
        while True:
            best = energy
            best_update = None
            probes = []
            if li < len(d_steps) and search_displacement:
                for k in range(len(basis)):
                    for sgn in (1.0, -1.0):
                        probes.append(("d", sgn * d_steps[li] * basis[k]))
            if li < len(o_steps):
                for k in range(len(basis)):
                    for sgn in (1.0, -1.0):
                        probes.append(("o", sgn * o_steps[li], basis[k]))
            updates = []
            lines = []
            for probe in probes:
                if probe[0] == "d":
                    disp = displacement + probe[1]
                    orient = orientation
                else:
                    pivot = Line(np.zeros(3), probe[2])
                    orient = rotate_about_line(orientation, pivot, probe[1])[0]
                    norm = np.linalg.norm(orient)
                    if norm < 1e-9:
                        continue
                    orient = orient / norm
                    disp = displacement
                updates.append((disp, orient))
                lines.append(Line(anchor + disp, orient))
            if not lines:
                break
            energies = ws.energy_with_lines(lines, subsample=subsample)
            k_best = int(np.argmin(energies))
            candidate = None
            if energies[k_best] < best * scale_hint - _EPS_IMPROVE:
                candidate = updates[k_best]
            if candidate is not None:
                if subsample > 1:
                    # rank on the subsample, accept on the full energy
                    e_full = ws.energy_with_line(
                        Line(anchor + candidate[0], candidate[1]))
                    if e_full < best - _EPS_IMPROVE:
                        best = float(e_full)
                        best_update = candidate
                else:
                    best = float(energies[k_best])
                    best_update = candidate
            if best_update is None:
                break
            prev_d, prev_o = displacement, orientation
            displacement, orientation = best_update
            energy = best
            moved_any = True
            # Pattern move: extrapolate the accepted step while it keeps
            # helping, so coupled shift-and-tilt valleys descend directly.
            while True:
                pat_d = displacement + (displacement - prev_d)
                pat_o = orientation + (orientation - prev_o)
                norm = np.linalg.norm(pat_o)
                if norm < 1e-9:
                    break
                pat_o = pat_o / norm
                e = ws.energy_with_line(Line(anchor + pat_d, pat_o))
                if e < energy - _EPS_IMPROVE:
                    prev_d, prev_o = displacement, orientation
                    displacement, orientation = pat_d, pat_o
                    energy = float(e)
                else:
                    break
    new_axis = MotionAxis(axis.anchor_index, displacement, orientation)
    return new_axis, energy, moved_any


def _screen_removals(ws: _Workspace, positions: np.ndarray) -> np.ndarray:
    """Removal energies for many candidates at once, against the current
    state (exact until the first accepted toggle; acceptance re-checks)."""
    ppts = ws.points[ws.part]
    cand_pts = ppts[positions]
    n_c = positions.size
    n_p = ws.part.size
    rows = np.arange(n_c)

    def dists(points):
        diff = points[None, :, :] - cand_pts[:, None, :]
        return np.sqrt(np.einsum("cpk,cpk->cp", diff, diff))

    d0 = np.minimum(ws.d0[None, :], dists(ppts))
    d0[rows, positions] = np.inf  # candidate leaves the part
    contact = d0 <= ws.band
    count = contact.sum(axis=1)
    total = np.zeros(n_c)
    for s in range(len(ws.amounts)):
        d1 = np.minimum(ws.d1[s][None, :], dists(ws.moved[s]))
        per = np.minimum(np.abs(d1 - d0), ws.clamp)
        total += np.where(contact, per, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = total / (len(ws.amounts) * count * ws.diag)
    out[count == 0] = ws.penalty
    mean_disp = (ws.disp_full.sum() - ws.disp_full[positions]) / max(1, n_p - 1)
    out[mean_disp < ws.motion_floor] = ws.penalty
    return out


def _screen_additions(ws: _Workspace, candidates: np.ndarray) -> np.ndarray:
    """Addition energies for many static points at once, mirroring
    `addition_energy` with batched tree queries."""
    n_c = candidates.size
    sj = np.searchsorted(ws.static_idx, candidates)
    # distances of existing part points to the static set without candidate c
    d0 = np.where(ws.d0_idx[None, :] == sj[:, None],
                  ws.d0_second[None, :], ws.d0[None, :])
    cand_pts = ws.points[candidates]
    dq, iq = ws.tree.query(cand_pts, k=2)
    own_d0 = np.where(iq[:, 0] == sj, dq[:, 1], dq[:, 0])
    own_d1 = np.empty((len(ws.amounts), n_c))
    moved_c = []
    for s, amount in enumerate(ws.amounts):
        mc = transform_points(cand_pts, ws.line, ws.motion_type, amount)
        moved_c.append(mc)
        dq, iq = ws.tree.query(mc, k=2)
        own_d1[s] = np.where(iq[:, 0] == sj, dq[:, 1], dq[:, 0])

    contact = d0 <= ws.band
    count = contact.sum(axis=1)
    total = np.zeros(n_c)
    for s in range(len(ws.amounts)):
        d1 = np.where(ws.d1_idx[s][None, :] == sj[:, None],
                      ws.d1_second[s][None, :], ws.d1[s][None, :])
        per = np.minimum(np.abs(d1 - d0), ws.clamp)
        total += np.where(contact, per, 0.0).sum(axis=1)
    own_contact = own_d0 <= ws.band
    own_terms = np.minimum(np.abs(own_d1 - own_d0[None, :]), ws.clamp).sum(axis=0)
    total += np.where(own_contact, own_terms, 0.0)
    count += own_contact.astype(int)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = total / (len(ws.amounts) * count * ws.diag)
    out[count == 0] = ws.penalty
    own_disp = np.linalg.norm(moved_c[-1] - cand_pts, axis=1)
    mean_disp = (ws.disp_full.sum() + own_disp) / (ws.part.size + 1)
    out[mean_disp < ws.motion_floor] = ws.penalty
    return out


def _toggle_eps(ws: _Workspace) -> float:
    # A membership flip should change at least one contact's distances
    # meaningfully; gains below this are quantization noise spread over the
    # contact count.
    count = max(1, int(ws.contact.sum()))
    return max(_EPS_IMPROVE, 0.03 / count)


def _label_sweep(ws: _Workspace, part: np.ndarray, energy: float,
                 size_bounds: tuple[int, int]):
    """One index-ordered pass of membership toggles.

    Candidates are first screened against the sweep-start state; only the
    screened improvers are evaluated exactly against the live state (the two
    agree until the first accepted toggle, and accepted toggles are rare).
    """
    static_mask = ~ws.part_mask
    static_pts = np.nonzero(static_mask)[0]
    if static_pts.size:
        part_tree = cKDTree(ws.points[part])
        d_static, _ = part_tree.query(ws.points[static_pts], k=1)
        add_candidates = static_pts[d_static <= ws.add_band]
    else:
        add_candidates = np.array([], dtype=np.int64)
    remove_candidates = part[ws.contact]

    screened: dict[int, float] = {}
    if remove_candidates.size:
        positions = np.searchsorted(ws.part, remove_candidates)
        energies = _screen_removals(ws, positions)
        screened.update(zip(remove_candidates.tolist(), energies.tolist()))
    if add_candidates.size and ws.static_idx.size > 1:
        energies = _screen_additions(ws, add_candidates)
        screened.update(zip(add_candidates.tolist(), energies.tolist()))

    eps = _toggle_eps(ws)
    promising = np.sort(np.array(
        [gi for gi, e in screened.items() if e < energy - eps],
        dtype=np.int64))

    min_size, max_size = size_bounds
    current = set(int(i) for i in part)
    toggled = False
    for gi in promising.tolist():
        gi = int(gi)
        if gi in current:
            if len(current) <= min_size:
                continue
            pos = int(np.searchsorted(ws.part, gi))
            if ws.part[pos] != gi:
                continue
            e_new = ws.removal_energy(pos) if toggled else screened[gi]
            if e_new < energy - eps:
                current.discard(gi)
                toggled = True
                ws.set_part(np.array(sorted(current), dtype=np.int64), ws.line)
                energy = ws.energy()
        else:
            if len(current) >= max_size:
                continue
            si = int(np.searchsorted(ws.static_idx, gi))
            if si >= ws.static_idx.size or ws.static_idx[si] != gi:
                continue
            if ws.static_idx.size <= 1:
                continue
            e_new = ws.addition_energy(gi) if toggled else screened[gi]
            if e_new < energy - eps:
                current.add(gi)
                toggled = True
                ws.set_part(np.array(sorted(current), dtype=np.int64), ws.line)
                energy = ws.energy()
    return np.array(sorted(current), dtype=np.int64), energy, toggled


def refine_mobility(cloud: PointCloud, proposal: MobilityProposal,
                    schedule: SnapshotSchedule = SnapshotSchedule(),
                    config: RefineConfig = RefineConfig()) -> RefinedMobility:
    """Alternate axis and label descent until a fixed point (or round cap)."""
    m = proposal.mobility
    part = np.array(m.part)
    if part.size >= len(cloud):
        raise RefinementFailedError("part must be a strict subset of the cloud")
    ws = _Workspace(cloud, m.motion_type, schedule, config)
    axis = m.axis
    anchor = cloud.points[axis.anchor_index]
    ws.set_part(part, axis.line(cloud))
    energy_before = ws.energy()
    energy = energy_before
    size_bounds = (max(1, int(config.min_part_factor * part.size)),
                   min(len(cloud) - 1, int(config.max_part_factor * part.size)))

    for round_index in range(config.max_rounds):
        axis, energy, axis_moved = _axis_search(
            ws, anchor, axis, energy, config,
            start_level=0 if round_index == 0 else 2)
        if axis_moved:
            ws.set_part(part, axis.line(cloud))
            energy = ws.energy()
        toggled = False
        if energy <= config.label_sweep_max:
            part, energy, toggled = _label_sweep(ws, part, energy, size_bounds)
        if part.size == 0:
            raise RefinementFailedError(
                "label step emptied the part",
                RefinedMobility(m, ResidualPair(np.zeros(3), np.zeros(3)),
                                energy_before, energy_before))
        if not axis_moved and not toggled:
            break

    residuals = ResidualPair(axis.displacement - m.axis.displacement,
                             axis.orientation - m.axis.orientation)
    refined = Mobility(part, m.motion_type, axis)
    energy = min(energy, energy_before)
    return RefinedMobility(refined, residuals, energy_before, energy)
