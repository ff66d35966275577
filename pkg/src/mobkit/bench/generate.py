"""Synthetic articulated shapes with analytic ground-truth mobilities.

Each archetype is a small scene built from sampled surfaces. Moving parts are
separated from the static remainder by a clearance gap of ~2% of the
bounding-box diagonal, and every joint carries "hardware" (hinge barrels,
rails, pins, a ring track) whose local symmetry makes the annotated motion
structure-preserving: points near the joint keep their distance to the static
side under the true motion and tear away under any other.

Hardware surfaces are sampled densely along the direction a contact point
slides during the true motion, so the nearest-sample distance stays nearly
constant along the whole travel; coarse sampling in the orthogonal direction
is harmless because a constant offset cancels out of distance differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from mobkit.core import Line, Mobility, MotionType, PointCloud

ARCHETYPES = (
    "laptop",
    "door",
    "drawer",
    "swivel_chair",
    "wheel",
    "scissors",
    "car",
)

# Clearance between a moving part and the static remainder, as a fraction of
# the (estimated) bounding-box diagonal. Must sit between the sampling
# spacing and the contact band used by the matcher; a small safety factor
# keeps the realized gap at or above 2% of the actual diagonal.
GAP_FRACTION = 0.02
_GAP_SAFETY = 1.05


def _gap_for(diag_estimate: float) -> float:
    return GAP_FRACTION * _GAP_SAFETY * diag_estimate

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class AnnotatedPart:
    """One annotated part: point indices plus zero or more motions."""

    indices: np.ndarray
    motions: tuple[tuple[MotionType, Line], ...] = ()

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx = np.unique(idx)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "motions", tuple(self.motions))


@dataclass(frozen=True)
class Annotation:
    """Ground truth for one shape: a cloud and its annotated parts."""

    shape_id: str
    cloud: PointCloud
    parts: tuple[AnnotatedPart, ...]

    def __post_init__(self):
        n = len(self.cloud)
        for k, part in enumerate(self.parts):
            if part.indices.size and part.indices[-1] >= n:
                raise ValueError(f"part {k} has an index out of range")
        object.__setattr__(self, "parts", tuple(self.parts))

    def mobilities(self) -> list[Mobility]:
        """All annotated motions as Mobility values (axes anchor-encoded)."""
        from mobkit.attrprop import encode_axis

        out = []
        for part in self.parts:
            for motion_type, line in part.motions:
                out.append(Mobility(part.indices, motion_type,
                                    encode_axis(line, self.cloud)))
        return out


# ---------------------------------------------------------------------------
# surface samplers
# ---------------------------------------------------------------------------

def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _rect(origin, u, v, spacing, rng, jitter=0.08):
    """Jittered grid on the parallelogram origin + a*u + b*v, a,b in [0,1]."""
    origin = np.asarray(origin, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    lu, lv = np.linalg.norm(u), np.linalg.norm(v)
    nu = max(1, int(round(lu / spacing)))
    nv = max(1, int(round(lv / spacing)))
    ia = (np.arange(nu) + 0.5) / nu
    ib = (np.arange(nv) + 0.5) / nv
    aa, bb = np.meshgrid(ia, ib, indexing="ij")
    aa = aa + rng.uniform(-jitter, jitter, aa.shape) / nu
    bb = bb + rng.uniform(-jitter, jitter, bb.shape) / nv
    pts = origin + aa.reshape(-1, 1) * u + bb.reshape(-1, 1) * v
    normal = _unit(np.cross(u, v))
    normals = np.tile(normal, (pts.shape[0], 1))
    return pts, normals


def _annulus(center, udir, vdir, inner, outer, spacing, rng, jitter=0.08):
    """Planar annulus sampled as concentric rings.

    ``inner``/``outer`` are (semi_u, semi_v) pairs; circular when equal.
    """
    center = np.asarray(center, dtype=np.float64)
    udir = _unit(udir)
    vdir = _unit(vdir)
    ain, bin_ = inner
    aout, bout = outer
    depth = max(aout - ain, bout - bin_)
    n_rings = max(1, int(round(depth / spacing)))
    pts = []
    for k in range(n_rings):
        t = (k + 0.5) / n_rings
        sa = ain + t * (aout - ain)
        sb = bin_ + t * (bout - bin_)
        perimeter = math.pi * (3 * (sa + sb) -
                               math.sqrt((3 * sa + sb) * (sa + 3 * sb)))
        n = max(6, int(round(perimeter / spacing)))
        theta = (np.arange(n) + 0.5) / n * 2 * math.pi
        theta = theta + rng.uniform(-jitter, jitter, n) * (2 * math.pi / n)
        ring = center + np.outer(sa * np.cos(theta), udir) + \
            np.outer(sb * np.sin(theta), vdir)
        pts.append(ring)
    pts = np.concatenate(pts, axis=0)
    normal = _unit(np.cross(udir, vdir))
    return pts, np.tile(normal, (pts.shape[0], 1))


def _cylinder(base, axis, radius, length, axial_spacing, arc_spacing):
    """Cylinder side surface as aligned rings; no jitter (joint hardware)."""
    base = np.asarray(base, dtype=np.float64)
    axis = _unit(axis)
    ref = _X if abs(axis @ _X) < 0.9 else _Y
    u = _unit(np.cross(axis, ref))
    v = np.cross(axis, u)
    n_stations = max(2, int(round(length / axial_spacing)) + 1)
    n_arc = max(6, int(round(2 * math.pi * radius / arc_spacing)))
    theta = (np.arange(n_arc) + 0.5) / n_arc * 2 * math.pi
    circle = np.outer(radius * np.cos(theta), u) + np.outer(radius * np.sin(theta), v)
    pts = []
    normals = []
    for k in range(n_stations):
        z = length * k / (n_stations - 1)
        pts.append(base + z * axis + circle)
        normals.append(circle / radius)
    return np.concatenate(pts), np.concatenate(normals)


def _ring(center, udir, vdir, radius, arc_spacing, start_deg=0.0, span_deg=360.0):
    """A dense 1D circle (or arc) of points (track hardware)."""
    center = np.asarray(center, dtype=np.float64)
    udir = _unit(udir)
    vdir = _unit(vdir)
    arc_len = math.radians(span_deg) * radius
    n = max(8, int(round(arc_len / arc_spacing)))
    theta = math.radians(start_deg) + \
        (np.arange(n) + 0.5) / n * math.radians(span_deg)
    pts = center + np.outer(radius * np.cos(theta), udir) + \
        np.outer(radius * np.sin(theta), vdir)
    radial = (pts - center) / radius
    return pts, radial


def _chain(p0, p1, spacing):
    """A 1D run of points from p0 to p1 inclusive."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    length = float(np.linalg.norm(p1 - p0))
    n = max(2, int(round(length / spacing)) + 1)
    t = np.linspace(0.0, 1.0, n)
    pts = p0 + np.outer(t, p1 - p0)
    d = _unit(p1 - p0)
    ref = _X if abs(d @ _X) < 0.9 else _Z
    normal = _unit(np.cross(d, ref))
    return pts, np.tile(normal, (pts.shape[0], 1))


# ---------------------------------------------------------------------------
# scene assembly
# ---------------------------------------------------------------------------

class _Builder:
    """Accumulates per-part surfaces; soft surfaces share one global density."""

    def __init__(self, rng):
        self.rng = rng
        self.parts: list[dict] = []

    def part(self, name, motions=()):
        entry = {"name": name, "soft": [], "hard": [], "motions": tuple(motions)}
        self.parts.append(entry)
        return entry

    def soft(self, entry, area, fn: Callable[[float], tuple]):
        entry["soft"].append((area, fn))

    def hard(self, entry, fn: Callable[[], tuple]):
        entry["hard"].append(fn)

    def build(self, shape_id, n_points) -> Annotation:
        hard_chunks = [[fn() for fn in e["hard"]] for e in self.parts]
        n_hard = sum(c[0].shape[0] for chunks in hard_chunks for c in chunks)
        soft_area = sum(a for e in self.parts for a, _ in e["soft"])
        n_soft = max(1, n_points - n_hard)
        spacing = math.sqrt(soft_area / n_soft) if soft_area > 0 else 1.0

        pts_all, nrm_all, parts = [], [], []
        cursor = 0
        for entry, hchunks in zip(self.parts, hard_chunks):
            chunk_list = [fn(spacing) for _, fn in entry["soft"]] + hchunks
            pts = np.concatenate([c[0] for c in chunk_list])
            nrm = np.concatenate([c[1] for c in chunk_list])
            idx = np.arange(cursor, cursor + pts.shape[0], dtype=np.int64)
            cursor += pts.shape[0]
            pts_all.append(pts)
            nrm_all.append(nrm)
            parts.append(AnnotatedPart(idx, entry["motions"]))
        cloud = PointCloud(np.concatenate(pts_all), np.concatenate(nrm_all))
        return Annotation(shape_id, cloud, tuple(parts))


def _hw_spacing(gap):
    # Dense along expected contact orbits: keeps the nearest-sample distance
    # variation well under the gap (error ~ s^2 / 8h).
    return 0.6 * gap


# ---------------------------------------------------------------------------
# archetypes
# ---------------------------------------------------------------------------

def _build_laptop(rng, n_points):
    w = 1.2 * rng.uniform(0.96, 1.04)
    d = 0.37 * rng.uniform(0.96, 1.04)
    theta = math.radians(rng.uniform(62.0, 98.0))
    # bbox: x=w, y=d (+ lean-back), z ~ d sin(theta)
    y_extent = d * (1.0 + max(0.0, -math.cos(theta)))
    diag = math.sqrt(w**2 + y_extent**2 + (d * math.sin(theta)) ** 2)
    gap = _gap_for(diag)
    hs = _hw_spacing(gap)
    r_b = 1.2 * gap
    hinge = Line(np.array([0.0, 0.0, r_b]), _X)

    b = _Builder(rng)
    base = b.part("base")
    b.soft(base, w * d, lambda s, w=w, d=d: _rect([0, 0, 0], [w, 0, 0], [0, d, 0], s, rng))
    seg_len = 0.18 * w
    for x0 in (0.12 * w, 0.88 * w - seg_len):
        b.hard(base, lambda x0=x0: _cylinder([x0, 0.0, r_b], _X, r_b, seg_len,
                                             0.9 * gap, 0.42 * gap))

    lid_dir = np.array([0.0, math.cos(theta), math.sin(theta)])
    lid_origin = hinge.point + (r_b + gap) * lid_dir
    lid_u = np.array([w, 0.0, 0.0])
    lid_v = (d - r_b - gap) * lid_dir
    lid = b.part("lid", [(MotionType.ROTATION, hinge)])
    b.soft(lid, w * (d - r_b - gap),
           lambda s: _rect(lid_origin, lid_u, lid_v, s, rng))
    return b.build("laptop", n_points)


def _build_door(rng, n_points):
    w = 0.5 * rng.uniform(0.96, 1.04)
    h = 1.2 * rng.uniform(0.96, 1.04)
    theta = math.radians(rng.uniform(28.0, 82.0))
    # Door spans [0.1H, 0.1H + h]; the lintel at H clears the door top by
    # 0.9H - h, kept wider than the contact band.
    H = (h + 0.11) / 0.9
    pw = 0.13
    diag = math.sqrt((2 * pw + w + 0.3) ** 2 + (w * math.sin(theta)) ** 2
                     + (H + 0.13) ** 2)
    gap = _gap_for(diag)
    band = 0.05 * diag
    r_bead = 0.6 * gap
    # Standoff hinge: the post's free edge stays outside the contact band of
    # every door point near the hinge, so the only static surface a near-
    # hinge point sees is the (rotationally symmetric) hinge hardware.
    x_h = pw + r_bead + 2.2 * band
    hinge = Line(np.array([x_h, 0.0, 0.0]), _Z)

    b = _Builder(rng)
    frame = b.part("frame")
    b.soft(frame, pw * H, lambda s: _rect([0, 0, 0], [pw, 0, 0], [0, 0, H], s, rng))
    x_rp = x_h + w + 2.5 * gap
    b.soft(frame, pw * H, lambda s: _rect([x_rp, 0, 0], [pw, 0, 0], [0, 0, H], s, rng))
    # Lintel and floor sill tie the posts together and anchor the hinge.
    lintel_w = x_rp + pw
    b.soft(frame, lintel_w * 0.13,
           lambda s: _rect([0, 0, H], [lintel_w, 0, 0], [0, 0, 0.13], s, rng))
    b.soft(frame, lintel_w * 0.12,
           lambda s: _rect([0, 0, -0.12], [lintel_w, 0, 0], [0, 0, 0.12], s, rng))
    # Hinge pillar: one dense rod along the axis (rotation-invariant
    # reference from sill to lintel) dressed with bead rings that break the
    # slide-along-the-hinge freedom.
    b.hard(frame, lambda: _chain([x_h, 0.0, 0.0], [x_h, 0.0, H], 0.5 * gap))
    for k in range(5):
        zb = (0.14 + 0.18 * k) * H
        b.hard(frame, lambda zb=zb: _ring([x_h, 0.0, zb], _X, _Y, r_bead,
                                          0.5 * gap))

    swing = np.array([math.cos(theta), math.sin(theta), 0.0])
    r_door = r_bead + gap
    door_origin = hinge.point + r_door * swing + np.array([0.0, 0.0, 0.1 * H])
    door = b.part("door", [(MotionType.ROTATION, hinge)])
    b.soft(door, (w - r_door) * h,
           lambda s: _rect(door_origin, (w - r_door) * swing, [0, 0, h], s, rng))
    return b.build("door", n_points)


def _build_drawer(rng, n_points):
    tray_d = 0.44 * rng.uniform(0.96, 1.04)
    half_w = 0.23 * rng.uniform(0.96, 1.04)
    pull = rng.uniform(0.12, 0.2)
    z_r = 0.18
    diag_est = 1.25
    gap = _gap_for(diag_est)
    hs = _hw_spacing(gap)
    rail_len = tray_d + pull + 0.16 * diag_est + 2 * gap
    z_t = z_r + 2.0 * gap

    b = _Builder(rng)
    cab = b.part("cabinet")
    bw, bz0, bz1 = half_w + 0.08, z_r - 0.12, z_t + 0.34
    b.soft(cab, 2 * bw * (bz1 - bz0),
           lambda s: _rect([-bw, 0, bz0], [2 * bw, 0, 0], [0, 0, bz1 - bz0], s, rng))
    # Angle-profile rails: two dense point rows per side, both parallel to
    # the slide, one at the crest and one on the inner face.
    for xr in (-half_w, half_w):
        b.hard(cab, lambda xr=xr: _chain([xr, 0.0, z_r], [xr, rail_len, z_r],
                                         0.5 * gap))
        xs = xr - np.sign(xr) * 0.7 * gap
        b.hard(cab, lambda xs=xs: _chain([xs, 0.0, z_r - 0.7 * gap],
                                         [xs, rail_len, z_r - 0.7 * gap],
                                         0.5 * gap))

    drawer = b.part("drawer", [(MotionType.TRANSLATION, Line(np.zeros(3), _Y))])
    overhang = 0.0
    b.soft(drawer, (2 * half_w + 2 * overhang) * tray_d,
           lambda s: _rect([-half_w - overhang, pull, z_t],
                           [2 * (half_w + overhang), 0, 0], [0, tray_d, 0], s, rng))
    fw, fh = half_w + 0.06, 0.3
    b.soft(drawer, 2 * fw * fh,
           lambda s: _rect([-fw, pull + tray_d, z_t], [2 * fw, 0, 0],
                           [0, 0, fh], s, rng))
    ann = b.build("drawer", n_points)
    # Pin the slide line at the drawer centroid so the line position (which is
    # arbitrary for a pure translation) is well-defined for evaluation.
    centroid = ann.cloud.points[ann.parts[1].indices].mean(axis=0)
    parts = (ann.parts[0],
             AnnotatedPart(ann.parts[1].indices,
                           ((MotionType.TRANSLATION, Line(centroid, _Y)),)))
    return Annotation(ann.shape_id, ann.cloud, parts)


def _build_swivel_chair(rng, n_points):
    r_col = 0.024
    leg_len = 0.36 * rng.uniform(0.96, 1.04)
    seat_r = 0.29 * rng.uniform(0.96, 1.04)
    z_seat = 0.62
    span = max(2 * seat_r, 2 * (leg_len + 0.01) * math.cos(math.pi / 4))
    diag = math.sqrt(2 * span**2 + 0.88**2)
    gap = _gap_for(diag)
    hs = _hw_spacing(gap)
    r_sleeve = r_col + gap
    col_top = 0.88
    axis = Line(np.array([0.0, 0.0, 0.3]), _Z)

    b = _Builder(rng)
    base = b.part("base")
    for k in range(4):
        ang = math.pi / 2 * k + math.pi / 4
        u = np.array([math.cos(ang), math.sin(ang), 0.0])
        side = np.array([-u[1], u[0], 0.0])
        b.soft(base, leg_len * 0.07,
               lambda s, u=u, side=side: _rect(0.01 * u - 0.035 * side + [0, 0, 0.02],
                                               leg_len * u, 0.07 * side, s, rng))
    # Column: dense grid where the collar and seat hub travel, coarser but
    # still self-connected below.
    dense_z0 = 0.49
    b.hard(base, lambda: _cylinder([0.0, 0.0, dense_z0], _Z, r_col,
                                   col_top - dense_z0, 0.5 * gap, 0.5 * gap))
    b.hard(base, lambda: _cylinder([0.0, 0.0, 0.02], _Z, r_col,
                                   dense_z0 - 0.02, 0.85 * gap, hs))

    seat = b.part("seat", [
        (MotionType.ROTATION, axis),
        (MotionType.TRANSLATION, axis),
    ])
    b.soft(seat, math.pi * (seat_r**2 - r_sleeve**2),
           lambda s: _annulus([0, 0, z_seat], _X, _Y, (r_sleeve, r_sleeve),
                              (seat_r, seat_r), s, rng))
    # Hub collar, short and sampled coarser than the column grid so the
    # root footprint stays on the base side.
    b.hard(seat, lambda: _cylinder([0.0, 0.0, z_seat - 0.06], _Z, r_sleeve,
                                   0.06, 0.85 * gap, 0.85 * gap))
    return b.build("swivel_chair", n_points)


def _build_wheel(rng, n_points):
    r_out = 0.29 * rng.uniform(0.96, 1.04)
    z_hub = 0.38
    diag_est = math.sqrt(0.62**2 + 0.2**2 + (z_hub + r_out) ** 2)
    gap = _gap_for(diag_est)
    hs = _hw_spacing(gap)
    r_axle = 0.024
    r_sleeve = r_axle + gap
    hub = np.array([0.0, 0.0, z_hub])
    axis = Line(hub, _Y)

    b = _Builder(rng)
    stand = b.part("stand")
    b.soft(stand, 0.6 * 0.16,
           lambda s: _rect([-0.3, -0.03, 0.0], [0.6, 0, 0], [0, 0.16, 0], s, rng))
    b.soft(stand, 0.07 * z_hub,
           lambda s: _rect([-0.035, 0.1, 0.0], [0.07, 0, 0], [0, 0, z_hub], s, rng))
    # Axle: dense where the sleeve rides, anchored into the arm.
    b.hard(stand, lambda: _cylinder(hub + np.array([0.0, -0.055, 0.0]), _Y,
                                    r_axle, 0.16, 0.55 * gap, 0.55 * gap))

    wheel = b.part("wheel", [(MotionType.ROTATION, axis)])
    b.soft(wheel, math.pi * (r_out**2 - r_sleeve**2),
           lambda s: _annulus(hub, _X, _Z, (r_sleeve, r_sleeve),
                              (r_out, r_out), s, rng))
    b.hard(wheel, lambda: _cylinder(hub + np.array([0.0, -0.03, 0.0]), _Y,
                                    r_sleeve, 0.08, 0.85 * gap, 0.85 * gap))
    return b.build("wheel", n_points)


def _build_scissors(rng, n_points):
    # Opening wide enough that the blade strips only cross within the pivot
    # discs: beyond disc_r the moving blade sees no static surface below it.
    half_angle = math.radians(rng.uniform(27.0, 35.0))
    blade_len = 0.85 * rng.uniform(0.96, 1.04)
    tail_len = 0.35
    width = 0.08
    disc_r = 0.105
    r_tip = 0.92 * disc_r + blade_len
    r_tail = 0.92 * disc_r + tail_len
    x_span = (r_tip + r_tail) * math.cos(half_angle) + width
    y_span = 2 * r_tip * math.sin(half_angle) + width
    diag_est = math.hypot(x_span, y_span)
    gap = _gap_for(diag_est)
    hs = _hw_spacing(gap)
    r_pin = 1.2 * gap
    z_b = gap
    pivot_axis = Line(np.zeros(3), _Z)

    b = _Builder(rng)

    def blade(entry, ang, z):
        u = np.array([math.cos(ang), math.sin(ang), 0.0])
        side = np.array([-u[1], u[0], 0.0])
        inner = r_pin + gap if z > 0 else r_pin * 0.9
        b.soft(entry, math.pi * (disc_r**2 - inner**2),
               lambda s: _annulus([0, 0, z], _X, _Y, (inner, inner),
                                  (disc_r, disc_r), s, rng))
        for sgn, ln in ((1.0, blade_len), (-1.0, tail_len)):
            org = sgn * disc_r * 0.92 * u - 0.5 * width * side + [0, 0, z]
            b.soft(entry, ln * width,
                   lambda s, org=org, sgn=sgn, ln=ln, u=u, side=side:
                   _rect(org, sgn * ln * u, width * side, s, rng))

    fixed = b.part("blade_fixed")
    blade(fixed, -half_angle, 0.0)
    b.hard(fixed, lambda: _cylinder([0.0, 0.0, -2 * gap], _Z, r_pin,
                                    z_b + 4 * gap, 0.8 * gap, hs))

    moving = b.part("blade_moving", [(MotionType.ROTATION, pivot_axis)])
    blade(moving, half_angle, z_b)
    return b.build("scissors", n_points)


def _build_car(rng, n_points):
    length = 1.5 * rng.uniform(0.97, 1.03)
    half_wid = 0.26
    hub_z = 0.25
    r_out = 0.215 * rng.uniform(0.97, 1.03)
    r_in = 0.16
    stem_top = 0.295
    z_plate = hub_z + stem_top + 0.09
    diag_est = math.sqrt(length**2 + (2 * half_wid + 0.1) ** 2 + z_plate**2)
    gap = _gap_for(diag_est)
    r_w = 0.065

    b = _Builder(rng)
    body = b.part("body")
    b.soft(body, length * 2 * half_wid,
           lambda s: _rect([-length / 2, -half_wid, z_plate],
                           [length, 0, 0], [0, 2 * half_wid, 0], s, rng))

    def _tab(hub, radial, plane_normal, rad0, rad1, width, spacing):
        side = np.cross(plane_normal, radial)
        origin = hub + rad0 * radial - 0.5 * width * side
        return _rect(origin, (rad1 - rad0) * radial, width * side, spacing,
                     rng, jitter=0.0)

    def wheel_assembly(hub_x, hub_y, steerable):
        hub = np.array([hub_x, hub_y, hub_z])
        inboard = -np.sign(hub_y)
        arm_y = hub_y + inboard * 0.09
        track_y = hub_y + inboard * 0.042
        # static support: arm plate down, struts to the hub ring track and
        # to an outer ring track (offset out of the wheel plane).
        b.soft(body, 0.07 * (z_plate - hub_z - 0.05),
               lambda s: _rect([hub_x - 0.035, arm_y, hub_z + 0.05],
                               [0.07, 0, 0], [0, 0, z_plate - hub_z - 0.05], s, rng))
        b.hard(body, lambda: _chain([hub_x, arm_y, hub_z + r_w],
                                    [hub_x, hub_y + inboard * 0.004, hub_z + r_w],
                                    0.5 * gap))
        b.hard(body, lambda: _ring(hub, _X, _Z, r_w, 0.5 * gap))
        # Outer track arc: far enough out that only the stem chain reaches
        # it, spanning the stem's quarter-turn sweep.
        r_track = 0.30
        b.hard(body, lambda: _chain([hub_x, arm_y, hub_z + r_track],
                                    [hub_x, track_y, hub_z + r_track], 0.5 * gap))
        b.hard(body, lambda: _ring([hub_x, track_y, hub_z], _X, _Z, r_track,
                                   0.6 * gap, start_deg=-15.0, span_deg=120.0))

        motions = [(MotionType.ROTATION, Line(hub, _Y))]
        if steerable:
            motions.append((MotionType.ROTATION, Line(hub, _Z)))
        name = f"wheel_{'f' if hub_x > 0 else 'r'}{'l' if hub_y > 0 else 'r'}"
        wheel = b.part(name, motions)
        b.soft(wheel, math.pi * (r_out**2 - r_in**2),
               lambda s: _annulus(hub, _X, _Z, (r_in, r_in), (r_out, r_out), s, rng))
        # The bottom pin rides the hub ring track; the stem chain lies
        # exactly on the vertical axis and rides the outer track, pinning
        # every tilted axis while leaving steering free. Rear wheels get two
        # extra pins at 120-degree spacing: no in-plane axis through the hub
        # lines up with more than one pin, so only rolling stays free.
        b.hard(wheel, lambda: _tab(hub, -_Z, _Y, 0.095, r_in + 0.004,
                                   0.036, 0.4 * gap))
        b.hard(wheel, lambda: _chain(hub + (r_out - 0.004) * _Z,
                                     hub + stem_top * _Z, 0.4 * gap))
        if not steerable:
            for ang in (math.radians(30.0), math.radians(150.0)):
                pd = math.cos(ang) * _X + math.sin(ang) * _Z
                b.hard(wheel, lambda pd=pd: _tab(hub, pd, _Y, 0.095, r_in + 0.004,
                                                 0.036, 0.4 * gap))

    for hub_x, steer in ((length / 2 - 0.23, True), (-length / 2 + 0.23, False)):
        for hub_y in (half_wid, -half_wid):
            wheel_assembly(hub_x, hub_y, steer)
    return b.build("car", n_points)


_BUILDERS = {
    "laptop": _build_laptop,
    "door": _build_door,
    "drawer": _build_drawer,
    "swivel_chair": _build_swivel_chair,
    "wheel": _build_wheel,
    "scissors": _build_scissors,
    "car": _build_car,
}


def generate(archetype: str, seed: int, n_points: int) -> Annotation:
    """Build one synthetic shape; deterministic for (archetype, seed, n_points)."""
    if archetype not in _BUILDERS:
        raise ValueError(f"unknown archetype: {archetype!r} (choose from {ARCHETYPES})")
    if n_points < 256:
        raise ValueError("n_points must be at least 256")
    seq = np.random.SeedSequence([ARCHETYPES.index(archetype), int(seed)])
    rng = np.random.Generator(np.random.PCG64(seq))
    ann = _BUILDERS[archetype](rng, n_points)
    return Annotation(f"{archetype}_{seed:03d}", ann.cloud, ann.parts)


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentLimits:
    rotation_max_deg: float = 90.0
    translation_max_frac: float = 0.15


def augment_motion(ann: Annotation, poses_per_mobility: int,
                   limits: AugmentLimits = AugmentLimits()) -> list[Annotation]:
    """Pose each annotated motion at evenly spaced amounts within limits.

    One mobility is posed at a time, everything else stays at rest. Axis
    lines are anchored to the static world and are reused unchanged: a
    rotation about its own line and a slide along it both leave the line
    invariant.
    """
    from mobkit.core import bbox_diagonal, transform_points

    if poses_per_mobility < 1:
        raise ValueError("poses_per_mobility must be >= 1")
    diag = bbox_diagonal(ann.cloud)
    out = []
    for pi, part in enumerate(ann.parts):
        for mi, (motion_type, line) in enumerate(part.motions):
            for k in range(poses_per_mobility):
                frac = k / max(1, poses_per_mobility - 1) if poses_per_mobility > 1 else 0.0
                if motion_type is MotionType.TRANSLATION:
                    amount = frac * limits.translation_max_frac * diag
                elif motion_type is MotionType.ROTATION:
                    amount = frac * limits.rotation_max_deg
                else:
                    amount = (frac * limits.rotation_max_deg,
                              frac * limits.translation_max_frac * diag)
                pts = np.array(ann.cloud.points)
                pts[part.indices] = transform_points(pts[part.indices], line,
                                                     motion_type, amount)
                normals = ann.cloud.normals
                if normals is not None:
                    normals = np.array(normals)
                    if motion_type is not MotionType.TRANSLATION:
                        rot_only = transform_points(
                            normals[part.indices] + line.point, line,
                            MotionType.ROTATION,
                            amount if motion_type is MotionType.ROTATION else amount[0],
                        ) - line.point
                        normals[part.indices] = rot_only
                cloud = PointCloud(pts, normals)
                out.append(Annotation(f"{ann.shape_id}_p{pi}m{mi}k{k}", cloud, ann.parts))
    return out


def jitter(ann: Annotation, sigma: float, seed: int) -> Annotation:
    """Gaussian point noise (sigma as a fraction of the diagonal) plus a mild
    anisotropic scale; axes are transformed with the shape."""
    from mobkit.core import bbox_diagonal

    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0xB0B])))
    diag = bbox_diagonal(ann.cloud)
    noise = rng.normal(scale=sigma * diag, size=ann.cloud.points.shape) if sigma > 0 \
        else np.zeros_like(ann.cloud.points)
    scale = rng.uniform(0.9, 1.1, size=3)
    pts = (ann.cloud.points + noise) * scale
    normals = ann.cloud.normals
    if normals is not None:
        n = normals / scale
        normals = n / np.linalg.norm(n, axis=1, keepdims=True)
    parts = []
    for part in ann.parts:
        motions = []
        for motion_type, line in part.motions:
            d = line.direction * scale
            motions.append((motion_type, Line(line.point * scale, d / np.linalg.norm(d))))
        parts.append(AnnotatedPart(part.indices, tuple(motions)))
    return Annotation(ann.shape_id, PointCloud(pts, normals), tuple(parts))
