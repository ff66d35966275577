import math

import numpy as np
import pytest

from mobkit.attrprop import encode_axis
from mobkit.bench import generate
from mobkit.bench.metrics import orientation_error_deg, part_iou
from mobkit.core import (
    Line,
    Mobility,
    MotionAxis,
    MotionType,
    MoveAmounts,
    PointCloud,
    bbox_diagonal,
    transform_points,
)
from mobkit.matching import MobilityProposal, plausibility_energy
from mobkit.refine import (
    RefineConfig,
    ResidualPair,
    SnapshotSchedule,
    dynamic_snapshots,
    mon_loss,
    refine_mobility,
    residual_targets,
)


def _perturbed_hinge(ann, rng, max_tilt_deg=10.0, max_offset=0.0):
    cloud = ann.cloud
    lid = ann.parts[1]
    mt, line = lid.motions[0]
    diag = bbox_diagonal(cloud)
    v = rng.normal(size=3)
    v -= (v @ line.direction) * line.direction
    v /= np.linalg.norm(v)
    tilt = math.radians(max_tilt_deg)
    direction = math.cos(tilt) * line.direction + math.sin(tilt) * v
    point = line.point + max_offset * diag * v
    pline = Line(point, direction / np.linalg.norm(direction))
    return Mobility(lid.indices, mt, encode_axis(pline, cloud)), line


class TestSnapshotSchedule:
    def test_defaults(self):
        s = SnapshotSchedule()
        assert s.translation_fractions == (0.05, 0.10, 0.15)
        assert s.rotation_degrees == (30.0, 60.0, 90.0)

    def test_must_increase(self):
        with pytest.raises(ValueError):
            SnapshotSchedule(translation_fractions=(0.1, 0.1, 0.2))


class TestDynamicSnapshots:
    def test_static_points_unchanged(self, laptop42):
        cloud = laptop42.cloud
        lid = laptop42.parts[1]
        m = laptop42.mobilities()[0]
        base = laptop42.parts[0].indices
        snaps = dynamic_snapshots(cloud, m)
        assert len(snaps) == 3
        for pts, vectors in snaps:
            np.testing.assert_array_equal(pts[base], cloud.points[base])
            np.testing.assert_array_equal(vectors[base], 0.0)

    def test_lid_arcs_match_transform(self, laptop42):
        cloud = laptop42.cloud
        m = laptop42.mobilities()[0]
        line = m.axis.line(cloud)
        snaps = dynamic_snapshots(cloud, m)
        for (pts, vectors), amount in zip(snaps, (30.0, 60.0, 90.0)):
            expected = transform_points(cloud.points[m.part], line,
                                        MotionType.ROTATION, amount)
            np.testing.assert_allclose(pts[m.part], expected, atol=1e-9)
            np.testing.assert_allclose(vectors[m.part],
                                       expected - cloud.points[m.part], atol=1e-9)

    def test_translation_amounts_scale_with_diagonal(self, drawer42):
        cloud = drawer42.cloud
        m = drawer42.mobilities()[0]
        diag = bbox_diagonal(cloud)
        snaps = dynamic_snapshots(cloud, m)
        for (pts, vectors), frac in zip(snaps, (0.05, 0.10, 0.15)):
            shift = np.linalg.norm(vectors[m.part], axis=1)
            np.testing.assert_allclose(shift, frac * diag, atol=1e-9)


class TestResidualTargets:
    def test_zero_for_identical(self, rng):
        cloud = PointCloud(rng.normal(size=(16, 3)))
        axis = encode_axis(Line(rng.normal(size=3), np.array([0.0, 0, 1.0])), cloud)
        pair = residual_targets(axis, axis, cloud)
        np.testing.assert_allclose(pair.displacement_residual, 0.0, atol=1e-12)
        np.testing.assert_allclose(pair.orientation_residual, 0.0, atol=1e-12)

    def test_parallel_offset(self, rng):
        cloud = PointCloud(rng.normal(size=(16, 3)))
        direction = np.array([1.0, 0.0, 0.0])
        p0 = np.array([0.0, 0.0, 0.0])
        prop = Mobility([0], MotionType.ROTATION,
                        encode_axis(Line(p0, direction), cloud))
        gt = Mobility([0], MotionType.ROTATION,
                      encode_axis(Line(p0 + [0.0, 0.3, 0.0], direction), cloud))
        pair = residual_targets(prop.axis, gt.axis, cloud)
        np.testing.assert_allclose(pair.displacement_residual, [0.0, 0.3, 0.0],
                                   atol=1e-9)
        np.testing.assert_allclose(pair.orientation_residual, 0.0, atol=1e-9)

    def test_ten_degree_chord(self, rng):
        cloud = PointCloud(rng.normal(size=(16, 3)))
        d1 = np.array([1.0, 0.0, 0.0])
        t = math.radians(10.0)
        d2 = np.array([math.cos(t), math.sin(t), 0.0])
        a1 = MotionAxis(0, np.zeros(3), d1)
        a2 = MotionAxis(0, np.zeros(3), d2)
        pair = residual_targets(a1, a2, cloud)
        assert np.linalg.norm(pair.orientation_residual) == pytest.approx(
            2 * math.sin(math.radians(5.0)), abs=1e-9)

    def test_round_trip_reproduces_line(self, rng):
        cloud = PointCloud(rng.normal(size=(32, 3)))
        for _ in range(50):
            d1 = rng.normal(size=3)
            d1 /= np.linalg.norm(d1)
            d2 = rng.normal(size=3)
            d2 /= np.linalg.norm(d2)
            prop_axis = encode_axis(Line(rng.normal(size=3), d1), cloud)
            gt_line = Line(rng.normal(size=3), d2)
            gt_axis = encode_axis(gt_line, cloud)
            pair = residual_targets(prop_axis, gt_axis, cloud)
            corrected = pair.apply(prop_axis).line(cloud)
            from mobkit.core import axis_point_distance

            for t in (-1.0, 0.5, 2.0):
                p = gt_line.point + t * gt_line.direction
                assert axis_point_distance(p, corrected) < 1e-6


class TestMonLoss:
    def test_perfect(self):
        zero = ResidualPair(np.zeros(3), np.zeros(3))
        assert mon_loss([1.0, 0.0], zero, [1.0, 0.0], zero) == pytest.approx(
            0.0, abs=1e-9)

    def test_displacement_term(self):
        pred = ResidualPair(np.array([0.1, 0.0, 0.0]), np.zeros(3))
        gt = ResidualPair(np.zeros(3), np.zeros(3))
        assert mon_loss([1.0], pred, [1.0], gt) == pytest.approx(0.01, abs=1e-9)

    def test_uncertain_labels(self):
        zero = ResidualPair(np.zeros(3), np.zeros(3))
        loss = mon_loss([0.5, 0.5], zero, [1.0, 0.0], zero)
        assert loss == pytest.approx(2 * math.log(2), abs=1e-9)

    def test_zero_iff_exact(self):
        zero = ResidualPair(np.zeros(3), np.zeros(3))
        almost = ResidualPair(np.array([1e-3, 0, 0]), np.zeros(3))
        assert mon_loss([1.0], almost, [1.0], zero) > 0
        assert mon_loss([0.99], zero, [1.0], zero) > 0


class TestRefineMobility:
    @pytest.mark.parametrize("phi_deg", [0.0, 90.0])
    def test_jittered_hinge_recovers(self, laptop42, phi_deg):
        cloud = laptop42.cloud
        lid = laptop42.parts[1]
        mt, gt_line = lid.motions[0]
        phi = math.radians(phi_deg)
        v = math.cos(phi) * np.array([0.0, 1.0, 0.0]) + \
            math.sin(phi) * np.array([0.0, 0.0, 1.0])
        tilt = math.radians(10.0)
        d = math.cos(tilt) * gt_line.direction + math.sin(tilt) * v
        m = Mobility(lid.indices, mt,
                     encode_axis(Line(gt_line.point, d / np.linalg.norm(d)), cloud))
        pre_oe = orientation_error_deg(m.axis.orientation, gt_line.direction)
        assert pre_oe == pytest.approx(10.0, abs=0.1)
        refined = refine_mobility(cloud, MobilityProposal(m, 1.0, 1.0))
        post_oe = orientation_error_deg(refined.mobility.axis.orientation,
                                        gt_line.direction)
        assert post_oe <= 2.0
        assert refined.energy_after <= refined.energy_before + 1e-9

    def test_jitter_mostly_strictly_reduces_axis_error(self, laptop42):
        # A thin set of adversarial tilt directions can stall in (or slide
        # along) shallow local minima; the contract is strict improvement on
        # at least 90% of perturbations, with the energy never increasing.
        rng = np.random.default_rng(77)
        cloud = laptop42.cloud
        lid = laptop42.parts[1]
        mt, gt_line = lid.motions[0]
        reduced = 0
        n = 12
        for k in range(n):
            m, _ = _perturbed_hinge(laptop42, rng, max_tilt_deg=12.0)
            pre = orientation_error_deg(m.axis.orientation, gt_line.direction)
            refined = refine_mobility(cloud, MobilityProposal(m, 1.0, 1.0))
            post = orientation_error_deg(refined.mobility.axis.orientation,
                                         gt_line.direction)
            reduced += post < pre
            assert refined.energy_after <= refined.energy_before + 1e-9
        assert reduced >= 0.9 * n

    def test_fixed_point_unchanged(self, laptop42):
        m = laptop42.mobilities()[0]
        refined = refine_mobility(laptop42.cloud, MobilityProposal(m, 1.0, 1.0))
        again = refine_mobility(laptop42.cloud,
                                MobilityProposal(refined.mobility, 1.0,
                                                 refined.energy_after))
        np.testing.assert_array_equal(again.mobility.part, refined.mobility.part)
        np.testing.assert_allclose(again.mobility.axis.displacement,
                                   refined.mobility.axis.displacement, atol=1e-9)
        np.testing.assert_allclose(again.mobility.axis.orientation,
                                   refined.mobility.axis.orientation, atol=1e-9)
        assert again.energy_after == pytest.approx(refined.energy_after, abs=1e-9)

    def test_polluted_part_iou_improves(self):
        # 5% of the static points near the joint wrongly included: the label
        # step must clean them out (a contiguous strip hugging the hinge is
        # genuinely ambiguous, so the pollution is sampled at random from the
        # near-joint band).
        rng = np.random.default_rng(11)
        for seed in range(5):
            ann = generate("laptop", seed, 2048)
            cloud = ann.cloud
            lid = ann.parts[1]
            base = ann.parts[0]
            mt, line = lid.motions[0]
            from scipy.spatial import cKDTree

            from mobkit.core import bbox_diagonal

            diag = bbox_diagonal(cloud)
            tree = cKDTree(cloud.points[lid.indices])
            d, _ = tree.query(cloud.points[base.indices], k=1)
            near = base.indices[d <= 0.1 * diag]
            n_bad = max(1, lid.indices.size // 20)
            bad = rng.choice(near, size=min(n_bad, near.size), replace=False)
            polluted = np.union1d(lid.indices, bad)
            pre_iou = part_iou(polluted, lid.indices)
            m = Mobility(polluted, mt, encode_axis(line, cloud))
            refined = refine_mobility(cloud, MobilityProposal(m, 1.0, 1.0))
            post_iou = part_iou(refined.mobility.part, lid.indices)
            assert post_iou >= pre_iou - 1e-12, f"seed {seed}"
            assert refined.energy_after <= refined.energy_before + 1e-9

    def test_refined_energy_matches_public_energy(self, laptop42, rng):
        m, _ = _perturbed_hinge(laptop42, rng, max_tilt_deg=8.0)
        refined = refine_mobility(laptop42.cloud, MobilityProposal(m, 1.0, 1.0))
        fresh = plausibility_energy(laptop42.cloud, refined.mobility)
        assert fresh == pytest.approx(refined.energy_after, abs=1e-9)

    def test_whole_cloud_part_fails(self, rng):
        cloud = PointCloud(rng.normal(size=(32, 3)))
        axis = encode_axis(Line(np.zeros(3), np.array([1.0, 0, 0])), cloud)
        m = Mobility(np.arange(32), MotionType.TRANSLATION, axis)
        from mobkit.refine import RefinementFailedError

        with pytest.raises(RefinementFailedError):
            refine_mobility(cloud, MobilityProposal(m, 1.0, 1.0))
