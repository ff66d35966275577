import numpy as np
import pytest

from mobkit.core import Line, Mobility, MotionAxis, MotionType, PointCloud
from mobkit.extract import (
    ExtractionConfig,
    extract_mobilities,
    nms_parts,
    select_attributes,
    undirected_angle_deg,
)
from mobkit.matching import MobilityProposal


def _axis(direction, anchor_index=0):
    d = np.asarray(direction, float)
    return MotionAxis(anchor_index, np.zeros(3), d / np.linalg.norm(d))


def _proposal(part, error, direction=(0, 0, 1.0),
              motion_type=MotionType.ROTATION):
    return MobilityProposal(
        Mobility(np.asarray(part, dtype=np.int64), motion_type, _axis(direction)),
        confidence=1.0, matching_error=error)


class TestNmsParts:
    def test_suppresses_overlapping(self):
        a = _proposal(range(0, 10), 0.01)
        b = _proposal(range(1, 10), 0.03)  # IoU 0.9 with a
        kept = nms_parts([b, a])
        assert kept == [a]

    def test_disjoint_both_kept(self):
        a = _proposal(range(0, 10), 0.01)
        b = _proposal(range(10, 20), 0.03)
        assert len(nms_parts([a, b])) == 2

    def test_empty(self):
        assert nms_parts([]) == []

    def test_order_independent(self):
        props = [
            _proposal(range(0, 10), 0.02),
            _proposal(range(5, 15), 0.01),
            _proposal(range(20, 30), 0.05),
        ]
        base = nms_parts(props)
        shuffled = nms_parts(props[::-1])
        assert [p.matching_error for p in base] == \
            [p.matching_error for p in shuffled]


class TestSelectAttributes:
    def test_rotation_greedy_45_rule(self):
        part = list(range(10))
        deg = np.radians(np.array([0.0, 30.0, 60.0]))
        dirs = [(np.cos(t), 0.0, np.sin(t)) for t in deg]
        pool = [
            _proposal(part, 0.01, dirs[0]),
            _proposal(part, 0.02, dirs[1]),
            _proposal(part, 0.03, dirs[2]),
        ]
        out = select_attributes(pool[0], pool)
        rotations = [m for m in out if m.motion_type is MotionType.ROTATION]
        assert len(rotations) == 2
        assert undirected_angle_deg(rotations[0].axis.orientation,
                                    rotations[1].axis.orientation) == pytest.approx(60.0)

    def test_single_translation_direction(self):
        part = list(range(10))
        pool = [
            _proposal(part, 0.01, (0, 1, 0), MotionType.TRANSLATION),
            _proposal(part, 0.02, (1, 0, 0), MotionType.TRANSLATION),
        ]
        out = select_attributes(pool[0], pool)
        translations = [m for m in out if m.motion_type is MotionType.TRANSLATION]
        assert len(translations) == 1
        np.testing.assert_allclose(translations[0].axis.orientation, [0, 1, 0])

    def test_coaxial_r_and_t_both_reported(self):
        part = list(range(10))
        pool = [
            _proposal(part, 0.010, (0, 0, 1), MotionType.ROTATION),
            _proposal(part, 0.011, (0, 0, 1), MotionType.TRANSLATION),
            _proposal(part, 0.009, (0, 0, 1), MotionType.ROTATION_TRANSLATION),
        ]
        out = select_attributes(pool[0], pool)
        types = sorted(m.motion_type.code for m in out)
        # the screw candidate is within the tie margin of the pure ones, so
        # the part reports separate rotation and translation attributes
        assert types == ["R", "T"]

    def test_clear_screw_reported_as_rt(self):
        part = list(range(10))
        pool = [
            _proposal(part, 0.030, (0, 0, 1), MotionType.ROTATION),
            _proposal(part, 0.030, (0, 0, 1), MotionType.TRANSLATION),
            _proposal(part, 0.001, (0, 0, 1), MotionType.ROTATION_TRANSLATION),
        ]
        out = select_attributes(pool[0], pool)
        assert [m.motion_type.code for m in out] == ["RT"]

    def test_pool_filtered_by_iou(self):
        kept = _proposal(range(10), 0.01)
        other_part = _proposal(range(50, 60), 0.001, (1, 0, 0))
        out = select_attributes(kept, [kept, other_part])
        assert all(undirected_angle_deg(m.axis.orientation, (0, 0, 1)) < 1e-9
                   for m in out)

    def test_output_reuses_kept_part(self):
        kept = _proposal(range(10), 0.02)
        near = _proposal(range(1, 10), 0.01, (1, 0, 0))
        out = select_attributes(kept, [kept, near])
        for m in out:
            np.testing.assert_array_equal(m.part, kept.mobility.part)


class TestExtractInvariants:
    def _random_pool(self, rng, n_parts=6, n_pool=30):
        parts = []
        for k in range(n_parts):
            size = int(rng.integers(8, 20))
            parts.append(rng.choice(200, size=size, replace=False))
        pool = []
        for _ in range(n_pool):
            part = parts[int(rng.integers(n_parts))]
            d = rng.normal(size=3)
            motion = rng.choice(list(MotionType))
            pool.append(_proposal(part, float(rng.uniform(0.001, 0.05)), d,
                                  motion))
        return pool

    def test_output_parts_pairwise_iou_bound(self, rng):
        config = ExtractionConfig()
        pool = self._random_pool(rng)
        kept = nms_parts(pool, config)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                inter = np.intersect1d(a.mobility.part, b.mobility.part).size
                union = np.union1d(a.mobility.part, b.mobility.part).size
                assert inter / union <= config.part_overlap_iou

    def test_rotation_axes_pairwise_angle(self, rng):
        config = ExtractionConfig()
        pool = self._random_pool(rng)
        for kept, mobilities in extract_mobilities(pool, config):
            rotations = [m for m in mobilities
                         if m.motion_type.has_rotation]
            for i, a in enumerate(rotations):
                for b in rotations[i + 1:]:
                    assert undirected_angle_deg(
                        a.axis.orientation, b.axis.orientation) \
                        > config.rotation_angle_min_deg

    def test_idempotent(self, rng):
        config = ExtractionConfig()
        pool = self._random_pool(rng)
        first = extract_mobilities(pool, config)
        # feed the kept proposals back through
        kept_props = [k for k, _ in first]
        second = extract_mobilities(kept_props, config)
        assert [k.mobility.part.tobytes() for k, _ in first] == \
            [k.mobility.part.tobytes() for k, _ in second]

    def test_permutation_invariant(self, rng):
        config = ExtractionConfig()
        pool = self._random_pool(rng)
        base = extract_mobilities(pool, config)
        shuffled = list(pool)
        rng.shuffle(shuffled)
        other = extract_mobilities(shuffled, config)
        assert [k.mobility.part.tobytes() for k, _ in base] == \
            [k.mobility.part.tobytes() for k, _ in other]
        assert [[(m.motion_type, m.axis.orientation.tobytes()) for m in ms]
                for _, ms in base] == \
            [[(m.motion_type, m.axis.orientation.tobytes()) for m in ms]
             for _, ms in other]


class TestConfigValidation:
    def test_bad_iou(self):
        with pytest.raises(ValueError):
            ExtractionConfig(part_overlap_iou=0.0)

    def test_bad_angle(self):
        with pytest.raises(ValueError):
            ExtractionConfig(rotation_angle_min_deg=120.0)
