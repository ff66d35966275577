import numpy as np
import pytest

from mobkit.bench.metrics import proposal_recall
from mobkit.core import PointCloud, bbox_diagonal
from mobkit.partprop import (
    DomainError,
    ProposerConfig,
    binarize_row,
    build_feature_map,
    confidence_ground_truth,
    propose_parts,
    similarity_loss,
    similarity_matrix,
)


class TestSimilarityLoss:
    def test_identical_features_same_part(self):
        f = np.array([[1.0, 2.0], [1.0, 2.0]])
        co = np.ones((2, 2), dtype=bool)
        assert similarity_loss(f, co) == pytest.approx(0.0, abs=1e-12)

    def test_hinge_on_separated_pair(self):
        # distance 5 between different parts, margin 100: each ordered pair
        # contributes 95.
        f = np.array([[0.0, 0.0], [3.0, 4.0]])
        co = np.eye(2, dtype=bool)
        assert similarity_loss(f, co, margin=100.0) == pytest.approx(190.0, abs=1e-9)

    def test_hinge_saturates(self):
        f = np.array([[0.0, 0.0], [150.0, 0.0]])
        co = np.eye(2, dtype=bool)
        assert similarity_loss(f, co, margin=100.0) == pytest.approx(0.0, abs=1e-9)

    def test_zero_iff_margin_met(self):
        # co-members identical and non-members at exactly the margin
        f = np.array([[0.0, 0.0], [0.0, 0.0], [100.0, 0.0]])
        co = np.zeros((3, 3), dtype=bool)
        co[:2, :2] = True
        co[2, 2] = True
        assert similarity_loss(f, co, margin=100.0) == pytest.approx(0.0, abs=1e-9)
        f2 = f.copy()
        f2[2, 0] = 99.0
        assert similarity_loss(f2, co, margin=100.0) > 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            similarity_loss(np.zeros((3, 2)), np.ones((2, 2), dtype=bool))


class TestBinarizeRow:
    def test_threshold(self):
        sim = np.array([[0.0, 50.0, 150.0],
                        [50.0, 0.0, 90.0],
                        [150.0, 90.0, 0.0]])
        np.testing.assert_array_equal(binarize_row(sim, 0, 100.0), [0, 1])

    def test_tiny_threshold_keeps_self(self):
        sim = np.array([[0.0, 50.0], [50.0, 0.0]])
        np.testing.assert_array_equal(binarize_row(sim, 1, 1e-9), [1])

    def test_all_zero_distances(self):
        sim = np.zeros((4, 4))
        np.testing.assert_array_equal(binarize_row(sim, 2, 100.0), [0, 1, 2, 3])

    def test_binarize_reconstructs_parts(self):
        # co-members share features, parts far apart in feature space
        labels = np.array([0, 0, 1, 1, 1, 2])
        f = np.array([[200.0 * l, 0.0] for l in labels])
        sim = similarity_matrix(f)
        for i, l in enumerate(labels):
            np.testing.assert_array_equal(binarize_row(sim, i, 100.0),
                                          np.nonzero(labels == l)[0])


class TestConfidenceGroundTruth:
    def test_identical(self):
        assert confidence_ground_truth([1, 2, 3], [3, 2, 1]) == 1.0

    def test_disjoint(self):
        assert confidence_ground_truth([0, 1], [2, 3]) == 0.0

    def test_partial_overlap(self):
        assert confidence_ground_truth(range(10), range(5, 15)) == pytest.approx(1 / 3)

    def test_symmetry(self, rng):
        a = rng.choice(100, size=30, replace=False)
        b = rng.choice(100, size=40, replace=False)
        assert confidence_ground_truth(a, b) == confidence_ground_truth(b, a)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            confidence_ground_truth([], [1])


def _cube_surface(rng, n, origin):
    # jittered grid over the 6 faces of a unit cube
    per_face = n // 6
    pts = []
    for axis in range(3):
        for side in (0.0, 1.0):
            k = int(np.ceil(np.sqrt(per_face)))
            u, v = np.meshgrid((np.arange(k) + 0.5) / k, (np.arange(k) + 0.5) / k)
            face = np.zeros((k * k, 3))
            others = [a for a in range(3) if a != axis]
            face[:, others[0]] = u.ravel()
            face[:, others[1]] = v.ravel()
            face[:, axis] = side
            pts.append(face)
    pts = np.concatenate(pts)
    pts += rng.uniform(-0.01, 0.01, pts.shape)
    return pts + np.asarray(origin)


class TestProposeParts:
    def test_two_separated_cubes(self, rng):
        a = _cube_surface(rng, 600, [0.0, 0.0, 0.0])
        b = _cube_surface(rng, 600, [0.0, 0.0, 1.4])
        cloud = PointCloud(np.concatenate([a, b]))
        diag = bbox_diagonal(cloud)
        assert 1.4 - 1.0 > 0.1 * diag  # the gap really is > 0.1 diag
        config = ProposerConfig(scales=(0.05,))
        proposals = propose_parts(cloud, config)
        sets = {p.indices.tobytes() for p in proposals}
        cube_a = np.arange(len(a), dtype=np.int64)
        cube_b = np.arange(len(a), len(cloud), dtype=np.int64)
        # oracle: brute-force connected components at the same radius
        from scipy.sparse.csgraph import connected_components
        from scipy.sparse import csr_matrix
        from scipy.spatial import cKDTree
        tree = cKDTree(cloud.points)
        pairs = tree.query_pairs(0.05 * diag, output_type="ndarray")
        m = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(len(cloud), len(cloud)))
        n_comp, labels = connected_components(m, directed=False)
        assert n_comp == 2
        assert cube_a.tobytes() in sets
        assert cube_b.tobytes() in sets

    def test_single_blob_covered(self, rng):
        pts = _cube_surface(rng, 900, [0.0, 0.0, 0.0])
        cloud = PointCloud(pts)
        proposals = propose_parts(cloud, ProposerConfig(scales=(0.05,)))
        best = max(p.indices.size for p in proposals)
        assert best >= 0.95 * len(cloud)

    def test_laptop_recall(self, laptop42):
        proposals = propose_parts(laptop42.cloud)
        assert proposal_recall(proposals, laptop42) == 1.0

    def test_cloud_too_small(self):
        with pytest.raises(DomainError):
            propose_parts(PointCloud(np.random.default_rng(0).normal(size=(8, 3))))

    def test_permutation_invariance(self, rng):
        a = _cube_surface(rng, 400, [0.0, 0.0, 0.0])
        b = _cube_surface(rng, 400, [0.0, 0.0, 1.4])
        pts = np.concatenate([a, b])
        cloud = PointCloud(pts)
        config = ProposerConfig(scales=(0.05,))
        base = propose_parts(cloud, config)
        perm = rng.permutation(len(pts))
        cloud_p = PointCloud(pts[perm])
        permuted = propose_parts(cloud_p, config)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        base_sets = {frozenset(p.indices.tolist()) for p in base}
        perm_sets = {frozenset(perm[p.indices].tolist()) for p in permuted}
        assert base_sets == perm_sets

    def test_rigid_motion_invariance(self, rng):
        # diagonal-preserving motion: axis permutation plus translation
        a = _cube_surface(rng, 400, [0.0, 0.0, 0.0])
        b = _cube_surface(rng, 400, [0.0, 0.0, 1.4])
        pts = np.concatenate([a, b])
        config = ProposerConfig(scales=(0.05,))
        base = propose_parts(PointCloud(pts), config)
        moved = pts[:, [1, 2, 0]] + np.array([5.0, -2.0, 3.0])
        after = propose_parts(PointCloud(moved), config)
        base_sets = {p.indices.tobytes() for p in base}
        after_sets = {p.indices.tobytes() for p in after}
        assert base_sets == after_sets


class TestFeatureMap:
    def test_shape_and_determinism(self, laptop42):
        f1 = build_feature_map(laptop42.cloud)
        f2 = build_feature_map(laptop42.cloud)
        assert f1.shape == (len(laptop42.cloud), 9)
        np.testing.assert_array_equal(f1, f2)

    def test_similarity_matrix_symmetric_zero_diag(self, rng):
        f = rng.normal(size=(50, 9))
        s = similarity_matrix(f)
        np.testing.assert_allclose(s, s.T, atol=1e-6)
        np.testing.assert_allclose(np.diag(s), 0.0, atol=1e-12)
