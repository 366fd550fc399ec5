from typing import NamedTuple
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from parameterized import parameterized
from scipy.spatial.transform import Rotation

import pc_errors
from grouping import BallQueryConfig, ball_query, knn_query
from local_features import (
    AugmentMode,
    ChannelLayout,
    DirectionalVectors,
    FeatureTensor,
    NormalizedDistances,
    assemble_features,
    directional_vectors,
    normalized_distance,
)
from point_cloud import AnchorSet, PointCloud
from sampling import farthest_point_sample


def random_grouping(seed: int, radius: float = 0.4, k_max: int = 16):
    data = np.random.default_rng(seed)
    cloud = PointCloud(data.uniform(-1, 1, size=(int(data.integers(8, 200)), 3)))
    anchors = farthest_point_sample(cloud, min(16, len(cloud)))
    return cloud, ball_query(cloud, anchors, BallQueryConfig(radius, k_max))


class TestDirectionalVectors(unittest.TestCase):
    def test_example(self):
        cloud = PointCloud([[1, 1, 1], [1.2, 1, 1]])
        grouping = ball_query(cloud, AnchorSet([0]), BallQueryConfig(0.4, 2))
        dv = directional_vectors(cloud, grouping, 0.4).dv
        assert_allclose(dv[0, 0], [0, 0, 0], atol=0)
        assert_allclose(dv[0, 1], [0.5, 0, 0], atol=1e-12)

    def test_padded_slots_repeat_pad_vector(self):
        cloud = PointCloud([[0, 0, 0], [5, 0, 0]])
        grouping = ball_query(cloud, AnchorSet([1]), BallQueryConfig(0.1, 3))
        dv = directional_vectors(cloud, grouping, 0.1).dv
        assert_array_equal(dv, np.zeros((1, 3, 3)))

    @parameterized.expand([(0.0,), (-0.5,)])
    def test_invalid_radius(self, r):
        cloud, grouping = random_grouping(0)
        with self.assertRaises(pc_errors.InvalidConfig):
            directional_vectors(cloud, grouping, r)
        with self.assertRaises(pc_errors.InvalidConfig):
            normalized_distance(grouping, r)


class TestNormalizedDistance(unittest.TestCase):
    class DistanceTestCase(NamedTuple):
        neighbor: list
        radius: float
        expected: float

    @parameterized.expand(
        [
            DistanceTestCase(neighbor=[0, 0, 0], radius=0.3, expected=0.0),
            DistanceTestCase(neighbor=[0.5, 0, 0], radius=0.5, expected=1.0),
            DistanceTestCase(neighbor=[0.3, 0.4, 0], radius=1.0, expected=0.5),
        ]
    )
    def test_examples(self, neighbor, radius, expected):
        cloud = PointCloud([[0, 0, 0], neighbor])
        grouping = ball_query(cloud, AnchorSet([0]), BallQueryConfig(radius, 2))
        d = normalized_distance(grouping, radius).d
        self.assertAlmostEqual(float(d[0, 1]), expected, delta=1e-12)

    def test_raw_distance_when_not_normalized(self):
        cloud = PointCloud([[0, 0, 0], [0.3, 0.4, 0]])
        grouping = ball_query(cloud, AnchorSet([0]), BallQueryConfig(2.0, 2))
        d = normalized_distance(grouping, 2.0, normalize=False)
        self.assertFalse(d.normalized)
        self.assertAlmostEqual(float(d.d[0, 1]), 0.5, delta=1e-12)

    def test_knn_defaults_to_widest_neighbour(self):
        cloud = PointCloud([[0, 0, 0], [1, 0, 0], [0, 2, 0]])
        grouping = knn_query(cloud, AnchorSet([0]), 3)
        assert_allclose(normalized_distance(grouping).d, [[0.0, 0.5, 1.0]])
        assert_allclose(directional_vectors(cloud, grouping).dv[0, 2], [0, 1, 0])


class TestFeatureIdentities(unittest.TestCase):
    def test_norm_reconstruction_and_bound(self):
        for seed in range(100):
            radius = 0.2 + 0.3 * (seed % 3)
            cloud, grouping = random_grouping(seed, radius)
            dv = directional_vectors(cloud, grouping, radius).dv
            d = normalized_distance(grouping, radius).d
            real = ~grouping.pad_mask
            assert_allclose(np.linalg.norm(dv, axis=-1)[real], d[real], rtol=0, atol=1e-9)
            anchor_xyz = cloud.xyz[grouping.anchors.indices][:, None, :]
            rebuilt = anchor_xyz + radius * dv
            assert_allclose(
                rebuilt[real], cloud.xyz[grouping.neighbor_indices][real], rtol=0, atol=1e-9
            )
            self.assertTrue(np.all(d[real] <= 1 + 1e-12))

    def test_translation_is_bitwise_invariant(self):
        data = np.random.default_rng(7)
        # Dyadic coordinates and integer shifts keep every subtraction exact.
        xyz = data.integers(-64, 65, size=(120, 3)) / 64.0
        cloud = PointCloud(xyz)
        grouping = ball_query(cloud, farthest_point_sample(cloud, 24), BallQueryConfig(0.5, 16))
        dv = directional_vectors(cloud, grouping, 0.5).dv
        d = normalized_distance(grouping, 0.5).d
        for shift in data.integers(-5, 6, size=(10, 3)):
            moved = cloud.transformed(translation=shift)
            moved_grouping = ball_query(moved, grouping.anchors, BallQueryConfig(0.5, 16))
            assert_array_equal(moved_grouping.neighbor_indices, grouping.neighbor_indices)
            self.assertEqual(directional_vectors(moved, moved_grouping, 0.5).dv.tobytes(), dv.tobytes())
            self.assertEqual(normalized_distance(moved_grouping, 0.5).d.tobytes(), d.tobytes())

    def test_rotation_rotates_vectors_and_keeps_distances(self):
        cloud, grouping = random_grouping(11)
        dv = directional_vectors(cloud, grouping, 0.4).dv
        d = normalized_distance(grouping, 0.4).d
        matrices = Rotation.random(50, random_state=np.random.default_rng(12)).as_matrix()
        shifts = np.random.default_rng(13).normal(size=(50, 3))
        for matrix, shift in zip(matrices, shifts):
            moved = cloud.transformed(matrix, shift)
            rotated_dv = directional_vectors(moved, grouping, 0.4).dv
            assert_allclose(rotated_dv, dv @ matrix.T, rtol=0, atol=1e-9)
            assert_allclose(np.linalg.norm(rotated_dv, axis=-1), d, rtol=0, atol=1e-9)


class TestAssembleFeatures(unittest.TestCase):
    class ModeTestCase(NamedTuple):
        mode: AugmentMode
        width: int

    @parameterized.expand(
        [
            ModeTestCase(AugmentMode.BASE, 32),
            ModeTestCase(AugmentMode.DISTANCE, 33),
            ModeTestCase(AugmentMode.VECTORS, 35),
            ModeTestCase(AugmentMode.BOTH, 36),
        ]
    )
    def test_channel_widths(self, mode, width):
        lifted = FeatureTensor.lifted(np.ones((4, 8, 32)))
        dv = DirectionalVectors(np.zeros((4, 8, 3)))
        d = NormalizedDistances(np.zeros((4, 8)))
        out = assemble_features(lifted, dv, d, mode)
        self.assertEqual(out.values.shape, (4, 8, width))
        self.assertEqual(out.layout.width, width)
        self.assertEqual(out.layout, ChannelLayout(32, mode.use_vectors, mode.use_distance))

    def test_base_is_identity_copy(self):
        values = np.arange(24, dtype=np.float64).reshape(2, 3, 4)
        lifted = FeatureTensor.lifted(values)
        out = assemble_features(
            lifted, DirectionalVectors(np.zeros((2, 3, 3))), NormalizedDistances(np.zeros((2, 3))), "base"
        )
        assert_array_equal(out.values, values)
        self.assertFalse(np.shares_memory(out.values, values))

    def test_hand_built_channel_order(self):
        lifted = np.arange(1, 17, dtype=np.float64).reshape(2, 2, 4)
        dv = -np.arange(1, 13, dtype=np.float64).reshape(2, 2, 3)
        d = np.array([[0.25, 0.5], [0.75, 1.0]])
        out = assemble_features(
            FeatureTensor.lifted(lifted), DirectionalVectors(dv), NormalizedDistances(d), AugmentMode.BOTH
        ).values
        assert_array_equal(out[0, 0], [1, 2, 3, 4, -1, -2, -3, 0.25])
        assert_array_equal(out[1, 1], [13, 14, 15, 16, -10, -11, -12, 1.0])
        self.assertAlmostEqual(out.sum(), lifted.sum() + dv.sum() + d.sum(), delta=1e-9)

    def test_shape_mismatch(self):
        lifted = FeatureTensor.lifted(np.ones((2, 3, 4)))
        with self.assertRaises(pc_errors.ShapeError):
            assemble_features(
                lifted, DirectionalVectors(np.zeros((2, 4, 3))), NormalizedDistances(np.zeros((2, 4))), "both"
            )

    def test_layout_must_match_values(self):
        with self.assertRaises(pc_errors.ShapeError):
            FeatureTensor(np.ones((2, 3, 4)), ChannelLayout(4, vectors=True))


if __name__ == "__main__":
    unittest.main()
