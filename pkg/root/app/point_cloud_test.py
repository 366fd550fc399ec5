from typing import NamedTuple
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from parameterized import parameterized

import pc_errors
from point_cloud import (
    AnchorSet,
    Point3,
    PointCloud,
    centroid,
    normalize_unit_sphere,
)


class TestPointCloud(unittest.TestCase):
    class InvalidCloudTestCase(NamedTuple):
        points: object

    @parameterized.expand(
        [
            InvalidCloudTestCase(points=[]),
            InvalidCloudTestCase(points=[[0.0, np.nan, 0.0]]),
            InvalidCloudTestCase(points=[[np.inf, 0.0, 0.0]]),
            InvalidCloudTestCase(points=[[0.0, 0.0]]),
        ]
    )
    def test_invalid_clouds(self, points):
        with self.assertRaises(pc_errors.InvalidCloud):
            PointCloud(points)

    def test_xyz_is_read_only(self):
        cloud = PointCloud([[1, 2, 3]])
        with self.assertRaises(ValueError):
            cloud.xyz[0, 0] = 5.0

    def test_points_and_labels(self):
        cloud = PointCloud.from_points([Point3(1, 2, 3), Point3(4, 5, 6)], label=2)
        self.assertEqual(cloud.points, [Point3(1.0, 2.0, 3.0), Point3(4.0, 5.0, 6.0)])
        self.assertEqual(cloud.label, 2)
        self.assertIsNone(cloud.with_label(None).label)
        self.assertEqual(len(cloud), 2)

    def test_permuted_and_transformed(self):
        cloud = PointCloud([[0, 0, 0], [1, 0, 0], [0, 2, 0]], label=1)
        permuted = cloud.permuted([2, 0, 1])
        assert_array_equal(permuted.xyz, [[0, 2, 0], [0, 0, 0], [1, 0, 0]])
        rotation = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        moved = cloud.transformed(rotation, [1, 1, 1])
        assert_allclose(moved.xyz, [[1, 1, 1], [1, 2, 1], [-1, 1, 1]])
        self.assertEqual(moved.label, 1)


class TestAnchorSet(unittest.TestCase):
    def test_valid(self):
        anchors = AnchorSet([2, 0, 1], n=3)
        self.assertEqual(list(anchors), [2, 0, 1])
        self.assertEqual(anchors, AnchorSet([2, 0, 1]))

    @parameterized.expand([([0, 0],), ([-1],), ([0, 3],)])
    def test_invalid(self, indices):
        with self.assertRaises(pc_errors.InvalidRequest):
            AnchorSet(indices, n=3)


class TestCentroid(unittest.TestCase):
    class CentroidTestCase(NamedTuple):
        points: list
        expected: tuple

    @parameterized.expand(
        [
            CentroidTestCase(points=[[0, 0, 0], [2, 0, 0]], expected=(1, 0, 0)),
            CentroidTestCase(points=[[1, 1, 1]], expected=(1, 1, 1)),
            CentroidTestCase(
                points=[[1, 0, 0], [0, 1, 0], [0, 0, 1]], expected=(1 / 3, 1 / 3, 1 / 3)
            ),
        ]
    )
    def test_centroid(self, points, expected):
        assert_allclose(centroid(PointCloud(points)), expected, atol=1e-15)

    def test_missing_cloud(self):
        with self.assertRaises(pc_errors.InvalidCloud):
            centroid(None)


class TestNormalizeUnitSphere(unittest.TestCase):
    class NormalizeTestCase(NamedTuple):
        points: list
        expected: list

    @parameterized.expand(
        [
            NormalizeTestCase(
                points=[[1, 0, 0], [-1, 0, 0]], expected=[[1, 0, 0], [-1, 0, 0]]
            ),
            NormalizeTestCase(points=[[5, 5, 5]], expected=[[0, 0, 0]]),
            NormalizeTestCase(
                points=[[2, 0, 0], [0, 0, 0], [-2, 0, 0]],
                expected=[[1, 0, 0], [0, 0, 0], [-1, 0, 0]],
            ),
        ]
    )
    def test_examples(self, points, expected):
        assert_allclose(normalize_unit_sphere(PointCloud(points)).xyz, expected, atol=1e-12)

    def test_random_clouds(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            cloud = PointCloud(rng.normal(size=(50, 3)) * 7 + 3, label=4)
            normalized = normalize_unit_sphere(cloud)
            assert_allclose(normalized.xyz.mean(axis=0), 0.0, atol=1e-9)
            self.assertAlmostEqual(np.linalg.norm(normalized.xyz, axis=1).max(), 1.0, delta=1e-9)
            self.assertEqual(normalized.label, 4)
            assert_allclose(normalize_unit_sphere(normalized).xyz, normalized.xyz, atol=1e-9)

    def test_order_is_preserved(self):
        cloud = PointCloud([[0, 0, 0], [4, 0, 0], [0, 2, 0]])
        normalized = normalize_unit_sphere(cloud)
        self.assertEqual(int(np.argmax(normalized.xyz[:, 0])), 1)
        self.assertEqual(int(np.argmax(normalized.xyz[:, 1])), 2)


if __name__ == "__main__":
    unittest.main()
