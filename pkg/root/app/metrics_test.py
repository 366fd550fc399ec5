import unittest
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_array_equal

import classifier
import metrics
import pc_errors
from local_features import AugmentMode
from point_cloud import PointCloud
from seeded_rng import Rng
from set_abstraction import StageConfig


class TestMetricsFromPredictions(unittest.TestCase):
    def test_imbalanced_example(self):
        # 9 of class 0 all correct, 1 of class 1 wrong.
        labels = [0] * 9 + [1]
        predictions = [0] * 10
        result = metrics.metrics_from_predictions(labels, predictions, 2)
        self.assertAlmostEqual(result.overall_accuracy, 0.9)
        self.assertAlmostEqual(result.mean_class_accuracy, 0.5)
        assert_array_equal(result.confusion, [[9, 0], [1, 0]])

    def test_twenty_samples(self):
        labels = [0] * 8 + [1] * 7 + [2] * 5
        predictions = [0] * 6 + [1] * 2 + [1] * 7 + [2] * 3 + [0] * 2
        result = metrics.metrics_from_predictions(labels, predictions, 3)
        self.assertAlmostEqual(result.overall_accuracy, 16 / 20)
        self.assertAlmostEqual(result.mean_class_accuracy, (6 / 8 + 1 + 3 / 5) / 3)
        assert_array_equal(result.confusion, [[6, 2, 0], [0, 7, 0], [2, 0, 3]])
        self.assertEqual([c.support for c in result.per_class], [8, 7, 5])
        self.assertEqual([c.correct for c in result.per_class], [6, 7, 3])

    @patch("metrics.pc_logging.log_warning")
    def test_absent_class_is_excluded(self, mock_warning):
        result = metrics.metrics_from_predictions([0, 0, 2], [0, 1, 2], 3)
        self.assertAlmostEqual(result.mean_class_accuracy, (0.5 + 1.0) / 2)
        self.assertIsNone(result.per_class[1].recall)
        self.assertEqual(len(result.warnings), 1)
        self.assertIn("Class 1", result.warnings[0])
        mock_warning.assert_called_once()

    def test_invalid_inputs(self):
        with self.assertRaises(pc_errors.InvalidRequest):
            metrics.metrics_from_predictions([], [], 2)
        with self.assertRaises(pc_errors.InvalidRequest):
            metrics.metrics_from_predictions([0, 2], [0, 0], 2)
        with self.assertRaises(pc_errors.ShapeError):
            metrics.metrics_from_predictions([0, 1], [0], 2)

    def test_record_and_format(self):
        result = metrics.metrics_from_predictions([0, 1], [0, 0], 2)
        record = result.to_record()
        self.assertEqual(record["oa"], 0.5)
        self.assertEqual(record["per_class"][1], {"class_id": 1, "support": 1, "recall": 0.0})
        text = metrics.format_metrics(result, ["chair", "table"])
        self.assertTrue(text.startswith("OA 50.00%  mAcc 50.00%"))
        self.assertIn("chair", text)


class TestEvaluate(unittest.TestCase):
    def setUp(self):
        config = classifier.ModelConfig(
            2, (StageConfig(4, 0.8, 4, (4,), AugmentMode.BOTH),), head=(4,)
        )
        self.model = classifier.build_model(config, Rng(0))
        data = np.random.default_rng(1)
        self.dataset = [PointCloud(data.normal(size=(12, 3)), i % 2) for i in range(6)]

    def test_matches_predict(self):
        expected = [classifier.predict(self.model, c) for c in self.dataset]
        result = metrics.evaluate(self.model, None, self.dataset)
        labels = [c.label for c in self.dataset]
        self.assertAlmostEqual(
            result.overall_accuracy, np.mean(np.array(expected) == np.array(labels))
        )

    def test_params_do_not_touch_model(self):
        before = self.model.flatten().values.copy()
        zeros = self.model.flatten().with_values(np.zeros_like(before))
        evaluator = metrics.make_evaluator(self.model, self.dataset)
        result = evaluator(zeros)
        # All-zero parameters predict class 0 for every cloud.
        self.assertAlmostEqual(result.overall_accuracy, 0.5)
        assert_array_equal(self.model.flatten().values, before)

    def test_precomputed_geometry(self):
        geometries = [classifier.compute_geometry(self.model.config, c) for c in self.dataset]
        a = metrics.evaluate(self.model, None, self.dataset)
        b = metrics.evaluate(self.model, None, self.dataset, geometries)
        assert_array_equal(a.confusion, b.confusion)


if __name__ == "__main__":
    unittest.main()
