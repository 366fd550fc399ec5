import unittest
from unittest.mock import patch

import ablation
import pc_errors
import trainer
from local_features import AugmentMode
from metrics import Metrics
from seeded_rng import Rng
from trainer import Recipe
from trainer_test import toy_config, toy_splits


class TestScoringSplit(unittest.TestCase):
    @patch("ablation.pc_logging.log_warning")
    def test_falls_back_to_val(self, mock_warning):
        splits = toy_splits(per_class_train=1, per_class_val=1)
        self.assertIs(ablation.scoring_split(splits), splits.val)
        mock_warning.assert_called_once()


class TestAdditiveAblation(unittest.TestCase):
    def test_rows_on_tiny_data(self):
        splits = toy_splits(per_class_train=2, per_class_val=1)
        report = ablation.additive_ablation(
            toy_config(), splits, Recipe(lr=1e-2, epochs=2, batch_size=2), seeds=[0]
        )
        self.assertEqual(report.title, ablation.ADDITIVE_TITLE)
        self.assertEqual(tuple(r.name for r in report.rows), ablation.ADDITIVE_VARIANTS)
        self.assertEqual(report.overall_best["variant"], "+best-two-average")
        for row in report.rows:
            self.assertEqual(row.seeds, 1)
            self.assertEqual(row.oa_std, 0.0)

    @patch("ablation.metrics.evaluate")
    @patch("ablation.train")
    def test_modes_per_variant(self, mock_train, mock_evaluate):
        splits = toy_splits(per_class_train=2, per_class_val=1)
        recipe = Recipe(epochs=1)
        real_result = trainer.train(toy_config(), splits, recipe, Rng(0))
        mock_train.return_value = real_result
        mock_evaluate.return_value = Metrics(0.5, 0.5)
        ablation.additive_ablation(toy_config(), splits, recipe, seeds=[3, 4])
        modes = [call.args[0].stages[0].mode for call in mock_train.call_args_list]
        self.assertEqual(
            modes,
            [AugmentMode.BASE, AugmentMode.DISTANCE, AugmentMode.BOTH] * 2,
        )
        seeds = [call.args[3].seed for call in mock_train.call_args_list]
        self.assertEqual(seeds, [3, 3, 3, 4, 4, 4])
        self.assertEqual(mock_evaluate.call_count, 8)

    @patch("ablation.metrics.evaluate", return_value=Metrics(0.5, 0.5))
    @patch("ablation.train")
    def test_reports_combined_models(self, mock_train, _mock_evaluate):
        splits = toy_splits(per_class_train=2, per_class_val=1)
        recipe = Recipe(epochs=1)
        results = [trainer.train(toy_config(), splits, recipe, Rng(i)) for i in range(6)]
        mock_train.side_effect = results
        trained = {}
        ablation.additive_ablation(
            toy_config(), splits, recipe, seeds=[3, 4], on_trained=trained.setdefault
        )
        self.assertEqual(sorted(trained), [3, 4])
        self.assertIs(trained[3], results[2])
        self.assertIs(trained[4], results[5])

    def test_needs_a_seed(self):
        with self.assertRaises(pc_errors.InvalidRequest):
            ablation.additive_ablation(toy_config(), toy_splits(1, 1), Recipe(), seeds=[])


class TestDistanceAblation(unittest.TestCase):
    @patch("ablation.metrics.evaluate", return_value=Metrics(0.5, 0.5))
    @patch("ablation.train")
    def test_normalization_per_variant(self, mock_train, _mock_evaluate):
        splits = toy_splits(per_class_train=2, per_class_val=1)
        mock_train.return_value = trainer.train(toy_config(), splits, Recipe(epochs=1), Rng(0))
        report = ablation.distance_ablation(toy_config(), splits, Recipe(epochs=1), seeds=[0])
        stages = [call.args[0].stages[0] for call in mock_train.call_args_list]
        self.assertEqual([s.mode for s in stages], [AugmentMode.DISTANCE] * 2)
        self.assertEqual([s.normalize_distance for s in stages], [False, True])
        self.assertEqual(tuple(r.name for r in report.rows), ablation.DISTANCE_VARIANTS)
        self.assertEqual(report.row("r-normalized distance").delta_oa, 0.0)


if __name__ == "__main__":
    unittest.main()
