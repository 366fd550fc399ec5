import unittest
from unittest.mock import MagicMock, patch

import numpy as np
from numpy.testing import assert_array_equal
from parameterized import parameterized

import classifier
import pc_errors
import trainer
from dataset_split import DatasetSplit
from local_features import AugmentMode
from point_cloud import PointCloud
from seeded_rng import Rng
from set_abstraction import StageConfig
from transforms import NO_TRANSFORM, TrainTransform


def flat_patch(data, n=32) -> np.ndarray:
    xyz = data.uniform(-1, 1, size=(n, 3))
    xyz[:, 2] = data.normal(scale=0.01, size=n)
    return xyz


def z_stick(data, n=32) -> np.ndarray:
    xyz = data.normal(scale=0.01, size=(n, 3))
    xyz[:, 2] = data.uniform(-1, 1, size=n)
    return xyz


def toy_splits(per_class_train=30, per_class_val=6, seed=0) -> DatasetSplit:
    """Flat patches (class 0) against sticks along z (class 1)."""
    data = np.random.default_rng(seed)

    def clouds(count):
        out = []
        for _ in range(count):
            out.append(PointCloud(flat_patch(data), 0))
            out.append(PointCloud(z_stick(data), 1))
        return tuple(out)

    return DatasetSplit(clouds(per_class_train), clouds(per_class_val), (), ("patch", "stick"))


def toy_config(fps_random_start=False) -> classifier.ModelConfig:
    return classifier.ModelConfig(
        2,
        (StageConfig(8, 0.5, 8, (8,), AugmentMode.BOTH),),
        head=(8,),
        fps_random_start=fps_random_start,
    )


class TestRecipe(unittest.TestCase):
    @parameterized.expand(
        [
            ("optimizer", dict(optimizer="rmsprop")),
            ("negative_lr", dict(lr=-1.0)),
            ("epochs", dict(epochs=0)),
            ("batch", dict(batch_size=0)),
            ("keep_top_high", dict(keep_top=16)),
            ("keep_top_low", dict(keep_top=0)),
        ]
    )
    def test_invalid(self, _, fields):
        with self.assertRaises(pc_errors.InvalidConfig):
            trainer.Recipe(**fields).validate()

    def test_defaults(self):
        recipe = trainer.Recipe()
        recipe.validate()
        self.assertEqual(recipe.keep_top, 15)
        self.assertEqual(recipe.to_dict()["optimizer"], "adamw")

    def test_invalid_transform(self):
        with self.assertRaises(pc_errors.InvalidConfig):
            trainer.Recipe(transform=TrainTransform(jitter=-1.0)).validate()


class TestTrain(unittest.TestCase):
    def setUp(self):
        self.splits = toy_splits(per_class_train=4, per_class_val=2)
        self.recipe = trainer.Recipe(lr=1e-2, epochs=3, batch_size=4)

    def test_zero_learning_rate_keeps_initial_parameters(self):
        recipe = trainer.Recipe(lr=0.0, epochs=2, batch_size=4)
        result = trainer.train(toy_config(), self.splits, recipe, Rng(5))
        init_rng = Rng(5).spawn(3)[0]
        initial = classifier.build_model(toy_config(), init_rng).flatten()
        for entry in result.store:
            self.assertEqual(entry.params.values.tobytes(), initial.values.tobytes())
        self.assertEqual([r.lr for r in result.history], [0.0, 0.0])

    @parameterized.expand([("cached", False), ("random_start", True)])
    def test_same_seed_same_run(self, _, random_start):
        config = toy_config(random_start)
        a = trainer.train(config, self.splits, self.recipe, Rng(1))
        b = trainer.train(config, self.splits, self.recipe, Rng(1))
        self.assertEqual(a.history, b.history)
        self.assertEqual(
            a.store.best.params.values.tobytes(), b.store.best.params.values.tobytes()
        )

    def test_history_and_store(self):
        seen = []
        result = trainer.train(
            toy_config(), self.splits, self.recipe, Rng(2), on_epoch=seen.append
        )
        self.assertEqual([r.epoch for r in result.history], [1, 2, 3])
        self.assertEqual(seen, result.history)
        self.assertEqual(len(result.store), 3)
        self.assertEqual(result.store.fingerprint, toy_config().fingerprint())
        self.assertAlmostEqual(result.history[0].lr, 1e-2, delta=1e-15)
        self.assertEqual(result.history[0].to_record()["record"], "epoch")
        for record in result.history:
            self.assertGreater(record.train_loss, 0.0)

    def test_completion_order_inline_matches_batch_order(self):
        a = trainer.train(toy_config(), self.splits, self.recipe, Rng(3), deterministic=True)
        b = trainer.train(toy_config(), self.splits, self.recipe, Rng(3), deterministic=False)
        assert_array_equal(a.store.best.params.values, b.store.best.params.values)

    def test_empty_split(self):
        splits = DatasetSplit(self.splits.train, (), (), ("patch", "stick"))
        with self.assertRaises(pc_errors.InvalidDataset):
            trainer.train(toy_config(), splits, self.recipe, Rng(0))

    def test_label_out_of_range(self):
        splits = DatasetSplit(
            self.splits.train + (PointCloud(flat_patch(np.random.default_rng(0)), 2),),
            self.splits.val,
            (),
            ("patch", "stick"),
        )
        with self.assertRaises(pc_errors.InvalidDataset):
            trainer.train(toy_config(), splits, self.recipe, Rng(0))

    @patch("trainer.pc_logging.log_failure")
    @patch("trainer._sample_gradient", return_value=(float("nan"), np.zeros(1)))
    def test_divergence(self, _mock_gradient, mock_failure):
        with self.assertRaises(pc_errors.DivergedError) as context:
            trainer.train(toy_config(), self.splits, self.recipe, Rng(0))
        self.assertEqual(context.exception.epoch, 1)
        mock_failure.assert_called_once()

    def test_uses_worker_pool(self):
        pool = MagicMock()
        pool.map.side_effect = lambda func, args: [func(*a) for a in args]
        trainer.train(toy_config(), self.splits, self.recipe, Rng(0), pool=pool)
        self.assertGreater(pool.map.call_count, 0)
        pool.unordered.assert_not_called()

    def test_learns_toy_problem(self):
        splits = toy_splits()
        recipe = trainer.Recipe(lr=1e-2, epochs=10, batch_size=5, transform=NO_TRANSFORM)
        result = trainer.train(toy_config(), splits, recipe, Rng(0))
        self.assertEqual(max(r.val_oa for r in result.history), 1.0)
        self.assertEqual(result.store.best.val_oa, 1.0)


class TestTrainTransforms(unittest.TestCase):
    def setUp(self):
        self.splits = toy_splits(per_class_train=4, per_class_val=2)

    def recipe(self, transform):
        return trainer.Recipe(lr=1e-2, epochs=3, batch_size=4, transform=transform)

    @patch("trainer.apply_transform", wraps=trainer.apply_transform)
    def test_every_training_sample_is_transformed_every_epoch(self, mock_transform):
        trainer.train(toy_config(), self.splits, self.recipe(TrainTransform()), Rng(0))
        self.assertEqual(mock_transform.call_count, 3 * len(self.splits.train))

    @patch("trainer.apply_transform", wraps=trainer.apply_transform)
    def test_identity_transform_is_skipped(self, mock_transform):
        trainer.train(toy_config(), self.splits, self.recipe(NO_TRANSFORM), Rng(0))
        mock_transform.assert_not_called()

    @parameterized.expand(
        [
            # val once, train once
            ("cached", NO_TRANSFORM, 4 + 8),
            # val once, train every epoch
            ("transformed", TrainTransform(), 4 + 3 * 8),
        ]
    )
    def test_geometry_reuse(self, _, transform, expected_calls):
        with patch(
            "classifier.compute_geometry", wraps=classifier.compute_geometry
        ) as mock_geometry:
            trainer.train(toy_config(), self.splits, self.recipe(transform), Rng(0))
        self.assertEqual(mock_geometry.call_count, expected_calls)

    def test_transform_changes_training(self):
        a = trainer.train(toy_config(), self.splits, self.recipe(NO_TRANSFORM), Rng(4))
        b = trainer.train(toy_config(), self.splits, self.recipe(TrainTransform()), Rng(4))
        self.assertNotEqual(
            a.store.best.params.values.tobytes(), b.store.best.params.values.tobytes()
        )

    def test_transformed_run_is_reproducible(self):
        transform = TrainTransform(rotation="so3", scale=(0.8, 1.2), jitter=0.02)
        a = trainer.train(toy_config(), self.splits, self.recipe(transform), Rng(6))
        b = trainer.train(toy_config(), self.splits, self.recipe(transform), Rng(6))
        self.assertEqual(a.history, b.history)
        assert_array_equal(a.store.best.params.values, b.store.best.params.values)


if __name__ == "__main__":
    unittest.main()
