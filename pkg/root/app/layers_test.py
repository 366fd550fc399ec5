import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

import pc_errors
from layers import (
    Activation,
    DenseLayer,
    max_pool,
    max_pool_backward,
    mlp_backward,
    mlp_forward,
)
from seeded_rng import Rng


class TestDenseLayer(unittest.TestCase):
    def test_forward_relu_and_linear(self):
        weight = np.array([[1.0, -1.0], [2.0, 0.0]])
        bias = np.array([0.0, -3.0])
        x = np.array([[1.0, 2.0]])
        relu_out, cache = DenseLayer(weight, bias, Activation.RELU).forward(x)
        linear_out, _ = DenseLayer(weight, bias, Activation.NONE).forward(x)
        assert_array_equal(linear_out, [[-1.0, -1.0]])
        assert_array_equal(relu_out, [[0.0, 0.0]])
        assert_array_equal(cache.pre_activation, [[-1.0, -1.0]])

    def test_he_init_shapes_and_zero_bias(self):
        layer = DenseLayer.he_init(3, 8, Activation.RELU, Rng(0))
        self.assertEqual(layer.weight.shape, (8, 3))
        self.assertEqual(layer.weight.dtype, np.float32)
        assert_array_equal(layer.bias, np.zeros(8))

    def test_shape_errors(self):
        with self.assertRaises(pc_errors.ShapeError):
            DenseLayer(np.zeros((2, 3)), np.zeros(3))
        layer = DenseLayer(np.zeros((2, 3)), np.zeros(2))
        with self.assertRaises(pc_errors.ShapeError):
            layer.forward(np.zeros((4, 2)))

    def test_mlp_backward_matches_finite_differences(self):
        rng = Rng(1)
        layers = [
            DenseLayer.he_init(3, 5, Activation.RELU, rng, np.float64),
            DenseLayer.he_init(5, 2, Activation.NONE, rng, np.float64),
        ]
        x = np.random.default_rng(2).normal(size=(4, 3))
        target = np.random.default_rng(3).normal(size=(4, 2))

        def loss() -> float:
            out, _ = mlp_forward(layers, x)
            return float((out * target).sum())

        out, caches = mlp_forward(layers, x)
        grad_x, grads = mlp_backward(layers, caches, target)
        h = 1e-6
        for layer, (grad_w, grad_b) in zip(layers, grads):
            for array, grad in ((layer.weight, grad_w), (layer.bias, grad_b)):
                numeric = np.zeros_like(array)
                for idx in np.ndindex(array.shape):
                    saved = array[idx]
                    array[idx] = saved + h
                    plus = loss()
                    array[idx] = saved - h
                    minus = loss()
                    array[idx] = saved
                    numeric[idx] = (plus - minus) / (2 * h)
                assert_allclose(grad, numeric, atol=1e-6)
        self.assertEqual(grad_x.shape, x.shape)


class TestMaxPool(unittest.TestCase):
    def test_ties_go_to_lowest_slot(self):
        values = np.array([[[1.0, 5.0], [3.0, 5.0], [3.0, 2.0]]])
        pooled, argmax = max_pool(values, axis=1)
        assert_array_equal(pooled, [[3.0, 5.0]])
        assert_array_equal(argmax, [[1, 0]])

    def test_duplicated_slot_leaves_result_unchanged(self):
        values = np.random.default_rng(4).normal(size=(3, 5, 4))
        duplicated = np.concatenate([values, values[:, 2:3]], axis=1)
        self.assertEqual(
            max_pool(values, axis=1)[0].tobytes(), max_pool(duplicated, axis=1)[0].tobytes()
        )

    def test_backward_routes_to_argmax_only(self):
        values = np.array([[[1.0, 5.0], [3.0, 5.0], [3.0, 2.0]]])
        _, argmax = max_pool(values, axis=1)
        grad = max_pool_backward(np.array([[10.0, 20.0]]), argmax, values.shape, axis=1)
        assert_array_equal(grad, [[[0.0, 20.0], [10.0, 0.0], [0.0, 0.0]]])


if __name__ == "__main__":
    unittest.main()
