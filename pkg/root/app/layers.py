from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

import pc_errors
from seeded_rng import Rng


class Activation(str, Enum):
    RELU = "relu"
    NONE = "none"


class DenseCache(NamedTuple):
    inputs: np.ndarray
    pre_activation: np.ndarray


@dataclass
class DenseLayer:
    """
    Fully connected layer applied over the last axis, y = act(x W^T + b).

    Attributes:
        weight (np.ndarray): (out, in) matrix.
        bias (np.ndarray): (out,) vector.
        activation (Activation): relu or none.
    """

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    def __post_init__(self):
        self.activation = Activation(self.activation)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise pc_errors.ShapeError(
                f"Weight {self.weight.shape} and bias {self.bias.shape} do not agree"
            )

    @classmethod
    def he_init(
        cls,
        in_width: int,
        out_width: int,
        activation: Activation,
        rng: Rng,
        dtype=np.float32,
    ) -> "DenseLayer":
        """He-normal weights from `rng`, zero biases."""
        std = np.sqrt(2.0 / in_width)
        weight = rng.normal(0.0, std, size=(out_width, in_width)).astype(dtype)
        return cls(weight, np.zeros(out_width, dtype=dtype), activation)

    @property
    def in_width(self) -> int:
        return self.weight.shape[1]

    @property
    def out_width(self) -> int:
        return self.weight.shape[0]

    def forward(self, inputs: np.ndarray) -> tuple[np.ndarray, DenseCache]:
        if inputs.shape[-1] != self.in_width:
            raise pc_errors.ShapeError(
                f"Layer expects {self.in_width} input channels, got {inputs.shape[-1]}"
            )
        pre = inputs @ self.weight.T + self.bias
        out = np.maximum(pre, 0) if self.activation is Activation.RELU else pre
        return out, DenseCache(inputs, pre)

    def backward(
        self, cache: DenseCache, grad_out: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Returns (grad_inputs, grad_weight, grad_bias) for an upstream gradient
        shaped like the layer output. Leading axes are summed over.
        """
        grad_pre = grad_out
        if self.activation is Activation.RELU:
            grad_pre = grad_out * (cache.pre_activation > 0)
        flat_grad = grad_pre.reshape(-1, self.out_width)
        flat_in = cache.inputs.reshape(-1, self.in_width)
        grad_weight = flat_grad.T @ flat_in
        grad_bias = flat_grad.sum(axis=0)
        grad_inputs = grad_pre @ self.weight
        return grad_inputs, grad_weight, grad_bias


def mlp_forward(
    layers: list[DenseLayer], inputs: np.ndarray
) -> tuple[np.ndarray, list[DenseCache]]:
    caches = []
    out = inputs
    for layer in layers:
        out, cache = layer.forward(out)
        caches.append(cache)
    return out, caches


def mlp_backward(
    layers: list[DenseLayer], caches: list[DenseCache], grad_out: np.ndarray
) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Returns the input gradient and (grad_weight, grad_bias) per layer."""
    grads = [None] * len(layers)
    grad = grad_out
    for i in reversed(range(len(layers))):
        grad, grad_w, grad_b = layers[i].backward(caches[i], grad)
        grads[i] = (grad_w, grad_b)
    return grad, grads


def max_pool(values: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Elementwise max over `axis`, with the winning slot per output element.
    Ties resolve to the lowest slot index.
    """
    argmax = np.argmax(values, axis=axis)
    pooled = np.take_along_axis(values, np.expand_dims(argmax, axis), axis=axis)
    return np.squeeze(pooled, axis=axis), argmax


def max_pool_backward(
    grad_pooled: np.ndarray, argmax: np.ndarray, input_shape: tuple, axis: int
) -> np.ndarray:
    """Routes each pooled gradient to its argmax slot; other slots get zero."""
    grad = np.zeros(input_shape, dtype=grad_pooled.dtype)
    np.put_along_axis(
        grad,
        np.expand_dims(argmax, axis),
        np.expand_dims(grad_pooled, axis),
        axis=axis,
    )
    return grad
