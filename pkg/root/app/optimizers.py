import math

import numpy as np

import pc_errors


class Optimizer:
    """
    Base class for optimizers over a flat parameter array.

    State is kept in float64; `step` returns updated values in the dtype of
    the parameters it was given.
    """

    def step(self, params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
        raise NotImplementedError("step method must be implemented in derived classes")


class SGD(Optimizer):
    def __init__(self, size: int, momentum: float = 0.9, weight_decay: float = 0.0):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = np.zeros(size, dtype=np.float64)

    def step(self, params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
        p = params.astype(np.float64)
        g = grads.astype(np.float64) + self.weight_decay * p
        self.velocity = self.momentum * self.velocity + g
        return (p - lr * self.velocity).astype(params.dtype)


class AdamW(Optimizer):
    """Adam with decoupled weight decay."""

    def __init__(
        self,
        size: int,
        weight_decay: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(size, dtype=np.float64)
        self.v = np.zeros(size, dtype=np.float64)

    def step(self, params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        p = params.astype(np.float64)
        g = grads.astype(np.float64)
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * g
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * g * g
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        update = m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p
        return (p - lr * update).astype(params.dtype)


def make_optimizer(name: str, size: int, momentum: float, weight_decay: float) -> Optimizer:
    if name == "adamw":
        return AdamW(size, weight_decay=weight_decay)
    if name == "sgd":
        return SGD(size, momentum=momentum, weight_decay=weight_decay)
    raise pc_errors.InvalidConfig(f"Unknown optimizer {name!r}")


def cosine_lr(base_lr: float, min_lr: float, epoch: int, epochs: int) -> float:
    """
    Cosine decay from `base_lr` at epoch 1 to `min_lr` at the last epoch. The
    floor never exceeds the base rate, so base_lr = 0 disables updates.
    """
    floor = min(min_lr, base_lr)
    if epochs <= 1:
        return base_lr
    progress = (epoch - 1) / (epochs - 1)
    return floor + 0.5 * (base_lr - floor) * (1.0 + math.cos(math.pi * progress))
