"""Decoupled-weight-decay Adam, written against plain numpy arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class AdamWConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("betas must lie strictly inside (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


@dataclass
class OptimizerState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, weights: np.ndarray) -> "OptimizerState":
        return cls(np.zeros_like(weights), np.zeros_like(weights), 0)


def adamw_step(weights: np.ndarray, grads: np.ndarray, state: OptimizerState,
               lr: float, cfg: AdamWConfig = AdamWConfig()):
    """One AdamW update; weight decay is applied to the parameters directly,
    before the bias-corrected moment step. Returns (new_weights, new_state)."""
    if weights.shape != grads.shape or weights.shape != state.first_moment.shape:
        raise DimensionMismatchError("weights, grads and state shapes disagree")
    step = state.step + 1
    m = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * grads
    v = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * np.square(grads)
    m_hat = m / (1.0 - cfg.beta1 ** step)
    v_hat = v / (1.0 - cfg.beta2 ** step)
    new_weights = weights * (1.0 - lr * cfg.weight_decay)
    new_weights = new_weights - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new_weights, OptimizerState(m, v, step)
