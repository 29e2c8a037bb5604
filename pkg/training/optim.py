"""Adam and the milestone learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from errors import InvalidArgumentError, ShapeError
from training.settings import TrainConfig

ADAM_EPS = 1e-8


@dataclass
class OptimizerState:
    """First/second moments per parameter name and the update counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(p, dtype=np.float64) for k, p in params.items()},
            v={k: np.zeros_like(p, dtype=np.float64) for k, p in params.items()},
        )

    def check(self, params: Mapping[str, np.ndarray]) -> None:
        if self.step < 0:
            raise InvalidArgumentError(f"optimizer step must be >= 0, got {self.step}")
        if set(self.m) != set(params) or set(self.v) != set(params):
            missing = sorted(set(params) ^ set(self.m))
            raise ShapeError(f"optimizer state does not cover the parameters (differs on {missing[:3]})")
        for name, p in params.items():
            if self.m[name].shape != np.shape(p) or self.v[name].shape != np.shape(p):
                raise ShapeError(f"moments of '{name}'", self.m[name].shape, np.shape(p))

    def round_to_float32(self) -> None:
        for moments in (self.m, self.v):
            for name, value in moments.items():
                moments[name] = value.astype(np.float32).astype(np.float64)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = ADAM_EPS,
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One bias-corrected Adam update.

    Returns new parameter arrays and a new state; the inputs are not touched.
    Parameters absent from ``grads`` are treated as having zero gradient.
    """
    state.check(params)
    t = state.step + 1
    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t

    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, p in params.items():
        p = np.asarray(p, dtype=np.float64)
        g = grads.get(name)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient of '{name}'", g.shape, p.shape)
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, OptimizerState(m=new_m, v=new_v, step=t)


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> tuple[float, float]:
    """Base rates times ``milestone_gamma`` per milestone already reached."""
    if epoch < 0:
        raise InvalidArgumentError(f"epoch must be >= 0, got {epoch}")
    decays = sum(1 for m in cfg.milestones if m <= epoch)
    factor = cfg.milestone_gamma**decays
    return cfg.lr_g * factor, cfg.lr_d * factor
