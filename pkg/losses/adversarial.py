"""LSGAN objectives and the combined generator/discriminator losses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from autodiff import functional as F
from autodiff.context import recording
from autodiff.tensor import Tape, Tensor, as_tensor
from dsp.types import AudioBuffer
from errors import InvalidArgumentError
from losses.discriminator import DiscriminatorConfig, discriminator_forward
from losses.spectral import MssConfig, mss_loss


def lsgan_d_loss(real_logits: Tensor, fake_logits: Tensor) -> Tensor:
    """``0.5 mean((real - 1)^2) + 0.5 mean(fake^2)``."""
    real_term = F.mean(F.power(F.sub(real_logits, 1.0), 2.0))
    fake_term = F.mean(F.power(fake_logits, 2.0))
    return F.mul(F.add(real_term, fake_term), 0.5)


def lsgan_g_loss(fake_logits: Tensor) -> Tensor:
    """``mean((fake - 1)^2)``."""
    return F.mean(F.power(F.sub(fake_logits, 1.0), 2.0))


@dataclass
class LossTerms:
    """Scalar losses of one example; ``l_g``/``l_d`` are the optimised ones."""

    l_g: Tensor
    l_d: Tensor
    mss: Tensor
    adv_g: Tensor

    def values(self) -> dict[str, float]:
        return {"mss": self.mss.item(), "l_g": self.l_g.item(), "l_d": self.l_d.item()}


def total_losses(
    y: AudioBuffer | Tensor | np.ndarray,
    y_hat: Tensor,
    disc_weights: Mapping[str, Tensor | np.ndarray],
    disc_cfg: DiscriminatorConfig,
    lam: float,
    mss_cfg: MssConfig,
    tape: Tape | None = None,
) -> LossTerms:
    """``L_G = L_MSS + (lam / R) sum_i g_i`` and ``L_D = (1 / R) sum_i d_i``.

    ``L_D`` sees a detached ``y_hat`` and ``L_G`` sees detached discriminator
    weights, so each loss only reaches its own side's leaves. With
    ``lam == 0`` no discriminator is evaluated and ``L_D`` is a constant 0.
    """
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    y_hat = as_tensor(y_hat)
    with recording(tape):
        mss = mss_loss(y, y_hat, mss_cfg)
        if lam == 0:
            zero = Tensor(0.0)
            return LossTerms(l_g=mss, l_d=zero, mss=mss, adv_g=zero)

        frozen = {k: as_tensor(v).detach() for k, v in disc_weights.items()}
        fake_const = y_hat.detach()
        r = disc_cfg.n_resolutions
        adv_g = d_sum = None
        for i in range(r):
            g_i = lsgan_g_loss(discriminator_forward(y_hat, frozen, disc_cfg, i))
            d_i = lsgan_d_loss(
                discriminator_forward(y, disc_weights, disc_cfg, i),
                discriminator_forward(fake_const, disc_weights, disc_cfg, i),
            )
            adv_g = g_i if adv_g is None else F.add(adv_g, g_i)
            d_sum = d_i if d_sum is None else F.add(d_sum, d_i)
        l_g = F.add(mss, F.mul(adv_g, lam / r))
        l_d = F.mul(d_sum, 1.0 / r)
        adv_mean = F.mul(adv_g, 1.0 / r)
    return LossTerms(l_g=l_g, l_d=l_d, mss=mss, adv_g=adv_mean)
