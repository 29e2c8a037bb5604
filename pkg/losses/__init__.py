"""Training objectives.

- spectral: multi-scale spectral (MSS) loss
- discriminator: multi-resolution spectrogram discriminators
- adversarial: LSGAN terms and the combined G/D losses
"""

from losses.adversarial import LossTerms, lsgan_d_loss, lsgan_g_loss, total_losses
from losses.discriminator import (
    DiscriminatorConfig,
    discriminator_forward,
    discriminator_param_count,
    init_discriminator,
)
from losses.spectral import MssConfig, mss_distance, mss_loss

__all__ = [
    "MssConfig",
    "mss_loss",
    "mss_distance",
    "DiscriminatorConfig",
    "init_discriminator",
    "discriminator_forward",
    "discriminator_param_count",
    "lsgan_d_loss",
    "lsgan_g_loss",
    "total_losses",
    "LossTerms",
]
