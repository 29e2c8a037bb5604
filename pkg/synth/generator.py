"""Generator datapath: oscillator + filtered noise -> post convolution."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from autodiff import functional as F
from autodiff.context import no_grad
from autodiff.tensor import Tensor, as_tensor
from dsp.types import AudioBuffer, FrameGrid
from errors import InvalidArgumentError
from synth.controls import DecomposedAudio, SynthBranches, SynthControls
from synth.noise import DEFAULT_GAMMA, filtered_noise
from synth.oscillator import harmonic_signal

logger = logging.getLogger(__name__)

POST_KERNEL_SIZE = 1025


def identity_kernel(size: int = POST_KERNEL_SIZE) -> np.ndarray:
    """Centred unit impulse."""
    if size < 1 or size % 2 == 0:
        raise InvalidArgumentError(f"kernel length must be odd, got {size}")
    kernel = np.zeros(size)
    kernel[size // 2] = 1.0
    return kernel


def post_filter(mixed: AudioBuffer, kernel: np.ndarray | Tensor) -> AudioBuffer:
    """Same-length centred convolution with ``kernel``, no bias."""
    kernel = as_tensor(kernel)
    with no_grad():
        out = F.fir_filter(mixed.samples, kernel)
    return AudioBuffer(out.data, source="synth:final")


def filter_frequency_response(kernel: np.ndarray | Tensor, n_points: int = 512) -> np.ndarray:
    """``|H(omega)|`` of an FIR kernel at ``n_points`` evenly spaced ``omega`` in ``[0, pi]``."""
    if n_points < 2:
        raise InvalidArgumentError(f"need at least 2 points, got {n_points}")
    taps = np.asarray(as_tensor(kernel).data, dtype=np.float64).reshape(-1)
    n_fft = 2 * (n_points - 1)
    if n_fft >= taps.shape[0]:
        return np.abs(sp_fft.rfft(taps, n_fft))
    omega = np.linspace(0.0, np.pi, n_points)
    phase = np.exp(-1j * np.outer(omega, np.arange(taps.shape[0])))
    return np.abs(phase @ taps)


def response_omegas(n_points: int) -> np.ndarray:
    """``omega / pi`` for the points of :func:`filter_frequency_response`."""
    return np.linspace(0.0, 1.0, n_points)


def render(
    controls: SynthControls,
    kernel: Tensor | np.ndarray | None,
    grid: FrameGrid,
    gamma: float = DEFAULT_GAMMA,
    seed: int = 0,
) -> SynthBranches:
    """Run the generator on the active tape.

    ``kernel=None`` skips the post convolution (``final`` is ``mixed``).
    """
    harmonic = harmonic_signal(controls, grid)
    noise = filtered_noise(controls.H, grid, gamma, seed)
    mixed = F.add(harmonic, noise)
    final = mixed if kernel is None else F.fir_filter(mixed, kernel)
    return SynthBranches(harmonic=harmonic, noise=noise, mixed=mixed, final=final)


def synthesize(
    controls: SynthControls,
    kernel: Tensor | np.ndarray | None,
    grid: FrameGrid,
    gamma: float = DEFAULT_GAMMA,
    seed: int = 0,
) -> DecomposedAudio:
    """Render every branch for decomposition."""
    with no_grad():
        branches = render(controls, kernel, grid, gamma=gamma, seed=seed)
    return branches.to_audio()


@dataclass
class BranchEnergies:
    """Mean-square energy of each branch, overall and on voiced frames."""

    harmonic: float
    noise: float
    harmonic_voiced: float
    noise_voiced: float

    @property
    def noise_to_harmonic_db(self) -> float:
        return float(10.0 * np.log10(max(self.noise, 1e-20) / max(self.harmonic, 1e-20)))


def branch_energies(
    decomposed: DecomposedAudio,
    f0_hz: np.ndarray | None = None,
    grid: FrameGrid | None = None,
) -> BranchEnergies:
    """Energy balance between the harmonic and noise branches.

    Voiced frames are those with ``f0 > 0``; without an F0 track every
    frame counts as voiced.
    """
    harm = decomposed.harmonic.samples.astype(np.float64)
    noise = decomposed.noise.samples.astype(np.float64)
    voiced = np.ones(harm.shape[0], dtype=bool)
    if f0_hz is not None:
        u = (grid or FrameGrid()).u
        voiced = np.repeat(np.asarray(f0_hz) > 0, u)[:harm.shape[0]]

    def _ms(x: np.ndarray) -> float:
        return float(np.mean(x**2)) if x.size else 0.0

    return BranchEnergies(
        harmonic=_ms(harm),
        noise=_ms(noise),
        harmonic_voiced=_ms(harm[voiced]),
        noise_voiced=_ms(noise[voiced]),
    )
