"""Harmonic-plus-noise generator.

- oscillator: sine/cosine harmonic banks, Nyquist masking
- noise: LTV-FIR filtered noise
- generator: branch sum, post filter, decomposition
- vocoder: checkpoint-backed encode + synthesize facade
"""

from synth.controls import DecomposedAudio, SynthBranches, SynthControls
from synth.generator import (
    branch_energies,
    filter_frequency_response,
    identity_kernel,
    post_filter,
    render,
    synthesize,
)
from synth.noise import noise_filter_bank
from synth.oscillator import mask_above_nyquist, nyquist_distribution, oscillator_bank

__all__ = [
    "SynthControls",
    "SynthBranches",
    "DecomposedAudio",
    "oscillator_bank",
    "mask_above_nyquist",
    "nyquist_distribution",
    "noise_filter_bank",
    "post_filter",
    "filter_frequency_response",
    "identity_kernel",
    "render",
    "synthesize",
    "branch_energies",
]
