"""Acceptance checks at desk scale.

The overfit, adversarial and speed runs take minutes and carry the ``slow``
marker; everything else runs with the regular suite.

Usage:
    pytest tests/test_acceptance.py -v
    pytest tests/test_acceptance.py -v -m slow
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from autodiff import functional as F
from autodiff import grad_check
from bench import run_bench
from data.dataset import Dataset
from data.synthetic import synthetic_utterance
from dsp.signal import fft_convolve, overlap_add, stft_hop, stft_magnitude
from dsp.types import DEFAULT_GRID, AudioBuffer
from encoder.checkpoint import Checkpoint
from encoder.config import EncoderConfig
from encoder.network import encode, generator_param_count, init_weights
from losses import init_discriminator, total_losses
from synth.controls import SynthControls
from synth.generator import branch_energies, filter_frequency_response, post_filter, render, synthesize
from synth.noise import noise_filter_bank
from synth.vocoder import Vocoder
from tests.conftest import random_track
from tests.test_dsp import direct_convolve, naive_ola, naive_stft
from training.loop import Trainer
from training.settings import load_settings

DESK_CONFIG = Path(__file__).resolve().parent.parent / "docs" / "desk_overfit.cfg"
INSTANCES = 100
REFERENCE_S_PER_1S = 0.0368


# ── Oracles ──────────────────────────────────────────────────────────────────


def centred_fir(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    half = len(kernel) // 2
    out = np.zeros(len(x))
    for n in range(len(x)):
        for j, k in enumerate(kernel):
            m = n - j + half
            if 0 <= m < len(x):
                out[n] += k * x[m]
    return out


def direct_response(kernel: np.ndarray, n_points: int) -> np.ndarray:
    omegas = np.linspace(0.0, np.pi, n_points)
    return np.array([abs(sum(k * np.exp(-1j * w * n) for n, k in enumerate(kernel))) for w in omegas])


class TestOracleEquivalence:
    """Fast DSP paths against brute-force references."""

    def test_fft_convolve(self, rng):
        for _ in range(INSTANCES):
            a = rng.standard_normal(int(rng.integers(1, 60)))
            b = rng.standard_normal(int(rng.integers(1, 60)))
            np.testing.assert_allclose(fft_convolve(a, b), direct_convolve(a, b), atol=1e-9)

    def test_overlap_add(self, rng):
        for _ in range(INSTANCES):
            length = int(rng.integers(1, 40))
            hop = int(rng.integers(1, length + 1))
            frames = rng.standard_normal((int(rng.integers(1, 12)), length))
            np.testing.assert_allclose(overlap_add(frames, hop), naive_ola(frames, hop), atol=1e-9)

    def test_post_filter(self, rng):
        for _ in range(INSTANCES):
            x = rng.uniform(-0.5, 0.5, int(rng.integers(30, 200)))
            kernel = rng.standard_normal(2 * int(rng.integers(0, 12)) + 1)
            np.testing.assert_allclose(F.fir_filter(x, kernel).data, centred_fir(x, kernel), atol=1e-9)

    def test_post_filter_on_audio(self, rng):
        for _ in range(10):
            audio = AudioBuffer(rng.uniform(-0.5, 0.5, 300))
            kernel = rng.standard_normal(2 * int(rng.integers(0, 12)) + 1) * 0.2
            expected = centred_fir(audio.samples.astype(np.float64), kernel)
            np.testing.assert_allclose(post_filter(audio, kernel).samples, expected, atol=1e-6)

    def test_stft_magnitude(self, rng):
        for _ in range(INSTANCES):
            fft_size = int(2 ** rng.integers(3, 8))
            x = rng.standard_normal(int(rng.integers(fft_size, 300)))
            ours = stft_magnitude(x, fft_size).magnitudes
            np.testing.assert_allclose(ours, naive_stft(x, fft_size, stft_hop(fft_size, 0.75)), atol=1e-6)

    def test_filter_frequency_response(self, rng):
        for _ in range(INSTANCES):
            kernel = rng.standard_normal(2 * int(rng.integers(0, 20)) + 1)
            n_points = int(rng.integers(2, 40))
            np.testing.assert_allclose(
                filter_frequency_response(kernel, n_points), direct_response(kernel, n_points), atol=1e-9
            )


# ── Training ─────────────────────────────────────────────────────────────────


@pytest.fixture(scope="module")
def overfit():
    """The desk recipe trained to completion: (trainer, initial mss, final mss)."""
    settings = load_settings(DESK_CONFIG)
    trainer = Trainer.from_settings(Dataset([synthetic_utterance(seconds=2.0, seed=settings.seed)]), settings)
    trainer.run()
    return trainer, trainer.history[0]["mss"], trainer.history[-1]["mss"]


@pytest.mark.slow
class TestDeskOverfit:
    """MSS-only overfit, then an adversarial continuation."""

    def test_mss_drops(self, overfit):
        trainer, initial, final = overfit
        assert trainer.step == 2000
        assert final <= 0.30 * initial

    def test_adversarial_continuation_is_stable(self, overfit):
        trainer, _, pre_gan = overfit
        assert trainer.disc_cfg.fft_sizes == [512, 256, 128]
        start = len(trainer.history)
        trainer.train_cfg = replace(trainer.train_cfg, lam=5.0, epochs=trainer.epoch + 200)
        trainer.run()
        rows = trainer.history[start:]
        assert len(rows) == 200
        assert all(np.isfinite(r[k]) for r in rows for k in ("mss", "l_g", "l_d"))
        assert rows[-1]["mss"] <= 2.0 * pre_gan


# ── Gradients ────────────────────────────────────────────────────────────────


def pipeline_loss(track, target, cfg, disc, disc_cfg, mss_cfg):
    def loss(params):
        controls = encode(track, params, cfg)
        final = render(controls, params["post.kernel"], DEFAULT_GRID, gamma=cfg.gamma, seed=0).final
        return total_losses(target, final, disc, disc_cfg, 5.0, mss_cfg).l_g

    return loss


class TestPipelineGradient:
    """encode -> render -> L_G against central differences."""

    @pytest.fixture
    def setup(self, tiny_cfg, small_mss, small_disc, rng):
        track = random_track(8, seed=2)
        target = rng.uniform(-0.5, 0.5, 8 * DEFAULT_GRID.u)
        disc = init_discriminator(small_disc, seed=1)
        loss = pipeline_loss(track, target, tiny_cfg, disc, small_disc, small_mss)
        return loss, init_weights(tiny_cfg, seed=0).leaves()

    def test_sampled_coordinates(self, setup):
        loss, point = setup
        assert grad_check(loss, point, max_coords=3) < 1e-4

    @pytest.mark.slow
    def test_every_coordinate(self, setup):
        loss, point = setup
        assert grad_check(loss, point) < 1e-4


# ── Invariants ───────────────────────────────────────────────────────────────


class TestGeneratorInvariants:
    """Properties of the full generator on encoder output."""

    def test_distributions_sum_to_one(self, tiny_cfg, track):
        controls = encode(track, init_weights(tiny_cfg, seed=0), tiny_cfg)
        np.testing.assert_allclose(controls.c.data.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(controls.c_tilde.data.sum(axis=1), 1.0, atol=1e-12)

    def test_masked_harmonics_contribute_nothing(self, tiny_cfg):
        track = random_track(8, f0_hz=3000.0)
        controls = encode(track, init_weights(tiny_cfg, seed=0), tiny_cfg)
        assert not np.any(controls.c.data[:, 2:])
        truncated = SynthControls(
            a=controls.a.data,
            c=controls.c.data[:, :2],
            H=controls.H.data,
            f0_hz=controls.f0_hz,
            a_tilde=controls.a_tilde.data,
            c_tilde=controls.c_tilde.data[:, :2],
        )
        full = synthesize(controls, None, DEFAULT_GRID).harmonic.samples
        np.testing.assert_allclose(full, synthesize(truncated, None, DEFAULT_GRID).harmonic.samples, atol=1e-7)

    def test_branches_add_up(self, tiny_cfg, track):
        controls = encode(track, init_weights(tiny_cfg, seed=0), tiny_cfg)
        decomposed = synthesize(controls, None, DEFAULT_GRID, gamma=tiny_cfg.gamma, seed=4)
        np.testing.assert_allclose(
            decomposed.harmonic.samples + decomposed.noise.samples, decomposed.mixed_pre_post.samples, atol=1e-6
        )

    def test_noise_is_linear_in_gamma(self, tiny_cfg, track):
        H = encode(track, init_weights(tiny_cfg, seed=0), tiny_cfg).H.data
        low = noise_filter_bank(H, DEFAULT_GRID, 0.01, seed=3).samples
        high = noise_filter_bank(H, DEFAULT_GRID, 0.04, seed=3).samples
        np.testing.assert_allclose(high, 4.0 * low, rtol=1e-5, atol=1e-8)


# ── Speed and size ───────────────────────────────────────────────────────────


def vocoder_for(cfg: EncoderConfig) -> Vocoder:
    return Vocoder(Checkpoint(cfg, init_weights(cfg, seed=0)))


@pytest.mark.slow
class TestInferenceSpeed:
    """Per-second-of-input timing on one thread."""

    def test_default_config_is_faster_than_real_time(self):
        report = run_bench(vocoder_for(EncoderConfig()), [1.0, 2.0], repeats=3, threads=1)
        print(f"{report.summary()} (reference point {REFERENCE_S_PER_1S} s)")
        assert report.mean_s_per_1s < 1.0

    def test_halving_hidden_is_faster(self):
        full = run_bench(vocoder_for(EncoderConfig()), [2.0], repeats=3, threads=1)
        half = run_bench(vocoder_for(EncoderConfig(hidden_dim=128)), [2.0], repeats=3, threads=1)
        assert half.mean_s_per_1s < full.mean_s_per_1s


class TestParameterCount:
    """Exact counts across widths."""

    def test_count_matches_initialised_weights(self):
        for hidden in (8, 32):
            cfg = EncoderConfig(hidden_dim=hidden)
            assert generator_param_count(cfg) == sum(v.size for _, v in init_weights(cfg, seed=0).items())

    def test_strictly_monotone_in_width(self):
        counts = [generator_param_count(EncoderConfig(hidden_dim=h)) for h in (8, 16, 32, 64, 128, 256)]
        assert all(a < b for a, b in zip(counts, counts[1:]))

    def test_default_is_near_nine_million(self):
        # target total 9.0M; the residual block layout sets the exact figure
        count = generator_param_count(EncoderConfig())
        assert 0.5 < count / 9.0e6 < 1.5


# ── Noise/harmonic balance ───────────────────────────────────────────────────


def neutral_controls(f0_hz: np.ndarray, n_harmonics: int = 16, n_bands: int = 33) -> SynthControls:
    """What heads emitting all zeros produce: mid-range gains, flat distributions."""
    n = len(f0_hz)
    gain = F.exp_sigmoid(np.zeros(n)).data
    flat = np.full((n, n_harmonics), 1.0 / n_harmonics)
    bands = F.exp_sigmoid(np.zeros((n, n_bands))).data
    return SynthControls(a=gain, c=flat, H=bands, f0_hz=f0_hz, a_tilde=gain, c_tilde=flat)


class TestNoiseHarmonicBalance:
    """The attenuation gamma decides which branch dominates at initialisation."""

    @pytest.fixture
    def controls(self):
        return neutral_controls(synthetic_utterance(seconds=2.0, seed=0).track.f0_hz)

    def test_unattenuated_noise_dominates(self, controls):
        energies = branch_energies(synthesize(controls, None, DEFAULT_GRID, gamma=1.0), controls.f0_hz)
        assert energies.noise > energies.harmonic
        assert energies.noise_to_harmonic_db > 3.0

    def test_attenuated_noise_leaves_harmonics_dominant(self, controls):
        energies = branch_energies(synthesize(controls, None, DEFAULT_GRID, gamma=0.01), controls.f0_hz)
        assert energies.harmonic_voiced > 100.0 * energies.noise_voiced
