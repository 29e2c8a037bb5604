"""End-to-end tests of the command-line interface and the benchmark.

Usage:
    pytest tests/test_cli.py -v
"""

import csv
import io

import numpy as np
import pytest

from bench import durations, run_bench
from cli import main
from data.features import read_features, write_features
from data.synthetic import synthetic_utterance
from data.wav import read_wav, write_wav
from encoder.checkpoint import Checkpoint, save_checkpoint
from encoder.config import EMA_CHANNELS, INPUT_CHANNELS, ControlTrack, EncoderConfig
from encoder.network import generator_param_count, init_weights
from errors import InvalidArgumentError
from losses.discriminator import DiscriminatorConfig, discriminator_param_count, init_discriminator
from synth.vocoder import Vocoder
from tests.conftest import tiny_encoder_config

QUIET = ["--log-level", "WARNING"]

TINY_TRAIN_CFG = """\
# tiny run for the CLI tests
batch_size = 2
crop_frames = 10
epochs = 1
lambda = 0
checkpoint_every = 1
hidden_dim = 4
n_stacks = 1
blocks_per_stack = 2
dilations = 1, 2
n_harmonics = 4
n_bands = 5
mlp_depth = 2
post_kernel = 9
fft_sizes = 256, 64
disc_fft_sizes = 128, 64
disc_channels = 2, 3, 3, 3
"""


# ── Fixtures ─────────────────────────────────────────────────────────────────


@pytest.fixture
def checkpoint_path(tmp_path):
    cfg = tiny_encoder_config()
    path = tmp_path / "tiny.ddsp"
    save_checkpoint(path, Checkpoint(cfg, init_weights(cfg, seed=0)))
    return path


@pytest.fixture
def features_path(tmp_path):
    record = synthetic_utterance(seconds=0.1, seed=0)
    path = tmp_path / "utt.feat"
    write_features(path, record.track.stacked())
    return path


def error_line(capsys) -> str:
    return capsys.readouterr().err.strip().splitlines()[-1]


# ── Commands ─────────────────────────────────────────────────────────────────


class TestParams:
    """Parameter-count CSV."""

    def test_csv(self, capsys):
        assert main([*QUIET, "params", "--hidden", "16,8"]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["hidden_dim", "generator_params", "discriminator_params"]
        assert [int(r[0]) for r in rows[1:]] == [16, 8]
        assert int(rows[1][1]) == generator_param_count(EncoderConfig(hidden_dim=16))
        assert int(rows[1][1]) > int(rows[2][1])

    def test_from_checkpoint(self, capsys, checkpoint_path):
        assert main([*QUIET, "params", "--hidden", "4", "--checkpoint", str(checkpoint_path)]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert int(rows[1][1]) == generator_param_count(tiny_encoder_config())
        assert int(rows[1][2]) == discriminator_param_count(DiscriminatorConfig())

    def test_stored_discriminator_is_counted(self, tmp_path, capsys):
        cfg = tiny_encoder_config()
        disc_cfg = DiscriminatorConfig(fft_sizes=[128, 64], channels=[2, 3, 3, 3])
        weights = init_weights(cfg, seed=0).merged(init_discriminator(disc_cfg, seed=1))
        path = tmp_path / "with_disc.ddsp"
        save_checkpoint(path, Checkpoint(cfg, weights))
        assert main([*QUIET, "params", "--hidden", "4", "--checkpoint", str(path)]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert int(rows[1][2]) == discriminator_param_count(disc_cfg)


class TestExtract:
    """WAV + F0 + EMA -> 14-channel features."""

    def test_builds_feature_file(self, tmp_path):
        record = synthetic_utterance(seconds=0.1, seed=1)
        write_wav(tmp_path / "a.wav", record.audio)
        write_features(tmp_path / "a.f0", record.track.f0_hz[:, None])
        write_features(tmp_path / "a.ema", record.track.ema[:15])
        args = ["extract", "--wav", str(tmp_path / "a.wav"), "--f0", str(tmp_path / "a.f0"),
                "--ema", str(tmp_path / "a.ema"), "--out", str(tmp_path / "a.feat")]
        assert main([*QUIET, *args]) == 0
        features = read_features(tmp_path / "a.feat")
        assert features.shape == (15, INPUT_CHANNELS)

    def test_wrong_ema_channels(self, tmp_path, capsys):
        record = synthetic_utterance(seconds=0.1, seed=1)
        write_wav(tmp_path / "a.wav", record.audio)
        write_features(tmp_path / "a.f0", record.track.f0_hz[:, None])
        write_features(tmp_path / "a.ema", np.zeros((20, 1)))
        args = ["extract", "--wav", str(tmp_path / "a.wav"), "--f0", str(tmp_path / "a.f0"),
                "--ema", str(tmp_path / "a.ema"), "--out", str(tmp_path / "a.feat")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: unsupported-format:")


class TestSynth:
    """Features + checkpoint -> WAV."""

    def test_writes_audio(self, tmp_path, checkpoint_path, features_path):
        out = tmp_path / "out.wav"
        args = ["synth", "--features", str(features_path), "--checkpoint", str(checkpoint_path), "--out", str(out)]
        assert main([*QUIET, *args]) == 0
        audio = read_wav(out)
        assert len(audio) == 20 * 80

    def test_matches_vocoder(self, tmp_path, checkpoint_path, features_path):
        out = tmp_path / "out.wav"
        args = ["synth", "--features", str(features_path), "--checkpoint", str(checkpoint_path),
                "--out", str(out), "--seed", "3"]
        assert main([*QUIET, *args]) == 0
        track = ControlTrack.from_stacked(read_features(features_path))
        expected = Vocoder.from_path(checkpoint_path).run(track, seed=3).final.samples
        expected = np.clip(expected, -1.0, 32767 / 32768)
        assert np.max(np.abs(read_wav(out).samples - expected)) <= 0.5 / 32768 + 1e-9

    def test_decompose(self, tmp_path, checkpoint_path, features_path):
        parts = tmp_path / "parts"
        args = ["synth", "--features", str(features_path), "--checkpoint", str(checkpoint_path),
                "--out", str(tmp_path / "out.wav"), "--decompose", str(parts)]
        assert main([*QUIET, *args]) == 0
        assert sorted(p.name for p in parts.iterdir()) == ["harmonic.wav", "mixed.wav", "noise.wav"]

    def test_missing_file(self, tmp_path, checkpoint_path, capsys):
        args = ["synth", "--features", str(tmp_path / "nope.feat"), "--checkpoint", str(checkpoint_path),
                "--out", str(tmp_path / "out.wav")]
        assert main([*QUIET, *args]) == 1
        line = error_line(capsys)
        assert line.startswith("error: invalid-argument:") and "--features" in line

    def test_ema_only_features(self, tmp_path, checkpoint_path, capsys):
        path = tmp_path / "ema.feat"
        write_features(path, np.zeros((20, EMA_CHANNELS)))
        args = ["synth", "--features", str(path), "--checkpoint", str(checkpoint_path), "--out", str(tmp_path / "o.wav")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: config-error:")

    def test_not_a_checkpoint(self, tmp_path, features_path, capsys):
        bogus = tmp_path / "bogus.ddsp"
        bogus.write_bytes(b"not a checkpoint")
        args = ["synth", "--features", str(features_path), "--checkpoint", str(bogus), "--out", str(tmp_path / "o.wav")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: unsupported-format:")


class TestFilterResponse:
    """Post-filter magnitude response CSV."""

    def test_identity_kernel_is_flat(self, tmp_path, checkpoint_path):
        out = tmp_path / "resp.csv"
        args = ["filter-response", "--checkpoint", str(checkpoint_path), "--out", str(out), "--points", "4"]
        assert main([*QUIET, *args]) == 0
        rows = list(csv.reader(out.read_text(encoding="utf-8").splitlines()))
        assert rows[0] == ["omega_over_pi", "magnitude"]
        np.testing.assert_allclose([float(r[0]) for r in rows[1:]], [0.0, 1 / 3, 2 / 3, 1.0])
        np.testing.assert_allclose([float(r[1]) for r in rows[1:]], 1.0, atol=1e-6)

    def test_without_post_conv(self, tmp_path, capsys):
        cfg = tiny_encoder_config(use_post_conv=False)
        path = tmp_path / "nopost.ddsp"
        save_checkpoint(path, Checkpoint(cfg, init_weights(cfg, seed=0)))
        args = ["filter-response", "--checkpoint", str(path), "--out", str(tmp_path / "r.csv")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: config-error:")


class TestEvaluate:
    """M-STFT distance between two files."""

    def test_identical_files(self, tmp_path, capsys):
        write_wav(tmp_path / "a.wav", synthetic_utterance(seconds=0.1, seed=0).audio)
        args = ["evaluate", "--reference", str(tmp_path / "a.wav"), "--synth", str(tmp_path / "a.wav"),
                "--fft-sizes", "256,64"]
        assert main([*QUIET, *args]) == 0
        assert capsys.readouterr().out == "mstft,0.0\n"

    def test_too_short_for_default_sizes(self, tmp_path, capsys):
        write_wav(tmp_path / "a.wav", synthetic_utterance(seconds=0.1, seed=0).audio)
        args = ["evaluate", "--reference", str(tmp_path / "a.wav"), "--synth", str(tmp_path / "a.wav")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: invalid-argument:")


class TestTrainCommand:
    """Manifest + config file -> run directory."""

    def test_train_then_synth(self, tmp_path, features_path):
        lines = []
        for i in range(3):
            record = synthetic_utterance(seconds=0.1, seed=i, utt_id=f"u{i}")
            write_wav(tmp_path / f"u{i}.wav", record.audio)
            write_features(tmp_path / f"u{i}.feat", record.track.stacked())
            lines.append(f"u{i}\tu{i}.wav\tu{i}.feat")
        (tmp_path / "manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (tmp_path / "run.cfg").write_text(TINY_TRAIN_CFG, encoding="utf-8")

        run = tmp_path / "run"
        args = ["train", "--manifest", str(tmp_path / "manifest.tsv"), "--config", str(tmp_path / "run.cfg"),
                "--out", str(run)]
        assert main([*QUIET, *args]) == 0
        assert (run / "latest.ddsp").exists() and (run / "ckpt_000001.ddsp").exists()

        args = ["synth", "--features", str(features_path), "--checkpoint", str(run / "latest.ddsp"),
                "--out", str(tmp_path / "out.wav")]
        assert main([*QUIET, *args]) == 0
        assert len(read_wav(tmp_path / "out.wav")) == 20 * 80

    def test_bad_config(self, tmp_path, capsys):
        (tmp_path / "m.tsv").write_text("u0\ta.wav\ta.feat\n", encoding="utf-8")
        (tmp_path / "run.cfg").write_text("epochs = many\n", encoding="utf-8")
        args = ["train", "--manifest", str(tmp_path / "m.tsv"), "--config", str(tmp_path / "run.cfg"),
                "--out", str(tmp_path / "run")]
        assert main([*QUIET, *args]) == 1
        assert error_line(capsys).startswith("error: config-error:")


# ── Benchmark ────────────────────────────────────────────────────────────────


class TestBench:
    """Timing protocol."""

    def test_durations(self):
        assert durations(0.5, 2.0, 0.5) == [0.5, 1.0, 1.5, 2.0]
        assert durations(0.5, 10.0, 0.5)[-1] == 10.0
        with pytest.raises(InvalidArgumentError):
            durations(1.0, 0.5, 0.5)

    def test_report(self, checkpoint_path):
        report = run_bench(Vocoder.from_path(checkpoint_path), [0.05, 0.1], repeats=2, threads=1)
        assert report.model_params == generator_param_count(tiny_encoder_config())
        assert [p.input_seconds for p in report.points] == [0.05, 0.1]
        assert report.mean_s_per_1s > 0.0
        assert len(report.samples_s_per_1s) == 4
        assert report.mean_s_per_1s == pytest.approx(np.mean(report.samples_s_per_1s))
        assert report.std_s_per_1s == pytest.approx(np.std(report.samples_s_per_1s))
        assert report.to_csv().splitlines()[0] == "input_seconds,mean_s,mean_s_per_1s,std_s_per_1s"

    def test_single_utterance_has_zero_spread(self, checkpoint_path):
        report = run_bench(Vocoder.from_path(checkpoint_path), [0.05], repeats=1, threads=1)
        assert report.std_s_per_1s == 0.0

    def test_command(self, checkpoint_path, capsys):
        args = ["bench", "--checkpoint", str(checkpoint_path), "--min-s", "0.05", "--max-s", "0.1",
                "--step-s", "0.05", "--repeats", "1", "--threads", "1"]
        assert main([*QUIET, *args]) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 3
