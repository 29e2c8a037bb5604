"""Tests for settings, Adam, the checkpoint store and the training loop.

Usage:
    pytest tests/test_training.py -v
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from data.dataset import Dataset
from data.synthetic import synthetic_utterance
from encoder.checkpoint import Checkpoint, encode_checkpoint
from encoder.config import EmaNormalization
from encoder.network import init_weights
from errors import ConfigError, InvalidArgumentError, ShapeError, TrainingDivergedError, UnsupportedFormatError
from losses.discriminator import init_discriminator
from tests.conftest import tiny_encoder_config
from training import (
    CheckpointStore,
    OptimizerState,
    TrainConfig,
    Trainer,
    TrainingSnapshot,
    adam_step,
    load_settings,
    lr_at_epoch,
    parse_config_text,
)
from training.loop import BatchResult, noise_seed
from training.store import decode_snapshot, encode_optimizer_section

DESK_CONFIG = Path(__file__).resolve().parent.parent / "docs" / "desk_overfit.cfg"


# ── Fixtures ─────────────────────────────────────────────────────────────────


@pytest.fixture
def train_cfg() -> TrainConfig:
    """Two short epochs of two-element batches, MSS only."""
    return TrainConfig(
        batch_size=2,
        lam=0.0,
        epochs=2,
        milestones=[100],
        crop_frames=10,
        checkpoint_every=1,
        val_every=1,
    )


@pytest.fixture
def make_trainer(tiny_dataset, tiny_cfg, small_mss, small_disc, train_cfg):
    def build(dataset=None, out_dir=None, **overrides):
        return Trainer(
            dataset if dataset is not None else tiny_dataset,
            replace(train_cfg, **overrides),
            tiny_cfg,
            small_mss,
            small_disc,
            out_dir=out_dir,
        )

    return build


def same_params(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


# ── Settings ─────────────────────────────────────────────────────────────────


class TestConfigText:
    """The flat ``key = value`` format."""

    def test_comments_and_blank_lines(self):
        text = "# header\n\nlr_g = 1e-3  # inline\nepochs=5\n"
        assert parse_config_text(text) == {"lr_g": "1e-3", "epochs": "5"}

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("epochs = 1\nepochs = 2\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="cfg:2"):
            parse_config_text("epochs = 1\nepochs\n", source="cfg")

    def test_empty_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("= 3\n")


class TestSettings:
    """Validated settings and the typed configs built from them."""

    def test_desk_recipe(self):
        settings = load_settings(DESK_CONFIG)
        assert settings.lam == 0.0
        assert settings.milestones == [100000]
        train, enc, mss, disc = settings.configs()
        assert train.epochs == 2000 and train.crop_frames == 400
        assert enc.hidden_dim == 32 and enc.dilations == [1, 2, 4] and enc.post_kernel == 257
        assert mss.fft_sizes == [2048, 1024, 512, 256, 128, 64]
        assert disc.channels == [16, 32, 32, 32]

    def test_overrides_win(self):
        settings = load_settings(DESK_CONFIG, lam=5.0, epochs=3, seed=None)
        assert settings.lam == 5.0 and settings.epochs == 3 and settings.seed == 0

    def test_defaults_without_file(self):
        train, enc, _, _ = load_settings().configs()
        assert train.lam == 5.0 and train.batch_size == 32
        assert enc.hidden_dim == 256 and enc.n_harmonics == 50

    def test_lambda_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("lambda = 2.5\n", encoding="utf-8")
        assert load_settings(path).lam == 2.5

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("learning_rate = 1e-3\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="learning_rate"):
            load_settings(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("batch_size = zero\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="batch_size"):
            load_settings(path)

    def test_dilations_must_match_blocks(self):
        with pytest.raises(ConfigError):
            load_settings(blocks_per_stack=2, dilations="1, 2, 4")

    def test_invalid_fft_size_surfaces_as_config_error(self):
        with pytest.raises(ConfigError):
            load_settings(fft_sizes="100").configs()


class TestTrainConfig:
    """Schedule validation."""

    def test_milestone_gamma_range(self):
        with pytest.raises(ConfigError):
            TrainConfig(milestone_gamma=1.0)

    def test_milestones_increasing(self):
        with pytest.raises(ConfigError):
            TrainConfig(milestones=[10, 10])

    def test_negative_lambda(self):
        with pytest.raises(ConfigError):
            TrainConfig(lam=-1.0)


# ── Optimiser ────────────────────────────────────────────────────────────────


class TestAdam:
    """Bias-corrected Adam."""

    def test_first_step_moves_by_lr(self):
        params = {"w": np.array([0.0, 1.0])}
        state = OptimizerState.zeros_like(params)
        new, state2 = adam_step(params, {"w": np.array([1.0, -2.0])}, state, lr=0.01)
        np.testing.assert_allclose(new["w"], [-0.01, 1.01], rtol=1e-6)
        assert state2.step == 1 and state.step == 0
        np.testing.assert_array_equal(params["w"], [0.0, 1.0])

    def test_second_step_matches_formula(self):
        params = {"w": np.array([0.5])}
        state = OptimizerState.zeros_like(params)
        p1, s1 = adam_step(params, {"w": np.array([1.0])}, state, lr=0.1)
        p2, s2 = adam_step(p1, {"w": np.array([3.0])}, s1, lr=0.1)
        m = 0.9 * 0.1 + 0.1 * 3.0
        v = 0.999 * 0.001 + 0.001 * 9.0
        expected = p1["w"] - 0.1 * (m / (1 - 0.9**2)) / (np.sqrt(v / (1 - 0.999**2)) + 1e-8)
        np.testing.assert_allclose(p2["w"], expected, rtol=1e-12)
        assert s2.step == 2

    def test_missing_gradient_is_zero(self):
        params = {"a": np.ones(2), "b": np.ones(3)}
        new, state = adam_step(params, {"a": np.ones(2)}, OptimizerState.zeros_like(params), lr=0.1)
        np.testing.assert_array_equal(new["b"], params["b"])
        assert state.step == 1

    def test_gradient_shape(self):
        params = {"w": np.zeros(3)}
        with pytest.raises(ShapeError):
            adam_step(params, {"w": np.zeros(2)}, OptimizerState.zeros_like(params), lr=0.1)

    def test_state_must_cover_params(self):
        state = OptimizerState.zeros_like({"w": np.zeros(3)})
        with pytest.raises(ShapeError):
            state.check({"w": np.zeros(3), "u": np.zeros(1)})
        with pytest.raises(ShapeError):
            state.check({"w": np.zeros(4)})

    def test_round_to_float32(self):
        state = OptimizerState(m={"w": np.array([0.1])}, v={"w": np.array([0.2])})
        state.round_to_float32()
        assert state.m["w"][0] == float(np.float32(0.1))


class TestSchedule:
    """Milestone decay."""

    def test_default_milestones(self):
        cfg = TrainConfig()
        assert lr_at_epoch(cfg, 0) == (3e-4, 3e-6)
        assert lr_at_epoch(cfg, 2399) == (3e-4, 3e-6)
        assert lr_at_epoch(cfg, 2400) == pytest.approx((9e-5, 9e-7))
        assert lr_at_epoch(cfg, 6399) == pytest.approx((2.7e-5, 2.7e-7))

    def test_negative_epoch(self):
        with pytest.raises(InvalidArgumentError):
            lr_at_epoch(TrainConfig(), -1)


# ── Store ────────────────────────────────────────────────────────────────────


class TestCheckpointStore:
    """Checkpoint files with optimizer sections, metrics CSVs."""

    @pytest.fixture
    def snapshot(self, tiny_cfg, small_disc):
        weights = init_weights(tiny_cfg, 0).merged(init_discriminator(small_disc, 1))
        gen = dict(weights.subset("enc.", "film.", "head_harm.", "head_noise.", "post.").items())
        opt = OptimizerState.zeros_like(gen)
        opt.m = {k: np.full_like(v, 0.25) for k, v in opt.m.items()}
        opt.step = 7
        return TrainingSnapshot(
            checkpoint=Checkpoint(tiny_cfg, weights, EmaNormalization()),
            epoch=3,
            step=7,
            optimizers={"generator": opt},
        )

    def test_snapshot_round_trip(self, tmp_path, snapshot):
        store = CheckpointStore(tmp_path / "run")
        path = store.save(snapshot)
        assert path.name == "ckpt_000003.ddsp"
        assert store.has_checkpoint()
        back = store.load()
        assert (back.epoch, back.step) == (3, 7)
        opt = back.optimizers["generator"]
        assert opt.step == 7
        assert all(np.all(m == 0.25) for m in opt.m.values())
        assert back.checkpoint.weights.names() == snapshot.checkpoint.weights.names()
        np.testing.assert_allclose(back.checkpoint.weights["post.kernel"], snapshot.checkpoint.weights["post.kernel"], rtol=1e-6)

    def test_plain_weight_file_is_not_a_snapshot(self, snapshot):
        with pytest.raises(UnsupportedFormatError, match="optimizer"):
            decode_snapshot(encode_checkpoint(snapshot.checkpoint))

    def test_bad_optimizer_magic(self, snapshot):
        buf = encode_checkpoint(snapshot.checkpoint) + b"NOTMAGIC" + bytes(12)
        with pytest.raises(UnsupportedFormatError):
            decode_snapshot(buf)

    def test_trailing_bytes(self, snapshot):
        section = encode_optimizer_section(3, 7, snapshot.optimizers)
        with pytest.raises(UnsupportedFormatError, match="trailing"):
            decode_snapshot(encode_checkpoint(snapshot.checkpoint) + section + b"\x00")

    def test_metrics(self, tmp_path):
        store = CheckpointStore(tmp_path)
        store.start_metrics()
        for epoch in (1, 2, 3):
            store.append_metrics(
                {"epoch": epoch, "step": 2 * epoch, "mss": 0.5, "l_g": 0.5, "l_d": 0.0, "lr_g": 3e-4, "lr_d": 3e-6}
            )
        rows = store.read_metrics()
        assert [r["step"] for r in rows] == [2, 4, 6]
        assert rows[0]["lr_g"] == 3e-4

        store.start_metrics(resume_epoch=2)
        assert [r["epoch"] for r in store.read_metrics()] == [1, 2]

    def test_append_requires_start(self, tmp_path):
        with pytest.raises(UnsupportedFormatError):
            CheckpointStore(tmp_path).append_val_metrics(1, 0.5)


# ── Loop ─────────────────────────────────────────────────────────────────────


class TestBatches:
    """Crops, seeds and batch assembly."""

    def test_noise_seed(self):
        assert noise_seed(0, 5, 1) == noise_seed(0, 5, 1)
        assert len({noise_seed(0, 5, 0), noise_seed(0, 5, 1), noise_seed(0, 6, 0), noise_seed(1, 5, 0)}) == 4

    def test_epoch_batches(self, make_trainer):
        trainer = make_trainer()
        batches = trainer.epoch_batches(0)
        assert [len(b) for b in batches] == [2, 1]
        assert sorted(r.id for b in batches for r, _, _ in b) == ["utt0", "utt1", "utt2"]
        assert all(t.n_frames == 10 and len(a) == 800 for b in batches for _, t, a in b)

    def test_epoch_order_is_seeded(self, make_trainer):
        a, b = make_trainer(), make_trainer()
        ids = lambda t, e: [r.id for batch in t.epoch_batches(e) for r, _, _ in batch]
        assert ids(a, 4) == ids(b, 4)

    def test_short_utterances_are_skipped(self, make_trainer, tiny_dataset):
        short = synthetic_utterance(seconds=0.05, seed=9, utt_id="short")
        trainer = make_trainer(dataset=Dataset([*tiny_dataset.records, short]), crop_frames=20)
        ids = [r.id for b in trainer.epoch_batches(0) for r, _, _ in b]
        assert "short" not in ids and len(ids) == 3

    def test_all_too_short(self, make_trainer):
        trainer = make_trainer(crop_frames=500)
        with pytest.raises(InvalidArgumentError):
            trainer.epoch_batches(0)

    def test_needs_training_split(self, make_trainer):
        val_only = Dataset([synthetic_utterance(seconds=0.2, seed=0, split="val")])
        with pytest.raises(InvalidArgumentError):
            make_trainer(dataset=val_only)

    def test_divergence_names_step_and_batch(self, make_trainer):
        trainer = make_trainer()
        crops = trainer.epoch_batches(0)[0]
        trainer.element_losses = lambda track, audio, seed: ({}, {}, {"mss": np.nan, "l_g": np.nan, "l_d": 0.0})
        with pytest.raises(TrainingDivergedError) as info:
            trainer.batch(crops, 11)
        assert info.value.step == 11
        assert info.value.batch_ids == [r.id for r, _, _ in crops]


class TestTrainer:
    """Whole epochs, checkpoints and resume."""

    def test_zero_epochs_writes_initial_checkpoint(self, make_trainer, tmp_path):
        trainer = make_trainer(out_dir=tmp_path, epochs=0)
        snapshot = trainer.run()
        assert snapshot.epoch == 0 and snapshot.step == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["ckpt_000000.ddsp", "latest.ddsp", "metrics.csv", "val_metrics.csv"]
        assert trainer.store.read_metrics() == []

    def test_training_updates_weights_and_logs_rows(self, make_trainer, tmp_path):
        trainer = make_trainer(out_dir=tmp_path, epochs=3, lr_g=3e-3)
        before = trainer.gen
        trainer.run()
        rows = trainer.store.read_metrics()
        assert [(r["epoch"], r["step"]) for r in rows] == [(1, 2), (2, 4), (3, 6)]
        assert all(np.isfinite(r["mss"]) and r["l_d"] == 0.0 for r in rows)
        assert not same_params(before, trainer.gen)
        assert (tmp_path / "ckpt_000003.ddsp").exists()

    def test_runs_are_deterministic(self, make_trainer):
        a, b = make_trainer(), make_trainer()
        a.run()
        b.run()
        assert same_params(a.gen, b.gen)
        assert [r["mss"] for r in a.history] == [r["mss"] for r in b.history]

    def test_resume_matches_uninterrupted_run(self, make_trainer, tmp_path):
        full = make_trainer(out_dir=tmp_path / "full", epochs=3)
        full.run()

        make_trainer(out_dir=tmp_path / "split", epochs=1).run()
        resumed = make_trainer(out_dir=tmp_path / "split", epochs=3)
        snapshot = resumed.run(resume=True)

        assert snapshot.epoch == 3 and snapshot.step == full.step
        assert same_params(full.gen, resumed.gen)
        assert same_params(full.opt_g.m, resumed.opt_g.m)
        assert [r["epoch"] for r in resumed.store.read_metrics()] == [1, 2, 3]

    def test_mss_only_leaves_discriminator_alone(self, make_trainer):
        trainer = make_trainer(epochs=1)
        disc = dict(trainer.disc)
        trainer.run()
        assert same_params(disc, trainer.disc)
        assert trainer.opt_d.step == 0 and trainer.opt_g.step == 2

    def test_discriminator_step_does_not_touch_generator(self, make_trainer):
        trainer = make_trainer(lam=5.0)
        crops = trainer.epoch_batches(0)[0]
        result = trainer.batch(crops, 0)
        assert result.grads_g.keys() == trainer.gen.keys()
        assert result.grads_d.keys() == trainer.disc.keys()
        assert result.l_d > 0.0

        gen, disc = dict(trainer.gen), dict(trainer.disc)
        d_only = BatchResult(
            grads_g={k: np.zeros_like(v) for k, v in result.grads_g.items()},
            grads_d=result.grads_d,
            mss=result.mss,
            l_g=result.l_g,
            l_d=result.l_d,
        )
        trainer.apply(d_only, lr_g=1e-3, lr_d=1e-3)
        assert same_params(gen, trainer.gen)
        assert not same_params(disc, trainer.disc)
        assert trainer.opt_d.step == 1

    def test_validation(self, make_trainer, tiny_dataset):
        assert make_trainer().validate() is None
        val = synthetic_utterance(seconds=0.2, seed=7, utt_id="val0", split="val")
        trainer = make_trainer(dataset=Dataset([*tiny_dataset.records, val]))
        score = trainer.validate()
        assert score is not None and score > 0.0
        assert trainer.validate() == score

    def test_restore_rejects_other_architecture(self, make_trainer, tiny_dataset, small_mss, small_disc, train_cfg):
        snapshot = make_trainer().snapshot()
        other = Trainer(tiny_dataset, train_cfg, tiny_encoder_config(hidden_dim=6), small_mss, small_disc)
        with pytest.raises(InvalidArgumentError):
            other.restore(snapshot)
