"""
Training loop: crops, per-element tapes, 1:1 discriminator/generator Adam steps.

Usage:
    settings = load_settings("docs/desk_overfit.cfg")
    trainer = Trainer.from_settings(dataset, settings, out_dir="runs/desk")
    snapshot = trainer.run()

Each batch element is encoded and synthesized on its own tape. Gradients of
``L_G`` (generator leaves) and ``L_D`` (discriminator leaves) are taken from
the same tape against the current discriminator, summed in batch order and
averaged; then the discriminator steps, then the generator. Parameters and
Adam moments are rounded to float32 after every step so a run resumed from a
checkpoint continues bit-for-bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from autodiff.context import no_grad, recording
from autodiff.gradcheck import backward
from autodiff.tensor import Tape, Tensor
from data.dataset import Dataset, UtteranceRecord, align_and_crop
from dsp.types import DEFAULT_GRID, AudioBuffer, FrameGrid
from encoder.checkpoint import Checkpoint
from encoder.config import ControlTrack, EmaNormalization, EncoderConfig
from encoder.network import encode, init_weights
from encoder.weights import WeightSet
from errors import CropTooShort, InvalidArgumentError, NumericError, TrainingDivergedError
from losses.adversarial import total_losses
from losses.discriminator import DiscriminatorConfig, init_discriminator
from losses.spectral import MssConfig, mss_distance
from synth.generator import render, synthesize
from training.optim import OptimizerState, adam_step, lr_at_epoch
from training.settings import TrainConfig, TrainSettings
from training.store import CheckpointStore, TrainingSnapshot

logger = logging.getLogger(__name__)

GENERATOR = "generator"
DISCRIMINATOR = "discriminator"


@dataclass
class BatchResult:
    """Averaged gradients and losses of one batch."""

    grads_g: dict[str, np.ndarray]
    grads_d: dict[str, np.ndarray]
    mss: float
    l_g: float
    l_d: float


def noise_seed(seed: int, step: int, element: int) -> int:
    """Per-element noise seed, independent of batch composition elsewhere."""
    return int(np.random.SeedSequence([seed, step, element]).generate_state(1, dtype=np.uint64)[0])


def round_float32(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.asarray(v, dtype=np.float32).astype(np.float64) for k, v in params.items()}


class Trainer:
    """
    Owns the parameters and optimizer states of one run.

    Generator and discriminator parameters are kept apart, so a
    discriminator step cannot touch generator weights and vice versa.
    """

    def __init__(
        self,
        dataset: Dataset,
        train_cfg: TrainConfig,
        enc_cfg: EncoderConfig,
        mss_cfg: MssConfig,
        disc_cfg: DiscriminatorConfig,
        out_dir: str | Path | None = None,
        grid: FrameGrid = DEFAULT_GRID,
        show_progress: bool = False,
    ):
        if not dataset.split("train"):
            raise InvalidArgumentError("dataset has no training utterances")
        self.dataset = dataset
        self.train_cfg = train_cfg
        self.enc_cfg = enc_cfg
        self.mss_cfg = mss_cfg
        self.disc_cfg = disc_cfg
        self.grid = grid
        self.store = CheckpointStore(out_dir) if out_dir is not None else None
        self.show_progress = show_progress

        self.norm: EmaNormalization = dataset.fit_ema_norm()
        self.gen: dict[str, np.ndarray] = {}
        self.disc: dict[str, np.ndarray] = {}
        self.opt_g = OptimizerState()
        self.opt_d = OptimizerState()
        self.epoch = 0
        self.step = 0
        self.history: list[dict] = []
        self._last_finite: dict[str, float] = {}
        self.reset()

    @classmethod
    def from_settings(
        cls,
        dataset: Dataset,
        settings: TrainSettings,
        out_dir: str | Path | None = None,
        **kwargs,
    ) -> "Trainer":
        train_cfg, enc_cfg, mss_cfg, disc_cfg = settings.configs()
        return cls(dataset, train_cfg, enc_cfg, mss_cfg, disc_cfg, out_dir=out_dir, **kwargs)

    @property
    def adversarial(self) -> bool:
        return self.train_cfg.lam > 0

    # ── State ────────────────────────────────────────────────────────────────

    def reset(self) -> None:
        """Fresh seeded weights and zeroed optimizer state."""
        seed = self.train_cfg.seed
        self.gen = round_float32(dict(init_weights(self.enc_cfg, seed).items()))
        self.disc = round_float32(dict(init_discriminator(self.disc_cfg, seed + 1).items()))
        self.opt_g = OptimizerState.zeros_like(self.gen)
        self.opt_d = OptimizerState.zeros_like(self.disc)
        self.epoch = 0
        self.step = 0

    def snapshot(self) -> TrainingSnapshot:
        weights = WeightSet(self.gen).merged(WeightSet(self.disc))
        return TrainingSnapshot(
            checkpoint=Checkpoint(cfg=self.enc_cfg, weights=weights, norm=self.norm),
            epoch=self.epoch,
            step=self.step,
            optimizers={GENERATOR: self.opt_g, DISCRIMINATOR: self.opt_d},
        )

    def restore(self, snapshot: TrainingSnapshot) -> None:
        ckpt = snapshot.checkpoint
        if ckpt.cfg != self.enc_cfg:
            raise InvalidArgumentError("checkpoint encoder config differs from the training config")
        self.gen = dict(ckpt.generator_weights.items())
        self.disc = dict(ckpt.discriminator_weights.items())
        self.norm = ckpt.norm
        self.opt_g = snapshot.optimizers[GENERATOR]
        self.opt_d = snapshot.optimizers[DISCRIMINATOR]
        self.opt_g.check(self.gen)
        self.opt_d.check(self.disc)
        self.epoch = snapshot.epoch
        self.step = snapshot.step

    # ── Batches ──────────────────────────────────────────────────────────────

    def epoch_batches(self, epoch: int) -> list[list[tuple[UtteranceRecord, ControlTrack, AudioBuffer]]]:
        """One random crop per training utterance, shuffled into batches."""
        cfg = self.train_cfg
        rng = np.random.default_rng([cfg.seed, epoch])
        train = self.dataset.split("train")
        crops = []
        for idx in rng.permutation(len(train)):
            record = train[idx]
            try:
                track, audio = align_and_crop(record, cfg.crop_frames, rng, self.grid)
            except CropTooShort as e:
                logger.warning(f"Skipping {record.id}: {e}")
                continue
            crops.append((record, track, audio))
        if not crops:
            raise InvalidArgumentError(f"no training utterance has {cfg.crop_frames} frames")
        return [crops[i:i + cfg.batch_size] for i in range(0, len(crops), cfg.batch_size)]

    def element_losses(
        self,
        track: ControlTrack,
        audio: AudioBuffer,
        seed: int,
    ) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], dict[str, float]]:
        """Forward and backward for a single crop on its own tape."""
        tape = Tape()
        g_leaves = {k: Tensor(v, requires_grad=True, name=k) for k, v in self.gen.items()}
        d_leaves = {k: Tensor(v, requires_grad=True, name=k) for k, v in self.disc.items()}
        with recording(tape):
            controls = encode(track, g_leaves, self.enc_cfg, norm=self.norm, sample_rate_hz=self.grid.sample_rate_hz)
            kernel = g_leaves["post.kernel"] if self.enc_cfg.use_post_conv else None
            branches = render(controls, kernel, self.grid, gamma=self.enc_cfg.gamma, seed=seed)
            terms = total_losses(audio, branches.final, d_leaves, self.disc_cfg, self.train_cfg.lam, self.mss_cfg)
        values = terms.values()

        g_grads = backward(tape, terms.l_g, wrt=g_leaves.values())
        grads_g = {k: g_grads[t] for k, t in g_leaves.items()}
        grads_d: dict[str, np.ndarray] = {}
        if self.adversarial:
            d_grads = backward(tape, terms.l_d, wrt=d_leaves.values())
            grads_d = {k: d_grads[t] for k, t in d_leaves.items()}
        return grads_g, grads_d, values

    def batch(self, crops: list[tuple[UtteranceRecord, ControlTrack, AudioBuffer]], step: int) -> BatchResult:
        ids = [record.id for record, _, _ in crops]
        sums_g = {k: np.zeros_like(v) for k, v in self.gen.items()}
        sums_d = {k: np.zeros_like(v) for k, v in self.disc.items()}
        totals = {"mss": 0.0, "l_g": 0.0, "l_d": 0.0}
        try:
            for b, (_, track, audio) in enumerate(crops):
                grads_g, grads_d, values = self.element_losses(track, audio, noise_seed(self.train_cfg.seed, step, b))
                if not all(np.isfinite(v) for v in values.values()):
                    raise NumericError(f"non-finite loss {values}")
                for k, g in grads_g.items():
                    sums_g[k] += g
                for k, g in grads_d.items():
                    sums_d[k] += g
                for k in totals:
                    totals[k] += values[k]
        except NumericError as e:
            logger.error(
                f"Training diverged at step {step}, batch {ids}: {e}; last finite losses {self._last_finite}"
            )
            raise TrainingDivergedError(str(e), step=step, batch_ids=ids) from None

        n = float(len(crops))
        return BatchResult(
            grads_g={k: v / n for k, v in sums_g.items()},
            grads_d={k: v / n for k, v in sums_d.items()},
            mss=totals["mss"] / n,
            l_g=totals["l_g"] / n,
            l_d=totals["l_d"] / n,
        )

    def apply(self, result: BatchResult, lr_g: float, lr_d: float) -> None:
        """Discriminator step, then generator step."""
        cfg = self.train_cfg
        if self.adversarial:
            disc, self.opt_d = adam_step(self.disc, result.grads_d, self.opt_d, lr_d, cfg.beta1, cfg.beta2)
            self.disc = round_float32(disc)
            self.opt_d.round_to_float32()
        gen, self.opt_g = adam_step(self.gen, result.grads_g, self.opt_g, lr_g, cfg.beta1, cfg.beta2)
        self.gen = round_float32(gen)
        self.opt_g.round_to_float32()

    # ── Epochs ───────────────────────────────────────────────────────────────

    def train_epoch(self) -> dict:
        """Train epoch ``self.epoch`` and return its metrics row."""
        lr_g, lr_d = lr_at_epoch(self.train_cfg, self.epoch)
        sums = {"mss": 0.0, "l_g": 0.0, "l_d": 0.0}
        batches = self.epoch_batches(self.epoch)
        for crops in batches:
            result = self.batch(crops, self.step)
            self.apply(result, lr_g, lr_d)
            self.step += 1
            self._last_finite = {"mss": result.mss, "l_g": result.l_g, "l_d": result.l_d}
            logger.debug(f"step {self.step}: mss {result.mss:.5f} l_g {result.l_g:.5f} l_d {result.l_d:.5f}")
            for k in sums:
                sums[k] += getattr(result, k)
        self.epoch += 1
        n = len(batches)
        row = {
            "epoch": self.epoch,
            "step": self.step,
            "mss": sums["mss"] / n,
            "l_g": sums["l_g"] / n,
            "l_d": sums["l_d"] / n,
            "lr_g": lr_g,
            "lr_d": lr_d,
        }
        logger.info(
            f"epoch {row['epoch']} step {row['step']}: mss {row['mss']:.5f} l_g {row['l_g']:.5f} "
            f"l_d {row['l_d']:.5f} lr_g {lr_g:.3g} lr_d {lr_d:.3g}"
        )
        return row

    def validate(self) -> float | None:
        """Mean MSS over full-length validation utterances (fixed noise seed)."""
        records = self.dataset.split("val")
        longest = max(self.mss_cfg.fft_sizes)
        records = [r for r in records if len(r.audio) >= longest]
        if not records:
            return None
        gen = WeightSet(self.gen)
        kernel = gen["post.kernel"] if self.enc_cfg.use_post_conv else None
        scores = []
        with no_grad():
            for record in records:
                controls = encode(record.track, gen, self.enc_cfg, norm=self.norm, sample_rate_hz=self.grid.sample_rate_hz)
                decomposed = synthesize(controls, kernel, self.grid, gamma=self.enc_cfg.gamma, seed=self.train_cfg.seed)
                scores.append(mss_distance(record.audio, decomposed.final, self.mss_cfg))
        return float(np.mean(scores))

    def run(self, resume: bool = False, on_epoch: Callable[[dict], None] | None = None) -> TrainingSnapshot:
        """Train up to ``train_cfg.epochs`` epochs.

        With ``resume`` and an existing ``latest.ddsp`` in the output
        directory, training continues from that checkpoint.
        """
        cfg = self.train_cfg
        if resume and self.store is not None and self.store.has_checkpoint():
            self.restore(self.store.load())
            self.store.start_metrics(resume_epoch=self.epoch)
        elif self.store is not None and self.epoch == 0:
            self.store.start_metrics()
            self.store.save(self.snapshot())
        elif self.store is not None and not self.store.metrics_path.exists():
            self.store.start_metrics()

        logger.info(
            f"Training epochs {self.epoch}..{cfg.epochs} on {len(self.dataset.split('train'))} utterances "
            f"(batch {cfg.batch_size}, lambda {cfg.lam}, {'adversarial' if self.adversarial else 'MSS only'})"
        )
        progress = Progress(
            TextColumn("[bold blue]training"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("{task.fields[status]}"),
            TimeElapsedColumn(),
            console=Console(stderr=True),
            disable=not self.show_progress,
        )
        with progress:
            task = progress.add_task("epochs", total=cfg.epochs, completed=self.epoch, status="")
            while self.epoch < cfg.epochs:
                row = self.train_epoch()
                self.history.append(row)
                if self.store is not None:
                    self.store.append_metrics(row)
                if self.epoch % cfg.val_every == 0:
                    val = self.validate()
                    if val is not None:
                        logger.info(f"epoch {self.epoch}: val_mss {val:.5f}")
                        if self.store is not None:
                            self.store.append_val_metrics(self.epoch, val)
                if self.store is not None and (self.epoch % cfg.checkpoint_every == 0 or self.epoch == cfg.epochs):
                    self.store.save(self.snapshot())
                if on_epoch is not None:
                    on_epoch(row)
                progress.update(task, completed=self.epoch, status=f"mss {row['mss']:.4f}")
        return self.snapshot()


def train_loop(
    dataset: Dataset,
    settings: TrainSettings,
    out_dir: str | Path | None = None,
    resume: bool = False,
    show_progress: bool = False,
) -> TrainingSnapshot:
    """Build a :class:`Trainer` from settings and run it."""
    trainer = Trainer.from_settings(dataset, settings, out_dir=out_dir, show_progress=show_progress)
    return trainer.run(resume=resume)
