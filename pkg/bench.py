"""CPU inference timing: encode + synthesize per second of input.

Random control tracks are generated per duration, so no corpus is needed.
Timing covers feature upsampling and every generator branch; file I/O is
excluded.
"""

from __future__ import annotations

import csv
import io
import logging
import time

import numpy as np
from pydantic import BaseModel, Field, model_validator
from threadpoolctl import threadpool_limits

from config import FRAME_RATE_HZ, config
from encoder.config import EMA_CHANNELS, ControlTrack
from errors import InvalidArgumentError
from synth.vocoder import Vocoder

logger = logging.getLogger(__name__)


class BenchPoint(BaseModel):
    """Timings for one input duration."""

    input_seconds: float
    mean_s: float
    mean_s_per_1s: float
    std_s_per_1s: float


class BenchReport(BaseModel):
    """Inference-speed summary over all durations and repeats."""

    model_params: int
    input_seconds: list[float]
    mean_s_per_1s: float
    std_s_per_1s: float
    repeats: int = Field(ge=1)
    threads: int = Field(default=1, ge=1)
    points: list[BenchPoint] = []
    samples_s_per_1s: list[float] = []

    @model_validator(mode="after")
    def _check_points(self) -> "BenchReport":
        if self.points and len(self.points) != len(self.input_seconds):
            raise ValueError("one point per input duration")
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(BenchPoint.model_fields), lineterminator="\n")
        writer.writeheader()
        for point in self.points:
            writer.writerow(point.model_dump())
        return buf.getvalue()

    def summary(self) -> str:
        return (
            f"{self.model_params} params, {len(self.input_seconds)} durations x {self.repeats} repeats, "
            f"{self.threads} thread(s): {self.mean_s_per_1s:.4f} +/- {self.std_s_per_1s:.4f} s per 1 s of input"
        )


def durations(min_s: float = 0.5, max_s: float = 10.0, step_s: float = 0.5) -> list[float]:
    """``min_s, min_s + step_s, ... <= max_s``."""
    if min_s <= 0 or step_s <= 0 or max_s < min_s:
        raise InvalidArgumentError(f"bad duration range {min_s}..{max_s} step {step_s}")
    count = int(np.floor((max_s - min_s) / step_s + 1e-9)) + 1
    return [round(min_s + i * step_s, 6) for i in range(count)]


def random_track(seconds: float, rng: np.random.Generator) -> ControlTrack:
    """Plausible random controls: smooth EMA, voiced F0 contour, loudness."""
    n_frames = max(1, int(round(seconds * FRAME_RATE_HZ)))
    t = np.arange(n_frames) / FRAME_RATE_HZ
    phases = rng.uniform(0, 2 * np.pi, EMA_CHANNELS)
    rates = rng.uniform(1.0, 6.0, EMA_CHANNELS)
    ema = np.sin(2 * np.pi * rates[None, :] * t[:, None] + phases[None, :])
    f0 = 120.0 + 30.0 * np.sin(2 * np.pi * 0.5 * t) + rng.normal(0.0, 1.0, n_frames)
    loudness = rng.uniform(0.05, 0.5, n_frames)
    return ControlTrack(ema, np.maximum(f0, 0.0), loudness)


def run_bench(
    vocoder: Vocoder,
    input_seconds: list[float],
    repeats: int = 50,
    threads: int | None = None,
    seed: int = 0,
) -> BenchReport:
    """Time ``vocoder.run`` ``repeats`` times per duration."""
    if repeats < 1:
        raise InvalidArgumentError(f"repeats must be >= 1, got {repeats}")
    threads = threads or config.bench_threads
    rng = np.random.default_rng(seed)
    logger.info(f"Benchmark: {vocoder.param_count} params, {threads} thread(s), {repeats} repeats")

    normalized: list[float] = []
    points: list[BenchPoint] = []
    with threadpool_limits(limits=threads):
        for seconds in input_seconds:
            per_1s = []
            for r in range(repeats):
                track = random_track(seconds, rng)
                start = time.perf_counter()
                vocoder.run(track, seed=seed + r)
                elapsed = time.perf_counter() - start
                per_1s.append(elapsed / seconds)
            per_1s_arr = np.asarray(per_1s)
            points.append(
                BenchPoint(
                    input_seconds=seconds,
                    mean_s=float(per_1s_arr.mean() * seconds),
                    mean_s_per_1s=float(per_1s_arr.mean()),
                    std_s_per_1s=float(per_1s_arr.std()),
                )
            )
            normalized.extend(per_1s)
            logger.debug(f"{seconds:.1f} s: {per_1s_arr.mean():.4f} s per 1 s")

    return BenchReport(
        model_params=vocoder.param_count,
        input_seconds=list(input_seconds),
        mean_s_per_1s=float(np.mean(normalized)),
        std_s_per_1s=float(np.std(normalized)),
        repeats=repeats,
        threads=threads,
        points=points,
        samples_s_per_1s=normalized,
    )
