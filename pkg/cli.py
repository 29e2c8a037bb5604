#!/usr/bin/env python3
"""Command-line interface for the articulatory vocoder.

Usage:
    python cli.py extract --wav a.wav --f0 a.f0 --ema a.ema --out a.feat
    python cli.py synth --features a.feat --checkpoint run/latest.ddsp --out a_hat.wav
    python cli.py train --manifest data/manifest.tsv --config docs/desk_overfit.cfg --out runs/desk
    python cli.py bench --checkpoint run/latest.ddsp --repeats 5
    python cli.py filter-response --checkpoint run/latest.ddsp --out response.csv
    python cli.py params --hidden 256,128,64
    python cli.py evaluate --reference a.wav --synth a_hat.wav

Every failure prints one line ``error: <kind>: <message>`` on stderr and
exits 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from rich.console import Console
from rich.table import Table
from rich.theme import Theme

from config import config
from errors import ConfigError, InvalidArgumentError, VocoderError
from logging_setup import configure_logging

custom_theme = Theme({
    "info": "dim cyan",
    "ok": "bold green",
    "error": "bold red",
    "system": "dim",
})

console = Console(theme=custom_theme, stderr=True)
err_console = Console(stderr=True, soft_wrap=True, highlight=False)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.strip("[]").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _require_file(flag: str, path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InvalidArgumentError(f"{flag}: file not found: {path}")
    return p


# ── Commands ─────────────────────────────────────────────────────────────────


def cmd_extract(args) -> int:
    """WAV + F0 + EMA -> combined 14-channel feature file."""
    from data.features import assemble_track, read_features, write_features
    from data.wav import read_wav
    from dsp.types import DEFAULT_GRID
    from encoder.config import EMA_CHANNELS

    audio = read_wav(_require_file("--wav", args.wav))
    f0 = read_features(_require_file("--f0", args.f0), channels=1)
    ema = read_features(_require_file("--ema", args.ema), channels=EMA_CHANNELS)
    track, _ = assemble_track(audio, ema, f0, DEFAULT_GRID)
    write_features(args.out, track.stacked())
    console.print(f"[ok]✓[/] {args.out}: {track.n_frames} frames")
    return 0


def cmd_synth(args) -> int:
    """Features + checkpoint -> WAV (optionally every branch)."""
    from data.features import read_features
    from data.wav import write_wav
    from encoder.config import INPUT_CHANNELS, ControlTrack
    from synth.generator import branch_energies
    from synth.vocoder import Vocoder

    features = read_features(_require_file("--features", args.features))
    if features.shape[1] != INPUT_CHANNELS:
        raise ConfigError(
            f"checkpoint expects {INPUT_CHANNELS}-channel features, {args.features} has {features.shape[1]}"
        )
    vocoder = Vocoder.from_path(_require_file("--checkpoint", args.checkpoint))
    track = ControlTrack.from_stacked(features)
    decomposed = vocoder.run(track, seed=args.seed)
    write_wav(args.out, decomposed.final)
    console.print(f"[ok]✓[/] {args.out}: {len(decomposed.final)} samples ({decomposed.final.duration_s:.3f} s)")

    if args.decompose:
        out_dir = Path(args.decompose)
        write_wav(out_dir / "harmonic.wav", decomposed.harmonic)
        write_wav(out_dir / "noise.wav", decomposed.noise)
        write_wav(out_dir / "mixed.wav", decomposed.mixed_pre_post)
        energies = branch_energies(decomposed, f0_hz=track.f0_hz)
        table = Table(title="Branch energy (mean square)")
        table.add_column("branch")
        table.add_column("all frames", justify="right")
        table.add_column("voiced frames", justify="right")
        table.add_row("harmonic", f"{energies.harmonic:.3e}", f"{energies.harmonic_voiced:.3e}")
        table.add_row("noise", f"{energies.noise:.3e}", f"{energies.noise_voiced:.3e}")
        console.print(table)
        console.print(f"[info]noise/harmonic: {energies.noise_to_harmonic_db:.2f} dB[/]")
    return 0


def cmd_train(args) -> int:
    """Train from a manifest and a key = value config file."""
    from data.dataset import Dataset
    from training.loop import Trainer
    from training.settings import load_settings

    settings = load_settings(
        _require_file("--config", args.config),
        lam=args.lam,
        epochs=args.epochs,
        seed=args.seed,
    )
    dataset = Dataset.from_manifest(_require_file("--manifest", args.manifest), seed=settings.seed)
    trainer = Trainer.from_settings(dataset, settings, out_dir=args.out, show_progress=sys.stderr.isatty())
    snapshot = trainer.run(resume=args.resume)
    console.print(f"[ok]✓[/] trained to epoch {snapshot.epoch} (step {snapshot.step}); outputs in {args.out}")
    return 0


def cmd_bench(args) -> int:
    """Time encode + synthesize on random controls."""
    from bench import durations, run_bench
    from synth.vocoder import Vocoder

    vocoder = Vocoder.from_path(_require_file("--checkpoint", args.checkpoint))
    report = run_bench(
        vocoder,
        durations(args.min_s, args.max_s, args.step_s),
        repeats=args.repeats,
        threads=args.threads,
        seed=args.seed,
    )
    sys.stdout.write(report.to_csv())
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    console.print(f"[info]{report.summary()}[/]")
    console.print("[system]timing includes control upsampling and all generator branches[/]")
    return 0


def cmd_filter_response(args) -> int:
    """Export the learned post-filter magnitude response as CSV."""
    from encoder.checkpoint import load_checkpoint
    from synth.generator import filter_frequency_response, response_omegas

    ckpt = load_checkpoint(_require_file("--checkpoint", args.checkpoint))
    if not ckpt.cfg.use_post_conv:
        raise ConfigError("checkpoint was trained without the post convolution layer")
    magnitude = filter_frequency_response(ckpt.weights["post.kernel"], n_points=args.points)
    omegas = response_omegas(args.points)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["omega_over_pi", "magnitude"])
        for w, m in zip(omegas, magnitude):
            writer.writerow([repr(float(w)), repr(float(m))])
    console.print(f"[ok]✓[/] {path}: {args.points} points")
    return 0


def cmd_params(args) -> int:
    """Parameter counts across hidden sizes, depth fixed."""
    from dataclasses import replace

    from encoder.checkpoint import load_checkpoint
    from encoder.config import EncoderConfig
    from encoder.network import generator_param_count
    from losses.discriminator import DiscriminatorConfig, discriminator_param_count

    base = EncoderConfig()
    disc_count = discriminator_param_count(DiscriminatorConfig())
    if args.checkpoint:
        checkpoint = load_checkpoint(args.checkpoint)
        base = checkpoint.cfg
        stored = checkpoint.discriminator_weights
        if len(stored):
            disc_count = sum(v.size for _, v in stored.items())
    rows = [(h, generator_param_count(replace(base, hidden_dim=h)), disc_count) for h in args.hidden]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["hidden_dim", "generator_params", "discriminator_params"])
    writer.writerows(rows)
    sys.stdout.write(buf.getvalue())

    table = Table(title="Parameter count")
    table.add_column("hidden_dim", justify="right")
    table.add_column("generator", justify="right")
    table.add_column("discriminator", justify="right")
    for h, g, d in rows:
        table.add_row(str(h), f"{g:,}", f"{d:,}")
    console.print(table)
    return 0


def cmd_evaluate(args) -> int:
    """M-STFT distance between a reference and a synthesized WAV."""
    from data.wav import read_wav
    from losses.spectral import MssConfig, mss_distance

    reference = read_wav(_require_file("--reference", args.reference))
    synth = read_wav(_require_file("--synth", args.synth))
    cfg = MssConfig(fft_sizes=args.fft_sizes) if args.fft_sizes else MssConfig()
    distance = mss_distance(reference, synth, cfg)
    sys.stdout.write(f"mstft,{distance!r}\n")
    console.print(f"[info]M-STFT distance over {len(cfg.fft_sizes)} resolutions: {distance:.4f}[/]")
    return 0


# ── Parser ───────────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="Articulatory harmonic-plus-noise vocoder",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python cli.py params --hidden 256,128,64,32,16,8
  python cli.py train --manifest data/manifest.tsv --config docs/desk_overfit.cfg --out runs/desk
  python cli.py synth --features a.feat --checkpoint runs/desk/latest.ddsp --out a.wav --decompose parts/
        """,
    )
    parser.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING, ...")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="Build a 14-channel feature file")
    p.add_argument("--wav", required=True)
    p.add_argument("--f0", required=True)
    p.add_argument("--ema", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="Synthesize a WAV from features")
    p.add_argument("--features", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decompose", metavar="DIR", default=None)
    p.add_argument("--seed", type=int, default=config.default_seed)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="Train generator and discriminators")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", action="store_true", help="Continue from OUT/latest.ddsp")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="Override the adversarial weight")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="Inference speed per second of input")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--min-s", type=float, default=0.5)
    p.add_argument("--max-s", type=float, default=10.0)
    p.add_argument("--step-s", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=config.default_seed)
    p.add_argument("--out", default=None, help="Also write the CSV here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("filter-response", help="Post-filter magnitude response CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=512)
    p.set_defaults(func=cmd_filter_response)

    p = sub.add_parser("params", help="Parameter counts per hidden size")
    p.add_argument("--hidden", type=_int_list, default=[256, 128, 64, 32, 16, 8])
    p.add_argument("--checkpoint", default=None, help="take the generator config and stored discriminator from here")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("evaluate", help="M-STFT distance between two WAVs")
    p.add_argument("--reference", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--fft-sizes", type=_int_list, default=None)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        problems = config.validate()
        if problems:
            raise ConfigError(f"bad environment settings: {', '.join(problems)}")
        level = (args.log_level or config.log_level).upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"--log-level: unknown level {args.log_level!r}")
        configure_logging(level)
        return args.func(args)
    except VocoderError as e:
        err_console.print(f"error: {e.kind}: {e}", markup=False, style="bold red")
        return 1
    except OSError as e:
        err_console.print(f"error: io-error: {e}", markup=False, style="bold red")
        return 1
    except KeyboardInterrupt:
        console.print("\n[system]Interrupted[/]")
        return 130


if __name__ == "__main__":
    sys.exit(main())
