#!/usr/bin/env python3
"""Desk-scale overfit run on one synthetic utterance.

Trains docs/desk_overfit.cfg (MSS only) and reports the loss drop, then
optionally continues with the adversarial loss switched on.

Usage:
    python scripts/desk_overfit.py --out runs/desk
    python scripts/desk_overfit.py --out runs/desk --adversarial-steps 200
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from rich.console import Console  # noqa: E402
from rich.panel import Panel  # noqa: E402

from config import config  # noqa: E402
from data.dataset import Dataset  # noqa: E402
from data.synthetic import synthetic_utterance  # noqa: E402
from logging_setup import configure_logging  # noqa: E402
from training.loop import Trainer  # noqa: E402
from training.settings import load_settings  # noqa: E402

RECIPE = Path(__file__).resolve().parent.parent / "docs" / "desk_overfit.cfg"

console = Console()


def main() -> int:
    parser = argparse.ArgumentParser(description="Desk-scale overfit run")
    parser.add_argument("--out", default=None, help="Run directory for checkpoints and metrics")
    parser.add_argument("--config", default=str(RECIPE))
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--adversarial-steps", type=int, default=0)
    args = parser.parse_args()
    configure_logging(config.log_level)

    settings = load_settings(args.config, epochs=args.epochs)
    dataset = Dataset([synthetic_utterance(seconds=2.0, seed=settings.seed)])
    trainer = Trainer.from_settings(dataset, settings, out_dir=args.out, show_progress=True)
    trainer.run()
    initial, final = trainer.history[0]["mss"], trainer.history[-1]["mss"]
    console.print(Panel.fit(
        f"MSS {initial:.4f} -> {final:.4f} ({final / initial:.2%} of initial)",
        title="MSS-only overfit",
        border_style="blue",
    ))

    if args.adversarial_steps:
        trainer.train_cfg = replace(trainer.train_cfg, lam=5.0, epochs=trainer.epoch + args.adversarial_steps)
        trainer.run()
        tail = trainer.history[-1]
        console.print(Panel.fit(
            f"MSS {tail['mss']:.4f} (pre-GAN {final:.4f}), L_G {tail['l_g']:.4f}, L_D {tail['l_d']:.4f}",
            title="Adversarial continuation",
            border_style="blue",
        ))
    return 0


if __name__ == "__main__":
    sys.exit(main())
