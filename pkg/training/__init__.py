"""Training package.

- settings: key = value config file -> TrainSettings -> typed configs
- optim: Adam and the milestone LR schedule
- store: checkpoints with optimizer state, metrics CSVs
- loop: Trainer / train_loop
"""

from training.loop import Trainer, train_loop
from training.optim import OptimizerState, adam_step, lr_at_epoch
from training.settings import TrainConfig, TrainSettings, load_settings, parse_config_text
from training.store import CheckpointStore, TrainingSnapshot

__all__ = [
    "TrainConfig",
    "TrainSettings",
    "load_settings",
    "parse_config_text",
    "OptimizerState",
    "adam_step",
    "lr_at_epoch",
    "CheckpointStore",
    "TrainingSnapshot",
    "Trainer",
    "train_loop",
]
