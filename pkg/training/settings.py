"""Training configuration: the flat ``key = value`` file and its typed views."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import config
from encoder.config import EncoderConfig
from errors import ConfigError
from losses.discriminator import DiscriminatorConfig
from losses.spectral import MssConfig


@dataclass
class TrainConfig:
    """Optimisation schedule."""

    lr_g: float = 3e-4
    lr_d: float = 3e-6
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 32
    lam: float = 5.0
    epochs: int = 6400
    milestones: list[int] = field(default_factory=lambda: [2400, 4800])
    milestone_gamma: float = 0.3
    seed: int = 0
    crop_frames: int = 200
    checkpoint_every: int = 100
    val_every: int = 10

    def __post_init__(self):
        if not 0 < self.milestone_gamma < 1:
            raise ConfigError(f"milestone_gamma must be in (0, 1), got {self.milestone_gamma}")
        if any(b <= a for a, b in zip(self.milestones, self.milestones[1:])):
            raise ConfigError(f"milestones must be strictly increasing, got {self.milestones}")
        if self.batch_size < 1 or self.crop_frames < 1 or self.epochs < 0:
            raise ConfigError("batch_size and crop_frames must be >= 1, epochs >= 0")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")


class TrainSettings(BaseModel):
    """Every key accepted by the training config file."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    # Optimiser
    lr_g: float = Field(3e-4, gt=0)
    lr_d: float = Field(3e-6, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    batch_size: int = Field(32, ge=1)
    lam: float = Field(5.0, ge=0, alias="lambda")
    epochs: int = Field(6400, ge=0)
    milestones: list[int] = [2400, 4800]
    milestone_gamma: float = Field(0.3, gt=0, lt=1)
    seed: int = config.default_seed
    crop_frames: int = Field(200, ge=1)
    checkpoint_every: int = Field(config.checkpoint_every, ge=1)
    val_every: int = Field(10, ge=1)

    # Encoder / generator
    hidden_dim: int = Field(256, ge=1)
    n_stacks: int = Field(4, ge=1)
    blocks_per_stack: int = Field(5, ge=1)
    dilations: list[int] = [1, 2, 4, 8, 16]
    kernel: int = 3
    convs_per_block: int = Field(2, ge=1)
    n_harmonics: int = Field(50, ge=1)
    n_bands: int = Field(65, ge=2)
    mlp_depth: int = Field(3, ge=1)
    post_kernel: int = 1025
    gamma: float = Field(0.01, gt=0)
    use_cosine: bool = True
    use_post_conv: bool = True
    use_film: bool = True

    # Losses
    fft_sizes: list[int] = [2048, 1024, 512, 256, 128, 64]
    overlap: float = Field(0.75, ge=0, lt=1)
    alpha: float = Field(1.0, ge=0)
    disc_fft_sizes: list[int] = [2048, 1024, 512, 256, 128, 64]
    disc_channels: list[int] = [32, 64, 128, 256]

    @field_validator("milestones", "dilations", "fft_sizes", "disc_fft_sizes", "disc_channels", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            text = value.strip().strip("[]")
            return [item.strip() for item in text.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def _check_layout(self) -> "TrainSettings":
        if len(self.dilations) != self.blocks_per_stack:
            raise ValueError(f"{len(self.dilations)} dilations for {self.blocks_per_stack} blocks")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr_g=self.lr_g,
            lr_d=self.lr_d,
            beta1=self.beta1,
            beta2=self.beta2,
            batch_size=self.batch_size,
            lam=self.lam,
            epochs=self.epochs,
            milestones=list(self.milestones),
            milestone_gamma=self.milestone_gamma,
            seed=self.seed,
            crop_frames=self.crop_frames,
            checkpoint_every=self.checkpoint_every,
            val_every=self.val_every,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            hidden_dim=self.hidden_dim,
            n_stacks=self.n_stacks,
            blocks_per_stack=self.blocks_per_stack,
            dilations=list(self.dilations),
            kernel=self.kernel,
            convs_per_block=self.convs_per_block,
            n_harmonics=self.n_harmonics,
            n_bands=self.n_bands,
            mlp_depth=self.mlp_depth,
            post_kernel=self.post_kernel,
            gamma=self.gamma,
            use_cosine=self.use_cosine,
            use_film=self.use_film,
            use_post_conv=self.use_post_conv,
        )

    def mss_config(self) -> MssConfig:
        return MssConfig(fft_sizes=list(self.fft_sizes), overlap=self.overlap, alpha=self.alpha)

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(
            fft_sizes=list(self.disc_fft_sizes),
            channels=list(self.disc_channels),
            overlap=self.overlap,
        )

    def configs(self) -> tuple[TrainConfig, EncoderConfig, MssConfig, DiscriminatorConfig]:
        try:
            return self.train_config(), self.encoder_config(), self.mss_config(), self.discriminator_config()
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from None


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = value
    return values


def load_settings(path: str | Path | None = None, **overrides) -> TrainSettings:
    """Read a config file (optional) and apply keyword overrides."""
    values: dict[str, object] = {}
    if path is not None:
        path = Path(path)
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrainSettings.model_validate(values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid training config: {problems}") from None
