"""Configuration management for the articulatory vocoder."""

import os
from dataclasses import dataclass
from dotenv import load_dotenv

load_dotenv()

SAMPLE_RATE_HZ = 16000
FRAME_RATE_HZ = 200


@dataclass
class Config:
    """Runtime defaults from environment variables."""

    # Logging
    log_level: str = os.environ.get("VOCODER_LOG_LEVEL", "INFO")

    # Determinism
    default_seed: int = int(os.environ.get("VOCODER_SEED", "0"))

    # Benchmark runs single-stream by default (CPU timing protocol)
    bench_threads: int = int(os.environ.get("VOCODER_BENCH_THREADS", "1"))

    # Training
    checkpoint_every: int = int(os.environ.get("VOCODER_CHECKPOINT_EVERY", "100"))

    # Fixed signal rates
    sample_rate_hz: int = SAMPLE_RATE_HZ
    frame_rate_hz: int = FRAME_RATE_HZ

    def validate(self) -> list[str]:
        """Check settings are usable. Returns list of problems."""
        problems = []

        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append(f"VOCODER_LOG_LEVEL={self.log_level}")
        if self.bench_threads < 1:
            problems.append(f"VOCODER_BENCH_THREADS={self.bench_threads}")
        if self.checkpoint_every < 1:
            problems.append(f"VOCODER_CHECKPOINT_EVERY={self.checkpoint_every}")
        if self.sample_rate_hz % self.frame_rate_hz:
            problems.append("sample rate must be a multiple of the frame rate")

        return problems


# Global config instance
config = Config()
