from __future__ import annotations

import os
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Load environment variables from .env if present
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass


def worker_count() -> int:
    """Worker cap for thread pools.

    Environment:
    - RECTSPEC_THREADS: maximum number of worker threads (defaults to min(8, cpu count))
    """
    raw = os.getenv("RECTSPEC_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            print(f"⚠️ Ignoring non-integer RECTSPEC_THREADS={raw!r}")
    return max(1, min(8, os.cpu_count() or 1))


def output_dir() -> str:
    return os.getenv("RECTSPEC_OUTPUT_DIR", "output")


def default_seed() -> int:
    try:
        return int(os.getenv("RECTSPEC_SEED", "0"))
    except ValueError:
        return 0


class RunConfig(BaseModel):
    """Every tolerance and size knob a run depends on; embedded in reports for replay."""

    model_config = ConfigDict(frozen=True)

    grid: int = 256                      # θ grid points on [0, π]
    dtheta: float = 3.141592653589793e-3  # bisection resolution δ_θ
    residual_tol: float = 1e-10
    eps_rel: float = 1e-3
    seed: int = Field(default_factory=default_seed)
    resolution: int = 64                 # strip mesh resolution
    seed_points: int = 64                # curve samples used by seed_search
    max_seeds: int = 48                  # seeds handed to Newton per θ once one has converged
    seed_overflow: int = 4               # up to max_seeds · seed_overflow seeds while none has
    max_witnesses: int = 2               # stop refining once this many distinct witnesses exist
    max_iters: int = 50
    score_scale: float = 4.0             # seed score threshold, in sample edges max|γ'| · 2π/N
    seed_chord_rel: float = 0.05         # seed chords shorter than seed_chord_rel · diameter are skipped
    dedup_tol: float = 1e-6
    chord_rel: float = 1e-4              # ε_chord = chord_rel · diameter
    out: Optional[str] = None
    plot_csv: Optional[str] = None
    verbose: bool = False

    @field_validator("dtheta", "residual_tol", "eps_rel", "score_scale", "seed_chord_rel", "dedup_tol", "chord_rel")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tolerances must be positive")
        return value

    @field_validator("grid", "seed_points")
    @classmethod
    def _at_least_32(cls, value: int) -> int:
        if value < 32:
            raise ValueError("grid sizes must be at least 32")
        return value

    @model_validator(mode="after")
    def _small_counts(self) -> "RunConfig":
        if min(self.max_seeds, self.seed_overflow, self.max_witnesses, self.max_iters) < 1:
            raise ValueError("max_seeds, seed_overflow, max_witnesses and max_iters must be positive")
        if self.resolution < 4:
            raise ValueError("resolution must be at least 4")
        return self

    @property
    def delta_r(self) -> float:
        """Resolution in r = θ/π units."""
        return self.dtheta / 3.141592653589793
