"""Experiment configuration.

The defaults mirror the reference fine-tuning protocol this harness
scales down from: SGD with batch size 64, learning rate 1e-4, momentum
0.9, weight decay 5e-4, 15 epochs. Desk-scale experiments override them
explicitly.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError

OPTIMIZERS = ("sgd", "adamw")

_MODEL_ID = re.compile(r"^tinyvit-p(?P<patch>\d+)-(?P<dim>\d+)x(?P<depth>\d+)$")


def parse_model_id(model_id: str) -> tuple[int, int, int]:
    """``tinyvit-p<patch>-<dim>x<depth>`` -> (patch, dim, depth)."""
    m = _MODEL_ID.match(model_id)
    if not m:
        raise ConfigError(
            f"unknown model id {model_id!r} (expected tinyvit-p<patch>-<dim>x<depth>)"
        )
    return int(m["patch"]), int(m["dim"]), int(m["depth"])


@dataclass(frozen=True)
class ExperimentConfig:
    manifest_path: str
    model_id: str = "tinyvit-p16-64x2"
    weights_path: str | None = None
    epochs: int = 15
    batch_size: int = 64
    learning_rate: float = 1e-4
    momentum: float = 0.9
    weight_decay: float = 5e-4
    optimizer: str = "sgd"
    subset_fraction: float = 1.0
    class_subset: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        parse_model_id(self.model_id)  # validates the identifier shape
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ConfigError(
                f"subset_fraction must be in (0, 1], got {self.subset_fraction}"
            )
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.class_subset is not None:
            object.__setattr__(self, "class_subset", tuple(self.class_subset))
            if len(self.class_subset) < 2:
                raise ConfigError("class_subset needs at least two classes")
            if len(set(self.class_subset)) != len(self.class_subset):
                raise ConfigError("class_subset has duplicate labels")

    @property
    def patch_size(self) -> int:
        return parse_model_id(self.model_id)[0]

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["class_subset"] is not None:
            out["class_subset"] = list(out["class_subset"])
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if raw.get("class_subset") is not None:
            raw = dict(raw, class_subset=tuple(raw["class_subset"]))
        return cls(**raw)
