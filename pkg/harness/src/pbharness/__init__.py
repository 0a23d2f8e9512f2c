"""Experiment harness for training vision transformers on encrypted images.

The harness treats encrypted datasets as opaque artifacts: it reads the
``manifest.json`` plus PNG tree that the encryption tool produces,
verifies file digests, and never touches keys or the encryption
implementation itself.
"""

from .comparison import (ComparisonRow, TrendReport, compare,
                         epochs_to_threshold, write_report)
from .config import OPTIMIZERS, ExperimentConfig, parse_model_id
from .data import (ManifestInfo, ManifestItem, PatchDataset, Splits,
                   load_encrypted, load_folder, patchify, read_manifest,
                   select_classes, split_dataset)
from .errors import ConfigError, DataError, HarnessError
from .model import TinyViT, load_weights, save_weights
from .synthetic import class_mask, make_image, write_dataset
from .training import (CSV_HEADER, RunRecord, evaluate, fit, load_record,
                       pretrain, train, write_artifacts)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "ComparisonRow",
    "ConfigError",
    "DataError",
    "ExperimentConfig",
    "HarnessError",
    "ManifestInfo",
    "ManifestItem",
    "OPTIMIZERS",
    "PatchDataset",
    "RunRecord",
    "Splits",
    "TinyViT",
    "TrendReport",
    "class_mask",
    "compare",
    "epochs_to_threshold",
    "evaluate",
    "fit",
    "load_encrypted",
    "load_folder",
    "load_record",
    "load_weights",
    "make_image",
    "parse_model_id",
    "patchify",
    "pretrain",
    "read_manifest",
    "save_weights",
    "select_classes",
    "split_dataset",
    "train",
    "write_artifacts",
    "write_dataset",
    "write_report",
    "__version__",
]
