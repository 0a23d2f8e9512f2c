"""Training loop, run records and artifact emission."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import torch
from matplotlib.figure import Figure
from torch import nn

from .config import ExperimentConfig
from .data import (PatchDataset, Splits, load_encrypted, load_folder,
                   select_classes, split_dataset)
from .errors import ConfigError, DataError
from .model import TinyViT, load_weights, save_weights

log = logging.getLogger("pbharness")

CSV_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc"


@dataclass(frozen=True)
class RunRecord:
    """Everything a finished fine-tuning run reports."""

    config: dict
    n_bs: int
    n_ps: int
    fingerprint: str
    n_train: int
    n_val: int
    n_test: int
    train_loss: tuple[float, ...]
    train_acc: tuple[float, ...]
    val_loss: tuple[float, ...]
    val_acc: tuple[float, ...]
    epoch_seconds: tuple[float, ...]
    final_test_acc: float

    def __post_init__(self):
        epochs = self.config.get("epochs")
        for name in ("train_loss", "train_acc", "val_loss", "val_acc",
                     "epoch_seconds"):
            series = getattr(self, name)
            object.__setattr__(self, name, tuple(float(v) for v in series))
            if len(getattr(self, name)) != epochs:
                raise DataError(
                    f"{name} has {len(getattr(self, name))} entries for "
                    f"{epochs} epochs"
                )
        for name in ("train_acc", "val_acc"):
            for v in getattr(self, name):
                if not 0.0 <= v <= 100.0:
                    raise DataError(f"{name} value {v} outside [0, 100]")
        if not 0.0 <= self.final_test_acc <= 100.0:
            raise DataError(
                f"final_test_acc {self.final_test_acc} outside [0, 100]"
            )

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("train_loss", "train_acc", "val_loss", "val_acc",
                     "epoch_seconds"):
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "RunRecord":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown run record fields: {sorted(unknown)}")
        missing = known - set(raw)
        if missing:
            raise DataError(f"run record missing fields: {sorted(missing)}")
        return cls(**raw)


def load_record(path: str | Path) -> RunRecord:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: run record must be a JSON object")
    return RunRecord.from_dict(raw)


def _to_float(batch: torch.Tensor) -> torch.Tensor:
    return (batch.float() / 255.0 - 0.5) / 0.5


@torch.no_grad()
def evaluate(model: TinyViT, ds: PatchDataset, indices: torch.Tensor,
             batch_size: int) -> tuple[float, float]:
    """Mean cross-entropy loss and accuracy (percent) over the indices."""
    model.eval()
    criterion = nn.CrossEntropyLoss(reduction="sum")
    total_loss, correct = 0.0, 0
    for start in range(0, len(indices), batch_size):
        idx = indices[start:start + batch_size]
        x = _to_float(ds.patches[idx])
        y = ds.labels[idx]
        logits = model(x)
        total_loss += criterion(logits, y).item()
        correct += (logits.argmax(dim=1) == y).sum().item()
    n = len(indices)
    return total_loss / n, 100.0 * correct / n


def _make_optimizer(model: nn.Module, config: ExperimentConfig):
    if config.optimizer == "sgd":
        return torch.optim.SGD(model.parameters(), lr=config.learning_rate,
                               momentum=config.momentum,
                               weight_decay=config.weight_decay)
    return torch.optim.AdamW(model.parameters(), lr=config.learning_rate,
                             weight_decay=config.weight_decay)


def fit(model: TinyViT, ds: PatchDataset, splits: Splits,
        config: ExperimentConfig) -> dict:
    """Run the epoch loop; returns per-epoch history plus final test acc."""
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = _make_optimizer(model, config)
    criterion = nn.CrossEntropyLoss()
    history = {k: [] for k in ("train_loss", "train_acc", "val_loss",
                               "val_acc", "epoch_seconds")}
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        model.train()
        order = splits.train[torch.randperm(len(splits.train),
                                            generator=generator)]
        running_loss, correct = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            x = _to_float(ds.patches[idx])
            y = ds.labels[idx]
            optimizer.zero_grad()
            logits = model(x)
            loss = criterion(logits, y)
            loss.backward()
            optimizer.step()
            running_loss += loss.item() * len(idx)
            correct += (logits.argmax(dim=1) == y).sum().item()
        train_loss = running_loss / len(order)
        train_acc = 100.0 * correct / len(order)
        val_loss, val_acc = evaluate(model, ds, splits.val, config.batch_size)
        history["train_loss"].append(train_loss)
        history["train_acc"].append(train_acc)
        history["val_loss"].append(val_loss)
        history["val_acc"].append(val_acc)
        history["epoch_seconds"].append(time.perf_counter() - started)
        log.info("epoch %d/%d: train loss %.4f acc %.2f%% | val loss %.4f "
                 "acc %.2f%%", epoch, config.epochs, train_loss, train_acc,
                 val_loss, val_acc)
    _, test_acc = evaluate(model, ds, splits.test, config.batch_size)
    history["final_test_acc"] = test_acc
    log.info("final test accuracy %.2f%%", test_acc)
    return history


def write_artifacts(record: RunRecord, out_dir: str | Path) -> None:
    """Emit run.json, curves.csv and curves.png into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run.json").write_text(
        json.dumps(record.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    lines = [CSV_HEADER]
    for i in range(len(record.train_loss)):
        lines.append(",".join([
            str(i + 1),
            f"{record.train_loss[i]:.6g}", f"{record.train_acc[i]:.6g}",
            f"{record.val_loss[i]:.6g}", f"{record.val_acc[i]:.6g}",
        ]))
    (out_dir / "curves.csv").write_text("\n".join(lines) + "\n",
                                        encoding="utf-8")

    epochs = range(1, len(record.train_loss) + 1)
    fig = Figure(figsize=(9.0, 3.6))
    ax_loss, ax_acc = fig.subplots(1, 2)
    ax_loss.plot(epochs, record.train_loss, label="train")
    ax_loss.plot(epochs, record.val_loss, label="val")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.legend()
    ax_acc.plot(epochs, record.train_acc, label="train")
    ax_acc.plot(epochs, record.val_acc, label="val")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy (%)")
    ax_acc.set_ylim(0, 100)
    ax_acc.legend()
    fig.suptitle(f"n_bs={record.n_bs} n_ps={record.n_ps} "
                 f"test acc {record.final_test_acc:.2f}%")
    fig.tight_layout()
    fig.savefig(out_dir / "curves.png", dpi=110)


def train(config: ExperimentConfig, out_dir: str | Path) -> RunRecord:
    """Fine-tune on a manifest-described dataset and write artifacts."""
    torch.manual_seed(config.seed)
    info, ds = load_encrypted(config.manifest_path)
    if info.p != config.patch_size:
        raise ConfigError(
            f"model {config.model_id!r} uses {config.patch_size}px patches "
            f"but the dataset was encrypted with p={info.p}"
        )
    ds = select_classes(ds, config.class_subset)
    n_classes = ds.n_classes
    if n_classes < 2:
        raise DataError("dataset has fewer than two classes")
    splits = split_dataset(ds, config.subset_fraction)

    if config.weights_path is not None:
        model = load_weights(config.weights_path, config.model_id,
                             ds.image_size, n_classes)
        log.info("loaded pretrained weights from %s", config.weights_path)
    else:
        model = TinyViT(config.model_id, ds.image_size, n_classes)
    log.info("training on %s: %d train / %d val / %d test images "
             "(n_bs=%d, n_ps=%d)", config.manifest_path, len(splits.train),
             len(splits.val), len(splits.test), info.n_bs, info.n_ps)

    history = fit(model, ds, splits, config)
    record = RunRecord(
        config=config.to_dict(),
        n_bs=info.n_bs, n_ps=info.n_ps, fingerprint=info.fingerprint,
        n_train=len(splits.train), n_val=len(splits.val),
        n_test=len(splits.test),
        train_loss=tuple(history["train_loss"]),
        train_acc=tuple(history["train_acc"]),
        val_loss=tuple(history["val_loss"]),
        val_acc=tuple(history["val_acc"]),
        epoch_seconds=tuple(history["epoch_seconds"]),
        final_test_acc=history["final_test_acc"],
    )
    write_artifacts(record, out_dir)
    return record


def pretrain(data_dir: str | Path, config: ExperimentConfig,
             weights_out: str | Path) -> float:
    """Train from scratch on a plain image folder and save the weights.

    ``config.manifest_path`` is ignored; the folder tree is the source.
    Returns the final test accuracy (percent) as a sanity signal.
    """
    torch.manual_seed(config.seed)
    ds = load_folder(data_dir, config.patch_size)
    ds = select_classes(ds, config.class_subset)
    n_classes = ds.n_classes
    if n_classes < 2:
        raise DataError("dataset has fewer than two classes")
    splits = split_dataset(ds, config.subset_fraction)
    model = TinyViT(config.model_id, ds.image_size, n_classes)
    log.info("pretraining on %s: %d train / %d val / %d test images",
             data_dir, len(splits.train), len(splits.val), len(splits.test))
    history = fit(model, ds, splits, config)
    save_weights(model, weights_out)
    log.info("saved weights to %s", weights_out)
    return history["final_test_acc"]
