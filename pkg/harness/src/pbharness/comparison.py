"""Cross-run comparison of fine-tuning results.

Runs are comparable when everything about them matched except the
dataset they trained on; the comparison then isolates the effect of the
encryption setting (``n_bs``, ``n_ps``) on accuracy and on how quickly
training converges.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError
from .training import RunRecord

# A run may legitimately differ from its peers in these config fields.
_VARIABLE_FIELDS = frozenset({"manifest_path"})


def epochs_to_threshold(val_acc: tuple[float, ...],
                        fraction: float = 0.9) -> int:
    """First 1-based epoch whose validation accuracy reaches the given
    fraction of the final epoch's validation accuracy.

    The final epoch always qualifies, so the result is well defined for
    any non-empty curve; smaller means faster convergence.
    """
    if not val_acc:
        raise ConfigError("empty validation curve")
    target = fraction * val_acc[-1]
    for epoch, acc in enumerate(val_acc, start=1):
        if acc >= target:
            return epoch
    return len(val_acc)


@dataclass(frozen=True)
class ComparisonRow:
    n_bs: int
    n_ps: int
    final_test_acc: float
    final_val_acc: float
    best_val_acc: float
    epochs_to_90pct: int


@dataclass(frozen=True)
class TrendReport:
    rows: tuple[ComparisonRow, ...]
    restricted_beats_unrestricted: bool | None

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "restricted_beats_unrestricted":
                self.restricted_beats_unrestricted,
        }

    def to_text(self) -> str:
        header = f"{'n_bs':>6} {'n_ps':>6} {'test_acc':>9} " \
                 f"{'val_acc':>9} {'best_val':>9} {'e90':>4}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.n_bs:>6} {r.n_ps:>6} {r.final_test_acc:>8.2f}% "
                f"{r.final_val_acc:>8.2f}% {r.best_val_acc:>8.2f}% "
                f"{r.epochs_to_90pct:>4}"
            )
        if self.restricted_beats_unrestricted is not None:
            verdict = ("all restricted settings beat the unrestricted "
                       "baseline" if self.restricted_beats_unrestricted
                       else "some restricted setting did not beat the "
                            "unrestricted baseline")
            lines.append(verdict)
        return "\n".join(lines) + "\n"


def compare(records: list[RunRecord]) -> TrendReport:
    """Build a trend report from runs that differ only in their dataset."""
    if len(records) < 2:
        raise ConfigError(
            f"need at least two runs to compare, got {len(records)}"
        )
    reference = {k: v for k, v in records[0].config.items()
                 if k not in _VARIABLE_FIELDS}
    for record in records[1:]:
        other = {k: v for k, v in record.config.items()
                 if k not in _VARIABLE_FIELDS}
        if other != reference:
            differing = sorted(
                k for k in set(reference) | set(other)
                if reference.get(k) != other.get(k)
            )
            raise ConfigError(
                f"runs are not comparable: configs differ in {differing}"
            )

    rows = [
        ComparisonRow(
            n_bs=r.n_bs, n_ps=r.n_ps,
            final_test_acc=r.final_test_acc,
            final_val_acc=r.val_acc[-1],
            best_val_acc=max(r.val_acc),
            epochs_to_90pct=epochs_to_threshold(r.val_acc),
        )
        for r in records
    ]
    rows.sort(key=lambda r: (-r.final_test_acc, r.n_bs, r.n_ps))

    baselines = [r.final_test_acc for r in rows
                 if r.n_bs == 0 and r.n_ps == 0]
    if baselines:
        best_baseline = max(baselines)
        flag = all(r.final_test_acc > best_baseline for r in rows
                   if r.n_bs + r.n_ps > 0)
    else:
        flag = None
    return TrendReport(rows=tuple(rows), restricted_beats_unrestricted=flag)


def write_report(report: TrendReport, out_path: str | Path) -> None:
    out_path = Path(out_path)
    out_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                        encoding="utf-8")
