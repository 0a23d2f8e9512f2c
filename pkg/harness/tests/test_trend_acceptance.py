"""Release acceptance: the desk-scale encryption-setting trend.

Builds the whole pipeline end to end — synthetic two-class corpus,
externally encrypted dataset variants, plain-data pretraining, and
fine-tuning across (n_bs, n_ps) settings and seeds — then checks that
keeping block positions fixed yields higher mean accuracy and at least
as fast convergence as full scrambling.
"""

import statistics
import subprocess
import sys

import pytest

from pbharness import (ExperimentConfig, compare, epochs_to_threshold,
                       pretrain, train)
from pbharness.synthetic import write_dataset

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SIZE, CELL, PATCH = 224, 16, 16
MODEL_ID = "tinyvit-p16-64x2"
SETTINGS = ((196, 0), (0, 0))
SEEDS = (1, 2, 3)
EPOCHS = 3
N_PER_CLASS = 1250  # 80/10/10 split -> 2,000 training images


def report(name: str, detail: str) -> None:
    print(f"[ACCEPTANCE] {name}: PASS — {detail}")


def blockperm(*args) -> None:
    result = subprocess.run(
        [sys.executable, "-m", "blockperm", *map(str, args)],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    root = tmp_path_factory.mktemp("trend")
    plain = root / "plain"
    write_dataset(plain, n_per_class=N_PER_CLASS, seed=0, size=SIZE,
                  cell=CELL)
    pre_plain = root / "pre_plain"
    write_dataset(pre_plain, n_per_class=600, seed=100, size=SIZE, cell=CELL)

    manifests = {}
    for n_bs, n_ps in SETTINGS:
        key = root / f"key-{n_bs}-{n_ps}.pbkey"
        enc = root / f"enc-{n_bs}-{n_ps}"
        blockperm("keygen", "--p", PATCH, "--n-bs", n_bs, "--n-ps", n_ps,
                  "--geom", f"{SIZE}x{SIZE}x3",
                  "--seed", f"trend-{n_bs}-{n_ps}", "--out", key)
        blockperm("encrypt-dataset", plain, "--key", key, "--out", enc,
                  "--format", "folder")
        manifests[(n_bs, n_ps)] = enc / "manifest.json"

    weights = root / "weights.pt"
    pre_cfg = ExperimentConfig(manifest_path="unused", model_id=MODEL_ID,
                               epochs=8, optimizer="adamw",
                               learning_rate=1e-3, seed=1)
    pre_acc = pretrain(pre_plain, pre_cfg, weights)
    assert pre_acc >= 90.0, (
        f"pretraining reached only {pre_acc:.1f}% on plain data; the "
        f"fine-tuning comparison would be meaningless")

    records = {}
    for n_bs, n_ps in SETTINGS:
        for seed in SEEDS:
            cfg = ExperimentConfig(
                manifest_path=str(manifests[(n_bs, n_ps)]),
                model_id=MODEL_ID, weights_path=str(weights),
                epochs=EPOCHS, optimizer="adamw", learning_rate=3e-5,
                seed=seed)
            records[(n_bs, n_ps, seed)] = train(
                cfg, root / f"run-{n_bs}-{n_ps}-s{seed}")
    return records


def mean_test_acc(records, setting):
    return statistics.mean(records[(*setting, s)].final_test_acc
                           for s in SEEDS)


def test_task_shape_matches_protocol(experiment):
    sample = next(iter(experiment.values()))
    assert sample.n_train == 2000
    assert len(sample.train_loss) == EPOCHS
    assert len({(bs, ps) for bs, ps, _ in experiment}) == 2
    report("trend task shape",
           f"2 classes, {sample.n_train} training images, {EPOCHS} epochs, "
           f"{len(SEEDS)} seeds per setting")


def test_mean_accuracy_orders_restricted_above_scrambled(experiment):
    acc_fixed = mean_test_acc(experiment, (196, 0))
    acc_scrambled = mean_test_acc(experiment, (0, 0))
    assert acc_fixed > acc_scrambled, (
        f"mean test accuracy (n_bs=196, n_ps=0) = {acc_fixed:.2f}% is not "
        f"above (0, 0) = {acc_scrambled:.2f}%")
    report("trend accuracy ordering",
           f"mean test acc (196,0) = {acc_fixed:.2f}% > "
           f"(0,0) = {acc_scrambled:.2f}% over {len(SEEDS)} seeds")


def test_convergence_is_no_slower_for_restricted(experiment):
    e2t = {
        setting: statistics.mean(
            epochs_to_threshold(experiment[(*setting, s)].val_acc)
            for s in SEEDS)
        for setting in SETTINGS
    }
    assert e2t[(0, 0)] >= e2t[(196, 0)], (
        f"epochs to 90% of final: (0,0) = {e2t[(0, 0)]:.2f} should be >= "
        f"(196,0) = {e2t[(196, 0)]:.2f}")
    report("trend convergence speed",
           f"mean epochs to 90% of final val acc: (0,0) = "
           f"{e2t[(0, 0)]:.2f} >= (196,0) = {e2t[(196, 0)]:.2f}")


def test_compare_flags_the_ordering(experiment):
    flags = []
    for seed in SEEDS:
        rep = compare([experiment[(196, 0, seed)],
                       experiment[(0, 0, seed)]])
        assert len(rep.rows) == 2
        assert rep.restricted_beats_unrestricted is not None
        flags.append(rep.restricted_beats_unrestricted)
    assert sum(flags) >= 2, (
        f"restricted setting beat the scrambled baseline in only "
        f"{sum(flags)} of {len(SEEDS)} seeds")
    report("per-seed comparison",
           f"restricted beat unrestricted in {sum(flags)}/{len(SEEDS)} "
           f"seeds")
