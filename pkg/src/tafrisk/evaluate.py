"""Rebalancing, stratified cross-validation, metrics, and the grid runner.

Class balancing is minority oversampling applied to training folds only;
test folds are never touched, so reported metrics reflect the original
class mix.  The grid runner cross-validates every (pipeline config,
model kind) pair and reduces to one leaderboard row per kind.

Seed discipline: a master seed splits into per-(config, kind) run seeds
by position in the full enumeration, and each run seed further splits
into fold-split / per-fold-balance / per-fold-fit seeds.  A partial run
over a subset of configs or kinds therefore reproduces exactly the rows
the full run would produce.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .cohort import Cohort
from .errors import AllRunsFailed, BadSpec, SingleClass, TooFewRows, WorkbenchError
from .models import (
    ALL_KINDS,
    DEFAULT_PARAMS,
    DISPLAY_NAMES,
    SEEDED_KINDS,
    FittedModel,
    ModelKind,
    fit,
    predict_label,
)
from .preprocess import PipelineConfig, ProcessedDataset, enumerate_grid, iter_pipeline_products
from .rng import derive_seed


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise BadSpec(f"confusion count {name} may not be negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: float
    recall: float
    precision: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "recall": self.recall,
            "precision": self.precision,
        }


def _ratio(num: int | float, den: int | float) -> float:
    return num / den if den else 0.0


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    """The four comparison metrics; any 0/0 yields 0 by convention."""
    if cm.total == 0:
        raise BadSpec("cannot compute metrics on an empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    return Metrics(
        accuracy=(cm.tp + cm.tn) / cm.total,
        f1=_ratio(2.0 * precision * recall, precision + recall),
        recall=recall,
        precision=precision,
    )


def confusion_from_predictions(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    return ConfusionMatrix(
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
        tn=int(((y_true == 0) & (y_pred == 0)).sum()),
    )


# ---------------------------------------------------------------------------
# balancing and fold construction

def oversample_minority(ds: ProcessedDataset, seed: int) -> ProcessedDataset:
    """Append with-replacement minority duplicates until classes are equal."""
    labels = ds.labels
    n_pos = int((labels == 1).sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("cannot balance a single-class dataset")
    if n_pos == n_neg:
        return ds
    minority = 1 if n_pos < n_neg else 0
    pool = np.flatnonzero(labels == minority)
    deficit = abs(n_neg - n_pos)
    rng = np.random.default_rng(seed)
    extra = pool[rng.integers(0, pool.size, size=deficit)]
    return ds.subset(np.concatenate([np.arange(labels.size), extra]))


def stratified_kfold(
    labels: np.ndarray | ProcessedDataset, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """k disjoint stratified test folds; each row appears in exactly one."""
    if isinstance(labels, ProcessedDataset):
        labels = labels.labels
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise BadSpec(f"cross-validation needs k >= 2, got {k}")
    if k > n:
        raise TooFewRows(f"cannot form {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        rng.shuffle(members)
        base, rem = divmod(members.size, k)
        start = 0
        for j in range(k):
            size = base + (1 if j < rem else 0)
            fold_of[members[start : start + size]] = (j + offset) % k
            start += size
        # rotate the next class's larger folds away from this class's
        offset += rem
    folds = []
    everything = np.arange(n)
    for j in range(k):
        test = everything[fold_of == j]
        train = everything[fold_of != j]
        folds.append((train, test))
    return folds


# ---------------------------------------------------------------------------
# cross-validation

@dataclass
class CVReport:
    kind: ModelKind
    params: dict[str, Any]
    config_id: str | None
    fold_metrics: list[Metrics]
    mean_metrics: Metrics
    pooled: ConfusionMatrix
    seed: int
    balanced: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": self.params,
            "config": self.config_id,
            "folds": [m.to_dict() for m in self.fold_metrics],
            "mean": self.mean_metrics.to_dict(),
            "pooled_confusion": self.pooled.to_dict(),
            "seed": self.seed,
            "balanced": self.balanced,
        }


def _mean_metrics(per_fold: Sequence[Metrics]) -> Metrics:
    return Metrics(
        accuracy=float(np.mean([m.accuracy for m in per_fold])),
        f1=float(np.mean([m.f1 for m in per_fold])),
        recall=float(np.mean([m.recall for m in per_fold])),
        precision=float(np.mean([m.precision for m in per_fold])),
    )


def cross_validate(
    kind: ModelKind,
    params: Mapping[str, Any] | None,
    ds: ProcessedDataset,
    folds: int = 5,
    seed: int = 0,
    balance: bool = True,
) -> CVReport:
    params = dict(params or {})
    splits = stratified_kfold(ds.labels, folds, derive_seed(seed, 0))
    fold_metrics: list[Metrics] = []
    pooled = ConfusionMatrix(0, 0, 0, 0)
    for i, (train_idx, test_idx) in enumerate(splits):
        try:
            train = ds.subset(train_idx)
            if balance:
                train = oversample_minority(train, derive_seed(seed, 1, i))
            fit_params = params
            if kind in SEEDED_KINDS and "seed" not in params:
                fit_params = {**params, "seed": derive_seed(seed, 2, i)}
            model = fit(kind, fit_params, train)
            test = ds.subset(test_idx)
            cm = confusion_from_predictions(test.labels, predict_label(model, test))
        except WorkbenchError as exc:
            exc.args = (f"fold {i}: {exc}",)
            raise
        fold_metrics.append(compute_metrics(cm))
        pooled = pooled + cm
    return CVReport(
        kind=kind,
        params=params,
        config_id=ds.config.ident if ds.config else None,
        fold_metrics=fold_metrics,
        mean_metrics=_mean_metrics(fold_metrics),
        pooled=pooled,
        seed=seed,
        balanced=balance,
    )


# ---------------------------------------------------------------------------
# the full grid

@dataclass(frozen=True)
class SkippedRun:
    config_id: str
    kind: ModelKind
    reason: str


@dataclass
class Leaderboard:
    rows: list[CVReport]  # one per kind, already sorted
    all_runs: list[CVReport] = field(default_factory=list)
    skipped: list[SkippedRun] = field(default_factory=list)
    attempted: int = 0
    folds: int = 5
    seed: int = 0


def _row_sort_key(report: CVReport) -> tuple:
    return (-report.mean_metrics.f1, -report.mean_metrics.accuracy, report.config_id or "")


def _run_configs(
    cohort: Cohort,
    config_indices: Sequence[int],
    kinds: Sequence[ModelKind],
    folds: int,
    seed: int,
    balance: bool,
) -> tuple[list[CVReport], list[SkippedRun]]:
    grid = enumerate_grid()
    configs = [grid[i] for i in config_indices]
    kind_position = {kind: i for i, kind in enumerate(ALL_KINDS)}
    successes: list[CVReport] = []
    skipped: list[SkippedRun] = []
    for ci, (config, ds, err) in zip(config_indices, iter_pipeline_products(cohort, configs)):
        if err is not None:
            for kind in kinds:
                skipped.append(SkippedRun(config.ident, kind, str(err)))
            continue
        for kind in kinds:
            run_seed = derive_seed(seed, ci, kind_position[kind])
            try:
                successes.append(
                    cross_validate(kind, None, ds, folds=folds, seed=run_seed, balance=balance)
                )
            except WorkbenchError as exc:
                skipped.append(SkippedRun(config.ident, kind, str(exc)))
    return successes, skipped


def run_grid(
    cohort: Cohort,
    kinds: Sequence[ModelKind] | None = None,
    folds: int = 5,
    seed: int = 0,
    balance: bool = True,
    configs: Sequence[PipelineConfig] | None = None,
    jobs: int = 1,
) -> Leaderboard:
    """Cross-validate every (config, kind) pair and keep each kind's best.

    Run seeds derive from the position of the config in the *full* grid
    and of the kind among all nine, so restricting ``configs`` or
    ``kinds`` reproduces the matching subset of a full run bit-exactly.
    """
    kinds = list(kinds) if kinds is not None else list(ALL_KINDS)
    grid = enumerate_grid()
    if configs is None:
        config_indices = list(range(len(grid)))
    else:
        position = {c.ident: i for i, c in enumerate(grid)}
        config_indices = [position[c.ident] for c in configs]

    if jobs > 1 and len(config_indices) > 1:
        # plain ints: numpy scalars overflow the 64-bit masking in derive_seed
        chunks = [
            [int(i) for i in chunk]
            for chunk in np.array_split(config_indices, jobs)
            if len(chunk)
        ]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(
                pool.map(
                    _run_configs_star,
                    [(cohort, chunk, kinds, folds, seed, balance) for chunk in chunks],
                )
            )
        successes = [r for part in parts for r in part[0]]
        skipped = [s for part in parts for s in part[1]]
    else:
        successes, skipped = _run_configs(cohort, config_indices, kinds, folds, seed, balance)

    if not successes:
        detail = f"; first failure: {skipped[0].reason}" if skipped else ""
        raise AllRunsFailed(f"no (config, kind) run succeeded{detail}")

    best_per_kind: dict[ModelKind, CVReport] = {}
    for report in successes:
        current = best_per_kind.get(report.kind)
        if current is None or _row_sort_key(report) < _row_sort_key(current):
            best_per_kind[report.kind] = report
    rows = sorted(best_per_kind.values(), key=_row_sort_key)
    return Leaderboard(
        rows=rows,
        all_runs=successes,
        skipped=skipped,
        attempted=len(config_indices) * len(kinds),
        folds=folds,
        seed=seed,
    )


def _run_configs_star(args: tuple) -> tuple[list[CVReport], list[SkippedRun]]:
    return _run_configs(*args)


# ---------------------------------------------------------------------------
# confusion reporting and holdout support

@dataclass(frozen=True)
class ConfusionReport:
    cm: ConfusionMatrix
    sensitivity: float
    specificity: float

    def to_dict(self) -> dict:
        return {
            **self.cm.to_dict(),
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
        }


def confusion_report(
    model: FittedModel, ds: ProcessedDataset, split: Sequence[int] | None = None
) -> ConfusionReport:
    """Confusion counts plus sensitivity/specificity on held-out rows."""
    subset = ds if split is None else ds.subset(split)
    cm = confusion_from_predictions(subset.labels, predict_label(model, subset))
    return ConfusionReport(
        cm=cm,
        sensitivity=_ratio(cm.tp, cm.tp + cm.fn),
        specificity=_ratio(cm.tn, cm.tn + cm.fp),
    )


def holdout_split(
    labels: np.ndarray, fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified (train, holdout) row split with at least one holdout row per class."""
    labels = np.asarray(labels)
    if not 0.0 < fraction < 1.0:
        raise BadSpec(f"holdout fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    hold: list[np.ndarray] = []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise TooFewRows(f"class {cls} has {members.size} rows; cannot hold out")
        rng.shuffle(members)
        n_hold = min(members.size - 1, max(1, int(round(fraction * members.size))))
        hold.append(members[:n_hold])
    holdout = np.sort(np.concatenate(hold))
    mask = np.ones(labels.size, dtype=bool)
    mask[holdout] = False
    return np.flatnonzero(mask), holdout


# ---------------------------------------------------------------------------
# leaderboard export

_HEADER = (
    "Model",
    "Accuracy average",
    "F1 average",
    "Recall average",
    "Precision average",
    "Preprocessing",
)


def _leaderboard_cells(report: CVReport) -> tuple[str, ...]:
    m = report.mean_metrics
    return (
        DISPLAY_NAMES[report.kind],
        f"{m.accuracy:.3f}",
        f"{m.f1:.3f}",
        f"{m.recall:.3f}",
        f"{m.precision:.3f}",
        report.config_id or "",
    )


def leaderboard_to_csv(board: Leaderboard) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_HEADER)
    for report in board.rows:
        writer.writerow(_leaderboard_cells(report))
    return buf.getvalue()


def leaderboard_to_markdown(board: Leaderboard) -> str:
    lines = [
        "| " + " | ".join(_HEADER) + " |",
        "|" + "|".join(" --- " for _ in _HEADER) + "|",
    ]
    for report in board.rows:
        lines.append("| " + " | ".join(_leaderboard_cells(report)) + " |")
    return "\n".join(lines) + "\n"


def save_runs_jsonl(board: Leaderboard, path: str | Path) -> None:
    """Every successful run plus every skip, one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for report in board.all_runs:
            fh.write(json.dumps({"run": report.to_dict()}, sort_keys=True) + "\n")
        for skip in board.skipped:
            fh.write(
                json.dumps(
                    {
                        "skipped": {
                            "config": skip.config_id,
                            "kind": skip.kind.value,
                            "reason": skip.reason,
                        }
                    },
                    sort_keys=True,
                )
                + "\n"
            )
