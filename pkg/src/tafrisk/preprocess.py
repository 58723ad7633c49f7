"""Five-stage preprocessing and the 180-variant configuration grid.

Stages: (1) drop features with too many gaps, (2) impute the rest,
(3) encode to a numeric matrix, (4) optional collinearity filter,
(5) correlation-ranked feature selection.  Each stage has lettered
variants; the full grid is the 2*3*3*2*5 = 180 cartesian product.

Variant semantics in brief (thresholds are this artifact's choices,
bracketing the conventional values for each stage):

* stage 1: drop features with missing fraction > 0.5 (A1) or > 0.3 (B1)
* stage 2: numeric gaps to column mean (A2), median (B2), or most
  frequent value (C2); categorical and binary gaps to column mode
  under all three
* stage 3: A3 ordinal/naive coding; B3 tertile indicator bins for
  numerics plus one-hot for everything else; C3 raw numerics with
  one-hot categoricals
* stage 4: A4 drops the later column of any pair with |Pearson r| > 0.9;
  B4 keeps everything
* stage 5: keep the top 1.0 / 0.9 / 0.75 / 0.5 / 0.25 fraction of
  features ranked by absolute point-biserial correlation with the label

Quantiles use linear interpolation between order statistics (the
"type 7" convention) so bin thresholds are reproducible.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .cohort import MISSING, Cohort, FeatureKind, FeatureSpec, PatientRecord
from .errors import AllFeaturesDropped, AllMissingColumn, WorkbenchError


class Stage1(str, Enum):
    A1 = "A1"  # drop features with > 50% gaps
    B1 = "B1"  # drop features with > 30% gaps


class Stage2(str, Enum):
    A2 = "A2"  # numeric gaps -> mean
    B2 = "B2"  # numeric gaps -> median
    C2 = "C2"  # numeric gaps -> most frequent (smallest on ties)


class Stage3(str, Enum):
    A3 = "A3"  # naive coding: raw numerics, ordinal categoricals
    B3 = "B3"  # tertile bins + one-hot everywhere (all-binary output)
    C3 = "C3"  # raw numerics, one-hot categoricals


class Stage4(str, Enum):
    A4 = "A4"  # drop later column of each collinear pair
    B4 = "B4"  # keep collinear features


class Stage5(str, Enum):
    A5 = "A5"
    B5 = "B5"
    C5 = "C5"
    D5 = "D5"
    E5 = "E5"


MISSING_DROP_THRESHOLD = {Stage1.A1: 0.5, Stage1.B1: 0.3}
COLLINEARITY_THRESHOLD = 0.9
# exact keep fractions as (numerator, denominator) so ceil() stays integer-exact
SELECT_FRACTION = {
    Stage5.A5: (1, 1),
    Stage5.B5: (9, 10),
    Stage5.C5: (3, 4),
    Stage5.D5: (1, 2),
    Stage5.E5: (1, 4),
}


@dataclass(frozen=True)
class PipelineConfig:
    stage1: Stage1
    stage2: Stage2
    stage3: Stage3
    stage4: Stage4
    stage5: Stage5

    @property
    def ident(self) -> str:
        return " ".join(
            s.value for s in (self.stage1, self.stage2, self.stage3, self.stage4, self.stage5)
        )

    @classmethod
    def parse(cls, ident: str) -> "PipelineConfig":
        parts = ident.split()
        if len(parts) != 5:
            raise ValueError(f"config id must have five stage letters, got '{ident}'")
        return cls(Stage1(parts[0]), Stage2(parts[1]), Stage3(parts[2]), Stage4(parts[3]), Stage5(parts[4]))


def enumerate_grid() -> list[PipelineConfig]:
    """All 180 configs in lexicographic stage order."""
    return [
        PipelineConfig(*combo)
        for combo in itertools.product(Stage1, Stage2, Stage3, Stage4, Stage5)
    ]


@dataclass(frozen=True)
class FeatureProvenance:
    """Trace from one output column back to its single source feature."""

    output_name: str
    source: str
    transform: str  # raw | ordinal | binary | onehot | bin | constant
    category: str | None = None
    lower: float | None = None  # bin interval (lower, upper]; None = unbounded
    upper: float | None = None
    impute_rule: str | None = None  # set when stage 2 filled gaps in the source
    impute_value: float | str | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureProvenance":
        return cls(**doc)


@dataclass
class ProcessedDataset:
    feature_names: list[str]
    matrix: np.ndarray  # n_rows x n_features, float64
    labels: np.ndarray  # n_rows, int64 in {0, 1}
    provenance: list[FeatureProvenance]
    config: PipelineConfig | None = None
    row_ids: tuple[str, ...] | None = None

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.matrix.shape[1])

    def subset(self, indices: Sequence[int]) -> "ProcessedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return ProcessedDataset(
            feature_names=list(self.feature_names),
            matrix=self.matrix[idx],
            labels=self.labels[idx],
            provenance=list(self.provenance),
            config=self.config,
            row_ids=tuple(self.row_ids[i] for i in idx) if self.row_ids is not None else None,
        )

    def select_columns(self, cols: Sequence[int]) -> "ProcessedDataset":
        cols = list(cols)
        return ProcessedDataset(
            feature_names=[self.feature_names[j] for j in cols],
            matrix=self.matrix[:, cols],
            labels=self.labels,
            provenance=[self.provenance[j] for j in cols],
            config=self.config,
            row_ids=self.row_ids,
        )


# ---------------------------------------------------------------------------
# stage 1: gap-heavy feature removal

def drop_high_missing(cohort: Cohort, variant: Stage1) -> Cohort:
    threshold = MISSING_DROP_THRESHOLD[variant]
    kept: list[FeatureSpec] = []
    for spec in cohort.schema:
        _, mask = cohort.column(spec.name)
        if float(mask.mean()) <= threshold:
            kept.append(spec)
    if not kept:
        raise AllFeaturesDropped(f"variant {variant.value}: no feature has <= {threshold:.0%} gaps")
    if len(kept) == len(cohort.schema):
        return cohort
    names = [f.name for f in kept]
    rows = tuple(
        PatientRecord(id=r.id, cells={n: r.cells[n] for n in names}, label=r.label)
        for r in cohort.rows
    )
    return Cohort(schema=tuple(kept), rows=rows, label_name=cohort.label_name)


# ---------------------------------------------------------------------------
# stage 2: imputation

def _column_statistic(cohort: Cohort, spec: FeatureSpec, variant: Stage2) -> tuple[str, float | int | str]:
    vals, mask = cohort.column(spec.name)
    observed = vals[~mask]
    if observed.size == 0:
        raise AllMissingColumn(f"feature '{spec.name}' has no observed cells to impute from")
    if spec.kind is FeatureKind.NUMERIC:
        if variant is Stage2.A2:
            return "mean", float(np.mean(observed))
        if variant is Stage2.B2:
            return "median", float(np.median(observed))
        values, counts = np.unique(observed, return_counts=True)
        return "mode", float(values[np.argmax(counts)])
    # mode for categorical and binary; ties resolved toward the smallest code,
    # i.e. the lexicographically first category or the value 0
    codes, counts = np.unique(observed.astype(np.int64), return_counts=True)
    mode_code = int(codes[np.argmax(counts)])
    if spec.kind is FeatureKind.CATEGORICAL:
        return "mode", sorted(spec.allowed_categories)[mode_code]
    return "mode", mode_code


def _impute_with_stats(
    cohort: Cohort, variant: Stage2
) -> tuple[Cohort, dict[str, tuple[str, float | int | str]]]:
    stats: dict[str, tuple[str, float | int | str]] = {}
    fills: dict[str, float | int | str] = {}
    for spec in cohort.schema:
        _, mask = cohort.column(spec.name)
        if mask.any():
            rule, value = _column_statistic(cohort, spec, variant)
            stats[spec.name] = (rule, value)
            fills[spec.name] = value
    if not fills:
        return cohort, stats
    rows = tuple(
        PatientRecord(
            id=r.id,
            cells={
                name: (fills[name] if cell is MISSING else cell)
                for name, cell in r.cells.items()
            },
            label=r.label,
        )
        for r in cohort.rows
    )
    return Cohort(schema=cohort.schema, rows=rows, label_name=cohort.label_name), stats


def impute(cohort: Cohort, variant: Stage2) -> Cohort:
    return _impute_with_stats(cohort, variant)[0]


# ---------------------------------------------------------------------------
# stage 3: encoding

def _encode_feature(
    cohort: Cohort, spec: FeatureSpec, variant: Stage3
) -> list[tuple[FeatureProvenance, np.ndarray]]:
    vals, mask = cohort.column(spec.name)
    if mask.any():
        raise WorkbenchError(f"encode requires an imputed cohort; '{spec.name}' still has gaps")
    name = spec.name
    out: list[tuple[FeatureProvenance, np.ndarray]] = []

    if spec.kind is FeatureKind.NUMERIC:
        if variant in (Stage3.A3, Stage3.C3):
            out.append((FeatureProvenance(name, name, "raw"), vals.copy()))
        else:  # tertile indicator bins
            if np.all(vals == vals[0]):
                out.append((FeatureProvenance(f"{name}__all", name, "constant"),
                            np.ones_like(vals)))
            else:
                t1, t2 = (float(q) for q in np.quantile(vals, [1.0 / 3.0, 2.0 / 3.0]))
                if t1 < t2:
                    intervals = [(None, t1), (t1, t2), (t2, None)]
                else:
                    # tied tertiles collapse the middle bin; the two remaining
                    # intervals still partition the line
                    intervals = [(None, t1), (t1, None)]
                for i, (lo, hi) in enumerate(intervals, start=1):
                    if lo is None:
                        ind = (vals <= hi).astype(np.float64)
                    elif hi is None:
                        ind = (vals > lo).astype(np.float64)
                    else:
                        ind = ((vals > lo) & (vals <= hi)).astype(np.float64)
                    out.append((FeatureProvenance(f"{name}__q{i}", name, "bin", lower=lo, upper=hi), ind))
    elif spec.kind is FeatureKind.CATEGORICAL:
        categories = sorted(spec.allowed_categories)
        if variant is Stage3.A3:
            out.append((FeatureProvenance(name, name, "ordinal"), vals.copy()))
        else:
            for code, cat in enumerate(categories):
                ind = (vals == code).astype(np.float64)
                out.append((FeatureProvenance(f"{name}__eq__{cat}", name, "onehot", category=cat), ind))
    else:  # binary
        if variant is Stage3.B3:
            for value in (0, 1):
                ind = (vals == value).astype(np.float64)
                out.append(
                    (FeatureProvenance(f"{name}__eq__{value}", name, "onehot", category=str(value)), ind)
                )
        else:
            out.append((FeatureProvenance(name, name, "binary"), vals.copy()))
    return out


def encode(cohort: Cohort, variant: Stage3) -> ProcessedDataset:
    columns: list[np.ndarray] = []
    provenance: list[FeatureProvenance] = []
    for spec in cohort.schema:
        for prov, col in _encode_feature(cohort, spec, variant):
            provenance.append(prov)
            columns.append(col)
    matrix = np.column_stack(columns) if columns else np.zeros((cohort.n_rows, 0))
    return ProcessedDataset(
        feature_names=[p.output_name for p in provenance],
        matrix=matrix,
        labels=cohort.labels(),
        provenance=provenance,
        config=None,
        row_ids=tuple(r.id for r in cohort.rows),
    )


# ---------------------------------------------------------------------------
# stage 4: collinearity filter

def _correlation_matrix(matrix: np.ndarray) -> np.ndarray:
    """Pearson r between columns; zero-variance columns correlate with nothing."""
    n, d = matrix.shape
    centered = matrix - matrix.mean(axis=0)
    sd = np.sqrt((centered**2).sum(axis=0))
    corr = centered.T @ centered
    with np.errstate(invalid="ignore", divide="ignore"):
        corr /= np.outer(sd, sd)
    corr[~np.isfinite(corr)] = 0.0
    degenerate = sd == 0.0
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    return corr


def filter_collinear(ds: ProcessedDataset, variant: Stage4) -> ProcessedDataset:
    if variant is Stage4.B4:
        return ds
    d = ds.n_features
    corr = _correlation_matrix(ds.matrix)
    keep = np.ones(d, dtype=bool)
    for i in range(d):
        if not keep[i]:
            continue
        later = np.abs(corr[i, i + 1 :]) > COLLINEARITY_THRESHOLD
        keep[i + 1 :] &= ~later
    if keep.all():
        return ds
    return ds.select_columns(np.flatnonzero(keep))


# ---------------------------------------------------------------------------
# stage 5: correlation-ranked selection

def label_correlation_scores(ds: ProcessedDataset) -> np.ndarray:
    """Absolute point-biserial correlation of each column with the label."""
    y = ds.labels.astype(np.float64)
    yc = y - y.mean()
    sy = math.sqrt(float((yc**2).sum()))
    centered = ds.matrix - ds.matrix.mean(axis=0)
    sx = np.sqrt((centered**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (centered.T @ yc) / (sx * sy)
    r[~np.isfinite(r)] = 0.0
    return np.abs(r)


def select_features(ds: ProcessedDataset, variant: Stage5) -> ProcessedDataset:
    num, den = SELECT_FRACTION[variant]
    d = ds.n_features
    n_keep = max(1, -(-d * num // den))  # ceil, exact in integers
    if n_keep >= d:
        return ds
    scores = label_correlation_scores(ds)
    ranked = sorted(range(d), key=lambda j: (-scores[j], j))
    chosen = sorted(ranked[:n_keep])  # survivors keep their original order
    return ds.select_columns(chosen)


# ---------------------------------------------------------------------------
# full pipeline

def apply_pipeline(cohort: Cohort, config: PipelineConfig) -> ProcessedDataset:
    """Compose stages 1 through 5; errors carry the config identifier."""
    try:
        reduced = drop_high_missing(cohort, config.stage1)
        imputed, stats = _impute_with_stats(reduced, config.stage2)
        ds = encode(imputed, config.stage3)
        if stats:
            ds.provenance = [
                dataclasses.replace(p, impute_rule=stats[p.source][0], impute_value=stats[p.source][1])
                if p.source in stats
                else p
                for p in ds.provenance
            ]
            ds.feature_names = [p.output_name for p in ds.provenance]
        ds = filter_collinear(ds, config.stage4)
        ds = select_features(ds, config.stage5)
    except WorkbenchError as exc:
        exc.args = (f"[{config.ident}] {exc}",)
        raise
    if not np.isfinite(ds.matrix).all():
        raise WorkbenchError(f"[{config.ident}] non-finite values in processed matrix")
    ds.config = config
    return ds


def iter_pipeline_products(
    cohort: Cohort, configs: Sequence[PipelineConfig] | None = None
) -> "list[tuple[PipelineConfig, ProcessedDataset | None, WorkbenchError | None]]":
    """Apply many configs, sharing work across common stage-1..3 prefixes.

    Equivalent to calling :func:`apply_pipeline` per config (covered by
    tests) but roughly 15x cheaper over the full grid, which matters for
    the 1620-run comparison.
    """
    configs = list(configs) if configs is not None else enumerate_grid()
    encoded_cache: dict[tuple[Stage1, Stage2, Stage3], ProcessedDataset | WorkbenchError] = {}
    stage4_cache: dict[tuple[Stage1, Stage2, Stage3, Stage4], ProcessedDataset | WorkbenchError] = {}
    out: list[tuple[PipelineConfig, ProcessedDataset | None, WorkbenchError | None]] = []

    def _tag(exc: WorkbenchError, config: PipelineConfig) -> WorkbenchError:
        wrapped = type(exc)(f"[{config.ident}] {exc}")
        return wrapped

    for config in configs:
        key3 = (config.stage1, config.stage2, config.stage3)
        if key3 not in encoded_cache:
            try:
                reduced = drop_high_missing(cohort, config.stage1)
                imputed, stats = _impute_with_stats(reduced, config.stage2)
                ds = encode(imputed, config.stage3)
                if stats:
                    ds.provenance = [
                        dataclasses.replace(
                            p, impute_rule=stats[p.source][0], impute_value=stats[p.source][1]
                        )
                        if p.source in stats
                        else p
                        for p in ds.provenance
                    ]
                    ds.feature_names = [p.output_name for p in ds.provenance]
                encoded_cache[key3] = ds
            except WorkbenchError as exc:
                encoded_cache[key3] = exc
        base = encoded_cache[key3]
        if isinstance(base, WorkbenchError):
            out.append((config, None, _tag(base, config)))
            continue

        key4 = key3 + (config.stage4,)
        if key4 not in stage4_cache:
            try:
                stage4_cache[key4] = filter_collinear(base, config.stage4)
            except WorkbenchError as exc:
                stage4_cache[key4] = exc
        filtered = stage4_cache[key4]
        if isinstance(filtered, WorkbenchError):
            out.append((config, None, _tag(filtered, config)))
            continue

        try:
            ds = select_features(filtered, config.stage5)
        except WorkbenchError as exc:
            out.append((config, None, _tag(exc, config)))
            continue
        ds = dataclasses.replace(ds, config=config)
        out.append((config, ds, None))
    return out


# ---------------------------------------------------------------------------
# export

def save_dataset(ds: ProcessedDataset, csv_path: str | Path) -> None:
    """Matrix as CSV plus a JSON provenance sidecar next to it."""
    import csv as _csv
    import json as _json

    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.feature_names, "label"])
        for i in range(ds.n_rows):
            writer.writerow([*(repr(float(v)) for v in ds.matrix[i]), int(ds.labels[i])])
    sidecar = {
        "config": ds.config.ident if ds.config else None,
        "features": [p.to_dict() for p in ds.provenance],
    }
    csv_path.with_suffix(csv_path.suffix + ".provenance.json").write_text(
        _json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
