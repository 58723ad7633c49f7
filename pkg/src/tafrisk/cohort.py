"""Patient cohort schema, CSV round-trip, and seeded synthetic generation.

A cohort is a typed table: each feature is numeric, categorical, or binary
and belongs to one of four clinical groups; every cell either holds a value
of the declared kind or is ``MISSING``.  Missing is a first-class cell
state, never a sentinel number, because the first two preprocessing stages
operate on missingness explicitly.

Real patient data is out of scope; :func:`generate_synthetic` produces
deterministic cohorts with controllable signal for everything downstream.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BadLabel, BadSpec, EmptyCohort, SchemaMismatch, SingleClass
from .rng import Xoshiro256StarStar


class FeatureGroup(str, Enum):
    PHYSIOLOGICAL = "Physiological"
    INITIAL_CARDIO = "InitialCardio"
    TT_CHARACTERISTICS = "TTCharacteristics"
    CARDIO_DURING_TT = "CardioDuringTT"


class FeatureKind(str, Enum):
    NUMERIC = "Numeric"
    CATEGORICAL = "Categorical"
    BINARY = "Binary"


class _MissingType:
    """Singleton marker for an absent cell value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __reduce__(self):
        return (_MissingType, ())


MISSING = _MissingType()

Cell = float | int | str | _MissingType


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    group: FeatureGroup
    kind: FeatureKind
    allowed_categories: tuple[str, ...] | None = None
    unit: str | None = None

    def __post_init__(self):
        if self.kind is FeatureKind.CATEGORICAL:
            if not self.allowed_categories:
                raise BadSpec(f"categorical feature '{self.name}' needs allowed_categories")
        elif self.allowed_categories is not None:
            raise BadSpec(f"feature '{self.name}' is {self.kind.value}; allowed_categories not permitted")


@dataclass(frozen=True)
class PatientRecord:
    id: str
    cells: Mapping[str, Cell]
    label: int


@dataclass
class Cohort:
    """Immutable after construction; safe to share across workers."""

    schema: tuple[FeatureSpec, ...]
    rows: tuple[PatientRecord, ...]
    label_name: str

    def __post_init__(self):
        self.schema = tuple(self.schema)
        self.rows = tuple(self.rows)
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise SchemaMismatch("duplicate feature names in schema")
        if self.label_name in names:
            raise SchemaMismatch(f"label '{self.label_name}' collides with a feature name")
        expected = set(names)
        for row in self.rows:
            if set(row.cells.keys()) != expected:
                raise SchemaMismatch(f"row '{row.id}': cell keys do not match schema")
            if row.label not in (0, 1):
                raise BadLabel(f"row '{row.id}': label must be 0 or 1, got {row.label!r}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.schema]

    def feature(self, name: str) -> FeatureSpec:
        for f in self.schema:
            if f.name == name:
                return f
        raise SchemaMismatch(f"unknown feature '{name}'")

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=np.int64)

    def prevalence(self) -> float:
        return float(self.labels().mean()) if self.rows else 0.0

    def check_fittable(self) -> None:
        """Row count and class presence required before any model fitting."""
        if self.n_rows < 2:
            raise EmptyCohort(f"need at least 2 rows, have {self.n_rows}")
        labels = {r.label for r in self.rows}
        if labels != {0, 1}:
            raise SingleClass("both label classes must be present before fitting")

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Columnar view of one feature: (values, missing mask).

        Numeric values are float64 (NaN where missing); categorical values
        are indices into the sorted category list; binary values are 0/1.
        """
        spec = self.feature(name)
        n = self.n_rows
        mask = np.zeros(n, dtype=bool)
        vals = np.zeros(n, dtype=np.float64)
        if spec.kind is FeatureKind.CATEGORICAL:
            code = {c: i for i, c in enumerate(sorted(spec.allowed_categories))}
        for i, row in enumerate(self.rows):
            cell = row.cells[name]
            if cell is MISSING:
                mask[i] = True
                vals[i] = np.nan
            elif spec.kind is FeatureKind.CATEGORICAL:
                vals[i] = code[cell]
            else:
                vals[i] = float(cell)
        return vals, mask


@dataclass(frozen=True)
class SynthSpec:
    n_patients: int
    positive_rate: float
    seed: int
    effect_sizes: Mapping[str, float] = field(default_factory=dict)
    missing_rate: float = 0.0
    noise_scale: float = 1.0  # multiplier on the logistic noise term


# ---------------------------------------------------------------------------
# schema JSON document

def schema_to_json(schema: Sequence[FeatureSpec], label_name: str) -> dict:
    return {
        "format_version": 1,
        "label": label_name,
        "features": [
            {
                "name": f.name,
                "group": f.group.value,
                "kind": f.kind.value,
                "allowed_categories": list(f.allowed_categories) if f.allowed_categories else None,
                "unit": f.unit,
            }
            for f in schema
        ],
    }


def schema_from_json(doc: dict) -> tuple[tuple[FeatureSpec, ...], str]:
    try:
        features = tuple(
            FeatureSpec(
                name=item["name"],
                group=FeatureGroup(item["group"]),
                kind=FeatureKind(item["kind"]),
                allowed_categories=tuple(item["allowed_categories"]) if item.get("allowed_categories") else None,
                unit=item.get("unit"),
            )
            for item in doc["features"]
        )
        return features, doc["label"]
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaMismatch(f"malformed schema document: {exc}") from exc


def save_schema(schema: Sequence[FeatureSpec], label_name: str, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schema_to_json(schema, label_name), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_schema(path: str | Path) -> tuple[tuple[FeatureSpec, ...], str]:
    return schema_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def default_schema() -> tuple[tuple[FeatureSpec, ...], str]:
    """The built-in 37-feature thyrotoxicosis schema and its AF label."""
    doc = json.loads(resources.files("tafrisk.data").joinpath("default_schema.json").read_text("utf-8"))
    return schema_from_json(doc)


# Demo log-odds profile for synthetic cohorts over the default schema.
# Magnitudes sized to dominate unit logistic noise, so learners with a
# sensible preprocessing config reach high F1 on generated cohorts.
DEFAULT_EFFECT_SIZES: dict[str, float] = {
    "SVE_during_TT": 7.5,
    "HR_during_TT": 9.0,
    "age": 6.0,
    "DTT": 5.0,
    "FT3": 5.0,
    "gender": 5.0,
    "AH_during_TT": 4.0,
    "MHR_during_TT": 4.0,
    "BMI": 4.0,
    "VE_during_TT": 2.5,
    "TSHRA": 2.5,
    "HB": -5.0,
    "HRRT_during_TT": -4.0,
    "EHT": -2.5,
}


# ---------------------------------------------------------------------------
# CSV I/O

ID_COLUMN = "patient_id"


def _parse_cell(raw: str, spec: FeatureSpec, row_no: int) -> Cell:
    if raw == "":
        return MISSING
    if spec.kind is FeatureKind.CATEGORICAL:
        if raw not in spec.allowed_categories:
            raise SchemaMismatch(
                f"row {row_no}, feature '{spec.name}': value '{raw}' outside allowed categories"
            )
        return raw
    try:
        value = float(raw)
    except ValueError:
        return MISSING
    if spec.kind is FeatureKind.BINARY:
        return int(value) if value in (0.0, 1.0) else MISSING
    return value


def load_cohort(path: str | Path, schema: Sequence[FeatureSpec], label_name: str) -> Cohort:
    """Load and validate a cohort CSV (UTF-8, header row, empty cell = missing)."""
    schema = tuple(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyCohort(f"{path}: no header row") from None
        col = {name: i for i, name in enumerate(header)}
        for spec in schema:
            if spec.name not in col:
                raise SchemaMismatch(f"{path}: missing column '{spec.name}'")
        if label_name not in col:
            raise BadLabel(f"{path}: missing label column '{label_name}'")
        id_idx = col.get(ID_COLUMN)

        rows: list[PatientRecord] = []
        for row_no, fields in enumerate(reader, start=1):
            if not fields:
                continue
            raw_label = fields[col[label_name]]
            if raw_label == "":
                raise BadLabel(f"{path}: row {row_no}: label is empty")
            try:
                label_val = float(raw_label)
            except ValueError:
                raise BadLabel(f"{path}: row {row_no}: label '{raw_label}' is not 0/1") from None
            if label_val not in (0.0, 1.0):
                raise BadLabel(f"{path}: row {row_no}: label '{raw_label}' is not 0/1")
            cells = {spec.name: _parse_cell(fields[col[spec.name]], spec, row_no) for spec in schema}
            pid = fields[id_idx] if id_idx is not None else f"p{row_no:04d}"
            rows.append(PatientRecord(id=pid, cells=cells, label=int(label_val)))

    if not rows:
        raise EmptyCohort(f"{path}: no data rows")
    return Cohort(schema=schema, rows=tuple(rows), label_name=label_name)


def _format_cell(cell: Cell) -> str:
    if cell is MISSING:
        return ""
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def write_cohort(cohort: Cohort, path: str | Path) -> None:
    """Write CSV that :func:`load_cohort` reads back exactly (values, mask, labels)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        names = cohort.feature_names
        writer.writerow([ID_COLUMN, *names, cohort.label_name])
        for row in cohort.rows:
            writer.writerow([row.id, *(_format_cell(row.cells[n]) for n in names), row.label])


# ---------------------------------------------------------------------------
# synthetic generation

def _logistic_noise(rng: Xoshiro256StarStar) -> float:
    # open-interval uniform keeps log() finite
    u = ((rng.next_u64() >> 11) + 0.5) * 2.0**-53
    return math.log(u / (1.0 - u))


def generate_synthetic(spec: SynthSpec, schema: Sequence[FeatureSpec], label_name: str = "AF") -> Cohort:
    """Draw a deterministic cohort from a logistic outcome model.

    Feature draws (single xoshiro256** stream, row-major in schema order):
    numeric cells are uniform on [0, 1), categoricals uniform over their
    category list, binaries Bernoulli(0.5).  Each patient's risk score is
    the effect-weighted sum of contributions (numeric and binary cells
    contribute their value; a categorical cell contributes its sorted
    category index rescaled to [0, 1]) plus standard logistic noise.  The
    intercept is calibrated by exact count: the round(n * positive_rate)
    highest-scoring patients receive label 1, so realized prevalence is
    always within half a row of the requested rate.  Missing masking runs
    last, row-major at ``missing_rate`` per feature cell.
    """
    schema = tuple(schema)
    if spec.n_patients < 1:
        raise BadSpec(f"n_patients must be >= 1, got {spec.n_patients}")
    if not 0.0 < spec.positive_rate < 1.0:
        raise BadSpec(f"positive_rate must be in (0, 1), got {spec.positive_rate}")
    if not 0.0 <= spec.missing_rate < 1.0:
        raise BadSpec(f"missing_rate must be in [0, 1), got {spec.missing_rate}")
    names = {f.name for f in schema}
    for key in spec.effect_sizes:
        if key not in names:
            raise BadSpec(f"effect_sizes names unknown feature '{key}'")

    rng = Xoshiro256StarStar(spec.seed)
    n = spec.n_patients

    cat_order = {
        f.name: {c: i for i, c in enumerate(sorted(f.allowed_categories))}
        for f in schema
        if f.kind is FeatureKind.CATEGORICAL
    }

    raw_rows: list[dict[str, Cell]] = []
    scores = np.zeros(n, dtype=np.float64)
    for i in range(n):
        cells: dict[str, Cell] = {}
        contribution = 0.0
        for f in schema:
            if f.kind is FeatureKind.NUMERIC:
                value: Cell = rng.random()
                x = float(value)
            elif f.kind is FeatureKind.CATEGORICAL:
                cats = f.allowed_categories
                value = cats[rng.below(len(cats))]
                k = len(cats)
                x = cat_order[f.name][value] / (k - 1) if k > 1 else 0.0
            else:
                value = 1 if rng.random() < 0.5 else 0
                x = float(value)
            cells[f.name] = value
            effect = spec.effect_sizes.get(f.name, 0.0)
            if effect:
                contribution += effect * x
        raw_rows.append(cells)
        scores[i] = contribution

    for i in range(n):
        scores[i] += spec.noise_scale * _logistic_noise(rng)

    n_pos = int(math.floor(n * spec.positive_rate + 0.5))
    ranked = sorted(range(n), key=lambda i: (-scores[i], i))
    labels = np.zeros(n, dtype=np.int64)
    labels[ranked[:n_pos]] = 1

    if spec.missing_rate > 0.0:
        for cells in raw_rows:
            for f in schema:
                if rng.random() < spec.missing_rate:
                    cells[f.name] = MISSING

    width = max(4, len(str(n)))
    rows = tuple(
        PatientRecord(id=f"p{i + 1:0{width}d}", cells=raw_rows[i], label=int(labels[i]))
        for i in range(n)
    )
    return Cohort(schema=schema, rows=rows, label_name=label_name)


# ---------------------------------------------------------------------------
# summary

@dataclass(frozen=True)
class FeatureSummary:
    name: str
    group: str
    kind: str
    missing_fraction: float
    cardinality: int | None = None
    quartiles: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class CohortSummary:
    n_rows: int
    n_positive: int
    prevalence: float
    class_balance: str
    features: tuple[FeatureSummary, ...]


def balance_ratio(prevalence: float, max_part: int = 9) -> str:
    """Nearest small-integer class ratio, e.g. 0.302 -> '3:7'."""
    if prevalence <= 0.0:
        return "0:1"
    if prevalence >= 1.0:
        return "1:0"
    best = None
    for a in range(1, max_part + 1):
        for b in range(1, max_part + 1):
            err = abs(a / (a + b) - prevalence)
            key = (err, a + b, a)
            if best is None or key < best[0]:
                best = (key, f"{a}:{b}")
    return best[1]


def cohort_summary(cohort: Cohort) -> CohortSummary:
    feats = []
    for spec in cohort.schema:
        vals, mask = cohort.column(spec.name)
        observed = vals[~mask]
        missing_fraction = float(mask.mean()) if cohort.n_rows else 1.0
        cardinality = None
        quartiles = None
        if spec.kind is FeatureKind.NUMERIC:
            if observed.size:
                q = np.percentile(observed, [25, 50, 75])
                quartiles = (float(q[0]), float(q[1]), float(q[2]))
        else:
            cardinality = int(np.unique(observed).size)
        feats.append(
            FeatureSummary(
                name=spec.name,
                group=spec.group.value,
                kind=spec.kind.value,
                missing_fraction=missing_fraction,
                cardinality=cardinality,
                quartiles=quartiles,
            )
        )
    n_pos = int(cohort.labels().sum()) if cohort.rows else 0
    prevalence = cohort.prevalence()
    return CohortSummary(
        n_rows=cohort.n_rows,
        n_positive=n_pos,
        prevalence=prevalence,
        class_balance=balance_ratio(prevalence),
        features=tuple(feats),
    )
