"""Integer-points risk questionnaire derived from a logistic model.

Each nonzero coefficient of a logistic model over 0/1 indicator features
becomes one yes/no item worth a signed half-integer number of points:
|coefficient| in (0, 0.5] gives 0.5 points, (0.5, 1] gives 1, (1, 2]
gives 2, (2, 3] gives 3, (3, 4] gives 4, and anything beyond 4 is
capped at 4.  Patient totals fall into four risk bands:

    Low <= -5 < Average <= 1 < High <= 5.5 < VeryHigh

The 5.5 boundary belongs to High — the source table overlaps its two
top bands at 5.5, so the half-open reading is a documented decision
here.  A small literature-derived preset scale ships as package data
for demos and the browser questionnaire; it is illustrative, not
fitted, because the underlying clinical data is private.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cohort import FeatureGroup, FeatureSpec
from .errors import BadSpec, FeatureMismatch, MissingAnswer, NonBinaryFeature, NotLogistic
from .models import FittedModel, ModelKind
from .preprocess import FeatureProvenance, ProcessedDataset
from .rng import Xoshiro256StarStar


class Band(str, Enum):
    LOW = "Low"
    AVERAGE = "Average"
    HIGH = "High"
    VERY_HIGH = "VeryHigh"


BAND_THRESHOLDS = {"low_max": -5.0, "average_max": 1.0, "high_max": 5.5}

BAND_RANGES = {
    Band.LOW: "<= -5",
    Band.AVERAGE: "(-5, 1]",
    Band.HIGH: "(1, 5.5]",
    Band.VERY_HIGH: "> 5.5",
}

# points for successive |coefficient| interval upper bounds
_POINT_STEPS = ((0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0))

# treatment-related source features a clinician can influence, flagged
# for the what-if view of the questionnaire
MODIFIABLE_FEATURES = frozenset({"TTT", "HRRT_before_TT", "HRRT_during_TT", "TTRTP", "DTST"})


def bucket_points(coefficient: float) -> float:
    """Signed half-integer points for one coefficient; 0 stays 0."""
    mag = abs(coefficient)
    if mag == 0.0:
        return 0.0
    for upper, pts in _POINT_STEPS:
        if mag <= upper:
            return math.copysign(pts, coefficient)
    return math.copysign(4.0, coefficient)  # capped


@dataclass(frozen=True)
class ScaleItem:
    feature_name: str
    question_text: str
    points: float
    source_coefficient: float
    group: str | None = None
    modifiable: bool = False


@dataclass(frozen=True)
class ScaleDefinition:
    items: tuple[ScaleItem, ...]
    band_thresholds: dict[str, float] = field(default_factory=lambda: dict(BAND_THRESHOLDS))
    metadata: dict = field(default_factory=dict)

    @property
    def feature_names(self) -> list[str]:
        return [item.feature_name for item in self.items]


def _format_bound(value: float) -> str:
    return f"{value:g}"


def question_from_provenance(prov: FeatureProvenance) -> str:
    src = prov.source
    if prov.transform == "bin":
        if prov.lower is None:
            return f"{src} <= {_format_bound(prov.upper)}?"
        if prov.upper is None:
            return f"{src} > {_format_bound(prov.lower)}?"
        return f"{src} in ({_format_bound(prov.lower)}, {_format_bound(prov.upper)}]?"
    if prov.transform == "onehot":
        if prov.category == "1":
            return f"{src} present?"
        if prov.category == "0":
            return f"{src} absent?"
        return f"{src} is {prov.category}?"
    if prov.transform == "binary":
        return f"{src} present?"
    if prov.transform == "constant":
        return f"{src} recorded?"
    return f"{src} = 1?"


def build_scale(
    model: FittedModel,
    ds: ProcessedDataset,
    schema: Sequence[FeatureSpec] | None = None,
    overrides: Mapping[str, str] | None = None,
    fit_date: str | None = None,
) -> ScaleDefinition:
    """Turn logistic coefficients over indicator features into scale items."""
    if model.kind is not ModelKind.LOGISTIC_REGRESSION:
        raise NotLogistic(f"scales derive from LogisticRegression, not {model.kind.value}")
    if ds.feature_names != model.feature_names:
        raise FeatureMismatch("dataset columns do not match the fitted model")
    values = ds.matrix
    binary = (values == 0.0) | (values == 1.0)
    if not binary.all():
        offenders = [ds.feature_names[j] for j in np.flatnonzero(~binary.all(axis=0))[:3]]
        raise NonBinaryFeature(
            f"scale features must be 0/1 indicators; offending columns: {', '.join(offenders)}"
        )

    groups = {f.name: f.group.value for f in schema} if schema else {}
    overrides = dict(overrides or {})
    items = []
    for j, beta in enumerate(model.impl.weights):
        pts = bucket_points(float(beta))
        if pts == 0.0:
            continue
        prov = ds.provenance[j]
        items.append(
            ScaleItem(
                feature_name=prov.output_name,
                question_text=overrides.get(prov.output_name, question_from_provenance(prov)),
                points=pts,
                source_coefficient=float(beta),
                group=groups.get(prov.source),
                modifiable=prov.source in MODIFIABLE_FEATURES,
            )
        )
    return ScaleDefinition(
        items=tuple(items),
        metadata={
            "source_config": ds.config.ident if ds.config else None,
            "feature_count": len(model.feature_names),
            "fit_date": fit_date,
        },
    )


def score_patient(scale: ScaleDefinition, answers: Mapping[str, int]) -> float:
    missing = [item.feature_name for item in scale.items if item.feature_name not in answers]
    if missing:
        raise MissingAnswer(f"unanswered items: {', '.join(missing)}")
    total = 0.0
    for item in scale.items:
        answer = answers[item.feature_name]
        if answer not in (0, 1):
            raise BadSpec(f"answer for {item.feature_name} must be 0 or 1, got {answer!r}")
        if answer == 1:
            total += item.points
    return total


def assign_band(score: float, thresholds: Mapping[str, float] | None = None) -> Band:
    if not math.isfinite(score):
        raise BadSpec(f"score must be finite, got {score!r}")
    t = thresholds or BAND_THRESHOLDS
    if score <= t["low_max"]:
        return Band.LOW
    if score <= t["average_max"]:
        return Band.AVERAGE
    if score <= t["high_max"]:
        return Band.HIGH
    return Band.VERY_HIGH


# ---------------------------------------------------------------------------
# cohort stratification: per-band counts and outcome frequencies

@dataclass(frozen=True)
class StratumRow:
    band: Band
    score_range: str
    count: int
    frequency_fp0: float | None  # fraction without the outcome
    frequency_fp1: float | None  # fraction with the outcome


@dataclass(frozen=True)
class StratificationTable:
    rows: tuple[StratumRow, ...]
    total: int


def score_dataset(scale: ScaleDefinition, ds: ProcessedDataset) -> np.ndarray:
    """Vector of scale scores, one per dataset row."""
    column_of = {name: j for j, name in enumerate(ds.feature_names)}
    missing = [name for name in scale.feature_names if name not in column_of]
    if missing:
        raise MissingAnswer(f"dataset lacks scale features: {', '.join(missing)}")
    cols = [column_of[name] for name in scale.feature_names]
    sub = ds.matrix[:, cols]
    if not (((sub == 0.0) | (sub == 1.0)).all()):
        raise NonBinaryFeature("scored columns must be 0/1 indicators")
    points = np.array([item.points for item in scale.items])
    return sub @ points


def stratify_cohort(scale: ScaleDefinition, ds: ProcessedDataset) -> StratificationTable:
    scores = score_dataset(scale, ds)
    bands = [assign_band(float(s), scale.band_thresholds) for s in scores]
    rows = []
    for band in Band:
        members = [i for i, b in enumerate(bands) if b is band]
        if members:
            positives = int(ds.labels[members].sum())
            fp1 = positives / len(members)
            fp0 = 1.0 - fp1  # complement in float so the pair sums to exactly 1
        else:
            fp0 = fp1 = None
        rows.append(
            StratumRow(
                band=band,
                score_range=BAND_RANGES[band],
                count=len(members),
                frequency_fp0=fp0,
                frequency_fp1=fp1,
            )
        )
    return StratificationTable(rows=tuple(rows), total=len(bands))


def stratification_to_csv(table: StratificationTable) -> str:
    lines = ["band,score_range,count,frequency_FP0,frequency_FP1"]
    for row in table.rows:
        fp0 = "" if row.frequency_fp0 is None else f"{row.frequency_fp0:.6f}"
        fp1 = "" if row.frequency_fp1 is None else f"{row.frequency_fp1:.6f}"
        lines.append(f'{row.band.value},"{row.score_range}",{row.count},{fp0},{fp1}')
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# questionnaire documents

SCALE_FORMAT = "tafrisk-scale"
SCALE_VERSION = 1


def scale_to_doc(scale: ScaleDefinition) -> dict:
    return {
        "format": SCALE_FORMAT,
        "version": SCALE_VERSION,
        "band_thresholds": dict(scale.band_thresholds),
        "bands": [
            {"name": band.value, "range": BAND_RANGES[band]} for band in Band
        ],
        "items": [
            {
                "feature": item.feature_name,
                "question": item.question_text,
                "points": item.points,
                "source_coefficient": item.source_coefficient,
                "group": item.group,
                "modifiable": item.modifiable,
            }
            for item in scale.items
        ],
        "metadata": dict(scale.metadata),
    }


def scale_from_doc(doc: dict) -> ScaleDefinition:
    if doc.get("format") != SCALE_FORMAT:
        raise BadSpec(f"not a scale document (format = {doc.get('format')!r})")
    if doc.get("version") != SCALE_VERSION:
        raise BadSpec(f"unsupported scale document version {doc.get('version')!r}")
    items = tuple(
        ScaleItem(
            feature_name=entry["feature"],
            question_text=entry["question"],
            points=float(entry["points"]),
            source_coefficient=float(entry["source_coefficient"]),
            group=entry.get("group"),
            modifiable=bool(entry.get("modifiable", False)),
        )
        for entry in doc["items"]
    )
    return ScaleDefinition(
        items=items,
        band_thresholds=dict(doc["band_thresholds"]),
        metadata=dict(doc.get("metadata", {})),
    )


def save_scale(scale: ScaleDefinition, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scale_to_doc(scale), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_scale(path: str | Path) -> ScaleDefinition:
    return scale_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))


def load_preset_scale() -> ScaleDefinition:
    """The packaged illustrative scale (literature points, not fitted)."""
    doc = json.loads(
        resources.files("tafrisk.data").joinpath("preset_scale.json").read_text("utf-8")
    )
    return scale_from_doc(doc)


_GROUP_ORDER = [g.value for g in FeatureGroup]


def questionnaire_markdown(scale: ScaleDefinition) -> str:
    lines = ["# Atrial fibrillation risk questionnaire", ""]
    seen_groups: list[str | None] = []
    for item in scale.items:
        if item.group not in seen_groups:
            seen_groups.append(item.group)
    ordered = [g for g in _GROUP_ORDER if g in seen_groups]
    ordered += [g for g in seen_groups if g not in ordered]
    for group in ordered:
        lines.append(f"## {group or 'General'}")
        lines.append("")
        lines.append("| Question | Points |")
        lines.append("| --- | --- |")
        for item in scale.items:
            if item.group == group:
                flag = " *" if item.modifiable else ""
                lines.append(f"| {item.question_text}{flag} | {item.points:+g} |")
        lines.append("")
    if not scale.items:
        lines.append("_No scored items._")
        lines.append("")
    lines.append("## Risk bands")
    lines.append("")
    lines.append("| Band | Total score |")
    lines.append("| --- | --- |")
    for band in Band:
        lines.append(f"| {band.value} | {BAND_RANGES[band]} |")
    lines.append("")
    lines.append("Items marked * concern treatment choices that can still be changed.")
    return "\n".join(lines) + "\n"


def export_questionnaire(scale: ScaleDefinition, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(scale_to_doc(scale), indent=2, sort_keys=True) + "\n"
    if fmt == "markdown":
        return questionnaire_markdown(scale)
    raise BadSpec(f"unknown questionnaire format {fmt!r}")


# ---------------------------------------------------------------------------
# golden vectors for cross-implementation parity

def golden_vectors(scale: ScaleDefinition, count: int = 50, seed: int = 2024) -> dict:
    """Deterministic random answer sheets with reference scores and bands."""
    rng = Xoshiro256StarStar(seed)
    vectors = []
    for _ in range(count):
        answers = {item.feature_name: int(rng.random() < 0.5) for item in scale.items}
        score = score_patient(scale, answers)
        vectors.append(
            {"answers": answers, "score": score, "band": assign_band(score, scale.band_thresholds).value}
        )
    return {
        "format": "tafrisk-scale-vectors",
        "version": 1,
        "seed": seed,
        "n_items": len(scale.items),
        "vectors": vectors,
    }
