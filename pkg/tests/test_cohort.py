"""Synthetic cohort generation, schema documents, and CSV round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from tafrisk.cohort import (
    DEFAULT_EFFECT_SIZES,
    FeatureGroup,
    MISSING,
    Cohort,
    FeatureKind,
    FeatureSpec,
    PatientRecord,
    SynthSpec,
    balance_ratio,
    cohort_summary,
    default_schema,
    generate_synthetic,
    load_cohort,
    load_schema,
    save_schema,
    schema_from_json,
    schema_to_json,
    write_cohort,
)
from tafrisk.errors import BadLabel, BadSpec, SchemaMismatch


def test_default_schema_shape():
    schema, label = default_schema()
    names = [f.name for f in schema]
    assert label == "AF"
    assert label not in names
    assert len(names) == len(set(names))
    kinds = {f.kind for f in schema}
    assert kinds == {FeatureKind.NUMERIC, FeatureKind.CATEGORICAL, FeatureKind.BINARY}
    # every default effect refers to a real feature
    assert set(DEFAULT_EFFECT_SIZES) <= set(names)


def test_schema_json_round_trip(tmp_path):
    schema, label = default_schema()
    doc = schema_to_json(schema, label)
    schema2, label2 = schema_from_json(doc)
    assert schema2 == schema and label2 == label
    path = tmp_path / "schema.json"
    save_schema(schema, label, path)
    assert load_schema(path) == (schema, label)


def _spec(**overrides):
    base = dict(n_patients=200, positive_rate=0.3, seed=11, missing_rate=0.0)
    base.update(overrides)
    return SynthSpec(**base)


def test_generation_is_deterministic():
    schema, label = default_schema()
    a = generate_synthetic(_spec(), schema, label)
    b = generate_synthetic(_spec(), schema, label)
    assert [r.cells for r in a.rows] == [r.cells for r in b.rows]
    assert np.array_equal(a.labels(), b.labels())
    c = generate_synthetic(_spec(seed=12), schema, label)
    assert [r.cells for r in a.rows] != [r.cells for r in c.rows]


def test_positive_count_is_exact():
    schema, label = default_schema()
    for n, rate in [(200, 0.3), (420, 0.302), (50, 0.5), (7, 0.25)]:
        cohort = generate_synthetic(_spec(n_patients=n, positive_rate=rate), schema, label)
        assert int(cohort.labels().sum()) == round(n * rate)


def test_missing_rate_masks_cells():
    schema, label = default_schema()
    cohort = generate_synthetic(_spec(missing_rate=0.1), schema, label)
    total = cohort.n_rows * len(schema)
    missing = sum(
        1 for row in cohort.rows for name in cohort.feature_names if row.cells[name] is MISSING
    )
    assert 0.05 < missing / total < 0.15
    assert all(r.label in (0, 1) for r in cohort.rows)  # labels never masked


def test_effects_raise_prevalence_of_driver():
    """A strongly positive-effect binary feature should be enriched among positives."""
    schema, label = default_schema()
    cohort = generate_synthetic(
        _spec(n_patients=600, effect_sizes={"SVE_during_TT": 8.0}), schema, label
    )
    vals, mask = cohort.column("SVE_during_TT")
    y = cohort.labels()
    rate_pos = vals[(y == 1) & ~mask].mean()
    rate_neg = vals[(y == 0) & ~mask].mean()
    assert rate_pos > rate_neg + 0.3


def test_generation_validates_spec():
    schema, label = default_schema()
    with pytest.raises(BadSpec):
        generate_synthetic(_spec(n_patients=0), schema, label)
    with pytest.raises(BadSpec):
        generate_synthetic(_spec(positive_rate=1.0), schema, label)
    with pytest.raises(BadSpec):
        generate_synthetic(_spec(missing_rate=1.0), schema, label)
    with pytest.raises(BadSpec):
        generate_synthetic(_spec(effect_sizes={"no_such_feature": 1.0}), schema, label)


def test_cohort_rejects_bad_rows():
    schema = (FeatureSpec(name="x", group=FeatureGroup.PHYSIOLOGICAL, kind=FeatureKind.NUMERIC),)
    with pytest.raises(BadLabel):
        Cohort(schema=schema, rows=(PatientRecord("p1", {"x": 1.0}, 2),), label_name="y")
    with pytest.raises(SchemaMismatch):
        Cohort(schema=schema, rows=(PatientRecord("p1", {"z": 1.0}, 1),), label_name="y")
    with pytest.raises(SchemaMismatch):
        Cohort(schema=schema, rows=(), label_name="x")  # label collides with feature


def test_column_view_codes_and_masks():
    schema = (
        FeatureSpec(name="num", group=FeatureGroup.PHYSIOLOGICAL, kind=FeatureKind.NUMERIC),
        FeatureSpec(
            name="cat",
            group=FeatureGroup.PHYSIOLOGICAL,
            kind=FeatureKind.CATEGORICAL,
            allowed_categories=("b", "a", "c"),
        ),
    )
    rows = (
        PatientRecord("p1", {"num": 1.5, "cat": "b"}, 0),
        PatientRecord("p2", {"num": MISSING, "cat": "a"}, 1),
        PatientRecord("p3", {"num": 2.0, "cat": "c"}, 0),
    )
    cohort = Cohort(schema=schema, rows=rows, label_name="y")
    vals, mask = cohort.column("num")
    assert mask.tolist() == [False, True, False]
    assert np.isnan(vals[1]) and vals[0] == 1.5
    cats, cmask = cohort.column("cat")
    assert cats.tolist() == [1.0, 0.0, 2.0]  # sorted category order a < b < c
    assert not cmask.any()


def test_csv_round_trip_preserves_cells(tmp_path, small_cohort):
    path = tmp_path / "cohort.csv"
    write_cohort(small_cohort, path)
    loaded = load_cohort(path, small_cohort.schema, small_cohort.label_name)
    assert loaded.n_rows == small_cohort.n_rows
    for a, b in zip(loaded.rows, small_cohort.rows):
        assert a.id == b.id and a.label == b.label
        for name in small_cohort.feature_names:
            va, vb = a.cells[name], b.cells[name]
            if vb is MISSING:
                assert va is MISSING
            elif isinstance(vb, float):
                assert va == pytest.approx(vb, abs=0, rel=0)
            else:
                assert va == vb


def test_load_rejects_wrong_header(tmp_path, small_cohort):
    path = tmp_path / "cohort.csv"
    write_cohort(small_cohort, path)
    wrong_schema = (FeatureSpec(name="only", group=FeatureGroup.PHYSIOLOGICAL, kind=FeatureKind.NUMERIC),)
    with pytest.raises(SchemaMismatch):
        load_cohort(path, wrong_schema, "AF")


@pytest.mark.parametrize(
    "prevalence,expected",
    [(0.5, "1:1"), (0.302, "3:7"), (0.25, "1:3"), (0.0, "0:1"), (1.0, "1:0")],
)
def test_balance_ratio(prevalence, expected):
    assert balance_ratio(prevalence) == expected


def test_summary_counts(small_cohort):
    summary = cohort_summary(small_cohort)
    assert summary.n_rows == small_cohort.n_rows
    assert summary.n_positive == int(small_cohort.labels().sum())
    assert len(summary.features) == len(small_cohort.schema)
    for f in summary.features:
        assert 0.0 <= f.missing_fraction <= 1.0
        assert (f.quartiles is None) != (f.cardinality is None)
