"""End-to-end command-line flows in temporary directories.

Every command must leave a manifest beside its outputs, and replaying
that manifest with ``rerun`` must reproduce every file — figures
included — byte for byte."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tafrisk import __version__
from tafrisk.cli import main
from tafrisk.cohort import default_schema, load_cohort
from tafrisk.scale import load_scale


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def gen_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    rc = main(["--out", str(out), "generate", "--n", "90", "--seed", "3"])
    assert rc == 0
    return out


# ---------------------------------------------------------------------------
# generate

def test_generate_outputs(gen_dir):
    for name in ("cohort.csv", "schema.json", "summary.csv", "manifest.json"):
        assert (gen_dir / name).is_file()
    assert (gen_dir / "figures" / "cohort_overview.png").stat().st_size > 0
    schema, label = default_schema()
    cohort = load_cohort(gen_dir / "cohort.csv", schema, label)
    assert cohort.n_rows == 90

    manifest = json.loads((gen_dir / "manifest.json").read_text())
    assert manifest["format"] == "tafrisk-manifest"
    assert manifest["version"] == 1
    assert manifest["command"] == "generate"
    assert manifest["package_version"] == __version__
    assert manifest["args"]["n"] == 90
    assert manifest["args"]["seed"] == 3
    assert "out" not in manifest["args"] and "command" not in manifest["args"]
    assert manifest["inputs"] == {}  # built-in schema, no file inputs

    summary_lines = (gen_dir / "summary.csv").read_text().strip().split("\n")
    assert summary_lines[0].startswith("feature,group,kind,")
    assert len(summary_lines) == 1 + len(schema)


def test_generate_rerun_is_byte_identical(gen_dir, tmp_path):
    replay = tmp_path / "replay"
    rc = main(["--out", str(replay), "rerun", "--manifest", str(gen_dir / "manifest.json")])
    assert rc == 0
    assert _tree_bytes(replay) == _tree_bytes(gen_dir)


def test_usage_errors_exit_2(tmp_path):
    assert main([]) == 2  # missing subcommand
    assert main(["generate"]) == 2  # missing --n
    assert main(["definitely-not-a-command"]) == 2
    assert main(["--out", str(tmp_path), "generate", "--n", "0"]) == 2  # bad spec


# ---------------------------------------------------------------------------
# grid

GRID_ARGS = [
    "--models",
    "lr,gnb",
    "--configs",
    "A1 A2 B3 B4 C5,A1 B2 A3 B4 D5",
    "--folds",
    "3",
    "--seed",
    "1",
]


@pytest.fixture(scope="module")
def grid_dir(gen_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("grid")
    rc = main(
        ["--out", str(out), "grid", "--cohort", str(gen_dir / "cohort.csv"), *GRID_ARGS]
    )
    assert rc == 0
    return out


def test_grid_outputs(grid_dir):
    csv_lines = (grid_dir / "leaderboard.csv").read_text().strip().split("\n")
    assert csv_lines[0] == (
        "Model,Accuracy average,F1 average,Recall average,Precision average,Preprocessing"
    )
    assert len(csv_lines) == 3  # two model kinds -> two rows
    md = (grid_dir / "leaderboard.md").read_text()
    assert md.startswith("| Model |")
    runs = [json.loads(line) for line in (grid_dir / "runs.jsonl").read_text().splitlines()]
    assert len(runs) == 4  # 2 configs x 2 kinds, none skipped
    assert all("run" in doc for doc in runs)
    assert (grid_dir / "figures" / "leaderboard.png").stat().st_size > 0
    manifest = json.loads((grid_dir / "manifest.json").read_text())
    assert manifest["command"] == "grid"
    assert list(manifest["inputs"]) != []  # the cohort file is recorded


def test_grid_rerun_is_byte_identical(grid_dir, tmp_path):
    replay = tmp_path / "replay"
    rc = main(["--out", str(replay), "rerun", "--manifest", str(grid_dir / "manifest.json")])
    assert rc == 0
    assert _tree_bytes(replay) == _tree_bytes(grid_dir)


def test_grid_holdout_report(gen_dir, tmp_path):
    out = tmp_path / "hold"
    rc = main(
        [
            "--out",
            str(out),
            "grid",
            "--cohort",
            str(gen_dir / "cohort.csv"),
            *GRID_ARGS,
            "--holdout",
            "0.25",
        ]
    )
    assert rc == 0
    doc = json.loads((out / "holdout.json").read_text())
    for key in ("kind", "config", "n_holdout", "tp", "fp", "fn", "tn", "sensitivity", "specificity"):
        assert key in doc
    assert doc["tp"] + doc["fp"] + doc["fn"] + doc["tn"] == doc["n_holdout"]
    assert 0.0 <= doc["sensitivity"] <= 1.0
    assert 0.0 <= doc["specificity"] <= 1.0


def test_grid_rejects_unknown_alias_and_config(gen_dir, tmp_path):
    base = ["--out", str(tmp_path), "grid", "--cohort", str(gen_dir / "cohort.csv")]
    assert main(base + ["--models", "xgboost"]) == 2
    assert main(base + ["--configs", "Z9 A2 A3 A4 A5"]) == 2


def test_grid_runtime_failure_exits_1(gen_dir, tmp_path):
    rc = main(
        [
            "--out",
            str(tmp_path),
            "grid",
            "--cohort",
            str(gen_dir / "cohort.csv"),
            "--models",
            "lr",
            "--configs",
            "A1 A2 B3 B4 C5",
            "--folds",
            "500",  # more folds than rows: every run fails
        ]
    )
    assert rc == 1


# ---------------------------------------------------------------------------
# scale

@pytest.fixture(scope="module")
def scale_dir(gen_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("scale")
    rc = main(
        [
            "--out",
            str(out),
            "scale",
            "build",
            "--cohort",
            str(gen_dir / "cohort.csv"),
            "--config",
            "A1 A2 B3 B4 C5",
        ]
    )
    assert rc == 0
    return out


def test_scale_build_outputs(scale_dir):
    scale = load_scale(scale_dir / "scale.json")
    assert scale.items
    assert scale.metadata["source_config"] == "A1 A2 B3 B4 C5"
    text = (scale_dir / "questionnaire.md").read_text()
    assert "| Question | Points |" in text
    manifest = json.loads((scale_dir / "manifest.json").read_text())
    assert manifest["command"] == "scale"
    assert manifest["args"]["action"] == "build"


def test_scale_build_rerun_is_byte_identical(scale_dir, tmp_path):
    replay = tmp_path / "replay"
    rc = main(["--out", str(replay), "rerun", "--manifest", str(scale_dir / "manifest.json")])
    assert rc == 0
    assert _tree_bytes(replay) == _tree_bytes(scale_dir)


def test_scale_score_flow(scale_dir, tmp_path):
    scale = load_scale(scale_dir / "scale.json")
    answers = {name: 0 for name in scale.feature_names}
    answers_path = tmp_path / "answers.json"
    answers_path.write_text(json.dumps(answers))
    out = tmp_path / "scored"
    rc = main(
        [
            "--out",
            str(out),
            "scale",
            "score",
            "--scale",
            str(scale_dir / "scale.json"),
            "--answers",
            str(answers_path),
        ]
    )
    assert rc == 0
    doc = json.loads((out / "score.json").read_text())
    assert doc == {"score": 0.0, "band": "Average"}

    # an incomplete sheet is a validation failure
    partial = dict(answers)
    partial.pop(scale.feature_names[0])
    answers_path.write_text(json.dumps(partial))
    assert (
        main(
            [
                "--out",
                str(out),
                "scale",
                "score",
                "--scale",
                str(scale_dir / "scale.json"),
                "--answers",
                str(answers_path),
            ]
        )
        == 2
    )


def test_scale_stratify_flow(scale_dir, gen_dir, tmp_path):
    out = tmp_path / "strata"
    rc = main(
        [
            "--out",
            str(out),
            "scale",
            "stratify",
            "--scale",
            str(scale_dir / "scale.json"),
            "--cohort",
            str(gen_dir / "cohort.csv"),
        ]
    )
    assert rc == 0
    import csv
    import io

    text = (out / "stratification.csv").read_text()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["band", "score_range", "count", "frequency_FP0", "frequency_FP1"]
    assert sum(int(r[2]) for r in rows[1:]) == 90
    assert (out / "figures" / "stratification.png").stat().st_size > 0


def test_scale_export_and_vectors(scale_dir, tmp_path):
    out = tmp_path / "export"
    rc = main(
        [
            "--out",
            str(out),
            "scale",
            "export",
            "--scale",
            str(scale_dir / "scale.json"),
            "--format",
            "markdown",
        ]
    )
    assert rc == 0
    assert (out / "questionnaire.md").read_text() == (scale_dir / "questionnaire.md").read_text()

    vec_out = tmp_path / "vectors"
    rc = main(
        [
            "--out",
            str(vec_out),
            "scale",
            "vectors",
            "--scale",
            str(scale_dir / "scale.json"),
            "--count",
            "10",
        ]
    )
    assert rc == 0
    doc = json.loads((vec_out / "scale_vectors.json").read_text())
    assert doc["format"] == "tafrisk-scale-vectors"
    assert len(doc["vectors"]) == 10
    scale = load_scale(scale_dir / "scale.json")
    assert doc["n_items"] == len(scale.items)


def test_scale_build_rejects_numeric_config(gen_dir, tmp_path):
    rc = main(
        [
            "--out",
            str(tmp_path),
            "scale",
            "build",
            "--cohort",
            str(gen_dir / "cohort.csv"),
            "--config",
            "A1 A2 A3 B4 A5",  # keeps numeric columns
        ]
    )
    assert rc == 2


# ---------------------------------------------------------------------------
# pathways

@pytest.fixture(scope="module")
def path_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("paths")
    rc = main(
        [
            "--out",
            str(out),
            "pathways",
            "--demo",
            "8",
            "6",
            "--formats",
            "dot,graphml,json",
            "--seed",
            "4",
        ]
    )
    assert rc == 0
    return out


def test_pathways_demo_outputs(path_dir):
    for group in ("AF", "nonAF"):
        for suffix in ("dot", "graphml", "json"):
            assert (path_dir / f"{group}_graph.{suffix}").is_file()
    assert (path_dir / "events.csv").is_file()
    assert (path_dir / "groups.csv").is_file()
    report = json.loads((path_dir / "pathway_report.json").read_text())
    assert [g["group"] for g in report["groups"]] == ["AF", "nonAF"]
    for g in report["groups"]:
        assert g["n_nodes"] > 0 and g["n_edges"] > 0
        assert sum(b["size"] for b in g["communities"]) == g["n_nodes"]


def test_pathways_rerun_is_byte_identical(path_dir, tmp_path):
    replay = tmp_path / "replay"
    rc = main(["--out", str(replay), "rerun", "--manifest", str(path_dir / "manifest.json")])
    assert rc == 0
    assert _tree_bytes(replay) == _tree_bytes(path_dir)


def test_pathways_from_files(path_dir, tmp_path):
    out = tmp_path / "fromfiles"
    rc = main(
        [
            "--out",
            str(out),
            "pathways",
            "--events",
            str(path_dir / "events.csv"),
            "--groups",
            str(path_dir / "groups.csv"),
            "--seed",
            "4",
        ]
    )
    assert rc == 0
    # same admissions, same clustering seed: identical graph exports
    for name in ("AF_graph.dot", "nonAF_graph.dot", "pathway_report.json"):
        assert (out / name).read_bytes() == (path_dir / name).read_bytes()
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["inputs"]) == 2


def test_pathways_validation_failures(tmp_path):
    assert main(["--out", str(tmp_path), "pathways"]) == 2  # no inputs at all
    assert (
        main(["--out", str(tmp_path), "pathways", "--demo", "3", "3", "--formats", "gif"]) == 2
    )


def test_pathways_empty_group_exits_1(tmp_path):
    events = tmp_path / "events.csv"
    events.write_text(
        "patient_id,timestamp,code\n"
        "p1,2020-01-01,A\np1,2020-02-01,B\n"
        "p2,2020-01-01,A\n"  # single admission: nonAF graph stays empty
    )
    groups = tmp_path / "groups.csv"
    groups.write_text("patient_id,group\np1,AF\np2,nonAF\n")
    rc = main(
        ["--out", str(tmp_path / "o"), "pathways", "--events", str(events), "--groups", str(groups)]
    )
    assert rc == 1


# ---------------------------------------------------------------------------
# rerun edge cases and the output-directory default

def test_rerun_rejects_non_manifest(scale_dir, tmp_path):
    rc = main(["--out", str(tmp_path), "rerun", "--manifest", str(scale_dir / "scale.json")])
    assert rc == 2


def test_out_env_var_is_the_default_directory(tmp_path, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("TAFRISK_OUT", str(target))
    rc = main(["generate", "--n", "25", "--seed", "1"])
    assert rc == 0
    assert (target / "cohort.csv").is_file()
    assert (target / "manifest.json").is_file()
