"""Command-line workbench driver.

Subcommands cover the full path: synthesize a cohort, run the
preprocessing-grid model comparison, build and apply the points scale,
and export diagnosis-pathway graphs.  Every run drops a ``manifest.json``
beside its outputs recording the resolved arguments and input digests;
``rerun --manifest`` replays it and reproduces the outputs byte for
byte.  Progress goes to standard error, data only to files.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .cohort import (
    DEFAULT_EFFECT_SIZES,
    Cohort,
    SynthSpec,
    cohort_summary,
    default_schema,
    generate_synthetic,
    load_cohort,
    load_schema,
    save_schema,
    write_cohort,
)
from .errors import BadSpec, NonConvergenceWarning, ValidationFailure, WorkbenchError
from .evaluate import (
    confusion_report,
    holdout_split,
    leaderboard_to_csv,
    leaderboard_to_markdown,
    run_grid,
    save_runs_jsonl,
)
from .models import ALL_KINDS, CLI_ALIASES, SEEDED_KINDS, ModelKind, fit
from .pathway import (
    build_graphs,
    cluster_modularity,
    export_graph,
    generate_synthetic_events,
    graph_report,
    parse_events,
    parse_group_labels,
    write_events,
)
from .preprocess import PipelineConfig, apply_pipeline
from .rng import derive_seed
from .scale import (
    assign_band,
    build_scale,
    export_questionnaire,
    golden_vectors,
    load_scale,
    save_scale,
    score_patient,
    stratification_to_csv,
    stratify_cohort,
)

OUT_ENV_VAR = "TAFRISK_OUT"
MANIFEST_NAME = "manifest.json"


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out: Path, command: str, args: argparse.Namespace, inputs: list[Path]) -> None:
    recorded = {k: v for k, v in vars(args).items() if k not in ("command", "out")}
    doc = {
        "format": "tafrisk-manifest",
        "version": 1,
        "command": command,
        "args": recorded,
        "package_version": __version__,
        "inputs": {str(Path(p).resolve()): _sha256(Path(p)) for p in inputs},
    }
    (out / MANIFEST_NAME).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_schema_arg(schema_path: str | None):
    if schema_path:
        return load_schema(schema_path)
    return default_schema()


def _parse_models(spec: str | None) -> list[ModelKind]:
    if not spec:
        return list(ALL_KINDS)
    kinds = []
    for token in spec.split(","):
        token = token.strip().lower()
        if token not in CLI_ALIASES:
            raise BadSpec(
                f"unknown model alias {token!r}; choose from {', '.join(sorted(CLI_ALIASES))}"
            )
        kinds.append(CLI_ALIASES[token])
    return kinds


def _parse_configs(spec: str | None) -> list[PipelineConfig] | None:
    if not spec:
        return None
    try:
        return [PipelineConfig.parse(token.strip()) for token in spec.split(",")]
    except ValueError as exc:
        raise BadSpec(str(exc)) from exc


def _load_effects(spec: str) -> dict[str, float]:
    if spec == "default":
        return dict(DEFAULT_EFFECT_SIZES)
    if spec == "none":
        return {}
    doc = json.loads(Path(spec).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise BadSpec("effects file must be a JSON object of feature -> log-odds weight")
    return {str(k): float(v) for k, v in doc.items()}


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args: argparse.Namespace, out: Path) -> None:
    from .report import cohort_overview_figure

    schema, label = _load_schema_arg(args.schema)
    spec = SynthSpec(
        n_patients=args.n,
        positive_rate=args.positive_rate,
        seed=args.seed,
        effect_sizes=_load_effects(args.effects),
        missing_rate=args.missing_rate,
        noise_scale=args.noise_scale,
    )
    cohort = generate_synthetic(spec, schema, label_name=label)
    write_cohort(cohort, out / "cohort.csv")
    save_schema(schema, label, out / "schema.json")
    summary = cohort_summary(cohort)
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("feature,group,kind,missing_fraction,cardinality,q25,q50,q75\n")
        for f in summary.features:
            quartiles = (
                ",".join(f"{q:.6g}" for q in f.quartiles) if f.quartiles else ",,"
            )
            fh.write(
                f"{f.name},{f.group},{f.kind},"
                f"{f.missing_fraction:.6f},{f.cardinality if f.cardinality is not None else ''},"
                f"{quartiles}\n"
            )
    cohort_overview_figure(summary, out / "figures" / "cohort_overview.png")
    inputs = [Path(args.schema)] if args.schema else []
    _write_manifest(out, "generate", args, inputs)
    _progress(
        f"generated {summary.n_rows} patients ({summary.n_positive} positive,"
        f" balance {summary.class_balance}) -> {out / 'cohort.csv'}"
    )


def _final_fit_params(kind: ModelKind, seed: int) -> dict:
    if kind in SEEDED_KINDS:
        return {"seed": derive_seed(seed, 4)}
    return {}


def cmd_grid(args: argparse.Namespace, out: Path) -> None:
    from .report import leaderboard_figure

    schema, label = _load_schema_arg(args.schema)
    cohort = load_cohort(args.cohort, schema, label)
    kinds = _parse_models(args.models)
    configs = _parse_configs(args.configs)
    warnings.filterwarnings("once", category=NonConvergenceWarning)

    holdout_indices = None
    grid_cohort = cohort
    if args.holdout is not None:
        train_idx, holdout_indices = holdout_split(
            cohort.labels(), args.holdout, derive_seed(args.seed, 3)
        )
        grid_cohort = Cohort(
            schema=cohort.schema,
            rows=tuple(cohort.rows[i] for i in train_idx),
            label_name=cohort.label_name,
        )
        _progress(
            f"holding out {len(holdout_indices)} of {cohort.n_rows} rows;"
            f" grid runs on the remaining {grid_cohort.n_rows}"
        )

    board = run_grid(
        grid_cohort,
        kinds=kinds,
        folds=args.folds,
        seed=args.seed,
        balance=not args.no_balance,
        configs=configs,
        jobs=args.jobs,
    )
    (out / "leaderboard.csv").write_text(leaderboard_to_csv(board), encoding="utf-8")
    (out / "leaderboard.md").write_text(leaderboard_to_markdown(board), encoding="utf-8")
    save_runs_jsonl(board, out / "runs.jsonl")
    leaderboard_figure(board, out / "figures" / "leaderboard.png")

    if holdout_indices is not None:
        best = board.rows[0]
        ds = apply_pipeline(cohort, PipelineConfig.parse(best.config_id))
        model = fit(best.kind, _final_fit_params(best.kind, args.seed), ds.subset(train_idx))
        report = confusion_report(model, ds, holdout_indices)
        _write_json(
            out / "holdout.json",
            {
                "kind": best.kind.value,
                "config": best.config_id,
                "n_holdout": len(holdout_indices),
                **report.to_dict(),
            },
        )
        _progress(
            f"holdout check ({best.kind.value} @ {best.config_id}):"
            f" sensitivity {report.sensitivity:.3f}, specificity {report.specificity:.3f}"
        )

    inputs = [Path(args.cohort)] + ([Path(args.schema)] if args.schema else [])
    _write_manifest(out, "grid", args, inputs)
    _progress(
        f"{board.attempted} runs attempted, {len(board.skipped)} skipped;"
        f" best {board.rows[0].kind.value} F1 {board.rows[0].mean_metrics.f1:.3f}"
        f" @ {board.rows[0].config_id}"
    )


def cmd_scale(args: argparse.Namespace, out: Path) -> None:
    from .report import stratification_figure

    inputs: list[Path] = []
    if args.action == "build":
        schema, label = _load_schema_arg(args.schema)
        cohort = load_cohort(args.cohort, schema, label)
        config = PipelineConfig.parse(args.config)
        ds = apply_pipeline(cohort, config)
        overrides = None
        if args.overrides:
            overrides = json.loads(Path(args.overrides).read_text(encoding="utf-8"))
            inputs.append(Path(args.overrides))
        params = {"l2_strength": args.l2, "max_iterations": args.max_iterations}
        model = fit(ModelKind.LOGISTIC_REGRESSION, params, ds)
        scale = build_scale(model, ds, schema=schema, overrides=overrides)
        save_scale(scale, out / "scale.json")
        (out / "questionnaire.md").write_text(
            export_questionnaire(scale, "markdown"), encoding="utf-8"
        )
        inputs.append(Path(args.cohort))
        _progress(f"scale with {len(scale.items)} items -> {out / 'scale.json'}")
    elif args.action == "score":
        scale = load_scale(args.scale)
        answers = json.loads(Path(args.answers).read_text(encoding="utf-8"))
        score = score_patient(scale, answers)
        band = assign_band(score, scale.band_thresholds)
        _write_json(out / "score.json", {"score": score, "band": band.value})
        inputs.extend([Path(args.scale), Path(args.answers)])
        _progress(f"score {score:g} -> band {band.value}")
    elif args.action == "stratify":
        scale = load_scale(args.scale)
        schema, label = _load_schema_arg(args.schema)
        cohort = load_cohort(args.cohort, schema, label)
        config_id = args.config or scale.metadata.get("source_config")
        if not config_id:
            raise BadSpec("scale has no recorded source config; pass --config explicitly")
        ds = apply_pipeline(cohort, PipelineConfig.parse(config_id))
        table = stratify_cohort(scale, ds)
        (out / "stratification.csv").write_text(stratification_to_csv(table), encoding="utf-8")
        stratification_figure(table, out / "figures" / "stratification.png")
        inputs.extend([Path(args.scale), Path(args.cohort)])
        _progress(f"stratified {table.total} patients across {len(table.rows)} bands")
    elif args.action == "export":
        scale = load_scale(args.scale)
        suffix = "json" if args.format == "json" else "md"
        (out / f"questionnaire.{suffix}").write_text(
            export_questionnaire(scale, args.format), encoding="utf-8"
        )
        inputs.append(Path(args.scale))
        _progress(f"questionnaire ({args.format}) -> {out / f'questionnaire.{suffix}'}")
    elif args.action == "vectors":
        scale = load_scale(args.scale)
        doc = golden_vectors(scale, count=args.count, seed=args.seed)
        _write_json(out / "scale_vectors.json", doc)
        inputs.append(Path(args.scale))
        _progress(f"{args.count} golden vectors -> {out / 'scale_vectors.json'}")
    else:  # pragma: no cover - argparse restricts choices
        raise BadSpec(f"unknown scale action {args.action!r}")
    _write_manifest(out, "scale", args, inputs)


def cmd_pathways(args: argparse.Namespace, out: Path) -> None:
    inputs: list[Path] = []
    if args.demo:
        n_af, n_non = args.demo
        events, labels = generate_synthetic_events(n_af, n_non, seed=args.seed)
        events_path, labels_path = write_events(events, labels, out)
        _progress(f"synthesized {len(events)} admissions -> {events_path}")
    else:
        if not args.events or not args.groups:
            raise BadSpec("pass --events and --groups, or use --demo N_AF N_NONAF")
        events = parse_events(args.events)
        labels = parse_group_labels(args.groups)
        inputs.extend([Path(args.events), Path(args.groups)])

    af_graph, non_af_graph = build_graphs(events, labels, all_pairs=args.all_pairs)
    formats = [f.strip() for f in args.formats.split(",")]
    reports = []
    for graph in (af_graph, non_af_graph):
        assignment = cluster_modularity(graph, seed=args.seed)
        reports.append(graph_report(graph, assignment))
        for fmt in formats:
            suffix = {"dot": "dot", "graphml": "graphml", "json": "json"}.get(fmt)
            if suffix is None:
                raise BadSpec(f"unknown graph format {fmt!r}")
            path = out / f"{graph.group}_graph.{suffix}"
            path.write_text(export_graph(graph, assignment, fmt), encoding="utf-8")
        _progress(
            f"{graph.group}: {len(graph.nodes)} codes, {len(graph.edges)} edges,"
            f" modularity {assignment.modularity:.4f}"
        )
    _write_json(out / "pathway_report.json", {"groups": reports})
    _write_manifest(out, "pathways", args, inputs)


def cmd_rerun(args: argparse.Namespace, out: Path) -> None:
    doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    if doc.get("format") != "tafrisk-manifest":
        raise BadSpec(f"{args.manifest} is not a run manifest")
    command = doc["command"]
    if command not in HANDLERS or command == "rerun":
        raise BadSpec(f"manifest names unknown command {command!r}")
    for path_str, digest in doc.get("inputs", {}).items():
        path = Path(path_str)
        if not path.exists():
            raise BadSpec(f"recorded input {path} no longer exists")
        if _sha256(path) != digest:
            _progress(f"warning: input {path} changed since the recorded run")
    replay = argparse.Namespace(command=command, out=str(out), **doc["args"])
    _progress(f"replaying {command} into {out}")
    HANDLERS[command](replay, out)


HANDLERS = {
    "generate": cmd_generate,
    "grid": cmd_grid,
    "scale": cmd_scale,
    "pathways": cmd_pathways,
    "rerun": cmd_rerun,
}


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tafrisk",
        description="Workbench for atrial-fibrillation risk models in thyrotoxicosis cohorts.",
    )
    parser.add_argument(
        "--out",
        default=None,
        help=f"output directory (default: ${OUT_ENV_VAR} or current directory)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a labeled cohort")
    p.add_argument("--n", type=int, required=True, help="number of patients")
    p.add_argument("--positive-rate", type=float, default=0.302)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--missing-rate", type=float, default=0.06)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument(
        "--effects",
        default="default",
        help="'default', 'none', or a JSON file of feature -> log-odds weight",
    )
    p.add_argument("--schema", default=None, help="schema JSON (default: built-in)")

    p = sub.add_parser("grid", help="run the preprocessing-grid model comparison")
    p.add_argument("--cohort", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--models", default=None, help="comma list of model aliases (default: all nine)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--configs", default=None, help="comma list of config ids (default: full grid)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-balance", action="store_true", help="skip training-fold oversampling")
    p.add_argument(
        "--holdout",
        type=float,
        default=None,
        help="reserve a stratified fraction and confusion-check the winner on it",
    )

    p = sub.add_parser("scale", help="build, apply, and export the points questionnaire")
    action = p.add_subparsers(dest="action", required=True)
    b = action.add_parser("build", help="fit logistic regression and derive the scale")
    b.add_argument("--cohort", required=True)
    b.add_argument("--schema", default=None)
    b.add_argument("--config", required=True, help="pipeline config id (stage 3 must be B3)")
    b.add_argument("--l2", type=float, default=1.0)
    b.add_argument("--max-iterations", type=int, default=50)
    b.add_argument("--overrides", default=None, help="JSON file of feature -> question text")
    s = action.add_parser("score", help="score one answers file")
    s.add_argument("--scale", required=True)
    s.add_argument("--answers", required=True)
    t = action.add_parser("stratify", help="band frequencies over a cohort")
    t.add_argument("--scale", required=True)
    t.add_argument("--cohort", required=True)
    t.add_argument("--schema", default=None)
    t.add_argument("--config", default=None, help="override the scale's recorded config")
    e = action.add_parser("export", help="emit the questionnaire document")
    e.add_argument("--scale", required=True)
    e.add_argument("--format", choices=("json", "markdown"), default="json")
    v = action.add_parser("vectors", help="golden answer vectors for UI parity checks")
    v.add_argument("--scale", required=True)
    v.add_argument("--count", type=int, default=50)
    v.add_argument("--seed", type=int, default=2024)

    p = sub.add_parser("pathways", help="diagnosis-transition graphs per outcome group")
    p.add_argument("--events", default=None, help="admissions CSV (patient_id, timestamp, code)")
    p.add_argument("--groups", default=None, help="labels CSV (patient_id, group)")
    p.add_argument(
        "--demo",
        nargs=2,
        type=int,
        metavar=("N_AF", "N_NONAF"),
        default=None,
        help="synthesize admission sequences instead of reading files",
    )
    p.add_argument("--all-pairs", action="store_true", help="link every earlier-to-later pair")
    p.add_argument("--formats", default="dot,json", help="comma list of dot,graphml,json")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("rerun", help="replay a recorded manifest byte-identically")
    p.add_argument("--manifest", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out or os.environ.get(OUT_ENV_VAR) or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](args, out)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
