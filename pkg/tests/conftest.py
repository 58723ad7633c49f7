"""Shared fixtures plus a summary block that reports each top-level
acceptance check as its own pass/fail line."""

from __future__ import annotations

import pytest

from tafrisk.cohort import (
    DEFAULT_EFFECT_SIZES,
    SynthSpec,
    default_schema,
    generate_synthetic,
)

ACCEPTANCE_FILE = "test_acceptance.py"


def make_cohort(
    n: int = 420,
    positive_rate: float = 0.302,
    seed: int = 7,
    effects: dict | None = None,
    missing_rate: float = 0.06,
    noise_scale: float = 1.0,
):
    schema, label = default_schema()
    spec = SynthSpec(
        n_patients=n,
        positive_rate=positive_rate,
        seed=seed,
        effect_sizes=DEFAULT_EFFECT_SIZES if effects is None else effects,
        missing_rate=missing_rate,
        noise_scale=noise_scale,
    )
    return generate_synthetic(spec, schema, label_name=label)


@pytest.fixture(scope="session")
def reference_cohort():
    """The 420-patient cohort every end-to-end check runs on."""
    return make_cohort()


@pytest.fixture(scope="session")
def small_cohort():
    """A quicker cohort for per-module tests."""
    return make_cohort(n=120, seed=13, missing_rate=0.04)


_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance):
        verdict = "PASS" if _acceptance[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {nodeid.split('::')[-1]}")
