"""Tests for the identity suite behind `pbn check`."""

import pytest

from src.api.model import compile_model, parse_model
from src.checks import identities
from src.checks.identities import (
    DYNAMIC_NAMES,
    CheckLine,
    CheckStatus,
    check_increments,
    check_peliti,
    run_checks,
)
from src.core.config import DEFAULT_CONFIG
from src.core.observables import expectation_fn


def statuses(report) -> dict[str, CheckStatus]:
    return {line.name: line.status for line in report.lines}


def test_static_model_skips_dynamics(load_fixture):
    """Test that a static model reports every dynamic identity as SKIP."""
    report = run_checks(load_fixture("die"))
    assert report.passed
    found = statuses(report)
    for name in DYNAMIC_NAMES:
        assert found[name] is CheckStatus.SKIP
    assert found["bracket-vs-bayes"] is CheckStatus.PASS


def test_dtmc_runs_every_dynamic_identity(load_fixture):
    """Test that the invertible two-state DTMC passes the dynamic identities."""
    found = statuses(run_checks(load_fixture("dtmc2")))
    for name in ("row-column-duality", "conservation", "semigroup", "picture-equivalence",
                 "unit-operator", "time-dependent-basis"):
        assert found[name] is CheckStatus.PASS, name
    assert found["increment-stationarity"] is CheckStatus.SKIP


def test_counting_chain_checks_increments(load_fixture):
    """Test that the truncated counting chain runs the increment identity."""
    model = load_fixture("birth")
    line = check_increments(model, DEFAULT_CONFIG)
    assert line.status is CheckStatus.PASS
    assert line.residual <= DEFAULT_CONFIG.increment_tolerance


def test_peliti_skipped_for_non_occupation_labels(load_fixture):
    """Test that Peliti agreement only runs on states 0..K."""
    assert check_peliti(load_fixture("dtmc2"), DEFAULT_CONFIG).status is CheckStatus.SKIP


def test_peliti_runs_on_small_occupation_space():
    """Test Peliti agreement on a three-level occupation model."""
    model = compile_model(parse_model(
        '{"version": "model-schema-1", "name": "occ", "states": ["0", "1", "2"],'
        ' "measure": {"0": 0.2, "1": 0.5, "2": 0.3}}'
    ))
    line = check_peliti(model, DEFAULT_CONFIG)
    assert line.status is CheckStatus.PASS


def test_peliti_residual_is_absolute(monkeypatch):
    """Test that a 5e-13 relative error on <n^2> = 16 fails the absolute threshold."""
    model = compile_model(parse_model(
        '{"version": "model-schema-1", "name": "top", "states": ["0", "1", "2", "3", "4"],'
        ' "measure": {"4": 1.0}}'
    ))
    assert check_peliti(model, DEFAULT_CONFIG).residual <= DEFAULT_CONFIG.tolerance

    def drifting(occ, func, factorial_cutoff):
        plain = expectation_fn(occ.space, func, occ.number_operator(0))
        return plain * (1.0 + 5e-13)

    monkeypatch.setattr(identities, "peliti_expectation", drifting)
    line = check_peliti(model, DEFAULT_CONFIG)
    assert line.status is CheckStatus.FAIL
    assert line.residual == pytest.approx(8e-12, rel=1e-2)


def test_reducible_chain_still_checks(load_fixture):
    """Test that a reducible chain is checkable even without a stationary law."""
    found = statuses(run_checks(load_fixture("reducible")))
    assert found["conservation"] is CheckStatus.PASS
    assert found["semigroup"] is CheckStatus.PASS


def test_line_rendering():
    """Test the PASS/FAIL and SKIP line formats."""
    line = CheckLine(name="semigroup", status=CheckStatus.PASS, residual=1.5e-16, threshold=1e-9)
    assert line.render().startswith("PASS semigroup")
    assert line.render().endswith("max_residual=1.500e-16 tol=1e-09")
    skip = CheckLine(name="indicator", status=CheckStatus.SKIP, note="no observables declared")
    assert skip.render().split() == ["SKIP", "indicator", "no", "observables", "declared"]


def test_failed_normalization_fails_the_report():
    """Test that a lenient load with a broken measure reports FAIL."""
    model = compile_model(parse_model(
        '{"version": "model-schema-1", "name": "bad", "states": ["a", "b"],'
        ' "measure": {"a": 0.4, "b": 0.5}}', strict=False,
    ), strict=False)
    report = run_checks(model)
    assert not report.passed
    assert statuses(report)["normalization"] is CheckStatus.FAIL
