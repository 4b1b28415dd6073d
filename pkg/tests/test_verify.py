import json
import math

import numpy as np
import pytest

from nkmoment.torus import TorusSpec
from nkmoment.verify import (
    SUITE,
    Check,
    Outcome,
    Suite,
    VerifyContext,
    conventions_section,
    run_verify,
)


@pytest.fixture
def ctx():
    return VerifyContext(TorusSpec.lagrangian(), seed=42, samples=20)


def test_suite_registration():
    suite = Suite()
    suite.add("one", "first claim", lambda ctx, rng: Outcome(0.0, 1.0))
    suite.add("two", "second claim", lambda ctx, rng: Outcome(2.0, 1.0))

    # check it throws exception on duplicate names
    with pytest.raises(ValueError):
        suite.add("one", "again", lambda ctx, rng: Outcome(0.0, 1.0))

    assert 2 == suite.total_number_checks()
    assert ["one", "two"] == suite.list()


def test_suite_run_order_and_filter(ctx):
    suite = Suite()

    @suite.check("b", "runs first")
    def _b(ctx, rng):
        return Outcome(0.5, 1.0)

    @suite.check("a", "runs second")
    def _a(ctx, rng):
        return Outcome(0.0, 0.0, passed=False)

    @suite.check("c", "numpy verdict")
    def _c(ctx, rng):
        return Outcome(np.float64(0.0), 1.0, passed=np.float64(0.0) <= 1.0)

    results = suite.run(ctx, progress=False)
    assert ["b", "a", "c"] == [c.name for c in results]
    assert [True, False, True] == [c.passed for c in results]
    assert all(type(c.passed) is bool for c in results)
    json.dumps([c.to_dict() for c in results])
    assert ["a"] == [c.name for c in suite.run(ctx, progress=False, only=["a"])]


def test_outcome():
    assert Outcome(1e-13, 1e-12).ok
    assert not Outcome(1e-11, 1e-12).ok
    assert not Outcome(math.nan, 1.0).ok
    assert Outcome(5.0, 1.0, passed=True).ok
    assert type(Outcome(0.0, 1.0, passed=np.bool_(True)).ok) is bool
    assert type(Outcome(np.float64(0.5), np.float64(1.0)).ok) is bool


def test_check_document():
    doc = Check("edges", "edges lie in the boundary", 0.0, 1e-12, True).to_dict()
    assert doc == {
        "name": "edges",
        "paper_claim": "edges lie in the boundary",
        "residual": 0.0,
        "tol": 1e-12,
        "pass": True,
    }


def test_registered_checks():
    names = SUITE.list()
    assert 30 == SUITE.total_number_checks()
    for name in ["omega-pairing", "dnu-domega", "nearly-kaehler", "fiber-table", "conformal"]:
        assert name in names


def test_context_streams_are_reproducible(ctx):
    assert ctx.rng(3).uniform() == ctx.rng(3).uniform()
    assert ctx.rng(3).uniform() != ctx.rng(4).uniform()
    assert ctx.count(10) == 2
    assert ctx.count(50, minimum=2) == 2


def test_over_tight_tolerance_fails(ctx):
    tight = VerifyContext(ctx.spec, ctx.seed, ctx.samples, tol=1e-20)
    report = run_verify(tight, progress=False, only=["d-omega-fd", "dnu-domega"])
    assert not report["passed"]
    assert all(not c["pass"] for c in report["checks"])


def test_conventions_section(ctx):
    section = conventions_section(ctx)
    assert section["lambda"] == pytest.approx(-2.0)
    assert section["lambda_displayed_j"] == pytest.approx(2.0)
    assert section["metric_cross_sign"] == -1
    assert section["kernel"] == [[1, 1, 1], [-1, -1, -1]]
    assert section["injective"] is False
    assert section["pairing_signs"] == [1, -1, 1]
    assert section["dnu_sign"] == 1


def test_full_suite_passes(ctx):
    report = run_verify(ctx, progress=False)
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    assert [] == failed
    assert report["passed"]
    assert report["schema_version"] == 1
    assert len(report["checks"]) == SUITE.total_number_checks()
    for check in report["checks"]:
        assert type(check["pass"]) is bool
        assert set(check) == {"name", "paper_claim", "residual", "tol", "pass"}
    assert json.loads(json.dumps(report)) == report


def test_report_is_deterministic(ctx):
    only = ["sandwich", "hessian", "fiber-lift"]
    assert run_verify(ctx, progress=False, only=only) == run_verify(ctx, progress=False, only=only)
