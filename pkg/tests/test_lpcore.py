import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebitcs.exceptions import InvalidArgumentError
from onebitcs.lpcore import (
    EQ,
    GE,
    LE,
    TOL_FEAS,
    LpProblem,
    feasible_point,
    format_lp,
    solve_lp,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures", "lp_fixtures.json")


def load_fixtures():
    with open(FIXTURES) as fh:
        return json.load(fh)["fixtures"]


def as_problem(f):
    lower = [-np.inf if free else 0.0 for free in f["free"]]
    return LpProblem(np.array(f["objective"]), np.array(f["A"]), tuple(f["relations"]), np.array(f["rhs"]), lower)


def check_certificate(p, sol, tol=1e-7):
    """Primal feasibility, dual sign feasibility, nonnegative reduced costs
    and a zero duality gap."""
    x, y = sol.point, sol.duals
    r = p.A @ x - p.rhs
    scale = 1 + np.abs(p.rhs)
    rel = np.array(p.relations)
    assert np.all(r[rel == GE] >= -tol * scale[rel == GE])
    assert np.all(r[rel == LE] <= tol * scale[rel == LE])
    assert np.all(np.abs(r[rel == EQ]) <= tol * scale[rel == EQ])
    assert np.all(x[p.lower == 0] >= -tol)
    assert np.all(y[rel == GE] >= -tol) and np.all(y[rel == LE] <= tol)
    d = p.objective - p.A.T @ y
    assert np.all(d[p.lower == 0] >= -tol)
    assert np.allclose(d[p.lower != 0], 0, atol=tol)
    assert y @ p.rhs == pytest.approx(sol.objective_value, rel=1e-8, abs=1e-8)


def test_single_active_constraint():
    sol = solve_lp(LpProblem.from_constraints([1.0], [([1.0], GE, 3.0)]))
    assert sol.is_optimal
    assert sol.point[0] == pytest.approx(3.0)
    assert sol.objective_value == pytest.approx(3.0)


def test_empty_polytope_is_infeasible():
    sol = solve_lp(LpProblem.from_constraints([1.0], [([1.0], GE, 1.0), ([1.0], LE, 0.0)]))
    assert sol.status == "infeasible" and sol.point is None


def test_facet_optimum():
    # pinned against HiGHS: objective -1 on the whole facet
    sol = solve_lp(LpProblem.from_constraints([-1.0, -1.0], [([1.0, 1.0], LE, 1.0)]))
    assert sol.objective_value == pytest.approx(-1.0, abs=1e-12)
    assert sol.point.sum() == pytest.approx(1.0) and np.all(sol.point >= 0)


def test_unbounded_direction():
    sol = solve_lp(LpProblem.from_constraints([-1.0, 0.0], [([1.0, -1.0], LE, 1.0)]))
    assert sol.status == "unbounded"


@pytest.mark.parametrize("f", [f for f in load_fixtures()], ids=lambda f: f["name"])
def test_fixture(f):
    sol = solve_lp(as_problem(f))
    assert sol.status == f["status"]
    if f["status"] == "optimal":
        assert abs(sol.objective_value - f["optimum"]) <= 1e-8 * max(1.0, abs(f["optimum"]))
        check_certificate(as_problem(f), sol)


def test_singleton_feasible_point():
    pt = feasible_point(np.array([[1.0], [1.0]]), (GE, LE), np.array([0.0, 0.0]))
    assert pt is not None and pt[0] == pytest.approx(0.0, abs=1e-12)
    assert feasible_point(np.array([[1.0], [1.0]]), (GE, LE), np.array([1.0, 0.0])) is None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_feasible_point_for_constructed_sign_system(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 25), rng.integers(1, 10)
    A = rng.normal(size=(m, n))
    z = rng.normal(size=n)
    b = np.where(A @ z > 0, 1.0, -1.0)
    # b_i * a_i . z >= b_i * a_i . z - slack holds at z by construction
    rhs = b * (A @ z) - rng.random(m)
    pt = feasible_point(b[:, None] * A, (GE,) * m, rhs, np.full(n, -np.inf))
    assert pt is not None
    assert np.all(b * (A @ pt) >= rhs - 1e-7 * (1 + np.abs(rhs)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_lp_certificate_and_no_further_improvement(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 9), rng.integers(2, 9)
    A = np.abs(rng.normal(size=(m, n))) + 0.05
    rhs = A @ rng.random(n) + 0.5
    c = rng.normal(size=n)
    rels = tuple(rng.choice([LE, LE, GE], size=m))
    rhs = np.where(np.array(rels) == GE, rhs * 0.3, rhs)
    p = LpProblem(c, A, rels, rhs)
    sol = solve_lp(p)
    if sol.status == "unbounded":
        return
    assert sol.is_optimal
    check_certificate(p, sol)
    # demanding a strictly better objective must leave nothing feasible
    cut = LpProblem(c, np.vstack([A, c]), rels + (LE,), np.append(rhs, sol.objective_value - 1e-6 * (1 + abs(sol.objective_value))))
    assert solve_lp(cut).status == "infeasible"


def test_solve_is_deterministic():
    f = load_fixtures()[12]
    a, b = solve_lp(as_problem(f)), solve_lp(as_problem(f))
    assert a.point.tobytes() == b.point.tobytes()
    assert a.iterations == b.iterations


def test_degenerate_cycling_example_terminates():
    f = next(f for f in load_fixtures() if f["name"] == "beale_cycling")
    sol = solve_lp(as_problem(f))
    assert sol.objective_value == pytest.approx(-0.05)


def test_problem_validation():
    with pytest.raises(InvalidArgumentError):
        LpProblem(np.ones(2), np.ones((1, 3)), (LE,), np.ones(1))
    with pytest.raises(InvalidArgumentError):
        LpProblem(np.ones(2), np.ones((1, 2)), ("<",), np.ones(1))
    with pytest.raises(InvalidArgumentError):
        LpProblem(np.ones(2), np.ones((1, 2)), (LE,), np.ones(1), lower=[0.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        LpProblem(np.ones(2), np.array([[1.0, np.inf]]), (LE,), np.ones(1))


def test_format_lp_is_stable():
    p = LpProblem.from_constraints([1.0, -2.0], [([1.0, 1.0], LE, 4.0)], lower=[0.0, -np.inf])
    text = format_lp(p)
    assert text == format_lp(p)
    assert text.splitlines()[0] == "NVARS 2"
    assert "-inf" in text and "<=" in text


def test_tolerance_default():
    assert 0 < TOL_FEAS < 1e-6
