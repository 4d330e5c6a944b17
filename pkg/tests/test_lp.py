"""Simplex solver against hand cases and brute-force vertex enumeration."""

import itertools

import numpy as np
import pytest

from varsched.lp import LpProblem, kkt_residuals, solve_lp


def brute_force_bounded(problem, tol=1e-9):
    """Enumerate basic solutions of A x = b with n - m variables at a bound."""
    m, n = problem.a.shape
    best = None
    nonbasic_choices = itertools.combinations(range(n), n - m)
    for nb in nonbasic_choices:
        basic = [j for j in range(n) if j not in nb]
        B = problem.a[:, basic]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        for bounds in itertools.product(*[(problem.lower[j], problem.upper[j])
                                          for j in nb]):
            if any(np.isinf(v) for v in bounds):
                continue
            x = np.zeros(n)
            for j, v in zip(nb, bounds):
                x[j] = v
            rhs = problem.b - problem.a[:, list(nb)] @ np.array(bounds)
            xb = np.linalg.solve(B, rhs)
            x[basic] = xb
            if np.any(x < problem.lower - tol) or np.any(x > problem.upper + tol):
                continue
            val = float(problem.c @ x)
            if best is None or val < best:
                best = val
    return best


def test_simple_equality_lp():
    # min x + 2y  s.t.  x + y = 10, 0 <= x <= 6, 0 <= y <= 10
    p = LpProblem(c=[1.0, 2.0], a=[[1.0, 1.0]], b=[10.0],
                  lower=[0.0, 0.0], upper=[6.0, 10.0])
    sol = solve_lp(p)
    assert sol.ok
    np.testing.assert_allclose(sol.x, [6.0, 4.0], atol=1e-9)
    assert sol.objective == pytest.approx(14.0)
    # marginal value of one more unit of b: the cheaper slot is full, so 2
    assert sol.duals[0] == pytest.approx(2.0)


def test_free_variable():
    # min x - y  s.t.  x - y = 3 with y free, x in [0, 5]: any feasible
    # point scores 3; check feasibility and objective only
    p = LpProblem(c=[1.0, -1.0], a=[[1.0, -1.0]], b=[3.0],
                  lower=[0.0, -np.inf], upper=[5.0, np.inf])
    sol = solve_lp(p)
    assert sol.ok
    assert sol.objective == pytest.approx(3.0)


def test_infeasible_detected():
    p = LpProblem(c=[1.0], a=[[1.0]], b=[10.0], lower=[0.0], upper=[5.0])
    assert solve_lp(p).status == "infeasible"


def test_unbounded_detected():
    # min -x  with  x - y = 0, both unbounded above
    p = LpProblem(c=[-1.0, 0.0], a=[[1.0, -1.0]], b=[0.0],
                  lower=[0.0, 0.0], upper=[np.inf, np.inf])
    assert solve_lp(p).status == "unbounded"


def test_degenerate_rows():
    # duplicated constraint row must not break anything
    p = LpProblem(c=[1.0, 1.0], a=[[1.0, 1.0], [1.0, 1.0]], b=[4.0, 4.0],
                  lower=[0.0, 0.0], upper=[3.0, 3.0])
    sol = solve_lp(p)
    assert sol.ok
    assert sol.objective == pytest.approx(4.0)


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(12)
    solved = 0
    for trial in range(40):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m + 1, 7))
        a = rng.normal(size=(m, n)).round(2)
        lower = np.zeros(n)
        upper = rng.uniform(0.5, 4.0, n).round(2)
        # b from a random interior point, so the problem is feasible
        x_feas = lower + rng.uniform(0.2, 0.8, n) * (upper - lower)
        b = a @ x_feas
        c = rng.normal(size=n).round(2)
        p = LpProblem(c=c, a=a, b=b, lower=lower, upper=upper)
        sol = solve_lp(p)
        assert sol.ok, f"trial {trial}: {sol.status}"
        want = brute_force_bounded(p)
        assert want is not None
        assert sol.objective == pytest.approx(want, abs=1e-7)
        res = kkt_residuals(p, sol)
        assert res["row"] < 1e-7
        assert res["bound"] < 1e-9
        assert res["slack"] < 1e-6
        solved += 1
    assert solved == 40


def test_kkt_residuals_flag_bad_point():
    p = LpProblem(c=[1.0, 2.0], a=[[1.0, 1.0]], b=[10.0],
                  lower=[0.0, 0.0], upper=[6.0, 10.0])
    sol = solve_lp(p)
    wrong = type(sol)(status="optimal", objective=sol.objective,
                      x=np.array([5.0, 4.0]), duals=sol.duals,
                      iterations=1)
    res = kkt_residuals(p, wrong)
    assert res["row"] > 0.5


def test_shape_validation():
    with pytest.raises(ValueError):
        LpProblem(c=[1.0], a=[[1.0, 2.0]], b=[1.0], lower=[0.0], upper=[1.0])
    with pytest.raises(ValueError):
        LpProblem(c=[1.0, 1.0], a=[[1.0, 2.0]], b=[1.0],
                  lower=[0.0, 2.0], upper=[1.0, 1.0])
