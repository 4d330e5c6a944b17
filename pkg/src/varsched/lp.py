"""Dense bounded-variable linear programming by the revised simplex method.

Solves  min c'x  s.t.  A x = b,  lower <= x <= upper  (infinite bounds
allowed), in two phases with explicit basis-inverse updates, Dantzig
pricing and a Bland anti-cycling fallback after degenerate streaks.
Written for reference-quality solves on desk-size problems (a few
thousand variables): every answer is meant to be checked against the
KKT conditions, not to win speed contests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LOWER, _UPPER, _BASIC, _FREE = 0, 1, 2, 3


@dataclass
class LpProblem:
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        m, n = self.a.shape
        if self.c.size != n or self.lower.size != n or self.upper.size != n:
            raise ValueError("c, lower, upper must match the number of columns")
        if self.b.size != m:
            raise ValueError("b must match the number of rows")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")


@dataclass
class LpSolution:
    status: str                      # optimal | infeasible | unbounded | iteration_limit
    objective: float | None = None
    x: np.ndarray | None = None
    duals: np.ndarray | None = None  # one multiplier per row
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Simplex working state over the columns of one phase."""

    def __init__(self, a, lower, upper, basis, state, x):
        self.a = a
        self.lower = lower
        self.upper = upper
        self.basis = basis            # row -> column index
        self.state = state            # column -> _LOWER/_UPPER/_BASIC/_FREE
        self.x = x
        self.m = a.shape[0]
        self.binv = None
        self.refactor()

    def refactor(self):
        B = self.a[:, self.basis]
        self.binv = np.linalg.inv(B)

    def resync(self, b):
        """Recompute basic values from the nonbasic ones (kills drift)."""
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.binv @ (b - self.a @ xn)


def _simplex_phase(t: _Tableau, c, b, max_iter, tol, allow_unbounded):
    """Run simplex iterations for one phase; returns (status, iterations)."""
    m, n = t.a.shape
    degenerate_streak = 0
    refactor_age = 0
    for it in range(max_iter):
        y = t.binv.T @ c[t.basis]
        z = c - t.a.T @ y
        # violation magnitude per nonbasic column, respecting its state
        enter_dir = np.zeros(n)
        viol = np.zeros(n)
        at_lower = t.state == _LOWER
        at_upper = t.state == _UPPER
        free = t.state == _FREE
        enter_dir[at_lower & (z < -tol)] = 1.0
        enter_dir[at_upper & (z > tol)] = -1.0
        enter_dir[free & (np.abs(z) > tol)] = -np.sign(z[free & (np.abs(z) > tol)])
        viol = np.abs(z) * (enter_dir != 0.0)
        if not np.any(viol > 0.0):
            t.refactor()
            t.resync(b)
            return "optimal", it
        if degenerate_streak > 40:   # Bland: smallest eligible index
            e = int(np.flatnonzero(enter_dir != 0.0)[0])
        else:                        # Dantzig: worst violation, ties to low index
            e = int(np.argmax(viol))
        d_e = enter_dir[e]
        w = t.binv @ t.a[:, e]

        # ratio test: entering moves by step >= 0 in direction d_e
        g = d_e * w
        xb = t.x[t.basis]
        lb = t.lower[t.basis]
        ub = t.upper[t.basis]
        pos = g > 1e-10
        neg = g < -1e-10
        ratios = np.full(m, np.inf)
        ratios[pos] = (xb[pos] - lb[pos]) / g[pos]
        ratios[neg] = (xb[neg] - ub[neg]) / g[neg]
        ratios = np.maximum(ratios, 0.0)
        step = float(ratios.min()) if m else np.inf
        leave = -1
        if np.isfinite(step):
            ties = np.flatnonzero(ratios <= step + 1e-15)
            # among ties prefer the lowest basis column index (Bland-safe)
            leave = int(ties[np.argmin(t.basis[ties])])
            leave_to = _LOWER if pos[leave] else _UPPER
        span = t.upper[e] - t.lower[e]
        bound_flip = np.isfinite(span) and span < step
        if bound_flip:
            step = span
        if not np.isfinite(step):
            if allow_unbounded:
                return "unbounded", it
            raise RuntimeError("phase-1 objective unbounded; logic error")

        step = max(step, 0.0)
        degenerate_streak = degenerate_streak + 1 if step <= 1e-12 else 0
        t.x[t.basis] = xb - step * g
        t.x[e] += d_e * step
        if bound_flip:
            t.state[e] = _UPPER if d_e > 0 else _LOWER
            continue
        out = t.basis[leave]
        t.state[out] = leave_to
        t.x[out] = t.lower[out] if leave_to == _LOWER else t.upper[out]
        t.basis[leave] = e
        t.state[e] = _BASIC
        # product-form update of the basis inverse
        piv = w[leave]
        if abs(piv) < 1e-11 or refactor_age >= 64:
            t.refactor()
            t.resync(b)
            refactor_age = 0
        else:
            row = t.binv[leave] / piv
            t.binv -= np.outer(w, row)
            t.binv[leave] = row
            refactor_age += 1
    return "iteration_limit", max_iter


def solve_lp(problem: LpProblem, max_iter: int | None = None,
             tol: float = 1e-9) -> LpSolution:
    """Two-phase simplex; returns optimal x, objective and row duals."""
    a, b = problem.a, problem.b
    m, n = a.shape
    if max_iter is None:
        max_iter = 50 * (m + n + 10)

    # nonbasic start at the finite bound of least magnitude, free vars at 0
    state = np.full(n + m, _LOWER, dtype=int)
    x = np.zeros(n + m)
    for j in range(n):
        lo, up = problem.lower[j], problem.upper[j]
        if np.isinf(lo) and np.isinf(up):
            state[j], x[j] = _FREE, 0.0
        elif np.isinf(up) or (not np.isinf(lo) and abs(lo) <= abs(up)):
            state[j], x[j] = _LOWER, lo
        else:
            state[j], x[j] = _UPPER, up

    r = b - a @ x[:n]
    sign = np.where(r < 0.0, -1.0, 1.0)
    a_work = np.hstack([a, np.diag(sign)])
    lower = np.concatenate([problem.lower, np.zeros(m)])
    upper = np.concatenate([problem.upper, np.full(m, np.inf)])
    x[n:] = np.abs(r)
    state[n:] = _BASIC
    basis = np.arange(n, n + m)

    t = _Tableau(a_work, lower, upper, basis, state, x)
    scale = 1.0 + float(np.abs(b).max()) if m else 1.0

    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    status, it1 = _simplex_phase(t, c1, b, max_iter, tol, allow_unbounded=False)
    if status == "iteration_limit":
        return LpSolution(status="iteration_limit", iterations=it1)
    if float(c1 @ t.x) > 1e-7 * scale:
        return LpSolution(status="infeasible", iterations=it1)

    # artificials are pinned at zero for phase 2
    t.lower[n:] = 0.0
    t.upper[n:] = 0.0
    for i in range(m):
        if t.basis[i] >= n:
            t.x[t.basis[i]] = 0.0

    c2 = np.concatenate([problem.c, np.zeros(m)])
    status, it2 = _simplex_phase(t, c2, b, max_iter, tol, allow_unbounded=True)
    if status == "iteration_limit":
        return LpSolution(status="iteration_limit", iterations=it1 + it2)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=it1 + it2)

    x_out = t.x[:n].copy()
    duals = t.binv.T @ c2[t.basis]
    return LpSolution(status="optimal", objective=float(problem.c @ x_out),
                      x=x_out, duals=duals, iterations=it1 + it2)


def kkt_residuals(problem: LpProblem, sol: LpSolution) -> dict:
    """Feasibility and complementary-slackness residuals of a solution.

    Returns absolute residuals, scaled checks are the caller's business:
    ``row``: max |Ax - b|; ``bound``: worst bound violation;
    ``slack``: worst complementary slackness |z_j * gap_j| with z the
    reduced costs and gap the distance to the active bound side.
    """
    x, y = sol.x, sol.duals
    row = float(np.abs(problem.a @ x - problem.b).max()) if problem.b.size else 0.0
    bound = float(np.maximum(problem.lower - x, x - problem.upper).max())
    z = problem.c - problem.a.T @ y
    lo_gap = np.where(np.isfinite(problem.lower), x - problem.lower, np.inf)
    up_gap = np.where(np.isfinite(problem.upper), problem.upper - x, np.inf)
    slack = 0.0
    for j in range(problem.c.size):
        if z[j] > 0.0:      # should be at lower bound
            gap = lo_gap[j]
        elif z[j] < 0.0:    # should be at upper bound
            gap = up_gap[j]
        else:
            continue
        if np.isfinite(gap):
            slack = max(slack, abs(z[j]) * gap)
        else:
            slack = max(slack, abs(z[j]))
    return {"row": row, "bound": max(bound, 0.0), "slack": slack}
