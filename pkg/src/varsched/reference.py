"""Reference solve of the full scheduling problem as one linear program.

Builds the whole-tree dispatch LP (thermal bounds, reservoir dynamics
with terminal value hypograph cuts, demand equality per (node, post))
and solves it with the in-house simplex.  This is the independent route
used to certify the decomposition: its optimal cost bounds the dual
from above, and its demand-row duals are admissible multipliers.

EJP contracts use whole-day 0/1 decisions, which an LP cannot carry;
they are excluded by default or relaxed to [0, 1] on request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LpProblem, LpSolution, kkt_residuals, solve_lp
from .tree import ScenarioTree
from .units import UnitSet


@dataclass
class ReferenceSolution:
    status: str
    cost: float | None = None
    thermal: np.ndarray | None = None       # (U, N, L) MWh
    hydro: np.ndarray | None = None         # (H, N, L) MWh
    spill: np.ndarray | None = None         # (H, N) MWh per day
    stocks: np.ndarray | None = None        # (H, N) stock entering each day
    terminal: np.ndarray | None = None      # (H, num_leaves)
    ejp_on: np.ndarray | None = None        # (K, N) in [0, 1], relaxed
    duals_demand: np.ndarray | None = None  # (N, L)
    kkt: dict | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _value_cuts(points):
    """Segment lines (slope, intercept) whose min reproduces a concave PWL."""
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    slopes = np.diff(ys) / np.diff(xs)
    intercepts = ys[:-1] - slopes * xs[:-1]
    return slopes, intercepts


def check_capacity(tree: ScenarioTree, units: UnitSet,
                   with_ejp: bool = False) -> None:
    """Raise if installed capacity cannot cover demand in some cell."""
    cap = np.zeros((tree.num_nodes, tree.num_posts))
    for i, u in enumerate(units.thermal):
        cap += tree.thermal_programmed[:, i:i + 1] * u.p_max * tree.durations
    for i, u in enumerate(units.hydro):
        cap += tree.hydro_programmed[:, i:i + 1] * u.p_max * tree.durations
    if with_ejp:
        for u in units.ejp:
            cap += u.power * tree.durations
    short = tree.demand > cap + 1e-9
    if np.any(short):
        n, p = np.argwhere(short)[0]
        raise ValueError(
            f"demand exceeds installed capacity at node {tree.nodes[n].id} "
            f"post {p}: {tree.demand[n, p]:.6g} > {cap[n, p]:.6g} MWh")


def solve_primal_reference(tree: ScenarioTree, units: UnitSet,
                           with_ejp: str = "exclude",
                           max_iter: int | None = None) -> ReferenceSolution:
    """Solve the tree dispatch LP; ``with_ejp`` is 'exclude' or 'relax'."""
    if with_ejp not in ("exclude", "relax"):
        raise ValueError("with_ejp must be 'exclude' or 'relax'")
    relax = with_ejp == "relax" and units.num_ejp > 0
    check_capacity(tree, units, with_ejp=relax)

    N, L = tree.num_nodes, tree.num_posts
    U, H = units.num_thermal, units.num_hydro
    K = units.num_ejp if relax else 0
    leaves = tree.leaves
    NV = leaves.size
    pi = tree.prob
    day_inflow = tree.inflows.sum(axis=2)        # (H, N)

    cuts = [_value_cuts(u.value_points) for u in units.hydro]
    ejp_cuts = []
    if relax:
        for u in units.ejp:
            pts = [(float(s), v) for s, v in enumerate(u.value_table)]
            slopes = np.diff([v for _, v in pts])
            if np.any(np.diff(slopes) > 1e-9):
                raise ValueError(f"{u.name}: relaxed contract needs a concave "
                                 "value table")
            ejp_cuts.append(_value_cuts(pts))

    # column layout
    ofs = {}
    pos = 0
    def block(name, count):
        nonlocal pos
        ofs[name] = pos
        pos += count
    block("u", U * N * L)
    block("v", H * N * L)
    block("dev", H * N)
    block("s", H * N)
    block("y", H * NV)
    block("z", H * NV)
    for h in range(H):
        block(f"cut_slack{h}", NV * len(cuts[h][0]))
    if relax:
        block("t", K * N)
        block("q", K * N)
        block("w", K * NV)
        block("zj", K * NV)
        for k in range(K):
            block(f"ejp_slack{k}", NV * len(ejp_cuts[k][0]))
    ncol = pos

    def u_col(l, n, p): return ofs["u"] + (l * N + n) * L + p
    def v_col(h, n, p): return ofs["v"] + (h * N + n) * L + p
    def dev_col(h, n): return ofs["dev"] + h * N + n
    def s_col(h, n): return ofs["s"] + h * N + n
    def y_col(h, j): return ofs["y"] + h * NV + j
    def z_col(h, j): return ofs["z"] + h * NV + j

    nrow = N * L + H * (N - 1) + H * NV + sum(NV * len(c[0]) for c in cuts)
    if relax:
        nrow += K * (N - 1) + K * NV + sum(NV * len(c[0]) for c in ejp_cuts)

    A = np.zeros((nrow, ncol))
    b = np.zeros(nrow)
    c = np.zeros(ncol)
    lower = np.zeros(ncol)
    upper = np.full(ncol, np.inf)

    # objective and bounds
    for l, unit in enumerate(units.thermal):
        for n in range(N):
            for p in range(L):
                j = u_col(l, n, p)
                c[j] = pi[n] * unit.cost
                upper[j] = (tree.thermal_programmed[n, l] * unit.p_max
                            * tree.durations[n, p])
    for h, unit in enumerate(units.hydro):
        for n in range(N):
            for p in range(L):
                upper[v_col(h, n, p)] = (tree.hydro_programmed[n, h]
                                         * unit.p_max * tree.durations[n, p])
            lower[s_col(h, n)] = unit.x_min
            upper[s_col(h, n)] = unit.x_max
        root = int(np.flatnonzero(tree.father_index < 0)[0])
        lower[s_col(h, root)] = unit.x0
        upper[s_col(h, root)] = unit.x0
        for j, n in enumerate(leaves):
            lower[y_col(h, j)] = unit.x_min
            upper[y_col(h, j)] = unit.x_max
            lower[z_col(h, j)] = -np.inf
            c[z_col(h, j)] = -pi[n]
    if relax:
        for k, unit in enumerate(units.ejp):
            for n in range(N):
                upper[ofs["t"] + k * N + n] = 1.0
                upper[ofs["q"] + k * N + n] = float(unit.days)
            root = int(np.flatnonzero(tree.father_index < 0)[0])
            lower[ofs["q"] + k * N + root] = float(unit.days)
            upper[ofs["q"] + k * N + root] = float(unit.days)
            for j, n in enumerate(leaves):
                upper[ofs["w"] + k * NV + j] = float(unit.days)
                lower[ofs["zj"] + k * NV + j] = -np.inf
                c[ofs["zj"] + k * NV + j] = -pi[n]

    row = 0
    # demand equality per cell
    for n in range(N):
        for p in range(L):
            for l in range(U):
                A[row, u_col(l, n, p)] = 1.0
            for h in range(H):
                A[row, v_col(h, n, p)] = 1.0
            if relax:
                for k, unit in enumerate(units.ejp):
                    A[row, ofs["t"] + k * N + n] = unit.power * tree.durations[n, p]
            b[row] = tree.demand[n, p]
            row += 1
    # reservoir dynamics: son stock = father stock + inflow - release - spill
    for h in range(H):
        for n in range(N):
            f = tree.father_index[n]
            if f < 0:
                continue
            A[row, s_col(h, n)] = 1.0
            A[row, s_col(h, f)] = -1.0
            for p in range(L):
                A[row, v_col(h, f, p)] = 1.0
            A[row, dev_col(h, f)] = 1.0
            b[row] = day_inflow[h, f]
            row += 1
        for j, n in enumerate(leaves):
            A[row, y_col(h, j)] = 1.0
            A[row, s_col(h, n)] = -1.0
            for p in range(L):
                A[row, v_col(h, n, p)] = 1.0
            A[row, dev_col(h, n)] = 1.0
            b[row] = day_inflow[h, n]
            row += 1
        slopes, intercepts = cuts[h]
        slack0 = ofs[f"cut_slack{h}"]
        for j in range(NV):
            for k in range(len(slopes)):
                A[row, z_col(h, j)] = 1.0
                A[row, y_col(h, j)] = -slopes[k]
                A[row, slack0 + j * len(slopes) + k] = 1.0
                b[row] = intercepts[k]
                row += 1
    if relax:
        for k, unit in enumerate(units.ejp):
            tcol = lambda n: ofs["t"] + k * N + n
            qcol = lambda n: ofs["q"] + k * N + n
            for n in range(N):
                f = tree.father_index[n]
                if f < 0:
                    continue
                A[row, qcol(n)] = 1.0
                A[row, qcol(f)] = -1.0
                A[row, tcol(f)] = 1.0
                row += 1
            for j, n in enumerate(leaves):
                A[row, ofs["w"] + k * NV + j] = 1.0
                A[row, qcol(n)] = -1.0
                A[row, tcol(n)] = 1.0
                row += 1
            slopes, intercepts = ejp_cuts[k]
            slack0 = ofs[f"ejp_slack{k}"]
            for j in range(NV):
                for kk in range(len(slopes)):
                    A[row, ofs["zj"] + k * NV + j] = 1.0
                    A[row, ofs["w"] + k * NV + j] = -slopes[kk]
                    A[row, slack0 + j * len(slopes) + kk] = 1.0
                    b[row] = intercepts[kk]
                    row += 1
    assert row == nrow

    sol = solve_lp(LpProblem(c=c, a=A, b=b, lower=lower, upper=upper),
                   max_iter=max_iter)
    if not sol.ok:
        return ReferenceSolution(status=sol.status, iterations=sol.iterations)

    x = sol.x
    thermal = np.empty((U, N, L))
    for l in range(U):
        for n in range(N):
            for p in range(L):
                thermal[l, n, p] = x[u_col(l, n, p)]
    hydro = np.empty((H, N, L))
    spill = np.empty((H, N))
    stocks = np.empty((H, N))
    terminal = np.empty((H, NV))
    for h in range(H):
        for n in range(N):
            for p in range(L):
                hydro[h, n, p] = x[v_col(h, n, p)]
            spill[h, n] = x[dev_col(h, n)]
            stocks[h, n] = x[s_col(h, n)]
        for j in range(NV):
            terminal[h, j] = x[y_col(h, j)]
    ejp_on = None
    if relax:
        ejp_on = np.empty((K, N))
        for k in range(K):
            for n in range(N):
                ejp_on[k, n] = x[ofs["t"] + k * N + n]
    duals = sol.duals[:N * L].reshape(N, L)
    prob = LpProblem(c=c, a=A, b=b, lower=lower, upper=upper)
    return ReferenceSolution(status="optimal", cost=sol.objective,
                             thermal=thermal, hydro=hydro, spill=spill,
                             stocks=stocks, terminal=terminal, ejp_on=ejp_on,
                             duals_demand=duals, kkt=kkt_residuals(prob, sol),
                             iterations=sol.iterations)
