"""Bellman value tables from optimal multipliers, and Monte Carlo dispatch.

Once the dual is maximized, the multipliers induce water values: a
backward recursion over the tree prices each reservoir's stock (and
each contract's remaining days) with the node-local conditional prices
``lam* / pi``.  Aggregating node tables per day gives the management
strategy used in simulation: each simulated day dispatches thermal
units, water tranches and contract days against realized demand by
marginal cost, where water's marginal cost is the slope of the next
day's aggregated table.  Simulated cost is fuel plus unserved-energy
penalty minus terminal stock credits; water itself is free, its
opportunity cost only steers the merit order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .tree import Scenario, ScenarioTree
from .units import EjpContract, HydroUnit, UnitSet


@dataclass
class BellmanTable:
    """Stock value per node and per day on a fixed grid.

    ``node_values[i, j]`` is the value of entering node i's day with
    stock ``grid[j]``, the leaf days included.  ``step_values[t]``
    aggregates day t's nodes by probability; the extra last row is the
    terminal value.  The value used after day t's dispatch is
    ``continuation(t)``: the next day's aggregated row, or the terminal
    row after the last day.
    """

    kind: str                 # hydro | ejp
    name: str
    grid: np.ndarray
    node_values: np.ndarray   # (N, G)
    step_values: np.ndarray   # (T + 1, G)

    def continuation(self, day: int) -> np.ndarray:
        t = min(day + 1, self.step_values.shape[0] - 1)
        return self.step_values[t]


@dataclass
class Tables:
    hydro: list = field(default_factory=list)
    ejp: list = field(default_factory=list)


def _conditional_prices(tree: ScenarioTree, lam: np.ndarray) -> np.ndarray:
    cells = tree.cells(np.asarray(lam, dtype=float))
    out = np.zeros_like(cells)
    np.divide(cells, tree.prob[:, None], out=out,
              where=tree.prob[:, None] > 0.0)
    return out


def _aggregate(tree: ScenarioTree, node_values: np.ndarray) -> np.ndarray:
    T, G = tree.num_days, node_values.shape[1]
    step = np.zeros((T, G))
    for t in range(T):
        idx = tree.nodes_at_time[t]
        step[t] = tree.prob[idx] @ node_values[idx]
    return step


def compute_bellman_hydro(tree: ScenarioTree, lam: np.ndarray, unit: HydroUnit,
                          h: int, grid_size: int = 101) -> BellmanTable:
    """Water value table by backward recursion with conditional prices.

    At each node the day's release total is optimized exactly over the
    candidate kinks (price breakpoints and continuation grid points);
    surplus beyond the storage cap spills, stored water is valued by
    linear interpolation of the sons' tables.
    """
    grid = np.linspace(unit.x_min, unit.x_max, grid_size)
    prices = _conditional_prices(tree, lam)
    caps = tree.hydro_programmed[:, h:h + 1] * unit.p_max * tree.durations
    day_inflow = tree.inflows[h].sum(axis=1)
    N, G = tree.num_nodes, grid.size
    terminal = unit.terminal_value(grid)
    node_values = np.empty((N, G))
    for i in range(N - 1, -1, -1):
        sons = tree.sons[i]
        if sons.size == 0:
            cont = terminal
        else:
            cont = tree.trans_prob[sons] @ node_values[sons]
        order = np.argsort(-prices[i], kind="stable")
        order = order[(prices[i][order] > 0.0) & (caps[i][order] > 0.0)]
        bp = np.concatenate(([0.0], np.cumsum(caps[i][order])))
        rv = np.concatenate(([0.0], np.cumsum(prices[i][order] * caps[i][order])))
        resource = grid + day_inflow[i]
        v_hi = np.minimum(bp[-1], resource - unit.x_min)
        cand = np.concatenate([
            np.broadcast_to(bp, (G, bp.size)),
            resource[:, None] - grid[None, :],
            (resource - unit.x_max)[:, None],
            v_hi[:, None],
        ], axis=1)
        cand = np.clip(cand, 0.0, v_hi[:, None])
        y = np.minimum(resource[:, None] - cand, unit.x_max)
        obj = np.interp(cand, bp, rv) + np.interp(y, grid, cont)
        node_values[i] = obj.max(axis=1)
    steps = np.vstack([_aggregate(tree, node_values), terminal])
    return BellmanTable(kind="hydro", name=unit.name, grid=grid,
                        node_values=node_values, step_values=steps)


def compute_bellman_ejp(tree: ScenarioTree, lam: np.ndarray,
                        contract: EjpContract) -> BellmanTable:
    """Contract-day value table on the integer grid 0..days."""
    grid = np.arange(contract.days + 1, dtype=float)
    prices = _conditional_prices(tree, lam)
    reward = (prices * tree.durations).sum(axis=1) * contract.power
    vj = np.array(contract.value_table)
    N = tree.num_nodes
    node_values = np.empty((N, grid.size))
    for i in range(N - 1, -1, -1):
        sons = tree.sons[i]
        if sons.size == 0:
            cont = vj
        else:
            cont = tree.trans_prob[sons] @ node_values[sons]
        node_values[i] = cont
        node_values[i, 1:] = np.maximum(cont[1:], reward[i] + cont[:-1])
    steps = np.vstack([_aggregate(tree, node_values), vj])
    return BellmanTable(kind="ejp", name=contract.name, grid=grid,
                        node_values=node_values, step_values=steps)


def compute_bellman(tree: ScenarioTree, lam: np.ndarray, units: UnitSet,
                    grid_size: int = 101) -> Tables:
    return Tables(
        hydro=[compute_bellman_hydro(tree, lam, u, h, grid_size)
               for h, u in enumerate(units.hydro)],
        ejp=[compute_bellman_ejp(tree, lam, u) for u in units.ejp])


# --------------------------------------------------------------- frame

@dataclass
class SimFrame:
    """Per-day deterministic data for simulation, averaged over the tree."""

    durations: np.ndarray            # (T, L)
    thermal_programmed: np.ndarray   # (T, U)
    hydro_programmed: np.ndarray     # (T, H)


def expected_frame(tree: ScenarioTree) -> SimFrame:
    T = tree.num_days
    dur = np.empty((T, tree.num_posts))
    tpr = np.empty((T, tree.num_thermal))
    hpr = np.empty((T, tree.num_hydro))
    for t in range(T):
        idx = tree.nodes_at_time[t]
        w = tree.prob[idx]
        dur[t] = w @ tree.durations[idx]
        tpr[t] = w @ tree.thermal_programmed[idx]
        hpr[t] = w @ tree.hydro_programmed[idx]
    return SimFrame(durations=dur, thermal_programmed=tpr, hydro_programmed=hpr)


# ------------------------------------------------------------ dispatch

@dataclass(frozen=True)
class SimOptions:
    penalty_factor: float = 10.0       # unserved price = factor * dearest fuel
    include_terminal_value: bool = True


@dataclass
class SimResult:
    cost: float
    fuel_cost: float
    unserved_cost: float
    unserved_energy: float
    terminal_credit: float
    stocks: np.ndarray          # (H, T+1) start-of-day stocks, final last
    ejp_remaining: np.ndarray   # (K,)
    thermal_energy: np.ndarray  # (U,) total MWh over the year


def _tranches(pool: float, x_min: float, grid: np.ndarray, row: np.ndarray):
    """Water tranches from the top of the pool down to x_min.

    Returns parallel lists (amount, price); a tranche's price is the
    slope of the continuation table across its stock band, clipped at
    zero.  Consumption must follow list order: water comes off the top
    whatever the prices do.
    """
    amounts, prices = [], []
    level = min(pool, grid[-1])
    if pool > grid[-1]:  # above the cap: surplus water is free
        amounts.append(pool - grid[-1])
        prices.append(0.0)
    j = int(np.searchsorted(grid, level, side="left"))
    while level > x_min + 1e-9:
        lo = max(float(grid[j - 1]), x_min) if j >= 1 else x_min
        if lo >= level:
            break
        seg = min(j, grid.size - 1)
        slope = (row[seg] - row[seg - 1]) / (grid[seg] - grid[seg - 1])
        amounts.append(level - lo)
        prices.append(max(float(slope), 0.0))
        level = lo
        j -= 1
    return amounts, prices


class _DayBook:
    """Marginal supply state for one simulated day."""

    def __init__(self, order, tcosts, pools, x_mins, grids, rows):
        self.order = order          # thermal units sorted by (cost, index)
        self.tcosts = tcosts
        self.pools = list(pools)
        self.tr = [_tranches(p, m, g, r)
                   for p, m, g, r in zip(pools, x_mins, grids, rows)]
        self.ti = [0] * len(pools)

    def head(self, h):
        amounts, prices = self.tr[h]
        i = self.ti[h]
        while i < len(amounts) and amounts[i] <= 1e-12:
            i += 1
        self.ti[h] = i
        if i >= len(amounts):
            return None
        return amounts[i], prices[i]


def _dispatch_day(demand, tcaps, hydro_caps, book, extra):
    """Serve one day's posts by marginal price; mutates ``book``.

    ``extra`` is per-post must-take energy (contract days).  Thermal
    wins price ties, then reservoirs in unit order.  Energy goes
    unserved (priced at the penalty) only once every physical source is
    empty: a water tranche above the penalty is a table artifact, not a
    reason to shed load while the reservoir still holds something.
    Returns (fuel, unserved, thermal_used, hydro_used).
    """
    U, L = tcaps.shape
    H = len(book.pools)
    fuel = 0.0
    unserved = 0.0
    thermal_used = np.zeros((U, L))
    hydro_used = np.zeros((H, L))
    for p in range(L):
        need = demand[p] - min(extra[p], demand[p])
        tcap = tcaps[:, p].copy()
        hcap = hydro_caps[:, p].copy()
        while need > 1e-9:
            src = None
            best = np.inf
            for u in book.order:
                if tcap[u] > 1e-12:
                    if book.tcosts[u] < best:
                        best, src = book.tcosts[u], ("t", u)
                    break
            for h in range(H):
                if hcap[h] <= 1e-12:
                    continue
                head = book.head(h)
                if head is not None and head[1] < best:
                    best, src = head[1], ("h", h)
            if src is None:
                unserved += need
                break
            if src[0] == "t":
                u = src[1]
                qty = min(need, tcap[u])
                tcap[u] -= qty
                fuel += qty * book.tcosts[u]
                thermal_used[u, p] += qty
            else:
                h = src[1]
                amounts, _ = book.tr[h]
                i = book.ti[h]
                qty = min(need, hcap[h], amounts[i])
                amounts[i] -= qty
                hcap[h] -= qty
                book.pools[h] -= qty
                hydro_used[h, p] += qty
            need -= qty
    return fuel, unserved, thermal_used, hydro_used


def simulate_scenario(scenario: Scenario, frame: SimFrame, units: UnitSet,
                      tables: Tables, options: SimOptions = SimOptions()
                      ) -> SimResult:
    """Dispatch one simulated year against the value tables.

    Contract days are whole-day decisions: the day is dispatched with
    and without each live contract and the variant with the lower score
    (dispatch cost minus continuation values) wins, ties resolving to
    keeping the day.  With several contracts the decisions are taken
    greedily in unit order.
    """
    T, L = scenario.demand.shape
    U, H, K = units.num_thermal, units.num_hydro, units.num_ejp
    tcosts = np.array([u.cost for u in units.thermal])
    order = sorted(range(U), key=lambda u: (tcosts[u], u))
    pen = options.penalty_factor * (tcosts.max() if U else 1.0)
    x_mins = [u.x_min for u in units.hydro]
    grids = [tb.grid for tb in tables.hydro]

    stocks = np.empty((H, T + 1))
    stocks[:, 0] = [u.x0 for u in units.hydro]
    remaining = np.array([c.days for c in units.ejp], dtype=int)
    fuel_total = 0.0
    unserved_total = 0.0
    thermal_energy = np.zeros(U)

    for t in range(T):
        tcaps = (scenario.thermal_avail[:, t] * frame.thermal_programmed[t]
                 )[:, None] * np.array([u.p_max for u in units.thermal]
                                       )[:, None] if U else np.zeros((0, L))
        if U:
            tcaps = tcaps * frame.durations[t][None, :]
        hydro_caps = (frame.hydro_programmed[t][:, None]
                      * np.array([u.p_max for u in units.hydro])[:, None]
                      * frame.durations[t][None, :]) if H else np.zeros((0, L))
        pools = [stocks[h, t] + scenario.inflows[h, t].sum() for h in range(H)]
        rows = [tb.continuation(t) for tb in tables.hydro]

        on = np.zeros(K, dtype=int)
        for k in range(K):
            if remaining[k] < 1:
                continue
            scores = []
            for choice in (0, 1):
                on_try = on.copy()
                on_try[k] = choice
                extra = np.zeros(L)
                for kk in range(K):
                    if on_try[kk]:
                        extra += units.ejp[kk].power * frame.durations[t]
                book = _DayBook(order, tcosts, pools, x_mins, grids, rows)
                fuel, short, _, _ = _dispatch_day(
                    scenario.demand[t], tcaps, hydro_caps, book, extra)
                score = fuel + short * pen
                for h in range(H):
                    end = min(book.pools[h], units.hydro[h].x_max)
                    score -= float(np.interp(end, grids[h], rows[h]))
                crow = tables.ejp[k].continuation(t)
                score -= float(crow[remaining[k] - choice])
                scores.append(score)
            if scores[1] < scores[0]:
                on[k] = 1
                remaining[k] -= 1

        extra = np.zeros(L)
        for k in range(K):
            if on[k]:
                extra += units.ejp[k].power * frame.durations[t]
        book = _DayBook(order, tcosts, pools, x_mins, grids, rows)
        fuel, short, tused, _ = _dispatch_day(
            scenario.demand[t], tcaps, hydro_caps, book, extra)
        fuel_total += fuel
        unserved_total += short
        thermal_energy += tused.sum(axis=1)
        for h in range(H):
            stocks[h, t + 1] = min(book.pools[h], units.hydro[h].x_max)

    credit = 0.0
    for h, u in enumerate(units.hydro):
        credit += float(u.terminal_value(stocks[h, T]))
    for k, c in enumerate(units.ejp):
        credit += c.value_table[remaining[k]]
    cost = fuel_total + unserved_total * pen
    if options.include_terminal_value:
        cost -= credit
    return SimResult(cost=cost, fuel_cost=fuel_total,
                     unserved_cost=unserved_total * pen,
                     unserved_energy=unserved_total, terminal_credit=credit,
                     stocks=stocks, ejp_remaining=remaining,
                     thermal_energy=thermal_energy)


# ------------------------------------------------------------ statistics

def empirical_quantile(values, q: float) -> float:
    """Order statistic of rank ceil(q * N) (the standard empirical VaR)."""
    xs = np.sort(np.asarray(values, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise ValueError("no values")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    rank = int(np.ceil(q * n))
    return float(xs[min(max(rank, 1), n) - 1])


@dataclass
class CostReport:
    num_scenarios: int
    mean: float
    std: float          # sample standard deviation
    var1: float         # 1% Value-at-Risk: 99% empirical quantile
    var5: float         # 5% Value-at-Risk: 95% empirical quantile
    min: float
    max: float

    @classmethod
    def from_costs(cls, costs) -> "CostReport":
        xs = np.asarray(costs, dtype=float).ravel()
        return cls(num_scenarios=xs.size, mean=float(xs.mean()),
                   std=float(xs.std(ddof=1)) if xs.size > 1 else 0.0,
                   var1=empirical_quantile(xs, 0.99),
                   var5=empirical_quantile(xs, 0.95),
                   min=float(xs.min()), max=float(xs.max()))


def week_runs(flags: np.ndarray, week_len: int = 7) -> int:
    """Number of whole weeks inside consecutive runs of True days."""
    total = 0
    run = 0
    for f in flags:
        run = run + 1 if f else 0
        if f and run % week_len == 0:
            total += 1
    return total


def reservoir_week_stats(stocks: np.ndarray, unit: HydroUnit,
                         thresholds=(1, 2, 3, 4), week_len: int = 7):
    """Scenario counts spending at least X weeks at extreme levels.

    A day is low when the start-of-day stock is within 5% of x_max
    above the floor, high when within 5% of x_max below the initial
    stock; weeks must be consecutive runs of 7 such days.  Returns
    ``(weeks_low, weeks_high)`` dicts: threshold -> scenario count.
    """
    stocks = np.asarray(stocks, dtype=float)
    low_line = unit.x_min + 0.05 * unit.x_max
    high_line = unit.x0 - 0.05 * unit.x_max
    lows = np.array([week_runs(s <= low_line, week_len) for s in stocks])
    highs = np.array([week_runs(s >= high_line, week_len) for s in stocks])
    weeks_low = {x: int((lows >= x).sum()) for x in thresholds}
    weeks_high = {x: int((highs >= x).sum()) for x in thresholds}
    return weeks_low, weeks_high


@dataclass
class ReservoirStats:
    names: list
    mean_stock: np.ndarray          # (H, T+1)
    weeks_low: list                 # per reservoir: {threshold: count}
    weeks_high: list

    @classmethod
    def from_results(cls, results, units: UnitSet,
                     thresholds=(1, 2, 3, 4)) -> "ReservoirStats":
        H = units.num_hydro
        if not results:
            raise ValueError("no simulation results")
        stacked = np.stack([r.stocks for r in results])   # (S, H, T+1)
        lows, highs = [], []
        for h, u in enumerate(units.hydro):
            wl, wh = reservoir_week_stats(stacked[:, h], u, thresholds)
            lows.append(wl)
            highs.append(wh)
        return cls(names=[u.name for u in units.hydro],
                   mean_stock=stacked.mean(axis=0),
                   weeks_low=lows, weeks_high=highs)


def _simulate_args(args):
    return simulate_scenario(*args)


def run_monte_carlo(scenarios, tree: ScenarioTree, units: UnitSet,
                    tables: Tables, options: SimOptions = SimOptions(),
                    workers: int = 1):
    """Simulate every scenario; returns (CostReport, ReservoirStats, results).

    Results keep the scenario order whatever ``workers`` is, so reports
    do not depend on parallelism.
    """
    frame = expected_frame(tree)
    jobs = [(s, frame, units, tables, options) for s in scenarios]
    if workers <= 1:
        results = [simulate_scenario(*j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_args, jobs, chunksize=chunk))
    costs = [r.cost for r in results]
    report = CostReport.from_costs(costs)
    stats = ReservoirStats.from_results(results, units)
    return report, stats, results
