"""Synthetic instance generator: seasonal demand trees and simulated years.

The tree is deterministic in the config: demand follows a seasonal
sinusoid shaped by per-post factors, and at each branching day the
current node splits into ``branch_factor`` sons whose demand levels
spread multiplicatively around the father's (cold branches also lose
inflow).  Scenarios interpolate the per-day tree envelope with a
clipped AR(1) weight, so simulated demand never leaves the range the
tree spans, and draw plant availability from each unit's Markov model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree import Node, Scenario, ScenarioTree
from .units import UnitSet


@dataclass
class SynthConfig:
    """Knobs of the generator.

    ``difficulty`` in [0, 1] tightens the instance: demand scales by
    ``1 + 0.1 * difficulty`` while inflows shrink by ``1 - 0.3 *
    difficulty``.  ``branch_days`` lists the days at which every branch
    splits; sons spread demand by ``1 + branch_spread * offset`` with
    offsets evenly spaced in [-1, 1] (and inflows by the opposite
    offset, scaled by ``inflow_spread``).  Scenario demand follows an
    AR(1) weight with coefficient ``demand_ar`` mapped into the tree
    envelope.
    """

    units: UnitSet
    horizon_days: int = 364
    num_posts: int = 3
    branch_days: tuple = (52, 104, 156, 208, 260, 312)
    branch_factor: int = 2
    num_scenarios: int = 100
    seed: int = 0
    difficulty: float = 0.5
    base_demand_mw: float = 50_000.0
    post_factors: tuple = (0.85, 1.2, 0.95)
    post_hours: tuple = (8.0, 8.0, 8.0)
    season_amplitude: float = 0.18
    season_peak_day: int = 20
    branch_spread: float = 0.06
    inflow_daily_mwh: tuple = (400_000.0,)
    inflow_season_amplitude: float = 0.35
    inflow_season_peak_day: int = 200
    inflow_spread: float = 0.5
    demand_ar: float = 0.8
    ar_noise: float = 0.6

    def __post_init__(self):
        if self.num_posts != len(self.post_factors) or \
                self.num_posts != len(self.post_hours):
            raise ValueError("post_factors and post_hours must have num_posts entries")
        if len(self.inflow_daily_mwh) != self.units.num_hydro:
            raise ValueError("inflow_daily_mwh must have one entry per reservoir")
        if not 0.0 <= self.difficulty <= 1.0:
            raise ValueError("difficulty must lie in [0, 1]")
        if self.branch_factor < 2:
            raise ValueError("branch_factor must be at least 2")
        days = tuple(sorted(set(int(d) for d in self.branch_days)))
        if days and (days[0] < 1 or days[-1] >= self.horizon_days):
            raise ValueError("branch days must lie in [1, horizon_days)")
        self.branch_days = days


def _season(t: int, amplitude: float, peak_day: int) -> float:
    return 1.0 + amplitude * math.cos(2.0 * math.pi * (t - peak_day) / 365.0)


def _demand_mwh(cfg: SynthConfig, t: int, factor: float) -> np.ndarray:
    level = (cfg.base_demand_mw * (1.0 + 0.1 * cfg.difficulty)
             * _season(t, cfg.season_amplitude, cfg.season_peak_day) * factor)
    return level * np.array(cfg.post_factors) * np.array(cfg.post_hours)


def _inflows_mwh(cfg: SynthConfig, t: int, factor: float) -> np.ndarray:
    hours = np.array(cfg.post_hours)
    share = hours / hours.sum()
    season = _season(t, cfg.inflow_season_amplitude, cfg.inflow_season_peak_day)
    daily = (np.array(cfg.inflow_daily_mwh) * (1.0 - 0.3 * cfg.difficulty)
             * season * factor)
    return np.outer(daily, share)


def generate_synthetic(cfg: SynthConfig):
    """Build the scenario tree and the Monte Carlo scenarios.

    Returns ``(tree, scenarios)``.  The tree is a deterministic
    function of the config; scenarios use one spawned RNG stream each,
    so their draws do not depend on ``num_scenarios`` or on evaluation
    order.
    """
    U = cfg.units.num_thermal
    H = cfg.units.num_hydro
    tprog = np.ones(U)
    hprog = np.ones(H)

    nodes = []
    next_id = 0
    # (node id, demand factor, inflow factor) of every branch alive at day t
    alive = [(None, 1.0, 1.0)]
    offsets = np.linspace(-1.0, 1.0, cfg.branch_factor)
    for t in range(cfg.horizon_days):
        grown = []
        for father, dfac, ifac in alive:
            if t in cfg.branch_days:
                sons = [(dfac * (1.0 + cfg.branch_spread * o),
                         ifac * (1.0 - cfg.inflow_spread * cfg.branch_spread * o))
                        for o in offsets]
                trans = 1.0 / cfg.branch_factor
            else:
                sons = [(dfac, ifac)]
                trans = 1.0
            for sdfac, sifac in sons:
                nodes.append(Node(
                    id=next_id, time=t, father=father, trans_prob=trans,
                    durations=np.array(cfg.post_hours, dtype=float),
                    demand=_demand_mwh(cfg, t, sdfac),
                    inflows=_inflows_mwh(cfg, t, sifac),
                    thermal_programmed=tprog, hydro_programmed=hprog))
                grown.append((next_id, sdfac, sifac))
                next_id += 1
        alive = grown
    tree = ScenarioTree(nodes, num_posts=cfg.num_posts)

    scenarios = []
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.num_scenarios)
    env = _envelopes(tree)
    for seq in seeds:
        scenarios.append(_draw_scenario(cfg, tree, env, np.random.default_rng(seq)))
    return tree, scenarios


def _envelopes(tree: ScenarioTree):
    """Per-day min/max of demand and inflows across the tree cross-section."""
    T, L, H = tree.num_days, tree.num_posts, tree.num_hydro
    dem_lo = np.empty((T, L)); dem_hi = np.empty((T, L))
    inf_lo = np.empty((H, T, L)); inf_hi = np.empty((H, T, L))
    for t in range(T):
        idx = tree.nodes_at_time[t]
        dem_lo[t] = tree.demand[idx].min(axis=0)
        dem_hi[t] = tree.demand[idx].max(axis=0)
        inf_lo[:, t] = tree.inflows[:, idx].min(axis=1)
        inf_hi[:, t] = tree.inflows[:, idx].max(axis=1)
    return dem_lo, dem_hi, inf_lo, inf_hi


def _draw_scenario(cfg: SynthConfig, tree: ScenarioTree, env,
                   rng: np.random.Generator) -> Scenario:
    dem_lo, dem_hi, inf_lo, inf_hi = env
    T = tree.num_days
    # AR(1) weight in [-1, 1]; +1 rides the high-demand/low-inflow edge
    w = np.empty(T)
    noise = rng.standard_normal(T) * cfg.ar_noise
    w[0] = np.clip(noise[0], -1.0, 1.0)
    rho = cfg.demand_ar
    for t in range(1, T):
        w[t] = np.clip(rho * w[t - 1] + math.sqrt(1.0 - rho * rho) * noise[t],
                       -1.0, 1.0)
    u = 0.5 * (1.0 + w)[:, None]
    demand = dem_lo + u * (dem_hi - dem_lo)
    inflows = inf_hi - u[None, :, :] * (inf_hi - inf_lo)
    avail = np.empty((tree.num_thermal, T))
    for i, unit in enumerate(cfg.units.thermal):
        avail[i] = unit.sampler().sample_rates(unit.n_groups, T, rng)
    return Scenario(demand=demand, inflows=inflows, thermal_avail=avail)
