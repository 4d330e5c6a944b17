"""Shared fixtures: small unit sets and trees used across the suite."""

import numpy as np
import pytest

from varsched.synth import SynthConfig, generate_synthetic
from varsched.tree import Node, ScenarioTree
from varsched.units import EjpContract, HydroUnit, ThermalUnit, UnitSet


def small_unit_set(with_ejp: bool = False) -> UnitSet:
    """Three plants and one reservoir, sized for ~500 MW demand."""
    ejp = []
    if with_ejp:
        ejp = [EjpContract("peak_days", 2, 80.0, (0.0, 900.0, 1700.0))]
    return UnitSet(
        thermal=[ThermalUnit("coal", 12.0, 400.0, 4, 0.9),
                 ThermalUnit("gas", 28.0, 300.0, 3, 0.85),
                 ThermalUnit("oil", 55.0, 200.0, 2, 0.8)],
        hydro=[HydroUnit("lake", 0.0, 5000.0, 3000.0, 150.0,
                         ((0.0, 0.0), (2500.0, 75000.0), (5000.0, 105000.0)))],
        ejp=ejp)


@pytest.fixture
def units3():
    return small_unit_set()


@pytest.fixture
def units3_ejp():
    return small_unit_set(with_ejp=True)


def small_synth(units, seed=0, horizon=5, branch_days=(2, 4), scenarios=3,
                **overrides):
    cfg = SynthConfig(units=units, horizon_days=horizon,
                      branch_days=branch_days, branch_factor=2,
                      num_scenarios=scenarios, seed=seed,
                      base_demand_mw=500.0, post_factors=(0.8, 1.2, 1.0),
                      inflow_daily_mwh=(800.0,), **overrides)
    return generate_synthetic(cfg)


@pytest.fixture
def small_instance(units3):
    tree, scens = small_synth(units3)
    return tree, scens, units3


def chain_tree(demand_rows, durations=(8.0, 8.0, 8.0), inflow_rows=None,
               num_thermal=1, num_hydro=1):
    """Deterministic single-branch tree, one node per day."""
    T = len(demand_rows)
    L = len(durations)
    if inflow_rows is None:
        inflow_rows = [np.zeros((num_hydro, L))] * T
    nodes = []
    for t in range(T):
        nodes.append(Node(
            id=t, time=t, father=None if t == 0 else t - 1, trans_prob=1.0,
            durations=np.array(durations), demand=np.array(demand_rows[t]),
            inflows=np.asarray(inflow_rows[t], dtype=float).reshape(num_hydro, L),
            thermal_programmed=np.ones(num_thermal),
            hydro_programmed=np.ones(num_hydro)))
    return ScenarioTree(nodes, num_posts=L)
