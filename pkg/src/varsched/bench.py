"""Bundled instance presets.

``benchmark_*`` builds the desk-scale study case: eleven thermal units
spanning cheap base load to expensive peakers, two reservoirs whose
stocks differ by a factor of about thirty, and one 22-day curtailment
contract at 2467 MW.  Demand peaks late in the horizon, after the
reservoirs have been drawn down, so scarce years are bridged by stored
water rather than by spare plant; the fleet is sized so the scenario
tree stays serveable under the robust dispatch threshold at the default
risk levels.  ``demo_*`` is a three-unit toy for smoke tests and
documentation examples.
"""

from __future__ import annotations

from .synth import SynthConfig
from .units import EjpContract, HydroUnit, ThermalUnit, UnitSet

PRESETS = ("benchmark", "demo")


def _water_value(x_max: float, slopes=(24.0, 16.0, 10.0),
                 bands=(1.5e5, 4.0e5), scale: float = 1.0):
    knees = [0.0] + [b * scale for b in bands] + [x_max]
    points, value = [(0.0, 0.0)], 0.0
    for s, lo, hi in zip(slopes, knees[:-1], knees[1:]):
        value += s * (hi - lo)
        points.append((hi, value))
    return points


def benchmark_units() -> UnitSet:
    thermal = [
        ThermalUnit("base1", 8.0, 5800.0, 29, 0.92),
        ThermalUnit("base2", 9.0, 5400.0, 27, 0.90),
        ThermalUnit("base3", 10.0, 5200.0, 26, 0.91),
        ThermalUnit("base4", 11.0, 4800.0, 24, 0.90),
        ThermalUnit("mid1", 18.0, 3600.0, 12, 0.88),
        ThermalUnit("mid2", 22.0, 3000.0, 10, 0.86),
        ThermalUnit("mid3", 26.0, 2400.0, 8, 0.85),
        ThermalUnit("peak1", 40.0, 2000.0, 5, 0.88),
        ThermalUnit("peak2", 55.0, 1600.0, 4, 0.85),
        ThermalUnit("peak3", 95.0, 1200.0, 2, 0.82),
        ThermalUnit("peak4", 130.0, 1000.0, 1, 0.80),
    ]
    hydro = [
        HydroUnit("big", 0.0, 6.0e5, 4.0e5, 6500.0, _water_value(6.0e5)),
        HydroUnit("small", 0.0, 2.0e4, 1.3e4, 800.0,
                  _water_value(2.0e4, scale=2.0e4 / 6.0e5)),
    ]
    ejp = [EjpContract("curtail", 22, 2467.0,
                       [8.0e5 * j for j in range(23)])]
    return UnitSet(thermal=thermal, hydro=hydro, ejp=ejp)


def benchmark_config(seed: int = 0, num_scenarios: int = 100,
                     difficulty: float = 0.5) -> SynthConfig:
    return SynthConfig(
        units=benchmark_units(),
        horizon_days=126,
        branch_days=(14, 35, 63, 91),
        branch_factor=2,
        num_scenarios=num_scenarios,
        seed=seed,
        difficulty=difficulty,
        base_demand_mw=16_000.0,
        post_factors=(0.85, 1.25, 0.95),
        post_hours=(8.0, 8.0, 8.0),
        season_amplitude=0.18,
        season_peak_day=115,
        branch_spread=0.06,
        demand_ar=0.75,
        ar_noise=0.7,
        inflow_daily_mwh=(6_000.0, 400.0),
        inflow_season_amplitude=0.5,
        inflow_season_peak_day=200,
        inflow_spread=0.5,
    )


def demo_units() -> UnitSet:
    thermal = [
        ThermalUnit("coal", 12.0, 1600.0, 40, 0.90),
        ThermalUnit("gas", 30.0, 1200.0, 20, 0.90),
        ThermalUnit("oil", 60.0, 900.0, 10, 0.85),
    ]
    hydro = [
        HydroUnit("lake", 0.0, 4.0e5, 2.4e5, 2000.0,
                  [(0.0, 0.0),
                   (2.0e5, 25.0 * 2.0e5),
                   (4.0e5, 25.0 * 2.0e5 + 6.0 * 2.0e5)]),
    ]
    ejp = [EjpContract("curtail", 3, 400.0, [0.0, 3.0e4, 5.0e4, 6.0e4])]
    return UnitSet(thermal=thermal, hydro=hydro, ejp=ejp)


def demo_config(seed: int = 0, num_scenarios: int = 20,
                difficulty: float = 0.5) -> SynthConfig:
    return SynthConfig(
        units=demo_units(),
        horizon_days=14,
        branch_days=(5, 10),
        branch_factor=2,
        num_scenarios=num_scenarios,
        seed=seed,
        difficulty=difficulty,
        base_demand_mw=3_000.0,
        inflow_daily_mwh=(30_000.0,),
    )


def preset_config(name: str, seed: int = 0, num_scenarios: int | None = None,
                  difficulty: float = 0.5) -> SynthConfig:
    if name == "benchmark":
        return benchmark_config(seed, num_scenarios or 100, difficulty)
    if name == "demo":
        return demo_config(seed, num_scenarios or 20, difficulty)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
