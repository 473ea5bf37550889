"""One-off fits of the surrogate's free constants.

``expansion_coefficient`` is set so a reference design reaches a target static
angle; ``hysteresis_weight`` so the original design's leaf reaches a target
hysteresis ratio. Results are meant to be written into the default config.
"""

from __future__ import annotations

import dataclasses

from scipy.optimize import brentq

from .actuator_sim import PlantParams, static_angle, with_geometry
from .analysis import aggregate
from .config import Setup
from .experiment import TrialSpec, compute_metrics, simulate_series, TrialRecord
from .pneumatics import Kind, ReferenceWaveform


def calibrate_expansion(setup: Setup, design: str = "mid-width-larger",
                        angle_deg: float = 208.0, pressure_kPa: float = 50.0,
                        bracket=(0.01, 0.2)) -> float:
    d = setup.design(design)

    def gap(k):
        geom = dataclasses.replace(setup.plant.wall_geometry, expansion_coefficient=k)
        return static_angle(d, pressure_kPa, setup.material, geom) - angle_deg

    return brentq(gap, *bracket, xtol=1e-15, rtol=1e-15)


def leaf_ratio(setup: Setup, plant: PlantParams, design: str = "original",
               frequency_Hz: float = 0.0625, pkpk_kPa: float = 55.0,
               cycles: int = 1, warmup_cycles: int = 2) -> float:
    ref = ReferenceWaveform(Kind.TRIANGLE, pkpk_kPa, setup.controller.sample_rate_Hz,
                            frequency_Hz, cycles)
    spec = TrialSpec(design, ref, plant)
    rec = compute_metrics(TrialRecord(spec, simulate_series(spec, setup, warmup_cycles)))
    return aggregate(rec.cycles)[0].ratio


def calibrate_hysteresis(setup: Setup, target_ratio: float = 0.28, **trial) -> float:
    def gap(w):
        return leaf_ratio(setup, dataclasses.replace(setup.plant, hysteresis_weight=w),
                          **trial) - target_ratio

    lo, hi = gap(0.0), gap(1.0)
    if lo > 0 or hi < 0:
        raise ValueError(f"target ratio {target_ratio} outside reachable range "
                         f"[{lo + target_ratio:.4f}, {hi + target_ratio:.4f}]")
    return brentq(gap, 0.0, 1.0, xtol=1e-10)


__all__ = ["calibrate_expansion", "calibrate_hysteresis", "leaf_ratio", "with_geometry"]
