"""Static validation and hysteresis metrics.

A leaf is the closed pressure-angle curve traced over one triangle cycle. Its
area (shoelace) is the cumulative hysteresis; the hysteresis ratio divides it
by the rectangle spanned by the origin and the loop's peak pressure and angle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, TextIO

import numpy as np

from .pneumatics import Kind, ReferenceWaveform


class OutOfRangeError(ValueError):
    """Interpolation requested outside the sampled span."""


class Aggregation(str, Enum):
    MEAN = "mean"
    PER_CYCLE = "per-cycle"
    UNION = "union"


@dataclass(frozen=True)
class TimeSeries:
    time: np.ndarray
    p_ref: np.ndarray
    p_meas: np.ndarray
    angle: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.time, self.p_ref, self.p_meas, self.angle)]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise ValueError("time, p_ref, p_meas and angle must be 1-D and equally long")
        if arrs[0].size > 1 and not np.all(np.diff(arrs[0]) > 0):
            raise ValueError("time must be strictly increasing")
        for name, a in zip(("time", "p_ref", "p_meas", "angle"), arrs):
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.time.size

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.time[start:stop], self.p_ref[start:stop],
                          self.p_meas[start:stop], self.angle[start:stop])


def loop_area(pressure, angle=None) -> float:
    """Absolute shoelace area of the polygon closed from the last point back to the first.

    Accepts a ``HysteresisCycle`` or two coordinate sequences.
    """
    if angle is None:
        pressure, angle = pressure.pressure, pressure.angle
    x = np.asarray(pressure, dtype=float)
    y = np.asarray(angle, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("loop coordinates must be 1-D and equally long")
    if x.size < 3:
        raise ValueError("a loop needs at least 3 points")
    # centre first: keeps the cross terms small for loops far from the origin
    x = x - x.mean()
    y = y - y.mean()
    s = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return abs(float(s)) / 2.0


@dataclass(frozen=True)
class HysteresisCycle:
    pressure: np.ndarray
    angle: np.ndarray
    area: float
    max_pressure: float
    max_angle: float
    ratio: float

    @classmethod
    def from_arrays(cls, pressure, angle) -> "HysteresisCycle":
        p = np.asarray(pressure, dtype=float)
        a = np.asarray(angle, dtype=float)
        area = loop_area(p, a)
        mp, ma = float(p.max()), float(a.max())
        return cls(p, a, area, mp, ma, _ratio(area, mp, ma))


def _ratio(area: float, max_pressure: float, max_angle: float) -> float:
    rect = max_pressure * max_angle
    if not (max_pressure > 0 and max_angle > 0):
        raise ValueError("bounding rectangle has zero area; ratio undefined")
    return area / rect


def hysteresis_ratio(cycle: HysteresisCycle) -> float:
    """Leaf area over the origin-anchored bounding rectangle."""
    return _ratio(cycle.area, cycle.max_pressure, cycle.max_angle)


def segment_cycles(series: TimeSeries, ref: ReferenceWaveform) -> list[HysteresisCycle]:
    """Split a triangle trial at the reference minima (every cycle starts at 0 kPa)."""
    if ref.kind is not Kind.TRIANGLE:
        raise ValueError("cycle segmentation needs a triangle reference")
    n = ref.samples_per_cycle
    if n < 2:
        raise ValueError("fewer than 2 samples per cycle")
    cycles, rem = divmod(len(series), n)
    if rem or cycles != ref.cycles:
        raise ValueError(f"series of {len(series)} samples is not {ref.cycles} cycles of {n}")
    return [HysteresisCycle.from_arrays(series.p_meas[k * n:(k + 1) * n],
                                        series.angle[k * n:(k + 1) * n])
            for k in range(cycles)]


def dynamic_response(data) -> float:
    """Peak bending angle of a cycle, a trial, a list of cycles or a raw angle array."""
    if isinstance(data, HysteresisCycle):
        return data.max_angle
    if isinstance(data, TimeSeries):
        a = data.angle
    elif isinstance(data, (list, tuple)) and data and isinstance(data[0], HysteresisCycle):
        return max(c.max_angle for c in data)
    else:
        a = np.asarray(data, dtype=float)
    if a.size == 0:
        raise ValueError("empty input")
    return float(a.max())


@dataclass(frozen=True)
class TrialMetrics:
    area: float
    ratio: float
    max_angle: float
    max_pressure: float


def aggregate(cycles: Sequence[HysteresisCycle],
              mode: Aggregation | str = Aggregation.MEAN) -> list[TrialMetrics]:
    """Collapse per-cycle metrics.

    ``mean`` averages the cycles; ``union`` treats the whole trial as one closed
    path and reports the per-cycle share of its area; ``per-cycle`` returns
    every cycle unchanged.
    """
    mode = Aggregation(mode)
    if not cycles:
        raise ValueError("no cycles to aggregate")
    if mode is Aggregation.PER_CYCLE:
        return [TrialMetrics(c.area, c.ratio, c.max_angle, c.max_pressure) for c in cycles]
    if mode is Aggregation.MEAN:
        return [TrialMetrics(*(float(np.mean([getattr(c, k) for c in cycles]))
                               for k in ("area", "ratio", "max_angle", "max_pressure")))]
    p = np.concatenate([c.pressure for c in cycles])
    a = np.concatenate([c.angle for c in cycles])
    area = loop_area(p, a) / len(cycles)
    mp, ma = float(p.max()), float(a.max())
    return [TrialMetrics(area, _ratio(area, mp, ma), ma, mp)]


# -- response curves and comparisons -------------------------------------------

@dataclass(frozen=True)
class ResponsePoint:
    max_angle: float
    hysteresis_ratio: float
    pkpk_pressure: float


@dataclass(frozen=True)
class ResponseCurve:
    points: tuple[ResponsePoint, ...]

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda q: q.max_angle))
        by_p = sorted(pts, key=lambda q: q.pkpk_pressure)
        if any(b.max_angle <= a.max_angle for a, b in zip(by_p, by_p[1:])):
            raise ValueError("max angle must increase strictly with pk-pk pressure")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[float, float, float]]) -> "ResponseCurve":
        return cls(tuple(ResponsePoint(*map(float, t)) for t in triples))

    @property
    def angles(self) -> np.ndarray:
        return np.array([q.max_angle for q in self.points])

    @property
    def ratios(self) -> np.ndarray:
        return np.array([q.hysteresis_ratio for q in self.points])

    def ratio_at(self, theta: float) -> float:
        ang = self.angles
        if ang.size == 0 or not ang[0] <= theta <= ang[-1]:
            raise OutOfRangeError(f"{theta} deg outside sampled span "
                                  f"[{ang.min() if ang.size else 'nan'}, "
                                  f"{ang.max() if ang.size else 'nan'}]")
        return float(np.interp(theta, ang, self.ratios))


def improvement(ratio_a: float, ratio_b: float) -> float:
    """Fractional hysteresis reduction of b relative to a."""
    if ratio_a == 0:
        raise ValueError("baseline ratio is zero")
    return (ratio_a - ratio_b) / ratio_a


def constant_angle_compare(a: ResponseCurve, b: ResponseCurve,
                           theta: float) -> tuple[float, float, float]:
    """Interpolate both ratio-vs-angle curves at ``theta``; (ratio_a, ratio_b, improvement)."""
    ra = a.ratio_at(theta)
    rb = b.ratio_at(theta)
    return ra, rb, improvement(ra, rb)


def response_improvement(angle_a: float, angle_b: float) -> float:
    """Relative gain in peak angle of b over a."""
    if angle_a == 0:
        raise ValueError("baseline angle is zero")
    return angle_b / angle_a - 1.0


def overlap_span(a: ResponseCurve, b: ResponseCurve) -> tuple[float, float]:
    lo = max(a.angles[0], b.angles[0])
    hi = min(a.angles[-1], b.angles[-1])
    if lo > hi:
        raise OutOfRangeError("response curves do not overlap in angle")
    return float(lo), float(hi)


# -- static validation -----------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    rmse: float
    nrmse: float


def validate_static(model_pressure, model_angle, exp_pressure, exp_angle) -> ValidationReport:
    """Model curve interpolated at the experimental pressures; NRMSE over the experimental span."""
    mp = np.asarray(model_pressure, dtype=float)
    ma = np.asarray(model_angle, dtype=float)
    ep = np.asarray(exp_pressure, dtype=float)
    ea = np.asarray(exp_angle, dtype=float)
    if ep.size < 2 or ep.shape != ea.shape:
        raise ValueError("need at least 2 experimental points with matching lengths")
    if mp.shape != ma.shape or mp.size < 2 or np.any(np.diff(mp) <= 0):
        raise ValueError("model curve needs >= 2 points with increasing pressure")
    if ep.min() < mp[0] or ep.max() > mp[-1]:
        raise OutOfRangeError("experimental pressures exceed the model curve domain")
    rmse = float(np.sqrt(np.mean((np.interp(ep, mp, ma) - ea) ** 2)))
    span = float(ea.max() - ea.min())
    if span == 0:
        raise ValueError("experimental angle range is zero; NRMSE undefined")
    return ValidationReport(rmse, rmse / span)


def steady_state_extract(series: TimeSeries, ref: ReferenceWaveform,
                         window_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """(level pressures, mean angle over the last ``window_fraction`` of each hold)."""
    if ref.kind is not Kind.STAIRCASE:
        raise ValueError("steady-state extraction needs a staircase reference")
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    n = ref.samples_per_level
    window = int(round(window_fraction * n))
    if window < 1:
        raise ValueError("hold too short for the averaging window")
    levels, rem = divmod(len(series), n)
    if rem or levels == 0:
        raise ValueError(f"series of {len(series)} samples is not whole levels of {n}")
    ang = series.angle.reshape(levels, n)[:, n - window:]
    pressures = series.p_ref.reshape(levels, n)[:, 0]
    return pressures.copy(), ang.mean(axis=1)


# -- CSV emission -------------------------------------------------------------------

METRICS_HEADER = ["design", "freq_Hz", "pkpk_kPa", "cycle", "area_kPa_deg", "ratio",
                  "max_angle_deg"]


def write_metrics_csv(rows: Iterable[dict], stream: TextIO) -> None:
    w = csv.DictWriter(stream, METRICS_HEADER, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})


def read_metrics_csv(stream: TextIO) -> list[dict]:
    out = []
    for r in csv.DictReader(stream):
        out.append({"design": r["design"], "freq_Hz": float(r["freq_Hz"]),
                    "pkpk_kPa": float(r["pkpk_kPa"]), "cycle": int(r["cycle"]),
                    "area_kPa_deg": float(r["area_kPa_deg"]), "ratio": float(r["ratio"]),
                    "max_angle_deg": float(r["max_angle_deg"])})
    return out


def cycle_rows(design: str, freq: float, pkpk: float,
               cycles: Sequence[HysteresisCycle]) -> list[dict]:
    return [{"design": design, "freq_Hz": freq, "pkpk_kPa": pkpk, "cycle": k,
             "area_kPa_deg": c.area, "ratio": c.ratio, "max_angle_deg": c.max_angle}
            for k, c in enumerate(cycles)]
