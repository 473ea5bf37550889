"""Reduced-order pneu-net surrogate.

The actuator is a chain of chamber segments. Each segment bends until the
work done by the chamber pressure balances the Yeoh strain energy stored in
its walls:

    p * dV/dθ = dU/dθ,   dV/dθ = k * w^a * h^b,
    U = V_wall * W(λ(θ)),  λ(θ) = 1 + θ (h + t_top) / (2 L_eff)

which reduces to P(λ) = p * dV/dθ / (V_wall * dλ/dθ) with P the uniaxial
nominal stress. L_eff equals the chamber length except for the two end
chambers, whose walls run into the solid end caps (``end_cap_ratio``).

On top of the static chain sits a first-order pressure lag (chamber filling)
and a Prandtl-Ishlinskii superposition of play operators acting on the
pressure the walls see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .geometry import ActuatorDesign, ChamberDims
from .material import YeohCoefficients, nominal_stress_kernel

THETA_MAX = math.pi / 2  # per-segment bracket
_MAX_BISECTIONS = 200


class SaturationError(RuntimeError):
    """A segment cannot reach equilibrium inside its angle bracket."""


@dataclass(frozen=True)
class WallGeometry:
    """Tuning constants mapping chamber dims to segment compliance.

    ``expansion_coefficient`` is fitted so the mid-width-larger design of the
    default base reaches 208 deg at 50 kPa (see ``calibration.py``).
    """

    expansion_coefficient: float = 0.13162219165426314
    width_exponent: float = 1.0
    height_exponent: float = 3.0
    end_cap_ratio: float = 1.0

    def __post_init__(self):
        if not self.expansion_coefficient > 0:
            raise ValueError("expansion_coefficient must be positive")
        if self.end_cap_ratio < 0:
            raise ValueError("end_cap_ratio must be non-negative")


@dataclass(frozen=True)
class PlantParams:
    fill_time_constant: float = 0.3  # s
    hysteresis_weight: float = 0.0
    hysteresis_backlash_widths: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 10.0)  # kPa
    wall_geometry: WallGeometry = field(default_factory=WallGeometry)

    def __post_init__(self):
        if not self.fill_time_constant > 0:
            raise ValueError("fill_time_constant must be positive")
        if not 0 <= self.hysteresis_weight <= 1:
            raise ValueError("hysteresis_weight must lie in [0, 1]")
        widths = tuple(float(r) for r in self.hysteresis_backlash_widths)
        if not widths or any(r < 0 for r in widths):
            raise ValueError("backlash widths must be a non-empty list of non-negative values")
        object.__setattr__(self, "hysteresis_backlash_widths", widths)

    @classmethod
    def from_dict(cls, d: dict) -> "PlantParams":
        geom = WallGeometry(**d.get("wall_geometry", {}))
        kw = {k: d[k] for k in ("fill_time_constant", "hysteresis_weight",
                                "hysteresis_backlash_widths") if k in d}
        return cls(wall_geometry=geom, **kw)


@dataclass(frozen=True)
class SegmentState:
    theta: float  # deg
    wall_stretch: float
    stress_proxy: float  # coefficient units (kPa by default)


@dataclass(frozen=True)
class PlantState:
    internal_pressure: float = 0.0
    segments: tuple[SegmentState, ...] = ()
    hysteresis_memory: tuple[float, ...] = ()

    @property
    def angle(self) -> float:
        total = 0.0
        for s in self.segments:
            total += s.theta
        return total


# -- static chain -------------------------------------------------------------

@dataclass(frozen=True)
class _SegmentTerms:
    drive: np.ndarray         # wall stress per unit pressure
    stretch_rate: np.ndarray  # dλ/dθ
    index: np.ndarray         # chamber -> row of the unique-terms arrays


def _segment_terms(chambers, end_flags, geom: WallGeometry) -> _SegmentTerms:
    rows = []
    for ch, is_end in zip(chambers, end_flags):
        l_eff = ch.length * (1.0 + geom.end_cap_ratio) if is_end else ch.length
        moment = geom.expansion_coefficient * ch.width**geom.width_exponent \
            * ch.height**geom.height_exponent
        v_wall = l_eff * (2.0 * ch.side_thickness * ch.height + ch.top_thickness * ch.width)
        stretch_rate = (ch.height + ch.top_thickness) / (2.0 * l_eff)
        rows.append((moment / (v_wall * stretch_rate), stretch_rate))
    uniq = sorted(set(rows))
    index = np.array([uniq.index(r) for r in rows])
    drive, rate = (np.array(col) for col in zip(*uniq))
    return _SegmentTerms(drive, rate, index)


def _design_terms(design: ActuatorDesign, geom: WallGeometry) -> _SegmentTerms:
    n = design.chamber_count
    ends = [i in (0, n - 1) for i in range(n)]
    return _segment_terms(design.chambers, ends, geom)


def _solve_theta(target: np.ndarray, rate: np.ndarray, c: YeohCoefficients) -> np.ndarray:
    """Bracketed bisection on θ in [0, π/2] for P(λ(θ)) = target, elementwise.

    Runs to machine precision; each element's iterate sequence is independent
    of the rest of the batch, so scalar and batched calls agree bit-for-bit.
    """
    target, rate = np.broadcast_arrays(np.asarray(target, float), np.asarray(rate, float))
    lo = np.zeros(target.shape)
    hi = np.where(target > 0, THETA_MAX, 0.0)
    if np.any(nominal_stress_kernel(1.0 + hi * rate, c) < target):
        raise SaturationError("segment bending exceeds 90 deg; pressure too high")
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        below = nominal_stress_kernel(1.0 + mid * rate, c) < target
        np.copyto(lo, mid, where=below)
        np.copyto(hi, mid, where=~below)
    theta = 0.5 * (lo + hi)
    return np.where(target > 0, theta, 0.0)


def _chain_response(design: ActuatorDesign, pressure, c: YeohCoefficients,
                    geom: WallGeometry):
    """Per-chamber (θ rad, λ, stress) arrays of shape (N, n_chambers)."""
    p = np.atleast_1d(np.asarray(pressure, dtype=float))
    if np.any(p < 0):
        raise ValueError("pressure must be non-negative")
    terms = _design_terms(design, geom)
    theta_u = _solve_theta(p[:, None] * terms.drive[None, :], terms.stretch_rate[None, :], c)
    lam_u = 1.0 + theta_u * terms.stretch_rate[None, :]
    stress_u = np.where(theta_u > 0, nominal_stress_kernel(lam_u, c), 0.0)
    idx = terms.index
    return theta_u[:, idx], lam_u[:, idx], stress_u[:, idx]


def _sum_columns(a: np.ndarray) -> np.ndarray:
    # fixed left-to-right order so every call path rounds identically
    total = np.zeros(a.shape[0])
    for j in range(a.shape[1]):
        total = total + a[:, j]
    return total


def static_segment_angle(ch: ChamberDims, p: float, c: YeohCoefficients,
                         geometry: WallGeometry = WallGeometry(),
                         end_segment: bool = False) -> float:
    """Bending contribution of one chamber at pressure ``p`` (deg)."""
    if p < 0:
        raise ValueError("pressure must be non-negative")
    terms = _segment_terms([ch], [end_segment], geometry)
    theta = _solve_theta(np.array([p * terms.drive[0]]), terms.stretch_rate, c)
    return float(np.degrees(theta[0]))


def segment_states(design: ActuatorDesign, p: float, c: YeohCoefficients,
                   geometry: WallGeometry = WallGeometry()) -> tuple[SegmentState, ...]:
    theta, lam, stress = _chain_response(design, p, c, geometry)
    deg = np.degrees(theta[0])
    return tuple(SegmentState(float(t), float(l), float(s))
                 for t, l, s in zip(deg, lam[0], stress[0]))


def static_angle(design: ActuatorDesign, p, c: YeohCoefficients,
                 geometry: WallGeometry = WallGeometry()):
    """Total bending angle (deg); accepts a scalar or an array of pressures."""
    theta, _, _ = _chain_response(design, p, c, geometry)
    total = np.degrees(_sum_columns(theta))
    return float(total[0]) if np.ndim(p) == 0 else total


def pressure_for_angle(design: ActuatorDesign, angle_deg: float, c: YeohCoefficients,
                       geometry: WallGeometry = WallGeometry(), p_max: float = 500.0) -> float:
    """Pressure at which the static chain reaches ``angle_deg``."""
    if angle_deg <= 0:
        return 0.0
    hi = 1.0
    while True:
        try:
            reached = static_angle(design, hi, c, geometry)
        except SaturationError:
            reached = math.inf
        if reached >= angle_deg:
            break
        hi *= 2.0
        if hi > p_max:
            raise SaturationError(f"{design.name} cannot reach {angle_deg} deg")
    lo = hi / 2.0 if hi > 1.0 else 0.0

    def gap(p):
        try:
            return static_angle(design, p, c, geometry) - angle_deg
        except SaturationError:
            return math.inf

    return brentq(gap, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


# -- longitudinal layout and stress proxy -------------------------------------

def segment_extents(design: ActuatorDesign) -> np.ndarray:
    """(n, 2) longitudinal extent of each segment in mm, interior walls split evenly."""
    gap = design.base.chamber_gap
    lengths = design.profile("length")
    starts = np.concatenate([[0.0], np.cumsum(lengths[:-1] + gap)])
    lo = np.maximum(starts - gap / 2, 0.0)
    total = starts[-1] + lengths[-1]
    hi = np.minimum(starts + lengths + gap / 2, total)
    return np.column_stack([lo, hi])


def stress_slices_proxy(design: ActuatorDesign, p: float, c: YeohCoefficients,
                        geometry: WallGeometry = WallGeometry(), n_bins: int = 20) -> np.ndarray:
    """Segment stress proxy resampled onto equal longitudinal bins (bin centre rule)."""
    _, _, stress = _chain_response(design, p, c, geometry)
    ext = segment_extents(design)
    edges = np.linspace(ext[0, 0], ext[-1, 1], n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    seg = np.clip(np.searchsorted(ext[:, 1], centers, side="left"), 0, len(ext) - 1)
    return stress[0][seg]


def surrogate_field(design: ActuatorDesign, p: float, c: YeohCoefficients,
                    geometry: WallGeometry = WallGeometry(), per_segment: int = 8):
    """Synthetic per-element field in the FEM export layout.

    Wall elements carry the segment stress proxy (converted to MPa) and the
    nominal wall strain; a fabric layer is added with stresses an order of
    magnitude above the silicone, as in a real export.
    """
    from .fem_post import StressField

    _, lam, stress = _chain_response(design, p, c, geometry)
    to_mpa = 1e-3 if c.unit == "kPa" else 1.0
    ext = segment_extents(design)
    xs, ys, zs, vm, eps, layer = [], [], [], [], [], []
    for i, ch in enumerate(design.chambers):
        y = ext[i, 0] + (np.arange(per_segment) + 0.5) * (ext[i, 1] - ext[i, 0]) / per_segment
        spots = ((-(ch.width + ch.side_thickness) / 2, ch.height / 2),
                 ((ch.width + ch.side_thickness) / 2, ch.height / 2),
                 (0.0, ch.height + ch.top_thickness / 2))
        for x, z in spots:
            xs.append(np.full(per_segment, x))
            ys.append(y)
            zs.append(np.full(per_segment, z))
            vm.append(np.full(per_segment, stress[0, i] * to_mpa))
            eps.append(np.full(per_segment, lam[0, i] - 1.0))
            layer.append(np.ones(per_segment, bool))
    y_all = np.concatenate(ys)
    silicone_max = float(np.max(np.concatenate(vm)))
    fabric_y = np.linspace(y_all.min(), y_all.max(), 4 * design.chamber_count)
    xs.append(np.zeros_like(fabric_y))
    ys.append(fabric_y)
    zs.append(np.full_like(fabric_y, -0.5))
    vm.append(np.full_like(fabric_y, 10.0 * silicone_max))
    eps.append(np.full_like(fabric_y, 1e-3))
    layer.append(np.zeros(fabric_y.shape, bool))
    centroids = np.column_stack([np.concatenate(xs), np.concatenate(ys), np.concatenate(zs)])
    return StressField(centroids, np.concatenate(vm), np.concatenate(eps), np.concatenate(layer))


# -- dynamics ------------------------------------------------------------------

def play_update(memory, p: float, widths) -> tuple[float, ...]:
    """Backlash (play) operators: output stays put until the input drags it."""
    return tuple(max(p - r, min(p + r, y)) for y, r in zip(memory, widths))


def effective_pressure(p: float, memory, weight: float) -> float:
    if weight == 0.0:
        return p
    mean = 0.0
    for y in memory:
        mean += y
    mean /= len(memory)
    return (1.0 - weight) * p + weight * mean


def _lag_factor(dt: float, tau: float) -> float:
    return math.exp(-dt / tau)


def initial_state(params: PlantParams) -> PlantState:
    return PlantState(0.0, (), (0.0,) * len(params.hysteresis_backlash_widths))


def step_dynamics(state: PlantState, commanded_pressure: float, dt: float,
                  params: PlantParams, design: ActuatorDesign,
                  c: YeohCoefficients) -> PlantState:
    """Advance the plant by ``dt`` with a zero-order-hold pressure command."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    memory = state.hysteresis_memory or (0.0,) * len(params.hysteresis_backlash_widths)
    a = _lag_factor(dt, params.fill_time_constant)
    p_int = commanded_pressure - (commanded_pressure - state.internal_pressure) * a
    memory = play_update(memory, p_int, params.hysteresis_backlash_widths)
    p_eff = effective_pressure(p_int, memory, params.hysteresis_weight)
    segments = segment_states(design, p_eff, c, params.wall_geometry)
    return PlantState(p_int, segments, memory)


@dataclass
class PlantTrace:
    internal_pressure: np.ndarray
    effective_pressure: np.ndarray
    angle: np.ndarray
    final_state: PlantState


def simulate_plant(design: ActuatorDesign, commanded, dt: float, params: PlantParams,
                   c: YeohCoefficients, state: PlantState | None = None) -> PlantTrace:
    """Run ``step_dynamics`` over a command sequence.

    Same arithmetic as repeated ``step_dynamics`` calls; the static chain is
    evaluated once over the whole effective-pressure history.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    cmd = np.asarray(commanded, dtype=float)
    state = state or initial_state(params)
    a = _lag_factor(dt, params.fill_time_constant)
    widths = params.hysteresis_backlash_widths
    w = params.hysteresis_weight
    p = state.internal_pressure
    memory = state.hysteresis_memory or (0.0,) * len(widths)
    p_int = np.empty(cmd.shape)
    p_eff = np.empty(cmd.shape)
    for k, u in enumerate(cmd.tolist()):
        p = u - (u - p) * a
        memory = play_update(memory, p, widths)
        p_int[k] = p
        p_eff[k] = effective_pressure(p, memory, w)
    if cmd.size:
        theta, lam, stress = _chain_response(design, p_eff, c, params.wall_geometry)
        angle = np.degrees(_sum_columns(theta))
        last = tuple(SegmentState(float(t), float(l), float(s))
                     for t, l, s in zip(np.degrees(theta[-1]), lam[-1], stress[-1]))
    else:
        angle = np.empty(0)
        last = state.segments
    return PlantTrace(p_int, p_eff, angle, PlantState(p, last, memory))


def with_geometry(params: PlantParams, **changes) -> PlantParams:
    return replace(params, wall_geometry=replace(params.wall_geometry, **changes))
