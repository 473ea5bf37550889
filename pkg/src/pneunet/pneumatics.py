"""Reference waveforms and the PWM valve-pair pressure controller.

The rig samples pressure at 400 Hz, low-passes the reading at 5 Hz and drives
an inflate/exhaust valve pair with a PWM duty computed from the filtered
error. The carrier period must be a whole number of control samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class Kind(str, Enum):
    STAIRCASE = "staircase"
    TRIANGLE = "triangle"


class Valve(str, Enum):
    INFLATE = "inflate"
    EXHAUST = "exhaust"


def _samples_per(seconds: float, rate_Hz: float, what: str) -> int:
    n = seconds * rate_Hz
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-6 * max(1.0, n):
        raise ValueError(f"{what} of {seconds} s is not a whole number of samples at {rate_Hz} Hz")
    return k


def staircase(step_kPa: float, hold_s: float, max_kPa: float, rate_Hz: float) -> np.ndarray:
    """Levels 0, step, ..., max, each held for ``hold_s``."""
    if not (step_kPa > 0 and max_kPa > 0 and hold_s > 0 and rate_Hz > 0):
        raise ValueError("step, hold, max and rate must be positive")
    n_steps = max_kPa / step_kPa
    if abs(n_steps - round(n_steps)) > 1e-9:
        raise ValueError(f"step {step_kPa} kPa does not divide max {max_kPa} kPa")
    levels = step_kPa * np.arange(int(round(n_steps)) + 1)
    return np.repeat(levels, _samples_per(hold_s, rate_Hz, "hold"))


def triangle(frequency_Hz: float, pkpk_kPa: float, cycles: int = 12,
             rate_Hz: float = 400.0) -> np.ndarray:
    """Whole cycles of a 0 -> pkpk -> 0 triangle, one template tiled ``cycles`` times."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if not pkpk_kPa > 0:
        raise ValueError("peak-to-peak amplitude must be positive")
    if not rate_Hz > 2 * frequency_Hz > 0:
        raise ValueError("sample rate must exceed twice the triangle frequency")
    n = _samples_per(1.0 / frequency_Hz, rate_Hz, "triangle period")
    phase = np.arange(n) / n
    one = pkpk_kPa * (1.0 - np.abs(2.0 * phase - 1.0))
    return np.tile(one, cycles)


@dataclass(frozen=True)
class ReferenceWaveform:
    kind: Kind
    peak_to_peak_kPa: float
    sample_rate_Hz: float = 400.0
    frequency_Hz: float | None = None  # triangle
    cycles: int = 12                   # triangle
    step_kPa: float = 5.0              # staircase
    hold_s: float = 10.0               # staircase

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.peak_to_peak_kPa > 0:
            raise ValueError("peak_to_peak_kPa must be positive")
        if self.kind is Kind.TRIANGLE:
            if self.frequency_Hz is None or not self.sample_rate_Hz > 2 * self.frequency_Hz:
                raise ValueError("triangle needs 0 < 2 * frequency_Hz < sample_rate_Hz")

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_Hz

    @property
    def samples_per_cycle(self) -> int:
        if self.kind is not Kind.TRIANGLE:
            raise ValueError("only triangle references are cyclic")
        return _samples_per(1.0 / self.frequency_Hz, self.sample_rate_Hz, "triangle period")

    @property
    def samples_per_level(self) -> int:
        if self.kind is not Kind.STAIRCASE:
            raise ValueError("only staircase references have levels")
        return _samples_per(self.hold_s, self.sample_rate_Hz, "hold")

    def values(self, cycles: int | None = None) -> np.ndarray:
        if self.kind is Kind.TRIANGLE:
            return triangle(self.frequency_Hz, self.peak_to_peak_kPa,
                            self.cycles if cycles is None else cycles, self.sample_rate_Hz)
        return staircase(self.step_kPa, self.hold_s, self.peak_to_peak_kPa, self.sample_rate_Hz)

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.values()
        return np.arange(v.size) / self.sample_rate_Hz, v

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "peak_to_peak_kPa": self.peak_to_peak_kPa,
             "sample_rate_Hz": self.sample_rate_Hz}
        if self.kind is Kind.TRIANGLE:
            d.update(frequency_Hz=self.frequency_Hz, cycles=self.cycles)
        else:
            d.update(step_kPa=self.step_kPa, hold_s=self.hold_s)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceWaveform":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


def lowpass_step(prev_filtered: float, raw: float, cutoff_Hz: float, dt: float) -> float:
    """One step of a first-order low-pass with unit DC gain (exact for piecewise-constant input)."""
    if not (dt > 0 and cutoff_Hz > 0):
        raise ValueError("dt and cutoff must be positive")
    alpha = -math.expm1(-2.0 * math.pi * cutoff_Hz * dt)
    return prev_filtered + alpha * (raw - prev_filtered)


@dataclass(frozen=True)
class ControllerGains:
    gain: float = 2.0              # duty per kPa of filtered error
    pwm_period_s: float = 0.01
    lowpass_cutoff_Hz: float = 5.0
    sample_rate_Hz: float = 400.0

    def __post_init__(self):
        if self.gain < 0:
            raise ValueError("gain must be non-negative")
        if not (self.pwm_period_s > 0 and self.lowpass_cutoff_Hz > 0 and self.sample_rate_Hz > 0):
            raise ValueError("PWM period, cutoff and sample rate must be positive")
        self.samples_per_period  # validates divisibility

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_Hz

    @property
    def samples_per_period(self) -> int:
        return _samples_per(self.pwm_period_s, self.sample_rate_Hz, "PWM period")

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerGains":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ControllerState:
    filtered_pressure: float = 0.0
    duty: float = 0.0
    valve_state: Valve = Valve.EXHAUST
    sample: int = 0  # control samples since start, sets the PWM carrier phase

    def __post_init__(self):
        if not 0.0 <= self.duty <= 1.0:
            raise ValueError("duty must lie in [0, 1]")


def _on_time(duty: float, sample: int, gains: ControllerGains) -> float:
    """Inflate time inside control sample ``sample``; the carrier opens the inlet at each period start."""
    dt = gains.dt
    phase = (sample % gains.samples_per_period) * dt
    return min(max(duty * gains.pwm_period_s - phase, 0.0), dt)


def pwm_step(ctrl: ControllerState, ref_kPa: float, sensed_kPa: float,
             gains: ControllerGains) -> tuple[ControllerState, tuple[tuple[Valve, float], ...]]:
    """Filter the reading, update the duty and schedule the valves for one sample.

    The schedule lists (valve, seconds) segments covering the sample: inflate
    while the carrier phase is below duty * period, exhaust for the rest.
    """
    dt = gains.dt
    filtered = lowpass_step(ctrl.filtered_pressure, sensed_kPa, gains.lowpass_cutoff_Hz, dt)
    duty = min(max(gains.gain * (ref_kPa - filtered), 0.0), 1.0)
    on = _on_time(duty, ctrl.sample, gains)
    schedule = tuple(seg for seg in ((Valve.INFLATE, on), (Valve.EXHAUST, dt - on)) if seg[1] > 0)
    new = ControllerState(filtered, duty, schedule[-1][0], ctrl.sample + 1)
    return new, schedule


@dataclass(frozen=True)
class SupplyLine:
    """Pump-fed line between the valve pair and the actuator inlet."""

    supply_kPa: float = 100.0
    time_constant_s: float = 0.2

    def __post_init__(self):
        if not (self.supply_kPa > 0 and self.time_constant_s > 0):
            raise ValueError("supply pressure and time constant must be positive")

    def step(self, p: float, command: Valve, h: float) -> float:
        target = self.supply_kPa if command is Valve.INFLATE else 0.0
        return target - (target - p) * math.exp(-h / self.time_constant_s)

    def apply(self, p: float, schedule) -> float:
        for command, h in schedule:
            p = self.step(p, command, h)
        return p

    @classmethod
    def from_dict(cls, d: dict) -> "SupplyLine":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class LoopTrace:
    measured: np.ndarray  # filtered reading, what the rig logs
    line: np.ndarray      # raw inlet pressure at each sample
    duty: np.ndarray


def run_closed_loop(reference, gains: ControllerGains = ControllerGains(),
                    line: SupplyLine = SupplyLine(),
                    ctrl: ControllerState | None = None, p0: float = 0.0) -> LoopTrace:
    """Track ``reference`` (sampled at ``gains.sample_rate_Hz``) with the PWM loop.

    Valve switching instants are resolved exactly inside each sample and the
    line is integrated analytically across them.
    """
    ref = np.asarray(reference, dtype=float)
    dt = gains.dt
    tau = line.time_constant_s
    supply = line.supply_kPa
    alpha = -math.expm1(-2.0 * math.pi * gains.lowpass_cutoff_Hz * dt)
    period_s = gains.pwm_period_s
    per = gains.samples_per_period
    ctrl = ctrl or ControllerState()
    y, k, p = ctrl.filtered_pressure, ctrl.sample, p0
    measured = np.empty(ref.shape)
    raw = np.empty(ref.shape)
    duties = np.empty(ref.shape)
    exp = math.exp
    # inlined pwm_step / SupplyLine.apply; tests pin the two paths together
    for i, r in enumerate(ref.tolist()):
        y = y + alpha * (p - y)
        duty = min(max(gains.gain * (r - y), 0.0), 1.0)
        on = min(max(duty * period_s - (k % per) * dt, 0.0), dt)
        if on > 0:
            p = supply - (supply - p) * exp(-on / tau)
        if dt - on > 0:
            p = 0.0 - (0.0 - p) * exp(-(dt - on) / tau)
        k += 1
        measured[i] = y
        raw[i] = p
        duties[i] = duty
    return LoopTrace(measured, raw, duties)


def tracking_error(reference, measured) -> tuple[float, float]:
    """(RMSE, NRMSE) with NRMSE normalised by the reference range."""
    ref = np.asarray(reference, dtype=float)
    meas = np.asarray(measured, dtype=float)
    if ref.size == 0:
        raise ValueError("empty input")
    if ref.shape != meas.shape:
        raise ValueError("reference and measurement lengths differ")
    span = float(ref.max() - ref.min())
    if span == 0:
        raise ValueError("reference range is zero; NRMSE undefined")
    rmse = float(np.sqrt(np.mean((meas - ref) ** 2)))
    return rmse, rmse / span


def with_gain(gains: ControllerGains, gain: float) -> ControllerGains:
    return replace(gains, gain=gain)
