"""Post-processing of exported per-element FEM fields.

Elements are binned by centroid into equal-width slices normal to the
longitudinal axis; the inextensible (fabric) layer is dropped first because
its stresses would swamp the silicone scale.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

FIELD_HEADER = ["x_mm", "y_mm", "z_mm", "von_mises_MPa", "max_prin_nominal_strain", "layer"]
SUMMARY_HEADER = ["slice", "count", "p5", "p25", "p50", "p75", "p95", "max"]
QUANTILES = (5, 25, 50, 75, 95)
LAYERS = ("extensible", "inextensible")


class FieldCSVError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class StressField:
    centroids: np.ndarray        # (n, 3) mm
    von_mises: np.ndarray        # MPa
    strain: np.ndarray | None    # max principal nominal strain, None if not exported
    extensible: np.ndarray       # bool, False for the fabric layer

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=float).reshape(-1, 3)
        vm = np.asarray(self.von_mises, dtype=float)
        ext = np.asarray(self.extensible, dtype=bool)
        if vm.shape != (c.shape[0],) or ext.shape != vm.shape:
            raise ValueError("centroids, von_mises and layer flags must have one entry per element")
        if np.any(vm < 0) or not np.all(np.isfinite(vm)):
            raise ValueError("von Mises stress must be finite and non-negative")
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "von_mises", vm)
        object.__setattr__(self, "extensible", ext)
        if self.strain is not None:
            eps = np.asarray(self.strain, dtype=float)
            if eps.shape != vm.shape:
                raise ValueError("strain must have one entry per element")
            if np.any(eps < -1):
                raise ValueError("nominal strain below -1 is not physical")
            object.__setattr__(self, "strain", eps)

    def __len__(self) -> int:
        return self.von_mises.size


@dataclass(frozen=True)
class SliceSummary:
    slice_index: int
    count: int
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float
    max: float

    @property
    def quantiles(self) -> dict[str, float]:
        return {"p5": self.p5, "p25": self.p25, "p50": self.p50, "p75": self.p75, "p95": self.p95}


def _parse_float(text: str, line: int, name: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise FieldCSVError(line, f"{name} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise FieldCSVError(line, f"{name} is not finite")
    return v


def load_field(stream: TextIO) -> StressField:
    """Read the element CSV; the strain column may be left blank throughout."""
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise FieldCSVError(1, "missing header") from None
    if header != FIELD_HEADER:
        raise FieldCSVError(1, f"header must be {','.join(FIELD_HEADER)}")
    cent, vm, eps, ext = [], [], [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(FIELD_HEADER):
            raise FieldCSVError(line, f"expected {len(FIELD_HEADER)} fields, got {len(row)}")
        xyz = [_parse_float(row[i], line, FIELD_HEADER[i]) for i in range(3)]
        s = _parse_float(row[3], line, "von_mises_MPa")
        if s < 0:
            raise FieldCSVError(line, "negative von Mises stress")
        e = row[4].strip()
        strain = _parse_float(e, line, "max_prin_nominal_strain") if e else None
        if strain is not None and strain < -1:
            raise FieldCSVError(line, "nominal strain below -1")
        eps.append(strain)
        layer = row[5].strip().lower()
        if layer not in LAYERS:
            raise FieldCSVError(line, f"layer must be one of {LAYERS}, got {row[5]!r}")
        cent.append(xyz)
        vm.append(s)
        ext.append(layer == "extensible")
    present = [e is not None for e in eps]
    if any(present) and not all(present):
        raise FieldCSVError(reader.line_num, "strain column filled for some rows only")
    strain = np.array(eps, dtype=float) if eps and all(present) else None
    return StressField(np.array(cent, dtype=float).reshape(-1, 3), np.array(vm, dtype=float),
                       strain, np.array(ext, dtype=bool))


def write_field(field: StressField, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(FIELD_HEADER)
    for i in range(len(field)):
        x, y, z = field.centroids[i]
        e = "" if field.strain is None else repr(float(field.strain[i]))
        w.writerow([repr(float(x)), repr(float(y)), repr(float(z)), repr(float(field.von_mises[i])),
                    e, LAYERS[0] if field.extensible[i] else LAYERS[1]])


def slice_indices(coord: np.ndarray, n_slices: int) -> np.ndarray:
    """Equal-width bins over [min, max]; an element on a shared edge goes to the lower bin."""
    lo, hi = float(coord.min()), float(coord.max())
    if hi == lo:
        return np.zeros(coord.size, dtype=int)
    t = (coord - lo) / (hi - lo) * n_slices
    k = np.ceil(t).astype(int) - 1
    # rounding can push an element across an edge; settle those in exact arithmetic
    for i in np.flatnonzero(np.abs(t - np.round(t)) < 1e-9 * n_slices):
        e = (Fraction(float(coord[i])) - Fraction(lo)) * n_slices / (Fraction(hi) - Fraction(lo))
        k[i] = math.ceil(e) - 1
    return np.clip(k, 0, n_slices - 1)


def _summary(k: int, values: np.ndarray) -> SliceSummary:
    if values.size == 0:
        nan = float("nan")
        return SliceSummary(k, 0, nan, nan, nan, nan, nan, nan)
    q = np.percentile(values, QUANTILES, method="linear")
    return SliceSummary(k, int(values.size), *(float(v) for v in q), float(values.max()))


def slice_longitudinal(field: StressField, n_slices: int = 20, axis: int = 1) -> list[SliceSummary]:
    """Per-slice von Mises distribution over the extensible elements."""
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    keep = field.extensible
    if not np.any(keep):
        raise ValueError("no extensible elements left to slice")
    coord = field.centroids[keep, axis]
    vm = field.von_mises[keep]
    idx = slice_indices(coord, n_slices)
    order = np.argsort(idx, kind="stable")
    bounds = np.searchsorted(idx[order], np.arange(n_slices + 1))
    return [_summary(k, vm[order[bounds[k]:bounds[k + 1]]]) for k in range(n_slices)]


def center_slices(n_slices: int) -> tuple[int, ...]:
    half = n_slices // 2
    return (half - 1, half) if n_slices % 2 == 0 else (half,)


def center_slice_max(field: StressField, n_slices: int = 20, axis: int = 1) -> float:
    """Max von Mises over the middle slice (both middle slices for even counts)."""
    summaries = slice_longitudinal(field, n_slices, axis)
    picked = [summaries[k] for k in center_slices(n_slices) if summaries[k].count]
    if not picked:
        raise ValueError("center slices hold no elements")
    return max(s.max for s in picked)


def max_nominal_strain(field: StressField) -> float:
    """Largest max-principal nominal strain over the extensible elements."""
    if field.strain is None:
        raise ValueError("field has no strain column")
    eps = field.strain[field.extensible]
    if eps.size == 0:
        raise ValueError("no extensible elements")
    return float(eps.max())


def write_summary_csv(summaries: Iterable[SliceSummary], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for s in summaries:
        w.writerow([s.slice_index, s.count, *(repr(v) for v in (s.p5, s.p25, s.p50, s.p75, s.p95,
                                                                 s.max))])


def slice_values(field: StressField, n_slices: int = 20, axis: int = 1) -> list[np.ndarray]:
    """Raw per-slice von Mises samples, for violin plots."""
    keep = field.extensible
    if not np.any(keep):
        raise ValueError("no extensible elements left to slice")
    idx = slice_indices(field.centroids[keep, axis], n_slices)
    vm = field.von_mises[keep]
    return [vm[idx == k] for k in range(n_slices)]
