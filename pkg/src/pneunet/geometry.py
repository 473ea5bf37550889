"""Parametric pneu-net design family.

Every variant changes exactly one of five chamber parameters along the
longitudinal axis with a symmetric, piecewise-linear profile (ends -> center
-> ends). Chamber-dimension variants are rescaled so the internal air volume
matches the original design; wall-thickness variants leave the chambers
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class ConstraintInfeasibleError(ValueError):
    """Volume rescaling would produce a non-positive dimension."""


class Parameter(str, Enum):
    LENGTH = "length"
    WIDTH = "width"
    HEIGHT = "height"
    SIDE_THICKNESS = "side_thickness"
    TOP_THICKNESS = "top_thickness"
    NONE = "none"

    @property
    def is_chamber_dimension(self) -> bool:
        return self in (Parameter.LENGTH, Parameter.WIDTH, Parameter.HEIGHT)

    @property
    def is_wall_thickness(self) -> bool:
        return self in (Parameter.SIDE_THICKNESS, Parameter.TOP_THICKNESS)


class Direction(str, Enum):
    MID_SMALLER = "mid_smaller"
    MID_LARGER = "mid_larger"
    NONE = "none"


# center value / end value
DEFAULT_CHAMBER_RATIO = {Direction.MID_SMALLER: 0.5, Direction.MID_LARGER: 2.0}
DEFAULT_THICKNESS_RATIO = {Direction.MID_SMALLER: 1 / 1.5, Direction.MID_LARGER: 1.5}


@dataclass(frozen=True)
class ChamberDims:
    """One air chamber plus the silicone walls around it (mm)."""

    length: float
    width: float
    height: float
    side_thickness: float
    top_thickness: float

    def __post_init__(self):
        for name in ("length", "width", "height", "side_thickness", "top_thickness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"chamber {name} must be positive, got {getattr(self, name)}")

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height


@dataclass(frozen=True)
class BaseDims:
    """Baseline (original design) dimensions in mm."""

    chamber_length: float
    chamber_width: float
    chamber_height: float
    side_thickness: float
    top_thickness: float
    chamber_count: int
    channel_cross_section: float = 0.0  # mm^2
    chamber_gap: float = 0.0

    def __post_init__(self):
        for name in ("chamber_length", "chamber_width", "chamber_height",
                     "side_thickness", "top_thickness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.channel_cross_section < 0 or self.chamber_gap < 0:
            raise ValueError("channel_cross_section and chamber_gap must be non-negative")
        if int(self.chamber_count) != self.chamber_count or self.chamber_count < 3:
            raise ValueError(f"chamber_count must be an integer >= 3, got {self.chamber_count}")

    def chamber(self) -> ChamberDims:
        return ChamberDims(self.chamber_length, self.chamber_width, self.chamber_height,
                           self.side_thickness, self.top_thickness)

    def value(self, parameter: Parameter) -> float:
        return getattr(self.chamber(), parameter.value)

    @classmethod
    def from_dict(cls, d: dict) -> "BaseDims":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True)
class VariationSpec:
    parameter: Parameter = Parameter.NONE
    direction: Direction = Direction.NONE
    center_ratio: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "parameter", Parameter(self.parameter))
        object.__setattr__(self, "direction", Direction(self.direction))
        if (self.parameter is Parameter.NONE) != (self.direction is Direction.NONE):
            raise ValueError("parameter 'none' must go with direction 'none' and vice versa")
        if self.parameter is Parameter.NONE:
            object.__setattr__(self, "center_ratio", 1.0)
            return
        if self.center_ratio is None:
            table = (DEFAULT_CHAMBER_RATIO if self.parameter.is_chamber_dimension
                     else DEFAULT_THICKNESS_RATIO)
            object.__setattr__(self, "center_ratio", table[self.direction])
        r = float(self.center_ratio)
        if not (r > 0 and np.isfinite(r)):
            raise ValueError(f"center_ratio must be positive and finite, got {r}")
        if self.direction is Direction.MID_SMALLER and r > 1:
            raise ValueError(f"mid_smaller needs center_ratio <= 1, got {r}")
        if self.direction is Direction.MID_LARGER and r < 1:
            raise ValueError(f"mid_larger needs center_ratio >= 1, got {r}")
        object.__setattr__(self, "center_ratio", r)

    @classmethod
    def from_dict(cls, d: dict) -> "VariationSpec":
        return cls(d.get("parameter", "none"), d.get("direction", "none"), d.get("center_ratio"))


@dataclass(frozen=True)
class ActuatorDesign:
    name: str
    color_tag: str
    chambers: tuple[ChamberDims, ...]
    base: BaseDims
    variation: VariationSpec = field(default_factory=VariationSpec)

    @property
    def chamber_count(self) -> int:
        return len(self.chambers)

    def profile(self, parameter: Parameter | str) -> np.ndarray:
        """Per-chamber values of one parameter, end to end."""
        name = Parameter(parameter).value
        return np.array([getattr(ch, name) for ch in self.chambers])


def profile_weights(n: int, center_ratio: float) -> np.ndarray:
    """Symmetric piecewise-linear weights: 1 at both ends, center_ratio at the center.

    For even n the two middle chambers both take the center value.
    """
    if n < 3:
        raise ValueError("need at least 3 chambers")
    half = (n - 1) // 2
    dist = np.minimum(np.arange(n), n - 1 - np.arange(n))
    return 1.0 + (center_ratio - 1.0) * dist / half


def _channel_volume(base: BaseDims) -> float:
    # the channel only runs through the interior walls; inside a chamber it is chamber air
    return base.channel_cross_section * base.chamber_gap * (base.chamber_count - 1)


def internal_volume(design: ActuatorDesign) -> float:
    """Chamber boxes plus the central channel through the interior walls (mm^3)."""
    return sum(ch.volume for ch in design.chambers) + _channel_volume(design.base)


def solve_base_for_volume(base: BaseDims, variation: VariationSpec) -> float:
    """End value of the varied chamber dimension that keeps the total volume fixed.

    Volume is linear in the varied dimension, so with profile weights w_i and the
    other two dimensions held at their base values the end value is
    n * x0 / sum(w_i).
    """
    if not variation.parameter.is_chamber_dimension:
        raise ValueError(f"volume rescaling only applies to chamber dimensions, "
                         f"got {variation.parameter.value}")
    x0 = base.value(variation.parameter)
    others = base.chamber().volume / x0
    with np.errstate(over="ignore"):
        weights = profile_weights(base.chamber_count, variation.center_ratio)
        end = base.chamber_count * base.chamber().volume / (others * weights.sum())
    if not end > 0 or not np.all(end * weights > 0):
        raise ConstraintInfeasibleError(
            f"rescaled {variation.parameter.value} is non-positive ({end})")
    return float(end)


def generate_design(base: BaseDims, variation: VariationSpec,
                    name: str | None = None, color_tag: str = "") -> ActuatorDesign:
    n = base.chamber_count
    template = base.chamber()
    if variation.parameter is Parameter.NONE:
        chambers = (template,) * n
    else:
        weights = profile_weights(n, variation.center_ratio)
        if variation.parameter.is_chamber_dimension:
            end = solve_base_for_volume(base, variation)
        else:
            end = base.value(variation.parameter)
        attr = variation.parameter.value
        chambers = tuple(replace(template, **{attr: float(end * w)}) for w in weights)
    if name is None:
        name = design_name(variation)
    return ActuatorDesign(name, color_tag, chambers, base, variation)


def design_name(variation: VariationSpec) -> str:
    p, d = variation.parameter, variation.direction
    if p is Parameter.NONE:
        return "original"
    if p.is_wall_thickness:
        wall = "side-walls" if p is Parameter.SIDE_THICKNESS else "top-wall"
        return f"mid-{wall}-{'thicker' if d is Direction.MID_LARGER else 'thinner'}"
    return f"mid-{p.value}-{'smaller' if d is Direction.MID_SMALLER else 'larger'}"


# (parameter, direction, legend colour) in the order of the nine-design grid
FAMILY = (
    (Parameter.NONE, Direction.NONE, "red"),
    (Parameter.SIDE_THICKNESS, Direction.MID_LARGER, "pink"),
    (Parameter.TOP_THICKNESS, Direction.MID_LARGER, "yellow"),
    (Parameter.LENGTH, Direction.MID_SMALLER, "green"),
    (Parameter.WIDTH, Direction.MID_SMALLER, "purple"),
    (Parameter.HEIGHT, Direction.MID_SMALLER, "brown"),
    (Parameter.LENGTH, Direction.MID_LARGER, "blue"),
    (Parameter.WIDTH, Direction.MID_LARGER, "black"),
    (Parameter.HEIGHT, Direction.MID_LARGER, "orange"),
)

COLORS = {design_name(VariationSpec(p, d)): c for p, d, c in FAMILY}


def design_family(base: BaseDims) -> dict[str, ActuatorDesign]:
    """All nine designs keyed by name, in legend order."""
    out = {}
    for p, d, color in FAMILY:
        design = generate_design(base, VariationSpec(p, d), color_tag=color)
        out[design.name] = design
    return out


def chamber_table(design: ActuatorDesign) -> list[dict]:
    return [
        {"index": i, "length_mm": ch.length, "width_mm": ch.width, "height_mm": ch.height,
         "side_mm": ch.side_thickness, "top_mm": ch.top_thickness}
        for i, ch in enumerate(design.chambers)
    ]
