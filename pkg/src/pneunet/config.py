"""Layered JSON configuration: packaged defaults, then a user file, then overrides."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .actuator_sim import PlantParams
from .geometry import BaseDims, design_family
from .material import YeohCoefficients
from .pneumatics import ControllerGains, SupplyLine


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    text = resources.files("pneunet").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def merge(base: dict, update: dict) -> dict:
    """Recursive dict merge; ``update`` wins."""
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    cfg = default_config()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        cfg = merge(cfg, user)
    if overrides:
        cfg = merge(cfg, overrides)
    return cfg


@dataclass(frozen=True)
class Setup:
    """Typed view of a config dict."""

    base: BaseDims
    material: YeohCoefficients
    plant: PlantParams
    controller: ControllerGains
    line: SupplyLine
    raw: dict

    @property
    def designs(self):
        return design_family(self.base)

    def design(self, name: str):
        fam = self.designs
        if name not in fam:
            raise ConfigError(f"unknown design {name!r}; known: {', '.join(fam)}")
        return fam[name]


def build(cfg: dict) -> Setup:
    try:
        return Setup(
            base=BaseDims.from_dict(cfg["base_dims"]),
            material=YeohCoefficients(**cfg["material"]),
            plant=PlantParams.from_dict(cfg["plant"]),
            controller=ControllerGains.from_dict(cfg["controller"]),
            line=SupplyLine.from_dict(cfg["line"]),
            raw=cfg,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
