"""Design, simulation and hysteresis analysis workbench for pneu-net soft actuators."""

__version__ = "0.1.0"
