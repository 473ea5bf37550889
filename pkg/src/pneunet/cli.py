"""Command-line harness.

    pneunet design gen      chamber tables for the design family
    pneunet sim run         one closed-loop trial
    pneunet sim matrix      design x frequency x pressure grid with comparison tables
    pneunet sim calibrate   refit the surrogate constants
    pneunet analyze hyst    recompute leaf metrics of a stored trial
    pneunet analyze static  RMSE / NRMSE of a static curve against measured points
    pneunet analyze stress  slice statistics of an exported FEM field
    pneunet analyze angle   bending angles from a keypoint CSV
    pneunet plot leaf|bars|violins

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Setup, build, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _overrides(args) -> dict:
    """Flags that were given on the command line win over the config file."""
    o: dict = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("controller", "gain", getattr(args, "gain", None))
    put("plant", "hysteresis_weight", getattr(args, "hysteresis_weight", None))
    put("plant", "fill_time_constant", getattr(args, "fill_time_constant", None))
    put("trial", "warmup_cycles", getattr(args, "warmup_cycles", None))
    put("trial", "cycles", getattr(args, "cycles", None))
    put("analysis", "aggregation", getattr(args, "aggregation", None))
    return o


def _setup(args) -> Setup:
    return build(load_config(args.config, _overrides(args)))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _read_curve(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        p = np.array([float(r["p_kPa"]) for r in rows])
        a = np.array([float(r["angle_deg"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: expected columns p_kPa,angle_deg ({exc})") from None
    return p, a


# -- verbs ---------------------------------------------------------------------------

def cmd_design_gen(args) -> int:
    from .geometry import chamber_table, internal_volume

    setup = _setup(args)
    names = list(setup.designs) if args.design == "all" else [args.design]
    out = Path(args.out) if args.out else None
    for name in names:
        d = setup.design(name)
        rows = chamber_table(d)
        print(f"{name} ({d.color_tag}): volume {internal_volume(d):.3f} mm^3")
        if out:
            out.mkdir(parents=True, exist_ok=True)
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
    return EXIT_OK


def _reference(args, setup: Setup):
    from .pneumatics import Kind, ReferenceWaveform

    rate = setup.controller.sample_rate_Hz
    if args.kind == "staircase":
        st = setup.raw["staircase"]
        return ReferenceWaveform(Kind.STAIRCASE, args.pkpk or st["max_kPa"], rate,
                                 step_kPa=st["step_kPa"], hold_s=st["hold_s"])
    if args.freq is None or args.pkpk is None:
        raise ConfigError("triangle trials need --freq and --pkpk")
    return ReferenceWaveform(Kind.TRIANGLE, args.pkpk, rate, args.freq,
                             int(setup.raw["trial"]["cycles"]))


def cmd_sim_run(args) -> int:
    from .analysis import aggregate
    from .experiment import TrialSpec, run_trial

    setup = _setup(args)
    setup.design(args.design)
    spec = TrialSpec(args.design, _reference(args, setup), setup.plant, args.seed,
                     Path(args.out))
    rec = run_trial(spec, setup)
    if rec.cycles:
        m = aggregate(rec.cycles, setup.raw["analysis"]["aggregation"])[0]
        print(f"{args.design}: {len(rec.cycles)} cycles, ratio {m.ratio:.4f}, "
              f"area {m.area:.2f} kPa*deg, max angle {m.max_angle:.2f} deg")
    else:
        for p, a in zip(*rec.static_points):
            print(f"{p:6.2f} kPa  {a:8.3f} deg")
    print(f"written to {args.out}")
    return EXIT_OK


def cmd_sim_matrix(args) -> int:
    from .experiment import run_matrix

    setup = _setup(args)
    m = setup.raw["matrix"]
    designs = args.designs.split(",") if args.designs else m["designs"]
    for d in designs:
        setup.design(d)
    freqs = _floats(args.freqs) if args.freqs else m["frequencies_Hz"]
    pressures = _floats(args.pressures) if args.pressures else m["pkpk_kPa"]
    rep = run_matrix(setup, designs, freqs, pressures, Path(args.out), args.workers)
    print(f"{len(rep.records)} trials, {len(rep.failures)} failures; report in {args.out}")
    for row in rep.hysteresis_table:
        print(f"{row['freq_Hz']:g} Hz @ {row['theta_deg']:.1f} deg: {row['baseline']} "
              f"{row['ratio_baseline']:.3f} vs {row['design']} {row['ratio_design']:.3f} "
              f"({100 * row['improvement']:+.1f}%)")
    return EXIT_OK if rep.records else EXIT_RUNTIME


def cmd_sim_calibrate(args) -> int:
    from .calibration import calibrate_expansion, calibrate_hysteresis

    setup = _setup(args)
    k = calibrate_expansion(setup, angle_deg=args.target_angle)
    geom = dataclasses.replace(setup.plant.wall_geometry, expansion_coefficient=k)
    setup = dataclasses.replace(setup, plant=dataclasses.replace(setup.plant, wall_geometry=geom))
    w = calibrate_hysteresis(setup, args.target_ratio)
    print(json.dumps({"expansion_coefficient": k, "hysteresis_weight": w}, indent=2))
    return EXIT_OK


def cmd_analyze_hyst(args) -> int:
    from .analysis import aggregate
    from .experiment import load_trial

    setup = _setup(args)
    rec = load_trial(Path(args.trial))
    if not rec.cycles:
        raise ConfigError(f"{args.trial} is not a triangle trial")
    for k, m in enumerate(aggregate(rec.cycles, setup.raw["analysis"]["aggregation"])):
        print(f"{k}: area {m.area:.4f} kPa*deg  ratio {m.ratio:.5f}  "
              f"max angle {m.max_angle:.3f} deg  max pressure {m.max_pressure:.3f} kPa")
    return EXIT_OK


def cmd_analyze_static(args) -> int:
    from .actuator_sim import static_angle
    from .analysis import validate_static

    setup = _setup(args)
    ep, ea = _read_curve(args.exp)
    if args.model:
        mp, ma = _read_curve(args.model)
    elif args.design:
        mp = np.linspace(0.0, float(ep.max()), 201)
        ma = static_angle(setup.design(args.design), mp, setup.material,
                          setup.plant.wall_geometry)
    else:
        raise ConfigError("give --model CSV or --design NAME")
    rep = validate_static(mp, ma, ep, ea)
    print(f"RMSE {rep.rmse:.3f} deg  NRMSE {100 * rep.nrmse:.2f}%")
    return EXIT_OK


def cmd_analyze_stress(args) -> int:
    from .fem_post import (center_slice_max, load_field, max_nominal_strain,
                           slice_longitudinal, write_summary_csv)

    setup = _setup(args)
    n = int(setup.raw["analysis"]["n_slices"])
    with open(args.field, newline="") as fh:
        field = load_field(fh)
    summaries = slice_longitudinal(field, n)
    print(f"center slice max {center_slice_max(field, n):.5f} MPa")
    if field.strain is not None:
        print(f"max nominal strain {max_nominal_strain(field):.4f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_summary_csv(summaries, fh)
    return EXIT_OK


def cmd_analyze_angle(args) -> int:
    from .kinematics import angles_from_frames, parse_keypoint_csv, write_angle_csv

    setup = _setup(args)
    with open(args.keypoints, newline="") as fh:
        frames = parse_keypoint_csv(fh, float(setup.raw["analysis"]["likelihood_threshold"]))
    flagged = sum(f.low_confidence for f in frames)
    samples = angles_from_frames(frames, args.handedness)
    with open(args.out, "w", newline="") as fh:
        write_angle_csv(samples, fh)
    print(f"{len(samples)} frames, {flagged} low-confidence; angles in {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plots

    if args.kind == "leaf":
        from .experiment import load_trial

        svg = plots.plot_leaf([load_trial(Path(p)) for p in args.inputs])
    elif args.kind == "bars":
        rows = []
        for path in args.inputs:
            with open(path, newline="") as fh:
                for r in csv.DictReader(fh):
                    if args.freq is None or float(r["freq_Hz"]) == args.freq:
                        rows.append({"design": r["design"], "pkpk_kPa": float(r["pkpk_kPa"]),
                                     args.value: float(r[args.value])})
        svg = plots.plot_bars(rows, args.value)
    else:
        from .fem_post import load_field, slice_values

        setup = _setup(args)
        with open(args.inputs[0], newline="") as fh:
            field = load_field(fh)
        svg = plots.plot_violins(slice_values(field, int(setup.raw["analysis"]["n_slices"])),
                                 args.design or "")
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config merged over the packaged defaults")

    sim_flags = _Parser(add_help=False)
    sim_flags.add_argument("--gain", type=float)
    sim_flags.add_argument("--hysteresis-weight", type=float)
    sim_flags.add_argument("--fill-time-constant", type=float)
    sim_flags.add_argument("--warmup-cycles", type=int)
    sim_flags.add_argument("--cycles", type=int)
    sim_flags.add_argument("--aggregation", choices=["mean", "per-cycle", "union"])

    p = _Parser(prog="pneunet", description="pneu-net design and hysteresis workbench")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    design = top.add_parser("design").add_subparsers(dest="verb", required=True,
                                                     parser_class=_Parser)
    g = design.add_parser("gen", parents=[common])
    g.add_argument("--design", default="all")
    g.add_argument("--out")
    g.set_defaults(func=cmd_design_gen)

    sim = top.add_parser("sim").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    r = sim.add_parser("run", parents=[common, sim_flags])
    r.add_argument("--design", required=True)
    r.add_argument("--kind", choices=["triangle", "staircase"], default="triangle")
    r.add_argument("--freq", type=float)
    r.add_argument("--pkpk", type=float)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_sim_run)
    m = sim.add_parser("matrix", parents=[common, sim_flags])
    m.add_argument("--designs", help="comma-separated design names")
    m.add_argument("--freqs")
    m.add_argument("--pressures")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_sim_matrix)
    c = sim.add_parser("calibrate", parents=[common, sim_flags])
    c.add_argument("--target-ratio", type=float, default=0.28)
    c.add_argument("--target-angle", type=float, default=208.0)
    c.set_defaults(func=cmd_sim_calibrate)

    an = top.add_parser("analyze").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    h = an.add_parser("hyst", parents=[common, sim_flags])
    h.add_argument("trial")
    h.set_defaults(func=cmd_analyze_hyst)
    s = an.add_parser("static", parents=[common])
    s.add_argument("--exp", required=True, help="CSV with p_kPa,angle_deg")
    s.add_argument("--model", help="CSV with p_kPa,angle_deg")
    s.add_argument("--design", help="use the surrogate static curve of this design")
    s.set_defaults(func=cmd_analyze_static)
    st = an.add_parser("stress", parents=[common])
    st.add_argument("field")
    st.add_argument("--out")
    st.set_defaults(func=cmd_analyze_stress)
    a = an.add_parser("angle", parents=[common])
    a.add_argument("keypoints")
    a.add_argument("--handedness", type=int, choices=[1, -1], default=1)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze_angle)

    pl = top.add_parser("plot", parents=[common])
    pl.add_argument("kind", choices=["leaf", "bars", "violins"])
    pl.add_argument("inputs", nargs="+", help="trial dirs, summary CSVs or one field CSV")
    pl.add_argument("--out", required=True)
    pl.add_argument("--freq", type=float)
    pl.add_argument("--value", default="max_angle_deg")
    pl.add_argument("--design")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
