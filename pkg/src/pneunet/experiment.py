"""Trial execution and persistence.

A trial drives one design through the closed pressure loop and logs the
reference, the filtered pressure reading and the bending angle at the control
rate. Triangle trials run ``warmup_cycles`` unrecorded cycles first so the
logged cycles start from the periodic regime instead of a virgin actuator.

Each trial directory holds ``trial.csv``, ``metrics.csv`` (or ``static.csv``
for staircases) and ``manifest.json`` with the spec and file hashes.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .actuator_sim import PlantParams, simulate_plant
from .analysis import (
    Aggregation,
    HysteresisCycle,
    ResponseCurve,
    TimeSeries,
    aggregate,
    constant_angle_compare,
    cycle_rows,
    overlap_span,
    response_improvement,
    segment_cycles,
    steady_state_extract,
    write_metrics_csv,
)
from .config import ConfigError, Setup
from .pneumatics import Kind, ReferenceWaveform, run_closed_loop

TRIAL_HEADER = ["time_s", "p_ref_kPa", "p_meas_kPa", "angle_deg"]


@dataclass(frozen=True)
class TrialSpec:
    design_name: str
    reference: ReferenceWaveform
    plant: PlantParams
    seed: int = 0  # recorded for provenance; the simulated rig has no noise source
    output_dir: Path | None = None

    def to_dict(self) -> dict:
        return {"design_name": self.design_name, "reference": self.reference.to_dict(),
                "plant": dataclasses.asdict(self.plant), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict, output_dir=None) -> "TrialSpec":
        return cls(d["design_name"], ReferenceWaveform.from_dict(d["reference"]),
                   PlantParams.from_dict(d["plant"]), int(d.get("seed", 0)),
                   Path(output_dir) if output_dir else None)


@dataclass
class TrialRecord:
    spec: TrialSpec
    series: TimeSeries
    cycles: list[HysteresisCycle] = field(default_factory=list)
    static_points: tuple[np.ndarray, np.ndarray] | None = None
    created_at: str = ""
    tool_version: str = __version__

    def metric_rows(self) -> list[dict]:
        ref = self.spec.reference
        return cycle_rows(self.spec.design_name, ref.frequency_Hz, ref.peak_to_peak_kPa,
                          self.cycles)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.isoformat(timespec="seconds")


def simulate_series(spec: TrialSpec, setup: Setup, warmup_cycles: int = 0) -> TimeSeries:
    """Closed-loop run; returns the recorded part of the log."""
    design = setup.design(spec.design_name)
    ref = spec.reference
    if ref.kind is Kind.TRIANGLE:
        full = ref.values(ref.cycles + warmup_cycles)
        skip = warmup_cycles * ref.samples_per_cycle
    else:
        full = ref.values()
        skip = 0
    if setup.controller.sample_rate_Hz != ref.sample_rate_Hz:
        raise ConfigError("reference and controller sample rates differ")
    loop = run_closed_loop(full, setup.controller, setup.line)
    plant = simulate_plant(design, loop.line, ref.dt, spec.plant, setup.material)
    n = full.size - skip
    return TimeSeries(np.arange(n) / ref.sample_rate_Hz, full[skip:], loop.measured[skip:],
                      plant.angle[skip:])


def compute_metrics(record: TrialRecord, steady_fraction: float = 0.2) -> TrialRecord:
    ref = record.spec.reference
    if ref.kind is Kind.TRIANGLE:
        record.cycles = segment_cycles(record.series, ref)
    else:
        record.static_points = steady_state_extract(record.series, ref, steady_fraction)
    return record


def run_trial(spec: TrialSpec, setup: Setup) -> TrialRecord:
    trial_cfg = setup.raw.get("trial", {})
    analysis_cfg = setup.raw.get("analysis", {})
    series = simulate_series(spec, setup, int(trial_cfg.get("warmup_cycles", 0)))
    record = TrialRecord(spec, series, created_at=_timestamp())
    compute_metrics(record, float(analysis_cfg.get("steady_state_fraction", 0.2)))
    if spec.output_dir is not None:
        save_trial(record, spec.output_dir)
    return record


# -- persistence ---------------------------------------------------------------------

def series_to_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_HEADER)
    for row in zip(series.time.tolist(), series.p_ref.tolist(), series.p_meas.tolist(),
                   series.angle.tolist()):
        w.writerow([repr(v) for v in row])
    return buf.getvalue()


def series_from_csv(text: str) -> TimeSeries:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != TRIAL_HEADER:
        raise ValueError(f"trial CSV header must be {','.join(TRIAL_HEADER)}")
    rows = np.array([[float(v) for v in r] for r in reader if r], dtype=float).reshape(-1, 4)
    return TimeSeries(*rows.T)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def save_trial(record: TrialRecord, out: Path) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {"trial.csv": series_to_csv(record.series)}
    if record.cycles:
        buf = io.StringIO()
        write_metrics_csv(record.metric_rows(), buf)
        files["metrics.csv"] = buf.getvalue()
    if record.static_points is not None:
        lines = ["p_kPa,angle_deg"] + [f"{p!r},{a!r}" for p, a in
                                       zip(*(x.tolist() for x in record.static_points))]
        files["static.csv"] = "\n".join(lines) + "\n"
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {"spec": record.spec.to_dict(), "tool_version": record.tool_version,
                "created_at": record.created_at,
                "hashes": {name: _sha256(text) for name, text in sorted(files.items())}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_trial(out: Path, steady_fraction: float = 0.2, verify: bool = True) -> TrialRecord:
    """Reload a trial directory and recompute its metrics from the stored series."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    text = (out / "trial.csv").read_text()
    if verify and manifest["hashes"].get("trial.csv") != _sha256(text):
        raise ValueError(f"{out / 'trial.csv'} does not match its manifest hash")
    spec = TrialSpec.from_dict(manifest["spec"], out)
    record = TrialRecord(spec, series_from_csv(text), created_at=manifest["created_at"],
                         tool_version=manifest["tool_version"])
    return compute_metrics(record, steady_fraction)


# -- matrix -------------------------------------------------------------------------

def _cell_name(design: str, freq: float, pkpk: float) -> str:
    return f"{design}_{freq:g}Hz_{pkpk:g}kPa"


def _run_cell(args):
    spec, setup = args
    try:
        return run_trial(spec, setup), None
    except Exception as exc:  # reported per cell, the matrix carries on
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class MatrixReport:
    records: dict[tuple[str, float, float], TrialRecord]
    failures: dict[tuple[str, float, float], str]
    summary: list[dict]
    hysteresis_table: list[dict]
    response_table: list[dict]


def run_matrix(setup: Setup, designs, frequencies, pressures, output_dir: Path | None = None,
               workers: int = 1) -> MatrixReport:
    designs, frequencies, pressures = list(designs), list(frequencies), list(pressures)
    if not (designs and frequencies and pressures):
        raise ValueError("matrix grid must be non-empty")
    cycles = int(setup.raw.get("trial", {}).get("cycles", 12))
    cells, jobs = [], []
    for d in designs:
        for f in frequencies:
            for p in pressures:
                ref = ReferenceWaveform(Kind.TRIANGLE, p, setup.controller.sample_rate_Hz, f, cycles)
                out = Path(output_dir) / _cell_name(d, f, p) if output_dir else None
                cells.append((d, f, p))
                jobs.append((TrialSpec(d, ref, setup.plant, 0, out), setup))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    records, failures = {}, {}
    for key, (rec, err) in zip(cells, results):
        if err is None:
            records[key] = rec
        else:
            failures[key] = err
    report = assemble_report(setup, records, failures)
    if output_dir:
        write_report(report, Path(output_dir))
    return report


def assemble_report(setup: Setup, records: dict, failures: dict) -> MatrixReport:
    mode = Aggregation(setup.raw.get("analysis", {}).get("aggregation", "mean"))
    summary = []
    for (d, f, p), rec in records.items():
        for k, m in enumerate(aggregate(rec.cycles, mode)):
            summary.append({"design": d, "freq_Hz": f, "pkpk_kPa": p,
                            "cycle": k if mode is Aggregation.PER_CYCLE else "",
                            "area_kPa_deg": m.area, "ratio": m.ratio,
                            "max_angle_deg": m.max_angle})
    hyst, resp = comparison_tables(setup, summary, failures)
    return MatrixReport(records, failures, summary, hyst, resp)


def comparison_tables(setup: Setup, summary: list[dict], failures: dict):
    """Constant-angle hysteresis comparison and peak-angle gains against the baseline."""
    analysis_cfg = setup.raw.get("analysis", {})
    baseline = analysis_cfg.get("baseline_design", "original")
    angles_cfg = {float(k): v for k, v in analysis_cfg.get("compare_angles", {}).items()}
    agg = {}
    for row in summary:
        if row["cycle"] in ("", 0):
            agg[(row["design"], row["freq_Hz"], row["pkpk_kPa"])] = row
    designs = sorted({k[0] for k in agg} - {baseline})
    freqs = sorted({k[1] for k in agg})
    hyst, resp = [], []
    for f in freqs:
        base_pts = {k[2]: v for k, v in agg.items() if k[0] == baseline and k[1] == f}
        if not base_pts:
            continue
        for d in designs:
            pts = {k[2]: v for k, v in agg.items() if k[0] == d and k[1] == f}
            for p in sorted(set(pts) & set(base_pts)):
                a, b = base_pts[p]["max_angle_deg"], pts[p]["max_angle_deg"]
                resp.append({"freq_Hz": f, "pkpk_kPa": p, "baseline": baseline, "design": d,
                             "angle_baseline_deg": a, "angle_design_deg": b,
                             "improvement": response_improvement(a, b)})
            try:
                ca = ResponseCurve.from_triples((r["max_angle_deg"], r["ratio"], p)
                                                for p, r in base_pts.items())
                cb = ResponseCurve.from_triples((r["max_angle_deg"], r["ratio"], p)
                                                for p, r in pts.items())
                theta = angles_cfg.get(f)
                if theta is None:
                    lo, hi = overlap_span(ca, cb)
                    theta = 0.5 * (lo + hi)
                ra, rb, imp = constant_angle_compare(ca, cb, theta)
            except ValueError as exc:
                failures[(d, f, "compare")] = str(exc)
                continue
            hyst.append({"freq_Hz": f, "theta_deg": theta, "baseline": baseline, "design": d,
                         "ratio_baseline": ra, "ratio_design": rb, "improvement": imp})
    return hyst, resp


def _write_rows(path: Path, rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})


HYSTERESIS_HEADER = ["freq_Hz", "theta_deg", "baseline", "design", "ratio_baseline",
                     "ratio_design", "improvement"]
RESPONSE_HEADER = ["freq_Hz", "pkpk_kPa", "baseline", "design", "angle_baseline_deg",
                   "angle_design_deg", "improvement"]
SUMMARY_HEADER = ["design", "freq_Hz", "pkpk_kPa", "cycle", "area_kPa_deg", "ratio",
                  "max_angle_deg"]


def write_report(report: MatrixReport, out: Path) -> None:
    from .plots import plot_bars, plot_leaf

    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "summary.csv", report.summary, SUMMARY_HEADER)
    _write_rows(out / "hysteresis_comparison.csv", report.hysteresis_table, HYSTERESIS_HEADER)
    _write_rows(out / "response_comparison.csv", report.response_table, RESPONSE_HEADER)
    _write_rows(out / "failures.csv",
                [{"cell": "/".join(str(x) for x in k), "error": v}
                 for k, v in sorted(report.failures.items(), key=str)], ["cell", "error"])
    freqs = sorted({k[1] for k in report.records})
    for f in freqs:
        for p in sorted({k[2] for k in report.records if k[1] == f}):
            recs = [r for k, r in report.records.items() if k[1] == f and k[2] == p]
            (out / f"leaf_{f:g}Hz_{p:g}kPa.svg").write_text(plot_leaf(recs))
        rows = [r for r in report.summary if r["freq_Hz"] == f and r["cycle"] in ("", 0)]
        if rows:
            (out / f"bars_{f:g}Hz.svg").write_text(plot_bars(rows))
