"""Command-line front end: simulate, optimize, and compare workflows.

Every run writes the data files the plots are made from, plus a manifest
that records the exact inputs.  Exit codes: 0 success, 2 usage error,
3 validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import budget, nli, pso
from .config import (
    ConvergenceError,
    NumericalError,
    ScenarioConfig,
    ValidationError,
    frequency_to_wavelength,
    linear_to_db,
    load_config_dict,
    scenario_from_dict,
    shipped_data_path,
    watt_to_dbm,
)
from .raman import solve_span

TOOL_VERSION = "0.1.0"
_SHIPPED_CONFIGS = ("paper_hybrid.cfg", "paper_lumped.cfg", "paper_pso.cfg")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run (modulo tool version)."""

    command: str
    config_path: str
    output_directory: str
    seed: int
    fidelity: str
    threads: int
    tool_version: str
    timestamp: str
    baseline_path: str = ""
    trace_power_evolution: bool = False
    nli_breakdown: bool = False
    particles: int = 0  # 0 = use the config file / defaults
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "baseline_path": self.baseline_path or None,
            "output_directory": self.output_directory,
            "seed": self.seed,
            "fidelity": self.fidelity,
            "threads": self.threads,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "trace_power_evolution": self.trace_power_evolution,
            "nli_breakdown": self.nli_breakdown,
            "particles": self.particles or None,
            "iterations": self.iterations or None,
        }


def resolve_config_path(name: str):
    """An existing path wins; otherwise shipped config names resolve to the package copy."""
    p = Path(name)
    if p.exists():
        return p
    if p.name in _SHIPPED_CONFIGS and p.parent == Path("."):
        return shipped_data_path(p.name)
    return None


def _out_dir(manifest: RunManifest) -> Path:
    out = Path(manifest.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(manifest: RunManifest, out: Path) -> None:
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _wavelengths_nm(frequencies) -> np.ndarray:
    return frequency_to_wavelength(np.asarray(frequencies)) * 1e9


def _write_gain_spectrum(scenario: ScenarioConfig, evaluation, out: Path) -> None:
    """Per-channel Raman on-off gain, EDFA gain, and their sum.

    The on-off gain needs a pump-free solve of the same span; the total is
    the delivered amplification, which nets the span loss to exactly zero.
    """
    span = evaluation.propagation.span_solutions[0]
    grid = scenario.grid
    off = solve_span(
        grid,
        scenario.fibre,
        [],
        np.zeros(grid.n_channels),
        scenario.solver_settings,
        temperature=scenario.amplifier.temperature,
    )
    on_off_db = 10.0 * np.log10(span.rho[:, -1] / off.rho[:, -1])
    edfa_db = linear_to_db(budget.edfa_gain(span, grid))
    rows = [
        (f"{w:.6f}", f"{a:.6f}", f"{b:.6f}", f"{a + b:.6f}")
        for w, a, b in zip(_wavelengths_nm(grid.center_frequencies), on_off_db, edfa_db)
    ]
    _write_csv(out / "gain_spectrum.csv", ("wavelength_nm", "raman_on_off_gain_db", "edfa_gain_db", "total_gain_db"), rows)


def _write_power_evolution(scenario: ScenarioConfig, evaluation, out: Path) -> None:
    """First-span P(z) trace: z_km plus one column per wave (channels, then pumps)."""
    span = evaluation.propagation.span_solutions[0]
    lam_ch = _wavelengths_nm(scenario.grid.center_frequencies)
    header = ["z_km"]
    header += [f"channel_{i:03d}_{w:.2f}nm_mw" for i, w in enumerate(lam_ch)]
    header += [f"pump_{p.wavelength * 1e9:.1f}nm_mw" for p in scenario.pumps]
    columns = [span.z_samples / 1e3]
    columns += [row * 1e3 for row in span.signal_powers]
    columns += [row * 1e3 for row in span.pump_powers]
    rows = [[f"{v:.9g}" for v in vals] for vals in zip(*columns)]
    _write_csv(out / "power_evolution.csv", header, rows)


def _write_nli_breakdown(scenario: ScenarioConfig, evaluation, out: Path) -> None:
    lam = _wavelengths_nm(scenario.grid.center_frequencies)
    rows = []
    for i, (w, p, s) in enumerate(zip(lam, evaluation.nli.per_channel_nli_power, evaluation.nli.per_channel_snr_nli)):
        rows.append((i, f"{w:.6f}", f"{watt_to_dbm(p):.6f}", f"{linear_to_db(s):.6f}"))
    _write_csv(out / "nli_breakdown.csv", ("channel_index", "wavelength_nm", "nli_power_dbm", "snr_nli_db"), rows)


def _write_simulation_report(scenario: ScenarioConfig, evaluation, manifest: RunManifest, out: Path) -> None:
    budget.write_channel_csv(evaluation.result, out / "snr_per_channel.csv")
    _write_gain_spectrum(scenario, evaluation, out)
    budget.write_summary_json(evaluation.result, scenario, out / "summary.json")
    if manifest.trace_power_evolution:
        _write_power_evolution(scenario, evaluation, out)
    if manifest.nli_breakdown:
        _write_nli_breakdown(scenario, evaluation, out)


def run_simulate(manifest: RunManifest) -> dict:
    """Evaluate one scenario and write the report files; returns the summary."""
    scenario = scenario_from_dict(load_config_dict(manifest.config_path), base_dir=Path(manifest.config_path).parent)
    evaluation = budget.evaluate_link(scenario, manifest.fidelity, threads=manifest.threads)
    out = _out_dir(manifest)
    _write_simulation_report(scenario, evaluation, manifest, out)
    _write_manifest(manifest, out)
    summary = budget.summary_record(evaluation.result, scenario)
    print(
        f"throughput {summary['throughput_tbps']:.2f} Tbit/s over {scenario.n_spans} spans "
        f"({manifest.fidelity} fidelity); report in {out}"
    )
    return summary


def run_optimize(manifest: RunManifest) -> dict:
    """Swarm-search the pump/launch configuration, then re-score at reference fidelity."""
    raw = load_config_dict(manifest.config_path)
    scenario = scenario_from_dict(raw, base_dir=Path(manifest.config_path).parent)
    opt = raw.get("optimizer", {})
    problem = pso.build_problem(
        scenario,
        encoding=str(opt.get("encoding", "powers-only")),
        pump_wavelengths_nm=tuple(opt.get("pump_wavelengths_nm", pso.DEFAULT_PUMP_PRESETS_NM)),
        launch_power_bounds_dbm=tuple(opt.get("launch_power_bounds_dbm", (15.0, 25.0))),
        pump_power_cap_w=float(opt.get("pump_power_cap_mw", 500.0)) * 1e-3,
        pump_band_nm=tuple(opt.get("pump_band_nm", (1470.0, 1520.0))),
        fidelity=manifest.fidelity,
    )
    params = pso.PsoParams(
        n_particles=manifest.particles or int(opt.get("n_particles", 50)),
        max_iterations=manifest.iterations or int(opt.get("max_iterations", 50)),
        seed=manifest.seed,
    )
    t0 = time.monotonic()
    outcome = pso.optimize(problem, params, workers=manifest.threads)
    wall = time.monotonic() - t0

    out = _out_dir(manifest)
    dim = problem.dimension
    header = ["iteration", "best_cost_tbps"] + [f"v{i}" for i in range(dim)]
    rows = [
        [it, f"{cost / 1e12:.9f}"] + [f"{v:.9g}" for v in vec]
        for it, (cost, vec) in enumerate(zip(outcome.trace, outcome.trace_vectors))
    ]
    _write_csv(out / "trace.csv", header, rows)

    best_scenario = pso.decode_candidate(problem, outcome.best_vector)
    reference_eval = budget.evaluate_link(best_scenario, "reference", threads=manifest.threads)
    final = {
        "best_vector": [float(v) for v in outcome.best_vector],
        "encoding": problem.encoding,
        "best_throughput_search_tbps": outcome.best_cost / 1e12,
        "search_fidelity": manifest.fidelity,
        "best_throughput_reference_tbps": reference_eval.result.total_throughput / 1e12,
        "best_total_launch_dbm": float(outcome.best_vector[-1]),
        "evaluations": outcome.evaluations,
        "wall_time_s": wall,
    }
    (out / "final.json").write_text(json.dumps(final, indent=2) + "\n")
    _write_simulation_report(best_scenario, reference_eval, manifest, out)
    _write_manifest(manifest, out)
    print(
        f"best throughput {final['best_throughput_reference_tbps']:.2f} Tbit/s at reference fidelity "
        f"({final['best_throughput_search_tbps']:.2f} during search) after {outcome.evaluations} evaluations; "
        f"report in {out}"
    )
    return final


def run_compare(manifest: RunManifest) -> dict:
    """Evaluate --config against --baseline and write side-by-side deltas."""
    main_scn = scenario_from_dict(load_config_dict(manifest.config_path), base_dir=Path(manifest.config_path).parent)
    base_scn = scenario_from_dict(load_config_dict(manifest.baseline_path), base_dir=Path(manifest.baseline_path).parent)
    if main_scn.grid.n_channels != base_scn.grid.n_channels:
        raise ValidationError("compare requires both scenarios to share the channel grid")
    main_ev = budget.evaluate_link(main_scn, manifest.fidelity, threads=manifest.threads)
    base_ev = budget.evaluate_link(base_scn, manifest.fidelity, threads=manifest.threads)

    out = _out_dir(manifest)
    a, b = main_ev.result, base_ev.result
    rows = []
    for w, rec_a, rec_b in zip(_wavelengths_nm(a.frequencies), a.per_channel, b.per_channel):
        rows.append(
            (
                f"{w:.6f}",
                f"{linear_to_db(rec_a.snr_nli):.6f}",
                f"{linear_to_db(rec_a.snr_ase):.6f}",
                f"{linear_to_db(rec_a.snr_total):.6f}",
                f"{linear_to_db(rec_b.snr_nli):.6f}",
                f"{linear_to_db(rec_b.snr_ase):.6f}",
                f"{linear_to_db(rec_b.snr_total):.6f}",
                f"{linear_to_db(rec_a.snr_total) - linear_to_db(rec_b.snr_total):.6f}",
            )
        )
    _write_csv(
        out / "comparison.csv",
        (
            "wavelength_nm",
            "snr_nli_db",
            "snr_ase_db",
            "snr_total_db",
            "baseline_snr_nli_db",
            "baseline_snr_ase_db",
            "baseline_snr_total_db",
            "delta_snr_total_db",
        ),
        rows,
    )
    delta = a.total_throughput - b.total_throughput
    record = {
        "throughput_tbps": a.total_throughput / 1e12,
        "baseline_throughput_tbps": b.total_throughput / 1e12,
        "delta_tbps": delta / 1e12,
        "delta_percent": 100.0 * delta / b.total_throughput,
    }
    (out / "comparison.json").write_text(json.dumps(record, indent=2) + "\n")
    _write_manifest(manifest, out)
    print(
        f"throughput {record['throughput_tbps']:.2f} vs baseline {record['baseline_throughput_tbps']:.2f} Tbit/s: "
        f"{record['delta_percent']:+.1f}%; report in {out}"
    )
    return record


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramanlink",
        description="Hybrid Raman/EDFA wideband link simulator and throughput optimizer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_fidelity):
        p.add_argument("--config", required=True, help="scenario file path or shipped config name")
        p.add_argument("--out", default="ramanlink_report", help="output directory (default: %(default)s)")
        p.add_argument("--seed", type=int, default=2023, help="random seed (default: %(default)s)")
        p.add_argument(
            "--fidelity",
            choices=("fast", "reference"),
            default=default_fidelity,
            help="fast: single-span reuse + coarse quadrature; reference: full chain (default: %(default)s)",
        )
        p.add_argument(
            "--threads",
            type=int,
            default=max(os.cpu_count() or 1, 1),
            help="worker count; the RAMANLINK_THREADS environment variable overrides this flag",
        )
        p.add_argument("--trace-power-evolution", action="store_true", help="also write first-span power_evolution.csv")
        p.add_argument("--nli-breakdown", action="store_true", help="also write per-channel nli_breakdown.csv")

    sim = sub.add_parser("simulate", help="evaluate one scenario end to end")
    common(sim, "reference")

    opt = sub.add_parser("optimize", help="maximize throughput over pump/launch configuration")
    common(opt, "fast")
    opt.add_argument("--particles", type=int, default=0, help="override the config's swarm size")
    opt.add_argument("--iterations", type=int, default=0, help="override the config's iteration budget")

    cmp_ = sub.add_parser("compare", help="side-by-side of two scenarios")
    common(cmp_, "reference")
    cmp_.add_argument("--baseline", required=True, help="scenario to compare against")
    return parser


def _manifest_from_args(parser: argparse.ArgumentParser, args: argparse.Namespace) -> RunManifest:
    config = resolve_config_path(args.config)
    if config is None:
        parser.error(f"config file not found: {args.config}")
    baseline = ""
    if args.command == "compare":
        resolved = resolve_config_path(args.baseline)
        if resolved is None:
            parser.error(f"baseline config file not found: {args.baseline}")
        baseline = str(resolved)
    threads = args.threads
    env = os.environ.get("RAMANLINK_THREADS", "").strip()
    if env:
        try:
            threads = int(env)
        except ValueError:
            parser.error(f"RAMANLINK_THREADS must be an integer, got '{env}'")
    if threads < 1:
        parser.error("thread count must be at least 1")
    return RunManifest(
        command=args.command,
        config_path=str(config),
        output_directory=args.out,
        seed=args.seed,
        fidelity=args.fidelity,
        threads=threads,
        tool_version=TOOL_VERSION,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        baseline_path=baseline,
        trace_power_evolution=args.trace_power_evolution,
        nli_breakdown=args.nli_breakdown,
        particles=getattr(args, "particles", 0),
        iterations=getattr(args, "iterations", 0),
    )


_RUNNERS = {"simulate": run_simulate, "optimize": run_optimize, "compare": run_compare}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    manifest = _manifest_from_args(parser, args)
    try:
        _RUNNERS[manifest.command](manifest)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
