"""EDFA gain and ASE, hybrid noise combination, per-channel SNR, throughput.

The span-end amplifier is ideal: per-channel gain G_i = P_i(0)/P_i(L)
restores launch power exactly.  SNR is referenced to the restored launch
power, so SNR_ASE,i = P_i(0)/ASE_i and SNR_i combines the ASE and NLI terms
harmonically.  Rates are Shannon-Gaussian over two polarizations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import (
    PLANCK,
    FAST_NLI_SETTINGS,
    ChannelGrid,
    ScenarioConfig,
    ValidationError,
    db_to_linear,
    frequency_to_wavelength,
    linear_to_db,
    watt_to_dbm,
)
from . import nli as nli_engine
from .raman import PropagationResult, SpanSolution, propagate_link


def edfa_gain(span: SpanSolution, grid: ChannelGrid) -> np.ndarray:
    """Per-channel lumped gain G_i = P_i(0)/P_i(L) that restores launch power."""
    if span.signal_powers.shape[0] != grid.n_channels:
        raise ValidationError("span was solved on a different channel grid")
    launch = span.signal_powers[:, 0]
    out = span.signal_powers[:, -1]
    if np.any(out <= 0):
        raise ValidationError("channel power vanished over the span; gain undefined")
    return launch / out


def edfa_ase(gain, nf_db, f, bandwidth):
    """Amplifier ASE power 2(G-1) n_sp h f B with n_sp = 10^(NF_dB/10)/2."""
    g = np.asarray(gain, dtype=float)
    if np.any(g < 1.0):
        raise ValidationError("attenuating EDFA (gain < 1) is out of scope")
    n_sp = db_to_linear(np.asarray(nf_db, dtype=float)) / 2.0
    out = 2.0 * (g - 1.0) * n_sp * PLANCK * np.asarray(f, dtype=float) * bandwidth
    return float(out) if out.ndim == 0 else out


def hybrid_ase(gain, raman_ase, edfa_ase_power):
    """Total span-exit ASE: Raman ASE lifted by the lumped gain, plus EDFA ASE."""
    g = np.asarray(gain, dtype=float)
    r = np.asarray(raman_ase, dtype=float)
    e = np.asarray(edfa_ase_power, dtype=float)
    if np.any(g < 0) or np.any(r < 0) or np.any(e < 0):
        raise ValidationError("hybrid_ase inputs must be non-negative")
    out = g * r + e
    return float(out) if out.ndim == 0 else out


def snr_total(snr_nli, snr_ase):
    """Harmonic combination 1/(1/a + 1/b); an infinite argument drops out."""
    a = np.asarray(snr_nli, dtype=float)
    b = np.asarray(snr_ase, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / (1.0 / a + 1.0 / b)
    return float(out) if out.ndim == 0 else out


def throughput(snrs, symbol_rate: float):
    """Dual-polarization Shannon throughput.

    Returns (total bit/s, per-channel spectral efficiency in bit/symbol).
    """
    snr = np.atleast_1d(np.asarray(snrs, dtype=float))
    if np.any(snr < 0):
        raise ValidationError("SNR values must be non-negative")
    if symbol_rate <= 0:
        raise ValidationError("symbol_rate must be positive")
    se = 2.0 * np.log2(1.0 + snr)
    return float(symbol_rate * se.sum()), se


class ChannelRecord(NamedTuple):
    frequency: float
    snr_nli: float
    snr_ase: float
    snr_total: float
    spectral_efficiency: float


@dataclass(frozen=True)
class LinkResult:
    """Per-channel SNR decomposition and total throughput for one link."""

    frequencies: np.ndarray
    snr_nli: np.ndarray
    snr_ase: np.ndarray
    snr_total: np.ndarray
    spectral_efficiency: np.ndarray
    total_throughput: float  # bit/s
    total_launch_power: float  # W

    def __post_init__(self):
        for name in ("frequencies", "snr_nli", "snr_ase", "snr_total", "spectral_efficiency"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        bound = np.minimum(self.snr_nli, self.snr_ase)
        if np.any(self.snr_total > bound * (1.0 + 1e-12) + 1e-300):
            raise ValidationError("snr_total must not exceed either contribution")

    @property
    def per_channel(self) -> tuple:
        return tuple(
            ChannelRecord(*vals)
            for vals in zip(self.frequencies, self.snr_nli, self.snr_ase, self.snr_total, self.spectral_efficiency)
        )


@dataclass(frozen=True)
class LinkEvaluation:
    """Link result plus the intermediate products the reports draw from."""

    result: LinkResult
    propagation: PropagationResult
    nli: nli_engine.NliResult
    fidelity: str


def evaluate_link(scenario: ScenarioConfig, fidelity: str = "reference", *, threads: int = 1) -> LinkEvaluation:
    """Full pipeline: propagate spans, NLI quadrature, SNR budget, throughput.

    Reference fidelity chains every span and runs the quadrature at the
    configured resolution.  Fast fidelity solves one span and reuses it,
    coarsens the integrator grid to 500 m steps, and forces the coarse
    quadrature/subsampling knobs (accumulation mode is kept).
    """
    if fidelity not in ("reference", "fast"):
        raise ValidationError("fidelity must be 'reference' or 'fast'")
    grid = scenario.grid
    if fidelity == "fast":
        mode = "single-span-reuse"
        nli_settings = replace(
            scenario.nli_settings,
            quadrature_points_per_axis=FAST_NLI_SETTINGS.quadrature_points_per_axis,
            channel_subsampling=FAST_NLI_SETTINGS.channel_subsampling,
        )
        if scenario.solver_settings.max_step < 500.0:
            scenario = replace(scenario, solver_settings=replace(scenario.solver_settings, max_step=500.0))
    else:
        mode = "chained"
        nli_settings = scenario.nli_settings

    propagation = propagate_link(scenario, mode=mode)
    per_span = nli_engine.nli_spectrum(grid, scenario.fibre, propagation.span_solutions[0], nli_settings, threads=threads)
    total_nli = nli_engine.accumulate_nli(per_span, scenario.n_spans, nli_settings)
    snr_n = nli_engine.snr_nli(grid, total_nli)
    nli_result = nli_engine.NliResult(per_channel_nli_power=total_nli, per_channel_snr_nli=snr_n)

    snr_a = grid.per_channel_launch_power / propagation.accumulated_ase
    snr_t = snr_total(snr_n, snr_a)
    total, se = throughput(snr_t, grid.channel_bandwidth)
    result = LinkResult(
        frequencies=grid.center_frequencies,
        snr_nli=snr_n,
        snr_ase=snr_a,
        snr_total=snr_t,
        spectral_efficiency=se,
        total_throughput=total,
        total_launch_power=grid.total_launch_power,
    )
    return LinkEvaluation(result=result, propagation=propagation, nli=nli_result, fidelity=fidelity)


# ---------------------------------------------------------------------------
# serialization

_CHANNEL_CSV_COLUMNS = ("wavelength_nm", "snr_nli_db", "snr_ase_db", "snr_total_db", "se_bit_per_symbol")


def write_channel_csv(result: LinkResult, path) -> None:
    """One row per channel: wavelength_nm, snr_nli_db, snr_ase_db, snr_total_db, se_bit_per_symbol."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CHANNEL_CSV_COLUMNS)
        for rec in result.per_channel:
            writer.writerow(
                [
                    f"{frequency_to_wavelength(rec.frequency) * 1e9:.6f}",
                    f"{linear_to_db(rec.snr_nli):.6f}",
                    f"{linear_to_db(rec.snr_ase):.6f}",
                    f"{linear_to_db(rec.snr_total):.6f}",
                    f"{rec.spectral_efficiency:.6f}",
                ]
            )


def read_csv_columns(path) -> dict:
    """Parse any report CSV back into {column: float array}; blank cells become NaN."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ValidationError(f"empty CSV: {path}")
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        out[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in body])
    return out


def summary_record(result: LinkResult, scenario: ScenarioConfig) -> dict:
    """Summary JSON payload: throughput, launch power, and the pump table."""
    return {
        "throughput_tbps": result.total_throughput / 1e12,
        "total_launch_dbm": watt_to_dbm(result.total_launch_power),
        "n_channels": int(result.frequencies.size),
        "n_spans": scenario.n_spans,
        "pumps": [
            {
                "wavelength_nm": p.wavelength * 1e9,
                "power_mw": p.injected_power * 1e3,
                "direction": p.direction,
            }
            for p in scenario.pumps
        ],
    }


def write_summary_json(result: LinkResult, scenario: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(summary_record(result, scenario), indent=2) + "\n")
