"""
Per-channel SNR budget, hybrid vs lumped amplification
======================================================

Evaluates the two shipped 117-span scenarios end to end and plots the
nonlinear, ASE, and combined SNR across the 105-channel comb, then the
spectral efficiency each one supports.  Fast fidelity keeps this under a
minute; swap in "reference" to reproduce the headline numbers exactly.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ramanlink.budget import evaluate_link
from ramanlink.cli import resolve_config_path
from ramanlink.config import linear_to_db, load_scenario

FIDELITY = "fast"

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

hybrid = load_scenario(resolve_config_path("paper_hybrid.cfg"))
lumped = load_scenario(resolve_config_path("paper_lumped.cfg"))

hybrid_eval = evaluate_link(hybrid, FIDELITY)
lumped_eval = evaluate_link(lumped, FIDELITY)

wavelengths_nm = 299792458.0 / hybrid.grid.center_frequencies * 1e9

fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 8), sharex=True)

r = hybrid_eval.result
top.plot(wavelengths_nm, linear_to_db(r.snr_nli), label="SNR_NLI")
top.plot(wavelengths_nm, linear_to_db(r.snr_ase), label="SNR_ASE")
top.plot(wavelengths_nm, linear_to_db(r.snr_total), "k", label="combined")
top.set_ylabel("SNR (dB)")
top.set_title(f"hybrid scenario, {FIDELITY} fidelity")
top.legend()

bottom.plot(wavelengths_nm, linear_to_db(hybrid_eval.result.snr_total), label="hybrid")
bottom.plot(wavelengths_nm, linear_to_db(lumped_eval.result.snr_total), label="lumped")
bottom.set_xlabel("wavelength (nm)")
bottom.set_ylabel("combined SNR (dB)")
bottom.legend()
fig.tight_layout()
fig.savefig(out_dir / "snr_spectrum.png", dpi=150)

# throughput comes from the Shannon rate of each channel at two polarizations
fig2, ax = plt.subplots(figsize=(8, 4.5))
ax.plot(wavelengths_nm, hybrid_eval.result.spectral_efficiency, label="hybrid")
ax.plot(wavelengths_nm, lumped_eval.result.spectral_efficiency, label="lumped")
ax.set_xlabel("wavelength (nm)")
ax.set_ylabel("spectral efficiency (bit/symbol)")
ax.legend()
fig2.tight_layout()
fig2.savefig(out_dir / "spectral_efficiency.png", dpi=150)

th_h = hybrid_eval.result.total_throughput / 1e12
th_l = lumped_eval.result.total_throughput / 1e12
print(f"hybrid {th_h:.2f} Tbit/s vs lumped {th_l:.2f} Tbit/s ({100 * (th_h - th_l) / th_l:+.1f}%)")
print(f"wrote {out_dir / 'snr_spectrum.png'} and {out_dir / 'spectral_efficiency.png'}")
