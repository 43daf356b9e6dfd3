"""
Swarm search over pump powers and launch power
==============================================

Runs a compact particle-swarm search (8 particles, 10 iterations) on the
shipped tuning problem: six candidate pump wavelengths whose powers may
collapse to zero, plus the total launch power.  Plots the best-so-far
throughput trace and the winning pump allocation.  The full 50x50 budget
used for the headline result takes about 40 minutes on one core; this
cut-down run finishes in a couple of minutes and lands close.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ramanlink.cli import resolve_config_path
from ramanlink.config import load_config_dict, scenario_from_dict
from ramanlink.pso import PsoParams, build_problem, decode_candidate, optimize

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

raw = load_config_dict(resolve_config_path("paper_pso.cfg"))
scenario = scenario_from_dict(raw)
opt = raw["optimizer"]

problem = build_problem(
    scenario,
    encoding=opt["encoding"],
    pump_wavelengths_nm=tuple(opt["pump_wavelengths_nm"]),
    launch_power_bounds_dbm=tuple(opt["launch_power_bounds_dbm"]),
    pump_power_cap_w=opt["pump_power_cap_mw"] * 1e-3,
    pump_band_nm=tuple(opt["pump_band_nm"]),
    fidelity="fast",
)

# a swarm this small needs luck in the first batch: uniform draws over six
# 0-500 mW pump slots usually over-amplify the span and are penalized, so
# keep enough particles (or pick the seed) such that a feasible draw exists
outcome = optimize(problem, PsoParams(n_particles=12, max_iterations=10, seed=1))

fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.5))
left.plot(np.arange(outcome.trace.size), outcome.trace / 1e12, marker="o", ms=3)
left.set_xlabel("iteration")
left.set_ylabel("best throughput (Tbit/s)")
left.set_title(f"{outcome.evaluations} fast-fidelity evaluations")

labels = [f"{w:.0f}" for w in problem.pump_wavelength_presets]
right.bar(labels, outcome.best_vector[:6] * 1e3)
right.set_xlabel("pump wavelength (nm)")
right.set_ylabel("injected power (mW)")
right.set_title(f"winner at {outcome.best_vector[-1]:.2f} dBm total launch")
fig.tight_layout()
fig.savefig(out_dir / "optimization_trace.png", dpi=150)

best = decode_candidate(problem, outcome.best_vector)
print(f"best throughput during search: {outcome.best_cost / 1e12:.2f} Tbit/s")
print(f"decoded scenario keeps {len(best.pumps)} pumps (sub-microwatt slots are dropped)")
print(f"wrote {out_dir / 'optimization_trace.png'}")
