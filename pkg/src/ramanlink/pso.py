"""Bounded global-best particle swarm and the throughput-maximization binding.

The core maximizes an arbitrary cost over box bounds.  All random draws
happen on the coordinator from per-particle generators spawned off one seed,
so results are byte-identical for any worker count.  The link binding
decodes a decision vector into a scenario and scores it with the full
pipeline; a candidate that fails to converge scores worst-cost instead of
raising.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .config import (
    DEFAULT_PUMP_BAND,
    DEFAULT_PUMP_POWER_CAP,
    ConvergenceError,
    NumericalError,
    PumpSpec,
    ScenarioConfig,
    ValidationError,
    build_channel_grid,
    dbm_to_watt,
    frequency_to_wavelength,
)

log = logging.getLogger(__name__)

# paper-reported pump wavelengths plus fillers across the pump band
DEFAULT_PUMP_PRESETS_NM = (1470.0, 1480.0, 1490.0, 1499.0, 1502.0, 1510.0)
_NEGLIGIBLE_PUMP = 1e-6  # W, decoded pumps below this are omitted from the scenario
WORST_COST = -math.inf


@dataclass(frozen=True)
class PsoParams:
    """Swarm hyperparameters; defaults are the constriction-style standard."""

    n_particles: int = 50
    max_iterations: int = 50
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    velocity_clamp_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValidationError("n_particles must be at least 2")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if min(self.inertia, self.cognitive, self.social) <= 0:
            raise ValidationError("inertia, cognitive, and social coefficients must be positive")
        if not 0 < self.velocity_clamp_fraction <= 1:
            raise ValidationError("velocity_clamp_fraction must be in (0, 1]")


@dataclass(frozen=True)
class OptimizationProblem:
    """Decision-vector encoding, box bounds, and the scenario the vector edits.

    powers-only: [p1..p6 (W), total launch (dBm)], pump wavelengths taken
    from pump_wavelength_presets.  powers-and-wavelengths: [p1..p6 (W),
    lambda1..lambda6 (nm), total launch (dBm)].
    """

    encoding: str
    bounds: np.ndarray  # (dim, 2)
    scenario_template: ScenarioConfig
    fidelity: str = "fast"
    pump_wavelength_presets: tuple = DEFAULT_PUMP_PRESETS_NM

    def __post_init__(self):
        if self.encoding not in ("powers-only", "powers-and-wavelengths"):
            raise ValidationError("encoding must be 'powers-only' or 'powers-and-wavelengths'")
        if self.fidelity not in ("fast", "reference"):
            raise ValidationError("fidelity must be 'fast' or 'reference'")
        bounds = np.asarray(self.bounds, dtype=float)
        if bounds.ndim != 2 or bounds.shape[1] != 2:
            raise ValidationError("bounds must have shape (dim, 2)")
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ValidationError("every bound must satisfy lo < hi")
        expected = 7 if self.encoding == "powers-only" else 13
        if bounds.shape[0] != expected:
            raise ValidationError(f"{self.encoding} encoding requires {expected} bounds, got {bounds.shape[0]}")
        if len(self.pump_wavelength_presets) != 6:
            raise ValidationError("pump_wavelength_presets must list 6 wavelengths (nm)")
        bounds.setflags(write=False)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "pump_wavelength_presets", tuple(float(w) for w in self.pump_wavelength_presets))

    @property
    def dimension(self) -> int:
        return self.bounds.shape[0]


def build_problem(
    scenario_template: ScenarioConfig,
    *,
    encoding: str = "powers-only",
    pump_wavelengths_nm=DEFAULT_PUMP_PRESETS_NM,
    launch_power_bounds_dbm=(15.0, 25.0),
    pump_power_cap_w: float = DEFAULT_PUMP_POWER_CAP,
    pump_band_nm=(DEFAULT_PUMP_BAND[0] * 1e9, DEFAULT_PUMP_BAND[1] * 1e9),
    fidelity: str = "fast",
) -> OptimizationProblem:
    """Assemble bounds for either encoding from the physical limits."""
    power_rows = [(0.0, pump_power_cap_w)] * 6
    launch_row = [tuple(launch_power_bounds_dbm)]
    if encoding == "powers-and-wavelengths":
        rows = power_rows + [tuple(pump_band_nm)] * 6 + launch_row
    else:
        rows = power_rows + launch_row
    return OptimizationProblem(
        encoding=encoding,
        bounds=np.array(rows, dtype=float),
        scenario_template=scenario_template,
        fidelity=fidelity,
        pump_wavelength_presets=tuple(pump_wavelengths_nm),
    )


def decode_candidate(problem: OptimizationProblem, vector) -> ScenarioConfig:
    """Turn a decision vector into a concrete scenario.

    Launch power is split uniformly over the channels; pumps below 1 uW are
    dropped; all decoded pumps are backward.
    """
    x = np.asarray(vector, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValidationError(f"decision vector must have {problem.dimension} entries")
    if np.any(x < problem.bounds[:, 0] - 1e-12) or np.any(x > problem.bounds[:, 1] + 1e-12):
        raise ValidationError("decision vector violates the problem bounds")
    powers_w = x[:6]
    if problem.encoding == "powers-and-wavelengths":
        wavelengths_nm = x[6:12]
    else:
        wavelengths_nm = np.asarray(problem.pump_wavelength_presets)
    total_dbm = x[-1]

    template = problem.scenario_template
    old = template.grid
    center = frequency_to_wavelength(0.5 * (old.center_frequencies[0] + old.center_frequencies[-1]))
    grid = build_channel_grid(
        center_wavelength=center,
        n_channels=old.n_channels,
        symbol_rate=old.channel_bandwidth,
        total_power=dbm_to_watt(total_dbm),
    )
    pumps = tuple(
        PumpSpec(wavelength=wl * 1e-9, injected_power=float(p), direction="backward")
        for wl, p in zip(wavelengths_nm, powers_w)
        if p >= _NEGLIGIBLE_PUMP
    )
    return replace(template, grid=grid, pumps=pumps)


def evaluate_candidate(problem: OptimizationProblem, vector) -> float:
    """Throughput (bit/s) of one decision vector; worst-cost on pipeline failure."""
    from .budget import evaluate_link  # deferred: budget is heavy and workers import lazily

    scenario = decode_candidate(problem, vector)
    try:
        evaluation = evaluate_link(scenario, problem.fidelity)
    except (ConvergenceError, NumericalError, ValidationError) as exc:
        # the per-iteration summary in optimize() warns; per-candidate detail stays at info
        log.info("candidate %s scored worst-cost: %s", np.array2string(np.asarray(vector), precision=4), exc)
        return WORST_COST
    return evaluation.result.total_throughput


@dataclass(frozen=True)
class OptimizationOutcome:
    """Best vector/cost plus per-iteration global-best traces (index 0 = init)."""

    best_vector: np.ndarray
    best_cost: float
    trace: np.ndarray
    trace_vectors: np.ndarray
    evaluations: int

    def __post_init__(self):
        for name in ("best_vector", "trace", "trace_vectors"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def optimize(problem: OptimizationProblem, params: PsoParams, *, cost_function=None, workers: int = 1) -> OptimizationOutcome:
    """Global-best PSO maximization of cost_function (default: evaluate_candidate).

    Velocities update with inertia/cognitive/social terms; positions clamp to
    bounds with the violated velocity component zeroed; velocity magnitude is
    clamped per coordinate to velocity_clamp_fraction of the bound range.
    Non-finite costs are penalized to worst-cost and logged.  The trace is
    monotone non-decreasing and deterministic for a fixed seed, independent
    of worker count.
    """
    cost = partial(evaluate_candidate, problem) if cost_function is None else cost_function
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    vmax = params.velocity_clamp_fraction * (hi - lo)
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(params.seed).spawn(params.n_particles)]

    positions = np.stack([rng.uniform(lo, hi) for rng in rngs])
    velocities = np.zeros_like(positions)

    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        evaluate_batch = lambda pts: np.array(list(pool.map(cost, [p.copy() for p in pts])))
    else:
        pool = None
        evaluate_batch = lambda pts: np.array([cost(p) for p in pts])

    evaluations = 0
    try:
        costs = evaluate_batch(positions)
        evaluations += positions.shape[0]
        bad = ~np.isfinite(costs)
        if bad.any():
            log.warning("%d initial particle(s) returned non-finite cost; penalized", int(bad.sum()))
            costs = np.where(bad, WORST_COST, costs)

        pbest_pos = positions.copy()
        pbest_cost = costs.copy()
        g = int(np.argmax(pbest_cost))
        gbest_pos, gbest_cost = pbest_pos[g].copy(), float(pbest_cost[g])
        trace = [gbest_cost]
        trace_vectors = [gbest_pos.copy()]

        for iteration in range(1, params.max_iterations + 1):
            for p, rng in enumerate(rngs):
                r1 = rng.uniform(size=problem.dimension)
                r2 = rng.uniform(size=problem.dimension)
                velocities[p] = (
                    params.inertia * velocities[p]
                    + params.cognitive * r1 * (pbest_pos[p] - positions[p])
                    + params.social * r2 * (gbest_pos - positions[p])
                )
                np.clip(velocities[p], -vmax, vmax, out=velocities[p])
                positions[p] += velocities[p]
                violated = (positions[p] < lo) | (positions[p] > hi)
                if violated.any():
                    np.clip(positions[p], lo, hi, out=positions[p])
                    velocities[p][violated] = 0.0

            costs = evaluate_batch(positions)
            evaluations += positions.shape[0]
            bad = ~np.isfinite(costs)
            if bad.any():
                log.warning("iteration %d: %d particle(s) returned non-finite cost; penalized", iteration, int(bad.sum()))
                costs = np.where(bad, WORST_COST, costs)

            improved = costs > pbest_cost
            pbest_pos[improved] = positions[improved]
            pbest_cost[improved] = costs[improved]
            g = int(np.argmax(pbest_cost))
            if pbest_cost[g] > gbest_cost:
                gbest_cost = float(pbest_cost[g])
                gbest_pos = pbest_pos[g].copy()
            trace.append(gbest_cost)
            trace_vectors.append(gbest_pos.copy())
    finally:
        if pool is not None:
            pool.shutdown()

    return OptimizationOutcome(
        best_vector=gbest_pos,
        best_cost=gbest_cost,
        trace=np.array(trace),
        trace_vectors=np.array(trace_vectors),
        evaluations=evaluations,
    )
