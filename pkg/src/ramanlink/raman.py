"""Coupled signal/pump/ASE power evolution over fibre spans.

One power-evolution equation per wave (channels and pumps) plus one ASE
equation per channel: pairwise Raman transfer with the configured
frequency-ratio convention on donor depletion, frequency-dependent
attenuation, and a thermal spontaneous source attached to every pairwise
gain/loss term.  Pump ASE carries no evolution equation and stays zero.

Backward pumps are a boundary condition at z = L, resolved by damped
forward-backward relaxation.  Spans are chained with ideal gain applied to
signal and ASE, plus the lumped-amplifier ASE contribution, between spans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import (
    BOLTZMANN,
    DEFAULT_TEMPERATURE,
    PLANCK,
    ChannelGrid,
    ConvergenceError,
    FibreSpec,
    NumericalError,
    PumpSpec,
    ScenarioConfig,
    SolverSettings,
    ValidationError,
    attenuation_at,
    raman_gain_at,
)

POWER_FLOOR = 1e-18  # W, absolute floor applied after every accepted step
NEGATIVE_EXCURSION_LIMIT = 1e-15  # W, beyond this a step is numerically broken
_RESIDUAL_POWER_FLOOR = 1e-15  # W, pump powers below this compare as equal in dB
_RTOL = 1e-11
_ATOL = 1e-21


def kappa(delta_f, temperature: float):
    """Phonon occupancy factor 1 + eta = 1/(1 - exp(-h*delta_f/(k_B*T))).

    Defined for delta_f > 0; singular at zero separation.  Accepts scalar or
    array delta_f.
    """
    df = np.asarray(delta_f, dtype=float)
    if np.any(df <= 0):
        raise ValidationError("kappa requires delta_f > 0; the spontaneous term is undefined at zero separation")
    if temperature <= 0:
        raise ValidationError("kappa requires temperature > 0")
    out = 1.0 / -np.expm1(-PLANCK * df / (BOLTZMANN * temperature))
    return float(out) if np.isscalar(delta_f) else out


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) with a positivity floor
#
# The classic embedded pair, stepped so that accepted steps land exactly on
# the requested output grid.  After each accepted step the state is projected
# onto [floor, inf) per component; components that started at exactly zero
# keep a zero floor so source-free waves stay identically zero.

_DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0)
_DP_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0)
# b5 - b4, with the seventh stage (FSAL) appended
_DP_E = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)


def _integrate_on_grid(rhs, y0: np.ndarray, x_grid: np.ndarray, max_step: float, guard: np.ndarray):
    """Integrate dy/dx = rhs(x, y) recording y at every x_grid node.

    guard marks source-free components: a raw excursion below
    -NEGATIVE_EXCURSION_LIMIT on those raises NumericalError.  All components
    are floored at min(POWER_FLOOR, y0) after each accepted step.
    """
    n = y0.size
    floor = np.minimum(POWER_FLOOR, y0)
    out = np.empty((n, x_grid.size))
    out[:, 0] = y0
    y = y0.astype(float).copy()
    x = float(x_grid[0])
    k = np.empty((7, n))
    k[0] = rhs(x, y)
    h = max_step
    h_min = max(1e-9, 1e-12 * (x_grid[-1] - x_grid[0]))
    for node in range(1, x_grid.size):
        x_target = float(x_grid[node])
        while x < x_target:
            h = min(h, max_step, x_target - x)
            if h < h_min:
                raise NumericalError("step size underflow; reduce max_step or check the configuration")
            # five internal stages, then the 5th-order proposal
            k[1] = rhs(x + _DP_C[0] * h, y + h * (_DP_A[0][0] * k[0]))
            k[2] = rhs(x + _DP_C[1] * h, y + h * (_DP_A[1][0] * k[0] + _DP_A[1][1] * k[1]))
            k[3] = rhs(x + _DP_C[2] * h, y + h * (k[0] * _DP_A[2][0] + k[1] * _DP_A[2][1] + k[2] * _DP_A[2][2]))
            k[4] = rhs(x + _DP_C[3] * h, y + h * (k[0] * _DP_A[3][0] + k[1] * _DP_A[3][1] + k[2] * _DP_A[3][2] + k[3] * _DP_A[3][3]))
            k[5] = rhs(x + h, y + h * (k[0] * _DP_A[4][0] + k[1] * _DP_A[4][1] + k[2] * _DP_A[4][2] + k[3] * _DP_A[4][3] + k[4] * _DP_A[4][4]))
            y_new = y + h * (k[0] * _DP_B5[0] + k[2] * _DP_B5[2] + k[3] * _DP_B5[3] + k[4] * _DP_B5[4] + k[5] * _DP_B5[5])
            k[6] = rhs(x + h, y_new)
            err_vec = h * (
                k[0] * _DP_E[0] + k[2] * _DP_E[2] + k[3] * _DP_E[3] + k[4] * _DP_E[4] + k[5] * _DP_E[5] + k[6] * _DP_E[6]
            )
            scale = _ATOL + _RTOL * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err):
                h *= 0.5
                continue
            if err <= 1.0:
                if np.any(y_new[guard] < -NEGATIVE_EXCURSION_LIMIT):
                    raise NumericalError(
                        "negative power excursion beyond -1e-15 W; reduce max_step or check the configuration"
                    )
                x = x_target if (x_target - x) - h <= 1e-9 * h else x + h
                clipped = np.maximum(y_new, floor)
                if clipped is not y_new and np.any(clipped != y_new):
                    y = clipped
                    k[0] = rhs(x, y)
                else:
                    y = y_new
                    k[0] = k[6].copy()
                h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
        out[:, node] = y
    return out


# ---------------------------------------------------------------------------
# coupled span system


@dataclass(frozen=True)
class SpanSystem:
    """Precomputed matrices and boundary data for one span solve."""

    z_grid: np.ndarray  # (n_z,) uniform, 0..L
    frequencies: np.ndarray  # (n_waves,) channels then pumps, Hz
    alpha: np.ndarray  # (n_waves,) 1/m
    transfer: np.ndarray  # (n_waves, n_waves) signed pairwise gain, 1/(W*m)
    transfer_spontaneous: np.ndarray  # (n_ch, n_waves) transfer * kappa, channel rows
    spontaneous_coeff: np.ndarray  # (n_ch,) 2*h*B_i*f_i, W per unit gain rate
    launch_powers: np.ndarray  # (n_ch,)
    ase_in: np.ndarray  # (n_ch,)
    forward_injected: np.ndarray  # (n_fwd,)
    backward_injected: np.ndarray  # (n_bwd,)
    forward_index: np.ndarray  # indices of forward pumps within the pump list
    backward_index: np.ndarray
    n_channels: int

    @property
    def n_forward(self) -> int:
        return self.forward_injected.size

    @property
    def n_backward(self) -> int:
        return self.backward_injected.size


def build_span_system(
    grid: ChannelGrid,
    fibre: FibreSpec,
    pumps,
    ase_in,
    settings: SolverSettings,
    temperature: float = DEFAULT_TEMPERATURE,
) -> SpanSystem:
    """Assemble the coupled-equation matrices for one span."""
    pumps = tuple(pumps)
    ase_in = np.asarray(ase_in, dtype=float)
    if ase_in.shape != (grid.n_channels,):
        raise ValidationError("ase_in must have one entry per channel")
    if np.any(ase_in < 0):
        raise ValidationError("ase_in entries must be non-negative")
    if temperature <= 0:
        raise ValidationError("temperature must be positive")

    n_ch = grid.n_channels
    freqs = np.concatenate([grid.center_frequencies, [p.frequency for p in pumps]])
    alpha = np.atleast_1d(attenuation_at(fibre, freqs)).astype(float)

    df = freqs[None, :] - freqs[:, None]  # df[i, j] = f_j - f_i
    abs_df = np.abs(df)
    g = raman_gain_at(fibre, abs_df)
    fi = freqs[:, None]
    fj = freqs[None, :]
    if settings.raman_convention == "as-printed":
        ratio = fj / fi  # f_acceptor / f_donor on the donor's loss term
    else:
        ratio = fi / fj  # photon-conserving: f_donor / f_acceptor
    transfer = np.where(df > 0, g, -ratio * g)
    np.fill_diagonal(transfer, 0.0)
    if settings.undepleted_pumps:
        transfer = transfer.copy()
        transfer[n_ch:, :n_ch] = 0.0  # test hook: pumps do not see channel powers

    with np.errstate(divide="ignore"):
        occupancy = 1.0 / -np.expm1(-PLANCK * abs_df / (BOLTZMANN * temperature))
    occupancy[abs_df == 0.0] = 0.0
    transfer_spontaneous = (transfer * occupancy)[:n_ch]
    spontaneous_coeff = 2.0 * PLANCK * grid.channel_bandwidth * grid.center_frequencies

    directions = np.array([p.direction == "forward" for p in pumps], dtype=bool)
    injected = np.array([p.injected_power for p in pumps], dtype=float)
    n_z = int(math.ceil(fibre.span_length / settings.max_step)) + 1
    return SpanSystem(
        z_grid=np.linspace(0.0, fibre.span_length, n_z),
        frequencies=freqs,
        alpha=alpha,
        transfer=transfer,
        transfer_spontaneous=transfer_spontaneous,
        spontaneous_coeff=spontaneous_coeff,
        launch_powers=grid.per_channel_launch_power.copy(),
        ase_in=ase_in.copy(),
        forward_injected=injected[directions],
        backward_injected=injected[~directions],
        forward_index=np.flatnonzero(directions),
        backward_index=np.flatnonzero(~directions),
        n_channels=n_ch,
    )


def _profile_sampler(profiles: np.ndarray, z_grid: np.ndarray):
    """Linear-in-z interpolator for frozen profiles sampled on the uniform grid."""
    dz = z_grid[1] - z_grid[0] if z_grid.size > 1 else 1.0
    n_seg = z_grid.size - 1

    def at(z: float) -> np.ndarray:
        t = z / dz
        i = min(max(int(t), 0), n_seg - 1)
        w = t - i
        return profiles[:, i] * (1.0 - w) + profiles[:, i + 1] * w

    return at


def _forward_sweep(system: SpanSystem, settings: SolverSettings, backward_profiles: np.ndarray) -> np.ndarray:
    """Integrate channels, channel ASE, and forward pumps from z = 0 to L.

    Returns the state trajectory (n_ch + n_ch + n_fwd, n_z).
    """
    n_ch, n_fwd = system.n_channels, system.n_forward
    n_waves = system.frequencies.size
    ch_slice = slice(0, n_ch)
    ase_slice = slice(n_ch, 2 * n_ch)
    fwd_cols = n_ch + system.forward_index
    bwd_cols = n_ch + system.backward_index
    stacked = np.vstack([system.transfer, system.transfer_spontaneous])
    alpha = system.alpha
    spont = system.spontaneous_coeff if settings.include_spontaneous_emission else None
    include_ase = settings.include_ase_coupling
    sample_bwd = _profile_sampler(backward_profiles, system.z_grid)

    def rhs(z, y):
        q = np.empty(n_waves)
        q[ch_slice] = y[ch_slice] + y[ase_slice] if include_ase else y[ch_slice]
        q[fwd_cols] = y[2 * n_ch :]
        q[bwd_cols] = sample_bwd(z)
        rates = stacked @ q
        gamma = rates[:n_waves] - alpha
        dy = np.empty_like(y)
        dy[ch_slice] = gamma[ch_slice] * y[ch_slice]
        dy[ase_slice] = gamma[ch_slice] * y[ase_slice]
        if spont is not None:
            dy[ase_slice] += spont * rates[n_waves:]
        dy[2 * n_ch :] = gamma[fwd_cols] * y[2 * n_ch :]
        return dy

    y0 = np.concatenate([system.launch_powers, system.ase_in, system.forward_injected])
    guard = np.zeros(y0.size, dtype=bool)
    guard[ch_slice] = True  # ASE components may dip below zero transiently by design
    guard[2 * n_ch :] = True
    return _integrate_on_grid(rhs, y0, system.z_grid, settings.max_step, guard)


def _backward_sweep(system: SpanSystem, settings: SolverSettings, forward_states: np.ndarray) -> np.ndarray:
    """Integrate backward pumps from their z = L boundary toward z = 0.

    Channels, ASE, and forward pumps are frozen at the given trajectory.
    Returns pump profiles (n_bwd, n_z) indexed along +z.
    """
    n_ch = system.n_channels
    n_waves = system.frequencies.size
    span_length = system.z_grid[-1]
    fwd_cols = n_ch + system.forward_index
    bwd_cols = n_ch + system.backward_index
    rows = system.transfer[bwd_cols]
    alpha = system.alpha[bwd_cols]
    include_ase = settings.include_ase_coupling
    if include_ase:
        frozen_q = forward_states[: n_ch] + forward_states[n_ch : 2 * n_ch]
    else:
        frozen_q = forward_states[:n_ch]
    frozen = np.vstack([frozen_q, forward_states[2 * n_ch :]])
    sample = _profile_sampler(frozen, system.z_grid)

    def rhs(s, y):
        # s runs from the injection end: z = L - s
        q = np.empty(n_waves)
        vals = sample(span_length - s)
        q[:n_ch] = vals[:n_ch]
        q[fwd_cols] = vals[n_ch:]
        q[bwd_cols] = y
        gamma = rows @ q - alpha
        return gamma * y

    states = _integrate_on_grid(
        rhs, system.backward_injected.astype(float), system.z_grid, settings.max_step, np.ones(system.n_backward, dtype=bool)
    )
    return states[:, ::-1]


def relax_backward_pumps(initial_guess, system: SpanSystem, settings: SolverSettings):
    """Damped forward-backward relaxation for the backward-pump boundary condition.

    Alternates a forward sweep (signals/ASE/forward pumps, frozen backward
    profiles) with a backward sweep (pumps from z = L, frozen signals), then
    applies a damped profile update until the largest per-sample change is at
    most bvp_tolerance in dB.

    Returns (pump_profiles, forward_states, iterations, residual_db).
    """
    if system.n_backward == 0:
        raise ValidationError("relax_backward_pumps requires at least one backward pump")
    profiles = np.asarray(initial_guess, dtype=float)
    if profiles.shape != (system.n_backward, system.z_grid.size):
        raise ValidationError("initial_guess must have shape (n_backward_pumps, n_z)")
    residual = math.inf
    growth_streak = 0
    for iteration in range(1, settings.bvp_max_iterations + 1):
        forward_states = _forward_sweep(system, settings, profiles)
        raw = _backward_sweep(system, settings, forward_states)
        updated = profiles + settings.bvp_damping * (raw - profiles)
        old_db = 10.0 * np.log10(np.maximum(profiles, _RESIDUAL_POWER_FLOOR))
        new_db = 10.0 * np.log10(np.maximum(updated, _RESIDUAL_POWER_FLOOR))
        new_residual = float(np.max(np.abs(new_db - old_db))) if profiles.size else 0.0
        profiles = updated
        if new_residual <= settings.bvp_tolerance:
            forward_states = _forward_sweep(system, settings, profiles)
            return profiles, forward_states, iteration, new_residual
        growth_streak = growth_streak + 1 if new_residual > residual else 0
        if growth_streak >= 5:
            raise ConvergenceError(
                f"pump relaxation diverging (residual {new_residual:.3g} dB grew 5 iterations in a row); "
                f"reduce bvp_damping"
            )
        residual = new_residual
    raise ConvergenceError(
        f"pump relaxation did not reach {settings.bvp_tolerance:g} dB after "
        f"{settings.bvp_max_iterations} iterations (last residual {residual:.3g} dB)"
    )


@dataclass(frozen=True)
class SpanSolution:
    """Sampled power evolution for one span.

    signal_powers, pump_powers, and ase_powers are (n, n_z) arrays on
    z_samples; rho is the per-channel normalized profile P_i(z)/P_i(0);
    ase_powers_out is the channel ASE at z = L.  Pump rows follow the order
    of the pump list passed to the solver.
    """

    z_samples: np.ndarray
    signal_powers: np.ndarray
    pump_powers: np.ndarray
    ase_powers: np.ndarray
    rho: np.ndarray
    ase_powers_out: np.ndarray
    bvp_iterations: int
    bvp_residual_db: float

    def __post_init__(self):
        for name in ("z_samples", "signal_powers", "pump_powers", "ase_powers", "rho", "ase_powers_out"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def solve_span(
    grid: ChannelGrid,
    fibre: FibreSpec,
    pumps,
    ase_in,
    settings: SolverSettings,
    *,
    temperature: float = DEFAULT_TEMPERATURE,
    initial_pump_guess=None,
) -> SpanSolution:
    """Solve the coupled power and ASE equations over one span.

    ase_in is the channel ASE entering the span (one entry per channel, zero
    for the first span).  Backward pumps satisfy their z = L boundary through
    relaxation; initial_pump_guess may carry (n_backward, n_z) warm-start
    profiles from a previous identical span.
    """
    system = build_span_system(grid, fibre, pumps, ase_in, settings, temperature)
    n_z = system.z_grid.size

    if system.n_backward:
        if initial_pump_guess is not None and np.shape(initial_pump_guess) == (system.n_backward, n_z):
            guess = np.asarray(initial_pump_guess, dtype=float)
        else:
            # undepleted decay from the injection end
            decay = np.exp(-np.outer(system.alpha[system.n_channels + system.backward_index], system.z_grid[-1] - system.z_grid))
            guess = system.backward_injected[:, None] * decay
        bwd_profiles, forward_states, iterations, residual = relax_backward_pumps(guess, system, settings)
    else:
        bwd_profiles = np.zeros((0, n_z))
        forward_states = _forward_sweep(system, settings, bwd_profiles)
        iterations, residual = 1, 0.0

    n_ch = system.n_channels
    signals = forward_states[:n_ch]
    ase = np.maximum(forward_states[n_ch : 2 * n_ch], 0.0)
    pump_rows = np.empty((len(pumps), n_z))
    if system.n_forward:
        pump_rows[system.forward_index] = forward_states[2 * n_ch :]
    if system.n_backward:
        pump_rows[system.backward_index] = bwd_profiles
    return SpanSolution(
        z_samples=system.z_grid,
        signal_powers=signals,
        pump_powers=pump_rows,
        ase_powers=ase,
        rho=signals / signals[:, :1],
        ase_powers_out=ase[:, -1],
        bvp_iterations=iterations,
        bvp_residual_db=residual,
    )


@dataclass(frozen=True)
class PropagationResult:
    """All span solutions plus the accumulated channel ASE after the last amplifier."""

    span_solutions: tuple
    accumulated_ase: np.ndarray
    n_spans: int
    mode: str

    def __post_init__(self):
        arr = np.asarray(self.accumulated_ase, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "accumulated_ase", arr)
        object.__setattr__(self, "span_solutions", tuple(self.span_solutions))


def propagate_link(scenario: ScenarioConfig, mode: str = "chained") -> PropagationResult:
    """Propagate the comb through all spans, accumulating ASE span by span.

    After each span the ideal per-channel amplifier gain G_i = P_i(0)/P_i(L)
    is applied to signal (restoring launch power exactly) and to the Raman
    ASE, and the lumped-amplifier ASE for that gain is added; the result
    seeds the next span.  mode 'single-span-reuse' solves one span and
    applies the identical-span recurrence ase_N = N * (G * ase_span + ase_edfa)
    instead of chaining explicitly.
    """
    from . import budget  # deferred: budget imports this module for types

    if mode not in ("chained", "single-span-reuse"):
        raise ValidationError("mode must be 'chained' or 'single-span-reuse'")
    grid, settings = scenario.grid, scenario.solver_settings
    temperature = scenario.amplifier.temperature
    nf_db = np.array([scenario.amplifier.noise_figure_at(float(f)) for f in grid.center_frequencies])

    def span_edfa_ase(solution: SpanSolution) -> tuple:
        gain = budget.edfa_gain(solution, grid)
        added = budget.edfa_ase(gain, nf_db, grid.center_frequencies, grid.channel_bandwidth)
        return gain, added

    if mode == "single-span-reuse":
        solution = solve_span(grid, scenario.fibre, scenario.pumps, np.zeros(grid.n_channels), settings, temperature=temperature)
        gain, edfa = span_edfa_ase(solution)
        accumulated = scenario.n_spans * (gain * solution.ase_powers_out + edfa)
        return PropagationResult((solution,), accumulated, scenario.n_spans, mode)

    ase = np.zeros(grid.n_channels)
    solutions = []
    guess = None
    for index in range(scenario.n_spans):
        try:
            solution = solve_span(
                grid, scenario.fibre, scenario.pumps, ase, settings, temperature=temperature, initial_pump_guess=guess
            )
        except (ConvergenceError, NumericalError) as exc:
            raise type(exc)(f"span {index + 1}: {exc}") from None
        guess = solution.pump_powers[np.asarray([p.direction == "backward" for p in scenario.pumps], dtype=bool)] if scenario.pumps else None
        try:
            gain, edfa = span_edfa_ase(solution)
        except ValidationError as exc:
            raise ValidationError(f"span {index + 1}: {exc}") from None
        ase = gain * solution.ase_powers_out + edfa
        solutions.append(solution)
    return PropagationResult(tuple(solutions), ase, scenario.n_spans, mode)
