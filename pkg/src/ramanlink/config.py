"""Physical and scenario data types, unit conversions, validation, scenario ingestion.

Internal units are strictly SI: W, Hz, m, 1/m, 1/(W*m), s/m^2, s/m^3, K.
dB, dBm, nm, km and THz exist only at the ingestion and reporting boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s
PLANCK = 6.62607015e-34  # J*s
BOLTZMANN = 1.380649e-23  # J/K

DEFAULT_PUMP_POWER_CAP = 0.5  # W
DEFAULT_PUMP_BAND = (1470e-9, 1520e-9)  # m
DEFAULT_TEMPERATURE = 300.0  # K


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class RangeError(ValidationError):
    """A query falls outside the coverage of a sampled table."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance."""


class NumericalError(RuntimeError):
    """Integration or quadrature produced an unusable result."""


# ---------------------------------------------------------------------------
# unit conversions


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def dbm_to_watt(power_dbm):
    return 1e-3 * 10.0 ** (np.asarray(power_dbm, dtype=float) / 10.0)


def watt_to_dbm(power_w):
    return 10.0 * np.log10(np.asarray(power_w, dtype=float) / 1e-3)


def db_per_km_to_per_m(alpha_db_km):
    # dB/km -> 1/m (power attenuation coefficient)
    return np.asarray(alpha_db_km, dtype=float) * math.log(10.0) / 10.0 / 1e3


def per_m_to_db_per_km(alpha_per_m):
    return np.asarray(alpha_per_m, dtype=float) * 10.0 / math.log(10.0) * 1e3


def wavelength_to_frequency(wavelength_m):
    return SPEED_OF_LIGHT / np.asarray(wavelength_m, dtype=float)


def frequency_to_wavelength(frequency_hz):
    return SPEED_OF_LIGHT / np.asarray(frequency_hz, dtype=float)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _readonly(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ChannelGrid:
    """WDM comb: Nyquist-spaced channel center frequencies, bandwidths, launch powers.

    Attributes
    ----------
    center_frequencies : ndarray
        Channel center frequencies in Hz, strictly ascending.
    channel_bandwidth : float
        Per-channel bandwidth in Hz; equals the symbol rate (Nyquist spacing).
    per_channel_launch_power : ndarray
        Launch power per channel in W, all positive.
    n_channels : int
    """

    center_frequencies: np.ndarray
    channel_bandwidth: float
    per_channel_launch_power: np.ndarray
    n_channels: int

    def __post_init__(self):
        object.__setattr__(self, "center_frequencies", _readonly(self.center_frequencies))
        object.__setattr__(self, "per_channel_launch_power", _readonly(self.per_channel_launch_power))
        f = self.center_frequencies
        p = self.per_channel_launch_power
        _require(self.n_channels >= 1, "n_channels must be >= 1")
        _require(f.ndim == 1 and f.size == self.n_channels, "center_frequencies length must equal n_channels")
        _require(p.ndim == 1 and p.size == self.n_channels, "per_channel_launch_power length must equal n_channels")
        _require(self.channel_bandwidth > 0, "channel_bandwidth must be positive")
        _require(bool(np.all(p > 0)), "per_channel_launch_power entries must be positive")
        if self.n_channels > 1:
            spacing = np.diff(f)
            _require(bool(np.all(spacing > 0)), "center_frequencies must be strictly ascending")
            # Nyquist spacing: adjacent separation equals the bandwidth to 1 part in 1e9.
            _require(
                bool(np.all(np.abs(spacing - self.channel_bandwidth) <= 1e-9 * self.channel_bandwidth)),
                "channel spacing must equal channel_bandwidth within 1e-9 relative",
            )

    @property
    def total_launch_power(self) -> float:
        return float(np.sum(self.per_channel_launch_power))


@dataclass(frozen=True)
class FibreSpec:
    """Fibre physical description for one span.

    Tables are (n, 2) float arrays: attenuation rows are (frequency_hz,
    alpha_per_m) ascending in frequency; Raman gain rows are (delta_f_hz,
    gain_per_w_per_m) ascending in frequency separation, pre-normalized by the
    effective core area and polarization-averaged.
    """

    span_length: float  # m
    attenuation_table: np.ndarray
    raman_gain_table: np.ndarray
    dispersion_D: float  # s/m^2
    dispersion_slope_S: float  # s/m^3
    gamma: float  # 1/(W*m)
    a_eff: float  # m^2
    reference_wavelength: float = 1550e-9  # m, expansion point for D and S

    def __post_init__(self):
        object.__setattr__(self, "attenuation_table", _readonly(self.attenuation_table))
        object.__setattr__(self, "raman_gain_table", _readonly(self.raman_gain_table))
        att, ram = self.attenuation_table, self.raman_gain_table
        _require(self.span_length > 0, "span_length must be positive")
        _require(self.gamma >= 0, "gamma must be non-negative")
        _require(self.a_eff > 0, "a_eff must be positive")
        _require(self.reference_wavelength > 0, "reference_wavelength must be positive")
        _require(att.ndim == 2 and att.shape[1] == 2 and att.shape[0] >= 2, "attenuation_table must be (n, 2) with n >= 2")
        _require(ram.ndim == 2 and ram.shape[1] == 2 and ram.shape[0] >= 2, "raman_gain_table must be (n, 2) with n >= 2")
        _require(bool(np.all(np.diff(att[:, 0]) > 0)), "attenuation_table frequencies must be ascending")
        _require(bool(np.all(att[:, 1] > 0)), "attenuation must be positive at every sample")
        _require(bool(np.all(np.diff(ram[:, 0]) > 0)), "raman_gain_table separations must be ascending")
        _require(bool(np.all(ram[:, 1] >= 0)), "raman gain must be non-negative everywhere")
        _require(ram[0, 0] == 0.0 and ram[0, 1] == 0.0, "raman gain table must start at g(0) = 0")


@dataclass(frozen=True)
class PumpSpec:
    """One Raman pump: wavelength (m), power injected at its boundary (W), direction."""

    wavelength: float
    injected_power: float
    direction: str = "backward"

    def __post_init__(self):
        _require(self.wavelength > 0, "pump wavelength must be positive")
        _require(self.injected_power >= 0, "pump injected_power must be non-negative")
        _require(self.direction in ("forward", "backward"), "pump direction must be 'forward' or 'backward'")

    @property
    def frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength


@dataclass(frozen=True)
class AmplifierSpec:
    """Per-band EDFA noise figures and the system temperature.

    band_edges are (f_low_hz, f_high_hz) tuples ascending in frequency,
    non-overlapping, jointly covering the signal band.
    """

    band_edges: tuple
    per_band_noise_figure: tuple  # dB, one entry per band
    temperature: float = DEFAULT_TEMPERATURE  # K

    def __post_init__(self):
        edges = tuple((float(lo), float(hi)) for lo, hi in self.band_edges)
        nfs = tuple(float(v) for v in self.per_band_noise_figure)
        object.__setattr__(self, "band_edges", edges)
        object.__setattr__(self, "per_band_noise_figure", nfs)
        _require(len(edges) >= 1, "at least one amplifier band is required")
        _require(len(nfs) == len(edges), "one noise figure per band is required")
        _require(all(lo < hi for lo, hi in edges), "band edges must satisfy f_low < f_high")
        _require(all(nf > 0 for nf in nfs), "noise figures must be positive")
        _require(self.temperature > 0, "temperature must be positive")
        for (_, hi), (lo, _) in zip(edges, edges[1:]):
            _require(hi <= lo, "amplifier bands must not overlap")

    def noise_figure_at(self, frequency_hz: float) -> float:
        """Noise figure in dB for the band containing ``frequency_hz``.

        A frequency exactly on a shared edge belongs to the lower band.
        """
        for i, (lo, hi) in enumerate(self.band_edges):
            if (lo <= frequency_hz if i == 0 else lo < frequency_hz) and frequency_hz <= hi:
                return self.per_band_noise_figure[i]
        wl_nm = SPEED_OF_LIGHT / frequency_hz * 1e9
        raise ValidationError(f"no amplifier band covers {wl_nm:.2f} nm ({frequency_hz / 1e12:.3f} THz)")


@dataclass(frozen=True)
class SolverSettings:
    """Numerical controls for the span solver.

    bvp_tolerance is the maximum allowed change of any backward-pump profile
    sample, in dB, between relaxation sweeps.  raman_convention selects the
    frequency-ratio factor on donor depletion terms: 'as-printed' uses
    f_acceptor/f_donor, 'photon-conserving' uses f_donor/f_acceptor.  The
    remaining switches exist for speed (include_ase_coupling) and for tests
    (include_spontaneous_emission, undepleted_pumps).
    """

    max_step: float = 100.0  # m
    bvp_tolerance: float = 1e-4  # dB
    bvp_max_iterations: int = 50
    bvp_damping: float = 0.7
    raman_convention: str = "as-printed"
    include_ase_coupling: bool = True  # keep P_ASE terms in the signal/pump equations
    include_spontaneous_emission: bool = True
    undepleted_pumps: bool = False  # test hook: pumps ignore signal and ASE powers

    def __post_init__(self):
        _require(self.max_step > 0, "max_step must be positive")
        _require(self.bvp_tolerance > 0, "bvp_tolerance must be positive")
        _require(self.bvp_max_iterations >= 1, "bvp_max_iterations must be >= 1")
        _require(0 < self.bvp_damping <= 1, "bvp_damping must be in (0, 1]")
        _require(
            self.raman_convention in ("as-printed", "photon-conserving"),
            "raman_convention must be 'as-printed' or 'photon-conserving'",
        )


@dataclass(frozen=True)
class NliSettings:
    """Fidelity controls for the nonlinear-interference quadrature."""

    quadrature_points_per_axis: int = 400
    accumulation_mode: str = "incoherent"
    coherence_epsilon: float = 0.0
    channel_subsampling: int = 1  # evaluate every k-th channel, interpolate the rest

    def __post_init__(self):
        _require(self.quadrature_points_per_axis >= 16, "quadrature_points_per_axis must be >= 16")
        _require(
            self.accumulation_mode in ("incoherent", "coherent-epsilon"),
            "accumulation_mode must be 'incoherent' or 'coherent-epsilon'",
        )
        _require(self.coherence_epsilon >= 0, "coherence_epsilon must be non-negative")
        _require(self.channel_subsampling >= 1, "channel_subsampling must be >= 1")


FAST_NLI_SETTINGS = NliSettings(quadrature_points_per_axis=96, channel_subsampling=5)


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete link scenario: comb, fibre, pumps, amplifier, span plan, numerics."""

    grid: ChannelGrid
    fibre: FibreSpec
    pumps: tuple
    amplifier: AmplifierSpec
    n_spans: int
    nli_settings: NliSettings = field(default_factory=NliSettings)
    solver_settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "pumps", tuple(self.pumps))
        _require(self.n_spans >= 1, "n_spans must be >= 1")
        _require(all(isinstance(p, PumpSpec) for p in self.pumps), "pumps must be PumpSpec instances")
        # Every channel must belong to an amplifier band, and the attenuation
        # table must cover all waves; both raise with the offending value.
        for f in self.grid.center_frequencies:
            self.amplifier.noise_figure_at(float(f))
        attenuation_at(self.fibre, self.grid.center_frequencies)
        for p in self.pumps:
            attenuation_at(self.fibre, p.frequency)


# ---------------------------------------------------------------------------
# operations


def build_channel_grid(center_wavelength: float, n_channels: int, symbol_rate: float, total_power: float) -> ChannelGrid:
    """Build a Nyquist-spaced comb around a center wavelength with uniform launch power.

    Parameters
    ----------
    center_wavelength : float
        Comb center in m.
    n_channels : int
    symbol_rate : float
        Symbol rate in Hz; also the channel bandwidth and spacing.
    total_power : float
        Total launch power in W, split uniformly across channels.
    """
    _require(n_channels >= 1, "n_channels must be >= 1")
    _require(center_wavelength > 0, "center_wavelength must be positive")
    _require(symbol_rate > 0, "symbol_rate must be positive")
    _require(total_power > 0, "total_power must be positive")
    f_center = SPEED_OF_LIGHT / center_wavelength
    offsets = (np.arange(1, n_channels + 1) - (n_channels + 1) / 2.0) * symbol_rate
    return ChannelGrid(
        center_frequencies=f_center + offsets,
        channel_bandwidth=float(symbol_rate),
        per_channel_launch_power=np.full(n_channels, total_power / n_channels),
        n_channels=int(n_channels),
    )


def attenuation_at(fibre: FibreSpec, frequency_hz):
    """Attenuation in 1/m at the given frequency (scalar or array), linearly interpolated.

    Raises RangeError, naming the offending wavelength, outside table coverage.
    """
    f = np.asarray(frequency_hz, dtype=float)
    table = fibre.attenuation_table
    lo, hi = table[0, 0], table[-1, 0]
    if np.any(f < lo) or np.any(f > hi):
        bad = float(np.atleast_1d(f)[(np.atleast_1d(f) < lo) | (np.atleast_1d(f) > hi)][0])
        raise RangeError(
            f"frequency {bad / 1e12:.3f} THz (wavelength {SPEED_OF_LIGHT / bad * 1e9:.1f} nm) "
            f"is outside the attenuation table coverage "
            f"({SPEED_OF_LIGHT / hi * 1e9:.0f}-{SPEED_OF_LIGHT / lo * 1e9:.0f} nm)"
        )
    out = np.interp(f, table[:, 0], table[:, 1])
    return float(out) if np.isscalar(frequency_hz) else out


def raman_gain_at(fibre: FibreSpec, delta_f):
    """Raman gain in 1/(W*m) at a frequency separation >= 0 (scalar or array).

    Zero at zero separation and beyond the table support.
    """
    df = np.asarray(delta_f, dtype=float)
    if np.any(df < 0):
        raise ValidationError("raman_gain_at requires delta_f >= 0")
    table = fibre.raman_gain_table
    out = np.interp(df, table[:, 0], table[:, 1], left=0.0, right=0.0)
    return float(out) if np.isscalar(delta_f) else out


# ---------------------------------------------------------------------------
# scenario files
#
# Scenario files are JSON with explicit unit suffixes on every physical field:
#
# {
#   "grid": {"center_wavelength_nm", "n_channels", "symbol_rate_ghz", "total_power_dbm"},
#   "fibre": {"span_length_km", "dispersion_ps_nm_km", "dispersion_slope_ps_nm2_km",
#             "gamma_per_w_km", "effective_area_um2", "reference_wavelength_nm",
#             optional "attenuation_file", "raman_gain_file" (CSV, resolved
#             relative to the scenario file; shipped defaults otherwise)},
#   "pumps": [{"wavelength_nm", "power_mw", "direction"}, ...],
#   "pump_power_cap_mw": 500.0 (optional), "pump_band_nm": [1470, 1520] (optional),
#   "amplifier": {"temperature_k", "bands": [{"name" (optional),
#                 "min_wavelength_nm", "max_wavelength_nm", "noise_figure_db"}]},
#   "n_spans": int,
#   "solver": {"max_step_m", "bvp_tolerance_db", "bvp_max_iterations",
#              "bvp_damping", "raman_convention"} (optional),
#   "nli": {"quadrature_points_per_axis", "accumulation_mode",
#           "coherence_epsilon", "channel_subsampling"} (optional),
#   "optimizer": {...} (optional, read by the optimize command, ignored here)
# }


_TOP_LEVEL_KEYS = {"grid", "fibre", "pumps", "pump_power_cap_mw", "pump_band_nm", "amplifier", "n_spans", "solver", "nli", "optimizer"}


def _get(section: dict, key: str, context: str, default=None):
    if key in section:
        return section[key]
    if default is not None:
        return default
    raise ValidationError(f"missing field '{key}' in '{context}'")


def _load_two_column_csv(path: Path, context: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read {context} table '{path}': {exc}") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValidationError(f"{context} table '{path}' must have exactly two columns")
    return data


def shipped_data_path(name: str) -> Path:
    """Path of a data file shipped with the package (tables and example scenarios)."""
    return Path(str(resources.files("ramanlink.data").joinpath(name)))


def load_attenuation_csv(path) -> np.ndarray:
    """Read a (wavelength_nm, attenuation_db_per_km) CSV into an SI attenuation table."""
    raw = _load_two_column_csv(Path(path), "attenuation")
    freqs = wavelength_to_frequency(raw[:, 0] * 1e-9)
    alphas = db_per_km_to_per_m(raw[:, 1])
    order = np.argsort(freqs)
    return np.column_stack([freqs[order], alphas[order]])


def load_raman_gain_csv(path) -> np.ndarray:
    """Read a (delta_f_thz, gain_per_w_per_km) CSV into an SI Raman gain table."""
    raw = _load_two_column_csv(Path(path), "raman gain")
    order = np.argsort(raw[:, 0])
    return np.column_stack([raw[order, 0] * 1e12, raw[order, 1] * 1e-3])


def default_attenuation_table() -> np.ndarray:
    return load_attenuation_csv(shipped_data_path("attenuation.csv"))


def default_raman_gain_table() -> np.ndarray:
    return load_raman_gain_csv(shipped_data_path("raman_gain.csv"))


def load_config_dict(path) -> dict:
    """Read and syntax-check a scenario file, returning the raw dictionary."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file '{path}': {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"parse error in '{path}' at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"scenario file '{path}' must contain a JSON object")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level field(s) in '{path}': {', '.join(sorted(unknown))}")
    return data


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario file into a ScenarioConfig in SI units.

    Raises ValidationError with field context on schema violations and with
    line/column context on JSON syntax errors.
    """
    path = Path(path)
    return scenario_from_dict(load_config_dict(path), base_dir=path.parent)


def scenario_from_dict(data: dict, base_dir=None) -> ScenarioConfig:
    """Build a ScenarioConfig from an already-parsed scenario dictionary."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    g = _get(data, "grid", "scenario")
    grid = build_channel_grid(
        center_wavelength=float(_get(g, "center_wavelength_nm", "grid")) * 1e-9,
        n_channels=int(_get(g, "n_channels", "grid")),
        symbol_rate=float(_get(g, "symbol_rate_ghz", "grid")) * 1e9,
        total_power=float(dbm_to_watt(_get(g, "total_power_dbm", "grid"))),
    )

    fb = _get(data, "fibre", "scenario")
    if "attenuation_file" in fb:
        attenuation = load_attenuation_csv(base_dir / fb["attenuation_file"])
    else:
        attenuation = default_attenuation_table()
    if "raman_gain_file" in fb:
        raman_gain = load_raman_gain_csv(base_dir / fb["raman_gain_file"])
    else:
        raman_gain = default_raman_gain_table()
    fibre = FibreSpec(
        span_length=float(_get(fb, "span_length_km", "fibre")) * 1e3,
        attenuation_table=attenuation,
        raman_gain_table=raman_gain,
        dispersion_D=float(_get(fb, "dispersion_ps_nm_km", "fibre")) * 1e-6,
        dispersion_slope_S=float(_get(fb, "dispersion_slope_ps_nm2_km", "fibre")) * 1e3,
        gamma=float(_get(fb, "gamma_per_w_km", "fibre")) * 1e-3,
        a_eff=float(_get(fb, "effective_area_um2", "fibre")) * 1e-12,
        reference_wavelength=float(fb.get("reference_wavelength_nm", 1550.0)) * 1e-9,
    )

    cap = float(data.get("pump_power_cap_mw", DEFAULT_PUMP_POWER_CAP * 1e3)) * 1e-3
    band_nm = data.get("pump_band_nm", [DEFAULT_PUMP_BAND[0] * 1e9, DEFAULT_PUMP_BAND[1] * 1e9])
    pumps = []
    for i, p in enumerate(data.get("pumps", [])):
        pump = PumpSpec(
            wavelength=float(_get(p, "wavelength_nm", f"pumps[{i}]")) * 1e-9,
            injected_power=float(_get(p, "power_mw", f"pumps[{i}]")) * 1e-3,
            direction=str(p.get("direction", "backward")),
        )
        if pump.injected_power > cap:
            raise ValidationError(
                f"pumps[{i}] power {pump.injected_power * 1e3:.1f} mW exceeds the {cap * 1e3:.0f} mW cap"
            )
        wl_nm = pump.wavelength * 1e9
        if not (band_nm[0] <= wl_nm <= band_nm[1]):
            raise ValidationError(
                f"pumps[{i}] wavelength {wl_nm:.1f} nm is outside the pump band {band_nm[0]:.0f}-{band_nm[1]:.0f} nm"
            )
        pumps.append(pump)

    amp = _get(data, "amplifier", "scenario")
    bands = _get(amp, "bands", "amplifier")
    _require(isinstance(bands, list) and bands, "amplifier.bands must be a non-empty list")
    edges, nfs = [], []
    for i, b in enumerate(bands):
        lo_nm = float(_get(b, "min_wavelength_nm", f"amplifier.bands[{i}]"))
        hi_nm = float(_get(b, "max_wavelength_nm", f"amplifier.bands[{i}]"))
        _require(lo_nm < hi_nm, f"amplifier.bands[{i}] wavelength bounds must be ordered")
        edges.append((SPEED_OF_LIGHT / (hi_nm * 1e-9), SPEED_OF_LIGHT / (lo_nm * 1e-9)))
        nfs.append(float(_get(b, "noise_figure_db", f"amplifier.bands[{i}]")))
    order = np.argsort([e[0] for e in edges])
    amplifier = AmplifierSpec(
        band_edges=tuple(edges[int(i)] for i in order),
        per_band_noise_figure=tuple(nfs[int(i)] for i in order),
        temperature=float(amp.get("temperature_k", DEFAULT_TEMPERATURE)),
    )

    solver_settings = SolverSettings(
        max_step=float(data.get("solver", {}).get("max_step_m", 100.0)),
        bvp_tolerance=float(data.get("solver", {}).get("bvp_tolerance_db", 1e-4)),
        bvp_max_iterations=int(data.get("solver", {}).get("bvp_max_iterations", 50)),
        bvp_damping=float(data.get("solver", {}).get("bvp_damping", 0.7)),
        raman_convention=str(data.get("solver", {}).get("raman_convention", "as-printed")),
    )
    nli_settings = NliSettings(
        quadrature_points_per_axis=int(data.get("nli", {}).get("quadrature_points_per_axis", 400)),
        accumulation_mode=str(data.get("nli", {}).get("accumulation_mode", "incoherent")),
        coherence_epsilon=float(data.get("nli", {}).get("coherence_epsilon", 0.0)),
        channel_subsampling=int(data.get("nli", {}).get("channel_subsampling", 1)),
    )

    return ScenarioConfig(
        grid=grid,
        fibre=fibre,
        pumps=tuple(pumps),
        amplifier=amplifier,
        n_spans=int(_get(data, "n_spans", "scenario")),
        nli_settings=nli_settings,
        solver_settings=solver_settings,
    )
