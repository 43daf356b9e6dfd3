"""Nonlinear interference via direct 2D quadrature of the GN integrand.

Per channel of interest the integrand G(f1) G(f2) G(f1+f2-f) |LK|^2 is
integrated over (f1, f2), where G is the staircase launch PSD over the comb
and LK is the link function

    LK = int_0^L sqrt(rho(z,f1) rho(z,f2) rho(z,f3) / rho(z,f)) e^{j phi z} dz

built from the span's numerical normalized profiles and the dispersion
phase mismatch phi = 4 pi^2 (f1-f)(f2-f) [beta2 + pi beta3 ((f1-fc)+(f2-fc))]
expanded around the grid center frequency fc.  The quadrature grid is
log-spaced in the offset from the channel of interest on each side, which
resolves the narrow phase-matched ridge near f1 = f or f2 = f; the z
integral is evaluated exactly on piecewise-exponential profile segments so
arbitrarily fast phase rotation costs nothing in accuracy.

Pump waves contribute only through their imprint on rho; they carry no PSD.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import (
    SPEED_OF_LIGHT,
    ChannelGrid,
    FibreSpec,
    NliSettings,
    NumericalError,
    ValidationError,
)

_MIN_OFFSET = 1e6  # Hz, inner edge of the log grid on each side of the COI
_Z_KNOTS = 65  # piecewise-exponential resolution of rho along the span
_ROW_CHUNK = 48  # f1 rows per vectorized block, bounds peak memory


@dataclass(frozen=True)
class NliResult:
    """Accumulated per-channel NLI power and the SNR it implies."""

    per_channel_nli_power: np.ndarray
    per_channel_snr_nli: np.ndarray

    def __post_init__(self):
        for name in ("per_channel_nli_power", "per_channel_snr_nli"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.per_channel_nli_power < 0) or not np.all(np.isfinite(self.per_channel_nli_power)):
            raise ValidationError("NLI powers must be finite and non-negative")
        if np.any(self.per_channel_snr_nli <= 0):
            raise ValidationError("SNR_NLI entries must be positive (inf marks the no-NLI case)")


def normalized_profile(span, channel: int) -> np.ndarray:
    """Row of span.rho for one channel: rho(z, f_i) with rho(0) = 1."""
    n = span.rho.shape[0]
    if not 0 <= channel < n:
        raise ValidationError(f"channel index {channel} out of range 0..{n - 1}")
    return span.rho[channel]


def _dispersion_coefficients(grid: ChannelGrid, fibre: FibreSpec):
    """beta2/beta3 at the grid center, from D and S given at the fibre reference."""
    fc = float(np.mean([grid.center_frequencies[0], grid.center_frequencies[-1]]))
    lam_c = SPEED_OF_LIGHT / fc
    d_c = fibre.dispersion_D + fibre.dispersion_slope_S * (lam_c - fibre.reference_wavelength)
    beta2 = -d_c * lam_c**2 / (2.0 * math.pi * SPEED_OF_LIGHT)
    beta3 = (lam_c**2 / (2.0 * math.pi * SPEED_OF_LIGHT)) ** 2 * (
        fibre.dispersion_slope_S + 2.0 * d_c / lam_c
    )
    return fc, beta2, beta3


class _QuadratureEngine:
    """Precomputed state shared by all channels of one (grid, fibre, span) triple."""

    def __init__(self, grid: ChannelGrid, fibre: FibreSpec, span, settings: NliSettings):
        if settings.quadrature_points_per_axis < 16:
            raise ValidationError("quadrature_points_per_axis below the minimum resolution of 16")
        if span.rho.shape[0] != grid.n_channels:
            raise ValidationError("span was solved on a different channel grid")
        self.grid = grid
        self.settings = settings
        self.centers = grid.center_frequencies
        self.bandwidth = grid.channel_bandwidth
        self.psd = grid.per_channel_launch_power / grid.channel_bandwidth
        self.f_low = self.centers[0] - 0.5 * self.bandwidth
        self.f_high = self.centers[-1] + 0.5 * self.bandwidth
        self.gamma = fibre.gamma
        self.fc, self.beta2, self.beta3 = _dispersion_coefficients(grid, fibre)

        z = span.z_samples
        knots = np.linspace(z[0], z[-1], _Z_KNOTS)
        with np.errstate(divide="ignore"):
            ln_rho = np.log(np.maximum(span.rho, 1e-300))
        self.ln_rho_knots = np.vstack([np.interp(knots, z, row) for row in ln_rho])
        self.z_knots = knots
        self.dz = knots[1] - knots[0]

    def _psd_at(self, f: np.ndarray) -> np.ndarray:
        """Staircase launch PSD: P_k/B inside channel k's slot, zero outside."""
        idx = np.clip(np.searchsorted(self.centers, f), 1, self.centers.size - 1)
        idx = idx - (f - self.centers[idx - 1] < self.centers[idx] - f)
        inside = np.abs(f - self.centers[idx]) <= 0.5 * self.bandwidth * (1.0 + 1e-12)
        return np.where(inside, self.psd[idx], 0.0)

    def _ln_rho_at(self, f: np.ndarray) -> np.ndarray:
        """ln rho(z_knots, f) interpolated across channel centers, clamped at band edges."""
        pos = np.interp(f, self.centers, np.arange(self.centers.size, dtype=float))
        i0 = np.clip(pos.astype(int), 0, max(self.centers.size - 2, 0))
        t = (pos - i0)[:, None]
        if self.centers.size == 1:
            return np.broadcast_to(self.ln_rho_knots[0], (f.size, _Z_KNOTS)).copy()
        return self.ln_rho_knots[i0] * (1.0 - t) + self.ln_rho_knots[i0 + 1] * t

    def _offset_grid(self, f_coi: float):
        """Log-spaced offsets nu = f - f_coi on both sides, with trapezoid weights."""
        half = max(self.settings.quadrature_points_per_axis // 2, 8)
        span_pos = self.f_high - f_coi
        span_neg = f_coi - self.f_low
        pos = np.logspace(math.log10(_MIN_OFFSET), math.log10(span_pos), half)
        neg = -np.logspace(math.log10(_MIN_OFFSET), math.log10(span_neg), half)[::-1]
        nu = np.concatenate([neg, pos])
        weights = np.empty_like(nu)
        weights[1:-1] = 0.5 * (nu[2:] - nu[:-2])
        weights[0] = 0.5 * (nu[1] - nu[0])
        weights[-1] = 0.5 * (nu[-1] - nu[-2])
        return nu, weights

    def _link_function_sq(self, half_ln_s: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """|LK|^2 for a batch of (f1, f2) pairs.

        half_ln_s holds 0.5 ln(rho1 rho2 rho3 / rho_coi) on the z knots; each
        segment is integrated as s_k e^{j phi z} with exponential s between
        knots, exact in phi.
        """
        s = np.exp(half_ln_s)
        w = (half_ln_s[:, 1:] - half_ln_s[:, :-1]) + 1j * (phi[:, None] * self.dz)
        small = np.abs(w) < 1e-4
        w_safe = np.where(small, 1.0, w)
        psi = np.where(small, 1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0, (np.exp(w_safe) - 1.0) / w_safe)
        rot = np.exp(1j * np.outer(phi, self.z_knots[:-1]))
        lk = (s[:, :-1] * rot * psi).sum(axis=1) * self.dz
        return np.abs(lk) ** 2

    def channel_nli(self, channel: int) -> float:
        """Per-span NLI power over the channel bandwidth for one COI."""
        f_coi = self.centers[channel]
        nu, wts = self._offset_grid(f_coi)
        f_axis = f_coi + nu
        psd_axis = self._psd_at(f_axis)
        ln_axis = self._ln_rho_at(f_axis)
        ln_coi = self.ln_rho_knots[channel]
        slope = self.beta2 + math.pi * self.beta3 * ((f_axis - self.fc)[:, None] + (f_axis - self.fc)[None, :])

        total = 0.0
        n = nu.size
        for start in range(0, n, _ROW_CHUNK):
            rows = slice(start, min(start + _ROW_CHUNK, n))
            f3 = f_axis[rows, None] + f_axis[None, :] - f_coi
            psd3 = self._psd_at(f3.ravel()).reshape(f3.shape)
            ii, jj = np.nonzero(psd3 > 0)
            if ii.size == 0:
                continue
            half_ln_s = 0.5 * (
                ln_axis[rows][ii] + ln_axis[jj] + self._ln_rho_at(f3[ii, jj]) - ln_coi[None, :]
            )
            phi = 4.0 * math.pi**2 * nu[rows][ii] * nu[jj] * slope[rows][ii, jj]
            lk_sq = self._link_function_sq(half_ln_s, phi)
            weight = wts[rows][ii] * wts[jj] * psd_axis[rows][ii] * psd_axis[jj] * psd3[ii, jj]
            total += float(np.sum(weight * lk_sq))

        g_nli = (16.0 / 27.0) * self.gamma**2 * total
        if not math.isfinite(g_nli) or g_nli < 0:
            raise NumericalError(f"NLI quadrature produced a non-finite value for channel {channel}")
        return g_nli * self.bandwidth


def nli_power(grid: ChannelGrid, fibre: FibreSpec, span, channel: int, settings: NliSettings) -> float:
    """Single-span NLI power (W over the channel bandwidth) for one channel."""
    if not 0 <= channel < grid.n_channels:
        raise ValidationError(f"channel index {channel} out of range 0..{grid.n_channels - 1}")
    return _QuadratureEngine(grid, fibre, span, settings).channel_nli(channel)


def nli_spectrum(grid: ChannelGrid, fibre: FibreSpec, span, settings: NliSettings, *, threads: int = 1) -> np.ndarray:
    """Per-span NLI power for every channel.

    channel_subsampling > 1 evaluates every k-th channel (always including
    the last) and fills the rest by linear interpolation of ln(NLI) against
    channel index.  Results are identical for any thread count.
    """
    engine = _QuadratureEngine(grid, fibre, span, settings)
    n = grid.n_channels
    evaluated = sorted(set(range(0, n, settings.channel_subsampling)) | {n - 1})
    if threads > 1 and len(evaluated) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(engine.channel_nli, evaluated))
    else:
        values = [engine.channel_nli(idx) for idx in evaluated]
    if len(evaluated) == n:
        return np.array(values)
    return np.exp(np.interp(np.arange(n), evaluated, np.log(np.maximum(values, 1e-300))))


def accumulate_nli(per_span_nli, n_spans: int, settings: NliSettings):
    """Combine identical-span NLI: n x incoherently, or n^(1+epsilon) x."""
    if n_spans < 1:
        raise ValidationError("n_spans must be at least 1")
    per_span = np.asarray(per_span_nli, dtype=float)
    if settings.accumulation_mode == "incoherent":
        out = per_span * n_spans
    else:
        out = per_span * n_spans ** (1.0 + settings.coherence_epsilon)
    return float(out) if out.ndim == 0 else out


def snr_nli(grid: ChannelGrid, total_nli_per_channel):
    """P_i(0)/NLI_i per channel; zero NLI maps to the explicit no-NLI marker inf."""
    nli = np.asarray(total_nli_per_channel, dtype=float)
    if np.any(nli < 0):
        raise ValidationError("NLI powers must be non-negative")
    with np.errstate(divide="ignore"):
        out = np.where(nli > 0, grid.per_channel_launch_power / np.where(nli > 0, nli, 1.0), np.inf)
    return out
