"""Independent numerical references shared by the unit and acceptance tests.

Nothing in this module imports the package under test.  Each function
recomputes a physical quantity from scratch with a method unrelated to the
library's own (scalar fixed-step loops, closed forms, uniform Riemann sums,
split-step field simulation), so agreement is evidence rather than tautology.
"""

import numpy as np

C_VACUUM = 299792458.0


def dispersion_betas(d_coeff, slope, wavelength):
    """Textbook beta2/beta3 from D and S quoted at one wavelength (all SI)."""
    factor = wavelength**2 / (2.0 * np.pi * C_VACUUM)
    beta2 = -d_coeff * factor
    beta3 = factor**2 * (slope + 2.0 * d_coeff / wavelength)
    return beta2, beta3


def rk4_raman_longhand(freqs, launch, alpha_per_m, length, step, peak=1.9e-4, peak_shift=13.2e12, cutoff=25e12):
    """Fixed-step RK4 on the pairwise power-coupling ODE, scalar loops throughout.

    All waves co-propagate (forward problem only), the gain polyline is the
    triangle used by the test fibre, and the downshifted side carries the
    as-printed f_j/f_i weight.  Returns the power vector at z = length.
    """
    freqs = np.asarray(freqs, dtype=float)
    n = freqs.size

    def gain(df):
        if df <= peak_shift:
            return peak * df / peak_shift
        if df >= cutoff:
            return 0.0
        return peak * (cutoff - df) / (cutoff - peak_shift)

    def rhs(p):
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                df = freqs[j] - freqs[i]
                gij = gain(abs(df))
                acc += gij * p[j] if df > 0 else -(freqs[j] / freqs[i]) * gij * p[j]
            out[i] = (acc - alpha_per_m) * p[i]
        return out

    y = np.asarray(launch, dtype=float).copy()
    for _ in range(int(round(length / step))):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * step * k1)
        k3 = rhs(y + 0.5 * step * k2)
        k4 = rhs(y + step * k3)
        y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def gn_riemann_center_nli(
    n_channels=3,
    bandwidth=100e9,
    p_ch=2e-3,
    length=57e3,
    alpha_db_km=0.2,
    gamma=5.5e-4,
    d_coeff=21e-6,
    wavelength=1550e-9,
    mesh=50e6,
):
    """Center-channel NLI power of a contiguous comb over one lumped span.

    Uniform midpoint Riemann sum of the GN integrand with the closed-form
    link function |(e^{(j phi - alpha) L} - 1) / (j phi - alpha)|^2 that
    holds when the power profile is a pure exponential decay.  Deliberately
    naive: no ridge refinement, cost quadratic in the mesh density.
    Frequencies are relative to the comb center, which is also the COI.
    """
    alpha = alpha_db_km / 1e3 * np.log(10) / 10.0
    beta2, beta3 = dispersion_betas(d_coeff, 0.0, wavelength)
    g0 = p_ch / bandwidth
    half_width = 0.5 * n_channels * bandwidth
    axis = np.arange(-half_width + mesh / 2.0, half_width, mesh)

    total = 0.0
    for block in np.array_split(axis, 200):
        f1 = block[:, None]
        f2 = axis[None, :]
        phi = 4.0 * np.pi**2 * f1 * f2 * (beta2 + np.pi * beta3 * (f1 + f2))
        lk_sq = np.abs(np.expm1((1j * phi - alpha) * length)) ** 2 / (alpha**2 + phi**2)
        psd3 = np.where(np.abs(f1 + f2) <= half_width, g0, 0.0)
        total += (psd3 * lk_sq).sum()
    g_nli = (16.0 / 27.0) * gamma**2 * total * g0 * g0 * mesh * mesh
    return g_nli * bandwidth


def ssfm_center_channel_nli(
    seeds,
    n_bins=8192,
    window=400e9,
    bandwidth=100e9,
    p_ch=2e-3,
    length=57e3,
    alpha_db_km=0.2,
    gamma=5.5e-4,
    d_coeff=21e-6,
    wavelength=1550e-9,
    step=50.0,
    sub_half_width=10e9,
):
    """Monte-Carlo split-step estimate of the center channel's NLI power.

    Three contiguous channels are synthesized as iid circular-Gaussian
    spectral lines per polarization (Gaussian modulation, the regime the GN
    reference describes), propagated with symmetric Manakov split steps,
    dispersion-compensated back to the launch reference, and projected per
    polarization onto the sent COI field so the deterministic phase rotation
    common to the whole channel does not count as noise.  The residual PSD
    within +-sub_half_width of the channel center, times the channel
    bandwidth, is the launch-referred NLI power.

    The frame (n_bins / window) must comfortably exceed the walk-off
    correlation time: the projection removes one complex degree of freedom
    per polarization, and on a short frame that degree of freedom soaks up
    genuine slowly-varying phase noise and biases the estimate low.

    Returns (mean over seeds, per-seed array), both in watts.
    """
    alpha = alpha_db_km / 1e3 * np.log(10) / 10.0
    beta2, beta3 = dispersion_betas(d_coeff, 0.0, wavelength)
    df = window / n_bins
    fr = np.fft.fftfreq(n_bins, d=1.0 / window)
    om = 2.0 * np.pi * fr
    lin = 1j * (beta2 / 2.0) * om**2 + 1j * (beta3 / 6.0) * om**3 - alpha / 2.0
    half_step = np.exp(lin * step / 2.0)
    full_span = np.exp(lin * length)
    # half-open bin masks keep the three slots disjoint and equally sized
    centers = (-bandwidth, 0.0, bandwidth)
    masks = [(fr >= fc - bandwidth / 2 - df / 4) & (fr < fc + bandwidth / 2 - df / 4) for fc in centers]
    coi = masks[1]
    sub = np.abs(fr) <= sub_half_width
    n_steps = int(round(length / step))

    per_seed = []
    for seed in seeds:
        rng = np.random.Generator(np.random.PCG64(seed))
        u_hat = np.zeros((2, n_bins), dtype=complex)
        for mask in masks:
            n_lines = int(mask.sum())
            for pol in range(2):
                u_hat[pol, mask] = (rng.normal(size=n_lines) + 1j * rng.normal(size=n_lines)) * np.sqrt(
                    p_ch / (4.0 * n_lines)
                )
        sent = u_hat.copy()
        field = np.fft.ifft(u_hat, axis=1) * n_bins
        for _ in range(n_steps):
            field = np.fft.ifft(np.fft.fft(field, axis=1) * half_step, axis=1)
            field *= np.exp(1j * (8.0 / 9.0) * gamma * (np.abs(field[0]) ** 2 + np.abs(field[1]) ** 2) * step)
            field = np.fft.ifft(np.fft.fft(field, axis=1) * half_step, axis=1)
        received = np.fft.fft(field, axis=1) / n_bins / full_span
        residual_power = 0.0
        for pol in range(2):
            scale = (received[pol, coi] * sent[pol, coi].conj()).sum() / (np.abs(sent[pol, coi]) ** 2).sum()
            residual_power += (np.abs(received[pol, sub] - scale * sent[pol, sub]) ** 2).sum()
        per_seed.append(residual_power / sub.sum() / df * bandwidth)

    per_seed = np.array(per_seed)
    return float(per_seed.mean()), per_seed
