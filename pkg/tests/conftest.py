"""Shared builders: tiny flat-fibre scenarios keep the unit tests fast."""

import numpy as np
import pytest

from ramanlink.config import (
    AmplifierSpec,
    FibreSpec,
    NliSettings,
    ScenarioConfig,
    SolverSettings,
    build_channel_grid,
    db_per_km_to_per_m,
)


def flat_attenuation_table(alpha_db_km, f_low=170e12, f_high=230e12):
    a = db_per_km_to_per_m(alpha_db_km)
    return np.array([[f_low, a], [f_high, a]])


def zero_raman_table():
    return np.array([[0.0, 0.0], [50e12, 0.0]])


def triangle_raman_table(peak_per_w_m=1.9e-4, peak_thz=13.2, cutoff_thz=25.0):
    return np.array([[0.0, 0.0], [peak_thz * 1e12, peak_per_w_m], [cutoff_thz * 1e12, 0.0]])


def make_fibre(
    span_km=20.0,
    alpha_db_km=0.2,
    raman_table=None,
    attenuation_table=None,
    dispersion=21e-6,
    slope=67.0,
    gamma=5.5e-4,
):
    return FibreSpec(
        span_length=span_km * 1e3,
        attenuation_table=flat_attenuation_table(alpha_db_km) if attenuation_table is None else attenuation_table,
        raman_gain_table=triangle_raman_table() if raman_table is None else raman_table,
        dispersion_D=dispersion,
        dispersion_slope_S=slope,
        gamma=gamma,
        a_eff=150e-12,
    )


def make_grid(n_channels=5, center_nm=1550.0, symbol_rate=100e9, total_dbm=0.0):
    return build_channel_grid(
        center_wavelength=center_nm * 1e-9,
        n_channels=n_channels,
        symbol_rate=symbol_rate,
        total_power=1e-3 * 10 ** (total_dbm / 10.0),
    )


def make_amplifier(nf_db=5.0):
    return AmplifierSpec(band_edges=((150e12, 250e12),), per_band_noise_figure=(nf_db,))


def make_scenario(grid=None, fibre=None, pumps=(), n_spans=1, raman_zero=False, **kwargs):
    if fibre is None:
        fibre = make_fibre(raman_table=zero_raman_table() if raman_zero else None)
    nli_overrides = {
        field: kwargs.pop(key)
        for key, field in (("nli_points", "quadrature_points_per_axis"), ("nli_subsampling", "channel_subsampling"))
        if key in kwargs
    }
    if nli_overrides:
        kwargs["nli_settings"] = NliSettings(**nli_overrides)
    return ScenarioConfig(
        grid=make_grid() if grid is None else grid,
        fibre=fibre,
        pumps=tuple(pumps),
        amplifier=kwargs.pop("amplifier", make_amplifier()),
        n_spans=n_spans,
        **kwargs,
    )


@pytest.fixture(scope="session")
def default_settings():
    return SolverSettings()
