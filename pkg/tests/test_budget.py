"""Amplifier/ASE arithmetic, SNR combination, throughput, and link results.

The EDFA ASE oracle below was frozen from the closed form
2 (G-1) n_sp h f B with n_sp = 10^(NF/10)/2, evaluated independently.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanlink.budget import (
    LinkResult,
    edfa_ase,
    edfa_gain,
    evaluate_link,
    hybrid_ase,
    read_csv_columns,
    snr_total,
    summary_record,
    throughput,
    write_channel_csv,
)
from ramanlink.config import ValidationError, db_per_km_to_per_m, db_to_linear, linear_to_db
from ramanlink.raman import propagate_link, solve_span

from conftest import make_grid, make_scenario

# 2 (G-1) n_sp h f B at G = 11.4 dB, NF = 5 dB, f = 190.83 THz, B = 100 GHz
EDFA_ASE_ORACLE = 5.11968225408227e-07

snr_values = st.floats(min_value=1e-6, max_value=1e12, allow_nan=False)


class TestEdfaAse:
    def test_frozen_oracle(self):
        got = edfa_ase(db_to_linear(11.4), 5.0, 190.83e12, 100e9)
        assert got == pytest.approx(EDFA_ASE_ORACLE, rel=1e-12)

    def test_three_db_noise_figure_doubles_ase(self):
        base = edfa_ase(12.0, 5.0, 190e12, 100e9)
        assert edfa_ase(12.0, 5.0 + 10 * np.log10(2.0), 190e12, 100e9) == pytest.approx(2 * base, rel=1e-12)

    def test_unity_gain_is_noiseless(self):
        assert edfa_ase(1.0, 5.0, 190e12, 100e9) == 0.0

    def test_attenuation_rejected(self):
        with pytest.raises(ValidationError, match="gain < 1"):
            edfa_ase(0.9, 5.0, 190e12, 100e9)

    def test_vectorized_over_channels(self):
        gains = np.array([10.0, 20.0])
        out = edfa_ase(gains, 5.0, np.array([185e12, 195e12]), 100e9)
        assert out.shape == (2,)
        assert np.all(np.diff(out) > 0)


class TestHybridAse:
    def test_combination(self):
        assert hybrid_ase(2.0, 1e-6, 5e-7) == pytest.approx(2.5e-6)

    def test_no_raman_contribution(self):
        assert hybrid_ase(13.8, 0.0, 5e-7) == pytest.approx(5e-7)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValidationError):
            hybrid_ase(2.0, -1e-9, 5e-7)


class TestSnrTotal:
    def test_equal_contributions_halve(self):
        assert snr_total(100.0, 100.0) == pytest.approx(50.0)
        assert linear_to_db(snr_total(100.0, 100.0)) == pytest.approx(16.9897, abs=1e-4)

    def test_mixed_example(self):
        got = snr_total(db_to_linear(14.0), db_to_linear(20.0))
        assert linear_to_db(got) == pytest.approx(13.026772062913043, abs=1e-9)

    def test_infinite_contribution_drops_out(self):
        assert snr_total(np.inf, 50.0) == pytest.approx(50.0)
        assert snr_total(50.0, np.inf) == pytest.approx(50.0)

    @given(a=snr_values, b=snr_values)
    @settings(max_examples=200, deadline=None)
    def test_commutative_and_bounded(self, a, b):
        x = snr_total(a, b)
        assert x == snr_total(b, a)
        assert x <= min(a, b) * (1 + 1e-12)
        assert x >= 0.5 * min(a, b) * (1 - 1e-12)

    @given(a=snr_values, b=snr_values, c=snr_values)
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_each_argument(self, a, b, c):
        lo, hi = sorted((a, c))
        assert snr_total(lo, b) <= snr_total(hi, b) * (1 + 1e-12)


class TestThroughput:
    def test_paper_scale_example(self):
        total, se = throughput(np.full(105, db_to_linear(17.0)), 100e9)
        assert se == pytest.approx(np.full(105, 11.351559803609767))
        assert total / 1e12 == pytest.approx(119.19137793790254, rel=1e-12)

    def test_zero_snr_carries_no_traffic(self):
        total, se = throughput(np.zeros(4), 100e9)
        assert total == 0.0
        assert np.all(se == 0.0)

    def test_consistency_between_outputs(self):
        snrs = np.array([1.0, 10.0, 100.0])
        total, se = throughput(snrs, 64e9)
        assert total == pytest.approx(64e9 * se.sum(), rel=1e-12)

    def test_monotone_in_snr(self):
        lo, _ = throughput(np.array([5.0, 5.0]), 100e9)
        hi, _ = throughput(np.array([5.0, 6.0]), 100e9)
        assert hi > lo

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            throughput(np.array([-1.0]), 100e9)
        with pytest.raises(ValidationError):
            throughput(np.array([1.0]), 0.0)


class TestLinkResult:
    @staticmethod
    def _result(snr_total_values):
        n = len(snr_total_values)
        freqs = np.linspace(190e12, 191e12, n)
        snr = np.asarray(snr_total_values, dtype=float)
        total, se = throughput(snr, 100e9)
        return LinkResult(
            frequencies=freqs,
            snr_nli=np.full(n, 200.0),
            snr_ase=np.full(n, 120.0),
            snr_total=snr,
            spectral_efficiency=se,
            total_throughput=total,
            total_launch_power=5e-3,
        )

    def test_records_and_readonly(self):
        res = self._result([75.0, 74.0, 73.0])
        rec = res.per_channel[1]
        assert rec.snr_total == 74.0
        assert rec.snr_ase == 120.0
        with pytest.raises(ValueError):
            res.snr_total[0] = 1.0

    def test_total_cannot_exceed_contributions(self):
        with pytest.raises(ValidationError, match="exceed"):
            self._result([130.0])

    def test_csv_round_trip(self, tmp_path):
        res = self._result([75.0, 74.0, 73.0])
        path = tmp_path / "channels.csv"
        write_channel_csv(res, path)
        cols = read_csv_columns(path)
        assert set(cols) == {"wavelength_nm", "snr_nli_db", "snr_ase_db", "snr_total_db", "se_bit_per_symbol"}
        assert cols["snr_total_db"] == pytest.approx(linear_to_db(res.snr_total))
        assert cols["se_bit_per_symbol"] == pytest.approx(res.spectral_efficiency)

    def test_summary_record_fields(self):
        scenario = make_scenario()
        res = self._result([75.0] * scenario.grid.n_channels)
        rec = summary_record(res, scenario)
        assert rec["n_channels"] == scenario.grid.n_channels
        assert rec["throughput_tbps"] == pytest.approx(res.total_throughput / 1e12)
        assert rec["pumps"] == []


class TestEdfaGain:
    def test_restores_launch(self, default_settings):
        scenario = make_scenario()
        span = solve_span(scenario.grid, scenario.fibre, scenario.pumps, np.zeros(scenario.grid.n_channels), default_settings)
        gain = edfa_gain(span, scenario.grid)
        assert np.all(gain > 1.0)
        assert gain * span.signal_powers[:, -1] == pytest.approx(span.signal_powers[:, 0], rel=1e-12)

    def test_grid_mismatch_rejected(self, default_settings):
        scenario = make_scenario()
        span = solve_span(scenario.grid, scenario.fibre, scenario.pumps, np.zeros(scenario.grid.n_channels), default_settings)
        other = make_grid(n_channels=7)
        with pytest.raises(ValidationError):
            edfa_gain(span, other)


class TestAseChain:
    """With zero Raman gain and flat attenuation the chain has a closed form.

    Each span attenuates by exp(-aL), the amplifier restores launch with
    G = exp(aL), and the accumulated ASE after N spans is exactly N times
    the single-amplifier contribution.
    """

    @pytest.mark.parametrize("n_spans", [1, 10, 117])
    def test_matches_closed_form(self, n_spans):
        scenario = make_scenario(raman_zero=True, n_spans=n_spans)
        prop = propagate_link(scenario, mode="chained")
        alpha = db_per_km_to_per_m(0.2)
        g_analytic = np.exp(alpha * scenario.fibre.span_length)
        expected = n_spans * edfa_ase(
            g_analytic, 5.0, scenario.grid.center_frequencies, scenario.grid.channel_bandwidth
        )
        assert prop.accumulated_ase == pytest.approx(expected, rel=1e-9)

    def test_single_span_reuse_agrees_with_chaining(self):
        scenario = make_scenario(raman_zero=True, n_spans=10)
        chained = propagate_link(scenario, mode="chained")
        reused = propagate_link(scenario, mode="single-span-reuse")
        assert reused.accumulated_ase == pytest.approx(chained.accumulated_ase, rel=1e-9)
        assert reused.n_spans == chained.n_spans == 10

    def test_snr_ase_through_pipeline(self):
        scenario = make_scenario(raman_zero=True, n_spans=3, nli_points=16, nli_subsampling=1)
        evaluation = evaluate_link(scenario, fidelity="reference")
        alpha = db_per_km_to_per_m(0.2)
        g_analytic = np.exp(alpha * scenario.fibre.span_length)
        per_amp = edfa_ase(g_analytic, 5.0, scenario.grid.center_frequencies, scenario.grid.channel_bandwidth)
        expected = scenario.grid.per_channel_launch_power / (3 * per_amp)
        assert evaluation.result.snr_ase == pytest.approx(expected, rel=1e-9)
