import math

import numpy as np
import pytest

from fso_pam.analytics import pam_bep
from fso_pam.channel import ChannelModel, GammaGammaParams
from fso_pam.simcore import (
    BerEstimate,
    DfbSpec,
    MlsdSpec,
    N0_DEFAULT,
    PcsiSpec,
    SimConfig,
    dbm_to_watt,
    run_ber_point,
    run_estimator_trace,
    run_sweep,
    watt_to_dbm,
)

WEAK = ChannelModel(gg=GammaGammaParams(17.13, 16.04), Lc=1000)
NO_FADING = ChannelModel(Lc=1000)


def base_config(**kw):
    defaults = dict(
        M=2,
        data_rate_bps=1e10,
        channel=NO_FADING,
        receiver=PcsiSpec(),
        powers_dbm=(-30.0,),
        min_errors=100,
        max_bits=2_000_000,
        seed=0,
    )
    defaults.update(kw)
    return SimConfig(**defaults)


def power_for_target_bep(target: float, M: int, rate: float, N0: float = N0_DEFAULT) -> float:
    """Receive power (dBm) at which the fixed-gain analytic BEP hits target."""
    from scipy.optimize import brentq

    Ts = math.log2(M) / rate

    def f(p_dbm):
        two_d = 2 * math.sqrt(Ts) * dbm_to_watt(p_dbm) / (M - 1)
        return math.log10(pam_bep(two_d**2 / N0, M)) - math.log10(target)

    # upper edge kept where pam_bep is still > 0 in float64
    return brentq(f, -60.0, -20.0)


class TestUnits:
    def test_dbm_roundtrip(self):
        assert watt_to_dbm(dbm_to_watt(-27.3)) == pytest.approx(-27.3, abs=1e-12)
        assert dbm_to_watt(0.0) == pytest.approx(1e-3)
        with pytest.raises(ValueError):
            watt_to_dbm(0.0)


class TestConfigValidation:
    def test_powers_must_increase(self):
        with pytest.raises(ValueError):
            base_config(powers_dbm=(-30.0, -30.0))

    def test_bad_order(self):
        with pytest.raises(ValueError):
            base_config(M=6)

    def test_mlsd_budget(self):
        with pytest.raises(ValueError):
            base_config(M=4, receiver=MlsdSpec(L=11))

    def test_window_guard_warns(self):
        with pytest.warns(UserWarning):
            base_config(
                channel=ChannelModel(gg=GammaGammaParams(2.23, 1.54), Lc=100),
                receiver=DfbSpec(L_m=12),
            )

    def test_symbol_period(self):
        cfg = base_config(M=4, data_rate_bps=2e10)
        assert cfg.Ts == pytest.approx(1e-10)


class TestWilson:
    def test_zero_bits(self):
        est = BerEstimate.from_counts(0, 0)
        assert est.ber == 0.0 and est.ci95 == 0.0

    def test_halfwidth_shrinks_with_n(self):
        a = BerEstimate.from_counts(100, 10**5).ci95
        b = BerEstimate.from_counts(1000, 10**6).ci95
        assert b < a

    def test_interval_contains_point_estimate_sanely(self):
        est = BerEstimate.from_counts(100, 10**5)
        assert est.ber == pytest.approx(1e-3)
        assert 0 < est.ci95 < 1e-3


class TestRunBerPoint:
    def test_pcsi_matches_analytic_oracle(self):
        # fixed gain h=1, binary: measured BER within 3 binomial sigma of 1e-3
        p = power_for_target_bep(1e-3, 2, 1e10)
        cfg = base_config(powers_dbm=(p,), min_errors=400, max_bits=4_000_000)
        est = run_ber_point(cfg, p)
        sigma = math.sqrt(1e-3 * (1 - 1e-3) / est.bits)
        assert abs(est.ber - 1e-3) < 3 * sigma

    def test_zero_noise_pcsi(self):
        cfg = base_config(N0=0.0, max_bits=50_000, min_errors=1)
        est = run_ber_point(cfg, -30.0)
        assert est.errors == 0

    def test_zero_noise_dfb(self):
        cfg = base_config(
            N0=0.0, receiver=DfbSpec(L_m=4), max_bits=50_000, min_errors=1, M=4
        )
        est = run_ber_point(cfg, -30.0)
        assert est.errors == 0
        assert est.pilot_symbols == 4 * cfg.n_streams

    def test_same_seed_bit_identical(self):
        p = power_for_target_bep(1e-2, 2, 1e10)
        cfg = base_config(powers_dbm=(p,), channel=WEAK, receiver=DfbSpec(L_m=8))
        assert run_ber_point(cfg, p) == run_ber_point(cfg, p)

    def test_pilot_accounting(self):
        p = power_for_target_bep(1e-2, 2, 1e10)
        cfg = base_config(powers_dbm=(p,), receiver=DfbSpec(L_m=12), min_errors=50)
        est = run_ber_point(cfg, p)
        # one bootstrap of exactly L_m pilots per stream
        assert est.pilot_symbols == 12 * cfg.n_streams
        assert est.pilot_symbols / est.data_symbols < 0.01

    def test_periodic_rebootstrap_pilot_count(self):
        p = power_for_target_bep(1e-2, 2, 1e10)
        n_blocks = 4 * 8  # one wave: 4 streams x 8 blocks of Lc=1000
        cfg = base_config(
            powers_dbm=(p,),
            receiver=DfbSpec(L_m=4),
            stream_blocks=1,
            min_errors=10**9,
            max_bits=n_blocks * 1000,
        )
        est = run_ber_point(cfg, p)
        # exactly L_m pilots at the head of every coherence block
        blocks_run = (est.data_symbols + est.pilot_symbols) // 1000
        assert blocks_run >= n_blocks
        assert est.pilot_symbols == 4 * blocks_run

    def test_dfb_genie_feedback_approaches_pcsi(self):
        p = power_for_target_bep(1e-2, 4, 1e10)
        kw = dict(M=4, powers_dbm=(p,), min_errors=2000, max_bits=10**7)
        pcsi = run_ber_point(base_config(**kw), p)
        with pytest.warns(UserWarning):  # L_m=64 trips the window guard on purpose
            cfg = base_config(receiver=DfbSpec(L_m=64, genie_feedback=True), **kw)
        dfb = run_ber_point(cfg, p)
        assert dfb.ber == pytest.approx(pcsi.ber, rel=0.15)

    def test_dfb_improves_with_memory_length(self):
        p = power_for_target_bep(1e-2, 4, 1e10)
        bers = []
        for L_m in (1, 4, 16):
            cfg = base_config(
                M=4, powers_dbm=(p,), receiver=DfbSpec(L_m=L_m), min_errors=2000
            )
            bers.append(run_ber_point(cfg, p).ber)
        assert bers[0] > bers[1] > bers[2]

    def test_mlsd_binary_short_window(self):
        # OOK MLSD needs no amplitude knowledge; it should be close to PCSI
        p = power_for_target_bep(1e-2, 2, 1e10)
        cfg = base_config(powers_dbm=(p,), receiver=MlsdSpec(L=10), min_errors=1000)
        est = run_ber_point(cfg, p)
        # blind amplitude estimation over a 10-symbol window costs a little
        # relative to PCSI, but the error rate stays in the same regime
        assert 0.5e-2 < est.ber < 2e-2


class TestRunSweep:
    def test_two_rows_monotone(self):
        p1 = power_for_target_bep(3e-2, 2, 1e10)
        p2 = power_for_target_bep(3e-3, 2, 1e10)
        cfg = base_config(powers_dbm=(p1, p2), min_errors=300)
        rows = run_sweep(cfg)
        assert len(rows) == 2
        assert rows[0][1].ber > rows[1][1].ber

    def test_thread_count_invariance(self):
        p1 = power_for_target_bep(3e-2, 2, 1e10)
        p2 = power_for_target_bep(3e-3, 2, 1e10)
        cfg = base_config(powers_dbm=(p1, p2), channel=WEAK, receiver=DfbSpec(L_m=8))
        assert run_sweep(cfg, threads=1) == run_sweep(cfg, threads=4)


class TestEstimatorTrace:
    def trace_config(self, L_m, a2_over_n0_db=20.0, N0=1e-20):
        # choose power so that A^2/N0 hits the requested operating point
        A = math.sqrt(N0 * 10 ** (a2_over_n0_db / 10))
        Ts = 1.0 / 1e10
        p_w = A * (2 - 1) / (2 * math.sqrt(Ts))
        return base_config(
            receiver=DfbSpec(L_m=L_m),
            powers_dbm=(watt_to_dbm(p_w),),
            N0=N0,
            channel=ChannelModel(Lc=10**9),
        )

    def test_zero_noise_estimate_is_exact(self):
        cfg = base_config(N0=0.0, receiver=DfbSpec(L_m=4), channel=ChannelModel(Lc=10**9))
        tr = run_estimator_trace(cfg, 200)
        assert np.allclose(tr["a_hat"][4:], tr["a_true"][4:], rtol=1e-12)
        assert not tr["fed_back_error_flag"].any()

    def test_trace_shapes_and_pilot_prefix(self):
        tr = run_estimator_trace(self.trace_config(8), 500)
        assert all(tr[k].shape == (500,) for k in tr)
        assert np.all(tr["detected_level"][:8] == 1)

    def test_unbiased_time_mean(self):
        cfg = self.trace_config(8)
        tr = run_estimator_trace(cfg, 20_000)
        A = tr["a_true"][0]
        assert tr["a_hat"][8:].mean() == pytest.approx(A, rel=0.01)

    def test_std_ratio_follows_memory_law(self):
        # trace std scales as 1/sqrt(L_m) at fixed SNR
        stds = []
        for L_m in (1, 8):
            tr = run_estimator_trace(self.trace_config(L_m), 40_000)
            stds.append(tr["a_hat"][L_m:].std())
        assert stds[0] / stds[1] == pytest.approx(math.sqrt(8), rel=0.2)

    def test_variance_matches_analytic_law(self):
        L_m, N0 = 8, 1e-20
        cfg = self.trace_config(L_m, N0=N0)
        tr = run_estimator_trace(cfg, 60_000)
        want = N0 / (2 * L_m * (2 - 1) ** 2)
        assert tr["a_hat"][L_m:].var() == pytest.approx(want, rel=0.1)

    def test_requires_dfb(self):
        with pytest.raises(ValueError):
            run_estimator_trace(base_config(), 100)
        with pytest.raises(ValueError):
            run_estimator_trace(base_config(receiver=DfbSpec(L_m=8)), 8)

    def test_deterministic(self):
        cfg = self.trace_config(4)
        a = run_estimator_trace(cfg, 1000)
        b = run_estimator_trace(cfg, 1000)
        assert all(np.array_equal(a[k], b[k]) for k in a)
