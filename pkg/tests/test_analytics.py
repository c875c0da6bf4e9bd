import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fso_pam.analytics import (
    SnrPoint,
    electrical_distance_from_Eb,
    genie_bound,
    genie_bound_mc,
    pam_bep,
    pam_bep_terms,
    q_function,
)
from fso_pam.channel import (
    ChannelModel,
    GammaGammaParams,
    PointingParams,
)

WEAK = ChannelModel(gg=GammaGammaParams(17.13, 16.04))
STRONG = ChannelModel(gg=GammaGammaParams(2.23, 1.54))


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    def test_decile(self):
        assert q_function(1.2816) == pytest.approx(0.10000, abs=1e-4)

    @given(st.floats(-8, 8))
    def test_symmetry(self, x):
        assert q_function(-x) == pytest.approx(1.0 - q_function(x), abs=1e-12)

    def test_vectorized(self):
        out = q_function(np.array([0.0, 1.2816]))
        assert out.shape == (2,)
        assert out[0] == 0.5


class TestPamBep:
    def test_binary_reduces_to_single_q(self):
        for d2 in [0.0, 1.0, 4.0, 25.0]:
            assert pam_bep(d2, 2) == pytest.approx(q_function(math.sqrt(d2 / 2)), rel=1e-12)

    def test_quaternary_closed_form(self):
        # 3/4 Q(g) + 1/2 Q(3g) - 1/4 Q(5g)
        for d2 in [0.5, 2.0, 10.0]:
            g = math.sqrt(d2 / 2)
            want = 0.75 * q_function(g) + 0.5 * q_function(3 * g) - 0.25 * q_function(5 * g)
            assert pam_bep(d2, 4) == pytest.approx(want, rel=1e-12)

    def test_quaternary_coefficients_exact(self):
        coeffs = {}
        for c, i in pam_bep_terms(4):
            coeffs[i] = coeffs.get(i, 0.0) + c
        assert coeffs == {0: pytest.approx(0.75), 1: pytest.approx(0.5), 2: pytest.approx(-0.25)}

    def test_binary_coefficients_exact(self):
        assert pam_bep_terms(2) == [(1.0, 0)]

    @pytest.mark.parametrize("M", [2, 4, 8, 16, 32])
    def test_zero_snr_gives_half(self, M):
        # coefficients sum to 1, every Q term is 1/2
        assert pam_bep(0.0, M) == pytest.approx(0.5, rel=1e-12)
        assert sum(c for c, _ in pam_bep_terms(M)) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("M", [2, 4, 8, 16, 32])
    def test_monotone_non_increasing_in_snr(self, M):
        grid = np.linspace(0, 60, 121)
        vals = pam_bep(grid, M)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_increasing_with_order_at_fixed_energy_per_bit(self):
        # at fixed Eb/N0 the minimum distance shrinks with M, so BEP grows
        for ebn0 in [2.0, 8.0, 30.0]:
            vals = [
                pam_bep(electrical_distance_from_Eb(ebn0, M) ** 2, M)
                for M in (2, 4, 8, 16, 32)
            ]
            assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_vectorized(self):
        out = pam_bep(np.array([0.0, 4.0]), 4)
        assert out.shape == (2,)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            pam_bep(1.0, 3)
        with pytest.raises(ValueError):
            pam_bep(-1.0, 2)

    def test_snr_point(self):
        p = SnrPoint(4.0, 2)
        assert p.bep() == pytest.approx(pam_bep(4.0, 2))
        with pytest.raises(ValueError):
            SnrPoint(-1.0, 2)


class TestGenieBound:
    def test_degenerate_channel_equals_pam_bep(self):
        assert genie_bound(9.0, 4, ChannelModel()) == pytest.approx(pam_bep(9.0, 4), rel=1e-12)

    @pytest.mark.parametrize("d2", [0.1, 10.0, 1000.0])
    def test_range(self, d2):
        v = genie_bound(d2, 2, STRONG)
        assert 0 < v <= 0.5

    @pytest.mark.parametrize(
        "model,d2",
        [(WEAK, 1.0), (WEAK, 10.0), (WEAK, 50.0), (STRONG, 1.0), (STRONG, 30.0), (STRONG, 300.0)],
    )
    def test_quadrature_matches_monte_carlo(self, model, d2):
        quad = genie_bound(d2, 4, model)
        mc = genie_bound_mc(d2, 4, model, 10**6, rng(1))
        assert mc == pytest.approx(quad, rel=0.02)

    def test_pointing_only_channel(self):
        model = ChannelModel(pe=PointingParams(0.0198, 2.8071), normalize_mean=True)
        quad = genie_bound(8.0, 2, model)
        mc = genie_bound_mc(8.0, 2, model, 10**6, rng(2))
        assert mc == pytest.approx(quad, rel=0.02)

    def test_monotone_in_snr(self):
        vals = [genie_bound(d2, 2, STRONG) for d2 in (1.0, 10.0, 100.0, 1000.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_deep_tail_still_converges(self):
        # the waterfall region is far from the bulk of the pdf here
        v = genie_bound(1e6, 2, WEAK)
        assert 0 < v < 1e-8


class TestElectricalDistance:
    def test_binary_example(self):
        assert electrical_distance_from_Eb(1.0, 2) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    def test_inverse_construction(self, M):
        Eb = (M - 1) * (2 * M - 1) / (6 * math.log2(M))
        assert electrical_distance_from_Eb(Eb, M) == pytest.approx(1.0, rel=1e-12)

    @given(Eb=st.floats(1e-20, 1e3), M=st.sampled_from([2, 4, 8, 16, 32]))
    def test_energy_identity(self, Eb, M):
        # (1/M) sum_i i^2 (2d)^2 = Eb log2 M
        two_d = electrical_distance_from_Eb(Eb, M)
        lhs = sum(i * i for i in range(M)) / M * two_d**2
        assert lhs == pytest.approx(Eb * math.log2(M), rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            electrical_distance_from_Eb(0.0, 2)
        with pytest.raises(ValueError):
            electrical_distance_from_Eb(1.0, 3)
