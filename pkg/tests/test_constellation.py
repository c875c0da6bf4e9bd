import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fso_pam.constellation import (
    Constellation,
    GrayMap,
    gray_decode,
    gray_encode,
    hamming_table,
    min_distance_from_power,
    optical_energy_per_bit,
    power_delta_for_rate_scaling,
    power_from_min_distance,
)

ORDERS = [2, 4, 8, 16, 32]


class TestMinDistance:
    def test_unit_arguments(self):
        assert min_distance_from_power(1, 1, 1, 2) == 2.0

    def test_direct_evaluation(self):
        # 2*sqrt(1e-10)*1*1e-3/(2-1) = 2e-8
        assert min_distance_from_power(1e-3, 1e-10, 1, 2) == pytest.approx(2e-8, rel=1e-12)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            min_distance_from_power(1, 1, 1, 5)

    @pytest.mark.parametrize("bad", [(-1, 1, 1), (1, 0, 1), (1, 1, -2)])
    def test_non_positive_inputs_rejected(self, bad):
        P, Ts, R = bad
        with pytest.raises(ValueError):
            min_distance_from_power(P, Ts, R, 4)

    @given(
        P=st.floats(1e-9, 1e3),
        Ts=st.floats(1e-12, 1.0),
        R=st.floats(0.1, 10.0),
        M=st.sampled_from(ORDERS),
    )
    def test_power_roundtrip(self, P, Ts, R, M):
        two_d = min_distance_from_power(P, Ts, R, M)
        assert power_from_min_distance(two_d, Ts, R, M) == pytest.approx(P, rel=1e-12)


class TestGray:
    def test_ook(self):
        assert gray_encode((1,)) == 1
        assert gray_encode((0,)) == 0

    def test_m4(self):
        # reflected sequence 00,01,11,10
        assert gray_encode((1, 1)) == 2

    def test_m8(self):
        assert gray_encode((1, 0, 0)) == 7

    @pytest.mark.parametrize("M", ORDERS)
    def test_bijection(self, M):
        levels = {gray_encode(gray_decode(lv, M)) for lv in range(M)}
        assert levels == set(range(M))

    @pytest.mark.parametrize("M", ORDERS)
    def test_adjacent_levels_differ_in_one_bit(self, M):
        for lv in range(M - 1):
            a = gray_decode(lv, M)
            b = gray_decode(lv + 1, M)
            assert sum(x != y for x, y in zip(a, b)) == 1

    def test_graymap_roundtrip_and_length_check(self):
        gm = GrayMap(8)
        assert gm.bits_per_symbol == 3
        for lv in range(8):
            assert gm.level_of_bits(gm.bits_of_level(lv)) == lv
        with pytest.raises(ValueError):
            gm.level_of_bits((1, 0))

    def test_bad_bits_rejected(self):
        with pytest.raises(ValueError):
            gray_encode((0, 2))

    def test_hamming_table_diag_zero(self):
        for M in (2, 4, 16):
            t = hamming_table(M)
            assert np.all(np.diag(t) == 0)
            assert np.all(t == t.T)
            # adjacent-level entries are exactly one bit
            assert np.all(np.diag(t, 1) == 1)


class TestEnergyAndRate:
    def test_energy_examples(self):
        assert optical_energy_per_bit(1, 1, 2) == 1.0
        assert optical_energy_per_bit(1e-3, 2e-10, 4) == pytest.approx(1e-13, rel=1e-12)
        assert optical_energy_per_bit(1, 1, 16) == 0.25

    def test_rate_scaling_examples(self):
        assert power_delta_for_rate_scaling(1) == 0.0
        assert power_delta_for_rate_scaling(2) == pytest.approx(1.50515, abs=1e-4)
        assert power_delta_for_rate_scaling(4) == pytest.approx(3.01030, abs=1e-4)
        with pytest.raises(ValueError):
            power_delta_for_rate_scaling(0)

    @given(
        P=st.floats(1e-6, 1.0),
        rate=st.floats(1e8, 1e11),
        M=st.sampled_from(ORDERS),
    )
    def test_d2_from_energy_rate_matches_power_form(self, P, rate, M):
        # d^2 = (E_b^o)^2 * R_data * R^2 * log2(M)/(M-1)^2 must agree with
        # d = sqrt(Ts)*R*P/(M-1)
        R = 1.0
        Ts = math.log2(M) / rate
        ebo = optical_energy_per_bit(P, Ts, M)
        d2_energy = ebo**2 * rate * R**2 * math.log2(M) / (M - 1) ** 2
        d2_power = (min_distance_from_power(P, Ts, R, M) / 2) ** 2
        assert d2_energy == pytest.approx(d2_power, rel=1e-12)


class TestConstellation:
    def test_invariant_holds(self):
        c = Constellation(M=4, Ts=1e-10, R=0.8, Pbar=2e-3)
        assert c.two_d == min_distance_from_power(2e-3, 1e-10, 0.8, 4)
        assert c.bits_per_symbol == 2
        # I = 2d/(sqrt(Ts)*R)
        assert c.intensity_step == pytest.approx(2 * c.Pbar / (c.M - 1), rel=1e-12)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            Constellation(M=6, Ts=1.0, R=1.0, Pbar=1.0)
