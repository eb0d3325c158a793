import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiralpi.errors import DivergentAtDC, InvalidModel, NoSignChange, OpenSubstrateBranch
from spiralpi.pi_model import PiModel, angular, cp_of, q_factor, rp_of, self_resonance, self_resonance_factor

from oracles import one_port_q, parallel_equivalent

M0 = PiModel(L_s=2e-9, R_s=5.0, C_s=5e-15, C_ox=100e-15, C_Si=50e-15, R_Si=1000.0)

# Frozen from the independent oracles in oracles.py (40-digit mpmath run).
RP_M0_5GHZ = 2351.3211836423377714
CP_M0_10GHZ = 3.4075505314726106288e-14
Q_M0_5GHZ = 8.6236426930639731236
SRF_M0 = 18118628611.607483


def f_of(omega):
    return omega / (2 * math.pi)


@st.composite
def models(draw):
    log = lambda lo, hi: 10 ** draw(st.floats(math.log10(lo), math.log10(hi)))
    return PiModel(
        L_s=log(0.1e-9, 20e-9),
        R_s=log(0.1, 100),
        C_s=log(0.1e-15, 100e-15),
        C_ox=log(1e-15, 1000e-15),
        C_Si=log(0.1e-15, 1000e-15),
        R_Si=log(10, 1e5),
    )


class TestPiModelType:
    def test_rejects_nonpositive_inductance(self):
        with pytest.raises(InvalidModel):
            PiModel(L_s=0.0, R_s=1.0)

    def test_zero_loss_needs_idealized(self):
        with pytest.raises(InvalidModel):
            PiModel(L_s=1e-9, R_s=0.0)
        assert PiModel.idealized(L_s=1e-9).R_s == 0.0

    @pytest.mark.parametrize("name", ["C_s", "C_ox", "C_Si", "R_Si"])
    def test_rejects_negative_elements(self, name):
        with pytest.raises(InvalidModel):
            M0.replace(**{name: -1e-15})

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidModel):
            M0.replace(R_Si=math.inf)
        with pytest.raises(InvalidModel):
            M0.replace(C_ox=math.nan)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            M0.L_s = 1.0


class TestRp:
    def test_csi_zero_closed_form(self):
        m = PiModel(L_s=1e-9, R_s=1.0, C_ox=100e-15, C_Si=0.0, R_Si=1000.0)
        assert rp_of(m, f_of(1e10)) == pytest.approx(2000.0, rel=1e-12)

    def test_high_frequency_limit(self):
        assert rp_of(M0, 1e18) == pytest.approx(2250.0, rel=1e-9)

    def test_matches_shunt_branch_oracle(self):
        assert rp_of(M0, 5e9) == pytest.approx(RP_M0_5GHZ, rel=1e-12)
        rp, _ = parallel_equivalent(100e-15, 50e-15, 1000.0, 5e9)
        assert rp_of(M0, 5e9) == pytest.approx(rp, rel=1e-12)

    def test_open_branch_signals(self):
        with pytest.raises(OpenSubstrateBranch):
            rp_of(M0.replace(C_ox=0.0), 1e9)
        with pytest.raises(OpenSubstrateBranch):
            rp_of(M0.replace(R_Si=0.0), 1e9)

    def test_dc_signals(self):
        with pytest.raises(DivergentAtDC):
            rp_of(M0, 0.0)


class TestCp:
    def test_dc_limit(self):
        assert cp_of(M0, 0.0) == 100e-15

    def test_high_frequency_limit(self):
        assert cp_of(M0, 1e18) == pytest.approx(100e-15 * 50e-15 / 150e-15, rel=1e-9)

    def test_matches_shunt_branch_oracle(self):
        assert cp_of(M0, 10e9) == pytest.approx(CP_M0_10GHZ, rel=1e-12)

    def test_rsi_zero_gives_cox(self):
        m = PiModel.idealized(L_s=1e-9, C_ox=1e-12)
        assert cp_of(m, 5e9) == 1e-12

    @given(models(), st.floats(8, 11), st.floats(8, 11))
    def test_bounds_and_monotone(self, m, a, b):
        lo, hi = sorted((10**a, 10**b))
        series = m.C_ox * m.C_Si / (m.C_ox + m.C_Si)
        c_lo, c_hi = cp_of(m, lo), cp_of(m, hi)
        assert c_hi <= c_lo * (1 + 1e-12)
        for c in (c_lo, c_hi):
            assert series * (1 - 1e-12) <= c <= m.C_ox * (1 + 1e-12)

    @given(models(), st.floats(0.01, 100))
    def test_series_limit_scaling(self, m, k):
        scaled = m.replace(R_Si=m.R_Si * k, C_ox=m.C_ox / k, C_Si=m.C_Si / k)
        limit = lambda x: x.C_ox * x.C_Si / (x.C_ox + x.C_Si)
        assert limit(scaled) * k == pytest.approx(limit(m), rel=1e-12)


class TestQFactor:
    def test_open_substrate_is_ideal_q(self):
        m = PiModel(L_s=1e-9, R_s=6.2832)
        assert float(q_factor(m, 1e9).q) == pytest.approx(2 * math.pi * 1e9 * 1e-9 / 6.2832, rel=1e-12)
        assert float(q_factor(m, 1e9).q) == pytest.approx(1.0, abs=1e-4)

    def test_matches_one_port_oracle(self):
        assert float(q_factor(M0, 5e9).q) == pytest.approx(Q_M0_5GHZ, rel=1e-9)

    def test_decomposition_product_exact(self):
        d = q_factor(M0, np.linspace(0.1e9, 40e9, 50))
        assert np.array_equal(d.q, d.ideal_q * d.substrate_loss_factor * d.self_resonance_factor)

    def test_negative_above_srf(self):
        assert float(q_factor(M0, 30e9).q) < 0

    def test_dc_signals(self):
        with pytest.raises(DivergentAtDC):
            q_factor(M0, 0.0)

    @settings(max_examples=200)
    @given(models(), st.floats(0.0, 1.0))
    def test_oracle_equivalence_below_srf(self, m, frac):
        try:
            srf = self_resonance(m, (1e6, 1e13))
        except NoSignChange:
            srf = 1e13
        f = 1e6 + frac * 0.99 * (min(srf, 40e9) - 1e6)
        d = q_factor(m, f)
        oracle = one_port_q(tuple(m.as_array()), f)
        assert abs(float(d.q) - oracle) <= 1e-6 * abs(oracle)
        assert 0 < float(d.substrate_loss_factor) <= 1

    @given(models(), st.floats(8, 10.6))
    def test_sign_structure(self, m, logf):
        f = 10**logf
        if self_resonance_factor(m, 1e6) <= 0:
            return  # overdamped from DC, see test_overdamped_model_starts_capacitive
        try:
            srf = self_resonance(m, (1e6, 1e13))
        except NoSignChange:
            return
        q = float(q_factor(m, f).q)
        if f < srf * (1 - 1e-6):
            assert q > 0
        elif f > srf * (1 + 1e-6) and self_resonance_factor(m, f) < 0:
            assert q < 0


    def test_overdamped_model_starts_capacitive(self):
        # R_s^2 (C_s + C_p) > L_s: negative Q from DC up to the first root,
        # where the factor turns positive rather than negative
        m = PiModel(L_s=1e-10, R_s=10.0, C_s=1e-13, C_ox=1e-12, C_Si=1e-12, R_Si=100.0)
        root = self_resonance(m, (1e6, 1e13))
        assert float(q_factor(m, root / 2).q) < 0
        assert float(q_factor(m, root * 1.01).q) > 0
        assert one_port_q(tuple(m.as_array()), root / 2) < 0


class TestSelfResonance:
    def test_ideal_lc(self):
        m = PiModel.idealized(L_s=1e-9, C_s=0.4e-12, C_ox=0.6e-12)
        expected = 1 / (2 * math.pi * math.sqrt(1e-9 * 1e-12))
        assert self_resonance(m, (1e9, 10e9)) == pytest.approx(expected, rel=1e-9)
        assert expected == pytest.approx(5.033e9, rel=1e-4)

    def test_matches_dense_scan_oracle(self):
        assert self_resonance(M0, (0.1e9, 40e9)) == pytest.approx(SRF_M0, rel=2e-9)

    def test_q_vanishes_at_root(self):
        srf = self_resonance(M0, (0.1e9, 40e9))
        assert abs(float(self_resonance_factor(M0, srf))) < 1e-7

    def test_no_sign_change(self):
        m = PiModel(L_s=1e-9, R_s=1.0)
        with pytest.raises(NoSignChange):
            self_resonance(m, (0.1e9, 40e9))

    def test_angular_conversion(self):
        assert angular(1.0) == 2 * math.pi
        assert np.allclose(angular(np.array([1.0, 2.0])), [2 * math.pi, 4 * math.pi])
