import numpy as np
import pytest

from spiralpi import fitting
from spiralpi.errors import NoSignChange, NonFiniteResidual, Underdetermined
from spiralpi.fitting import (
    DEFAULT_BOUNDS,
    REFERENCE_ANCHORS,
    Anchor,
    FitProblem,
    fit,
    residuals,
)
from spiralpi.network import convert, extract_ql, pi_to_two_port
from spiralpi.pi_model import ELEMENTS, PiModel

from oracles import one_port_impedance, one_port_q, pi_y_matrix, sign_scan_srf, y_to_s
from test_pi_model import M0

GRID_200 = np.linspace(0.1e9, 40e9, 200)


def synth(model, freqs=GRID_200, rep="S"):
    return convert(pi_to_two_port(model, freqs), rep)


class TestProblem:
    def test_exactly_one_source(self):
        with pytest.raises(ValueError):
            FitProblem()
        with pytest.raises(ValueError):
            FitProblem(data=synth(M0), anchors=REFERENCE_ANCHORS)

    def test_bounds_checked(self):
        bad = dict(DEFAULT_BOUNDS, R_s=(1.0, 1.0))
        with pytest.raises(ValueError):
            FitProblem(data=synth(M0), bounds=bad)

    def test_anchor_outside_sweep(self):
        with pytest.raises(ValueError):
            FitProblem(anchors=(Anchor("Q", 10.0, 50e9),))

    def test_anchor_validation(self):
        with pytest.raises(ValueError):
            Anchor("C", 1.0, 1e9)
        with pytest.raises(ValueError):
            Anchor("Q", 1.0)

    def test_prior_defaults(self):
        assert FitProblem(data=synth(M0)).prior == 0.0
        assert FitProblem(anchors=REFERENCE_ANCHORS).prior > 0
        assert FitProblem(anchors=REFERENCE_ANCHORS, prior_weight=0.0).prior == 0.0


class TestResiduals:
    def test_zero_at_source(self):
        r = residuals(M0, FitProblem(data=synth(M0)))
        assert r.shape == (8 * 200,)
        assert np.max(np.abs(r)) < 1e-15

    def test_zero_for_any_representation(self):
        for rep in "YZ":
            r = residuals(M0, FitProblem(data=synth(M0, rep=rep)))
            assert np.max(np.abs(r)) < 1e-12

    def test_weights_linear(self):
        data = synth(M0.replace(R_s=6.0))
        w = np.linspace(0.5, 2.0, 200)
        r1 = residuals(M0, FitProblem(data=data, weights=w))
        r2 = residuals(M0, FitProblem(data=data, weights=2 * w))
        assert np.array_equal(r2, 2 * r1)

    def test_norm_matches_direct_arithmetic(self):
        perturbed = M0.replace(L_s=2.1e-9, C_ox=90e-15)
        data = synth(perturbed)
        r = residuals(M0, FitProblem(data=data))
        total = 0.0
        for f in GRID_200:
            diff = y_to_s(pi_y_matrix(*M0.as_array(), f)) - y_to_s(pi_y_matrix(*perturbed.as_array(), f))
            total += np.sum(np.abs(diff) ** 2)
        assert np.linalg.norm(r) == pytest.approx(np.sqrt(total), rel=1e-12)

    def test_order_frequency_major_entry_11_21_12_22(self):
        data = synth(M0.replace(R_s=6.0), GRID_200[:3])
        r = residuals(M0, FitProblem(data=data)).reshape(3, 4, 2)
        s_m = convert(pi_to_two_port(M0, GRID_200[:3]), "S").matrices.astype(complex)
        s_d = data.matrices.astype(complex)
        d = s_m - s_d
        for k, (i, j) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
            assert np.allclose(r[:, k, 0], d[:, i, j].real, rtol=1e-12, atol=1e-16)
            assert np.allclose(r[:, k, 1], d[:, i, j].imag, rtol=1e-12, atol=1e-16)

    def test_anchor_residuals_normalized(self):
        params = tuple(M0.as_array())
        z = one_port_impedance(*params, 1e9)
        anchors = (
            Anchor("Q", 10.0, 5e9),
            Anchor("L_eff", 1e-9, 1e9),
            Anchor("SRF", 20e9, weight=3.0),
        )
        r = residuals(M0, FitProblem(anchors=anchors))
        assert r[0] == pytest.approx((one_port_q(params, 5e9) - 10) / 10, rel=1e-9)
        assert r[1] == pytest.approx((z.imag / (2 * np.pi * 1e9) - 1e-9) / 1e-9, rel=1e-9)
        assert r[2] == pytest.approx(3 * (sign_scan_srf(params) - 20e9) / 20e9, rel=1e-6)

    def test_leff_anchor_agrees_with_extraction(self):
        p = extract_ql(pi_to_two_port(M0, [0.1e9, 25.5e9]))
        r = residuals(M0, FitProblem(anchors=(Anchor("L_eff", 1.0, 0.1e9), Anchor("L_eff", 1.0, 25.5e9))))
        assert np.allclose(r + 1, p.l_eff, rtol=1e-12)

    def test_srf_without_root_is_pinned_to_edge(self):
        low_c = PiModel(L_s=0.5e-9, R_s=1.0, C_s=0.1e-15)
        r = residuals(low_c, FitProblem(anchors=(Anchor("SRF", 20e9),)))
        assert r[0] == pytest.approx(1.0, rel=1e-12)  # pinned at 40 GHz

    def test_failures_flagged_as_nan(self, monkeypatch):
        def broken(*args):
            raise NoSignChange("no root")

        monkeypatch.setattr(fitting, "_anchor_value", broken)
        r = residuals(M0, FitProblem(anchors=REFERENCE_ANCHORS))
        assert np.all(np.isnan(r))


class TestFit:
    def test_fixed_point_from_truth(self):
        report = fit(FitProblem(data=synth(M0), init=M0))
        assert report.iterations <= 1
        assert report.residual < 1e-12
        assert report.converged
        assert report.model == M0

    def test_recovers_m0_from_random_starts(self):
        report = fit(FitProblem(data=synth(M0)))
        rel = np.abs(report.model.as_array() / M0.as_array() - 1)
        assert np.all(rel < 0.01), dict(zip(ELEMENTS, rel))
        assert report.converged

    def test_deterministic(self):
        problem = FitProblem(data=synth(M0, GRID_200[::4]), starts=4, seed=3)
        a, b = fit(problem), fit(problem)
        assert a.model.as_array().tobytes() == b.model.as_array().tobytes()
        assert (a.residual, a.iterations, a.history, a.start_index) == (b.residual, b.iterations, b.history, b.start_index)

    def test_history_monotone_and_within_bounds(self):
        report = fit(FitProblem(data=synth(M0.replace(R_Si=300.0), GRID_200[::4]), starts=4))
        h = np.array(report.history)
        assert np.all(np.diff(h) <= 0)
        for name in ELEMENTS:
            lo, hi = DEFAULT_BOUNDS[name]
            assert lo <= getattr(report.model, name) <= hi

    def test_underdetermined_without_prior(self):
        with pytest.raises(Underdetermined):
            fit(FitProblem(anchors=REFERENCE_ANCHORS, prior_weight=0.0))

    def test_non_finite_everywhere(self, monkeypatch):
        def broken(*args):
            raise NoSignChange("no root")

        monkeypatch.setattr(fitting, "_anchor_value", broken)
        with pytest.raises(NonFiniteResidual) as info:
            fit(FitProblem(anchors=REFERENCE_ANCHORS, starts=2, screen_evals=20))
        assert set(info.value.params) == set(ELEMENTS)
