"""
Tests for the certificates, the two-row QP and the safety filter
"""

import logging

import numpy as np
import pytest

from src.frames.transforms import DqVector
from src.plant.converter import (
    NonStationaryState, StationaryState, drift, hold_response, input_matrix
)
from src.sfilter import safety_filter
from src.sfilter.certificate import (
    CertificateFormatError, PolynomialCertificate, eval_certificate, load_certificates,
    parse_certificates
)
from src.sfilter.qp import ActiveSet, DegenerateCbfError, QpResult, qp_solve
from src.sfilter.safety_filter import (
    FilterParams, SafetyFilter, allowable_margin, constraint_row, filter_step,
    nominal_control, refined_nominal_control
)


def state(i=(0.0, 0.0), dv=(0.0, 0.0), i_r=(0.0, 0.0), i_0=0.0):
    return NonStationaryState(DqVector(*i), DqVector(*dv)), StationaryState(DqVector(*i_r), i_0)


class TestCertificates:

    def test_packaged_table(self, certificates):
        assert set(certificates) == {"B", "V"}
        assert certificates["B"].degree == 2
        assert certificates["V"].degree == 2

    def test_barrier_values(self, certificates):
        x, z = state()
        B, grad = eval_certificate(certificates["B"], x, z)
        assert B == pytest.approx(-1.0)
        assert grad == pytest.approx([0.0, 0.0, 0.0, 0.0])

        x, z = state(i=(1.0, 0.0))
        B, grad = eval_certificate(certificates["B"], x, z)
        assert B == pytest.approx(-0.37)
        assert grad == pytest.approx([1.26, 0.0, 0.0, 0.0])

    def test_barrier_zero_sequence_terms(self, certificates):
        x, z = state(i_0=0.6)
        B, _ = eval_certificate(certificates["B"], x, z)
        assert B == pytest.approx(-0.63 * 0.36 + 1.59 * 0.6 - 1.0)

    def test_lyapunov_at_reference(self, certificates, operating_point):
        V, grad = eval_certificate(certificates["V"], *operating_point)
        assert V == pytest.approx(-0.433)
        # d/di_d = 9.4 i_d - 9.15 i_rd
        assert grad[0] == pytest.approx(9.4 * 0.9 - 9.15 * 0.9)

    def test_batch_matches_pointwise(self, certificates):
        rng = np.random.default_rng(7)
        points = rng.uniform(-1.0, 1.0, size=(16, 7))
        values, grads = certificates["V"].evaluate_batch(points, chunk=5)
        for point, value, grad in zip(points, values, grads):
            v, g = certificates["V"].evaluate(point)
            assert value == pytest.approx(v)
            np.testing.assert_allclose(grad, g, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(certificates["V"].values(points), values)

    @pytest.mark.parametrize("name", ["B", "V"])
    def test_gradient_matches_finite_difference(self, certificates, name):
        cert = certificates[name]
        rng = np.random.default_rng(3)
        points = rng.uniform(-1.5, 1.5, size=(10000, 7))
        points[:, 6] = rng.uniform(0.0, 0.6, 10000)
        _, grads = cert.evaluate_batch(points)
        h = 1e-5
        for j in range(4):
            step = np.zeros(7)
            step[j] = h
            numeric = (cert.values(points + step) - cert.values(points - step)) / (2 * h)
            np.testing.assert_allclose(grads[:, j], numeric, rtol=1e-6, atol=1e-6)

    def test_hessian_of_barrier(self, certificates):
        hessian = certificates["B"].x_hessian(np.zeros(7))
        np.testing.assert_allclose(hessian, 1.26 * np.eye(2), atol=1e-12)

    def test_parse_reports_line(self):
        with pytest.raises(CertificateFormatError) as exc:
            parse_certificates(["[B]", "1 0 0"])
        assert exc.value.line == 2

    def test_parse_rejects_duplicates(self):
        lines = ["# header", "[V]", "2 0 0 0 0 0 0 1.0", "2 0 0 0 0 0 0 0.5"]
        with pytest.raises(CertificateFormatError) as exc:
            parse_certificates(lines)
        assert exc.value.line == 4
        assert "line 3" in str(exc.value)

    @pytest.mark.parametrize("lines", [
        ["1 0 0 0 0 0 0 1.0"],
        ["[B]", "1 0 0 0 0 0 x 1.0"],
        ["[B]", "-1 0 0 0 0 0 0 1.0"],
        ["[B]", "[B]"],
    ])
    def test_parse_errors(self, lines):
        with pytest.raises(CertificateFormatError):
            parse_certificates(lines)

    def test_from_terms_rejects_duplicates(self):
        with pytest.raises(CertificateFormatError):
            PolynomialCertificate.from_terms("B", [(1.0, (0,) * 7), (2.0, (0,) * 7)])

    def test_load_requires_both_sections(self, tmp_path):
        path = tmp_path / "certificates.txt"
        path.write_text("[B]\n0 0 0 0 0 0 0 -1.0\n")
        with pytest.raises(CertificateFormatError):
            load_certificates(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_certificates(tmp_path / "absent.txt")


class TestControlLaws:

    def test_nominal_control(self, z_c):
        x, z = state(i=(0.5, 0.0), dv=(0.01, -0.02), i_r=(1.0, 0.0))
        u = nominal_control(x, z, z_c)
        assert (u.d, u.q) == pytest.approx((0.03, 0.14))

    def test_refined_nominal_control(self, z_c):
        x, z = state(i=(0.5, 0.0), dv=(0.01, -0.02), i_r=(1.0, 0.0))
        u = refined_nominal_control(x, z, z_c)
        assert (u.d, u.q) == pytest.approx((0.13, 0.14))

    @pytest.mark.parametrize("i, i_0, expected", [
        ((1.0, 0.0), 0.0, 1.0 - 1.69),
        ((0.6, 0.8), 0.3, 0.0),
        ((0.0, 0.0), 1.3, 0.0),
    ])
    def test_allowable_margin(self, i, i_0, expected):
        x, z = state(i=i, i_0=i_0)
        assert allowable_margin(x, z, 1.3) == pytest.approx(expected, abs=1e-12)

    def test_allowable_margin_rejects_large_zero_sequence(self):
        x, z = state(i_0=1.4)
        with pytest.raises(ValueError):
            allowable_margin(x, z, 1.3)

    def test_constraint_row(self, z_c):
        grad = np.array([1.0, 0.0, 0.0, 0.0])
        f = np.array([2.0, 0.0, 0.0, 0.0])
        a, b = constraint_row(-0.5, grad, f, input_matrix(z_c), rate=10.0)
        assert a.d == pytest.approx(input_matrix(z_c)[0, 0])
        assert a.q == 0.0
        assert b == pytest.approx(5.0 - 2.0)

    def test_filter_params_validation(self):
        with pytest.raises(ValueError):
            FilterParams(gamma_b=0.0)
        with pytest.raises(ValueError):
            FilterParams(m_max=-1.0)
        with pytest.raises(ValueError):
            FilterParams(hold_time=-1e-4)
        assert FilterParams().dissipation(0.0) == pytest.approx(1e-4)


class TestQp:

    def test_nominal_feasible(self):
        u_n = DqVector(0.1, 0.2)
        result = qp_solve(u_n, DqVector(1.0, 0.0), 1.0, DqVector(0.0, 1.0), 1.0)
        assert result.active_set is ActiveSet.NONE
        assert result.u is u_n
        assert result.objective == 0.0

    def test_single_row_projection(self):
        result = qp_solve(DqVector(1.0, 1.0), DqVector(1.0, 0.0), 0.0)
        assert result.active_set is ActiveSet.CBF
        assert (result.u.d, result.u.q) == pytest.approx((0.0, 1.0))
        assert result.objective == pytest.approx(1.0)

    def test_lyapunov_row_only(self):
        result = qp_solve(DqVector(1.0, 1.0), DqVector(1.0, 0.0), 5.0, DqVector(0.0, 1.0), 0.0)
        assert result.active_set is ActiveSet.CLF
        assert (result.u.d, result.u.q) == pytest.approx((1.0, 0.0))

    def test_both_rows_active(self):
        result = qp_solve(DqVector(1.0, 1.0), DqVector(1.0, 0.0), 0.0, DqVector(0.0, 1.0), 0.0)
        assert result.active_set is ActiveSet.BOTH
        assert (result.u.d, result.u.q) == pytest.approx((0.0, 0.0), abs=1e-12)
        assert result.objective == pytest.approx(2.0)

    def test_incompatible_rows_fall_back(self):
        result = qp_solve(DqVector(2.0, 0.0), DqVector(1.0, 0.0), 0.0,
                          DqVector(-1.0, 0.0), -1.0)
        assert result.active_set is ActiveSet.CBF_ONLY_FALLBACK
        assert (result.u.d, result.u.q) == pytest.approx((0.0, 0.0))
        assert result.objective == pytest.approx(4.0)

    def test_unsatisfiable_zero_lyapunov_row_falls_back(self):
        result = qp_solve(DqVector(2.0, 0.0), DqVector(1.0, 0.0), 0.0, DqVector(), -1.0)
        assert result.active_set is ActiveSet.CBF_ONLY_FALLBACK
        assert result.u.d == pytest.approx(0.0)

    def test_degenerate_barrier_row(self):
        with pytest.raises(DegenerateCbfError):
            qp_solve(DqVector(1.0, 0.0), DqVector(), -1.0)
        assert qp_solve(DqVector(1.0, 0.0), DqVector(), 1.0).active_set is ActiveSet.NONE

    def test_matches_grid_search(self):
        rng = np.random.default_rng(11)
        h = 0.02
        axis = np.linspace(-2.0, 2.0, 201)
        U = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
        # a feasible set with corner angle >= 60 degrees holds a grid point this close
        # to any of its points
        reach = 3.0 * h / np.sqrt(2.0)
        fallbacks = 0
        for k in range(1000):
            u_n = rng.uniform(-0.8, 0.8, 2)
            p = rng.uniform(-0.5, 0.5, 2)
            phi = rng.uniform(0.0, 2.0 * np.pi)
            a_b = rng.uniform(0.5, 2.0) * np.array([np.cos(phi), np.sin(phi)])
            b_b = a_b @ p + rng.uniform(0.0, 0.3)
            incompatible = k % 5 == 0
            if incompatible:
                scale = rng.uniform(0.5, 2.0)
                a_v = -scale * a_b
                b_v = -scale * (b_b + rng.uniform(0.01, 0.5))
            else:
                psi = phi + rng.uniform(-2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0)
                a_v = rng.uniform(0.5, 2.0) * np.array([np.cos(psi), np.sin(psi)])
                b_v = a_v @ p + rng.uniform(0.0, 0.3)

            result = qp_solve(DqVector(*u_n), DqVector(*a_b), b_b, DqVector(*a_v), b_v)
            u = result.u.as_array()
            assert a_b @ u <= b_b + 1e-9
            feasible = U @ a_b <= b_b
            if incompatible:
                assert result.active_set is ActiveSet.CBF_ONLY_FALLBACK
                fallbacks += 1
            else:
                assert result.active_set is not ActiveSet.CBF_ONLY_FALLBACK
                assert a_v @ u <= b_v + 1e-9
                feasible &= U @ a_v <= b_v

            costs = np.sum((U[feasible] - u_n) ** 2, axis=1)
            best = int(np.argmin(costs))
            u_grid, grid_cost = U[feasible][best], costs[best]
            assert result.objective == pytest.approx(float(np.sum((u - u_n) ** 2)))
            assert result.objective <= grid_cost + 1e-9
            # u is the projection of u_n, so a worse feasible point is farther away
            assert np.sum((u_grid - u) ** 2) <= grid_cost - result.objective + 1e-9
            assert grid_cost - result.objective <= \
                2.0 * np.sqrt(result.objective) * reach + reach ** 2 + 1e-9
        assert fallbacks == 200


class TestSafetyFilter:

    def test_inactive_at_operating_point(self, filter_params, z_c, certificates,
                                         operating_point):
        x, z = operating_point
        sf = SafetyFilter(filter_params, z_c, certificates)
        v_c, diag = sf.step(x, z, DqVector(1.0, 0.0))
        assert diag.active_set is ActiveSet.NONE
        assert not diag.intervened
        assert (v_c.d, v_c.q) == pytest.approx((1.018, 0.144))
        assert diag.B == pytest.approx(0.63 * 0.81 - 1.0)
        assert sf.statistics == {"steps": 1, "interventions": 0, "fallbacks": 0}

    def test_barrier_intervention_is_tight(self, filter_params, z_c, certificates):
        x, z = state(i=(1.25, 0.0), dv=(0.5, 0.0), i_r=(1.18, 0.0))
        sf = SafetyFilter(filter_params, z_c, certificates)
        _, diag = sf.step(x, z, DqVector(0.2, 0.0), use_clf=False)
        assert diag.active_set is ActiveSet.CBF
        assert diag.u.d < diag.u_n.d
        B, grad = eval_certificate(certificates["B"], x, z)
        a, b = constraint_row(B, grad, drift(x.as_array(), z_c, filter_params.tau_v),
                              input_matrix(z_c), filter_params.gamma_b)
        assert a.dot(diag.u) == pytest.approx(b, rel=1e-9)
        assert sf.statistics["interventions"] == 1

    def test_filter_output_is_input_plus_pcc_voltage(self, filter_params, z_c, certificates):
        x, z = state(i=(1.25, 0.0), dv=(0.5, 0.0), i_r=(1.18, 0.0))
        v_pcc = DqVector(0.2, 0.05)
        v_c, diag = filter_step(x, z, filter_params, z_c, 1.0, v_pcc,
                                certificates=certificates)
        assert (v_c.d, v_c.q) == pytest.approx(((diag.u + v_pcc).d, (diag.u + v_pcc).q))
        assert diag.du == diag.u - diag.u_n

    def test_hold_keeps_operating_point_untouched(self, z_c, certificates, operating_point):
        x, z = operating_point
        sf = SafetyFilter(FilterParams(hold_time=2e-4), z_c, certificates)
        _, diag = sf.step(x, z, DqVector(1.0, 0.0))
        assert diag.active_set is ActiveSet.NONE

    def test_hold_tightens_barrier_row(self, z_c, certificates):
        params = FilterParams(hold_time=2e-4)
        x, z = state(i=(1.25, 0.0), dv=(0.5, 0.0), i_r=(1.18, 0.0))
        sf = SafetyFilter(params, z_c, certificates)
        _, diag = sf.step(x, z, DqVector(0.2, 0.0), use_clf=False)
        assert diag.active_set is ActiveSet.CBF

        B, grad = eval_certificate(certificates["B"], x, z)
        f, G = drift(x.as_array(), z_c, params.tau_v), input_matrix(z_c)
        a, b = constraint_row(B, grad, f, G, params.gamma_b)
        held = hold_response(x, diag.u_n, z_c, params.tau_v, 1.0, params.hold_time)
        growth = (eval_certificate(certificates["B"], held, z)[0] - B) / params.hold_time \
            - grad @ (f + G @ diag.u_n.as_array())
        assert a.dot(diag.u) == pytest.approx(b - max(growth, 0.0), rel=1e-9)

        _, continuous = SafetyFilter(FilterParams(), z_c, certificates).step(
            x, z, DqVector(0.2, 0.0), use_clf=False)
        assert a.dot(diag.u) <= a.dot(continuous.u) + 1e-12

    def test_lyapunov_solution_breaking_sampled_decrease_is_dropped(
            self, z_c, certificates, monkeypatch, caplog):
        x, z = state(i=(1.25, 0.0), dv=(0.5, 0.0), i_r=(1.18, 0.0))
        sf = SafetyFilter(FilterParams(hold_time=2e-4), z_c, certificates)
        solve = safety_filter.qp_solve

        def lyapunov_active(u_n, aB, bB, aV=None, bV=None):
            result = solve(u_n, aB, bB, aV, bV)
            if aV is None:
                return result
            return QpResult(DqVector(), ActiveSet.CLF, result.objective)

        monkeypatch.setattr(safety_filter, "qp_solve", lyapunov_active)
        monkeypatch.setattr(SafetyFilter, "_keeps_sampled_decrease",
                            lambda self, *args: False)
        with caplog.at_level(logging.WARNING, logger="src.sfilter.safety_filter"):
            _, diag = sf.step(x, z, DqVector(0.2, 0.0))
        assert diag.active_set is ActiveSet.CBF_ONLY_FALLBACK
        assert diag.u != DqVector()
        assert sf.statistics == {"steps": 1, "interventions": 1, "fallbacks": 1}
        assert "Lyapunov row dropped" in caplog.text

    def test_sampled_decrease_check(self, z_c, certificates, operating_point):
        x, z = operating_point
        sf = SafetyFilter(FilterParams(hold_time=2e-4), z_c, certificates)
        B, _ = eval_certificate(certificates["B"], x, z)
        u_n = nominal_control(x, z, z_c)
        assert sf._keeps_sampled_decrease(x, z, u_n, B, 1.0)
        # a large voltage step drives the current out of the safe set within one hold
        assert not sf._keeps_sampled_decrease(x, z, u_n + DqVector(1.0, 0.0), B, 1.0)
