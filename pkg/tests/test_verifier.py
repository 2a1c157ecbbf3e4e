"""
Tests for region sampling and the certificate checks
"""

import json
import math

import numpy as np
import pytest

from src.verifier.checks import (
    VerificationReport, Violation, ball_line_crossings, ball_minimum, band_convergence,
    boundary_points, check_abc_bound, check_cbf_boundary, check_clf_region, check_containment,
    check_input_feasibility, check_nominal_invariance, joint_residual, run_all, write_report
)
from src.verifier.region import (
    OperationalRegion, iter_region, project_to_level, sample_region, split_point
)

N = 2000


class TestRegion:

    def test_samples_inside_region(self, region):
        points = sample_region(region, 500, seed=3)
        assert points.shape == (500, 7)
        assert region.contains(points).all()
        assert (points[:, 6] >= 0.0).all() and (points[:, 6] <= region.i_0_max).all()

    def test_sampling_is_deterministic(self, region):
        np.testing.assert_array_equal(sample_region(region, 300, seed=5),
                                      sample_region(region, 300, seed=5))
        assert not np.array_equal(sample_region(region, 300, seed=5),
                                  sample_region(region, 300, seed=6))

    def test_invalid_requests(self, region):
        with pytest.raises(ValueError):
            sample_region(region, 0)
        with pytest.raises(ValueError):
            OperationalRegion(i_max=0.0)

    def test_printed_sign_puts_current_outside_disk(self):
        region = OperationalRegion(printed_sign=True)
        points = sample_region(region, 200, seed=1)
        radius = np.hypot(points[:, 0], points[:, 1])
        assert (radius >= region.i_max - points[:, 6]).all()

    def test_iter_region(self, region):
        pairs = list(iter_region(region, 10, seed=2))
        x, z = split_point(sample_region(region, 10, seed=2)[0])
        assert len(pairs) == 10
        assert pairs[0][0] == x and pairs[0][1] == z

    def test_project_to_barrier_level(self, region, certificates):
        points = sample_region(region, 200, seed=4)
        projected, mask = project_to_level(certificates["B"], points, region)
        assert len(projected) == mask.sum() > 0
        np.testing.assert_allclose(certificates["B"].values(projected), 0.0, atol=1e-9)
        # only the current moves
        np.testing.assert_array_equal(projected[:, 2:], points[mask][:, 2:])

    def test_boundary_points_band(self, region, certificates):
        pts = boundary_points(certificates["B"], region, 500, band=1e-3, seed=0)
        assert len(pts) > 0
        assert (np.abs(certificates["B"].values(pts)) <= 1e-3).all()
        with pytest.raises(ValueError):
            boundary_points(certificates["B"], region, 500, band=0.0)


class TestChecks:

    def test_ball_minimum(self):
        assert ball_minimum(np.array([1.0, 0.0]), 1.0) == pytest.approx([-2.0])
        assert ball_minimum(np.array([0.0, 2.0]), 2.25) == pytest.approx([-3.0])

    def test_joint_residual(self):
        # max(u_d, u_q) is smallest where the diagonal leaves the input ball
        residual = joint_residual(np.zeros(1), np.array([[1.0, 0.0]]), np.zeros(1),
                                  np.array([[0.0, 1.0]]), np.zeros(1), 1.5)
        assert residual[0] == pytest.approx(-(1.0 + math.sqrt(2.0)) / 2.0, abs=5e-3)

    def test_ball_line_crossings(self):
        # u_d = 0 meets the ball of radius 1 around (-1, 0) at (0, 0) only
        points = ball_line_crossings(np.array([[1.0, 0.0]]), np.array([0.0]), 1.0)
        np.testing.assert_allclose(points[0], [[0.0, 0.0], [0.0, 0.0]], atol=1e-12)
        points = ball_line_crossings(np.array([[0.0, 1.0]]), np.array([0.5]), 1.0)
        assert sorted(points[0][:, 0]) == pytest.approx([-1.0 - math.sqrt(0.75),
                                                         -1.0 + math.sqrt(0.75)])
        np.testing.assert_allclose(points[0][:, 1], 0.5)
        # a line that misses the ball falls back to the centre
        missed = ball_line_crossings(np.array([[0.0, 1.0]]), np.array([3.0]), 1.0)
        np.testing.assert_allclose(missed[0], [[-1.0, 0.0], [-1.0, 0.0]])

    def test_joint_residual_is_exact_without_sweep(self):
        # the optimum sits where the diagonal crosses the ball surface
        residual = joint_residual(np.zeros(1), np.array([[1.0, 0.0]]), np.zeros(1),
                                  np.array([[0.0, 1.0]]), np.zeros(1), 1.5, sweep=0)
        assert residual[0] == pytest.approx(-(1.0 + math.sqrt(2.0)) / 2.0, abs=1e-3)

    def test_joint_residual_matches_dense_sweep(self):
        rng = np.random.default_rng(11)
        n = 200
        args = (rng.normal(size=n), rng.normal(size=(n, 2)), rng.normal(size=n),
                rng.normal(size=(n, 2)), rng.uniform(0.0, 1.0, n), 1.5)
        exact = joint_residual(*args, sweep=0)
        dense = joint_residual(*args, sweep=20000)
        np.testing.assert_allclose(dense, exact, atol=1e-9)

    def test_joint_residual_rejects_negative_sweep(self):
        with pytest.raises(ValueError):
            joint_residual(np.zeros(1), np.ones((1, 2)), np.zeros(1), np.ones((1, 2)),
                           np.zeros(1), 1.0, sweep=-1)

    def test_barrier_boundary_holds(self, certificates, region):
        report = check_cbf_boundary(certificates, region, N)
        assert report.samples_tested > 0
        assert report.passed

    def test_input_feasibility_holds(self, certificates, region):
        report = check_input_feasibility(certificates, region, N)
        assert report.samples_tested > 0
        assert report.passed

    def test_safe_set_inside_allowable_set(self, certificates, region):
        report = check_containment(certificates, region, N)
        assert report.samples_tested == N
        assert report.count("xs_in_xa") == 0

    def test_lyapunov_checks_are_deterministic(self, certificates, region):
        first = check_clf_region(certificates, region, 500, seed=9)
        second = check_clf_region(certificates, region, 500, seed=9)
        assert first.condition == "clf+joint"
        assert first.to_dict() == second.to_dict()
        assert first.violations == second.violations

    def test_nominal_check_is_deterministic(self, certificates, region):
        first = check_nominal_invariance(certificates, region, 500, seed=9)
        second = check_nominal_invariance(certificates, region, 500, seed=9)
        assert first.condition == "nominal"
        assert first.to_dict() == second.to_dict()

    @pytest.mark.parametrize("i_hat, i_0", [(1.0, 0.0), (0.7, 0.6), (1.3, 0.0)])
    def test_abc_bound(self, i_hat, i_0):
        assert check_abc_bound(720, 720, i_hat, i_0) == pytest.approx(i_hat + i_0, abs=1e-4)

    def test_abc_bound_grid_size(self):
        with pytest.raises(ValueError):
            check_abc_bound(100, 720)

    def test_band_convergence_order(self, certificates, region):
        rows = band_convergence(certificates, region, 500, bands=(1e-3, 1e-2))
        assert [r["band"] for r in rows] == [1e-2, 1e-3]
        assert all(r["cbf_violations"] == 0 for r in rows)

    def test_run_all(self, certificates, region):
        reports = run_all(certificates, region, 500)
        assert set(reports) == {"cbf", "input", "clf", "nominal", "containment"}
        assert reports["cbf"].passed and reports["input"].passed

    def test_run_all_sweep_does_not_change_joint_check(self, certificates, region):
        coarse = run_all(certificates, region, 500, sweep=0)
        fine = run_all(certificates, region, 500, sweep=3600)
        assert coarse["clf"].samples_tested == fine["clf"].samples_tested
        assert len(coarse["clf"].violations) == len(fine["clf"].violations)

    def test_packaged_certificates_leave_nominal_region_outside_safe_set(self, certificates,
                                                                          region):
        # known counterexamples of the packaged coefficients, recorded in the README
        report = check_containment(certificates, region, 100000, seed=0)
        assert report.count("xn_in_xs") > 0

    def test_packaged_certificates_fail_nominal_invariance(self, certificates, region):
        report = check_nominal_invariance(certificates, region, 20000, seed=0)
        assert report.samples_tested > 0
        assert not report.passed


class TestReport:

    def reports(self):
        a = VerificationReport("cbf", 10, [Violation("cbf", (0.2,), 1.0)])
        b = VerificationReport("clf", 5, [Violation("clf", (0.1,), 2.0)])
        c = VerificationReport("input", 7)
        return a, b, c

    def test_merge_is_associative_and_commutative(self):
        a, b, c = self.reports()
        left = a.merge(b).merge(c)
        right = a.merge(b.merge(c))
        swapped = c.merge(a).merge(b)
        for other in (right, swapped):
            assert left.condition == other.condition == "cbf+clf+input"
            assert left.samples_tested == other.samples_tested == 22
            assert left.violations == other.violations

    def test_summary(self):
        a, b, _ = self.reports()
        summary = a.merge(b).to_dict()
        assert summary["violations"] == 2
        assert summary["pass"] is False
        assert summary["worst_residual"] == 2.0
        assert VerificationReport("input", 3).to_dict()["worst_residual"] is None

    def test_write_report(self, tmp_path):
        a, _, c = self.reports()
        path = write_report([a, c], tmp_path / "out" / "report.jsonl")
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(lines) == 3
        assert lines[0]["summary"]["condition"] == "cbf"
        assert lines[1] == {"condition": "cbf", "point": [0.2], "residual": 1.0}
        assert lines[2]["summary"]["pass"] is True
