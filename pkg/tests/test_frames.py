"""
Tests for the reference-frame transforms and impedance arithmetic
"""

import math

import numpy as np
import pytest

from src.frames.transforms import (
    OMEGA_N, Dq0Vector, DqVector, Impedance, SingularImpedanceError,
    impedance_apply, impedance_solve, park_forward, park_inverse, rotate
)


class TestDqVector:

    def test_arithmetic(self):
        a = DqVector(1.0, 2.0)
        b = DqVector(0.5, -1.0)
        assert a + b == DqVector(1.5, 1.0)
        assert a - b == DqVector(0.5, 3.0)
        assert -a == DqVector(-1.0, -2.0)
        assert a.scaled(2.0) == DqVector(2.0, 4.0)
        assert a.dot(b) == pytest.approx(-1.5)

    def test_amplitude(self):
        assert DqVector(0.6, 0.8).amplitude() == pytest.approx(1.0)

    @pytest.mark.parametrize("d, q", [(math.nan, 0.0), (0.0, math.inf)])
    def test_rejects_non_finite(self, d, q):
        with pytest.raises(ValueError):
            DqVector(d, q)

    def test_nominal_frequency(self):
        assert OMEGA_N == pytest.approx(376.99111843)


class TestImpedance:

    def test_apply_rated_current(self, z_c):
        v = impedance_apply(z_c, 1.0, DqVector(0.9, 0.0))
        assert v.d == pytest.approx(0.018)
        assert v.q == pytest.approx(0.144)

    def test_apply_zero_current(self, z_c):
        assert impedance_apply(z_c, 1.3, DqVector()) == DqVector(0.0, 0.0)

    def test_pure_inductance_rotates(self):
        v = impedance_apply(Impedance(r=0.0, l=1.0), 1.0, DqVector(1.0, 0.0))
        assert v.d == pytest.approx(0.0)
        assert v.q == pytest.approx(1.0)

    def test_matrix_matches_apply(self, z_c):
        i = DqVector(0.3, -0.7)
        v = impedance_apply(z_c, 0.98, i)
        np.testing.assert_allclose(z_c.matrix(0.98) @ i.as_array(), v.as_array())

    def test_solve_inverts_apply(self, z_c):
        i = impedance_solve(z_c.r, z_c.l, 1.0, DqVector(0.018, 0.144))
        assert i.d == pytest.approx(0.9)
        assert i.q == pytest.approx(0.0, abs=1e-12)

    def test_solve_pure_inductance(self):
        i = impedance_solve(0.0, 0.16, 1.0, DqVector(0.0, 0.16))
        assert i.d == pytest.approx(1.0)
        assert i.q == pytest.approx(0.0)

    def test_solve_singular(self):
        with pytest.raises(SingularImpedanceError):
            impedance_solve(0.0, 0.0, 1.0, DqVector(1.0, 0.0))

    @pytest.mark.parametrize("r, l", [(-0.01, 0.16), (0.02, 0.0), (0.02, -0.1)])
    def test_invalid_impedance(self, r, l):
        with pytest.raises(ValueError):
            Impedance(r=r, l=l)

    def test_apply_requires_positive_frequency(self, z_c):
        with pytest.raises(ValueError):
            impedance_apply(z_c, 0.0, DqVector(1.0, 0.0))


class TestRotation:

    def test_quarter_turn(self):
        v = rotate(DqVector(1.0, 0.0), math.pi / 2)
        assert v.d == pytest.approx(0.0, abs=1e-12)
        assert v.q == pytest.approx(1.0)

    def test_preserves_amplitude(self):
        v = DqVector(0.3, 0.4)
        assert rotate(v, 2.1).amplitude() == pytest.approx(0.5)


class TestPark:

    def test_inverse_at_zero_angle(self):
        assert park_inverse(0.0, Dq0Vector(1.0, 0.0, 0.0)) == pytest.approx((1.0, -0.5, -0.5))

    def test_inverse_zero_sequence(self):
        assert park_inverse(0.0, Dq0Vector(0.0, 0.0, 0.3)) == pytest.approx((0.3, 0.3, 0.3))

    def test_inverse_quarter_turn(self):
        s = math.sqrt(3.0) / 2.0
        assert park_inverse(math.pi / 2, Dq0Vector(1.0, 0.0, 0.0)) == \
            pytest.approx((0.0, s, -s), abs=1e-12)

    def test_forward_at_zero_angle(self):
        v = park_forward(0.0, (1.0, -0.5, -0.5))
        assert v.as_array() == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.7, 2.5, -1.2])
    def test_forward_common_mode(self, theta):
        v = park_forward(theta, (0.2, 0.2, 0.2))
        assert v.as_array() == pytest.approx([0.0, 0.0, 0.2], abs=1e-12)

    def test_forward_quarter_turn(self):
        s = math.sqrt(3.0) / 2.0
        v = park_forward(math.pi / 2, (0.0, s, -s))
        assert v.as_array() == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_amplitude_invariant(self):
        phases = park_inverse(1.1, Dq0Vector(0.6, 0.8, 0.0))
        assert max(abs(p) for p in phases) <= 1.0 + 1e-12

    def test_rejects_non_finite_angle(self):
        with pytest.raises(ValueError):
            park_inverse(math.nan, Dq0Vector(1.0, 0.0, 0.0))
