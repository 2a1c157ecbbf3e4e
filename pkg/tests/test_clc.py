"""
Tests for the conventional current-limiting baselines
"""

import pytest

from src.clc.baselines import (
    ClcParams, SccState, avi_impedance, avi_step, rlcc_reference, rlcc_step, scc_step
)
from src.frames.transforms import DqVector

DT = 2e-4
V_REF = DqVector(1.0, 0.0)
V_PCC_F = DqVector(1.0, 0.0)


class TestScc:

    def test_pass_through_below_threshold(self, z_c):
        v_c, state = scc_step(SccState(), V_REF, DqVector(0.5, 0.0), DqVector(0.5, 0.0),
                              V_PCC_F, DT, z_c)
        assert v_c is V_REF
        assert not state.active

    def test_engages_at_threshold(self, z_c):
        _, state = scc_step(SccState(), V_REF, DqVector(1.2, 0.0), DqVector(1.15, 0.0),
                            V_PCC_F, DT, z_c)
        assert state.active
        assert state.pi_integrator.d < 0.0

    def test_tracks_reference_with_feed_forward(self, z_c):
        i = DqVector(1.15, 0.0)
        v_c, state = scc_step(SccState(active=True), V_REF, i, i, V_PCC_F, DT, z_c)
        assert state.active
        assert (v_c.d, v_c.q) == pytest.approx((1.023, 0.184))

    def test_hysteresis(self, z_c):
        i_r = DqVector(1.0, 0.0)
        # still inside the hysteresis band
        _, state = scc_step(SccState(active=True), V_REF, DqVector(1.14, 0.0), i_r,
                            V_PCC_F, DT, z_c)
        assert state.active
        v_c, state = scc_step(state, V_REF, DqVector(1.1, 0.0), i_r, V_PCC_F, DT, z_c)
        assert not state.active
        assert v_c is V_REF
        assert state.pi_integrator == DqVector()

    def test_requires_positive_dt(self, z_c):
        with pytest.raises(ValueError):
            scc_step(SccState(), V_REF, DqVector(), DqVector(), V_PCC_F, 0.0, z_c)


class TestRlcc:

    def test_fictitious_reference_of_consistent_command(self, z_c):
        i = DqVector(0.5, 0.0)
        v_ref = DqVector(1.01, 0.08)
        i_r = rlcc_reference(v_ref, i, V_PCC_F, z_c, kp=0.342)
        assert (i_r.d, i_r.q) == pytest.approx((0.5, 0.0), abs=1e-12)

    def test_pass_through(self, z_c):
        v_ref = DqVector(1.01, 0.08)
        assert rlcc_step(v_ref, DqVector(0.5, 0.0), V_PCC_F, z_c) is v_ref

    def test_engaged(self, z_c):
        v_c = rlcc_step(DqVector(1.0, 0.0), DqVector(1.0, 0.0), DqVector(), z_c)
        # Z_c i + kp (1.18 - 1.0) on the d axis
        assert (v_c.d, v_c.q) == pytest.approx((0.02 + 0.342 * 0.18, 0.16))

    def test_requires_positive_gain(self, z_c):
        with pytest.raises(ValueError):
            rlcc_reference(V_REF, DqVector(), V_PCC_F, z_c, kp=0.0)


class TestAvi:

    def test_impedance(self):
        z_v = avi_impedance(DqVector(1.28, 0.0), K_X=10.0, eta=16.0, i_th=1.18)
        assert z_v.x_v == pytest.approx(1.0)
        assert z_v.r_v == pytest.approx(0.0625)

    def test_zero_below_threshold(self):
        z_v = avi_impedance(DqVector(1.0, 0.0), 10.0, 16.0, 1.18)
        assert z_v.x_v == 0.0 and z_v.r_v == 0.0
        assert avi_step(V_REF, DqVector(1.0, 0.0)) is V_REF

    def test_voltage_drop(self):
        v_c = avi_step(V_REF, DqVector(1.28, 0.0))
        assert (v_c.d, v_c.q) == pytest.approx((1.0 - 0.08, -1.28))

    @pytest.mark.parametrize("K_X, eta", [(-1.0, 16.0), (10.0, 0.0)])
    def test_invalid_parameters(self, K_X, eta):
        with pytest.raises(ValueError):
            avi_impedance(DqVector(1.3, 0.0), K_X, eta, 1.18)


def test_params_defaults():
    params = ClcParams()
    assert params.i_th - params.h_scc == pytest.approx(1.13)
