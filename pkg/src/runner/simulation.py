"""
Closed-Loop Scenario Simulation
Plant integration at the plant step with the GFM controller, the selected
current-limiting stage and the grid controllers sampled and held at the
control step
"""

import cmath
import logging
from dataclasses import replace
from typing import Dict, Optional, Tuple

import numpy as np

from src.clc.baselines import ClcKind, SccState, avi_step, rlcc_step, scc_step
from src.frames.transforms import OMEGA_N, Dq0Vector, DqVector, park_inverse
from src.gfm.controller import GfmController, GfmOutput
from src.gfm.pll import PllState
from src.plant.converter import NonStationaryState, StationaryState
from src.plant.grids import GflGridState, gfl_grid_step
from src.plant.integrator import rk4_step
from src.plant.equilibrium import solve_operating_point
from src.plant.network import GridKind, PlantInputs, PlantModel, as_complex, as_dq
from src.runner.config import ScenarioConfig
from src.runner.trace import SimTrace, TraceRecord
from src.sfilter.certificate import PolynomialCertificate, default_certificates, eval_certificate
from src.sfilter.safety_filter import SafetyFilter

logger = logging.getLogger(__name__)

DELTA_SM_INDEX = 11


class SimulationDivergedError(ValueError):
    """A plant or controller state became non-finite or grew past the divergence limit"""

    def __init__(self, t: float, last_record: Optional[TraceRecord] = None):
        self.t = t
        self.last_record = last_record
        detail = f"; last finite record {last_record}" if last_record else ""
        super().__init__(f"simulation diverged at t={t:.6f} s{detail}")


class ScenarioSimulation:
    """
    One scenario from settled initial conditions to t_end

    Simulated time starts settle_time before the trace clock; the trace
    records every control sample with trace time 0 <= t <= t_end and the
    fault is active on [t_fault_on, t_fault_off) of trace time.
    """

    def __init__(self, cfg: ScenarioConfig,
                 certificates: Optional[Dict[str, PolynomialCertificate]] = None):
        """
        Initialize ScenarioSimulation

        Args:
            cfg: Scenario configuration
            certificates: Barrier and Lyapunov-like certificates; packaged
                table when None
        """
        self.cfg = cfg
        prm = cfg.params
        self.certificates = certificates or default_certificates()
        self.model = PlantModel(prm.network_params(cfg.grid), cfg.grid)
        self.z_c = prm.z_c
        self.clc_params = prm.clc_params()
        self.gfl_params = prm.gfl_params()
        self.safety_filter = SafetyFilter(prm.filter_params(hold_time=cfg.dt_ctrl), self.z_c,
                                          self.certificates)
        self.use_clf = cfg.clc is ClcKind.SF

        self.x, self.gfm, self.gfl, v_c = self._operating_point()
        self.inputs = PlantInputs(v_c=v_c, e_grid=self._grid_source(), p_m=prm.grid.p_m,
                                  i_r_gfl=prm.grid.i_r_gfl, fault_active=False)
        self.scc = SccState()
        self.fault_active = False
        self.statistics = {"control_steps": 0, "active_steps": 0, "fault_events": 0}

    def _grid_source(self) -> complex:
        if self.cfg.grid is GridKind.LOW_INERTIA:
            return as_complex(self._e_gfl)
        return 1 + 0j

    def _operating_point(self) -> Tuple[np.ndarray, GfmController, GflGridState, complex]:
        """
        Exact droop equilibrium, with every controller state set one control
        sample before t = 0 so that the first sample lands on it
        """
        cfg, prm = self.cfg, self.cfg.params
        g = prm.grid
        gfm_params = prm.gfm_params()
        op = solve_operating_point(cfg.grid, self.model.params, gfm_params, g.p_m, g.i_r_gfl)
        omega = op.omega
        lead = OMEGA_N * omega * cfg.dt_ctrl
        theta_v, theta_vc = cmath.phase(op.v), cmath.phase(op.v_c)

        x = PlantModel.initial_state(i=op.i, i_g=op.i_g, i_lf=op.i_lf, v_cf=op.v_cf,
                                     omega_sm=omega, delta_sm=op.delta_sm, v_dc=1.0)

        def locked_pll() -> PllState:
            return PllState(theta=theta_v - lead, integrator=omega - 1.0,
                            omega_filtered=omega, omega=omega)

        gfm = GfmController(
            gfm_params, cfg.gfm, self.z_c, prm.limits.i_th, pll=locked_pll(),
            omega_c=omega, theta_c=theta_vc - lead, q_f=op.q,
            v_pcc_f=as_dq(op.v * cmath.exp(-1j * theta_vc)), theta_r=theta_vc - theta_v,
        )

        to_pll = cmath.exp(-1j * theta_v)
        i_pll = -op.i_g * to_pll
        reactance = omega * self.gfl_params.z_gfl.l
        decoupling = complex(-reactance * i_pll.imag, reactance * i_pll.real)
        gfl = GflGridState(v_dc=1.0, pll=locked_pll(), dc_int=i_pll.real,
                           cc_int=as_dq((op.e - op.v) * to_pll - decoupling),
                           i_gfl=as_dq(-op.i_g), i_r_gfl=g.i_r_gfl)
        self._e_gfl = as_dq(op.e)
        logger.debug(f"Operating point: p={op.p:.4f}, q={op.q:.4f}, omega={omega:.5f}, "
                     f"theta_c={theta_vc:.4f}")
        return x, gfm, gfl, op.v_c

    def _limit(self, out: GfmOutput) -> Tuple[DqVector, bool, float, float]:
        """Terminal-voltage command of the current-limiting stage, with B and V"""
        cfg = self.cfg
        ref = out.reference
        v_ref = ref.v_cn_lim
        omega = out.omega_pll
        x = NonStationaryState(out.i, out.dv_pcc_f)
        z = StationaryState(ref.i_r, cfg.i_0)

        if cfg.clc in (ClcKind.SF, ClcKind.SF_NOCLF):
            v_c, diag = self.safety_filter.step(x, z, out.v_pcc, omega, self.use_clf)
            return v_c, diag.intervened, diag.B, diag.V

        B, _ = eval_certificate(self.certificates["B"], x, z)
        V, _ = eval_certificate(self.certificates["V"], x, z)
        if cfg.clc is ClcKind.SCC:
            v_c, self.scc = scc_step(self.scc, v_ref, out.i, ref.i_r, out.v_pcc_f,
                                     cfg.dt_ctrl, self.z_c, omega, self.clc_params)
            return v_c, self.scc.active, B, V
        if cfg.clc is ClcKind.RLCC:
            p = self.clc_params
            v_c = rlcc_step(v_ref, out.i, out.v_pcc_f, self.z_c, p.kp_cc, p.i_th, omega)
            return v_c, v_c != v_ref, B, V
        if cfg.clc is ClcKind.AVI:
            p = self.clc_params
            v_c = avi_step(v_ref, out.i, p.K_X, p.eta, p.i_th, omega)
            return v_c, v_c != v_ref, B, V
        return v_ref, False, B, V

    def _fault_on(self, n: int, n_on: int, n_off: int) -> bool:
        return self.cfg.fault and n_on <= n < n_off

    def _switch_fault(self, active: bool, t: float) -> None:
        if active == self.fault_active:
            return
        g = self.cfg.params.grid
        if active:
            logger.info(f"Fault applied at t={t:.4f} s")
        else:
            logger.info(f"Fault cleared at t={t:.4f} s")
            self.x = self.model.clear_fault(self.x)
        self.fault_active = active
        self.statistics["fault_events"] += 1
        self.inputs = self.inputs._replace(
            fault_active=active,
            p_m=0.0 if active else g.p_m,
            i_r_gfl=0.0 if active else g.i_r_gfl,
        )

    def _bounded(self, x: np.ndarray) -> bool:
        """Finite, with every state except the machine phase inside divergence_limit"""
        magnitudes = np.abs(np.delete(x, DELTA_SM_INDEX))
        return bool(np.all(np.isfinite(x)) and magnitudes.max() <= self.cfg.divergence_limit)

    def run(self) -> SimTrace:
        """
        Simulate the scenario

        Raises:
            SimulationDivergedError: If any state becomes non-finite or leaves
                the divergence limit
        """
        cfg = self.cfg
        n_sub = cfg.substeps
        k_settle = int(round(cfg.settle_time / cfg.dt_ctrl))
        k_end = k_settle + int(round(cfg.t_end / cfg.dt_ctrl))
        settle_steps = k_settle * n_sub
        n_on = settle_steps + int(round(cfg.t_fault_on / cfg.dt_plant))
        n_off = settle_steps + int(round(cfg.t_fault_off / cfg.dt_plant))
        trace = SimTrace(dt=cfg.dt_ctrl)
        logger.info(f"Running scenario {cfg.name} ({cfg.t_end} s after "
                    f"{cfg.settle_time} s settling)")

        for k in range(k_end + 1):
            s = k * cfg.dt_ctrl
            t = (k - k_settle) * cfg.dt_ctrl
            theta_net = OMEGA_N * s
            self._switch_fault(self._fault_on(k * n_sub, n_on, n_off), t)
            record = self._control_sample(theta_net, t)
            if k >= k_settle:
                if not record.is_finite() or record.i_norm > cfg.divergence_limit:
                    raise SimulationDivergedError(t, trace.last if len(trace) else None)
                trace.append(record)
            if k == k_end:
                break
            for j in range(n_sub):
                n = k * n_sub + j
                self._switch_fault(self._fault_on(n, n_on, n_off),
                                   (n - settle_steps) * cfg.dt_plant)
                inputs = self.inputs
                try:
                    self.x = rk4_step(self.x, lambda y: self.model.derivative(y, inputs),
                                      cfg.dt_plant)
                except ValueError as exc:
                    raise SimulationDivergedError(t, trace.last if len(trace) else None) \
                        from exc
            if not self._bounded(self.x):
                raise SimulationDivergedError(t + cfg.dt_ctrl,
                                              trace.last if len(trace) else None)

        logger.info(f"Scenario {cfg.name} finished: {len(trace)} records, "
                    f"{self.statistics['active_steps']} limiting samples")
        return trace

    def _control_sample(self, theta_net: float, t: float) -> TraceRecord:
        """Sample the plant, run every controller and hold the new commands"""
        cfg = self.cfg
        x = self.x
        v_pcc = self.model.pcc_voltage(x, self.inputs)
        i_net = PlantModel.converter_current(x)

        out = self.gfm.step(as_dq(v_pcc), as_dq(i_net), theta_net, cfg.dt_ctrl)
        v_c, active, B, V = self._limit(out)

        if cfg.grid is GridKind.LOW_INERTIA:
            self.gfl = replace(self.gfl, v_dc=float(x[12]),
                               i_gfl=as_dq(-PlantModel.grid_current(x)))
            self.gfl, e_gfl = gfl_grid_step(self.gfl, as_dq(v_pcc), cfg.dt_ctrl, theta_net,
                                            self.gfl_params)
            self.inputs = self.inputs._replace(e_grid=as_complex(e_gfl))

        self.inputs = self.inputs._replace(
            v_c=as_complex(self.gfm.to_network(v_c, theta_net)))
        self.statistics["control_steps"] += 1
        self.statistics["active_steps"] += int(active)

        phases = park_inverse(theta_net, Dq0Vector(i_net.real, i_net.imag, cfg.i_0))
        dv = v_c - out.reference.v_cn_lim
        return TraceRecord(
            t=t, i_d=out.i.d, i_q=out.i.q, i_norm=out.i.amplitude(),
            i_phase_max=max(abs(a) for a in phases),
            v_cd=v_c.d, v_cq=v_c.q, dv_d=dv.d, dv_q=dv.q,
            omega_pll=out.omega_pll, p=out.p, q=out.q, B=B, V=V, active=active,
        )


def run_simulation(cfg: ScenarioConfig,
                   certificates: Optional[Dict[str, PolynomialCertificate]] = None
                   ) -> Tuple[SimTrace, Dict]:
    """Run one scenario and return its trace and run statistics"""
    sim = ScenarioSimulation(cfg, certificates)
    trace = sim.run()
    stats = dict(sim.statistics)
    stats.update({f"filter_{k}": v for k, v in sim.safety_filter.statistics.items()})
    return trace, stats
