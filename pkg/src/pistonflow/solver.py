"""Explicit time integration of the coupled piston-gas system.

In the mass coordinate the system is a fixed-domain ODE system: with
stress sigma = mu(rho)*rho*dv/dm - P(rho) per cell,

    d rho_i / dt = -rho_i^2 (v_{i+1} - v_i) / dm          (cells)
    d v_j  / dt  = (sigma_right - sigma_left) / dm         (interior nodes)
    d v_0  / dt  = u + P_ext + sigma_first                 (left piston)
    d v_N  / dt  = -P_ext - sigma_last                     (right piston)
    d a    / dt  = v_0

The classical RK4 step uses a per-step stable dt combining the acoustic and
viscous explicit restrictions; the control input is sampled from the
pre-step state and held across the four stages (sample-and-hold actuator).

The discrete momentum  v_0 + v_N + dm * sum(interior v)  obeys
d/dt = u exactly for this right-hand side, and because it is linear in the
state RK4 preserves the balance to roundoff; ``momentum`` uses that
quadrature so the open-loop conservation audit is exact rather than
order-limited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import _kernels
from .control import ControlPolicy, Friction, FullFeedback, OpenLoop, control_input
from .gas import GasModel
from .lyapunov import clf_report, deviation_squared
from .state import SystemState, deviation_norm


class DivergedStateError(RuntimeError):
    """The state left the computable regime (non-finite values)."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6g}")
        self.t = t


class DensityPositivityError(DivergedStateError):
    """A time step produced a non-positive density."""


@dataclass(frozen=True)
class SolverConfig:
    N: int = 200
    cfl_acoustic: float = 0.5
    cfl_viscous: float = 0.5
    t_end: float = 5.0
    output_every: float = 0.01
    dt_max: float = 1.0

    def __post_init__(self):
        if self.N < 4:
            raise ValueError(f"need N >= 4 cells, got {self.N}")
        if not (0.0 < self.cfl_acoustic <= 1.0) or not (0.0 < self.cfl_viscous <= 1.0):
            raise ValueError("CFL safety factors must lie in (0, 1]")
        if self.t_end <= 0.0 or self.output_every <= 0.0 or self.dt_max <= 0.0:
            raise ValueError("t_end, output_every, and dt_max must be positive")


@dataclass(frozen=True)
class StepDiagnostics:
    dt: float
    max_dv_dm: float
    rho_min: float
    rho_max: float
    momentum: float
    u: float


def momentum(state: SystemState) -> float:
    """Piston plus gas momentum with the discretely conserved quadrature."""
    v = state.v
    return float(v[0] + v[-1] + np.sum(v[1:-1]) * state.dm)


def semidiscrete_rhs(state: SystemState, model: GasModel, u: float):
    """Time derivatives (drho, dv, da) of the mass-grid system."""
    if not math.isfinite(u):
        raise ValueError("control input must be finite")
    rho, v = state.rho, state.v
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(v))):
        raise DivergedStateError("non-finite state", state.t)
    return _rhs_arrays(rho, v, u, model, state.dm)


def _rhs_arrays(rho, v, u, model, dm):
    dv_dm = (v[1:] - v[:-1]) / dm
    sigma = np.asarray(model.mu(rho), dtype=float) * rho * dv_dm \
        - np.asarray(model.P(rho), dtype=float)
    drho = -rho * rho * dv_dm
    dv = np.empty(v.size)
    dv[1:-1] = (sigma[1:] - sigma[:-1]) / dm
    dv[0] = u + model.P_ext + sigma[0]
    dv[-1] = -model.P_ext - sigma[-1]
    return drho, dv, float(v[0])


def stable_dt(state: SystemState, model: GasModel, config: SolverConfig) -> float:
    """Explicit stability bound: acoustic and viscous restrictions in mass coords.

    dt = min(dt_max, cfl_a * dm / max(rho * sqrt(P')),
             cfl_v * dm^2 / (2 * max(mu * rho))).
    """
    rho, dm = state.rho, state.dm
    acoustic = float(np.max(rho * np.sqrt(np.asarray(model.dP(rho), dtype=float))))
    viscous = float(np.max(np.asarray(model.mu(rho), dtype=float) * rho))
    return min(config.dt_max,
               config.cfl_acoustic * dm / acoustic,
               config.cfl_viscous * dm * dm / (2.0 * viscous))


def _rk4(rho, v, a, dt, u, model, dm):
    dr1, dv1, da1 = _rhs_arrays(rho, v, u, model, dm)
    dr2, dv2, da2 = _rhs_arrays(rho + 0.5 * dt * dr1, v + 0.5 * dt * dv1, u, model, dm)
    dr3, dv3, da3 = _rhs_arrays(rho + 0.5 * dt * dr2, v + 0.5 * dt * dv2, u, model, dm)
    dr4, dv4, da4 = _rhs_arrays(rho + dt * dr3, v + dt * dv3, u, model, dm)
    sixth = dt / 6.0
    rho_new = rho + sixth * (dr1 + 2.0 * dr2 + 2.0 * dr3 + dr4)
    v_new = v + sixth * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
    a_new = a + sixth * (da1 + 2.0 * da2 + 2.0 * da3 + da4)
    return rho_new, v_new, a_new


def step(state: SystemState, model: GasModel, policy: ControlPolicy,
         config: SolverConfig):
    """One RK4 step of size stable_dt; returns (new state, diagnostics)."""
    u = control_input(policy, float(state.rho[0]), float(state.v[0]), model)
    dt = stable_dt(state, model, config)
    dv_dm = (state.v[1:] - state.v[:-1]) / state.dm
    rho_new, v_new, a_new = _rk4(state.rho, state.v, state.a, dt, u, model, state.dm)
    new = SystemState(a=a_new, rho=rho_new, v=v_new, t=state.t + dt)
    diag = StepDiagnostics(dt=dt, max_dv_dm=float(np.max(np.abs(dv_dm))),
                           rho_min=float(np.min(rho_new)), rho_max=float(np.max(rho_new)),
                           momentum=momentum(new), u=u)
    if np.any(rho_new <= 0.0) or not np.all(np.isfinite(rho_new)):
        raise DensityPositivityError(
            f"density positivity violated (dt = {dt:.3e}, min rho = {diag.rho_min:.3e})",
            new.t)
    if not np.all(np.isfinite(v_new)):
        raise DivergedStateError("velocity became non-finite", new.t)
    return new, diag


# ---------------------------------------------------------------------------
# trajectory integration


@dataclass
class TrajectoryRecord:
    """Sampled time series of a simulation plus global audit quantities.

    ``status`` is "completed" or "diverged@t=..."; on divergence the arrays
    hold the samples collected up to the failure.  ``rho_min_global`` and
    ``rho_max_global`` track the density extrema over *every* accepted step,
    not only the sampled instants, and ``u_time_integral`` accumulates
    integral u dt exactly as applied, so momentum(final) - momentum(initial)
    - u_time_integral is a roundoff-level balance residual.
    """

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    adot: np.ndarray
    bdot: np.ndarray
    u: np.ndarray
    U: np.ndarray
    E: np.ndarray
    W: np.ndarray
    V: np.ndarray
    dE_dt: np.ndarray
    dW_dt: np.ndarray
    dV_dt: np.ndarray
    xi: np.ndarray
    x_norm: np.ndarray
    momentum: np.ndarray
    rho_min: np.ndarray
    rho_max: np.ndarray
    status: str
    clf_r: float
    n_steps: int
    u_time_integral: float
    rho_min_global: float
    rho_max_global: float
    initial_state: SystemState
    final_state: SystemState
    states: Optional[List[SystemState]] = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    COLUMNS = ("t", "a", "b", "adot", "bdot", "u", "U", "E", "W", "V",
               "dE_dt", "dW_dt", "dV_dt", "xi", "x_norm", "momentum",
               "rho_min", "rho_max")

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(name)
        return getattr(self, name)


def _sample_times(t0: float, config: SolverConfig) -> np.ndarray:
    n = int(math.floor(config.t_end / config.output_every + 1e-9))
    times = t0 + config.output_every * np.arange(n + 1, dtype=float)
    t_final = t0 + config.t_end
    if times[-1] < t_final - 1e-12 * max(1.0, config.t_end):
        times = np.append(times, t_final)
    else:
        times[-1] = t_final
    return times


def _policy_code(policy: ControlPolicy):
    if isinstance(policy, OpenLoop):
        return _kernels.POLICY_OPEN, 0.0, 0.0
    if isinstance(policy, FullFeedback):
        return _kernels.POLICY_FULL, policy.R, policy.r
    if isinstance(policy, Friction):
        return _kernels.POLICY_FRICTION, policy.R, 0.0
    return None


def _advance_python(rho, v, a, t, t_target, model, policy, config, dm):
    """Reference advance loop; mirrors _kernels.advance_ideal step for step."""
    n_steps = 0
    u_int = 0.0
    rmin, rmax = np.inf, 0.0
    status = _kernels.STATUS_OK
    cfg_state = SystemState(a=a, rho=rho, v=v, t=t)  # reuses arrays for stable_dt
    while True:
        rem = t_target - t
        if rem <= 0.0:
            break
        cfg_state.rho, cfg_state.v = rho, v
        dt = stable_dt(cfg_state, model, config)
        last = dt >= rem
        if last:
            dt = rem
        u = control_input(policy, float(rho[0]), float(v[0]), model)
        rho, v, a = _rk4(rho, v, a, dt, u, model, dm)
        u_int += u * dt
        n_steps += 1
        t = t_target if last else t + dt
        if np.any(~(rho > 0.0)):
            status = _kernels.STATUS_NONPOSITIVE_DENSITY
            break
        if not np.all(np.isfinite(v)):
            status = _kernels.STATUS_NONFINITE
            break
        rmin = min(rmin, float(np.min(rho)))
        rmax = max(rmax, float(np.max(rho)))
    return rho, v, a, t, n_steps, u_int, rmin, rmax, status


def simulate(initial: SystemState, model: GasModel, policy: ControlPolicy,
             config: SolverConfig, clf_r: Optional[float] = None,
             store_states: bool = False) -> TrajectoryRecord:
    """Advance to t_end, sampling the functionals every output_every.

    ``clf_r`` is the weight used for the CLF column; it defaults to the
    policy's own weight (1.0 for the open loop).  Divergence does not raise:
    the record is returned with the partial samples and a flagged status.
    With ``store_states`` the full state at every sample time is kept on the
    record for offline audits.
    """
    initial.validate()
    if initial.n_cells != config.N:
        raise ValueError(f"state has {initial.n_cells} cells but config.N = {config.N}")
    r = clf_r if clf_r is not None else float(getattr(policy, "r", 1.0))

    coded = _policy_code(policy)
    fast = model.ideal is not None and coded is not None

    rho = initial.rho.copy()
    v = initial.v.copy()
    a, t = float(initial.a), float(initial.t)
    dm = initial.dm

    rows: List[list] = []
    states: List[SystemState] = []

    def record_sample():
        st = SystemState(a=a, rho=rho.copy(), v=v.copy(), t=t)
        u_now = control_input(policy, float(rho[0]), float(v[0]), model)
        rep = clf_report(st, model, r, u_now)
        rows.append([t, a, st.b, float(v[0]), float(v[-1]), u_now,
                     rep.U, rep.E, rep.W, rep.V, rep.dE_dt, rep.dW_dt, rep.dV_dt,
                     deviation_squared(st, model), deviation_norm(st, model),
                     momentum(st), float(np.min(rho)), float(np.max(rho))])
        if store_states:
            states.append(st)
        return st

    final_state = first_state = record_sample()
    n_steps_total = 0
    u_int_total = 0.0
    rmin_global = float(np.min(rho))
    rmax_global = float(np.max(rho))
    status = "completed"

    for target in _sample_times(t, config)[1:]:
        if fast:
            code, gain_R, weight_r = coded
            law = model.ideal
            a, t, n_steps, u_int, rmin, rmax, st_code = _kernels.advance_ideal(
                rho, v, a, t, target, law.c, law.gamma, law.A, model.P_ext,
                model.rho_star, code, gain_R, weight_r,
                config.cfl_acoustic, config.cfl_viscous, config.dt_max, dm)
        else:
            rho, v, a, t, n_steps, u_int, rmin, rmax, st_code = _advance_python(
                rho, v, a, t, target, model, policy, config, dm)
        n_steps_total += n_steps
        u_int_total += u_int
        if st_code != _kernels.STATUS_OK:
            kind = ("density-positivity-violation"
                    if st_code == _kernels.STATUS_NONPOSITIVE_DENSITY else "non-finite-state")
            status = f"diverged@t={t:.6g} ({kind})"
            final_state = SystemState(a=a, rho=rho.copy(), v=v.copy(), t=t)
            break
        rmin_global = min(rmin_global, rmin)
        rmax_global = max(rmax_global, rmax)
        final_state = record_sample()

    cols = np.array(rows, dtype=float).T
    names = TrajectoryRecord.COLUMNS
    data = {name: cols[i] for i, name in enumerate(names)}
    return TrajectoryRecord(status=status, clf_r=r, n_steps=n_steps_total,
                            u_time_integral=u_int_total,
                            rho_min_global=rmin_global, rho_max_global=rmax_global,
                            initial_state=first_state, final_state=final_state,
                            states=(states if store_states else None), **data)
