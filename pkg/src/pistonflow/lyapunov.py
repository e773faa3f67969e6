"""Energy functionals, dissipation identities, and density barrier bounds.

Four functionals certify the closed loop:

* ``potential_energy``   -- compression energy integrated over the gas,
* ``total_energy``       -- potential plus piston and gas kinetic energy,
* ``transformed_energy`` -- the same, written in the transformed momentum
  w = rho*v + d/dx(viscosity potential), whose evolution has no viscous
  term; its dissipation exposes the density gradient,
* ``clf_value``          -- transformed + r * total, the control Lyapunov
  functional.  Sublevel sets of the CLF confine the density inside the
  barrier bounds returned by ``barrier_bounds``.

All quadratures live on the mass grid and share one set of boundary
conventions with the solver: the density "at a piston" is the first/last
cell-center value, and gradients of cell quantities sit at nodes (one-sided
at the end nodes).  Keeping a single convention is what makes the discrete
dissipation identities land at the discretization order instead of drifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gas as gaslib
from .gas import GasModel, GasModelError
from .state import SystemState, deviation_terms, rho_at_nodes


class BarrierUnavailableError(RuntimeError):
    """The barrier root equations have no solution for this gas (admissibility fails)."""


@dataclass(frozen=True)
class LyapunovReport:
    """Functional values and their analytic rates at one instant.

    U <= E and U <= W always (the extra terms are sums of squares);
    V = W + r*E.  The rates are the analytic dissipation identities
    evaluated for the given control input.
    """

    U: float
    E: float
    W: float
    V: float
    r: float
    dE_dt: float
    dW_dt: float
    dV_dt: float


@dataclass(frozen=True)
class DissipationTerms:
    """Nonnegative pieces of the dissipation identities (all enter with minus signs).

    ``field_grad`` is the density-gradient dissipation, ``viscous`` the
    velocity-gradient dissipation, ``boundary_left``/``boundary_right`` the
    products (viscosity potential) * (pressure deviation) at the pistons,
    which are nonnegative because both factors share the sign of
    rho - rho_star.
    """

    field_grad: float
    viscous: float
    boundary_left: float
    boundary_right: float


def potential_energy(state: SystemState, model: GasModel) -> float:
    """Integral of the compression energy density over the gas volume."""
    q = gaslib.compression_energy_density(model, state.rho)
    return float(np.sum(q / state.rho) * state.dm)


def total_energy(state: SystemState, model: GasModel) -> float:
    """Piston kinetic + gas kinetic + potential energy."""
    v = state.v
    v_bar = 0.5 * (v[:-1] + v[1:])
    kinetic_gas = 0.5 * float(np.sum(v_bar ** 2)) * state.dm
    return 0.5 * v[0] ** 2 + 0.5 * v[-1] ** 2 + kinetic_gas + potential_energy(state, model)


def _transformed_momentum_nodes(state: SystemState, model: GasModel) -> tuple:
    """w = rho*v + d/dx(viscosity potential) at the nodes, plus node densities.

    The gradient uses the chain rule in the mass coordinate
    (d/dx = rho d/dm) with centered differences of the cell potential at
    interior nodes and one-sided differences from the two nearest cells at
    the end nodes.
    """
    k_cells = np.asarray(gaslib.viscosity_potential(model, state.rho), dtype=float)
    dm = state.dm
    n = state.n_cells
    rho_n = rho_at_nodes(state)
    dk_dm = np.empty(n + 1)
    if n >= 2:
        dk_dm[1:-1] = (k_cells[1:] - k_cells[:-1]) / dm
        dk_dm[0] = (k_cells[1] - k_cells[0]) / dm
        dk_dm[-1] = (k_cells[-1] - k_cells[-2]) / dm
    else:
        dk_dm[:] = 0.0
    w = rho_n * state.v + rho_n * dk_dm
    return w, rho_n, k_cells


def transformed_energy(state: SystemState, model: GasModel) -> float:
    """Mechanical energy in the transformed momentum variable."""
    w, rho_n, k_cells = _transformed_momentum_nodes(state, model)
    integrand = w ** 2 / rho_n ** 2            # (1/rho) w^2 dx = w^2/rho^2 dm
    weights = np.full(state.n_cells + 1, state.dm)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    int_w = float(np.sum(integrand * weights))
    left = 0.5 * (state.v[0] + k_cells[0]) ** 2
    right = 0.5 * (state.v[-1] - k_cells[-1]) ** 2
    return 0.5 * int_w + left + right + potential_energy(state, model)


def clf_value(state: SystemState, model: GasModel, r: float) -> float:
    """Control Lyapunov functional: transformed energy + r * total energy."""
    if r <= 0.0:
        raise ValueError(f"CLF weight r must be positive, got {r}")
    return transformed_energy(state, model) + r * total_energy(state, model)


def dissipation_breakdown(state: SystemState, model: GasModel) -> DissipationTerms:
    """The control-independent nonnegative dissipation pieces."""
    rho, v, dm = state.rho, state.v, state.dm
    dv_dm = (v[1:] - v[:-1]) / dm
    mu_c = np.asarray(model.mu(rho), dtype=float)
    viscous = float(np.sum(mu_c * rho * dv_dm ** 2) * dm)
    if state.n_cells >= 2:
        drho_dm = (rho[1:] - rho[:-1]) / dm
        rho_n = 0.5 * (rho[:-1] + rho[1:])
        coeff = np.asarray(model.dP(rho_n), dtype=float) * np.asarray(model.mu(rho_n), dtype=float)
        field_grad = float(np.sum(coeff / rho_n * drho_dm ** 2) * dm)
    else:
        field_grad = 0.0
    k_a = float(gaslib.viscosity_potential(model, float(rho[0])))
    k_b = float(gaslib.viscosity_potential(model, float(rho[-1])))
    boundary_left = k_a * (float(model.P(float(rho[0]))) - model.P_ext)
    boundary_right = k_b * (float(model.P(float(rho[-1]))) - model.P_ext)
    return DissipationTerms(field_grad=field_grad, viscous=viscous,
                            boundary_left=boundary_left, boundary_right=boundary_right)


def dissipation_rates(state: SystemState, model: GasModel, u: float, r: float) -> tuple:
    """Analytic dE/dt, dW/dt, dV/dt for the given control input.

    dE/dt = -int mu v_x^2 dx + v(a) u
    dW/dt = -int P' mu rho_x^2 / rho^2 dx - boundary terms + (v(a) + k(rho_a)) u
    dV/dt = dW/dt + r dE/dt
    """
    if not math.isfinite(u):
        raise ValueError("control input must be finite")
    terms = dissipation_breakdown(state, model)
    v_a = float(state.v[0])
    k_a = float(gaslib.viscosity_potential(model, float(state.rho[0])))
    dE = -terms.viscous + v_a * u
    dW = (-terms.field_grad - terms.boundary_right - terms.boundary_left
          + (v_a + k_a) * u)
    return dE, dW, dW + r * dE


def clf_report(state: SystemState, model: GasModel, r: float, u: float = 0.0) -> LyapunovReport:
    """Evaluate all functionals and analytic rates at one instant."""
    U = potential_energy(state, model)
    E = total_energy(state, model)
    W = transformed_energy(state, model)
    if r <= 0.0:
        raise ValueError(f"CLF weight r must be positive, got {r}")
    dE, dW, dV = dissipation_rates(state, model, u, r)
    return LyapunovReport(U=U, E=E, W=W, V=W + r * E, r=r, dE_dt=dE, dW_dt=dW, dV_dt=dV)


def deviation_squared(state: SystemState, model: GasModel) -> float:
    """Sum of the four squared deviation terms (same quadratures as the norm)."""
    q1, q2, q3, q4 = deviation_terms(state, model.rho_star)
    return q1 + q2 + q3 + q4


# ---------------------------------------------------------------------------
# barrier bounds


@dataclass(frozen=True)
class BarrierBounds:
    """Density bounds valid on the CLF sublevel set {V <= S}.

    The intermediate roots are kept for audit: ``rho1`` caps the boundary
    density through the viscosity potential, ``rho_max`` follows from the
    bounded oscillation of the barrier potential, and ``rho2``/``rho3``
    handle the two ways the density can dip low (somewhere at rho_star/2,
    or everywhere below it, where the mass constraint pins 1/(b-a)).
    """

    rho_min: float
    rho_max: float
    S: float
    r: float
    rho1: float
    rho2: float
    rho3: float


def barrier_bounds(model: GasModel, S: float, r: float) -> BarrierBounds:
    """Constructive density bounds on the sublevel set {V <= S}.

    All roots are solved on the strictly increasing barrier/viscosity
    potentials by bracketed expansion plus Brent.  The search is confined to
    densities within a factor 1e40 of rho_star; a bracket that fails to
    close there means the potentials do not diverge fast enough (the gas
    fails admissibility) and surfaces as BarrierUnavailableError.
    """
    if S < 0.0:
        raise ValueError(f"sublevel value S must be nonnegative, got {S}")
    if r <= 0.0:
        raise ValueError(f"CLF weight r must be positive, got {r}")
    rs = model.rho_star
    lo_cap, hi_cap = 1e-40 * rs, 1e40 * rs
    osc = 2.0 * S / math.sqrt(r)             # max oscillation of the barrier potential

    def G(rho):
        return gaslib.barrier_potential(model, rho)

    def invert(f, target, x0, what):
        return gaslib.invert_increasing(f, target, x0, lo_cap=lo_cap,
                                        hi_cap=hi_cap, what=what)

    try:
        k_cap = 2.0 * math.sqrt((1.0 + 1.0 / r) * S)
        if k_cap == 0.0:
            rho1 = rs
        else:
            rho1 = invert(lambda x: gaslib.viscosity_potential(model, x), k_cap, rs,
                          "viscosity potential")
        g_rho1 = G(rho1)
        rho_max = rho1 if osc == 0.0 else invert(G, g_rho1 + osc, rho1,
                                                 "barrier potential")

        g_half = G(0.5 * rs)
        rho2 = 0.5 * rs if osc == 0.0 else invert(G, g_half - osc, 0.5 * rs,
                                                  "barrier potential")

        pinch = (r + 1.0) / (S + 1.0) * gaslib.compression_energy_density(model, 0.5 * rs)
        rho3 = invert(G, G(pinch) - osc, min(pinch, rs), "barrier potential")
    except (GasModelError, gaslib.QuadratureError) as exc:
        raise BarrierUnavailableError(str(exc)) from exc

    rho_min = min(0.5 * rs, rho2, rho3)
    return BarrierBounds(rho_min=rho_min, rho_max=max(rho_max, rs), S=S, r=r,
                         rho1=rho1, rho2=rho2, rho3=rho3)
