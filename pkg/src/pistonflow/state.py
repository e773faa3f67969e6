"""System state on a fixed Lagrangian mass grid.

The gas carries unit total mass, so the mass coordinate m runs over [0, 1]
and the moving physical domain [a(t), b(t)] becomes the fixed interval
[0, 1]: density lives at the N cell centers m = (i + 1/2)/N and velocity at
the N + 1 nodes m = i/N, with the end nodes identified with the piston
velocities.  Mass conservation is structural (each cell holds exactly 1/N),
and the right piston position is derived from the density field rather than
stored, so it can never drift out of consistency:

    b = a + sum_i (1/N) / rho_i.

``normalize_profiles`` maps a state onto the unit reference interval in
*physical* arc length (not mass), which is the coordinate in which the
deviation norm and the convergence estimates are expressed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .gas import GasModel


class InvalidProfileError(ValueError):
    """A normalized profile cannot correspond to a physical state."""


@dataclass
class SystemState:
    """Piston position plus gas fields on the mass grid at one instant.

    ``rho`` has shape (N,), ``v`` shape (N+1,); ``v[0]`` and ``v[-1]`` are
    the left and right piston velocities (the gas sticks to the pistons).
    """

    a: float
    rho: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.array(self.rho, dtype=float)
        self.v = np.array(self.v, dtype=float)
        if self.rho.ndim != 1 or self.v.ndim != 1 or self.v.size != self.rho.size + 1:
            raise ValueError("need rho of shape (N,) and v of shape (N+1,)")
        if self.rho.size < 1:
            raise ValueError("need at least one cell")

    @property
    def n_cells(self) -> int:
        return self.rho.size

    @property
    def dm(self) -> float:
        return 1.0 / self.rho.size

    @property
    def adot(self) -> float:
        return float(self.v[0])

    @property
    def bdot(self) -> float:
        return float(self.v[-1])

    @property
    def length(self) -> float:
        return float(np.sum(self.dm / self.rho))

    @property
    def b(self) -> float:
        return self.a + self.length

    def validate(self) -> None:
        if not (np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.v))
                and math.isfinite(self.a) and math.isfinite(self.t)):
            raise ValueError("state contains non-finite values")
        if np.any(self.rho <= 0.0):
            raise ValueError("density must be positive everywhere")

    def copy(self) -> "SystemState":
        return SystemState(a=self.a, rho=self.rho.copy(), v=self.v.copy(), t=self.t)


def mass_nodes(n_cells: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_cells + 1)


def mass_centers(n_cells: int) -> np.ndarray:
    return (np.arange(n_cells) + 0.5) / n_cells


def node_positions(state: SystemState) -> np.ndarray:
    """Physical positions of the mass nodes; first is a, last is b."""
    x = np.empty(state.n_cells + 1)
    x[0] = state.a
    np.cumsum(state.dm / state.rho, out=x[1:])
    x[1:] += state.a
    return x


def cell_center_positions(state: SystemState) -> np.ndarray:
    x = node_positions(state)
    return 0.5 * (x[:-1] + x[1:])


def rho_at_nodes(state: SystemState) -> np.ndarray:
    """Density interpolated to the nodes; end nodes take the adjacent cell value."""
    rho = state.rho
    out = np.empty(rho.size + 1)
    out[0] = rho[0]
    out[-1] = rho[-1]
    out[1:-1] = 0.5 * (rho[:-1] + rho[1:])
    return out


# ---------------------------------------------------------------------------
# normalized profiles on the unit reference interval


@dataclass(frozen=True)
class NormalizedProfile:
    """Density/velocity resampled onto the N + 1 uniform theta nodes in [0, 1].

    The endpoint samples are exact: rho[0], v[0] are the boundary values at
    the left piston and rho[-1], v[-1] at the right one.
    """

    rho: np.ndarray
    v: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.rho.size - 1

    @property
    def theta_nodes(self) -> np.ndarray:
        return mass_nodes(self.n_cells)

    @property
    def mean_rho(self) -> float:
        """Trapezoid mean of the density over theta."""
        return float(np.trapezoid(self.rho, dx=1.0 / self.n_cells))


def normalize_profiles(state: SystemState) -> NormalizedProfile:
    """Resample the state onto the unit interval of normalized position.

    Works in positions relative to the left piston, so two states that
    differ only by a translation of ``a`` produce bit-identical profiles.
    Monotone piecewise-linear interpolation (with constant end extension)
    preserves density positivity; sampling at theta = 0 and 1 lands exactly
    on the boundary values.
    """
    n = state.n_cells
    xi = np.empty(n + 1)                      # node positions relative to a
    xi[0] = 0.0
    np.cumsum(state.dm / state.rho, out=xi[1:])
    length = xi[-1]
    xi_centers = 0.5 * (xi[:-1] + xi[1:])
    theta = mass_nodes(n)
    rho_t = np.interp(length * theta, xi_centers, state.rho)
    v_t = np.interp(length * theta, xi, state.v)
    return NormalizedProfile(rho=rho_t, v=v_t)


def deviation_terms(state: SystemState, rho_star: float) -> tuple:
    """The four squared building blocks of the deviation norm.

    Returns (piston kinetic, sup density deviation squared, mean-square gas
    velocity, length-weighted density-gradient energy), each evaluated with
    the shared mass-grid quadratures:

    * int v^2 dx       = sum over cells of dm * (v_i^2 + v_{i+1}^2) / (2 rho)
    * int rho_x^2 dx   = sum over interior nodes of dm * rho_n * (drho/dm)^2
      (the chain rule in the mass coordinate gives rho_x = rho * drho/dm).
    """
    rho, v, dm = state.rho, state.v, state.dm
    length = state.length
    q_piston = float(v[0] ** 2 + v[-1] ** 2)
    q_sup = float(np.max(np.abs(rho - rho_star)) ** 2)
    int_v2_dx = float(np.sum(0.5 * (v[:-1] ** 2 + v[1:] ** 2) / rho) * dm)
    q_vel = int_v2_dx / length
    if rho.size >= 2:
        drho_dm = (rho[1:] - rho[:-1]) / dm
        rho_n = 0.5 * (rho[:-1] + rho[1:])
        int_rhox2_dx = float(np.sum(rho_n * drho_dm ** 2) * dm)
    else:
        int_rhox2_dx = 0.0
    q_grad = length * int_rhox2_dx
    return q_piston, q_sup, q_vel, q_grad


def deviation_norm(state: SystemState, model: GasModel) -> float:
    """Distance of the normalized profiles from the uniform equilibrium pair.

    Square roots of the four deviation terms, summed: piston speeds, sup
    density deviation, mean-square velocity, and the length-weighted density
    gradient.  Zero exactly at equilibrium states.
    """
    q1, q2, q3, q4 = deviation_terms(state, model.rho_star)
    return math.sqrt(q1) + math.sqrt(q2) + math.sqrt(q3) + math.sqrt(q4)


def reconstruct(times, profiles: Sequence[NormalizedProfile], a0: float) -> tuple:
    """Rebuild the piston trajectories from a time series of profiles.

    The left piston integrates its own boundary velocity (trapezoid in
    time); the gap follows from unit total mass: b - a = 1 / mean(rho).
    Returns (a, b) arrays.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size != len(profiles):
        raise ValueError("times and profiles must have matching length")
    mean_rho = np.array([p.mean_rho for p in profiles])
    if np.any(mean_rho <= 0.0):
        raise InvalidProfileError("profile with non-positive mean density")
    v_left = np.array([float(p.v[0]) for p in profiles])
    if times.size == 1:
        a = np.array([a0])
    else:
        a = a0 + integrate.cumulative_trapezoid(v_left, times, initial=0.0)
    return a, a + 1.0 / mean_rho


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialConditions:
    """Smooth perturbation of the uniform equilibrium.

    Density shape 1 + eps_rho*cos(pi*q_rho*theta) and velocity
    eps_v*sin(pi*q_v*theta) + v_off over the initial domain [a0, a0+length0]
    (length0 defaults to the equilibrium gap 1/rho_star).  The density is
    rescaled multiplicatively so the total mass over that domain is exactly
    one before resampling onto the mass grid.
    """

    eps_rho: float = 0.0
    q_rho: float = 1.0
    eps_v: float = 0.0
    q_v: float = 1.0
    v_off: float = 0.0
    a0: float = 0.0
    length0: Optional[float] = None


def make_initial_state(ic: InitialConditions, model: GasModel, n_cells: int) -> SystemState:
    """Build a valid mass-grid state from the perturbation parameters.

    The theta edges of the equal-mass cells are found by inverting the
    closed-form cumulative mass of the cosine profile (Newton with a dense
    interpolated first guess); each cell density is the exact cell average
    mass/(physical width), which makes the implied gap b - a reproduce
    length0 exactly.
    """
    if n_cells < 1:
        raise ValueError("need at least one cell")
    if ic.eps_rho <= -1.0:
        raise ValueError(f"eps_rho = {ic.eps_rho} makes the density non-positive")
    rs = model.rho_star
    length0 = (1.0 / rs) if ic.length0 is None else float(ic.length0)
    if length0 <= 0.0:
        raise ValueError("initial gap must be positive")

    eps, q = float(ic.eps_rho), float(ic.q_rho)
    if eps == 0.0 or q == 0.0:
        # uniform density: the mass normalization absorbs any eps at q = 0
        theta = mass_nodes(n_cells)
        rho = np.full(n_cells, rs if ic.length0 is None else 1.0 / length0)
    else:
        def shape(th):
            return 1.0 + eps * np.cos(math.pi * q * th)

        def shape_integral(th):  # int_0^th shape
            return th + eps * np.sin(math.pi * q * th) / (math.pi * q)

        mean_shape = shape_integral(1.0)
        if mean_shape <= 0.0:
            raise ValueError("perturbation parameters give non-positive total mass")
        probe = np.linspace(0.0, 1.0, 8 * n_cells + 1)
        if np.min(shape(probe)) <= 0.0:
            raise ValueError(f"eps_rho = {eps} makes the density non-positive")

        # invert the cumulative mass fraction F(theta) = shape_integral/mean_shape
        targets = mass_nodes(n_cells)
        frac = shape_integral(probe) / mean_shape
        theta = np.interp(targets, frac, probe)
        for _ in range(60):
            resid = shape_integral(theta) / mean_shape - targets
            theta = np.clip(theta - resid * mean_shape / shape(theta), 0.0, 1.0)
            if np.max(np.abs(resid)) < 1e-14:
                break
        theta[0], theta[-1] = 0.0, 1.0
        widths = np.diff(theta)
        if np.any(widths <= 0.0):
            raise ValueError("equal-mass cell edges failed to stay monotone")
        rho = (1.0 / n_cells) / (length0 * widths)

    v = ic.eps_v * np.sin(math.pi * ic.q_v * theta) + ic.v_off
    state = SystemState(a=ic.a0, rho=rho, v=v, t=0.0)
    state.validate()
    return state
