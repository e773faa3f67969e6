"""Shared oracles and random-state generators for the test suite.

Everything here is deliberately independent of the library's own numerical
paths: fixed-step quadrature instead of the adaptive rule, grid scans
instead of bracketed root solves, and direct construction of states on the
mass grid.
"""

import numpy as np

from pistonflow import clf_value
from pistonflow.state import SystemState, mass_centers, mass_nodes


def simpson_fixed(f, a, b, panels):
    """Composite Simpson with a fixed even panel count (vectorized f)."""
    if panels % 2:
        panels += 1
    x = np.linspace(a, b, panels + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / panels
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))


def ideal_Q(c, gamma, rho_star, rho):
    rho = np.asarray(rho, dtype=float)
    return (c / (gamma - 1.0)) * (rho ** gamma - gamma * rho_star ** (gamma - 1.0) * rho
                                  + (gamma - 1.0) * rho_star ** gamma)


def ideal_k(A, gamma, rho_star, rho):
    e = 0.5 * (gamma - 1.0)
    return (2.0 * A / (gamma - 1.0)) * (np.asarray(rho, dtype=float) ** e - rho_star ** e)


def barrier_grid_scan(model, S, r, lo=1e-6, hi=1e6, per_decade=4000):
    """Brute-force barrier bounds: cumulative quadrature of the barrier
    integrand on a dense log grid plus interpolation of the root equations.

    Only valid for ideal-law models (uses the closed forms to stay
    independent of the library's quadrature path).  Returns a dict with the
    same roots as lyapunov.barrier_bounds.
    """
    law = model.ideal
    rs = model.rho_star
    decades = np.log10(hi) - np.log10(lo)
    n = int(decades * per_decade) + 1
    l = np.geomspace(lo * rs, hi * rs, n)
    q = np.maximum(ideal_Q(law.c, law.gamma, rs, l), 0.0)
    mu = law.A * l ** (0.5 * (law.gamma - 1.0))
    integrand = mu * l ** -1.5 * np.sqrt(q) * l          # d rho = l d(ln l)
    s = np.log(l)
    G = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s))])
    G -= np.interp(np.log(rs), s, G)                     # anchor G(rho_star) = 0
    k = ideal_k(law.A, law.gamma, rs, l)

    def inv(values, target):
        return float(np.interp(target, values, l))

    osc = 2.0 * S / np.sqrt(r)
    k_cap = 2.0 * np.sqrt((1.0 + 1.0 / r) * S)
    rho1 = inv(k, k_cap)
    rho_max = inv(G, float(np.interp(np.log(rho1), s, G)) + osc)
    g_half = float(np.interp(np.log(0.5 * rs), s, G))
    rho2 = inv(G, g_half - osc)
    pinch = (r + 1.0) / (S + 1.0) * float(ideal_Q(law.c, law.gamma, rs, 0.5 * rs))
    rho3 = inv(G, float(np.interp(np.log(pinch), s, G)) - osc)
    return {"rho1": rho1, "rho_max": rho_max, "rho2": rho2, "rho3": rho3,
            "rho_min": min(0.5 * rs, rho2, rho3)}


def random_smooth_state(rng, n_cells, rho_star=1.0, amp_rho=0.3, amp_v=0.3):
    """Smooth random valid state: low-mode Fourier perturbations, positive rho."""
    th_c = mass_centers(n_cells)
    th_n = mass_nodes(n_cells)
    rho = np.full(n_cells, rho_star)
    v = np.zeros(n_cells + 1)
    for q in range(1, 5):
        rho += (rho_star * amp_rho * rng.uniform(-1.0, 1.0) / q ** 2
                * np.cos(np.pi * q * th_c + rng.uniform(0.0, 2.0 * np.pi)))
        v += (amp_v * rng.uniform(-1.0, 1.0) / q ** 2
              * np.cos(np.pi * q * th_n + rng.uniform(0.0, 2.0 * np.pi)))
    v += amp_v * rng.uniform(-0.5, 0.5)
    rho = np.maximum(rho, 0.05 * rho_star)
    return SystemState(a=float(rng.normal()), rho=rho, v=v)


def random_state_in_sublevel(rng, model, n_cells, S, r):
    """Random valid state with CLF value at most S (shrinks the perturbation)."""
    st = random_smooth_state(rng, n_cells, rho_star=model.rho_star)
    for _ in range(200):
        if clf_value(st, model, r) <= S:
            return st
        st = SystemState(a=st.a,
                         rho=model.rho_star + 0.6 * (st.rho - model.rho_star),
                         v=0.6 * st.v)
    raise AssertionError("could not shrink a random state into the sublevel set")
