"""Numba inner loops for the ideal-gas fast path.

The semidiscrete right-hand side and the RK4 advance are duplicated here in
scalar-loop form so the hot path runs compiled; the numpy implementation in
``solver`` stays the reference and the two are cross-checked in the tests.
Only the ideal law is special-cased (its pressure and viscosity reduce to
powers, and gamma = 3/2 to square roots); everything else takes the
interpreted path.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONPOSITIVE_DENSITY = 1
STATUS_NONFINITE = 2

POLICY_OPEN = 0
POLICY_FULL = 1
POLICY_FRICTION = 2


@njit(cache=True, nogil=True)
def _rhs_ideal(rho, v, u, c, gamma, A, P_ext, dm, sigma, drho, dv):
    n = rho.shape[0]
    for i in range(n):
        ri = rho[i]
        w = ri * np.sqrt(ri) if gamma == 1.5 else ri ** gamma
        mu = A * np.sqrt(w / ri)
        dvdm = (v[i + 1] - v[i]) / dm
        sigma[i] = mu * ri * dvdm - c * w
        drho[i] = -ri * ri * dvdm
    for i in range(1, n):
        dv[i] = (sigma[i] - sigma[i - 1]) / dm
    dv[0] = u + P_ext + sigma[0]
    dv[n] = -P_ext - sigma[n - 1]


@njit(cache=True, nogil=True)
def _stable_dt_ideal(rho, c, gamma, A, dm, cfl_a, cfl_v, dt_max):
    ac = 0.0
    vis = 0.0
    for i in range(rho.shape[0]):
        ri = rho[i]
        w = ri * np.sqrt(ri) if gamma == 1.5 else ri ** gamma
        a_i = ri * np.sqrt(c * gamma * w / ri)
        m_i = A * np.sqrt(w / ri) * ri
        if a_i > ac:
            ac = a_i
        if m_i > vis:
            vis = m_i
    dt = dt_max
    d = cfl_a * dm / ac
    if d < dt:
        dt = d
    d = cfl_v * dm * dm / (2.0 * vis)
    if d < dt:
        dt = d
    return dt


@njit(cache=True, nogil=True)
def advance_ideal(rho, v, a, t, t_target,
                  c, gamma, A, P_ext, rho_star,
                  policy_code, gain_R, weight_r,
                  cfl_a, cfl_v, dt_max, dm):
    """Advance (rho, v, a) in place to t_target with RK4 and per-step stable dt.

    The control input is sampled from the pre-step state and held through
    the four stages.  Returns (a, t, n_steps, u_time_integral, rho_min,
    rho_max, status); the density extrema are tracked over every accepted
    step, not just at sample times.
    """
    n = rho.shape[0]
    sigma = np.empty(n)
    dr1 = np.empty(n)
    dr2 = np.empty(n)
    dr3 = np.empty(n)
    dr4 = np.empty(n)
    dv1 = np.empty(n + 1)
    dv2 = np.empty(n + 1)
    dv3 = np.empty(n + 1)
    dv4 = np.empty(n + 1)
    rho_s = np.empty(n)
    v_s = np.empty(n + 1)

    rs_e = rho_star ** (0.5 * (gamma - 1.0))
    ck = 2.0 * A / (gamma - 1.0)

    n_steps = 0
    u_int = 0.0
    rmin = 1e300
    rmax = 0.0
    status = STATUS_OK

    while True:
        rem = t_target - t
        if rem <= 0.0:
            break
        dt = _stable_dt_ideal(rho, c, gamma, A, dm, cfl_a, cfl_v, dt_max)
        last = dt >= rem
        if last:
            dt = rem

        if policy_code == POLICY_FULL:
            r0 = rho[0]
            w0 = r0 * np.sqrt(r0) if gamma == 1.5 else r0 ** gamma
            k0 = ck * (np.sqrt(w0 / r0) - rs_e)
            u = -gain_R * ((weight_r + 1.0) * v[0] + k0)
        elif policy_code == POLICY_FRICTION:
            u = -gain_R * v[0]
        else:
            u = 0.0

        _rhs_ideal(rho, v, u, c, gamma, A, P_ext, dm, sigma, dr1, dv1)
        a1 = v[0]
        for i in range(n):
            rho_s[i] = rho[i] + 0.5 * dt * dr1[i]
        for i in range(n + 1):
            v_s[i] = v[i] + 0.5 * dt * dv1[i]
        _rhs_ideal(rho_s, v_s, u, c, gamma, A, P_ext, dm, sigma, dr2, dv2)
        a2 = v_s[0]
        for i in range(n):
            rho_s[i] = rho[i] + 0.5 * dt * dr2[i]
        for i in range(n + 1):
            v_s[i] = v[i] + 0.5 * dt * dv2[i]
        _rhs_ideal(rho_s, v_s, u, c, gamma, A, P_ext, dm, sigma, dr3, dv3)
        a3 = v_s[0]
        for i in range(n):
            rho_s[i] = rho[i] + dt * dr3[i]
        for i in range(n + 1):
            v_s[i] = v[i] + dt * dv3[i]
        _rhs_ideal(rho_s, v_s, u, c, gamma, A, P_ext, dm, sigma, dr4, dv4)
        a4 = v_s[0]

        sixth = dt / 6.0
        for i in range(n):
            rho[i] += sixth * (dr1[i] + 2.0 * dr2[i] + 2.0 * dr3[i] + dr4[i])
        for i in range(n + 1):
            v[i] += sixth * (dv1[i] + 2.0 * dv2[i] + 2.0 * dv3[i] + dv4[i])
        a += sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        u_int += u * dt
        n_steps += 1
        t = t_target if last else t + dt

        step_min = 1e300
        step_max = 0.0
        for i in range(n):
            ri = rho[i]
            if not (ri > 0.0):       # catches NaN as well
                status = STATUS_NONPOSITIVE_DENSITY
            else:
                if ri < step_min:
                    step_min = ri
                if ri > step_max:
                    step_max = ri
        for i in range(n + 1):
            vi = v[i]
            if not (-1e300 < vi < 1e300):
                status = STATUS_NONFINITE
        if status != STATUS_OK:
            break
        if step_min < rmin:
            rmin = step_min
        if step_max > rmax:
            rmax = step_max

    return a, t, n_steps, u_int, rmin, rmax, status
