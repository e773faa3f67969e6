"""Gas laws for the two-piston system and the potentials derived from them.

A gas is described by a barotropic pressure law P(rho) and a viscosity law
mu(rho), both positive on (0, inf) with P strictly increasing.  Everything
downstream (energies, barrier bounds, feedback gains) is built from three
derived quantities:

* ``compression_energy_density`` -- the convex potential that vanishes at
  the equilibrium density ``rho_star`` and penalizes compression and
  rarefaction,
* ``viscosity_potential``        -- the antiderivative of mu(rho)/rho whose
  spatial gradient absorbs the viscous stress in the transformed momentum
  balance,
* ``barrier_potential``          -- a strictly increasing coordinate that
  diverges as rho -> 0+ and rho -> inf; its boundedness on CLF sublevel
  sets is what keeps the density away from vacuum.

For the ideal isentropic law P = c*rho**gamma, mu = A*rho**((gamma-1)/2)
the first two have closed forms.  The barrier potential has no elementary
antiderivative and is always evaluated by adaptive quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, optimize


class GasModelError(ValueError):
    """The supplied laws cannot describe an admissible gas."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tol: float):
        super().__init__(f"{message} (achieved abs. tolerance {achieved_tol:.3e})")
        self.achieved_tol = achieved_tol


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class IdealGasLaw:
    """Parameters of the ideal isentropic closure P = c*rho**gamma."""

    c: float
    gamma: float
    A: float


@dataclass(frozen=True)
class GasModel:
    """Immutable gas description: laws, external pressure, equilibrium density.

    ``P``, ``dP`` and ``mu`` must accept floats and numpy arrays.  ``ideal``
    is set when the model was built from the ideal isentropic law, in which
    case the closed forms are used wherever they exist.
    """

    P: Callable
    dP: Callable
    mu: Callable
    P_ext: float
    rho_star: float
    quad: QuadratureConfig = DEFAULT_QUAD
    ideal: Optional[IdealGasLaw] = None


# ---------------------------------------------------------------------------
# construction


def solve_rho_star(P: Callable, P_ext: float, tol: float = 1e-12, x0: float = 1.0) -> float:
    """Solve P(rho) = P_ext for the equilibrium density of an increasing law.

    Brackets the root by geometric expansion from ``x0`` and polishes it
    with Brent's method; both stages are safe for any strictly increasing P.
    """
    if P_ext <= 0.0:
        raise GasModelError(f"external pressure must be positive, got {P_ext}")

    def resid(rho):
        return float(P(rho)) - P_ext

    lo = hi = float(x0)
    flo = fhi = resid(x0)
    while flo > 0.0:
        lo *= 0.5
        if lo < 1e-280:
            raise GasModelError(
                "bracket expansion failed toward rho -> 0: "
                "pressure law does not map (0, inf) onto (0, inf)")
        flo = resid(lo)
    while fhi < 0.0:
        hi *= 2.0
        if hi > 1e280:
            raise GasModelError(
                "bracket expansion failed toward rho -> inf: "
                "pressure law does not map (0, inf) onto (0, inf)")
        fhi = resid(hi)
    if lo == hi:
        root = lo
    else:
        root = optimize.brentq(resid, lo, hi, xtol=1e-300, rtol=max(tol, 1e-15))
    if abs(resid(root)) > 10.0 * tol * P_ext + 1e-300:
        raise GasModelError(
            f"root polish did not converge: |P(rho*) - P_ext| = {abs(resid(root)):.3e}")
    return float(root)


def ideal_gas(c: float = 1.0, gamma: float = 1.5, A: float = 1.0,
              P_ext: float = 1.0, quad: QuadratureConfig = DEFAULT_QUAD) -> GasModel:
    """Ideal isentropic gas: P = c*rho**gamma, mu = A*rho**((gamma-1)/2)."""
    if not (1.0 < gamma < 2.0):
        raise GasModelError(f"gamma must lie in (1, 2), got {gamma}")
    if c <= 0.0 or A <= 0.0:
        raise GasModelError("pressure and viscosity coefficients must be positive")
    if P_ext <= 0.0:
        raise GasModelError(f"external pressure must be positive, got {P_ext}")
    eta = 0.5 * (gamma - 1.0)

    def P(rho):
        return c * np.power(rho, gamma)

    def dP(rho):
        return c * gamma * np.power(rho, gamma - 1.0)

    def mu(rho):
        return A * np.power(rho, eta)

    rho_star = (P_ext / c) ** (1.0 / gamma)
    return GasModel(P=P, dP=dP, mu=mu, P_ext=P_ext, rho_star=rho_star,
                    quad=quad, ideal=IdealGasLaw(c=c, gamma=gamma, A=A))


def generic_gas(P: Callable, dP: Callable, mu: Callable, P_ext: float,
                quad: QuadratureConfig = DEFAULT_QUAD,
                check_range: tuple = (1e-6, 1e6)) -> GasModel:
    """Gas from arbitrary (vectorized) callables P, dP, mu.

    Validates positivity of P and mu and strict monotonicity of P on a
    log-spaced sample of ``check_range`` (scaled by the solved rho_star).
    """
    if P_ext <= 0.0:
        raise GasModelError(f"external pressure must be positive, got {P_ext}")
    rho_star = solve_rho_star(P, P_ext)
    probe = np.geomspace(check_range[0], check_range[1], 49) * rho_star
    pvals = np.asarray(P(probe), dtype=float)
    dpvals = np.asarray(dP(probe), dtype=float)
    muvals = np.asarray(mu(probe), dtype=float)
    if not np.all(np.isfinite(pvals)) or np.any(pvals <= 0.0):
        raise GasModelError("pressure law must be positive and finite on (0, inf)")
    if np.any(dpvals <= 0.0):
        bad = probe[np.argmax(dpvals <= 0.0)]
        raise GasModelError(f"pressure law is not strictly increasing (dP <= 0 at rho = {bad:g})")
    if np.any(muvals <= 0.0):
        bad = probe[np.argmax(muvals <= 0.0)]
        raise GasModelError(f"viscosity law must be positive (mu <= 0 at rho = {bad:g})")
    return GasModel(P=P, dP=dP, mu=mu, P_ext=P_ext, rho_star=rho_star, quad=quad)


def tabulated_gas(rho_samples, P_samples, mu_samples, P_ext: float,
                  quad: QuadratureConfig = DEFAULT_QUAD) -> GasModel:
    """Gas from (rho, P, mu) tables.

    Interpolation is monotone PCHIP in log-log coordinates, which keeps both
    laws positive and preserves the monotonicity of P.  Outside the table the
    end log-log slopes are continued, i.e. the laws extend as power laws with
    the exponents observed at the table edges.
    """
    rho_t = np.asarray(rho_samples, dtype=float)
    P_t = np.asarray(P_samples, dtype=float)
    mu_t = np.asarray(mu_samples, dtype=float)
    if rho_t.ndim != 1 or rho_t.shape != P_t.shape or rho_t.shape != mu_t.shape:
        raise GasModelError("rho, P, mu tables must be 1-D arrays of equal length")
    if rho_t.size < 4:
        raise GasModelError("tabulated gas needs at least 4 samples")
    if np.any(rho_t <= 0.0) or np.any(P_t <= 0.0) or np.any(mu_t <= 0.0):
        raise GasModelError("tabulated rho, P, mu values must all be positive")
    if np.any(np.diff(rho_t) <= 0.0):
        raise GasModelError("tabulated rho values must be strictly increasing")
    if np.any(np.diff(P_t) <= 0.0):
        raise GasModelError("tabulated P values must be strictly increasing")

    P_fn = _loglog_interpolant(rho_t, P_t)
    mu_fn = _loglog_interpolant(rho_t, mu_t)
    dP_fn = _loglog_derivative(rho_t, P_t, P_fn)
    return generic_gas(P_fn, dP_fn, mu_fn, P_ext, quad=quad)


def _loglog_interpolant(x, y):
    lx, ly = np.log(x), np.log(y)
    pchip = interpolate.PchipInterpolator(lx, ly, extrapolate=False)
    slope_lo = float(pchip.derivative()(lx[0]))
    slope_hi = float(pchip.derivative()(lx[-1]))

    def fn(rho):
        rho_arr = np.asarray(rho, dtype=float)
        lr = np.log(rho_arr)
        inside = pchip(np.clip(lr, lx[0], lx[-1]))
        below = ly[0] + slope_lo * (lr - lx[0])
        above = ly[-1] + slope_hi * (lr - lx[-1])
        out = np.where(lr < lx[0], below, np.where(lr > lx[-1], above, inside))
        out = np.exp(out)
        return float(out) if np.ndim(rho) == 0 else out

    return fn


def _loglog_derivative(x, y, fn):
    lx, ly = np.log(x), np.log(y)
    dlog = interpolate.PchipInterpolator(lx, ly, extrapolate=False).derivative()
    slope_lo = float(dlog(lx[0]))
    slope_hi = float(dlog(lx[-1]))

    def dfn(rho):
        rho_arr = np.asarray(rho, dtype=float)
        lr = np.log(rho_arr)
        slope = np.where(lr < lx[0], slope_lo,
                         np.where(lr > lx[-1], slope_hi, dlog(np.clip(lr, lx[0], lx[-1]))))
        out = np.asarray(fn(rho_arr), dtype=float) * slope / rho_arr
        return float(out) if np.ndim(rho) == 0 else out

    return dfn


# ---------------------------------------------------------------------------
# quadrature plumbing


def _quad(f: Callable, lo: float, hi: float, cfg: QuadratureConfig, what: str) -> float:
    """Adaptive quadrature of f over [lo, hi] in log coordinates.

    All integrands here are products of power-law-like factors of the
    density, so substituting l = exp(s) turns ranges spanning many decades
    (and the blowup toward rho -> 0) into smooth, slowly varying profiles
    that the adaptive rule resolves without endpoint trouble.
    """
    if lo == hi:
        return 0.0
    s_lo, s_hi = math.log(lo), math.log(hi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(lambda s: f(math.exp(s)) * math.exp(s),
                                       s_lo, s_hi, epsabs=cfg.abs_tol,
                                       epsrel=cfg.rel_tol, limit=cfg.max_subdivisions)
    # quad's error report is conservative; allow 100x slack before failing.
    if abserr > 100.0 * max(cfg.abs_tol, cfg.rel_tol * abs(value)):
        raise QuadratureError(f"quadrature of {what} over [{lo:g}, {hi:g}] did not converge",
                              achieved_tol=abserr)
    return value


def _map_scalar(fn: Callable, rho):
    """Apply a scalar function over a float or an ndarray, preserving shape."""
    arr = np.asarray(rho, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    out = np.empty(arr.shape, dtype=float)
    flat_in, flat_out = arr.ravel(), out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = fn(flat_in[i])
    return out


def _check_positive_density(rho):
    arr = np.asarray(rho, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("density must be positive and finite")


# ---------------------------------------------------------------------------
# derived potentials


def compression_energy_density(model: GasModel, rho):
    """Energy density of deviation from the equilibrium density.

    Nonnegative, convex, and zero exactly at rho_star.  Closed form for the
    ideal law, adaptive quadrature of P(tau)/tau**2 otherwise.
    """
    _check_positive_density(rho)
    rs = model.rho_star
    if model.ideal is not None:
        c, g = model.ideal.c, model.ideal.gamma
        arr = np.asarray(rho, dtype=float)
        q = (c / (g - 1.0)) * (np.power(arr, g) - g * rs ** (g - 1.0) * arr + (g - 1.0) * rs ** g)
        q = np.maximum(q, 0.0)  # clip roundoff from the cancellation near rho_star
        return float(q) if np.ndim(rho) == 0 else q

    p_star = model.P_ext

    def one(r):
        integral = _quad(lambda tau: float(model.P(tau)) / tau ** 2, rs, r,
                         model.quad, "compression energy integrand")
        return max(r * integral - p_star * r / rs + p_star, 0.0)

    return _map_scalar(one, rho)


def viscosity_potential(model: GasModel, rho):
    """Antiderivative of mu(rho)/rho, zero at rho_star and strictly increasing."""
    _check_positive_density(rho)
    rs = model.rho_star
    if model.ideal is not None:
        A, g = model.ideal.A, model.ideal.gamma
        e = 0.5 * (g - 1.0)
        arr = np.asarray(rho, dtype=float)
        k = (2.0 * A / (g - 1.0)) * (np.power(arr, e) - rs ** e)
        return float(k) if np.ndim(rho) == 0 else k

    def one(r):
        return _quad(lambda tau: float(model.mu(tau)) / tau, rs, r,
                     model.quad, "viscosity potential integrand")

    return _map_scalar(one, rho)


def barrier_potential(model: GasModel, rho):
    """Strictly increasing barrier coordinate, zero at rho_star.

    Integrand mu(l) * l**(-3/2) * sqrt(compression energy); evaluated by
    adaptive quadrature for every law (there is no elementary closed form).
    The integrand grows sharply toward rho -> 0, which the adaptive rule
    handles by subdividing toward the lower limit.
    """
    _check_positive_density(rho)
    rs = model.rho_star

    if model.ideal is not None:
        c, g, A = model.ideal.c, model.ideal.gamma, model.ideal.A

        def integrand(l):
            q = (c / (g - 1.0)) * (l ** g - g * rs ** (g - 1.0) * l + (g - 1.0) * rs ** g)
            return A * l ** (0.5 * g - 2.0) * math.sqrt(max(q, 0.0))
    else:
        def integrand(l):
            q = compression_energy_density(model, l)
            return float(model.mu(l)) * l ** -1.5 * math.sqrt(max(q, 0.0))

    def one(r):
        return _quad(integrand, rs, r, model.quad, "barrier potential integrand")

    return _map_scalar(one, rho)


def invert_increasing(f: Callable, target: float, x0: float,
                      lo_cap: float = 1e-280, hi_cap: float = 1e280,
                      what: str = "monotone function") -> float:
    """Invert a strictly increasing scalar function by bracketed bisection.

    Expands a bracket geometrically from ``x0`` and finishes with Brent's
    method.  Raises GasModelError when the bracket hits the caps, which means
    the function does not attain ``target`` (a monotonicity/divergence
    violation for the laws used here).
    """
    def resid(x):
        return float(f(x)) - target

    lo = hi = float(x0)
    flo = fhi = resid(x0)
    while flo > 0.0:
        lo *= 0.5
        if lo < lo_cap:
            raise GasModelError(f"bracket expansion for {what} failed toward 0 "
                                f"(target {target:g} not attained)")
        flo = resid(lo)
    while fhi < 0.0:
        hi *= 2.0
        if hi > hi_cap:
            raise GasModelError(f"bracket expansion for {what} failed toward inf "
                                f"(target {target:g} not attained)")
        fhi = resid(hi)
    if lo == hi:
        return lo
    return float(optimize.brentq(resid, lo, hi, xtol=1e-300, rtol=1e-15))


# ---------------------------------------------------------------------------
# admissibility (divergence of the potentials) and the friction ratio bound


@dataclass(frozen=True)
class DivergenceEvidence:
    """Numeric evidence that a monotone quantity is unbounded along a probe ladder."""

    quantity: str
    rhos: np.ndarray      # ordered from rho_star outward
    values: np.ndarray
    diverging: bool
    detail: str


@dataclass(frozen=True)
class AdmissibilityReport:
    consistent: bool
    barrier_upper: DivergenceEvidence
    barrier_lower: DivergenceEvidence
    viscosity_upper: DivergenceEvidence
    power_law_sufficient: Optional[bool]
    violations: tuple


def _decade_subsample(rhos) -> np.ndarray:
    """Indices of probe points spaced by at least ~a decade, outermost first.

    The increment trend only discriminates bounded from divergent tails at
    decade-scale rungs; a finer probe would push all increment ratios toward
    one regardless of the tail behaviour.
    """
    logr = np.log10(np.asarray(rhos, dtype=float))
    kept = [len(logr) - 1]
    for i in range(len(logr) - 2, -1, -1):
        if abs(logr[i] - logr[kept[-1]]) >= 0.9:
            kept.append(i)
    return np.array(kept[::-1], dtype=int)


def _outward_trend(quantity: str, rhos, values, sign: float) -> DivergenceEvidence:
    """Divergence evidence along an outward probe: monotone with non-decaying steps.

    ``sign`` is +1 when the quantity should grow to +inf outward, -1 for -inf.
    A finite probe cannot certify a limit; power-law divergence shows up as
    decade-increment magnitudes that grow (or at least hold) toward the
    ladder extreme, while a bounded tail makes them shrink geometrically.
    """
    rhos = np.asarray(rhos, dtype=float)
    vals = sign * np.asarray(values, dtype=float)
    if rhos.size < 3:
        return DivergenceEvidence(quantity, rhos, sign * vals, False,
                                  "probe ladder too short for a trend")
    steps = np.diff(vals)
    if np.any(steps <= 0.0):
        bad = rhos[1 + int(np.argmax(steps <= 0.0))]
        return DivergenceEvidence(quantity, rhos, sign * vals, False,
                                  f"violation evidence at rho = {bad:g}: not monotone outward")
    idx = _decade_subsample(rhos)
    if idx.size < 3:
        return DivergenceEvidence(quantity, rhos, sign * vals, False,
                                  "probe ladder spans fewer than two decades")
    dec_steps = np.diff(vals[idx])
    ratio = dec_steps[-1] / dec_steps[-2]
    if ratio < 0.8:
        return DivergenceEvidence(
            quantity, rhos, sign * vals, False,
            f"violation evidence at rho = {rhos[-1]:g}: decade increments decay "
            f"(last/prev = {ratio:.3f}), consistent with a finite limit")
    return DivergenceEvidence(quantity, rhos, sign * vals, True,
                              f"decade increments sustained outward (last/prev = {ratio:.3f})")


def check_gas_admissibility(model: GasModel, probe=None) -> AdmissibilityReport:
    """Probe the divergence of the barrier and viscosity potentials.

    The barrier construction needs the barrier potential to be unbounded in
    both directions and the viscosity potential unbounded above.  This is a
    numeric check on a geometric density ladder: it gathers divergence
    evidence, it does not prove limits.  The ladder must span at least
    [1e-6, 1e6] * rho_star.
    """
    rs = model.rho_star
    if probe is None:
        probe = np.geomspace(1e-6, 1e6, 25) * rs
    probe = np.sort(np.asarray(probe, dtype=float))
    if probe[0] > 1e-6 * rs * (1.0 + 1e-9) or probe[-1] < 1e6 * rs * (1.0 - 1e-9):
        raise ValueError("probe ladder must span at least [1e-6, 1e6] * rho_star")

    upper = probe[probe > rs * (1.0 + 1e-12)]
    lower = probe[probe < rs * (1.0 - 1e-12)][::-1]  # ordered toward 0

    g_upper = _map_scalar(lambda r: barrier_potential(model, r), upper)
    g_lower = _map_scalar(lambda r: barrier_potential(model, r), lower)
    k_upper = viscosity_potential(model, upper)

    ev_gu = _outward_trend("barrier potential, rho -> inf", upper, g_upper, +1.0)
    ev_gl = _outward_trend("barrier potential, rho -> 0+", lower, g_lower, -1.0)
    ev_ku = _outward_trend("viscosity potential, rho -> inf", upper, k_upper, +1.0)

    if model.ideal is not None:
        # analytic sufficiency: P >= c rho^gamma with gamma in (1,2) and
        # mu >= A rho^eta with eta in [0, 1/2] hold with equality for the
        # ideal law, eta = (gamma-1)/2.
        eta = 0.5 * (model.ideal.gamma - 1.0)
        power_ok = (1.0 < model.ideal.gamma < 2.0) and (0.0 <= eta <= 0.5)
    else:
        power_ok = None

    violations = tuple(ev.detail for ev in (ev_gu, ev_gl, ev_ku) if not ev.diverging)
    return AdmissibilityReport(
        consistent=not violations,
        barrier_upper=ev_gu, barrier_lower=ev_gl, viscosity_upper=ev_ku,
        power_law_sufficient=power_ok, violations=violations)


@dataclass(frozen=True)
class RatioBoundEstimate:
    """Estimated bound on |viscosity potential| / |P - P_ext| over all densities.

    ``K_hat`` (the grid sup inflated by ``safety_factor``) sizes the minimal
    CLF weight certifying the friction feedback law.  ``diverging`` flags a
    ratio that is still growing at the grid edges, in which case no finite
    bound exists and the friction law is not certified.
    """

    K_hat: float
    sup_ratio: float
    sup_location: float
    limit_ratio: float
    diverging: bool
    safety_factor: float
    ideal_lower_bound: Optional[float]
    satisfied: bool


def estimate_ratio_bound(model: GasModel, grid=None, safety: float = 1.25,
                         near_rtol: float = 1e-4) -> RatioBoundEstimate:
    """Estimate sup over rho of |viscosity potential| / |P(rho) - P_ext|.

    Within a relative window ``near_rtol`` of rho_star the 0/0 ratio is
    replaced by its limit mu(rho_star) / (rho_star * dP(rho_star)).  The grid
    sup is inflated by ``safety``: a grid underestimates the true sup, and an
    overestimated bound is always safe for sizing the friction CLF weight.
    """
    rs = model.rho_star
    if grid is None:
        grid = np.geomspace(1e-6, 1e6, 241) * rs
    grid = np.sort(np.asarray(grid, dtype=float))
    _check_positive_density(grid)

    limit_ratio = float(model.mu(rs)) / (rs * float(model.dP(rs)))
    near = np.abs(grid / rs - 1.0) < near_rtol
    ratios = np.empty(grid.shape)
    ratios[near] = limit_ratio
    if np.any(~near):
        rho_far = grid[~near]
        kv = np.abs(np.asarray(viscosity_potential(model, rho_far), dtype=float))
        dp = np.abs(np.asarray(model.P(rho_far), dtype=float) - model.P_ext)
        ratios[~near] = kv / dp

    i_sup = int(np.argmax(ratios))
    sup_ratio = float(ratios[i_sup])

    diverging = False
    for sl in (slice(None, None, -1), slice(None)):
        vals, rho_ord = ratios[sl], grid[sl]
        if vals[-1] < sup_ratio * (1.0 - 1e-12):
            continue
        idx = _decade_subsample(rho_ord)
        if idx.size < 3:
            continue
        steps = np.diff(vals[idx][-3:])
        if steps[-1] > 0.0 and steps[-2] > 0.0 and steps[-1] / steps[-2] >= 0.8:
            diverging = True

    K_hat = safety * max(sup_ratio, limit_ratio)

    if model.ideal is not None:
        c, g, A = model.ideal.c, model.ideal.gamma, model.ideal.A
        # the ideal-law ratio peaks in the vacuum limit; the analytic bound
        # below is that limit, so any valid constant must exceed it.
        ideal_bound = (2.0 * A / ((g - 1.0) * c)) * rs ** (-0.5 * (g + 1.0))
    else:
        ideal_bound = None

    satisfied = (not diverging) and (ideal_bound is None or K_hat > ideal_bound)
    return RatioBoundEstimate(K_hat=K_hat, sup_ratio=sup_ratio,
                              sup_location=float(grid[i_sup]),
                              limit_ratio=limit_ratio, diverging=diverging,
                              safety_factor=safety, ideal_lower_bound=ideal_bound,
                              satisfied=satisfied)
