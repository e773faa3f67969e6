"""Boundary feedback laws acting on the left piston.

The control input is the deviation of the pressure applied to the left
piston from the external pressure.  Both stabilizing laws need only
measurements at the actuated piston:

* ``FullFeedback``: u = -R * ((r+1) * v_a + viscosity_potential(rho_a)),
  which makes the CLF dissipation sign-definite for any gains R, r > 0.
* ``Friction``:     u = -R * v_a, a pure damper that needs no density
  measurement and no knowledge of the gas laws; it certifies the same CLF
  provided the CLF weight satisfies r >= R * K / 2 with K the ratio bound
  from ``gas.estimate_ratio_bound``.

``OpenLoop`` (u = 0) is the baseline: it conserves total momentum, so
initial data with nonzero momentum cannot converge to rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from . import gas as gaslib
from .gas import GasModel, GasModelError


@dataclass(frozen=True)
class OpenLoop:
    """No actuation: u = 0."""


@dataclass(frozen=True)
class FullFeedback:
    """Velocity + viscosity-potential feedback with gain R and CLF weight r."""

    R: float
    r: float = 1.0

    def __post_init__(self):
        if self.R <= 0.0 or self.r <= 0.0:
            raise ValueError(f"gains must be positive, got R={self.R}, r={self.r}")


@dataclass(frozen=True)
class Friction:
    """Pure velocity damping u = -R*v_a.

    ``r`` is the CLF weight used for certification and ``ratio_bound`` the
    constant it was sized against; the dissipation argument needs
    r >= R * ratio_bound / 2.
    """

    R: float
    r: float
    ratio_bound: float

    def __post_init__(self):
        if self.R <= 0.0 or self.r <= 0.0 or self.ratio_bound <= 0.0:
            raise ValueError("gain, CLF weight, and ratio bound must be positive")
        if self.r < 0.5 * self.R * self.ratio_bound * (1.0 - 1e-12):
            raise ValueError(
                f"friction CLF weight r={self.r} is below R*K/2 = "
                f"{0.5 * self.R * self.ratio_bound}")


ControlPolicy = Union[OpenLoop, FullFeedback, Friction]


def control_input(policy: ControlPolicy, rho_a: float, v_a: float, model: GasModel) -> float:
    """Evaluate the boundary feedback from the measured left-piston values."""
    if rho_a <= 0.0 or not math.isfinite(rho_a):
        raise ValueError(f"boundary density must be positive, got {rho_a}")
    if isinstance(policy, OpenLoop):
        return 0.0
    if isinstance(policy, FullFeedback):
        k_a = float(gaslib.viscosity_potential(model, rho_a))
        return -policy.R * ((policy.r + 1.0) * v_a + k_a)
    if isinstance(policy, Friction):
        return -policy.R * v_a
    raise TypeError(f"unknown control policy {policy!r}")


def friction_clf_weight(R: float, model: GasModel, ratio_bound: float = None) -> float:
    """Minimal certified CLF weight for the friction law: R * K_hat / 2.

    When ``ratio_bound`` is not supplied it is estimated from the gas; an
    unbounded ratio means the friction law cannot be certified for this gas.
    """
    if R <= 0.0:
        raise ValueError(f"gain must be positive, got {R}")
    if ratio_bound is None:
        est = gaslib.estimate_ratio_bound(model)
        if est.diverging:
            raise GasModelError(
                "viscosity-potential / pressure ratio is unbounded: "
                "the friction law is not certified for this gas")
        ratio_bound = est.K_hat
    return 0.5 * R * ratio_bound


def friction_policy(R: float, model: GasModel, ratio_bound: float = None,
                    r: float = None) -> Friction:
    """Build a certified Friction policy, sizing r = R*K_hat/2 by default."""
    if ratio_bound is None:
        est = gaslib.estimate_ratio_bound(model)
        if est.diverging:
            raise GasModelError(
                "viscosity-potential / pressure ratio is unbounded: "
                "the friction law is not certified for this gas")
        ratio_bound = est.K_hat
    r_min = 0.5 * R * ratio_bound
    if r is None:
        r = r_min
    return Friction(R=R, r=r, ratio_bound=ratio_bound)
