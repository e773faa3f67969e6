"""Certify gas laws before trusting the feedback design.

The stability guarantees rest on two properties of the gas: the barrier and
viscosity potentials must diverge (so CLF sublevel sets confine the
density), and the friction law additionally needs the viscosity potential
to be dominated by the pressure deviation.  This script certifies the
standard ideal gas, a tabulated mirror of it, and two laws engineered to
fail each check, then maps how the density barrier widens with the CLF
sublevel value.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import pistonflow as pf

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def describe(name, model):
    report = pf.check_gas_admissibility(model)
    ratio = pf.estimate_ratio_bound(model)
    print(f"--- {name}")
    print(f"    rho_star = {model.rho_star:.6g}")
    print(f"    admissible: {report.consistent}")
    for ev in (report.barrier_upper, report.barrier_lower, report.viscosity_upper):
        print(f"      {ev.quantity}: {'diverges' if ev.diverging else ev.detail}")
    print(f"    ratio bound K_hat = {ratio.K_hat:.4f} "
          f"(limit at rho_star {ratio.limit_ratio:.4f}, "
          f"{'unbounded!' if ratio.diverging else 'bounded'})")
    if ratio.ideal_lower_bound is not None:
        print(f"    ideal-law requirement K > {ratio.ideal_lower_bound:.4f}: "
              f"{'met' if ratio.satisfied else 'NOT met'}")
    return report, ratio


ideal = pf.ideal_gas(c=1.0, gamma=1.5, A=1.0, P_ext=1.0)
describe("ideal gas, gamma = 1.5", ideal)

rho_t = np.geomspace(1e-7, 1e7, 80)
table = pf.tabulated_gas(rho_t, rho_t ** 1.5, rho_t ** 0.25, P_ext=1.0)
describe("tabulated mirror of the ideal law", table)

# P linear in rho with mu ~ rho: the barrier potential stays bounded below,
# so no amount of CLF budget keeps the density away from vacuum
soft = pf.generic_gas(P=lambda r: np.asarray(r, float),
                      dP=lambda r: np.ones_like(np.asarray(r, float)),
                      mu=lambda r: np.asarray(r, float), P_ext=1.0)
describe("linear pressure, mu ~ rho (inadmissible)", soft)

# constant viscosity: admissible, but the viscosity potential grows like
# log(rho) while the pressure deviation saturates toward vacuum, so the
# friction law cannot be certified
sticky = pf.generic_gas(P=lambda r: np.power(r, 1.5),
                        dP=lambda r: 1.5 * np.power(r, 0.5),
                        mu=lambda r: np.ones_like(np.asarray(r, float)), P_ext=1.0)
describe("constant viscosity (friction law uncertified)", sticky)

# --- barrier bounds as a function of the sublevel value -------------------

S_values = np.linspace(0.0, 2.0, 21)
lo = [pf.barrier_bounds(ideal, float(S), r=1.0).rho_min for S in S_values]
hi = [pf.barrier_bounds(ideal, float(S), r=1.0).rho_max for S in S_values]

fig, ax = plt.subplots(figsize=(7, 4.5))
ax.fill_between(S_values, lo, hi, alpha=0.25, label="guaranteed density corridor")
ax.plot(S_values, lo, "C0.-", label="rho_min(S)")
ax.plot(S_values, hi, "C3.-", label="rho_max(S)")
ax.axhline(ideal.rho_star, color="k", ls=":", lw=1, label="rho_star")
ax.set_yscale("log")
ax.set_xlabel("CLF sublevel value S")
ax.set_ylabel("density")
ax.set_title("Barrier bounds: states with V <= S keep the density in the corridor")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "barrier_bounds.png", dpi=130)
print(f"wrote {OUT / 'barrier_bounds.png'}")
