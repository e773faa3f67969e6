"""Race the three control policies from the same perturbed start.

Open loop: with nonzero initial momentum the system can only coast (total
momentum is conserved), so the CLF plateaus.  The full feedback law and the
density-blind friction law both drive it to rest; the friction law needs no
knowledge of the gas at all beyond a certified CLF weight.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

import pistonflow as pf

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

gas = pf.ideal_gas()
ic = pf.InitialConditions(eps_rho=0.2, q_rho=2.0, v_off=0.3)   # carries momentum
config = pf.SolverConfig(N=100, cfl_viscous=0.9, t_end=6.0, output_every=0.01)

friction = pf.friction_policy(1.0, gas)
print(f"friction law certified with CLF weight r = {friction.r:.3f} "
      f"(ratio bound K_hat = {friction.ratio_bound:.3f})")

runs = {}
for name, policy, r in (
        ("open loop", pf.OpenLoop(), 1.0),
        ("full feedback", pf.FullFeedback(R=1.0, r=1.0), None),
        ("friction", friction, None)):
    initial = pf.make_initial_state(ic, gas, config.N)
    runs[name] = pf.simulate(initial, gas, policy, config, clf_r=r)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
for name, rec in runs.items():
    ax1.semilogy(rec.t, rec.V / rec.V[0], label=name)
    ax2.plot(rec.t, rec.momentum, label=name)
    if rec.V[-1] > 1e-12 * rec.V[0]:
        fit = pf.fit_decay(rec.t, rec.V, window_fraction=0.5)
        tail = "" if fit.degenerate else f", fitted rate {fit.sigma_hat:.2f}"
        print(f"{name:14s} V(T)/V(0) = {rec.V[-1]/rec.V[0]:.3e}{tail}")

ax1.set_xlabel("t"); ax1.set_ylabel("V(t) / V(0)")
ax1.set_title("CLF decay: the open loop stalls on its conserved momentum")
ax1.legend()
ax2.set_xlabel("t"); ax2.set_ylabel("total momentum")
ax2.set_title("Momentum: conserved exactly without control")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "feedback_comparison.png", dpi=130)
print(f"wrote {OUT / 'feedback_comparison.png'}")
