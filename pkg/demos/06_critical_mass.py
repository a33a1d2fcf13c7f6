"""Where the blow-up certificate turns on.

With concentrated initial data the scalar certificate depends on the
total mass through competing powers: positive terms grow like M^2,
the sink like M^q.  The sign change defines a critical mass, found by
bisection and confirmed here by a sweep; the perturbation threshold
shows how much chemical data and relaxation the certificate tolerates.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ks1d import (
    Grid,
    Params,
    PowerLawDiffusion,
    blowup_indicator,
    critical_mass,
    edge_ramp,
    initial_moment,
    perturbation_threshold,
)

out_dir = pathlib.Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

c1, p, D, gamma, q = 1.0, 2.0, 1.0, 0.0, 4.0
m_star = critical_mass(c1, p, D, gamma, q)
print(f"data-free critical mass: M* = {m_star:.6f}")

# how the threshold moves with the moment exponent (recorded, not a
# monotonicity claim: the q-dependent coefficients pull both ways)
print("M* against the exponent q:")
for qi in (2.5, 3.0, 4.0, 6.0, 8.0, 12.0):
    print(f"  q = {qi:5.1f}: M* = {critical_mass(c1, p, D, gamma, qi):.4f}")

grid = Grid(8192)
masses = np.linspace(1.0, 20.0, 120)
values = []
for M in masses:
    params = Params(eps=0.0, D=D, gamma=gamma, M=M)
    _, mq0 = initial_moment(edge_ramp(M, 0.01, grid), q, grid)
    values.append(blowup_indicator(mq0, 0.0, 0.0, q, params, c1, p))
values = np.array(values)
crossing = masses[np.argmax(values < 0.0)]
print(f"ramp-data certificate crosses zero near M = {crossing:.3f}")

params10 = Params(eps=0.0, D=D, gamma=0.5, M=10.0)
theta = perturbation_threshold(edge_ramp(10.0, 0.01, grid), params10,
                               PowerLawDiffusion(c1, p), q, grid)
print(f"perturbation threshold at M = 10, gamma = 0.5: theta = {theta:.4f}")
print("(chemical H1 size and eps*M below theta keep the certificate negative)")

fig, ax = plt.subplots(figsize=(7, 4.5))
ax.plot(masses, values)
ax.axhline(0.0, color="k", lw=0.8)
ax.axvline(m_star, color="r", ls="--", label=f"M* = {m_star:.3f} (data-free)")
ax.set_xlabel("total mass M")
ax.set_ylabel("scalar certificate")
ax.set_title("certificate sign change for the concentrated ramp")
ax.legend()
fig.tight_layout()
fig.savefig(out_dir / "critical_mass.png", dpi=130)
print(f"wrote {out_dir / 'critical_mass.png'}")
