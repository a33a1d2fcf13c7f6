"""The diffusivity and its two derived functions.

For a power-law diffusivity a(r) = c1 (1+r)^(-p) with p in (1, 2] the
flux primitive A(r) = -int_r^inf a exists and the entropy density b
(b'' = a/r, b(1) = b'(1) = 0) grows at most linearly.  The plot shows
all three together with the certified decay bounds that the blow-up
certificate relies on.
"""
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ks1d import (
    EntropyTable,
    PowerLawDiffusion,
    check_entropy_bound,
    check_flux_bound,
)
from ks1d.diffusion import entropy_majorant

out_dir = pathlib.Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

model = PowerLawDiffusion(1.0, 2.0)
table = EntropyTable(model)

report_b = check_entropy_bound(model, table)
report_A = check_flux_bound(model)
print(f"entropy bound holds, least margin {report_b.worst_margin:.3e} "
      f"at r = {report_b.worst_r:.3g}")
print(f"flux bound holds, least margin {report_A.worst_margin:.3e} "
      f"at r = {report_A.worst_r:.3g}")

r = np.geomspace(1e-3, 1e3, 400)
fig, axes = plt.subplots(1, 3, figsize=(13, 4))
axes[0].loglog(r, model.a(r))
axes[0].set_title("diffusivity a(r)")
axes[1].semilogx(r, model.flux_primitive(r))
axes[1].set_title("flux primitive A(r)")
axes[2].loglog(r, table.entropy(r), label="b(r)")
axes[2].loglog(r, entropy_majorant(r, model.c1, model.p), "--",
               label="piecewise majorant")
axes[2].loglog(r, model.c1 * (1.0 + r), ":", label="c1 (1+r)")
axes[2].legend()
axes[2].set_title("entropy density and bounds")
for ax in axes:
    ax.set_xlabel("r")
fig.tight_layout()
fig.savefig(out_dir / "diffusivity_functions.png", dpi=130)
print(f"wrote {out_dir / 'diffusivity_functions.png'}")
