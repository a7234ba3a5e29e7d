"""Kropina metric on the round 3-sphere built from the Hopf field.

Navigation on the unit sphere with the unit Killing wind W (the Hopf field)
in the critical regime gives a Kropina metric. Its flag curvature is constant
1 and its S-curvature vanishes. Adding the extra wind V = -2W flips the wind
to -W: the result is again a Kropina metric with the same curvature.

Run:  python3 demos/hopf_sphere.py
"""

import numpy as np

from finslernav import composite, flag_curvature, get_model, s_curvature
from finslernav.fields import killing_residual
from finslernav.riemann import norm_h
from finslernav.spec import make_rng

# %% The model: stereographic chart of S^3, ||x|| <= 0.8
spec = get_model("s3-hopf").spec
h, W = spec.metric(), spec.wind()
F = spec.finsler()
print(spec.name, "dim", spec.dim, "metric", type(F).__name__)

pts = spec.sample_points(8, seed=1)
print("max | ||W||_h - 1 |   ", max(abs(norm_h(h, W, x) - 1) for x in pts))
print("max Killing residual ", max(killing_residual(h, W, x) for x in pts))

# %% Flag curvature at random flags inside the Kropina cone h(y, W) > 0
rng = make_rng(2)
rows = []
for x in pts:
    y = spec.sample_directions(F, x, 1, rng)[0]
    v = rng.normal(size=3)
    rows.append((F.value(x, y), flag_curvature(F, x, y, v), s_curvature(F, x, y)))
rows = np.array(rows)
print(f"F in [{rows[:, 0].min():.3f}, {rows[:, 0].max():.3f}]")
print("max |K - 1|          ", np.abs(rows[:, 1] - 1).max())
print("max |S|              ", np.abs(rows[:, 2]).max())

# %% Extra wind V = -2W stays on the critical circle
crit = get_model("s3-hopf-critical").spec
res = composite(crit.finsler(), crit.field_V(), crit.quasi_points(200))
print("composite is", res.classification, "with wind at x=0:", res.wind.at(np.zeros(3)))
Ft = res.metric
ks = []
for x in crit.sample_points(5, seed=3):
    u = crit.sample_directions(Ft, x, 1, rng, wind=res.wind.at(x))[0]
    ks.append(flag_curvature(Ft, x, u, rng.normal(size=3)))
print("composite flag curvatures", np.round(ks, 9))
