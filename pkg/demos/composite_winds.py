"""Extra winds on the flat Kropina metric F = |y|^2 / (2 y1).

With V constant, the composite metric depends on the sign of
|V|^2 + 2 <W, V>.  Strictly negative gives a Randers metric. Zero (the critical
circle |V + W| = 1) keeps it Kropina.  A conformal V = x on a small box gives
a Randers metric whose S-curvature is -(3/2) F.
"""

import numpy as np

from finslernav import composite, get_model, s_curvature, u_map
from finslernav.riemann import VectorField

flat = get_model("flat-kropina").spec
F = flat.finsler()
pts = flat.quasi_points(200)

# %% Regime of a few constant winds
for V in [(-0.5, 0.0), (-1.0, 0.5), (-2.0, 0.0), (-1.0, 1.0), (-0.2, 0.3)]:
    V = np.array(V)
    disc = V @ V + 2 * V[0]
    res = composite(F, VectorField.constant(V), pts)
    print(f"V={V}  |V|^2 + 2<W,V> = {disc:+.3f}  ->  {res.classification:8s}  lambda = {res.to_dict()['lambda']}")

# %% Lengths are preserved: F~(x, y + F(x,y) V) = F(x, y)
V = VectorField.constant([-0.5, 0.0])
Ft = composite(F, V, pts).metric
x = np.zeros(2)
for y in ([1.0, 0.0], [1.0, 1.0], [0.3, -2.0]):
    u = u_map(F, V, x, y)
    print(f"y={y}  u={u}  F(y)={F.value(x, y):.6f}  F~(u)={Ft.value(x, u):.6f}")

# %% Conformal wind V = x with rho = 1/2
conf = get_model("flat-kropina-conformal").spec
Fc = composite(conf.finsler(), conf.field_V(), conf.quasi_points(200)).metric
rng = np.random.default_rng(0)
worst = 0.0
for x in conf.sample_points(20, seed=4):
    u = rng.normal(size=2)
    worst = max(worst, abs(s_curvature(Fc, x, u) + 1.5 * Fc.value(x, u)))
print("max |S~ + (3/2) F~| on the conformal box:", worst)
