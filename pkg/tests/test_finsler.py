import math

import numpy as np
import pytest

from finslernav import exprdsl
from finslernav.errors import DegenerateFlagError, DimensionTooSmallError, OutsideConeError, ZeroVectorError
from finslernav.finsler import (
    ImplicitNavigation,
    Kropina,
    Randers,
    Riemannian,
    angular_metric,
    bh_density,
    c_reducibility_residual,
    cartan_torsion,
    curvature_report,
    flag_curvature,
    fundamental_tensor,
    mean_cartan,
    ricci,
    riemann_curvature,
    s_curvature,
    scalar_flag_residual,
    spray,
    _y_jet,
)
from finslernav.modelspaces import get_model
from finslernav.riemann import RiemannMetric, VectorField, christoffel, ricci_h
from finslernav.spec import make_rng

from conftest import assert_close


def flat(n):
    return RiemannMetric.parse([["1" if i == j else "0" for j in range(n)] for i in range(n)], n)


def kropina2():
    return Kropina(flat(2), VectorField.constant([1, 0]))


def randers2():
    return Randers(flat(2), VectorField.constant([0.5, 0]))


def sphere2():
    return Riemannian(RiemannMetric.parse([["4/(1 + x1^2 + x2^2)^2", "0"], [None, "4/(1 + x1^2 + x2^2)^2"]], 2))


def cone_samples(model, count, seed=0):
    spec = model.spec
    F = spec.finsler()
    rng = make_rng(seed + 1)
    for x in spec.sample_points(count, seed):
        yield F, x, spec.sample_directions(F, x, 1, rng)[0]


def test_values():
    K = kropina2()
    assert K.value([0, 0], [2, 0]) == pytest.approx(1.0)
    assert K.value([0, 0], [1, 0]) == pytest.approx(0.5)
    assert K.value([0, 0], [1, 1]) == pytest.approx(1.0)
    R = randers2()
    assert R.value([0, 0], [1, 0]) == pytest.approx(2 / 3)
    assert R.value([0, 0], [0, 1]) == pytest.approx(2 / math.sqrt(3))
    assert Randers(flat(2), VectorField.constant([0, 0])).value([0, 0], [3, 4]) == pytest.approx(5.0)


def test_cone_and_zero_vector():
    K = kropina2()
    with pytest.raises(OutsideConeError):
        K.value([0, 0], [-1, 0])
    with pytest.raises(OutsideConeError):
        K.value([0, 0], [0, 1])  # boundary of the cone
    with pytest.raises(ZeroVectorError):
        K.value([0, 0], [0, 0])


@pytest.mark.parametrize("name", ["flat-kropina", "flat-randers", "s3-hopf", "s3-randers"])
def test_homogeneity_euler_and_tensor_identities(name):
    for F, x, y in cone_samples(get_model(name), 10):
        f = F.value(x, y)
        for lam in (0.5, 2.0, 7.0):
            assert abs(F.value(x, lam * y) - lam * f) <= 1e-10 * lam * f
        grad = _y_jet(F, F.local(x), y, 1, square=False).gradient()
        assert abs(grad @ y - f) < 1e-10 * f
        g = fundamental_tensor(F, x, y)
        assert abs(y @ g @ y - f * f) < 1e-10
        assert np.all(np.linalg.eigvalsh(g) > 0)
        C = cartan_torsion(F, x, y)
        assert np.abs(np.einsum("ijk,k->ij", C, y)).max() < 1e-10 * max(1.0, np.abs(C).max())
        G = spray(F, x, y)
        assert_close(spray(F, x, 2 * y), 4 * G, 1e-10 * (1 + np.abs(G).max()))
        R = riemann_curvature(F, x, y)
        assert np.abs(R @ y).max() < 1e-8 * max(1.0, f * f)


def test_riemannian_variant():
    h = RiemannMetric.parse([["2 + x1^2", "0.3*x2"], [None, "3 + sin(x1)"]], 2)
    F = Riemannian(h)
    x, y = np.array([0.3, -0.5]), np.array([0.7, 0.2])
    assert_close(fundamental_tensor(F, x, y), h.at(x), 1e-12)
    assert np.abs(cartan_torsion(F, x, y)).max() < 1e-12
    G = spray(F, x, y)
    assert_close(G, 0.5 * np.einsum("ijk,j,k->i", christoffel(h, x), y, y), 1e-10)


def test_angular_metric_and_mean_cartan():
    F, x, y = next(cone_samples(get_model("flat-kropina-3d"), 1))
    g = fundamental_tensor(F, x, y)
    A = angular_metric(F, x, y)
    assert np.abs(A @ y).max() < 1e-10
    l = g @ y / F.value(x, y)
    assert_close(A, g - np.outer(l, l), 1e-12)
    I = mean_cartan(F, x, y)
    assert_close(I, np.einsum("jk,ijk->i", np.linalg.inv(g), cartan_torsion(F, x, y)), 1e-12)


def test_c_reducibility():
    for name in ("flat-kropina-3d", "flat-randers-3d"):
        for F, x, y in cone_samples(get_model(name), 5):
            assert c_reducibility_residual(F, x, y) < 1e-8
    # curved chart: torsion grows like F near the cone edge, so compare relative to |C|
    for F, x, y in cone_samples(get_model("s3-hopf"), 5):
        scale = np.abs(cartan_torsion(F, x, y)).max()
        assert c_reducibility_residual(F, x, y) < 1e-9 * max(1.0, scale)
    with pytest.raises(DimensionTooSmallError):
        c_reducibility_residual(kropina2(), [0, 0], [1, 0])


def test_flat_kropina_curvature_vanishes():
    K = kropina2()
    for y in ([1, 0.3], [0.5, -2]):
        assert np.abs(spray(K, [0.1, 0.2], y)).max() == 0.0
        assert np.abs(riemann_curvature(K, [0.1, 0.2], y)).max() == 0.0
        assert s_curvature(K, [0.1, 0.2], y) == 0.0
        assert flag_curvature(K, [0.1, 0.2], y, [0, 1]) == 0.0


def test_s3_hopf_flag_curvature_one():
    model = get_model("s3-hopf")
    rng = make_rng(77)
    for F, x, y in cone_samples(model, 5):
        f = F.value(x, y)
        assert ricci(F, x, y) == pytest.approx(2 * f * f, abs=1e-5 * f * f)
        assert abs(s_curvature(F, x, y)) < 1e-7
        ks = [flag_curvature(F, x, y, rng.normal(size=3)) for _ in range(20)]
        assert max(abs(k - 1) for k in ks) < 1e-5
        assert np.ptp(ks) < 1e-6
        assert scalar_flag_residual(F, x, y) < 1e-6


def test_round_sphere_riemannian():
    F = sphere2()
    x, y = np.array([0.3, -0.2]), np.array([0.4, 1.0])
    assert flag_curvature(F, x, y, [1, 0]) == pytest.approx(1.0, abs=1e-8)
    assert scalar_flag_residual(F, x, y) < 1e-8
    R = riemann_curvature(F, x, y)
    Ric_h = ricci_h(F.h, x)
    assert np.trace(R) == pytest.approx(y @ Ric_h @ y, abs=1e-6)


def test_degenerate_flag():
    with pytest.raises(DegenerateFlagError):
        flag_curvature(kropina2(), [0, 0], [1, 0.2], [2, 0.4])


def test_homothetic_randers_s_curvature():
    # W = -(c/2) x with c = 0.3: W_{i|j} + W_{j|i} = -c delta, i.e. c~ = c/4 and S = (n+1)(c/4) F
    F = Randers(flat(2), VectorField.parse(["-0.15*x1", "-0.15*x2"], 2))
    rng = make_rng(3)
    for _ in range(10):
        x = rng.uniform(-1, 1, 2)
        y = rng.normal(size=2)
        assert s_curvature(F, x, y) == pytest.approx(3 * 0.075 * F.value(x, y), abs=1e-6)


def test_bh_density_closed_forms():
    assert bh_density(kropina2(), [0, 0]) == pytest.approx(1.0)
    # Randers with h = delta and W = (1/2, 0): sigma = sqrt(det h) = 1 as well (navigation preserves volume)
    assert bh_density(randers2(), [0, 0]) == pytest.approx(1.0)
    gauge = Kropina(flat(2), VectorField.constant([1, 0]), exprdsl.parse("2 + x1^2", 2))
    assert bh_density(gauge, [0.7, 0.0]) == pytest.approx(1.0)


def test_implicit_navigation_matches_closed_form():
    base = Riemannian(flat(2))
    imp = ImplicitNavigation(base, VectorField.constant([0.5, 0]))
    ran = randers2()
    x = np.array([0.1, 0.2])
    for y in ([1, 0], [0.3, -1.2], [-1, 0.1]):
        assert imp.value(x, y) == pytest.approx(ran.value(x, y), abs=1e-12)
    y = np.array([0.3, -1.2])
    assert_close(fundamental_tensor(imp, x, y), fundamental_tensor(ran, x, y), 1e-9)
    assert s_curvature(imp, x, y) == pytest.approx(0.0, abs=1e-9)


def test_curvature_report():
    F = kropina2()
    rep = curvature_report(F, [0.2, 0.1], [1.0, 0.5])
    d = rep.to_dict()
    assert d["F"] == pytest.approx(1.25 / 2)
    assert d["Ric"] == 0.0 and d["S"] == 0.0 and d["K"] == [0.0, 0.0]
    assert all(math.isfinite(v) for v in d["residuals"].values())
