import numpy as np
import pytest

from finslernav import exprdsl
from finslernav.errors import (
    ConeViolationError,
    DegenerateBetaError,
    MixedRegimeError,
    NoBracketError,
    RegimeMismatchError,
    SpeedLimitError,
)
from finslernav.finsler import Kropina, Randers, Riemannian
from finslernav.modelspaces import get_model
from finslernav.navigation import (
    NavigationData,
    composite,
    kropina_from_data,
    kropina_to_data,
    randers_from_data,
    solve_implicit,
    u_map,
)
from finslernav.riemann import CovectorField, RiemannMetric, VectorField
from finslernav.spec import make_rng


def flat(n):
    return RiemannMetric.parse([["1" if i == j else "0" for j in range(n)] for i in range(n)], n)


PTS2 = [np.array(p) for p in ([0.0, 0.0], [0.5, -0.3], [-0.8, 0.9])]


def test_solve_implicit_examples():
    phi = Riemannian(flat(2))
    t = solve_implicit(phi, VectorField.constant([0.5, 0]), [0, 0], [1, 0])
    assert t == pytest.approx(2 / 3, abs=1e-14)
    assert abs(np.linalg.norm(np.array([1, 0]) / t - [0.5, 0]) - 1) < 1e-12
    assert solve_implicit(phi, VectorField.constant([1, 0]), [0, 0], [2, 0]) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(NoBracketError):
        solve_implicit(phi, VectorField.constant([1, 0]), [0, 0], [-1, 0])


def test_closed_forms_from_data():
    data = NavigationData.from_fields(flat(2), VectorField.constant([0.5, 0]), PTS2)
    assert data.regime == "subcritical"
    F = randers_from_data(data)
    assert F.value([0, 0], [1, 0]) == pytest.approx(2 / 3)
    assert F.value([0, 0], [0, 1]) == pytest.approx(2 / np.sqrt(3))
    with pytest.raises(RegimeMismatchError):
        kropina_from_data(data)
    crit = NavigationData.from_fields(flat(2), VectorField.constant([1, 0]), PTS2)
    assert crit.regime == "critical"
    assert kropina_from_data(crit).value([0, 0], [1, 1]) == pytest.approx(1.0)
    with pytest.raises(RegimeMismatchError):
        randers_from_data(crit)
    with pytest.raises(RegimeMismatchError):
        NavigationData.from_fields(flat(2), VectorField.parse(["x1", "0"], 2), [[0.5, 0], [1.0, 0]])


def test_kropina_to_data_examples():
    alpha = flat(2)
    beta = CovectorField.constant([2, 0])
    data, b = kropina_to_data(alpha, beta, PTS2)
    for x in PTS2:
        assert np.allclose(data.h.at(x), np.eye(2))
        assert np.allclose(data.W.at(x), [1, 0])
        assert exprdsl.evaluate(b, list(x)) == pytest.approx(2.0)
    with pytest.raises(DegenerateBetaError):
        kropina_to_data(alpha, CovectorField.parse(["x1", "0"], 2), [[0.0, 0.3]])


def test_kropina_round_trip_on_s3():
    spec = get_model("s3-hopf").spec
    F = spec.finsler()
    alpha, beta = F.alpha_beta()
    pts = spec.quasi_points(20)
    data, _ = kropina_to_data(alpha, beta, pts)
    err = 0.0
    for x in pts:
        err = max(err, np.abs(data.h.at(x) - F.h.at(x)).max(), np.abs(data.W.at(x) - F.W.at(x)).max())
    assert err < 1e-10


def test_randers_implicit_agreement_random():
    rng = make_rng(4)
    h = RiemannMetric.parse([["2 + x1^2", "0.3*x2"], [None, "3 + sin(x1)"]], 2)
    W = VectorField.parse(["0.2*cos(x2)", "0.1*x1"], 2)
    F = Randers(h, W)
    phi = Riemannian(h)
    for _ in range(50):
        x = rng.uniform(-1, 1, 2)
        y = rng.normal(size=2)
        t = solve_implicit(phi, W, x, y)
        assert t == pytest.approx(F.value(x, y), abs=1e-10 * max(1, t))
        assert abs(phi.value(x, y / t - W.at(x)) - 1) < 1e-12


def test_composite_branches():
    K = Kropina(flat(2), VectorField.constant([1, 0]))
    res = composite(K, VectorField.constant([-0.5, 0]), PTS2)
    assert res.classification == "randers"
    assert isinstance(res.metric, Randers)
    assert exprdsl.evaluate(res.lam, [0, 0]) == pytest.approx(0.75)
    ref = Randers(flat(2), VectorField.constant([0.5, 0]))
    rng = make_rng(8)
    for _ in range(100):
        x, y = rng.uniform(-1, 1, 2), rng.normal(size=2)
        assert abs(res.metric.value(x, y) - ref.value(x, y)) < 1e-12
    crit = composite(K, VectorField.constant([-2, 0]), PTS2)
    assert crit.classification == "kropina"
    assert np.allclose(crit.wind.at([0, 0]), [-1, 0])
    y = np.array([-1.0, 0.4])
    assert crit.metric.value([0, 0], y) == pytest.approx((y @ y) / (-2 * y[0]))


def test_composite_errors():
    K = Kropina(flat(2), VectorField.constant([1, 0]))
    with pytest.raises(ConeViolationError):
        composite(K, VectorField.constant([1, 0]), PTS2)
    with pytest.raises(SpeedLimitError):
        composite(K, VectorField.constant([-3, 0]), PTS2)
    with pytest.raises(MixedRegimeError):
        composite(K, VectorField.parse(["-1 - x1", "0"], 2), [[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(RegimeMismatchError):
        composite(Randers(flat(2), VectorField.constant([0.5, 0])), VectorField.constant([-0.1, 0]), PTS2)


def test_u_map_examples():
    K = Kropina(flat(2), VectorField.constant([1, 0]))
    V = VectorField.constant([-0.5, 0])
    u = u_map(K, V, [0, 0], [1, 0])
    assert np.allclose(u, [0.75, 0])
    Ft = composite(K, V, PTS2).metric
    assert Ft.value([0, 0], u) == pytest.approx(0.5, abs=1e-12)
    zero = VectorField.constant([0, 0])
    assert np.allclose(u_map(K, zero, [0, 0], [1, 0.3]), [1, 0.3])
    V2 = VectorField.constant([-2, 0])
    y = np.array([1.0, 1.0])  # on the indicatrix: F(y) = 1
    Ft2 = composite(K, V2, PTS2).metric
    u2 = u_map(K, V2, [0, 0], y)
    assert np.allclose(u2, y + V2.at([0, 0]))
    assert Ft2.value([0, 0], u2) == pytest.approx(1.0, abs=1e-12)
    y = np.array([1.0, 1.5])
    assert Ft2.value([0, 0], u_map(K, V2, [0, 0], y)) == pytest.approx(K.value([0, 0], y), abs=1e-12)


def test_dichotomy_random_winds():
    K = Kropina(flat(2), VectorField.constant([1, 0]))
    rng = make_rng(21)
    seen = set()
    for i in range(20):
        if i % 2:
            # critical: V = -2 (W . e) e for a unit e in the cone, so |V|^2 + 2<W,V> = 0
            ang = rng.uniform(-1.2, 1.2)
            e = np.array([np.cos(ang), np.sin(ang)])
            V = -2 * e[0] * e
        else:
            V = np.array([-rng.uniform(0.05, 1.9), rng.uniform(-0.3, 0.3)])
            while V @ V + 2 * V[0] >= -1e-3:
                V = np.array([-rng.uniform(0.05, 1.9), rng.uniform(-0.3, 0.3)])
        res = composite(K, VectorField.constant(V), PTS2)
        disc = V @ V + 2 * V[0]
        expected = "kropina" if abs(disc) < 1e-9 else "randers"
        assert res.classification == expected
        seen.add(expected)
    assert seen == {"randers", "kropina"}
