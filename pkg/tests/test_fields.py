import numpy as np
import pytest

from finslernav.errors import RegimeMismatchError
from finslernav.fields import (
    check_conformal_kropina,
    conformal_factor_estimate,
    conformal_factor_jets,
    killing_residual,
    r_tensor,
    sharp,
)
from finslernav.modelspaces import HOPF_WIND, S3_FACTOR, get_model
from finslernav.riemann import CovectorField, RiemannMetric, VectorField
from finslernav.spec import make_rng


def flat(n):
    return RiemannMetric.parse([["1" if i == j else "0" for j in range(n)] for i in range(n)], n)


def s3():
    return RiemannMetric.parse([[S3_FACTOR if i == j else "0" for j in range(3)] for i in range(3)], 3)


PTS = [np.array(p) for p in ([0.1, 0.2], [-0.4, 0.3], [0.7, -0.6], [-0.2, -0.9])]


def test_conformal_factor_examples():
    h = flat(2)
    assert conformal_factor_estimate(h, VectorField.parse(["x1", "x2"], 2), [0.3, 0.4]) == pytest.approx(0.5)
    assert conformal_factor_estimate(h, VectorField.constant([1, 2]), [0.3, 0.4]) == 0.0
    assert abs(conformal_factor_estimate(s3(), VectorField.parse(HOPF_WIND, 3), [0.1, 0.2, -0.3])) < 1e-9


def test_conformal_factor_jet_gradient():
    V = VectorField.parse(["x1^2", "x1*x2"], 2)
    # rho = (2 x1 + x1) / 4 on the flat plane
    j = conformal_factor_jets(flat(2), V, [0.4, 0.1], order=1)
    assert j[0] == pytest.approx(0.3)
    assert np.allclose(j[1:3], [0.75, 0.0])


def test_check_conformal_verdicts():
    h, W = flat(2), VectorField.constant([1, 0])
    rep = check_conformal_kropina(h, W, VectorField.parse(["x1", "x2"], 2), PTS)
    assert rep.verdict == "Homothetic" and rep.rho_value == pytest.approx(0.5)
    assert rep.residual_c1 < 1e-12 and rep.residual_c2 < 1e-12
    rep = check_conformal_kropina(h, W, VectorField.constant([-0.5, 0]), PTS)
    assert rep.verdict == "Killing" and rep.rho_value == 0.0
    rep = check_conformal_kropina(h, W, VectorField.parse(["-x2", "x1"], 2), PTS)
    # a rotation is Killing for h but does not preserve the wind: (c2) fails
    assert rep.verdict == "None" and rep.residual_c2 > 1e-3 and rep.residual_c1 < 1e-12
    with pytest.raises(RegimeMismatchError):
        check_conformal_kropina(h, VectorField.constant([0.5, 0]), VectorField.constant([0, 1]), PTS)


def test_conformal_for_kropina_implies_conformal_for_h():
    model = get_model("flat-kropina-conformal-3d")
    spec = model.spec
    pts = spec.quasi_points(10)
    rep = check_conformal_kropina(spec.metric(), spec.wind(), spec.field_V(), pts)
    assert rep.verdict in ("Conformal", "Homothetic", "Killing")
    assert rep.residual_c1 < 1e-7


def test_killing_linearity_on_s3():
    h = s3()
    W = VectorField.parse(HOPF_WIND, 3)
    # another Killing field of the round metric: rotation in the (x1, x2) plane
    R = VectorField.parse(["-x2", "x1", "0"], 3)
    rng = make_rng(2)
    for _ in range(10):
        x = rng.uniform(-0.45, 0.45, 3)
        assert killing_residual(h, W, x) < 1e-8
        assert killing_residual(h, R, x) < 1e-8
        assert killing_residual(h, W + R, x) < 2e-8


def test_r_tensor_examples():
    a = flat(2)
    r = r_tensor(a, CovectorField.parse(["x1", "x2"], 2), [0.2, -0.3])
    assert np.allclose(r.r, np.eye(2)) and r.sigma == pytest.approx(1.0) and r.residual < 1e-14
    r = r_tensor(a, CovectorField.parse(["-x2", "x1"], 2), [0.2, -0.3])
    assert np.abs(r.r).max() < 1e-14 and r.sigma == 0.0
    assert np.allclose(sharp(a, CovectorField.constant([2, 0]), [0, 0]), [2, 0])


@pytest.mark.parametrize("name", ["flat-kropina", "s3-hopf", "flat-kropina-nonkilling", "s2xr-kropina", "flat-kropina-gauge"])
def test_r00_conformality_matches_wind_killing(name):
    spec = get_model(name).spec
    F = spec.finsler()
    alpha, beta = F.alpha_beta()
    pts = spec.quasi_points(10)
    r_res = max(r_tensor(alpha, beta, x).residual for x in pts)
    k_res = max(killing_residual(F.h, F.W, x) for x in pts)
    assert (r_res < 1e-8) == (k_res < 1e-8)
    assert min(r_res, k_res) < 1e-8 or min(r_res, k_res) > 1e-4
