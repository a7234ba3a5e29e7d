import numpy as np
import pytest

from finslernav.errors import CertificateFailure
from finslernav.jets import FDOracle
from finslernav.modelspaces import (
    Certificate,
    HOPF_WIND,
    ModelSpace,
    euclidean_conformal,
    euclidean_wind,
    get_model,
    model_names,
    s3_hopf,
)
from finslernav.riemann import norm_h
from finslernav.spec import ManifoldSpec


@pytest.mark.parametrize("name", model_names())
def test_every_model_certifies_and_round_trips(name):
    model = get_model(name)
    spec = model.spec
    assert spec.name == name
    text = spec.to_json()
    again = ManifoldSpec.from_json(text)
    assert again == spec
    assert again.to_json() == text


def test_euclidean_models():
    m = euclidean_wind(2, (1, 0))
    assert m.spec.regime() == "critical"
    assert euclidean_wind(2, (0.5, 0)).spec.regime() == "subcritical"
    assert euclidean_wind(3, (0, 0, 1)).spec.dim == 3
    for c, rho in ((1.0, 0.5), (0.0, 0.0), (-1.0, -0.5)):
        m = euclidean_conformal(2, c)
        vals = m.verify_certificates()
        assert all(v < 1e-12 for v in vals.values())
        from finslernav.fields import conformal_factor_estimate

        x = m.spec.quasi_points(1)[0]
        assert conformal_factor_estimate(m.spec.metric(), m.spec.field_V(), x) == pytest.approx(rho)


def test_conformal_box_keeps_speed_limit():
    m = euclidean_conformal(2, 1.0)
    for x in m.spec.quasi_points(50):
        V = m.spec.field_V().at(x)
        assert V[0] < 0 and (V @ V) / (-2 * V[0]) < 1


def test_s3_hopf_certificates():
    m = s3_hopf()
    spec = m.spec
    h, W = spec.metric(), spec.wind()
    assert norm_h(h, W, [0.1, 0.2, -0.3]) == pytest.approx(1.0, abs=1e-9)
    vals = m.verify_certificates(20)
    assert vals["wind_norm"] < 1e-9
    assert vals["wind_killing"] < 1e-8
    assert vals["sectional_curvature"] < 1e-6
    for x in spec.quasi_points(30):
        assert float(x @ x) < 0.64


def test_hopf_wind_is_the_pushforward():
    # stereographic inverse of x, then the rotation (-X2, X1, -X4, X3), pushed forward with the chart Jacobian
    def chart_inv(x):
        s = x @ x
        return np.append(2 * x, s - 1) / (1 + s)

    def chart(X):
        return X[:3] / (1 - X[3])

    oracle = FDOracle(step=1e-5, richardson=True)
    for x in (np.array([0.1, 0.2, -0.3]), np.array([-0.4, 0.05, 0.3])):
        X = chart_inv(x)
        Z = np.array([-X[1], X[0], -X[3], X[2]])
        J = np.array([oracle.gradient(lambda P, i=i: chart(P)[i], X) for i in range(3)])
        expected = J @ Z
        got = np.array([float(eval(c.replace("^", "**"), {"x1": x[0], "x2": x[1], "x3": x[2]})) for c in HOPF_WIND])
        assert np.allclose(got, expected, atol=1e-8)


def test_certificate_failure_blocks_model():
    m = euclidean_wind(2, (1, 0))
    bad = Certificate("wind_norm", 0.5, 1e-9, "TRIVIAL", lambda spec, x: 1.0)
    broken = ModelSpace("broken", {}, m.spec, (bad,))
    with pytest.raises(CertificateFailure):
        broken.verify_certificates()


def test_unknown_model():
    with pytest.raises(KeyError):
        get_model("no-such-model")
