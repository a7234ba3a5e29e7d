import json

import numpy as np
import pytest

from finslernav.errors import ExprSyntaxError, RegimeMismatchError, SpecError
from finslernav.finsler import Kropina, Randers, Riemannian
from finslernav.spec import ManifoldSpec, make_rng

BASE = {"dim": 2, "h": [["1", "0"], ["0", "1"]], "W": ["1", "0"], "sample_box": [[-1, 1], [-1, 1]]}


def spec(**kw):
    d = dict(BASE)
    d.update(kw)
    return ManifoldSpec.from_dict(d)


def test_upper_triangle_and_numbers():
    s = spec(h=[["2", 0.5], [None, 3]])
    assert s.h == (("2", "0.5"), ("0.5", "3"))
    s2 = spec(h=[["2", "0.5"], ["3"]])
    assert s2.h == s.h


def test_metric_types():
    assert isinstance(spec().finsler(), Kropina)
    assert isinstance(spec(W=["0.5", "0"]).finsler(), Randers)
    assert isinstance(spec(metric_type="riemannian").finsler(), Riemannian)
    with pytest.raises(RegimeMismatchError):
        spec(metric_type="randers").finsler()
    with pytest.raises(RegimeMismatchError):
        spec(W=["2*x1", "0"]).finsler()


@pytest.mark.parametrize(
    "patch",
    [
        {"dim": 0},
        {"h": [["1", "0"]]},
        {"W": ["1"]},
        {"metric_type": "lorentz"},
        {"sample_box": [[1, -1], [0, 1]]},
        {"params": {"a": "x"}},
        {"V": ["1"]},
    ],
)
def test_invalid_specs(patch):
    with pytest.raises(SpecError):
        spec(**patch)


def test_parse_errors_surface_at_load():
    with pytest.raises(ExprSyntaxError):
        spec(W=["1 +", "0"])
    with pytest.raises(SpecError):
        ManifoldSpec.from_json("{not json")


def test_json_round_trip_is_stable(tmp_path):
    s = spec(V=["-1/2", "0"], params={"c": 0.25}, guard="2 - x1^2", name="demo")
    p = tmp_path / "s.json"
    s.dump(p)
    assert ManifoldSpec.load(p) == s
    text = p.read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_sampling_is_deterministic_and_respects_guard():
    s = spec(guard="0.25 - x1^2 - x2^2")
    a = s.sample_points(30, seed=7)
    b = s.sample_points(30, seed=7)
    assert np.array_equal(a, b)
    assert np.all((a**2).sum(axis=1) < 0.25)
    q = s.quasi_points(20)
    assert np.array_equal(q, s.quasi_points(20))
    with pytest.raises(SpecError):
        spec(guard="-1").sample_points(3)


def test_rng_is_philox():
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)
    assert make_rng(5).random() == make_rng(5).random()


def test_cone_directions_margin():
    s = spec()
    F = s.finsler()
    ys = s.sample_directions(F, [0, 0], 50, make_rng(1))
    assert np.all(ys[:, 0] > 0.05)
