import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finslernav import jets
from finslernav.errors import DomainError, EvaluationError
from finslernav.jets import MAX_ORDER, FDOracle, Jet, fd_gradient, fd_hessian, jet_space


def test_coefficient_count_and_prefix_truncation():
    sp = jet_space(3, 3)
    assert sp.size == math.comb(3 + 3, 3)
    a = np.arange(sp.size, dtype=float)
    low = jet_space(3, 1)
    assert np.array_equal(sp.truncate(a, 1), a[: low.size])


def test_binomial_square():
    d = Jet.variable(0, 1.0, 1, 2)
    sq = d * d
    assert np.allclose(sq.coeffs, [1.0, 2.0, 1.0])


def test_sqrt_example():
    j = Jet.seeded(4.0, [4.0], 1)
    r = jets.sqrt(j)
    assert np.allclose(r.coeffs, [2.0, 1.0])


def test_division_by_zero_constant_term():
    z = Jet.variable(0, 0.0, 1, 2)
    with pytest.raises(DomainError):
        1.0 / z
    with pytest.raises(DomainError):
        jets.log(z)
    with pytest.raises(DomainError):
        jets.sqrt(z - 1.0)


def test_order_limit():
    with pytest.raises(ValueError):
        jet_space(2, MAX_ORDER + 1)


def test_derivatives_of_known_function():
    # f = exp(x) * sin(y) at (0.3, 0.7)
    x = Jet.variable(0, 0.3, 2, 3)
    y = Jet.variable(1, 0.7, 2, 3)
    f = jets.exp(x) * jets.sin(y)
    e, s, c = math.exp(0.3), math.sin(0.7), math.cos(0.7)
    assert f.partial(0) == pytest.approx(e * s)
    assert f.partial(1) == pytest.approx(e * c)
    assert f.partial(0, 1, 1) == pytest.approx(-e * s)
    assert f.partial(1, 1, 1) == pytest.approx(-e * c)
    assert np.allclose(f.hessian(), [[e * s, e * c], [e * c, -e * s]])


def test_batched_inverse_matches_jet_arithmetic():
    sp = jet_space(2, 2)
    x = sp.variable(0, 0.4)
    y = sp.variable(1, -0.2)
    A = np.stack([np.stack([sp.constant(2.0) + x, y]), np.stack([y, sp.constant(3.0) + sp.mul(x, x)])])
    Ainv = sp.inv(A)
    eye = sp.matmul(A, Ainv)
    for i in range(2):
        for j in range(2):
            expect = sp.constant(1.0 if i == j else 0.0)
            assert np.allclose(eye[i, j], expect, atol=1e-13)


def test_diff_lowers_order():
    x = Jet.variable(0, 2.0, 1, 3)
    f = x * x * x
    d = f.diff(0)
    assert d.order == 2
    assert np.allclose(d.coeffs, [12.0, 12.0, 3.0])


_coeffs = arrays(np.float64, jet_space(2, 3).size, elements=st.floats(-3, 3))


@settings(max_examples=60, deadline=None)
@given(_coeffs, _coeffs, _coeffs)
def test_ring_axioms(a, b, c):
    sp = jet_space(2, 3)
    A, B, C = (Jet(sp, v) for v in (a, b, c))
    assert np.allclose(((A + B) + C).coeffs, (A + (B + C)).coeffs, atol=1e-12)
    assert np.allclose((A * (B + C)).coeffs, (A * B + A * C).coeffs, atol=1e-12)
    assert np.allclose((A * B).coeffs, (B * A).coeffs, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(_coeffs, st.floats(0.5, 4.0))
def test_exp_log_inverse(a, c0):
    sp = jet_space(2, 3)
    a = a.copy()
    a[0] = c0
    A = Jet(sp, a)
    assert np.allclose(jets.exp(jets.log(A)).coeffs, a, atol=1e-10)
    assert np.allclose((jets.sqrt(A) * jets.sqrt(A)).coeffs, a, atol=1e-10)
    assert np.allclose((A * A.reciprocal()).coeffs, sp.constant(1.0), atol=1e-10)


def test_fd_oracle_examples():
    assert fd_gradient(lambda v: v[0] ** 2, [3.0])[0] == pytest.approx(6.0, abs=1e-7)
    assert np.allclose(fd_gradient(lambda v: v[0] * v[1], [2.0, 5.0]), [5.0, 2.0], atol=1e-7)
    H = fd_hessian(lambda v: v[0] ** 2 * v[1], [1.0, 2.0], FDOracle(step=1e-3, richardson=True))
    assert np.allclose(H, [[4.0, 2.0], [2.0, 0.0]], atol=1e-6)


def test_fd_oracle_wraps_failures():
    def bad(v):
        raise ZeroDivisionError("boom")

    with pytest.raises(EvaluationError):
        fd_gradient(bad, [0.0])
    with pytest.raises(ValueError):
        FDOracle(step=0.0)
