import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glbm import (
    InvalidParameterError,
    NCPoly,
    RngStream,
    TensorPoly,
    cyclic_derivative,
    eval_poly,
    eval_tensor_tstrace,
    nc_derivative,
    sd_check,
    x,
)

X1, X2 = x(1), x(2)


def tensor(*triples):
    return TensorPoly({(tuple(l), tuple(r)): c for l, r, c in triples})


# --- derivatives ---------------------------------------------------------------

def test_nc_derivative_single_letter():
    assert nc_derivative(X1, 1) == tensor(((), (), 1.0))
    assert nc_derivative(X2, 1) == TensorPoly.zero()


def test_nc_derivative_square():
    assert nc_derivative(X1 * X1, 1) == tensor(((), (1,), 1.0), ((1,), (), 1.0))


def test_cyclic_derivative_examples():
    assert cyclic_derivative(X1 * X1, 1) == 2.0 * X1
    assert cyclic_derivative(X2 * X1 * X2, 1) == X2 * X2
    assert cyclic_derivative(X2, 1) == NCPoly.zero()


def test_derivative_index_validation():
    with pytest.raises(InvalidParameterError):
        nc_derivative(X1, 0)


def test_degree_bookkeeping():
    P = X1 * X2 * X1 * X1 + 2.0 * (X2 * X1)
    for (wl, wr), _ in nc_derivative(P, 1).terms.items():
        assert len(wl) + len(wr) in {deg - 1 for deg in (4, 2)}


words = st.lists(st.integers(min_value=1, max_value=2), min_size=0, max_size=4)


@st.composite
def polys(draw):
    n_terms = draw(st.integers(min_value=1, max_value=3))
    terms = {}
    for _ in range(n_terms):
        w = tuple(draw(words))
        c = draw(st.integers(min_value=-3, max_value=3))
        if c:
            terms[w] = terms.get(w, 0) + c
    return NCPoly(terms)


@settings(max_examples=80, deadline=None)
@given(P=polys(), Q=polys(), i=st.integers(min_value=1, max_value=2))
def test_leibniz_rule(P, Q, i):
    lhs = nc_derivative(P * Q, i)
    rhs = nc_derivative(P, i).mul_right_poly(Q) + nc_derivative(Q, i).mul_left_poly(P)
    assert lhs == rhs


# --- canonical form -------------------------------------------------------------

def test_zero_coefficients_dropped():
    assert (X1 - X1) == NCPoly.zero()
    assert not (X1 * X2 - X1 * X2).terms
    P = NCPoly({(1,): 1.0, (2,): 0.0})
    assert (2,) not in P.terms


def test_power_and_constants():
    assert X1 ** 0 == NCPoly.one()
    assert X1 ** 3 == X1 * X1 * X1
    assert (NCPoly.one() + X1).degree() == 1


# --- evaluation ------------------------------------------------------------------

def test_eval_examples():
    I2 = np.eye(2, dtype=complex)
    assert np.array_equal(eval_poly(X1, [I2]), I2)
    assert eval_tensor_tstrace(tensor(((), (), 1.0)), [I2]) == 1.0
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    B = np.array([[0, 1j], [-1j, 5]], dtype=complex)
    assert np.allclose(eval_poly(X1 * X2, [A, B]), A @ B)
    val = eval_tensor_tstrace(tensor(((1,), (2,), 2.0)), [A, B])
    assert val == pytest.approx(2 * np.trace(A) / 2 * np.trace(B) / 2)


def test_eval_needs_enough_matrices():
    with pytest.raises(InvalidParameterError):
        eval_poly(X2, [np.eye(2, dtype=complex)])


# --- serialization ----------------------------------------------------------------

def test_serialize_examples():
    P = NCPoly({(1, 2, 1): 1.0})
    assert P.serialize() == "1.0+0.0i * x1.x2.x1"
    assert NCPoly.parse(P.serialize()) == P
    assert NCPoly.zero().serialize() == "0"
    assert NCPoly.parse("0") == NCPoly.zero()


@pytest.mark.parametrize("coeff", [1 / 3, -0.0 - 0.0j, 1e-17 + 2.5j,
                                   -2.75 - 1e300j, 3.0 + (2 / 7) * 1j])
def test_serialize_round_trip_bit_exact(coeff):
    P = NCPoly({(1,): coeff, (): -coeff, (2, 1): 1.0 + coeff})
    Q = NCPoly.parse(P.serialize())
    for w, c in P.terms.items():
        c2 = Q.terms[w]
        assert (np.float64(c.real).tobytes() == np.float64(c2.real).tobytes()
                and np.float64(c.imag).tobytes() == np.float64(c2.imag).tobytes())


def test_parse_rejects_malformed():
    with pytest.raises(InvalidParameterError):
        NCPoly.parse("1.0+0.0i x1")
    with pytest.raises(InvalidParameterError):
        NCPoly.parse("1.0+0.0i * y1")


# --- Gaussian integration by parts -------------------------------------------------

def test_sd_check_constant_polynomial():
    res = sd_check(NCPoly.one(), 1, 16, 200, RngStream(31, 0))
    assert res.rhs_mean == 0.0 and res.rhs_se == 0.0
    assert abs(res.lhs_mean) <= 4 * res.lhs_se + 1e-12


def test_sd_check_linear_polynomial():
    res = sd_check(X1, 1, 16, 200, RngStream(32, 0))
    assert res.rhs_mean == 1.0 and res.rhs_se == 0.0  # d(X1) = 1 (x) 1 exactly
    assert abs(res.lhs_mean - 1.0) <= 4 * res.lhs_se
    assert res.consistent()


def test_sd_check_regression_suite():
    # ten polynomials up to degree 5 in two indeterminates
    suite = [
        X1,
        X2 * X2,
        X1 * X2,
        X1 * X1 * X1,
        X2 * X1 * X2,
        X1 * X1 * X2 * X2,
        X1 * X2 * X1 * X2,
        X1 ** 5,
        X2 * X1 * X1 * X1 * X2,
        X1 * X2 * X2 * X1 * X2 + 2.0 * (X1 * X1),
    ]
    for k, Q in enumerate(suite):
        res = sd_check(Q, 1, 32, 300, RngStream(33, k))
        assert res.consistent(), f"suite[{k}] lhs={res.lhs_mean} rhs={res.rhs_mean}"


def test_sd_check_validation():
    with pytest.raises(InvalidParameterError):
        sd_check(X1, 1, 1, 100, RngStream(34, 0))
    with pytest.raises(InvalidParameterError):
        sd_check(X1, 1, 8, 1, RngStream(34, 0))
