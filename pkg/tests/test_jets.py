import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangentlab.jets import (
    MAX_ORDER,
    Jet,
    JetDomainError,
    JetShapeError,
    SingularMatrixError,
    compose,
    extract_partial,
    jeinsum,
    jet_det,
    jet_elementary,
    jet_inv,
    lift_variable,
    monomials,
    solve,
    stack,
)


def variables(p, order):
    u = Jet.variables(p, order)
    return [u[i] for i in range(len(p))]


def multi_indices(m, max_order):
    for k in range(max_order + 1):
        for e in itertools.product(range(k + 1), repeat=m):
            if sum(e) == k:
                yield e


# ---------------------------------------------------------------------------
# hand-computed oracles
# ---------------------------------------------------------------------------


def test_monomial_count():
    # C(m + order, order)
    assert len(monomials(2, 3)) == 10
    assert len(monomials(4, 5)) == math.comb(9, 5)


def test_polynomial_partials_exact():
    x, y = variables([2.0, -1.0], 4)
    f = x**3 * y**2 + 5 * x * y
    assert extract_partial(f, (0, 0)) == pytest.approx(8 * 1 - 10)
    assert extract_partial(f, (1, 0)) == pytest.approx(3 * 4 * 1 + 5 * -1)
    assert extract_partial(f, (2, 1)) == pytest.approx(6 * 2 * 2 * -1)
    assert extract_partial(f, (3, 1)) == pytest.approx(6 * 2 * -1)
    assert extract_partial(f, (0, 3)) == pytest.approx(0.0)
    assert extract_partial(f, (2, 2)) == pytest.approx(24.0)


def test_elementary_values_and_first_derivatives():
    (x,) = variables([0.7], 3)
    for fn, f, df in [
        ("exp", math.exp, math.exp),
        ("ln", math.log, lambda v: 1 / v),
        ("sqrt", math.sqrt, lambda v: 0.5 / math.sqrt(v)),
        ("sin", math.sin, math.cos),
        ("cos", math.cos, lambda v: -math.sin(v)),
        ("tan", math.tan, lambda v: 1 / math.cos(v) ** 2),
    ]:
        j = jet_elementary(fn, x)
        assert float(j.value) == pytest.approx(f(0.7), rel=1e-14)
        assert extract_partial(j, (1,)) == pytest.approx(df(0.7), rel=1e-13)


def test_tan_third_derivative():
    (x,) = variables([0.3], 3)
    t = math.tan(0.3)
    # d^3 tan = 2 sec^2 (1 + 3 tan^2)
    want = 2 * (1 + t * t) * (1 + 3 * t * t)
    assert extract_partial(jet_elementary("tan", x), (3,)) == pytest.approx(want, rel=1e-12)


def test_real_power():
    (x,) = variables([1.5], 2)
    j = jet_elementary("pow_real", x, 2.5)
    assert extract_partial(j, (2,)) == pytest.approx(2.5 * 1.5 * 1.5**0.5, rel=1e-13)


@pytest.mark.parametrize("fn,v", [("ln", 0.0), ("ln", -1.0), ("sqrt", -0.5), ("tan", math.pi / 2)])
def test_domain_errors(fn, v):
    (x,) = variables([v], 2)
    with pytest.raises(JetDomainError) as info:
        jet_elementary(fn, x)
    assert info.value.fn == fn


def test_order_bounds():
    with pytest.raises(JetShapeError):
        Jet.variables([0.0], MAX_ORDER + 1)
    x = Jet.variables([0.0, 1.0], 2)
    with pytest.raises(JetShapeError):
        extract_partial(x[0], (2, 1))
    with pytest.raises(IndexError):
        lift_variable(3, [0.0, 1.0], 2)


# ---------------------------------------------------------------------------
# finite-difference oracle: every partial up to order 4
# ---------------------------------------------------------------------------


def _f(u):
    x, y, z = u
    return jet_elementary("exp", 0.3 * x * y) * jet_elementary("sin", z + x) + jet_elementary("ln", 2.0 + y * y) / (1.5 + z * x)


def _jet_at(p, order):
    if order > MAX_ORDER:
        raise AssertionError
    return _f(variables(p, order))


@pytest.mark.parametrize("seed", range(3))
def test_all_partials_to_order_four_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-0.5, 0.5, size=3)
    h = 1e-5
    base = _jet_at(p, 4)
    for e in multi_indices(3, 3):
        for a in range(3):
            up = list(e)
            up[a] += 1
            dp = np.zeros(3)
            dp[a] = h
            lo = extract_partial(_jet_at(p - dp, 3), e)
            hi = extract_partial(_jet_at(p + dp, 3), e)
            fd = (hi - lo) / (2 * h)
            got = extract_partial(base, tuple(up))
            assert abs(got - fd) <= 1e-6 * max(1.0, abs(got)), (e, a, got, fd)


# ---------------------------------------------------------------------------
# algebraic properties
# ---------------------------------------------------------------------------

coords = st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=2, max_size=2)


@settings(max_examples=40, deadline=None)
@given(coords, st.integers(1, 4))
def test_leibniz_rule(p, order):
    x, y = variables(p, order)
    f = jet_elementary("sin", x * y + 0.3)
    g = jet_elementary("exp", x - y)
    fg = f * g
    for k in range(2):
        lhs = fg.deriv(k)
        rhs = f.deriv(k) * g.truncate(order - 1) + f.truncate(order - 1) * g.deriv(k)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(coords)
def test_exp_ln_inverse(p):
    x, y = variables(p, 4)
    a = 2.0 + x * y + 0.3 * x
    np.testing.assert_allclose(jet_elementary("exp", jet_elementary("ln", a)).coeffs, a.coeffs, atol=1e-12)
    s = jet_elementary("sqrt", a)
    np.testing.assert_allclose((s * s).coeffs, a.coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(coords)
def test_division_is_multiplicative_inverse(p):
    x, y = variables(p, 4)
    b = 1.7 + jet_elementary("cos", x) * y
    np.testing.assert_allclose(((x / b) * b).coeffs, x.coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(coords)
def test_compose_chain_rule(p):
    # f(u, v) = u^2 v, inner = (sin x, x y): compare with direct evaluation
    x, y = variables(p, 4)
    inner = stack([jet_elementary("sin", x), x * y])
    u, v = variables(inner.value, 4)
    f = u * u * v + jet_elementary("exp", v)
    direct = jet_elementary("sin", x) ** 2 * (x * y) + jet_elementary("exp", x * y)
    np.testing.assert_allclose(compose(f, inner).coeffs, direct.coeffs, atol=1e-11)


def test_integer_power_matches_repeated_product():
    x, y = variables([0.4, -0.9], 5)
    a = x + 2 * y
    np.testing.assert_allclose((a**4).coeffs, (a * a * a * a).coeffs, atol=1e-12)
    np.testing.assert_allclose((a**-2 * a * a).coeffs, Jet.constant(1.0, 2, 5).coeffs, atol=1e-12)


def _matrix_jet(p, order):
    x, y = variables(p, order)
    return stack([stack([2 + x, x * y]), stack([jet_elementary("sin", y), 1.5 - y * y])])


def test_inverse_and_determinant():
    A = _matrix_jet([0.3, -0.2], 3)
    Ainv = jet_inv(A)
    eye = jeinsum("ab,bc->ac", A, Ainv)
    np.testing.assert_allclose(eye.value, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(eye.coeffs[..., 1:], 0.0, atol=1e-12)
    d = jet_det(A)
    direct = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    np.testing.assert_allclose(d.coeffs, direct.coeffs, atol=1e-12)


def test_jacobi_formula_for_det():
    A = _matrix_jet([0.1, 0.25], 2)
    d = jet_det(A)
    Ainv = np.linalg.inv(A.value)
    for k in range(2):
        want = float(d.value) * np.trace(Ainv @ A.deriv(k).value)
        assert extract_partial(d, tuple(int(i == k) for i in range(2))) == pytest.approx(want, rel=1e-12)


def test_singular_matrix_rejected():
    x, y = variables([0.0, 0.0], 1)
    A = stack([stack([x, y]), stack([y, x])])
    with pytest.raises(SingularMatrixError):
        jet_inv(A)
    with pytest.raises(SingularMatrixError):
        solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 0.0]))


def test_stack_and_transpose_follow_numpy_axes():
    x, y = variables([1.0, 2.0], 1)
    M = stack([stack([x, y, x * y]), stack([y, x, x + y])])
    assert M.shape == (2, 3)
    np.testing.assert_allclose(M.transpose(1, 0).value, M.value.T)
    np.testing.assert_allclose(stack([x, y], axis=0).value, [1.0, 2.0])


def test_jeinsum_rejects_reserved_letter():
    x, _ = variables([1.0, 2.0], 1)
    v = stack([x, x])
    with pytest.raises(ValueError):
        jeinsum("Z,Z->", v, v)
