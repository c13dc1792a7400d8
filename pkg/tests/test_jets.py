"""Jet kernel tests: ring arithmetic, transcendentals, derivatives,
substitution, and reliable-order bookkeeping."""

import math
import random

import pytest

from ambientq import (
    EXACT,
    FLOAT,
    BackendMismatch,
    InsufficientOrder,
    Jet,
    NotRepresentable,
    ShapeMismatch,
    monomials,
    rational,
)
from ambientq._rand import random_jet


def Q(n, d=1):
    return rational(n) / rational(d)


def x_of(num_vars=1, order=8):
    return Jet.variable(0, num_vars, order)


# -- ring operations ---------------------------------------------------------


def test_difference_of_squares():
    x = x_of(order=4)
    p = (1 + x) * (1 - x)
    assert p == Jet.from_terms([((0,), 1), ((2,), -1)], 1, 4)


def test_geometric_series():
    x = x_of(order=3)
    p = 1 / (1 - x)
    assert p == Jet.from_terms([((k,), 1) for k in range(4)], 1, 3)


def test_truncation_drops_degree_two():
    x = Jet.variable(0, 2, 1)
    y = Jet.variable(1, 2, 1)
    p = (1 + x + y) * (1 + x + y)
    assert p == Jet.from_terms([((0, 0), 1), ((1, 0), 2), ((0, 1), 2)], 2, 1)


def test_division_inverts_multiplication():
    rng = random.Random(11)
    for _ in range(5):
        a = 1 + random_jet(rng, 3, 5, zero_constant=True)
        b = 1 + random_jet(rng, 3, 5, zero_constant=True)
        assert (a * b) / b == a


def test_divide_by_zero_constant_term():
    x = x_of()
    with pytest.raises(ZeroDivisionError):
        1 / x


def test_shape_and_backend_mismatch():
    a = Jet.one(1, 3)
    b = Jet.one(2, 3)
    with pytest.raises(ShapeMismatch):
        a + b
    c = Jet.one(1, 3, FLOAT)
    with pytest.raises(BackendMismatch):
        a * c


def test_result_order_is_min_of_inputs():
    a = Jet.one(2, 5)
    b = Jet.one(2, 3)
    assert (a + b).order == 3
    assert (a * b).order == 3


def test_product_order_gains_factor_valuation():
    # coefficients of f*g at degree d only read f below d - val(g) and g
    # below d - val(f), so each factor's valuation credits the other's order
    x = Jet.variable(0, 2, 4)
    f = Jet.one(2, 4) + x
    assert (x * x).order == 5
    assert (f * Jet.variable(0, 2, 5)).order == 5
    # f*x at degree 5 would pair f's constant with x's unknown degree-5 part
    assert (f * x).order == 4
    # an exact-zero jet of order q stands for O(q+1): squaring doubles that,
    # but f*z still pairs f's constant with z's unknown tail at degree 4
    z = Jet.zero(2, 3)
    assert (z * z).order == 7
    assert (f * z).order == 3
    assert (f * z).is_zero()


# -- transcendentals ----------------------------------------------------------


def test_log_exp_roundtrip():
    x = x_of(order=5)
    assert x.exp().log() == x


def test_log_series_against_term_by_term_oracle():
    x = x_of(order=3)
    got = (1 + x).log()
    oracle = Jet.zero(1, 3)
    sign = 1
    for k in range(1, 4):
        oracle = oracle + (x ** k).scaled(Q(sign, k))
        sign = -sign
    assert got == oracle


def test_sqrt_squares_back():
    x = x_of(order=6)
    s = (1 + x).sqrt()
    assert s * s == 1 + x


def test_rational_power_composes():
    x = x_of(order=6)
    p = (1 + x).power(Q(2, 3))
    assert p ** 3 == (1 + x) ** 2


def test_exact_log_requires_unit_constant():
    x = x_of()
    with pytest.raises(NotRepresentable):
        (2 + x).log()
    with pytest.raises(NotRepresentable):
        (x - 1).log()


def test_float_log_requires_positive_constant():
    x = Jet.variable(0, 1, 4, FLOAT)
    assert abs((2 + x).log().constant_term() - math.log(2.0)) < 1e-15
    with pytest.raises(NotRepresentable):
        (x - 1.0).log()


def test_exp_of_nonzero_constant_exact_is_rejected():
    x = x_of()
    with pytest.raises(NotRepresentable):
        (1 + x).exp()


def test_sin_cos_pythagoras():
    x = x_of(order=7)
    s, c = x.sin(), x.cos()
    assert s * s + c * c == Jet.one(1, 7)


# -- differentiation -----------------------------------------------------------


def test_derivative_of_monomial():
    f = Jet.from_terms([((2, 1), 1)], 2, 4)
    assert f.derivative(0) == Jet.from_terms([((1, 1), 2)], 2, 3)


def test_mixed_partials_commute():
    rng = random.Random(3)
    f = random_jet(rng, 3, 6)
    assert f.derivative(0).derivative(1) == f.derivative(1).derivative(0)


def test_leibniz_rule():
    rng = random.Random(4)
    f = random_jet(rng, 2, 6)
    g = random_jet(rng, 2, 6)
    lhs = (f * g).derivative(0)
    rhs = f.derivative(0) * g.truncated(5) + f.truncated(5) * g.derivative(0)
    k = min(lhs.order, rhs.order)
    assert lhs.truncated(k) == rhs.truncated(k)


def test_chain_rule_for_exp():
    rng = random.Random(5)
    f = random_jet(rng, 2, 6, zero_constant=True)
    lhs = f.exp().derivative(1)
    rhs = f.exp().truncated(5) * f.derivative(1)
    assert lhs == rhs


def test_derivative_drops_reliable_order():
    f = Jet.from_terms([((3,), 1)], 1, 5)
    d = f.derivative(0)
    assert d.order == 4
    with pytest.raises(InsufficientOrder):
        Jet.one(1, 0).derivative(0)


# -- substitution --------------------------------------------------------------


def test_substitute_polynomial():
    x = x_of(order=2)
    f = 1 + x
    y = Jet.variable(0, 1, 2)
    assert f.substitute([y + y * y]) == 1 + y + y * y


def test_substitute_inverse_composition():
    x = x_of(order=5)
    y = x_of(order=5)
    assert x.exp().substitute([(1 + y).log()]) == 1 + y


def test_cone_coordinate_substitution():
    # 2 t^2 rho pulled back along t = 1/r, rho = -r^2/2 collapses to -1.
    # Recentred at (t, rho) = (1, -1/2) and r = 1 to satisfy the zero-constant
    # precondition of formal composition.
    t1 = Jet.variable(0, 2, 8)
    r1 = Jet.variable(1, 2, 8)
    rhotilde = (1 + t1) ** 2 * (r1 - Q(1, 2)) * 2
    r = Jet.variable(0, 1, 8)
    t_shift = 1 / (1 + r) - 1
    rho_shift = ((1 + r) ** 2).scaled(Q(-1, 2)) + Q(1, 2)
    pulled = rhotilde.substitute([t_shift, rho_shift])
    assert pulled == Jet.constant(-1, 1, 8)


def test_substitute_rejects_nonzero_constant():
    x = x_of(order=3)
    y = x_of(order=3)
    with pytest.raises(NotRepresentable):
        x.substitute([1 + y])


def test_substitute_ignores_constant_on_unused_variable():
    f = Jet.variable(0, 2, 3)
    one = Jet.one(2, 3)
    z = Jet.variable(1, 2, 3)
    assert f.substitute([z, one]) == Jet.variable(1, 2, 3)


# -- invariants ----------------------------------------------------------------


def test_ring_axioms_randomized():
    rng = random.Random(20260814)
    for num_vars, order in [(1, 8), (3, 6), (8, 3)]:
        a = random_jet(rng, num_vars, order)
        b = random_jet(rng, num_vars, order)
        c = random_jet(rng, num_vars, order)
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + Jet.zero(num_vars, order) == a
        assert a * Jet.one(num_vars, order) == a
        assert a - a == Jet.zero(num_vars, order)


def test_reliable_order_queries():
    x = x_of(order=2)
    f = (1 + x) * (1 + x)
    assert f.coefficient((2,)) == 1
    with pytest.raises(InsufficientOrder):
        f.coefficient((3,))
    with pytest.raises(InsufficientOrder):
        f.truncated(5)
    with pytest.raises(InsufficientOrder):
        f.homogeneous_part(3)


def test_valuation_and_homogeneous_part():
    x = Jet.variable(0, 2, 4)
    y = Jet.variable(1, 2, 4)
    f = x * y + x ** 3
    assert f.valuation() == 2
    assert f.homogeneous_part(2) == x * y
    assert Jet.zero(2, 4).valuation() is None


def test_extend_vars_embeds_blockwise():
    x = Jet.variable(0, 1, 4)
    f = 1 + x + x ** 2
    g = f.extend_vars(3, at=1)
    y = Jet.variable(1, 3, 4)
    assert g == 1 + y + y ** 2


def test_exact_backend_stays_rational():
    rng = random.Random(7)
    f = random_jet(rng, 2, 5)
    g = 1 + random_jet(rng, 2, 5, zero_constant=True)
    for _, v in (f / g).terms():
        assert not isinstance(v, float)


def test_float_backend_roundtrip():
    rng = random.Random(8)
    f = random_jet(rng, 2, 4)
    ff = f.to_float_backend()
    assert ff.backend == FLOAT
    for expt, v in f.terms():
        assert abs(ff.coefficient(expt) - float(v)) < 1e-15


def test_monomials_enumeration_count():
    # degree <= 3 in 2 vars: C(5, 2) = 10 multi-indices
    assert len(list(monomials(2, 3))) == 10
