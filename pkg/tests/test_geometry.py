"""Curvature calculus tests: calibration metrics, conformal behaviour,
Laplacian sign anchors, and tensor identities on random metrics."""

import math

import pytest

from ambientq import (
    DegenerateInput,
    InsufficientOrder,
    Jet,
    ShapeMismatch,
    rational,
)
from ambientq._rand import random_conformal_factor, random_metric_components, rng_for
from ambientq.geometry import (
    MetricJet,
    conformal_rescale,
    curvature,
    invert_jet_matrix,
    laplacian,
    rep_invariants,
)


def const_jet(value, dim, order):
    return Jet.constant(rational(value), dim, order)


def jets_equal_zero(tensor):
    if isinstance(tensor, Jet):
        return tensor.is_zero()
    return all(jets_equal_zero(t) for t in tensor)


# -- metric container ----------------------------------------------------------


def test_inverse_metric_identity():
    rng = rng_for(1, "ginv")
    g = MetricJet(random_metric_components(rng, 3, 5))
    ginv = g.inverse()
    for i in range(3):
        for j in range(3):
            acc = None
            for k in range(3):
                term = ginv[i][k] * g.components[k][j]
                acc = term if acc is None else acc + term
            expected = Jet.one(3, 5) if i == j else Jet.zero(3, 5)
            assert acc == expected


def test_signature_detection():
    flat = MetricJet.flat(4, 2)
    assert flat.signature == (4, 0)
    comps = [[Jet.zero(2, 2) for _ in range(2)] for _ in range(2)]
    comps[0][1] = comps[1][0] = Jet.one(2, 2)
    hyper = MetricJet(comps)
    assert hyper.signature == (1, 1)
    lor = [[Jet.zero(3, 2) for _ in range(3)] for _ in range(3)]
    lor[0][0] = -Jet.one(3, 2)
    lor[1][1] = lor[2][2] = Jet.one(3, 2)
    assert MetricJet(lor).signature == (2, 1)


def test_degenerate_metric_rejected():
    comps = [[Jet.zero(2, 2) for _ in range(2)] for _ in range(2)]
    comps[0][0] = Jet.one(2, 2)
    with pytest.raises(DegenerateInput):
        MetricJet(comps)


def test_asymmetric_metric_rejected():
    comps = [[Jet.one(2, 2), Jet.one(2, 2)], [Jet.zero(2, 2), Jet.one(2, 2)]]
    with pytest.raises(ShapeMismatch):
        MetricJet(comps)


def test_invert_jet_matrix_off_diagonal_pivot():
    z = Jet.zero(2, 3)
    one = Jet.one(2, 3)
    x = Jet.variable(0, 2, 3)
    inv = invert_jet_matrix([[x, one], [one, z]])
    # [[x, 1], [1, 0]]^{-1} = [[0, 1], [1, -x]]
    assert inv[0][0] == z and inv[0][1] == one
    assert inv[1][0] == one and inv[1][1] == -x


# -- curvature of calibration metrics ------------------------------------------


def test_flat_metric_curvature_vanishes():
    g = MetricJet.flat(4, 6)
    pack = curvature(g)
    assert jets_equal_zero(pack.christoffel)
    assert jets_equal_zero(pack.riemann)
    assert jets_equal_zero(pack.ricci)
    assert pack.scalar.is_zero()
    assert jets_equal_zero(pack.weyl)
    assert jets_equal_zero(pack.cotton)
    assert jets_equal_zero(pack.bach)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_round_sphere_curvature(n):
    order = 5 if n <= 4 else 4
    g = MetricJet.round_sphere(n, order)
    pack = curvature(g)
    assert pack.scalar == const_jet(n * (n - 1), n, order - 2)
    if n == 2:
        assert pack.schouten_trace == const_jet(1, n, order - 2)
        return
    assert pack.schouten_trace == const_jet(rational(n, 2), n, order - 2)
    half = rational(1, 2)
    for i in range(n):
        for j in range(n):
            assert pack.schouten[i][j] == g.components[i][j].truncated(order - 2).scaled(half)
    assert jets_equal_zero(pack.weyl)
    assert jets_equal_zero(pack.cotton)
    if n >= 4:
        assert jets_equal_zero(pack.bach)


def test_conformally_flat_weyl_vanishes():
    rng = rng_for(2, "confflat")
    for n in (4, 5):
        ups = random_conformal_factor(rng, n, 5)
        g = conformal_rescale(MetricJet.flat(n, 5), ups)
        pack = curvature(g)
        assert jets_equal_zero(pack.weyl)
        assert jets_equal_zero(pack.cotton)
        if n == 4:
            assert jets_equal_zero(pack.bach)


# -- conformal rescaling --------------------------------------------------------


def test_conformal_rescale_zero_factor_is_identity():
    rng = rng_for(3, "confid")
    g = MetricJet(random_metric_components(rng, 3, 4))
    h = conformal_rescale(g, Jet.zero(3, 4))
    for i in range(3):
        for j in range(3):
            assert h.components[i][j] == g.components[i][j]


def test_constant_rescale_scales_scalar_curvature_exact():
    # e^{2c} g with e^{2c} = 9/4 rational: R scales by the inverse factor
    rng = rng_for(4, "confscale")
    g = MetricJet(random_metric_components(rng, 3, 4))
    mu = rational(9, 4)
    h = g.scaled(mu)
    r_g = curvature(g).scalar
    r_h = curvature(h).scalar
    assert r_h == r_g.scaled(rational(4, 9))


def test_constant_rescale_scales_scalar_curvature_float():
    rng = rng_for(5, "confscalef")
    comps = random_metric_components(rng, 3, 4)
    g = MetricJet([[e.to_float_backend() for e in row] for row in comps])
    c = 0.3
    h = conformal_rescale(g, Jet.constant(c, 3, 4, "float"))
    r_g = curvature(g).scalar
    r_h = curvature(h).scalar
    scale = math.exp(-2 * c)
    for expt, v in r_h.terms():
        assert abs(v - scale * r_g.coefficient(expt)) < 1e-10


def test_two_dimensional_conformal_identity():
    # ghat = e^{2u} delta: Rhat = e^{-2u} (2 Delta u) with the positive Laplacian
    rng = rng_for(6, "conf2d")
    u = random_conformal_factor(rng, 2, 6)
    flat = MetricJet.flat(2, 6)
    ghat = conformal_rescale(flat, u)
    lhs = curvature(ghat).scalar
    rhs = (-u.scaled(2)).exp() * laplacian(flat, u).scaled(2)
    assert lhs == rhs.truncated(lhs.order)


def test_weyl_conformal_covariance():
    rng = rng_for(7, "weylconf")
    n = 4
    g = MetricJet(random_metric_components(rng, n, 4))
    ups = random_conformal_factor(rng, n, 4)
    ghat = conformal_rescale(g, ups)
    w = curvature(g).weyl
    what = curvature(ghat).weyl
    factor = ups.scaled(2).exp()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    lhs = what[i][j][k][l]
                    assert lhs == (factor * w[i][j][k][l]).truncated(lhs.order)


# -- laplacian -------------------------------------------------------------------


def test_laplacian_sign_anchor():
    g = MetricJet.flat(2, 4)
    x = Jet.variable(0, 2, 4)
    lap = laplacian(g, x * x)
    assert lap == const_jet(-2, 2, lap.order)


def test_laplacian_kills_harmonic_polynomial():
    g = MetricJet.flat(2, 4)
    x = Jet.variable(0, 2, 4)
    y = Jet.variable(1, 2, 4)
    assert laplacian(g, x * x - y * y).is_zero()
    assert laplacian(g, x * y).is_zero()


def test_laplacian_product_rule():
    rng = rng_for(8, "lapleib")
    n = 3
    g = MetricJet(random_metric_components(rng, n, 6))
    f = 1 + random_conformal_factor(rng, n, 6)
    h = 2 + random_conformal_factor(rng, n, 6)
    ginv = g.inverse()
    grad = None
    for i in range(n):
        for j in range(n):
            term = ginv[i][j] * f.derivative(i) * h.derivative(j)
            grad = term if grad is None else grad + term
    lhs = laplacian(g, f * h)
    rhs = f * laplacian(g, h) + h * laplacian(g, f) - grad.scaled(2)
    assert lhs == rhs.truncated(lhs.order)


def test_laplacian_order_requirement():
    g = MetricJet.flat(2, 3)
    with pytest.raises(InsufficientOrder):
        laplacian(g, Jet.one(2, 1))


# -- identities on random metrics -------------------------------------------------


@pytest.mark.parametrize("n", [4, 5, 6])
def test_trace_identities(n):
    rng = rng_for(9, f"trace{n}")
    g = MetricJet(random_metric_components(rng, n, 4))
    pack = curvature(g)
    ginv = g.inverse()
    w = pack.weyl
    # g^{ij} W_{kijl} = 0
    for k in range(n):
        for l in range(n):
            acc = None
            for i in range(n):
                for j in range(n):
                    term = ginv[i][j] * w[k][i][j][l]
                    acc = term if acc is None else acc + term
            assert acc.is_zero()
    # g^{ik} W_{ijkl} = 0
    for j in range(n):
        for l in range(n):
            acc = None
            for i in range(n):
                for k in range(n):
                    term = ginv[i][k] * w[i][j][k][l]
                    acc = term if acc is None else acc + term
            assert acc.is_zero()
    # g^{ij} P_{ij} = J
    acc = None
    for i in range(n):
        for j in range(n):
            term = ginv[i][j] * pack.schouten[i][j]
            acc = term if acc is None else acc + term
    assert acc == pack.schouten_trace


def test_first_bianchi_and_antisymmetries():
    rng = rng_for(10, "bianchi")
    n = 4
    g = MetricJet(random_metric_components(rng, n, 4))
    pack = curvature(g)
    riem = pack.riemann
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    assert (riem[i][j][k][l] + riem[j][i][k][l]).is_zero()
                    s = riem[i][j][k][l] + riem[i][k][l][j] + riem[i][l][j][k]
                    assert s.is_zero()
    c = pack.cotton
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert (c[i][j][k] + c[i][k][j]).is_zero()


def test_riemann_pair_symmetry():
    rng = rng_for(11, "pairsym")
    n = 3
    g = MetricJet(random_metric_components(rng, n, 4))
    riem = curvature(g).riemann
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    assert riem[i][j][k][l] == riem[k][l][i][j]


def test_low_dimension_guards():
    g2 = MetricJet.flat(2, 4)
    pack = curvature(g2)
    assert pack.schouten_trace == pack.scalar.scaled(rational(1, 2))
    with pytest.raises(DegenerateInput):
        pack.schouten
    with pytest.raises(DegenerateInput):
        pack.bach
    # dimension three: Weyl term drops, Bach reduces to the Cotton divergence
    rng = rng_for(12, "bach3")
    g3 = MetricJet(random_metric_components(rng, 3, 5))
    pack3 = curvature(g3)
    assert jets_equal_zero(pack3.weyl)
    ginv = g3.inverse()
    dc = pack3.nabla_cotton
    for i in range(3):
        for j in range(3):
            acc = None
            for k in range(3):
                for m in range(3):
                    term = ginv[k][m] * dc[m][i][j][k]
                    acc = term if acc is None else acc + term
            assert pack3.bach[i][j] == acc.truncated(pack3.bach[i][j].order)


def test_insufficient_order_raises():
    rng = rng_for(12, "loworder")
    g = MetricJet(random_metric_components(rng, 3, 1))
    with pytest.raises(InsufficientOrder):
        curvature(g).riemann


def test_bach_trace_and_divergence_free_dimension_four():
    # the relative sign of the two Bach terms is pinned by these identities
    rng = rng_for(14, "bachdiv")
    n = 4
    g = MetricJet(random_metric_components(rng, n, 6))
    pack = curvature(g)
    b = pack.bach
    ginv = g.inverse()
    trace = None
    for i in range(n):
        for j in range(n):
            term = ginv[i][j] * b[i][j]
            trace = term if trace is None else trace + term
    assert trace.is_zero()
    gamma = pack.christoffel
    for j in range(n):
        div = None
        for i in range(n):
            for k in range(n):
                cov = b[i][j].derivative(k)
                for l in range(n):
                    cov = cov - gamma[l][k][i] * b[l][j] - gamma[l][k][j] * b[i][l]
                term = ginv[k][i] * cov
                div = term if div is None else div + term
        assert div.is_zero()


def test_bach_conformal_covariance_dimension_four():
    rng = rng_for(15, "bachconf")
    n = 4
    g = MetricJet(random_metric_components(rng, n, 5))
    ups = random_conformal_factor(rng, n, 5)
    ghat = conformal_rescale(g, ups)
    b = curvature(g).bach
    bhat = curvature(ghat).bach
    factor = (-ups.scaled(2)).exp()
    for i in range(n):
        for j in range(n):
            assert bhat[i][j] == (factor * b[i][j]).truncated(bhat[i][j].order)


# -- weight -6 invariants ----------------------------------------------------------


def test_rep_invariants_vanish_conformally_flat():
    rng = rng_for(13, "repflat")
    n = 5
    ups = random_conformal_factor(rng, n, 5)
    g = conformal_rescale(MetricJet.flat(n, 5), ups)
    f = 1 + random_conformal_factor(rng, n, 5)
    out = rep_invariants(g, f)
    assert out["p1f"].is_zero()
    assert out["q1"].is_zero()
    assert out["p2f"].is_zero()
    assert out["q2"].is_zero()
    assert not out["n4_flag"]


def test_rep_invariants_flat_and_flags():
    n = 4
    g = MetricJet.flat(n, 5)
    f = Jet.variable(0, n, 5)
    out = rep_invariants(g, f)
    assert out["p1f"].is_zero() and out["q2"].is_zero()
    assert out["n4_flag"]
    with pytest.raises(DegenerateInput):
        rep_invariants(MetricJet.flat(3, 5), Jet.one(3, 5))
