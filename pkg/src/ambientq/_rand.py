"""Seeded generators for random jets, metrics, and conformal factors.

Shared by the test suite and the self-check command so that reported
verification runs are reproducible from a single integer seed.
"""

import random

from .backend import EXACT, rational
from .jets import Jet, monomials


def random_rational(rng, max_num=4, max_den=3):
    num = rng.randint(-max_num, max_num)
    den = rng.randint(1, max_den)
    return rational(num) / rational(den)


def random_jet(rng, num_vars, order, zero_constant=False, max_num=4, max_den=3):
    """Random exact jet with small rational coefficients, possibly sparse."""
    terms = []
    for expt in monomials(num_vars, order):
        if zero_constant and sum(expt) == 0:
            continue
        if rng.random() < 0.35:
            continue
        coeff = random_rational(rng, max_num, max_den)
        if coeff:
            terms.append((expt, coeff))
    return Jet.from_terms(terms, num_vars, order, EXACT)


def random_series_jet(rng, num_vars, order, scale_den=8):
    """Random jet shaped like a perturbation: zero constant term, coefficients
    shrunk by 1/scale_den to keep downstream inverses well conditioned."""
    f = random_jet(rng, num_vars, order, zero_constant=True)
    return f.scaled(rational(1) / rational(scale_den))


def random_metric_components(rng, dim, order, scale_den=8):
    """Symmetric dim x dim array of jets equal to the identity plus a small
    random perturbation vanishing at the base point."""
    comps = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            pert = random_series_jet(rng, dim, order, scale_den)
            base = Jet.one(dim, order) if i == j else Jet.zero(dim, order)
            comps[i][j] = base + pert
            comps[j][i] = comps[i][j]
    return comps


def random_conformal_factor(rng, dim, order, scale_den=8):
    """Random conformal-change exponent vanishing at the base point."""
    return random_series_jet(rng, dim, order, scale_den)


def rng_for(seed, tag):
    """Independent stream per (seed, tag) so checks stay order independent."""
    return random.Random(f"{seed}:{tag}")
