"""Order-by-order Ricci-flat extension of a base metric and the conformally
invariant operators read off from it.

A base metric germ g is extended to an (n+2)-dimensional Lorentzian metric
in the normal form 2t dt drho + 2rho dt^2 + t^2 gbar_rho, Ricci-flat order
by order in rho.  Powers of the extension's Laplacian acting on suitably
homogeneous extensions of base densities then produce the conformally
covariant operators, and their action on log t produces the associated
curvature scalar.

The expansion itself is solved by probing: at each rho-order the Ricci
coefficient is affine in the unknown Taylor coefficient, the linear part is
measured with nilpotent basis probes, and the resulting pointwise linear
system is solved over jets.  Correctness never rests on the pointwise
assumption: the solved stage is re-checked against the Einstein equation,
with a coefficient-level linear solve as fallback.

Two independent evaluation routes coexist.  The graded route works on
ConeJets with t and rho kept symbolic; the plain route assembles an honest
(n+2)-variable jet metric near (t, rho) = (1, 0) and reuses the base
curvature machinery unchanged.  Cross-checks between them appear throughout
the test suite.
"""

from dataclasses import dataclass
from fractions import Fraction

from .backend import EXACT, FLOAT, rational
from ._cone import (
    INF,
    ConeJet,
    LogField,
    assemble_cone_metric,
    cone_curvature,
    cone_laplacian,
    eps_linear_part,
    rho_tilde,
)
from ._rand import random_jet, rng_for
from .errors import (
    DegenerateInput,
    InsufficientOrder,
    ShapeMismatch,
    SingularSystem,
    SpecError,
)
from .geometry import MetricJet, conformal_rescale, curvature, laplacian
from .jets import Jet, monomials

__all__ = [
    "Density",
    "AmbientField",
    "AmbientMetric",
    "fg_expand",
    "ambient_curvature",
    "cone_identities",
    "ambient_laplacian",
    "harmonic_extend",
    "gjms",
    "q_curvature",
    "q_for_operator",
    "transformation_check",
    "nabla_log_check",
    "weight_derivative_check",
]


def _is_zero(obj, tol=0.0):
    """Content-zero test for jets, ConeJets, LogFields; float backends may
    pass a tolerance."""
    if isinstance(obj, Jet):
        if obj.backend == EXACT or tol == 0.0:
            return obj.is_zero()
        return all(abs(c) <= tol for _, c in obj.terms())
    if isinstance(obj, ConeJet):
        return all(_is_zero(j, tol) for j in obj.slots.values())
    if isinstance(obj, LogField):
        return all(_is_zero(p, tol) for p in obj.parts.values())
    raise ShapeMismatch(f"no zero test for {type(obj).__name__}")


@dataclass(frozen=True)
class Density:
    """A conformal density given through its representative at a metric."""

    weight: Fraction
    value: Jet
    metric: MetricJet

    def __post_init__(self):
        object.__setattr__(self, "weight", Fraction(self.weight))
        if self.value.num_vars != self.metric.dim:
            raise ShapeMismatch("density representative must match the base chart")


class AmbientField:
    """A scalar on the extension chart (t, x, rho), centered at t=1, rho=0.

    Homogeneous fields constructed internally keep their graded form; the
    `value` view is an ordinary jet with t-1 as variable 0 and rho last.
    """

    def __init__(self, value=None, weight=None, cone=None, n=None):
        if cone is None and value is None:
            raise ShapeMismatch("an ambient field needs a value")
        self._cone = cone
        self._value = value
        self.n = n if n is not None else (
            cone.coord_n if cone is not None else value.num_vars - 2
        )
        if weight is None and cone is not None and cone.tdeg is not None:
            weight = Fraction(cone.tdeg)
        self.weight = None if weight is None else Fraction(weight)
        self.homogeneous = self._check_homogeneous()

    def _check_homogeneous(self):
        if self.weight is None:
            return False
        if self._cone is not None:
            return True
        v = self._value
        t_full = 1 + Jet.variable(0, v.num_vars, v.order, v.backend)
        euler = t_full * v.derivative(0) - v.scaled(
            rational(self.weight) if v.backend == EXACT else float(self.weight)
        )
        return _is_zero(euler)

    @property
    def value(self):
        if self._value is None:
            self._value = self._cone.to_plain()
        return self._value

    @property
    def cone(self):
        """The graded view, when the field was built from one."""
        return self._cone

    def restrict(self):
        """Value on the base section rho = 0, t = 1, as an x-jet."""
        if self._cone is not None:
            return self._cone.restrict()
        v = self._value
        nv = v.num_vars
        assignments = [Jet.zero(self.n, v.order, v.backend)]
        assignments += [
            Jet.variable(i, self.n, v.order, v.backend) for i in range(self.n)
        ]
        assignments += [
            Jet.zero(self.n, v.order, v.backend) for _ in range(nv - self.n - 1)
        ]
        return v.substitute(assignments)

    def __repr__(self):
        w = "inhomogeneous" if self.weight is None else f"weight {self.weight}"
        return f"AmbientField({w}, n={self.n})"


def _sym_pairs(n):
    return [(a, b) for a in range(n) for b in range(a, n)]


def _sym_array(n, fill):
    return [[fill(i, j) for j in range(n)] for i in range(n)]


class AmbientMetric:
    """The solved normal-form extension of a base metric germ."""

    def __init__(self, base, coefficients, ambiguity, obstruction, ricci_report):
        self.base = base
        self.n = base.dim
        self.backend = base.backend
        self.coefficients = coefficients
        self.max_order = len(coefficients) - 1
        self.ambiguity = ambiguity
        self.obstruction = obstruction
        self.ricci_report = ricci_report
        self.cone = assemble_cone_metric(self.n, coefficients, self.backend)
        self._assembled = {}

    def coefficient(self, m):
        """The rho^m Taylor coefficient of the tangential block."""
        if m > self.max_order:
            raise InsufficientOrder(
                f"expansion computed to order {self.max_order}, not {m}"
            )
        return self.coefficients[m]

    def assembled(self, order=None, rho_center=0, extra_vars=0):
        """The extension as a plain (n+2)x(n+2) jet metric.

        Variables are (t-1, x, rho-rho_center) plus `extra_vars` passive
        trailing variables.  rho-degrees beyond max_order are zero-extended:
        results are exact for queries that consume at most max_order
        rho-orders at rho = rho_center (for rho_center = 0) or for the
        truncated-tail metric itself as a normal-form instance.
        """
        key = (order, rho_center, extra_vars)
        got = self._assembled.get(key)
        if got is not None:
            return got
        n = self.n
        if self.base.num_vars != n:
            raise ShapeMismatch(
                "the plain-chart assembly does not support passive base "
                "variables; use the graded route"
            )
        q = order
        if q is None:
            q = min(
                self.coefficients[m][0][0].order + m
                for m in range(self.max_order + 1)
            )
        nv = n + 2 + extra_vars
        bk = self.backend
        # scaffolding rows are exact polynomials, so they may claim a high
        # order; the metric's reliable order is then set by the coefficients
        qx = q + self.max_order
        zero = Jet.zero(nv, qx, bk)
        one = Jet.one(nv, qx, bk)
        tvar = Jet.variable(0, nv, qx, bk)
        rho = Jet.variable(n + 1, nv, qx, bk)
        t_full = one + tvar
        comps = [[zero for _ in range(n + 2)] for _ in range(n + 2)]
        center = rational(rho_center) if bk == EXACT else float(rho_center)
        comps[0][0] = (rho + center).scaled(2 if bk == EXACT else 2.0)
        comps[0][n + 1] = t_full
        comps[n + 1][0] = t_full
        t2 = t_full * t_full
        rho_pow = [one]
        for _ in range(self.max_order):
            rho_pow.append(rho_pow[-1] * (rho + center))
        for i in range(n):
            for j in range(n):
                acc = zero
                for m in range(self.max_order + 1):
                    c = self.coefficients[m][i][j]
                    cq = min(c.order, q)
                    term = rho_pow[m] * c.truncated(cq).extend_vars(nv, at=1)
                    if rho_center == 0:
                        # every monomial of this term carries rho^m, which
                        # consumes m of the total-degree budget; the product
                        # is therefore reliable m orders past the bare
                        # coefficient (only valid for an unshifted center)
                        term = term.with_order(cq + m)
                    acc = acc + term
                comps[i + 1][j + 1] = t2 * acc
        metric = MetricJet(comps)
        self._assembled[key] = metric
        return metric

    def condition_checks(self):
        """Restriction and homogeneity of the assembled metric (conditions
        that define the normal form)."""
        n = self.n
        g = self.assembled()
        restriction_ok = True
        for i in range(n):
            for j in range(n):
                pulled = AmbientField(value=g.components[i + 1][j + 1], n=n).restrict()
                if not _is_zero(pulled - self.base.components[i][j].truncated(pulled.order)):
                    restriction_ok = False
        homogeneity_ok = True
        nv = n + 2
        q = g.order
        t_full = 1 + Jet.variable(0, nv, q, self.backend)
        for i in range(n + 2):
            for j in range(n + 2):
                deg = 2 - (i == 0) - (j == 0)
                comp = g.components[i][j]
                euler = t_full * comp.derivative(0) - comp.scaled(
                    rational(deg) if self.backend == EXACT else float(deg)
                )
                if not _is_zero(euler):
                    homogeneity_ok = False
        return {"restriction": restriction_ok, "homogeneity": homogeneity_ok}

    def __repr__(self):
        return (
            f"AmbientMetric(n={self.n}, max_order={self.max_order}, "
            f"obstruction={'yes' if self.obstruction else 'none'})"
        )


# -- expansion solver ---------------------------------------------------------


def _ricci_entries(cm, index_pairs):
    """Chosen components of the Ricci tensor of a cone metric, via the
    contracted-symbol formula (avoids the full curvature tensor)."""
    m = cm.dim
    pack = cone_curvature(cm)
    gam = pack.christoffel
    trg = []
    for lam in range(m):
        acc = pack._zero(1)
        for p in range(m):
            acc = acc + gam[p][p][lam]
        trg.append(acc)
    out = {}
    for (j, l) in index_pairs:
        if (l, j) in out:
            out[(j, l)] = out[(l, j)]
            continue
        acc = pack._zero(2)
        for p in range(m):
            acc = acc + gam[p][l][j].derivative(p)
        acc = acc - trg[j].derivative(l)
        for lam in range(m):
            if gam[lam][l][j].is_exact_zero():
                continue
            acc = acc + trg[lam] * gam[lam][l][j]
        for p in range(m):
            for lam in range(m):
                u = gam[p][l][lam]
                if u.is_exact_zero():
                    continue
                v = gam[lam][p][j]
                if v.is_exact_zero():
                    continue
                acc = acc - u * v
        out[(j, l)] = acc
    return out


def _ricci_tangential(cm):
    n = cm.n
    got = _ricci_entries(
        cm, [(a + 1, b + 1) for a in range(n) for b in range(a, n)]
    )
    return [
        [got[(min(i, j) + 1, max(i, j) + 1)] for j in range(n)] for i in range(n)
    ]


def _ricci_slot_tangential(n, arrays, slot, backend):
    cm = assemble_cone_metric(n, arrays, backend)
    ric = _ricci_tangential(cm)
    return [[ric[i][j].slot(slot) for j in range(n)] for i in range(n)]


def _stage_equations(n, arrays, m, backend):
    """Stage-m Einstein equations: the tangential Ricci block at rho-order
    m-1 and, for m >= 2, the normal-normal component at rho-order m-2,
    whose dependence on tr g^(m) stays invertible at the orders where the
    tangential trace degenerates."""
    cm = assemble_cone_metric(n, arrays, backend)
    pairs = [(a + 1, b + 1) for a in range(n) for b in range(a, n)]
    want = list(pairs)
    if m >= 2:
        want.append((n + 1, n + 1))
    got = _ricci_entries(cm, want)
    eqs = [got[p].slot(m - 1) for p in pairs]
    if m >= 2:
        eqs.append(got[(n + 1, n + 1)].slot(m - 2))
    return eqs


def _extend_arrays(arrays, nv):
    # probe-path inputs get one extra order: the eps coefficient of the
    # response at x-degree d only involves input coefficients of degree
    # <= d + 2, so the zero-filled top order never reaches the degrees the
    # response is truncated to, and the pad refunds the degree consumed by
    # the eps variable itself
    return [
        [
            [jet.extend_vars(nv, at=0).with_order(jet.order + 1) for jet in row]
            for row in arr
        ]
        for arr in arrays
    ]


def _probe_eqs(n, ext_arrays, probe_array, m, backend):
    """Linear response of the stage-m equations to the probe coefficient
    eps*E at slot m."""
    eqs = _stage_equations(n, ext_arrays + [probe_array], m, backend)
    return [eps_linear_part(e) for e in eqs]


def _solve_jet_system(rows, rhs, tol=0.0):
    """Gauss elimination for a consistent (possibly overdetermined) system
    with jet entries; pivots must be invertible at the base point and
    leftover rows must eliminate to zero."""
    nrows = len(rows)
    ncols = len(rows[0])
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    used = [False] * nrows
    pivot_of = {}
    for col in range(ncols):
        piv = None
        for r in range(nrows):
            if not used[r] and a[r][col].constant_term():
                piv = r
                break
        if piv is None:
            raise SingularSystem("stage system singular at the base point")
        used[piv] = True
        pivot_of[col] = piv
        rec = a[piv][col].reciprocal()
        a[piv] = [e * rec for e in a[piv]]
        for r in range(nrows):
            if r == piv:
                continue
            f = a[r][col]
            if f.is_zero():
                continue
            a[r] = [e - f * p for e, p in zip(a[r], a[piv])]
    for r in range(nrows):
        if not used[r] and any(not _is_zero(e, tol) for e in a[r]):
            raise SingularSystem("stage system is inconsistent")
    return [a[pivot_of[col]][ncols] for col in range(ncols)]


def _base_trace(g, tensor):
    ginv = g.inverse()
    acc = None
    n = g.dim
    for i in range(n):
        for j in range(n):
            term = ginv[i][j] * tensor[i][j]
            acc = term if acc is None else acc + term
    return acc


def _stage_order(g, m):
    return max(g.order - 2 * m, 0)


def _zero_slot(n, nv, order, backend):
    z = Jet.zero(nv, order, backend)
    return [[z for _ in range(n)] for _ in range(n)]


def _stage_full_solve(g, n, ext_arrays, eqs0, m, order, backend):
    """Coefficient-level linear solve for one stage, used when the pointwise
    probe structure fails.  Probes every monomial-modulated basis tensor, so
    it also captures derivative couplings; guarded by a size budget."""
    pairs = _sym_pairs(n)
    nv0 = g.num_vars
    nvx = nv0 + 1
    monos = monomials(nv0, order)
    unknowns = [(p, tuple(mono)) for p in pairs for mono in monos]
    if len(unknowns) > 600:
        raise SingularSystem(
            "stage solve fell back to the coefficient-level system, which "
            f"exceeds the supported size ({len(unknowns)} unknowns)"
        )
    responses = {}
    for (a, b), mono in unknowns:
        e = Jet.from_terms(
            [(mono + (1,), 1 if backend == EXACT else 1.0)], nvx, g.order + 1, backend
        )
        probe = _zero_slot(n, nvx, g.order + 1, backend)
        probe[a][b] = e
        probe[b][a] = e
        responses[((a, b), mono)] = _probe_eqs(n, ext_arrays, probe, m, backend)
    neq = len(eqs0)
    resp_order = min(r[e].order for r in responses.values() for e in range(neq))
    eq_monos = [tuple(mm) for mm in monomials(nv0, min(order, resp_order))]
    rows = []
    rhs = []
    for e in range(neq):
        for mono in eq_monos:
            rows.append([responses[u][e].coefficient(mono) for u in unknowns])
            rhs.append(-eqs0[e].coefficient(mono))
    sol = _dense_solve(rows, rhs, len(unknowns), backend)
    out = _zero_slot(n, nv0, order, backend)
    for val, ((a, b), mono) in zip(sol, unknowns):
        if val:
            add = Jet.from_terms([(mono, val)], nv0, order, backend)
            out[a][b] = out[a][b] + add
            if a != b:
                out[b][a] = out[b][a] + add
    return out


def _dense_solve(rows, rhs, ncols, backend):
    """Exact elimination for a (possibly overdetermined, consistent) dense
    scalar system."""
    aug = [list(r) + [v] for r, v in zip(rows, rhs)]
    nrows = len(aug)
    rank_rows = []
    col_of = []
    r0 = 0
    for col in range(ncols):
        piv = None
        for r in range(r0, nrows):
            if aug[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        aug[r0], aug[piv] = aug[piv], aug[r0]
        prow = aug[r0]
        inv = 1 / prow[col] if backend == FLOAT else rational(1) / prow[col]
        aug[r0] = [e * inv for e in prow]
        for r in range(nrows):
            if r == r0:
                continue
            f = aug[r][col]
            if f != 0:
                aug[r] = [e - f * p for e, p in zip(aug[r], aug[r0])]
        rank_rows.append(r0)
        col_of.append(col)
        r0 += 1
        if r0 == nrows:
            break
    for r in range(r0, nrows):
        if aug[r][ncols] != 0:
            raise SingularSystem("coefficient-level stage system is inconsistent")
    sol = [0] * ncols
    for rr, col in zip(rank_rows, col_of):
        sol[col] = aug[rr][ncols]
    return sol


def fg_expand(g, target_order, ambiguity=None, odd_cap=4, force_full_solve=False):
    """Solve the extension order by order in rho up to target_order.

    For even n the expansion stops at n/2, where the trace part is solved,
    the trace-free part is taken from `ambiguity` (default zero), and the
    trace-free residual of the Einstein equation is recorded as the
    obstruction.
    """
    n = g.dim
    backend = g.backend
    even = n % 2 == 0
    if target_order < 1:
        raise SpecError("target_order must be at least 1")
    if even and target_order > n // 2:
        raise SpecError(
            f"the extension of an n={n} metric exists in general only to "
            f"order {n//2}"
        )
    if not even and target_order > odd_cap:
        raise SpecError(
            f"odd-dimension expansion capped at order {odd_cap} "
            "(raise odd_cap to override)"
        )
    if g.order < 2 * target_order + 2:
        raise InsufficientOrder(
            f"target order {target_order} needs input order >= {2*target_order+2}, "
            f"got {g.order}"
        )
    if ambiguity is not None:
        if not (even and target_order == n // 2):
            raise SpecError("ambiguity input only enters at order n/2 for even n")
        tr = _base_trace(g, ambiguity)
        if not _is_zero(tr):
            raise SpecError("ambiguity tensor must be trace-free")

    pairs = _sym_pairs(n)
    arrays = [g.components]
    obstruction = None
    nv0 = g.num_vars
    nvx = nv0 + 1
    one = 1 if backend == EXACT else 1.0

    for m in range(1, target_order + 1):
        order_m = _stage_order(g, m)
        # the placeholder and the off-probe entries are exact zeros, so they
        # may carry any declared order without limiting the equations
        placeholder = _zero_slot(n, nv0, g.order + 1, backend)
        eqs0 = _stage_equations(n, arrays + [placeholder], m, backend)
        neq = len(eqs0)
        ext = _extend_arrays(arrays, nvx)
        cols = {}
        for (a, b) in pairs:
            e = Jet.from_terms([((0,) * nv0 + (1,), one)], nvx, g.order + 1, backend)
            probe = _zero_slot(n, nvx, g.order + 1, backend)
            probe[a][b] = e
            probe[b][a] = e
            cols[(a, b)] = _probe_eqs(n, ext, probe, m, backend)

        obstruction_stage = even and m == n // 2
        solved = None
        if not force_full_solve:
            if obstruction_stage:
                solved = _solve_obstruction_stage(
                    g, n, arrays, ext, eqs0, m, ambiguity, backend
                )
            else:
                rows = [[cols[p][e] for p in pairs] for e in range(neq)]
                rhs = [-eqs0[e] for e in range(neq)]
                sol = _solve_jet_system(rows, rhs, tol=1e-9)
                solved = _zero_slot(n, nv0, order_m, backend)
                for val, (a, b) in zip(sol, pairs):
                    solved[a][b] = val
                    solved[b][a] = val
                if not _verify_pointwise(
                    g, n, ext, cols, pairs, m, order_m, backend
                ):
                    solved = None
        if solved is None:
            if obstruction_stage:
                raise SingularSystem(
                    "obstruction-order stage failed its structure checks"
                )
            solved = _stage_full_solve(g, n, ext, eqs0, m, order_m, backend)
        residual = _stage_equations(n, arrays + [solved], m, backend)
        if obstruction_stage:
            obstruction = _eqs_tangential(residual, n, pairs)
            tr_res = _base_trace(g, obstruction)
            if not _is_zero(tr_res, tol=1e-9):
                raise SingularSystem("obstruction residual failed to be trace-free")
            if neq > len(pairs) and not _is_zero(residual[-1], tol=1e-9):
                raise SingularSystem(
                    "normal-direction equation inconsistent at the obstruction order"
                )
        else:
            bad = [e for e in range(neq) if not _is_zero(residual[e], tol=1e-9)]
            if bad:
                raise SingularSystem(
                    f"stage {m} solution leaves a nonzero Einstein residual"
                )
        arrays = arrays + [solved]

    report = _ricci_vanishing_report(n, arrays, backend)
    return AmbientMetric(g, arrays, ambiguity, obstruction, report)


def _eqs_tangential(eqs, n, pairs):
    """The tangential block of a stage equation vector as a full array."""
    out = [[None] * n for _ in range(n)]
    for val, (a, b) in zip(eqs, pairs):
        out[a][b] = val
        out[b][a] = val
    return out


def _verify_pointwise(g, n, ext, cols, pairs, m, order_m, backend):
    """Second probe: a jet-valued trial coefficient must respond exactly as
    the pointwise columns predict; a mismatch triggers the fallback."""
    rng = rng_for(m, "pointwise-probe")
    nvx = g.num_vars + 1
    trial = _zero_slot(n, g.num_vars, order_m, backend)
    for (a, b) in pairs:
        # exact polynomials, so the padded order claim is sound
        jet = random_jet(rng, g.num_vars, min(2, order_m), max_num=3, max_den=2)
        if backend == FLOAT:
            jet = jet.to_float_backend()
        trial[a][b] = jet.with_order(g.order + 1)
        trial[b][a] = trial[a][b]
    eps = Jet.variable(nvx - 1, nvx, g.order + 1, backend)
    probe = [
        [trial[i][j].extend_vars(nvx, at=0) * eps for j in range(n)] for i in range(n)
    ]
    got = _probe_eqs(n, ext, probe, m, backend)
    for e in range(len(got)):
        predicted = None
        for (a, b) in pairs:
            term = cols[(a, b)][e] * trial[a][b]
            predicted = term if predicted is None else predicted + term
        if not _is_zero(got[e] - predicted.truncated(got[e].order), tol=1e-9):
            return False
    return True


def _solve_obstruction_stage(g, n, arrays, ext, eqs0, m, ambiguity, backend):
    """At the obstruction order, only the trace can be solved; the trace-free
    part is the supplied ambiguity and the residual is the obstruction."""
    pairs = _sym_pairs(n)
    nvx = g.num_vars + 1
    eps = Jet.variable(nvx - 1, nvx, g.order + 1, backend)
    gprobe = [
        [
            g.components[i][j].extend_vars(nvx, at=0).with_order(g.order + 1) * eps
            for j in range(n)
        ]
        for i in range(n)
    ]
    l_of_g = _eqs_tangential(_probe_eqs(n, ext, gprobe, m, backend), n, pairs)
    tr_l = _base_trace(g, l_of_g)
    if not tr_l.constant_term():
        raise SingularSystem("trace part of the obstruction-order stage is singular")
    a0 = _eqs_tangential(eqs0, n, pairs)
    tr_a0 = _base_trace(g, a0)
    phi = (-tr_a0) * tr_l.reciprocal()
    solved = [[phi * g.components[i][j] for j in range(n)] for i in range(n)]
    if ambiguity is not None:
        solved = [
            [solved[i][j] + ambiguity[i][j] for j in range(n)] for i in range(n)
        ]
        # the trace-free direction must not feed back into the equation
        amb_probe = [
            [
                ambiguity[i][j]
                .extend_vars(nvx, at=0)
                .with_order(ambiguity[i][j].order + 1)
                * eps
                for j in range(n)
            ]
            for i in range(n)
        ]
        l_amb = _probe_eqs(n, ext, amb_probe, m, backend)[: len(pairs)]
        for entry in l_amb:
            if not _is_zero(entry, tol=1e-9):
                raise SingularSystem(
                    "trace-free probe responds at the obstruction order"
                )
    return solved


def _ricci_vanishing_report(n, arrays, backend):
    """Which rho-orders of the full Ricci tensor vanish, per index class."""
    cm = assemble_cone_metric(n, arrays, backend)
    ric = cone_curvature(cm).ricci_direct
    classes = {"tangential": [], "mixed": [], "scalar_directions": []}
    for i in range(n + 2):
        for j in range(i, n + 2):
            tang = 1 <= i <= n and 1 <= j <= n
            key = "tangential" if tang else (
                "scalar_directions" if i in (0, n + 1) and j in (0, n + 1) else "mixed"
            )
            r = ric[i][j]
            upto = -1
            for e in range(0, (r.rho_high + 1) if r.rho_high < INF else len(arrays)):
                if e in r.slots and not _is_zero(r.slots[e], tol=1e-9):
                    break
                upto = e
            classes[key].append(upto)
    return {k: (min(v) if v else None) for k, v in classes.items()}


# -- operators on the extension ------------------------------------------------


def ambient_laplacian(A, field):
    """The extension's Laplacian through the plain-jet route."""
    f = field if isinstance(field, AmbientField) else AmbientField(value=field)
    v = f.value
    if v.order < 2:
        raise InsufficientOrder("ambient laplacian needs field order >= 2")
    extra = v.num_vars - (A.n + 2)
    if extra < 0:
        raise ShapeMismatch("field has too few variables for the extension chart")
    g = A.assembled(extra_vars=extra)
    comps = [
        [c if c.num_vars == v.num_vars else c.extend_vars(v.num_vars) for c in row]
        for row in g.components
    ]
    gx = MetricJet(comps)
    out = laplacian(gx, v)
    w = None if f.weight is None else f.weight - 2
    return AmbientField(value=out, weight=w, n=A.n)


def _density_cone(A, f):
    """Initial homogeneous extension t^w f of a density representative."""
    if f.metric is not A.base and f.metric.components != A.base.components:
        raise ShapeMismatch("density attached to a different representative")
    return ConeJet.from_xjet(f.value, A.n, tdeg=f.weight)


def harmonic_extend(A, f, m, _perturb=None):
    """Iterated correction E_m ... E_1 applied to the initial extension,
    making the Laplacian vanish to rho-order m."""
    w = Fraction(f.weight)
    n = A.n
    k = Fraction(n, 2) + w
    if k.denominator == 1 and k > 0 and m >= k:
        raise SpecError(
            f"harmonic extension order m={m} requires m < k = {k} when k is a "
            "positive integer"
        )
    if m > A.max_order:
        raise InsufficientOrder(
            f"extension order {m} exceeds the computed expansion ({A.max_order})"
        )
    cur = _density_cone(A, f)
    if _perturb is not None:
        cur = cur + _perturb
    rt = rho_tilde(n, backend=A.backend)
    for l in range(1, m + 1):
        lap = cone_laplacian(A.cone, cur)
        coeff = Fraction(1, 4 * l) / (k - l)
        cur = cur + (rt * lap).scaled(coeff)
    return AmbientField(cone=cur, weight=w, n=n)


def gjms(A, k, f, verify=True, seed=0):
    """P_k f: the k-th Laplacian power on the weight k-n/2 extension,
    restricted back to the base."""
    n = A.n
    if k < 1:
        raise SpecError("k must be a positive integer")
    if n % 2 == 0 and k > n // 2:
        raise SpecError(f"k = {k} out of range: k <= n/2 = {n//2} for even n")
    if A.max_order < k:
        raise InsufficientOrder(
            f"P_{k} needs the expansion to order {k}, have {A.max_order}"
        )
    w = Fraction(k) - Fraction(n, 2)
    if Fraction(f.weight) != w:
        raise SpecError(f"P_{k} acts on densities of weight {w}, got {f.weight}")
    out = _gjms_cone(A, k, _density_cone(A, f))
    if verify:
        rng = rng_for(seed, "gjms-welldef")
        h = random_jet(rng, n, max(f.value.order - 2, 0), max_num=4, max_den=3)
        if A.backend == FLOAT:
            h = h.to_float_backend()
        pert = ConeJet.from_xjet(h, n, tdeg=w, rho_power=1)
        again = _gjms_cone(A, k, _density_cone(A, f) + pert)
        if not _is_zero(out - again.truncated(out.order), tol=1e-9):
            raise SpecError("P_k failed its extension-independence check")
    return Density(weight=-k - Fraction(n, 2), value=out, metric=A.base)


def _gjms_cone(A, k, cur):
    for _ in range(k):
        cur = cone_laplacian(A.cone, cur)
    return cur.restrict()


def q_curvature(A, verify=True, verify_ambiguity=True, seed=0):
    """The curvature scalar -(Delta^{n/2} log t) restricted to the base."""
    n = A.n
    if n % 2:
        raise SpecError("the Q scalar needs even dimension")
    if A.max_order < n // 2:
        raise InsufficientOrder(
            f"Q needs the expansion through order {n//2}, have {A.max_order}"
        )
    q = -_iterated_log_laplacian(A, n // 2).restrict()
    if verify:
        rng = rng_for(seed, "q-extension")
        h = random_jet(rng, n, max(A.base.order - 2, 1), max_num=4, max_den=3)
        if A.backend == FLOAT:
            h = h.to_float_backend()
        if A.base.num_vars > n:
            h = h.extend_vars(A.base.num_vars, at=0)
        pert = ConeJet.from_xjet(h, n, tdeg=0, rho_power=1)
        field = LogField.log_t(
            n, num_vars=A.base.num_vars, backend=A.backend
        ) + LogField.from_cone(pert)
        cur = field
        for _ in range(n // 2):
            cur = cone_laplacian(A.cone, cur)
        q2 = -cur.restrict()
        if not _is_zero(q - q2.truncated(q.order), tol=1e-9):
            raise SpecError("Q failed its log-extension independence check")
    if verify_ambiguity and n >= 2:
        rng = rng_for(seed, "q-ambiguity")
        amb = _random_tracefree(rng, A.base)
        redone = fg_expand(A.base, n // 2, ambiguity=amb)
        q3 = q_curvature(redone, verify=False, verify_ambiguity=False)
        if not _is_zero(q - q3.truncated(q.order), tol=1e-9):
            raise SpecError("Q failed its ambiguity independence check")
    return q


def _iterated_log_laplacian(A, count):
    cur = LogField.log_t(A.n, num_vars=A.base.num_vars, backend=A.backend)
    for _ in range(count):
        cur = cone_laplacian(A.cone, cur)
    return cur


def _random_tracefree(rng, g):
    """A random symmetric trace-free jet array for the given base metric."""
    n = g.dim
    order = max(g.order - 2, 0)
    raw = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            jet = random_jet(rng, n, order, max_num=3, max_den=2)
            if g.backend == FLOAT:
                jet = jet.to_float_backend()
            if g.num_vars > n:
                jet = jet.extend_vars(g.num_vars, at=0)
            raw[i][j] = jet
            raw[j][i] = jet
    tr = _base_trace(g, raw)
    nn = rational(1, n) if g.backend == EXACT else 1.0 / n
    correction = tr.scaled(nn)
    return [
        [raw[i][j] - correction * g.components[i][j] for j in range(n)]
        for i in range(n)
    ]


# -- curvature of the extension -------------------------------------------------


class AmbientCurvature:
    """Curvature tensor of the extension with graded components and
    restriction checks against the base classification."""

    def __init__(self, A):
        if A.max_order < 2:
            raise InsufficientOrder("ambient curvature needs expansion order >= 2")
        self.A = A
        self.pack = cone_curvature(A.cone)
        self.riemann = self.pack.riemann

    def nabla_riemann(self, mth, i, j, k, l):
        """One component of the covariant derivative (nabla_m R)_{ijkl}."""
        gam = self.pack.christoffel
        r = self.riemann
        acc = r[i][j][k][l].derivative(mth)
        for pos in range(4):
            idx = (i, j, k, l)[pos]
            for p in range(self.A.n + 2):
                gp = gam[p][mth][idx]
                if gp.is_exact_zero():
                    continue
                rest = [i, j, k, l]
                rest[pos] = p
                rr = r[rest[0]][rest[1]][rest[2]][rest[3]]
                if rr.is_exact_zero():
                    continue
                acc = acc - gp * rr
        return acc

    def restricted(self, i, j, k, l):
        """R_{ijkl} on the base section, as an x-jet."""
        return self.riemann[i][j][k][l].restrict()

    def plain(self, i, j, k, l, order=None):
        """R_{ijkl} as a plain jet in (t-1, x, rho)."""
        return self.riemann[i][j][k][l].to_plain(order)

    def classification_report(self, tol=1e-9):
        """Restriction of the curvature to the base section against its known
        block structure: any component with a t-direction index vanishes
        identically, the tangential block restricts to the base Weyl tensor,
        the mixed rho-direction block restricts to the Cotton tensor, and
        for n != 4 the doubly rho-direction block restricts to a fixed
        multiple of the Bach tensor (skipped and flagged in dimension 4,
        where that coefficient is not determined)."""
        A = self.A
        n = A.n
        base = curvature(A.base)
        report = {}

        ok = True
        for i in range(n + 2):
            for j in range(n + 2):
                for k in range(n + 2):
                    if not _is_zero(self.riemann[i][j][k][0], tol):
                        ok = False
        report["t_index_vanishes"] = ok

        w = base.weyl
        ok = True
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        got = self.restricted(i + 1, j + 1, k + 1, l + 1)
                        if not _eq_trunc(got, w[i][j][k][l], tol):
                            ok = False
        report["tangential_is_weyl"] = ok

        c = base.cotton
        ok = True
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    got = self.restricted(i + 1, j + 1, k + 1, n + 1)
                    if not _eq_trunc(got, c[k][j][i], tol):
                        ok = False
        report["rho_block_is_cotton"] = ok

        if n == 4:
            report["rho_rho_block"] = "undetermined"
        else:
            b = base.bach
            scale = (
                rational(-1, n - 4) if A.backend == EXACT else -1.0 / (n - 4)
            )
            ok = True
            for i in range(n):
                for j in range(n):
                    got = self.restricted(n + 1, i + 1, j + 1, n + 1)
                    if not _eq_trunc(got, b[i][j].scaled(scale), tol):
                        ok = False
            report["rho_rho_block_is_bach"] = ok
        return report


def _eq_trunc(a, b, tol=0.0):
    """Equality of two jets up to their common reliable order."""
    m = min(a.order, b.order)
    return _is_zero(a.truncated(m) - b.truncated(m), tol)


def ambient_curvature(A):
    return AmbientCurvature(A)


def cone_identities(A):
    """Structural identities of the normal form: 2T = grad of the defining
    scalar, its covariant derivative is the metric, and its square is the
    defining scalar."""
    n = A.n
    cm = A.cone
    pack = cone_curvature(cm)
    gam = pack.christoffel
    rt = rho_tilde(n, backend=A.backend)
    half = Fraction(1, 2)
    T = [rt.derivative(k).scaled(half) for k in range(n + 2)]
    ginv = cm.inverse()
    t_up = [None] * (n + 2)
    for i in range(n + 2):
        acc = None
        for j in range(n + 2):
            if ginv[i][j].is_exact_zero() or T[j].is_exact_zero():
                continue
            term = ginv[i][j] * T[j]
            acc = term if acc is None else acc + term
        t_up[i] = acc if acc is not None else ConeJet.zero(n, cm.num_vars, A.backend)

    nabla_ok = True
    for i in range(n + 2):
        for j in range(n + 2):
            nt = T[j].derivative(i)
            for k in range(n + 2):
                gk = gam[k][i][j]
                if gk.is_exact_zero():
                    continue
                nt = nt - gk * T[k]
            if not _is_zero(nt - cm.components[i][j], tol=1e-9):
                nabla_ok = False

    square = None
    for i in range(n + 2):
        if T[i].is_exact_zero() or t_up[i].is_exact_zero():
            continue
        term = T[i] * t_up[i]
        square = term if square is None else square + term
    square_ok = _is_zero(square - rt, tol=1e-9)

    riem = pack.riemann
    curv_ok = True
    for i in range(n + 2):
        for j in range(n + 2):
            for k in range(n + 2):
                acc = None
                for l in range(n + 2):
                    if t_up[l].is_exact_zero():
                        continue
                    term = riem[i][j][k][l] * t_up[l]
                    acc = term if acc is None else acc + term
                if acc is not None and not _is_zero(acc, tol=1e-9):
                    curv_ok = False

    lap = cone_laplacian(cm, rt)
    expected = ConeJet.constant(
        -2 * (n + 2) if A.backend == EXACT else -2.0 * (n + 2), n,
        cm.num_vars, A.backend,
    )
    lap_ok = _is_zero(lap - expected, tol=1e-9)
    return {
        "nabla_T_is_metric": nabla_ok,
        "curvature_kills_T": curv_ok,
        "T_square_is_rho_tilde": square_ok,
        "laplacian_of_rho_tilde": lap_ok,
    }


# -- the two weight minus-six operators -----------------------------------------


def _riemann_data(A):
    """Riemann tensor of the extension with raised-index variants and the
    squared norm, cached on the metric; exact zeros are skipped in every
    contraction."""
    cached = getattr(A, "_riemann_data", None)
    if cached is not None:
        return cached
    cm = A.cone
    d = A.n + 2
    pack = cone_curvature(cm)
    riem = pack.riemann
    ginv = cm.inverse()

    def raise_axis(src, axis):
        out = [
            [[[None] * d for _ in range(d)] for _ in range(d)] for _ in range(d)
        ]
        for i0 in range(d):
            for i1 in range(d):
                for i2 in range(d):
                    for i3 in range(d):
                        idx = (i0, i1, i2, i3)
                        acc = None
                        for s in range(d):
                            gi = ginv[idx[axis]][s]
                            if gi.is_exact_zero():
                                continue
                            key = list(idx)
                            key[axis] = s
                            v = src[key[0]][key[1]][key[2]][key[3]]
                            if v.is_exact_zero():
                                continue
                            term = gi * v
                            acc = term if acc is None else acc + term
                        if acc is None:
                            acc = pack._zero(2)
                        out[i0][i1][i2][i3] = acc
        return out

    last_up = raise_axis(riem, 3)
    all_up = raise_axis(raise_axis(raise_axis(last_up, 2), 1), 0)
    norm2 = None
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    v = riem[i][j][k][l]
                    if v.is_exact_zero() or all_up[i][j][k][l].is_exact_zero():
                        continue
                    term = v * all_up[i][j][k][l]
                    norm2 = term if norm2 is None else norm2 + term
    if norm2 is None:
        norm2 = pack._zero(2) * pack._zero(2)
    data = {"pack": pack, "riem": riem, "ginv": ginv,
            "last_up": last_up, "all_up": all_up, "norm2": norm2}
    A._riemann_data = data
    return data


def _first_extension(A, field, weight):
    """One corrective step making the Laplacian of the extension O(rho~)."""
    k = Fraction(A.n, 2) + weight
    if k == 1:
        raise SpecError("the first-order corrected extension needs k != 1")
    lap = cone_laplacian(A.cone, field)
    if isinstance(lap, LogField):
        lap = lap.part(0, 0)
    rt = rho_tilde(A.n, backend=A.backend)
    return field + (rt * lap).scaled(Fraction(1, 4) / (k - 1))


def q_for_operator(A, which, f=None):
    """The curvature scalar of one of the two curvature-coefficient example
    operators (f omitted), or the operator applied to a weight-0 density."""
    n = A.n
    if n == 4:
        raise SpecError(
            "dimension 4 is rejected: the doubly rho-direction component of "
            "the extension's curvature is undetermined there, and both "
            "operators contract through it"
        )
    if n < 5:
        raise SpecError("the curvature-coefficient operators need n >= 5")
    if which not in ("P1", "P2", "Q1", "Q2"):
        raise SpecError(f"unknown operator {which!r}: expected P1/P2 (or Q1/Q2)")
    # the gradient-coupled operator reads the rho-derivative of the norm of
    # the curvature, which consumes one more expansion order
    need = 3 if which in ("P2", "Q2") else 2
    if A.max_order < need:
        raise InsufficientOrder(
            f"operator {which} needs expansion order >= {need}, "
            f"have {A.max_order}"
        )
    first = which in ("P1", "Q1")
    if f is None:
        field = LogField.log_t(n, backend=A.backend)
        weight = Fraction(0)
    else:
        if Fraction(f.weight) != 0:
            raise SpecError("the supplied density must have weight 0")
        field = ConeJet.from_xjet(f.value, n, tdeg=0)
        weight = Fraction(0)
    f1 = _first_extension(A, field, weight)
    data = _riemann_data(A)
    d = n + 2
    if first:
        from .geometry import _hessian

        hess = _hessian(f1, data["pack"])
        acc = None
        for lidx in range(d):
            for midx in range(d):
                coeff = None
                for i in range(d):
                    for j in range(d):
                        for k in range(d):
                            u = data["last_up"][i][j][k][lidx]
                            if u.is_exact_zero():
                                continue
                            v = data["all_up"][i][j][k][midx]
                            if v.is_exact_zero():
                                continue
                            term = u * v
                            coeff = term if coeff is None else coeff + term
                if coeff is None:
                    continue
                term = coeff * hess[lidx][midx]
                acc = term if acc is None else acc + term
    else:
        norm2 = data["norm2"]
        dn = [norm2.derivative(k) for k in range(d)]
        df = [f1.derivative(k) for k in range(d)]
        acc = None
        for midx in range(d):
            for nidx in range(d):
                gi = data["ginv"][midx][nidx]
                if gi.is_exact_zero() or dn[nidx].is_exact_zero():
                    continue
                term = (gi * dn[nidx]) * df[midx]
                acc = term if acc is None else acc + term
        acc = acc.scaled(Fraction(1, 2))
    out = acc.restrict()
    if f is None:
        return -out
    return out


def ambient_norm_squared(A):
    """|curvature|^2 of the extension as a graded scalar of weight -4."""
    return _riemann_data(A)["norm2"]


# -- checks ----------------------------------------------------------------------


def transformation_check(g, upsilon, which, tol=0.0):
    """Both sides of the conformal transformation law of the chosen
    curvature scalar, evaluated independently.

    The law covers operators that annihilate constants; that hypothesis is
    verified first and the check refuses to proceed when it fails.
    """
    n = g.dim
    if upsilon.num_vars != g.num_vars:
        raise ShapeMismatch("conformal factor must live in the metric's variables")
    if which == "Q":
        if n % 2:
            raise SpecError("the critical curvature scalar needs even n")
        target = n // 2
        weight = -n

        def scalar_of(metric):
            ext = fg_expand(metric, target)
            return ext, q_curvature(ext, verify=False, verify_ambiguity=False)

        def op(ext, jet):
            dens = Density(weight=0, value=jet, metric=ext.base)
            return gjms(ext, n // 2, dens, verify=False).value
    elif which in ("Q1", "Q2"):
        if n < 5:
            raise SpecError("the curvature-coefficient scalars need n >= 5")
        # the gradient-coupled variant reads one more expansion order
        target = 3 if which == "Q2" else 2
        weight = -6

        def scalar_of(metric):
            ext = fg_expand(metric, target)
            return ext, q_for_operator(ext, which)

        def op(ext, jet):
            dens = Density(weight=0, value=jet, metric=ext.base)
            return q_for_operator(ext, which, f=dens)
    else:
        raise SpecError(f"unknown scalar {which!r}: expected Q, Q1, or Q2")

    ext_g, q_g = scalar_of(g)
    one = Jet.one(g.num_vars, g.order, g.backend)
    p_one = op(ext_g, one)
    kills = _is_zero(p_one, tol=max(tol, 1e-9) if g.backend == FLOAT else tol)
    if not kills:
        raise SpecError(
            "transformation law not available: the operator does not "
            "annihilate constants, and no law is defined for that case"
        )
    ghat = conformal_rescale(g, upsilon)
    _, q_hat = scalar_of(ghat)
    factor = upsilon.scaled(
        -weight if g.backend == EXACT else float(-weight)
    ).exp()
    lhs = factor * q_hat
    rhs = q_g + op(ext_g, upsilon)
    holds = _eq_trunc(lhs, rhs, tol)
    return {
        "scalar": which,
        "weight": weight,
        "kills_constants": kills,
        "holds": holds,
        "law": "exp(-w u) scalar[exp(2u) g] == scalar[g] + op[g](u)",
        "lhs": lhs,
        "rhs": rhs,
    }


def nabla_log_check(A, tol=0.0):
    """Covariant Hessian of log t against its closed normal-form values:
    the (t,t) component is exactly -1/t^2, the tangential block restricts
    to the Schouten tensor, and every other component vanishes identically."""
    from .geometry import _hessian

    n = A.n
    pack = cone_curvature(A.cone)
    logt = LogField.log_t(n, backend=A.backend)
    hess = _hessian(logt, pack)

    def cone_part(entry):
        extra = {k: v for k, v in entry.parts.items() if k != (0, 0)}
        clean = all(_is_zero(v, tol) for v in extra.values())
        return entry.part(0, 0), clean

    report = {}
    h00, clean = cone_part(hess[0][0])
    minus_t2 = ConeJet.constant(
        -1 if A.backend == EXACT else -1.0, n, A.cone.num_vars, A.backend
    ).shift_tdeg(-2)
    report["tt_is_minus_inverse_t_squared"] = clean and _is_zero(
        h00 - minus_t2, tol
    )

    ok = True
    for i in range(n + 2):
        for j in range(n + 2):
            tang = 1 <= i <= n and 1 <= j <= n
            if (i, j) == (0, 0) or tang:
                continue
            entry, clean = cone_part(hess[i][j])
            if not clean or not _is_zero(entry, tol):
                ok = False
    report["off_blocks_vanish"] = ok

    if n >= 3:
        p = curvature(A.base).schouten
        ok = True
        deg_ok = True
        for i in range(n):
            for j in range(n):
                entry, clean = cone_part(hess[i + 1][j + 1])
                if entry.tdeg not in (None, Fraction(0)):
                    deg_ok = False
                got = entry.restrict()
                if not clean or not _eq_trunc(got, p[i][j], tol):
                    ok = False
        report["tangential_restricts_to_schouten"] = ok
        report["tangential_scale_degree_zero"] = deg_ok
    return report


def weight_derivative_check(A, tol=0.0):
    """The formal-parameter route to the curvature scalar: iterating the
    plain-route Laplacian on t^(2 eps) with eps nilpotent must reproduce,
    at first order in eps, twice the log-route scalar."""
    n = A.n
    if n % 2:
        raise SpecError("the weight-derivative route needs even n")
    if A.max_order < n // 2:
        raise InsufficientOrder("needs the expansion through order n/2")
    g = A.assembled(extra_vars=1)
    nv = n + 3
    q = g.order
    bk = A.backend
    t_shift = Jet.variable(0, nv, q, bk)
    eps = Jet.variable(nv - 1, nv, q, bk)
    field = 1 + eps * (1 + t_shift).log().scaled(2 if bk == EXACT else 2.0)
    cur = field
    for _ in range(n // 2):
        cur = laplacian(g, cur)
    assignments = [Jet.zero(n + 1, cur.order, bk)]
    assignments += [Jet.variable(i, n + 1, cur.order, bk) for i in range(n)]
    assignments += [Jet.zero(n + 1, cur.order, bk),
                    Jet.variable(n, n + 1, cur.order, bk)]
    restricted = cur.substitute(assignments)
    lhs = eps_linear_part(restricted)
    q_log = q_curvature(A, verify=False, verify_ambiguity=False)
    rhs = q_log.scaled(-2 if bk == EXACT else -2.0)
    matches = _eq_trunc(lhs, rhs, tol)
    return {
        "matches_log_route": matches,
        "epsilon_coefficient": lhs,
        "expected": rhs,
    }
