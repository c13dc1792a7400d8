"""Graded scalars on the metric cone over the base manifold.

The (n+2)-dimensional normal-form metric lives in coordinates
(t, x_1..x_n, rho).  Every scalar we ever need there is t-homogeneous,
so it is stored as a ConeJet: an exact t-degree together with a table
of rho-coefficients, each an ordinary jet in x.  Keeping t and rho
graded instead of folding them into one truncated jet preserves the
mixed reliability profile the order-by-order extension produces
(deep x-order at low rho-order, shallow at high), which a single
total-degree truncation cannot express.

Fields with logarithms (log t from density weights, log rho from the
obstruction-order solutions) are LogFields: small tables mapping
(power of log t, power of log rho) to ConeJets, with the derivative
rules d/dt log t = 1/t and d/drho log rho = 1/rho applied slot-wise.

Derivative indices follow the coordinate order everywhere:
0 = t, 1..n = x, n+1 = rho.  Jets may carry extra trailing variables
(nilpotent probe parameters); those are never coordinate directions.
"""

from fractions import Fraction

from .backend import EXACT, rational
from .errors import (
    DegenerateInput,
    InsufficientOrder,
    ShapeMismatch,
    SpecError,
)
from .geometry import CurvaturePack
from .jets import Jet

INF = 10 ** 9

__all__ = [
    "INF",
    "ConeJet",
    "LogField",
    "ConeMetric",
    "ConeCurvature",
    "cone_curvature",
    "cone_laplacian",
    "assemble_cone_metric",
    "rho_tilde",
    "eps_linear_part",
]


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


class ConeJet:
    """t^tdeg times a rho-series of x-jets.

    slots: {rho-exponent: Jet}; an absent exponent <= rho_high is an exact
    zero, exponents > rho_high are unknown.  Stored jets may be zero: they
    record a finite reliable x-order for a computed cancellation.  tdeg is
    None only for the exact-zero scalar, which is compatible with any
    homogeneity.
    """

    __slots__ = ("coord_n", "num_vars", "backend", "tdeg", "slots", "rho_high")

    def __init__(self, coord_n, num_vars, backend, tdeg, slots, rho_high):
        self.coord_n = coord_n
        self.num_vars = num_vars
        self.backend = backend
        self.tdeg = None if tdeg is None else _as_fraction(tdeg)
        self.slots = {e: j for e, j in slots.items() if e <= rho_high}
        self.rho_high = rho_high

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, coord_n, num_vars=None, backend=EXACT):
        return cls(coord_n, num_vars or coord_n, backend, None, {}, INF)

    @classmethod
    def from_xjet(cls, xjet, coord_n, tdeg=0, rho_power=0, rho_high=INF):
        return cls(
            coord_n,
            xjet.num_vars,
            xjet.backend,
            tdeg,
            {rho_power: xjet},
            rho_high,
        )

    @classmethod
    def constant(cls, value, coord_n, num_vars=None, backend=EXACT, tdeg=0):
        nv = num_vars or coord_n
        return cls(
            coord_n,
            nv,
            backend,
            tdeg,
            {0: Jet.constant(value, nv, 200, backend)},
            INF,
        )

    # -- structure -----------------------------------------------------------

    def is_zero(self):
        return all(j.is_zero() for j in self.slots.values())

    def is_exact_zero(self):
        return not self.slots and self.rho_high >= INF

    def valuation(self):
        """Lower bound for the least rho-order with nonzero content.

        Stored slots bound it by their index; with no slots at all the
        scalar is zero through rho_high, so anything nonzero starts later.
        """
        if self.slots:
            return min(self.slots)
        return INF if self.rho_high >= INF else self.rho_high + 1

    def slot(self, e, default_order=200):
        """The x-jet at rho^e; exact zeros materialize at default_order."""
        if e > self.rho_high:
            raise InsufficientOrder(
                f"rho-order {e} beyond reliable rho-order {self.rho_high}"
            )
        got = self.slots.get(e)
        if got is None:
            return Jet.zero(self.num_vars, default_order, self.backend)
        return got

    def _compat(self, other):
        if self.coord_n != other.coord_n or self.num_vars != other.num_vars:
            raise ShapeMismatch("cone scalars live over different charts")
        if self.backend != other.backend:
            raise ShapeMismatch("cone scalars mix backends")

    # -- ring ------------------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        if not isinstance(other, ConeJet):
            return NotImplemented
        self._compat(other)
        if self.tdeg is None and other.tdeg is None:
            tdeg = None
        elif self.tdeg is None:
            tdeg = other.tdeg
        elif other.tdeg is None:
            tdeg = self.tdeg
        elif self.tdeg != other.tdeg:
            raise ShapeMismatch(
                f"cannot add cone scalars of t-degree {self.tdeg} and {other.tdeg}"
            )
        else:
            tdeg = self.tdeg
        high = min(self.rho_high, other.rho_high)
        slots = {}
        for e in set(self.slots) | set(other.slots):
            if e > high:
                continue
            a = self.slots.get(e)
            b = other.slots.get(e)
            slots[e] = b if a is None else (a if b is None else a + b)
        return ConeJet(self.coord_n, self.num_vars, self.backend, tdeg, slots, high)

    __radd__ = __add__

    def __neg__(self):
        return ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            self.tdeg,
            {e: -j for e, j in self.slots.items()},
            self.rho_high,
        )

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, factor):
        if self.backend == EXACT and isinstance(factor, (Fraction, int)):
            factor = rational(factor)
        return ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            self.tdeg,
            {e: j.scaled(factor) for e, j in self.slots.items()},
            self.rho_high,
        )

    def __mul__(self, other):
        if isinstance(other, LogField):
            return NotImplemented
        if not isinstance(other, ConeJet):
            return NotImplemented
        self._compat(other)
        if self.is_exact_zero() or other.is_exact_zero():
            return ConeJet.zero(self.coord_n, self.num_vars, self.backend)
        tdeg = (self.tdeg or Fraction(0)) + (other.tdeg or Fraction(0))
        high = min(
            _hplus(self.rho_high, other.valuation()),
            _hplus(other.rho_high, self.valuation()),
        )
        slots = {}
        for ea, ja in self.slots.items():
            for eb, jb in other.slots.items():
                e = ea + eb
                if e > high:
                    continue
                term = ja * jb
                got = slots.get(e)
                slots[e] = term if got is None else got + term
        return ConeJet(self.coord_n, self.num_vars, self.backend, tdeg, slots, high)

    # -- calculus ----------------------------------------------------------------

    def derivative(self, index):
        n = self.coord_n
        if index == 0:
            if self.tdeg is None or self.tdeg == 0:
                return ConeJet.zero(self.coord_n, self.num_vars, self.backend)
            return self.shift_tdeg(-1, scale=self.tdeg)
        if index == n + 1:
            slots = {}
            for e, j in self.slots.items():
                if e == 0:
                    continue
                slots[e - 1] = j.scaled(
                    rational(e) if self.backend == EXACT else float(e)
                )
            return ConeJet(
                self.coord_n,
                self.num_vars,
                self.backend,
                self.tdeg,
                slots,
                self.rho_high - 1 if self.rho_high < INF else INF,
            )
        if not 1 <= index <= n:
            raise ShapeMismatch(f"coordinate index {index} out of range")
        # a slot too shallow to differentiate caps the reliable rho-range
        # just below it rather than poisoning the whole expansion
        high = self.rho_high
        for e, j in self.slots.items():
            if j.order < 1 and e <= high:
                high = e - 1
        return ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            self.tdeg,
            {
                e: j.derivative(index - 1)
                for e, j in self.slots.items()
                if e <= high
            },
            high,
        )

    def shift_tdeg(self, delta, scale=None):
        """Multiply by t^delta, optionally scaling (used for d/dt and log t)."""
        if self.tdeg is None:
            return self
        out = self if scale is None else self.scaled(
            rational(_as_fraction(scale)) if self.backend == EXACT else float(scale)
        )
        return ConeJet(
            out.coord_n,
            out.num_vars,
            out.backend,
            self.tdeg + _as_fraction(delta),
            out.slots,
            out.rho_high,
        )

    def shift_rho(self, delta, scale=None):
        """Multiply by rho^delta (Laurent shifts allowed), optional scaling."""
        out = self if scale is None else self.scaled(
            rational(_as_fraction(scale)) if self.backend == EXACT else float(scale)
        )
        slots = {e + delta: j for e, j in out.slots.items()}
        high = self.rho_high + delta if self.rho_high < INF else INF
        return ConeJet(out.coord_n, out.num_vars, out.backend, out.tdeg, slots, high)

    def truncate_rho(self, high):
        if high >= self.rho_high:
            return self
        return ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            self.tdeg,
            {e: j for e, j in self.slots.items() if e <= high},
            high,
        )

    def with_rho_high(self, high):
        """Declare a higher reliable rho-order (Newton-style iterations only)."""
        if high <= self.rho_high:
            return self.truncate_rho(high)
        return ConeJet(
            self.coord_n, self.num_vars, self.backend, self.tdeg, dict(self.slots), high
        )

    def truncate_x(self, order):
        return ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            self.tdeg,
            {e: (j if j.order <= order else j.truncated(order)) for e, j in self.slots.items()},
            self.rho_high,
        )

    def reciprocal(self, rho_cap=None):
        """1/self by Newton iteration in the rho-filtration."""
        if 0 not in self.slots or not self.slots[0].constant_term():
            raise DegenerateInput("cone scalar is not invertible at the base point")
        tdeg = -(self.tdeg or Fraction(0))
        if set(self.slots) == {0} and self.rho_high >= INF:
            return ConeJet(
                self.coord_n,
                self.num_vars,
                self.backend,
                tdeg,
                {0: self.slots[0].reciprocal()},
                INF,
            )
        target = self.rho_high if self.rho_high < INF else rho_cap
        if target is None:
            raise SpecError("reciprocal of an exact cone polynomial needs a rho cap")
        x = ConeJet(
            self.coord_n,
            self.num_vars,
            self.backend,
            tdeg,
            {0: self.slots[0].reciprocal()},
            0,
        )
        two = ConeJet.constant(
            2 if self.backend == EXACT else 2.0,
            self.coord_n,
            self.num_vars,
            self.backend,
            tdeg=0,
        )
        b = self.truncate_rho(target)
        reached = 0
        while reached < target:
            reached = min(2 * reached + 1, target)
            x = x.with_rho_high(reached) * (
                two - b.truncate_rho(reached) * x.with_rho_high(reached)
            )
        return x

    def restrict(self):
        """Value on the cone section: rho = 0, t = 1 (an x-jet)."""
        if self.rho_high < 0:
            raise InsufficientOrder("rho-order exhausted before restriction")
        return self.slot(0)

    def to_plain(self, order=None):
        """Ordinary jet in (t-1, x, rho); rho-exponents beyond the reliable
        rho-order must not be reachable at the requested total order."""
        cap = self.rho_high if self.rho_high < INF else 255
        for e, j in self.slots.items():
            cap = min(cap, j.order + e)
        if order is None:
            order = max(cap, 0)
        elif order > cap:
            raise InsufficientOrder(
                f"plain order {order} exceeds reliable combined order {cap}"
            )
        nv = self.num_vars + 2
        acc = Jet.zero(nv, order, self.backend)
        if self.is_exact_zero():
            return acc
        if self.tdeg:
            tpow = (1 + Jet.variable(0, nv, order, self.backend)).power(self.tdeg)
        else:
            tpow = Jet.one(nv, order, self.backend)
        for e, j in self.slots.items():
            if e < 0:
                raise SpecError("Laurent rho-powers have no plain-jet image")
            if e > order:
                continue
            term = j.truncated(min(j.order, order - e)).extend_vars(nv, at=1)
            rho_mon = Jet.from_terms(
                [(tuple([0] * (nv - 1) + [e]), 1 if self.backend == EXACT else 1.0)],
                nv,
                order,
                self.backend,
            )
            acc = acc + term * rho_mon
        return acc * tpow

    def __eq__(self, other):
        if not isinstance(other, ConeJet):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except ShapeMismatch:
            return False

    __hash__ = None

    def __repr__(self):
        key = ", ".join(
            f"rho^{e}:{'0' if j.is_zero() else 'x-jet'}(ord {j.order})"
            for e, j in sorted(self.slots.items())
        )
        return f"ConeJet(t^{self.tdeg}; {key}; rho_high={self.rho_high})"


def _hplus(high, val):
    if high >= INF or val >= INF:
        return INF
    return high + val


class LogField:
    """Sum of ConeJets times (log t)^a (log rho)^b, keyed by (a, b)."""

    __slots__ = ("coord_n", "num_vars", "backend", "parts")

    def __init__(self, coord_n, num_vars, backend, parts):
        self.coord_n = coord_n
        self.num_vars = num_vars
        self.backend = backend
        self.parts = {k: v for k, v in parts.items() if not v.is_exact_zero()}

    @classmethod
    def from_cone(cls, cone, log_t=0, log_rho=0):
        return cls(
            cone.coord_n, cone.num_vars, cone.backend, {(log_t, log_rho): cone}
        )

    @classmethod
    def log_t(cls, coord_n, num_vars=None, backend=EXACT):
        one = ConeJet.constant(
            1 if backend == EXACT else 1.0, coord_n, num_vars, backend
        )
        return cls.from_cone(one, log_t=1)

    def part(self, a, b):
        got = self.parts.get((a, b))
        if got is None:
            return ConeJet.zero(self.coord_n, self.num_vars, self.backend)
        return got

    def is_zero(self):
        return all(v.is_zero() for v in self.parts.values())

    def _merge(self, key, cone, table):
        got = table.get(key)
        table[key] = cone if got is None else got + cone

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        if isinstance(other, ConeJet):
            other = LogField.from_cone(other)
        if not isinstance(other, LogField):
            return NotImplemented
        table = dict(self.parts)
        for k, v in other.parts.items():
            self._merge(k, v, table)
        return LogField(self.coord_n, self.num_vars, self.backend, table)

    __radd__ = __add__

    def __neg__(self):
        return LogField(
            self.coord_n,
            self.num_vars,
            self.backend,
            {k: -v for k, v in self.parts.items()},
        )

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scaled(self, factor):
        return LogField(
            self.coord_n,
            self.num_vars,
            self.backend,
            {k: v.scaled(factor) for k, v in self.parts.items()},
        )

    def __mul__(self, other):
        if isinstance(other, ConeJet):
            other = LogField.from_cone(other)
        if not isinstance(other, LogField):
            return NotImplemented
        table = {}
        for (a1, b1), v1 in self.parts.items():
            for (a2, b2), v2 in other.parts.items():
                self._merge((a1 + a2, b1 + b2), v1 * v2, table)
        return LogField(self.coord_n, self.num_vars, self.backend, table)

    def __rmul__(self, other):
        if isinstance(other, ConeJet):
            return LogField.from_cone(other) * self
        return NotImplemented

    def derivative(self, index):
        n = self.coord_n
        table = {}
        for (a, b), p in self.parts.items():
            self._merge((a, b), p.derivative(index), table)
            if index == 0 and a >= 1:
                self._merge((a - 1, b), p.shift_tdeg(-1, scale=a), table)
            if index == n + 1 and b >= 1:
                self._merge((a, b - 1), p.shift_rho(-1, scale=b), table)
        return LogField(self.coord_n, self.num_vars, self.backend, table)

    def restrict(self):
        for (a, b), v in self.parts.items():
            if (a, b) != (0, 0) and not v.is_zero():
                raise SpecError(
                    f"logarithmic part (log t)^{a}(log rho)^{b} survives restriction"
                )
        return self.part(0, 0).restrict()

    def truncate_rho(self, high):
        return LogField(
            self.coord_n,
            self.num_vars,
            self.backend,
            {k: v.truncate_rho(high) for k, v in self.parts.items()},
        )

    def __repr__(self):
        return "LogField(" + ", ".join(
            f"(logt^{a} logrho^{b}): {v!r}" for (a, b), v in self.parts.items()
        ) + ")"


class ConeMetric:
    """The normal-form metric as a matrix of ConeJets over (t, x, rho)."""

    def __init__(self, components, n, rho_cap, backend=EXACT):
        self.components = components
        self.n = n
        self.dim = n + 2
        self.rho_cap = rho_cap
        self.backend = backend
        self.order = INF  # reliability lives on the cone scalars themselves
        self.num_vars = components[0][0].num_vars
        self._inverse = None
        self._pack = None

    def inverse(self):
        if self._inverse is not None:
            return self._inverse
        m = self.dim
        a = [list(r) for r in self.components]
        eye = [
            [
                ConeJet.constant(
                    1 if self.backend == EXACT else 1.0,
                    self.n,
                    self.num_vars,
                    self.backend,
                )
                if i == j
                else ConeJet.zero(self.n, self.num_vars, self.backend)
                for j in range(m)
            ]
            for i in range(m)
        ]
        for col in range(m):
            piv = None
            for r in range(col, m):
                entry = a[r][col]
                if 0 in entry.slots and entry.slots[0].constant_term():
                    piv = r
                    break
            if piv is None:
                raise DegenerateInput("cone metric is singular at the base point")
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                eye[col], eye[piv] = eye[piv], eye[col]
            rec = a[col][col].reciprocal(rho_cap=self.rho_cap)
            a[col] = [e * rec for e in a[col]]
            eye[col] = [e * rec for e in eye[col]]
            for r in range(m):
                if r == col:
                    continue
                f = a[r][col]
                if f.is_exact_zero() or f.is_zero():
                    continue
                a[r] = [e - f * p for e, p in zip(a[r], a[col])]
                eye[r] = [e - f * p for e, p in zip(eye[r], eye[col])]
        self._inverse = eye
        return eye


class ConeCurvature(CurvaturePack):
    """Curvature of a ConeMetric: the shared covariant formulas run unchanged
    over cone scalars; only zero construction and the Ricci contraction are
    specialized (the latter avoids materializing the full Riemann tensor)."""

    def _zero(self, order_drop):
        g = self.metric
        return ConeJet.zero(g.n, g.num_vars, g.backend)

    @property
    def ricci_direct(self):
        if getattr(self, "_ricci_direct", None) is None:
            self._ricci_direct = self._compute_ricci_direct()
        return self._ricci_direct

    def _compute_ricci_direct(self):
        m = self.dim
        gam = self.christoffel
        trg = []
        for lam in range(m):
            acc = self._zero(1)
            for p in range(m):
                acc = acc + gam[p][p][lam]
            trg.append(acc)
        ric = [[None] * m for _ in range(m)]
        for j in range(m):
            for l in range(j, m):
                acc = self._zero(2)
                for p in range(m):
                    acc = acc + gam[p][l][j].derivative(p)
                acc = acc - trg[j].derivative(l)
                for lam in range(m):
                    if gam[lam][l][j].is_exact_zero():
                        continue
                    acc = acc + trg[lam] * gam[lam][l][j]
                for p in range(m):
                    for lam in range(m):
                        a = gam[p][l][lam]
                        if a.is_exact_zero():
                            continue
                        b = gam[lam][p][j]
                        if b.is_exact_zero():
                            continue
                        acc = acc - a * b
                ric[j][l] = acc
                ric[l][j] = acc
        return ric


def cone_curvature(cm: ConeMetric) -> ConeCurvature:
    if cm._pack is None:
        cm._pack = ConeCurvature(cm)
    return cm._pack


def cone_laplacian(cm: ConeMetric, field):
    """Delta F = -g^{IJ}(d_I d_J F - Gamma^K_{IJ} d_K F) over the cone.

    `field` may be a ConeJet or a LogField; the result has the same kind.
    """
    m = cm.dim
    ginv = cm.inverse()
    gam = cone_curvature(cm).christoffel
    dfs = [field.derivative(k) for k in range(m)]
    acc = None
    for i in range(m):
        for j in range(i, m):
            gij = ginv[i][j]
            if gij.is_exact_zero() or gij.is_zero():
                continue
            term = dfs[i].derivative(j)
            for k in range(m):
                gk = gam[k][i][j]
                if gk.is_exact_zero():
                    continue
                term = term - gk * dfs[k]
            contrib = gij * term
            if i != j:
                contrib = contrib + contrib
            acc = (-contrib) if acc is None else acc - contrib
    return acc


def rho_tilde(n, num_vars=None, backend=EXACT):
    """The homogeneous defining scalar 2 t^2 rho of the cone."""
    return ConeJet(
        n,
        num_vars or n,
        backend,
        Fraction(2),
        {1: Jet.constant(2 if backend == EXACT else 2.0, num_vars or n, 200, backend)},
        INF,
    )


def assemble_cone_metric(n, coefficient_arrays, backend=EXACT, exact_tail=False, rho_cap=None):
    """ConeMetric from rho-Taylor coefficients of the tangential block.

    coefficient_arrays: [g^(0), g^(1), ..., g^(M)], each an n x n array of
    x-jets.  `exact_tail` declares the series terminates (closed forms);
    rho_cap bounds the depth of series inversions (defaults to M)."""
    num_vars = coefficient_arrays[0][0][0].num_vars
    m_top = len(coefficient_arrays) - 1
    high = INF if exact_tail else m_top
    zero = ConeJet.zero(n, num_vars, backend)
    comps = [[zero for _ in range(n + 2)] for _ in range(n + 2)]
    two = 2 if backend == EXACT else 2.0
    comps[0][0] = ConeJet(
        n, num_vars, backend, Fraction(0),
        {1: Jet.constant(two, num_vars, 200, backend)}, INF,
    )
    t_entry = ConeJet(
        n, num_vars, backend, Fraction(1),
        {0: Jet.one(num_vars, 200, backend)}, INF,
    )
    comps[0][n + 1] = t_entry
    comps[n + 1][0] = t_entry
    for i in range(n):
        for j in range(n):
            slots = {}
            for m, arr in enumerate(coefficient_arrays):
                slots[m] = arr[i][j]
            comps[i + 1][j + 1] = ConeJet(
                n, num_vars, backend, Fraction(2), slots, high
            )
    return ConeMetric(comps, n, rho_cap=(m_top if rho_cap is None else rho_cap), backend=backend)


def eps_linear_part(xjet, var_index=None, strict=True):
    """Coefficient of the first power of the trailing probe variable,
    returned as a jet without that variable.

    With `strict` the variable may not appear beyond first order; without
    it higher powers are discarded, i.e. the variable is read as nilpotent.
    """
    nv = xjet.num_vars
    var = nv - 1 if var_index is None else var_index
    if var != nv - 1:
        raise ShapeMismatch("probe variable must be the trailing one")
    out_terms = []
    for expo, coeff in xjet.terms():
        if expo[var] == 1:
            out_terms.append((expo[:var], coeff))
        elif expo[var] > 1 and strict:
            raise SpecError("probe variable appears beyond first order")
    return Jet.from_terms(out_terms, nv - 1, max(xjet.order - 1, 0), xjet.backend)
