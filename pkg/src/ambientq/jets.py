"""Truncated multivariate power-series (jet) arithmetic at a base point.

A :class:`Jet` is the Taylor expansion of a scalar at the coordinate origin,
truncated by *total degree*.  The truncation order is explicit metadata: asking
for a coefficient beyond it raises :class:`~ambientq.errors.InsufficientOrder`
instead of silently returning zero, and every operation propagates the
minimum reliable order of its inputs (derivatives lose one order).

Coefficients live on one of two backends, ``"exact"`` (arbitrary-precision
rationals, every operation exact) or ``"float"``.  Mixing backends raises.

Storage is a sparse dict keyed by a packed integer: 8 bits per exponent plus
the total degree in the top bits, so multiplying monomials is a single integer
addition and the truncation test is one shift.  Jets are immutable values;
all operations are pure functions, safe to share across threads or processes.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .backend import (
    EXACT,
    FLOAT,
    coerce,
    one_of,
    rational,
    rational_power,
    zero_of,
)
from .errors import (
    BackendMismatch,
    InsufficientOrder,
    NotRepresentable,
    ShapeMismatch,
)

_MAX_ORDER = 255  # per-variable exponents fit in 8 bits because degree <= order


def _factorials(n):
    out = [1]
    for k in range(1, n + 1):
        out.append(out[-1] * k)
    return out


class Jet:
    """Truncated Taylor expansion at the origin.  Immutable by convention."""

    __slots__ = ("num_vars", "order", "backend", "coeffs")

    def __init__(self, num_vars: int, order: int, backend: str, coeffs: dict):
        if num_vars < 0:
            raise ShapeMismatch("num_vars must be >= 0")
        if not 0 <= order <= _MAX_ORDER:
            raise InsufficientOrder(f"order must be in [0, {_MAX_ORDER}], got {order}")
        if backend not in (EXACT, FLOAT):
            raise BackendMismatch(f"unknown backend {backend!r}")
        self.num_vars = num_vars
        self.order = order
        self.backend = backend
        self.coeffs = coeffs  # packed key -> nonzero coefficient

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        c = coerce(backend, value)
        return cls(num_vars, order, backend, {0: c} if c != 0 else {})

    @classmethod
    def zero(cls, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        return cls(num_vars, order, backend, {})

    @classmethod
    def one(cls, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        return cls.constant(1, num_vars, order, backend)

    @classmethod
    def variable(cls, index: int, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        """The coordinate function x_index (vanishing at the base point)."""
        if not 0 <= index < num_vars:
            raise ShapeMismatch(f"variable index {index} out of range for {num_vars} vars")
        if order < 1:
            raise InsufficientOrder("a coordinate function needs order >= 1")
        key = (1 << (8 * index)) + (1 << (8 * num_vars))
        return cls(num_vars, order, backend, {key: one_of(backend)})

    @classmethod
    def from_terms(cls, terms, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        """Build from an iterable of (exponent-tuple, value) pairs."""
        coeffs = {}
        shift = 8 * num_vars
        for expo, value in terms:
            if len(expo) != num_vars:
                raise ShapeMismatch("exponent tuple length mismatch")
            deg = sum(expo)
            if deg > order:
                continue
            key = (deg << shift) + sum(e << (8 * i) for i, e in enumerate(expo))
            c = coerce(backend, value)
            if c != 0:
                cur = coeffs.get(key)
                tot = c if cur is None else cur + c
                if tot != 0:
                    coeffs[key] = tot
                elif cur is not None:
                    del coeffs[key]
        return cls(num_vars, order, backend, coeffs)

    # -- basic queries -----------------------------------------------------

    def _key(self, expo: Sequence[int]) -> int:
        return (sum(expo) << (8 * self.num_vars)) + sum(
            e << (8 * i) for i, e in enumerate(expo)
        )

    def coefficient(self, expo: Sequence[int]):
        """Coefficient of the monomial with the given exponents.

        Raises InsufficientOrder for degrees beyond the reliable order:
        unreliable coefficients are errors, never silent zeros.
        """
        if len(expo) != self.num_vars:
            raise ShapeMismatch("exponent tuple length mismatch")
        deg = sum(expo)
        if deg > self.order:
            raise InsufficientOrder(
                f"coefficient of degree {deg} requested from an order-{self.order} jet"
            )
        return self.coeffs.get(self._key(expo), zero_of(self.backend))

    def constant_term(self):
        return self.coeffs.get(0, zero_of(self.backend))

    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self):
        """Lowest total degree with a nonzero coefficient, None for the zero jet."""
        if not self.coeffs:
            return None
        shift = 8 * self.num_vars
        return min(k >> shift for k in self.coeffs)

    def terms(self):
        """Iterate (exponent-tuple, coefficient) in graded order."""
        shift = 8 * self.num_vars
        for key in sorted(self.coeffs):
            expo = tuple((key >> (8 * i)) & 0xFF for i in range(self.num_vars))
            yield expo, self.coeffs[key]

    def homogeneous_part(self, degree: int) -> "Jet":
        if degree > self.order:
            raise InsufficientOrder(
                f"degree-{degree} part of an order-{self.order} jet"
            )
        shift = 8 * self.num_vars
        coeffs = {k: v for k, v in self.coeffs.items() if (k >> shift) == degree}
        return Jet(self.num_vars, self.order, self.backend, coeffs)

    def truncated(self, order: int) -> "Jet":
        """Forget coefficients above `order` (may only lower the reliable order)."""
        if order > self.order:
            raise InsufficientOrder(
                f"cannot raise reliable order from {self.order} to {order}"
            )
        if order == self.order:
            return self
        shift = 8 * self.num_vars
        coeffs = {k: v for k, v in self.coeffs.items() if (k >> shift) <= order}
        return Jet(self.num_vars, order, self.backend, coeffs)

    def with_order(self, order: int) -> "Jet":
        """Declare a (possibly higher) reliable order.

        Only for jets whose coefficients up to `order` are genuinely known:
        freshly built polynomials, or iteration steps that provably extend the
        reliable range (e.g. Newton doubling in `reciprocal`).
        """
        if order >= self.order:
            return Jet(self.num_vars, order, self.backend, dict(self.coeffs))
        return self.truncated(order)

    # -- ring operations ----------------------------------------------------

    def _check_compat(self, other: "Jet"):
        if self.num_vars != other.num_vars:
            raise ShapeMismatch(
                f"num_vars mismatch: {self.num_vars} vs {other.num_vars}"
            )
        if self.backend != other.backend:
            raise BackendMismatch(
                f"backend mismatch: {self.backend} vs {other.backend}"
            )

    def __add__(self, other):
        if not isinstance(other, Jet):
            return self + Jet.constant(other, self.num_vars, self.order, self.backend)
        self._check_compat(other)
        order = min(self.order, other.order)
        shift = 8 * self.num_vars
        big, small = (self.coeffs, other.coeffs)
        out = {k: v for k, v in big.items() if (k >> shift) <= order}
        for k, v in small.items():
            if (k >> shift) > order:
                continue
            cur = out.get(k)
            if cur is None:
                out[k] = v
            else:
                tot = cur + v
                if tot == 0:
                    del out[k]
                else:
                    out[k] = tot
        return Jet(self.num_vars, order, self.backend, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(
            self.num_vars, self.order, self.backend, {k: -v for k, v in self.coeffs.items()}
        )

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return self - Jet.constant(other, self.num_vars, self.order, self.backend)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scaled(self, scalar) -> "Jet":
        c = coerce(self.backend, scalar)
        if c == 0:
            return Jet(self.num_vars, self.order, self.backend, {})
        return Jet(
            self.num_vars, self.order, self.backend, {k: v * c for k, v in self.coeffs.items()}
        )

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scaled(other)
        self._check_compat(other)
        # coefficients of f*g at degree d only involve f below d - val(g) and
        # g below d - val(f), so each factor's valuation extends the product's
        # reliable order; an exact-zero jet of order q is O(x^{q+1})
        order = min(
            self.order + _val_floor(other),
            other.order + _val_floor(self),
            _MAX_ORDER,
        )
        return _mul_trunc(self, other, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = coerce(self.backend, other)
            if c == 0:
                raise ZeroDivisionError("division of a jet by scalar zero")
            if self.backend == EXACT:
                return self.scaled(rational(1) / c)
            return self.scaled(1.0 / c)
        self._check_compat(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal().scaled(other)

    def reciprocal(self) -> "Jet":
        """Multiplicative inverse; requires a nonzero constant term."""
        c0 = self.constant_term()
        if c0 == 0:
            raise ZeroDivisionError("division by a jet with zero constant term")
        inv0 = (rational(1) / c0) if self.backend == EXACT else 1.0 / c0
        inv = Jet.constant(inv0, self.num_vars, self.order, self.backend)
        if len(self.coeffs) == 1 and 0 in self.coeffs:
            return inv
        two = Jet.constant(2, self.num_vars, self.order, self.backend)
        reached = 0
        while reached < self.order:
            reached = min(2 * reached + 1, self.order)
            bt = self.truncated(reached) if reached < self.order else self
            inv = _mul_trunc(inv.with_order(reached), (two.truncated(reached) - _mul_trunc(bt, inv.with_order(reached), reached)), reached)
        return inv.with_order(self.order)

    def __pow__(self, expo):
        if isinstance(expo, int):
            if expo < 0:
                return self.reciprocal() ** (-expo)
            result = Jet.one(self.num_vars, self.order, self.backend)
            base = self
            e = expo
            while e:
                if e & 1:
                    result = result * base
                e >>= 1
                if e:
                    base = base * base
            return result
        return self.power(Fraction(expo))

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and self.backend == other.backend
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    __hash__ = None

    # -- calculus -----------------------------------------------------------

    def derivative(self, index: int) -> "Jet":
        """Formal partial derivative; the reliable order drops by one."""
        if not 0 <= index < self.num_vars:
            raise ShapeMismatch(f"variable index {index} out of range")
        if self.order == 0:
            raise InsufficientOrder("differentiating an order-0 jet")
        shift = 8 * self.num_vars
        vshift = 8 * index
        dec = (1 << vshift) + (1 << shift)
        out = {}
        for k, v in self.coeffs.items():
            e = (k >> vshift) & 0xFF
            if e:
                out[k - dec] = v * e
        return Jet(self.num_vars, self.order - 1, self.backend, out)

    def substitute(self, assignments: Sequence["Jet"]) -> "Jet":
        """Formal composition self(g_0, ..., g_{num_vars-1}).

        Every assignment that actually occurs in a non-constant term must have
        zero constant term (recenter first otherwise); results are truncated at
        the common reliable order.
        """
        if len(assignments) != self.num_vars:
            raise ShapeMismatch("one assignment jet per variable is required")
        if self.num_vars == 0:
            raise ShapeMismatch("cannot substitute into a 0-variable jet")
        nv = assignments[0].num_vars
        backend = assignments[0].backend
        order = self.order
        used = [False] * self.num_vars
        shift = 8 * self.num_vars
        for k in self.coeffs:
            if k >> shift == 0:
                continue
            for i in range(self.num_vars):
                if (k >> (8 * i)) & 0xFF:
                    used[i] = True
        for i, g in enumerate(assignments):
            if g.num_vars != nv or g.backend != backend:
                raise ShapeMismatch("assignment jets must share num_vars and backend")
            if used[i]:
                order = min(order, g.order)
                if g.constant_term() != 0:
                    raise NotRepresentable(
                        f"substitution for variable {i} has a nonzero constant term; "
                        "recenter before composing"
                    )
        # cache powers of each used assignment
        pow_cache = [dict() for _ in range(self.num_vars)]
        one = Jet.one(nv, order, backend)
        for i, g in enumerate(assignments):
            if used[i]:
                pow_cache[i][0] = one
                pow_cache[i][1] = g.truncated(min(order, g.order))

        def gpow(i, e):
            cache = pow_cache[i]
            if e in cache:
                return cache[e]
            half = gpow(i, e // 2)
            res = _mul_trunc(half, half, order)
            if e & 1:
                res = _mul_trunc(res, cache[1], order)
            cache[e] = res
            return res

        acc = Jet.zero(nv, order, backend)
        for expo, c in self.terms():
            term = None
            for i, e in enumerate(expo):
                if e:
                    p = gpow(i, e)
                    term = p if term is None else _mul_trunc(term, p, order)
            if term is None:
                acc = acc + Jet.constant(c, nv, order, backend)
            else:
                acc = acc + term.scaled(c)
        return acc

    # -- transcendental functions --------------------------------------------

    def _series_apply(self, coeffs_fn, name: str) -> "Jet":
        """sum_k a_k u^k for u = self with zero constant term, a_k = coeffs_fn(k)."""
        if self.constant_term() != 0:
            raise NotRepresentable(
                f"{name} needs a zero constant term on the {self.backend} backend"
            )
        order = self.order
        acc = Jet.constant(coeffs_fn(order), self.num_vars, order, self.backend)
        for k in range(order - 1, -1, -1):
            acc = _mul_trunc(acc, self, order) + coeffs_fn(k)
        return acc

    def exp(self) -> "Jet":
        c0 = self.constant_term()
        if c0 == 0:
            fact = _factorials(self.order)
            if self.backend == EXACT:
                return self._series_apply(lambda k: rational(1) / fact[k], "exp")
            return self._series_apply(lambda k: 1.0 / fact[k], "exp")
        if self.backend == EXACT:
            raise NotRepresentable(
                "exp of a nonzero constant term is irrational on the exact backend"
            )
        import math

        return (self - c0).exp().scaled(math.exp(c0))

    def log(self) -> "Jet":
        c0 = self.constant_term()
        if self.backend == FLOAT:
            if c0 <= 0:
                raise NotRepresentable("log needs a positive constant term")
            import math

            u = (self - c0).scaled(1.0 / c0)
            return u._series_apply(
                lambda k: 0.0 if k == 0 else ((-1.0) ** (k + 1)) / k, "log"
            ) + math.log(c0)
        if c0 != 1:
            raise NotRepresentable(
                "log on the exact backend needs constant term 1 "
                f"(got {c0}); log of any other rational is irrational"
            )
        u = self - 1
        return u._series_apply(
            lambda k: zero_of(EXACT) if k == 0 else rational((-1) ** (k + 1)) / k, "log"
        )

    def power(self, expo) -> "Jet":
        """self**expo for a rational exponent (binomial series)."""
        expo = Fraction(expo)
        if expo.denominator == 1:
            return self ** int(expo)
        c0 = self.constant_term()
        if self.backend == FLOAT:
            if c0 <= 0:
                raise NotRepresentable("fractional power needs a positive constant term")
            lead = float(c0) ** float(expo)
        else:
            if c0 <= 0:
                raise NotRepresentable("fractional power needs a positive constant term")
            lead = rational_power(c0, expo)
            if lead is None:
                raise NotRepresentable(
                    f"({c0})**({expo}) is irrational; not representable exactly"
                )
        u = (self - c0) / c0  # zero constant term
        binom = [one_of(self.backend)]
        for k in range(1, self.order + 1):
            factor = Fraction(expo.numerator - (k - 1) * expo.denominator, k * expo.denominator)
            binom.append(binom[-1] * coerce(self.backend, factor))
        return u._series_apply(lambda k: binom[k], "power").scaled(lead)

    def sqrt(self) -> "Jet":
        return self.power(Fraction(1, 2))

    def sin(self) -> "Jet":
        return self._sincos(True)

    def cos(self) -> "Jet":
        return self._sincos(False)

    def _sincos(self, want_sin: bool) -> "Jet":
        c0 = self.constant_term()
        if c0 != 0:
            if self.backend == EXACT:
                raise NotRepresentable(
                    "sin/cos of a nonzero constant term is irrational on the exact backend"
                )
            import math

            u = self - c0
            return (
                u._sincos(True).scaled(math.cos(c0)) + u._sincos(False).scaled(math.sin(c0))
                if want_sin
                else u._sincos(False).scaled(math.cos(c0)) - u._sincos(True).scaled(math.sin(c0))
            )
        fact = _factorials(self.order)

        def coeff(k):
            if want_sin:
                if k % 2 == 0:
                    return zero_of(self.backend)
                sign = -1 if (k // 2) % 2 else 1
            else:
                if k % 2 == 1:
                    return zero_of(self.backend)
                sign = -1 if (k // 2) % 2 else 1
            return coerce(self.backend, Fraction(sign, fact[k]))

        return self._series_apply(coeff, "sin/cos")

    # -- conversions ----------------------------------------------------------

    def to_float_backend(self) -> "Jet":
        if self.backend == FLOAT:
            return self
        return Jet(
            self.num_vars,
            self.order,
            FLOAT,
            {k: coerce(FLOAT, v) for k, v in self.coeffs.items()},
        )

    def map_coefficients(self, fn, backend=None) -> "Jet":
        out = {}
        for k, v in self.coeffs.items():
            w = fn(v)
            if w != 0:
                out[k] = w
        return Jet(self.num_vars, self.order, backend or self.backend, out)

    def extend_vars(self, num_vars: int, at: int = 0) -> "Jet":
        """Reinterpret in a larger variable list; `at` is the index offset of
        the current block of variables inside the new one."""
        if num_vars < self.num_vars + at:
            raise ShapeMismatch("target variable count too small")
        if num_vars == self.num_vars and at == 0:
            return self
        out = {}
        oshift = 8 * self.num_vars
        nshift = 8 * num_vars
        for k, v in self.coeffs.items():
            deg = k >> oshift
            base = k & ((1 << oshift) - 1)
            out[(deg << nshift) + (base << (8 * at))] = v
        return Jet(num_vars, self.order, self.backend, out)

    def __repr__(self):
        return f"Jet({self.to_string()}; order={self.order}, backend={self.backend})"

    def to_string(self, names: Iterable[str] | None = None, max_terms: int = 12) -> str:
        if names is None:
            names = [f"x{i+1}" for i in range(self.num_vars)]
        parts = []
        for expo, c in self.terms():
            mono = "*".join(
                (f"{n}^{e}" if e > 1 else n) for n, e in zip(names, expo) if e
            )
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
            if len(parts) >= max_terms:
                parts.append("...")
                break
        return " + ".join(parts) if parts else "0"


def _val_floor(j: Jet) -> int:
    v = j.valuation()
    return j.order + 1 if v is None else v


def _mul_trunc(a: Jet, b: Jet, order: int) -> Jet:
    """Product truncated at `order` (callers guarantee compatibility)."""
    shift = 8 * a.num_vars
    if len(a.coeffs) > len(b.coeffs):
        a, b = b, a
    buckets: dict[int, list] = {}
    for k, v in b.coeffs.items():
        d = k >> shift
        if d <= order:
            buckets.setdefault(d, []).append((k, v))
    out = {}
    get = out.get
    for ka, va in a.coeffs.items():
        da = ka >> shift
        if da > order:
            continue
        rem = order - da
        for d, items in buckets.items():
            if d > rem:
                continue
            for kb, vb in items:
                k = ka + kb
                cur = get(k)
                if cur is None:
                    out[k] = va * vb
                else:
                    out[k] = cur + va * vb
    for k in [k for k, v in out.items() if v == 0]:
        del out[k]
    return Jet(a.num_vars, order, a.backend, out)


def monomials(num_vars: int, max_degree: int):
    """All exponent tuples with total degree <= max_degree, graded order."""

    def rec(prefix, remaining, vars_left):
        if vars_left == 0:
            yield prefix
            return
        for e in range(remaining + 1):
            yield from rec(prefix + (e,), remaining - e, vars_left - 1)

    for d in range(max_degree + 1):
        for expo in rec((), d, num_vars):
            if sum(expo) == d:
                yield expo
