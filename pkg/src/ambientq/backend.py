"""Coefficient backends for the jet kernel.

Two backends exist package-wide:

* ``"exact"``  -- arbitrary-precision rationals.  Uses gmpy2.mpq when available
  (several times faster in multiply-accumulate loops), otherwise falls back to
  ``fractions.Fraction``.  Every operation is exact; nothing ever rounds.
* ``"float"``  -- IEEE binary floats, used only where a quadrature genuinely
  needs them.

The helpers here are the only place the rest of the package needs to know
which rational type is in use.
"""

from __future__ import annotations

from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Union

try:  # pragma: no cover - exercised implicitly by every exact test
    from gmpy2 import mpq as _mpq, mpz as _mpz, iroot as _iroot

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover
    _mpq = None
    _mpz = None
    _iroot = None
    HAVE_GMPY2 = False

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

RationalLike = Union[int, str, Fraction, "type(_mpq(1))" if HAVE_GMPY2 else Fraction]


def rational(value=0, den=None) -> "Rational":
    """Exact rational from an int, string ("p/q" or "p"), Fraction or rational;
    rational(p, q) builds p/q."""
    if isinstance(value, float) or isinstance(den, float):
        raise TypeError("refusing to build an exact rational from a float")
    if den is not None:
        return rational(value) / rational(den)
    if HAVE_GMPY2:
        if isinstance(value, Fraction):
            # mpq(Fraction) trips over subclass identity checks in some builds
            return _mpq(value.numerator, value.denominator)
        return _mpq(value)
    return Fraction(value)


#: the zero/one of the exact backend, shared to avoid re-parsing
QZERO = rational(0)
QONE = rational(1)


def is_rational(value) -> bool:
    if HAVE_GMPY2 and isinstance(value, type(QZERO)):
        return True
    return isinstance(value, (int, Fraction))


def coerce(backend: str, value):
    """Coerce a scalar into the given backend's coefficient type."""
    if backend == EXACT:
        return rational(value)
    if backend == FLOAT:
        if HAVE_GMPY2 and isinstance(value, type(QZERO)):
            return float(Fraction(value.numerator, value.denominator))
        if isinstance(value, Fraction):
            return float(value)
        return float(value)
    raise ValueError(f"unknown backend {backend!r}")


def zero_of(backend: str):
    return QZERO if backend == EXACT else 0.0


def one_of(backend: str):
    return QONE if backend == EXACT else 1.0


def _int_kth_root(n: int, k: int):
    """Exact integer k-th root of n >= 0, or None."""
    if n < 0:
        if k % 2 == 0:
            return None
        r = _int_kth_root(-n, k)
        return None if r is None else -r
    if HAVE_GMPY2:
        root, exact = _iroot(_mpz(n), k)
        return int(root) if exact else None
    if n in (0, 1):
        return n
    lo, hi = 0, 1 << ((n.bit_length() + k - 1) // k + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def rational_root(q, k: int):
    """Exact k-th root of a rational, or None when irrational. k >= 1."""
    if k == 1:
        return rational(q)
    q = rational(q)
    num, den = int(q.numerator), int(q.denominator)
    rn = _int_kth_root(num, k)
    if rn is None:
        return None
    rd = _int_kth_root(den, k)
    if rd is None:
        return None
    return rational(rn) / rational(rd)


def rational_power(q, expo: Fraction):
    """Exact q**expo for rational exponent, or None when the value is irrational."""
    q = rational(q)
    expo = Fraction(expo)
    if expo == 0:
        if q == 0:
            raise ZeroDivisionError("0**0")
        return QONE
    if q == 0:
        if expo < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        return QZERO
    base = rational_root(q, expo.denominator)
    if base is None:
        return None
    p = expo.numerator
    if p < 0:
        base = 1 / base
        p = -p
    return base**p


def decimal_string(value, digits: int = 17) -> str:
    """Decimal rendering at `digits` significant digits (exact input preserved elsewhere)."""
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    ctx_digits = max(digits, 17)
    old = getcontext().prec
    try:
        getcontext().prec = ctx_digits
        d = Decimal(int(value.numerator)) / Decimal(int(value.denominator))
    finally:
        getcontext().prec = old
    return f"{d:.{digits - 1}E}" if (d != 0 and (abs(d) >= Decimal(10) ** digits or abs(d) < Decimal(10) ** -6)) else str(+d)


def exact_string(value) -> str:
    """Canonical "p/q" (or "p") string of an exact rational."""
    num, den = int(value.numerator), int(value.denominator)
    return f"{num}/{den}" if den != 1 else str(num)
