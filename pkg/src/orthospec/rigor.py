"""Midpoint-radius enclosures for real and complex numbers.

Every quantity computed downstream is an :class:`Enclosure` or a
:class:`ComplexEnclosure`.  Both are thin immutable wrappers around
``flint.arb`` / ``flint.acb`` balls, which provide outward-rounded
arithmetic and rigorous elementary functions.  The wrappers add the error
vocabulary and branch conventions the geometry code relies on, plus the
three-valued comparison :func:`cmp`.
"""

from __future__ import annotations

import contextlib
import enum
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterator, Union

from flint import acb, arb, ctx, fmpq

DEFAULT_BITS = 212
DEFAULT_CAP = 1024


class RigorError(ArithmeticError):
    """Base class for failures of certified arithmetic."""


class DivisorContainsZero(RigorError, ZeroDivisionError):
    pass


class DomainViolation(RigorError, ValueError):
    pass


class BranchAmbiguous(RigorError):
    """The enclosure straddles a branch cut and the caller asked for a decided branch."""


class PrecisionCeilingReached(RigorError):
    pass


class Trichotomy(enum.Enum):
    BELOW = "below"
    ABOVE = "above"
    OVERLAP = "overlap"


# ---------------------------------------------------------------------------
# precision contexts


@dataclass(frozen=True)
class Precision:
    """Working precision in bits together with the escalation ceiling."""

    bits: int = DEFAULT_BITS
    cap: int = DEFAULT_CAP

    def escalate(self) -> "Precision":
        if self.bits >= self.cap:
            raise PrecisionCeilingReached(
                f"working precision {self.bits} bits already at cap {self.cap}; "
                "input data too coarse for the requested decision"
            )
        return Precision(min(2 * self.bits, self.cap), self.cap)

    @contextlib.contextmanager
    def active(self) -> Iterator["Precision"]:
        old = ctx.prec
        ctx.prec = self.bits
        try:
            yield self
        finally:
            ctx.prec = old


def escalate(prec: Precision) -> Precision:
    return prec.escalate()


def working_bits() -> int:
    return ctx.prec


@contextlib.contextmanager
def working_precision(bits: int) -> Iterator[None]:
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


# ctx.prec is process-global in flint; set the library default on import
ctx.prec = DEFAULT_BITS


# ---------------------------------------------------------------------------
# conversions

Number = Union[int, float, str, Fraction, Decimal, "Enclosure"]


def exact_rational(value) -> Fraction:
    """Parse a cutoff given as int, Fraction, decimal string or ``p/q``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    s = str(value).strip()
    if "/" in s:
        p, q = s.split("/")
        return Fraction(int(p), int(q))
    return Fraction(Decimal(s))


def _to_arb(x) -> arb:
    if isinstance(x, Enclosure):
        return x.ball
    if isinstance(x, arb):
        return x
    if isinstance(x, int):
        return arb(x)
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, Fraction):
        return arb(fmpq(x.numerator, x.denominator))
    if isinstance(x, (str, Decimal)):
        return _to_arb(exact_rational(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Enclosure")


def _to_acb(z) -> acb:
    if isinstance(z, ComplexEnclosure):
        return z.ball
    if isinstance(z, acb):
        return z
    if isinstance(z, complex):
        return acb(z.real, z.imag)
    return acb(_to_arb(z))


def _ipow(x, n: int):
    """``x**n`` by repeated squaring; flint's own power returns nan on balls centred at 0."""
    if n < 0:
        return 1 / _ipow(x, -n)
    out = type(x)(1)
    while n:
        if n & 1:
            out = out * x
        x = x * x
        n >>= 1
    return out


def decimal_enclosure(text: str, ulps=Fraction(1, 2)) -> "Enclosure":
    """Ingest a printed decimal with radius ``ulps`` units in its last digit (default half).

    A literal zero (``0``, ``0.000``) is taken as exact: printed
    zeros in the generator files are structural, not rounded.  A trailing
    ``...`` marks truncated digits, giving ``[x, x + ulp]`` away from zero.
    """
    s = text.strip()
    truncated = s.endswith("...")
    if truncated:
        s = s[:-3]
    d = Decimal(s)
    if d == 0 and not truncated:
        return Enclosure(0)
    ulp = Fraction(10) ** d.as_tuple().exponent
    if truncated:
        sign = -1 if d.is_signed() else 1
        return Enclosure(exact_rational(s) + sign * ulp / 2, ulp / 2)
    return Enclosure(exact_rational(s), Fraction(ulps) * ulp)


# ---------------------------------------------------------------------------
# real enclosures


class Enclosure:
    """A certified real number ``mid ± rad``."""

    __slots__ = ("ball",)

    def __init__(self, mid=0, rad=0):
        if isinstance(mid, arb) and rad == 0:
            b = mid
        else:
            b = _to_arb(mid)
            if rad:
                r = _to_arb(rad)
                if r < 0:
                    raise DomainViolation("negative radius")
                b = b + arb(0, r.upper())
        if not b.is_finite():
            raise DomainViolation("non-finite enclosure")
        object.__setattr__(self, "ball", b)

    def __setattr__(self, key, value):
        raise AttributeError("Enclosure is immutable")

    # -- fields
    @property
    def mid(self) -> arb:
        return self.ball.mid()

    @property
    def rad(self) -> arb:
        return self.ball.rad()

    def lower(self) -> arb:
        return self.ball.lower()

    def upper(self) -> arb:
        return self.ball.upper()

    def width(self) -> float:
        return 2 * float(self.ball.rad())

    def contains(self, x) -> bool:
        """True iff the exact value ``x`` (or every point of an enclosure) is inside."""
        return self.ball.contains(_to_arb(x))

    def overlaps(self, other) -> bool:
        return self.ball.overlaps(_to_arb(other))

    def contains_zero(self) -> bool:
        return self.ball.contains(0)

    def union(self, other) -> "Enclosure":
        return Enclosure(self.ball.union(_to_arb(other)))

    def __float__(self) -> float:
        return float(self.ball.mid())

    def __repr__(self) -> str:
        return f"Enclosure({self.ball.str(20)})"

    def str(self, digits: int = 15) -> str:
        return self.ball.str(digits)

    # -- arithmetic
    def __add__(self, o):
        return Enclosure(self.ball + _to_arb(o))

    __radd__ = __add__

    def __sub__(self, o):
        return Enclosure(self.ball - _to_arb(o))

    def __rsub__(self, o):
        return Enclosure(_to_arb(o) - self.ball)

    def __mul__(self, o):
        if isinstance(o, ComplexEnclosure):
            return NotImplemented
        return Enclosure(self.ball * _to_arb(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, ComplexEnclosure):
            return NotImplemented
        d = _to_arb(o)
        if d.contains(0):
            raise DivisorContainsZero(f"divisor {d.str(5)} contains zero")
        return Enclosure(self.ball / d)

    def __rtruediv__(self, o):
        if self.ball.contains(0):
            raise DivisorContainsZero(f"divisor {self.ball.str(5)} contains zero")
        return Enclosure(_to_arb(o) / self.ball)

    def __neg__(self):
        return Enclosure(-self.ball)

    def __pos__(self):
        return self

    def __abs__(self):
        return Enclosure(abs(self.ball))

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers")
        return Enclosure(_ipow(self.ball, n))

    def __hash__(self):
        raise TypeError("Enclosure is unhashable; compare with overlaps()")

    # certified orderings; False means "not certified", not "the opposite holds"
    def certainly_lt(self, o) -> bool:
        return bool(self.ball < _to_arb(o))

    def certainly_le(self, o) -> bool:
        return bool(self.ball <= _to_arb(o))

    def certainly_gt(self, o) -> bool:
        return bool(self.ball > _to_arb(o))

    def certainly_ge(self, o) -> bool:
        return bool(self.ball >= _to_arb(o))

    def certainly_positive(self) -> bool:
        return bool(self.ball > 0)

    # -- elementary functions
    def sqrt(self) -> "Enclosure":
        b = self.ball
        if b < 0:
            raise DomainViolation("sqrt of a negative enclosure")
        if not b >= 0:
            # straddles 0: the exact argument is >= 0 by the caller's contract
            b = arb(0).union(b.upper())
        return Enclosure(b.sqrt())

    def exp(self) -> "Enclosure":
        return Enclosure(self.ball.exp())

    def log(self) -> "Enclosure":
        if not self.ball > 0:
            raise DomainViolation("log needs a certified positive argument")
        return Enclosure(self.ball.log())

    def cosh(self) -> "Enclosure":
        return Enclosure(self.ball.cosh())

    def sinh(self) -> "Enclosure":
        return Enclosure(self.ball.sinh())

    def tanh(self) -> "Enclosure":
        return Enclosure(self.ball.tanh())

    def atanh(self) -> "Enclosure":
        if not abs(self.ball) < 1:
            raise DomainViolation("atanh needs |x| < 1")
        return Enclosure(self.ball.atanh())

    def cos(self) -> "Enclosure":
        return Enclosure(self.ball.cos())

    def sin(self) -> "Enclosure":
        return Enclosure(self.ball.sin())

    def arccosh(self, clamp: bool = False) -> "Enclosure":
        """Inverse hyperbolic cosine on ``[1, inf)``.

        With ``clamp`` the part of the enclosure below 1 is discarded; use it
        only where the exact value is known to be ``>= 1`` (cosh of a distance).
        """
        b = self.ball
        if b >= 1:
            return Enclosure(b.acosh())
        if b < 1 or not clamp:
            raise DomainViolation(f"arccosh of {b.str(8)} (needs >= 1)")
        if not b.upper() >= 1:
            raise DomainViolation(f"arccosh of {b.str(8)} (needs >= 1)")
        hi = b.upper().acosh()
        return Enclosure(arb(0).union(hi))


def cmp(x: Enclosure, bound) -> Trichotomy:
    """Compare an enclosure against an exact bound.

    ``BELOW`` iff ``sup x < bound``, ``ABOVE`` iff ``inf x > bound``.
    """
    b = _to_arb(bound)
    xb = x.ball if isinstance(x, Enclosure) else _to_arb(x)
    if xb < b:
        return Trichotomy.BELOW
    if xb > b:
        return Trichotomy.ABOVE
    return Trichotomy.OVERLAP


def decide(compute, bound, prec: Precision | None = None) -> tuple[Trichotomy, Precision]:
    """Rerun ``compute()`` at escalating precision until ``cmp`` is decided.

    Returns the last verdict (``OVERLAP`` if the cap is reached) and the
    precision it was obtained at.
    """
    prec = prec or Precision(working_bits())
    while True:
        with prec.active():
            verdict = cmp(compute(), bound)
        if verdict is not Trichotomy.OVERLAP:
            return verdict, prec
        try:
            prec = prec.escalate()
        except PrecisionCeilingReached:
            return verdict, prec


def pi() -> Enclosure:
    return Enclosure(arb.pi())


def const(x) -> Enclosure:
    return Enclosure(_to_arb(x))


# ---------------------------------------------------------------------------
# complex enclosures


class ComplexEnclosure:
    """A certified complex number ``re + i im`` with componentwise radii."""

    __slots__ = ("ball",)

    def __init__(self, re=0, im=0):
        if isinstance(re, acb) and not im:
            b = re
        elif isinstance(re, complex) and not im:
            b = acb(re.real, re.imag)
        else:
            b = acb(_to_arb(re), _to_arb(im))
        if not b.is_finite():
            raise DomainViolation("non-finite enclosure")
        object.__setattr__(self, "ball", b)

    def __setattr__(self, key, value):
        raise AttributeError("ComplexEnclosure is immutable")

    @property
    def re(self) -> Enclosure:
        return Enclosure(self.ball.real)

    @property
    def im(self) -> Enclosure:
        return Enclosure(self.ball.imag)

    def __complex__(self) -> complex:
        return complex(float(self.ball.real.mid()), float(self.ball.imag.mid()))

    def __repr__(self) -> str:
        return f"ComplexEnclosure({self.ball.real.str(15)}, {self.ball.imag.str(15)})"

    def width(self) -> float:
        return 2 * max(float(self.ball.real.rad()), float(self.ball.imag.rad()))

    def contains(self, z) -> bool:
        return self.ball.contains(_to_acb(z))

    def overlaps(self, other) -> bool:
        return self.ball.overlaps(_to_acb(other))

    def contains_zero(self) -> bool:
        return self.ball.contains(0)

    def union(self, other) -> "ComplexEnclosure":
        return ComplexEnclosure(self.ball.union(_to_acb(other)))

    def conjugate(self) -> "ComplexEnclosure":
        return ComplexEnclosure(self.ball.conjugate())

    def __add__(self, o):
        return ComplexEnclosure(self.ball + _to_acb(o))

    __radd__ = __add__

    def __sub__(self, o):
        return ComplexEnclosure(self.ball - _to_acb(o))

    def __rsub__(self, o):
        return ComplexEnclosure(_to_acb(o) - self.ball)

    def __mul__(self, o):
        return ComplexEnclosure(self.ball * _to_acb(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        d = _to_acb(o)
        if d.contains(0):
            raise DivisorContainsZero("complex divisor contains zero")
        return ComplexEnclosure(self.ball / d)

    def __rtruediv__(self, o):
        if self.ball.contains(0):
            raise DivisorContainsZero("complex divisor contains zero")
        return ComplexEnclosure(_to_acb(o) / self.ball)

    def __neg__(self):
        return ComplexEnclosure(-self.ball)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers")
        return ComplexEnclosure(_ipow(self.ball, n))

    def __abs__(self) -> Enclosure:
        return Enclosure(abs(self.ball))

    def abs(self) -> Enclosure:
        return Enclosure(abs(self.ball))

    def abs2(self) -> Enclosure:
        b = self.ball
        return Enclosure(b.real * b.real + b.imag * b.imag)

    def __hash__(self):
        raise TypeError("ComplexEnclosure is unhashable")

    def _straddles_cut(self) -> bool:
        # principal branch cut of log/sqrt: the closed negative real axis
        b = self.ball
        return bool(b.imag.contains(0) and not b.real > 0)

    def arg(self, decided: bool = False) -> Enclosure:
        if self.ball.contains(0):
            raise DomainViolation("arg of an enclosure containing 0")
        if decided and self._straddles_cut() and not self.ball.imag == 0:
            raise BranchAmbiguous("arg straddles the negative real axis")
        return Enclosure(self.ball.arg())

    def sqrt(self, decided: bool = False) -> "ComplexEnclosure":
        if decided and self._straddles_cut() and not self.ball.contains(0):
            if not (self.ball.imag == 0):
                raise BranchAmbiguous("sqrt straddles the branch cut")
        return ComplexEnclosure(self.ball.sqrt())

    def exp(self) -> "ComplexEnclosure":
        return ComplexEnclosure(self.ball.exp())

    def log(self, decided: bool = False) -> "ComplexEnclosure":
        """Principal logarithm, imaginary part in ``(-pi, pi]``."""
        b = self.ball
        if b.contains(0):
            raise DomainViolation("log of an enclosure containing 0")
        if self._straddles_cut() and not b.imag == 0:
            if decided:
                raise BranchAmbiguous("log straddles the negative real axis")
        return ComplexEnclosure(b.log())

    def cosh(self) -> "ComplexEnclosure":
        return ComplexEnclosure(self.ball.cosh())

    def sinh(self) -> "ComplexEnclosure":
        return ComplexEnclosure(self.ball.sinh())

    def arccosh(self, decided: bool = False) -> "ComplexEnclosure":
        """Principal ``arccosh``: real part ``>= 0``, imaginary part in ``(-pi, pi]``.

        The cut of the principal branch is the real ray ``(-inf, 1)``.
        """
        b = self.ball
        if decided and b.imag.contains(0) and not b.real > 1 and not b.imag == 0:
            raise BranchAmbiguous("arccosh straddles the real ray (-inf, 1)")
        r = b.acosh()
        if not r.real >= 0:
            # the exact value has Re >= 0; the ball may dip below by rounding only
            r = acb(arb(0).union(r.real.upper()) if r.real.upper() >= 0 else r.real, r.imag)
        return ComplexEnclosure(r)


def complex_from_decimals(re: str, im: str, ulps=Fraction(1, 2)) -> ComplexEnclosure:
    return ComplexEnclosure(decimal_enclosure(re, ulps).ball, decimal_enclosure(im, ulps).ball)


def reduce_angle(x: Enclosure) -> Enclosure:
    """Translate an angle by a multiple of 2*pi into ``(-pi, pi]`` (by its midpoint).

    An enclosure meeting ``-pi`` is reported next to ``+pi``.
    """
    two_pi = 2 * arb.pi()
    k = math.floor((float(x.mid) + math.pi) / (2 * math.pi))
    y = x.ball - k * two_pi
    # the interval is half-open at -pi: anything touching -pi is moved to +pi
    if y.mid() <= -arb.pi().mid() or y.overlaps(-arb.pi()):
        y = y + two_pi
    return Enclosure(y)
