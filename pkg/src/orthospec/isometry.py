"""SL(2,C) matrices acting on upper half-space.

Matrices carry the word over the generator alphabet that produced them.
Lowercase letters are generators, uppercase letters their inverses, and a
word ``c1 c2 ... cn`` evaluates to the left-to-right product
``M(c1) @ M(c2) @ ... @ M(cn)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from flint import acb, arb

from .rigor import (
    ComplexEnclosure,
    DivisorContainsZero,
    DomainViolation,
    Enclosure,
    RigorError,
    _to_acb,
    reduce_angle,
)


class ParabolicOrElliptic(RigorError):
    """The element is not certifiably loxodromic."""


class ZDecisionFailed(RigorError):
    """The height of an image point could not be certified positive."""


class NoBranchInBox(RigorError):
    pass


class AmbiguousBranch(RigorError):
    pass


def invert_word(word: str) -> str:
    return word[::-1].swapcase()


def reduce_word(word: str) -> str:
    """Free reduction: cancel adjacent ``xX`` pairs."""
    out: list[str] = []
    for ch in word:
        if out and out[-1] == ch.swapcase() and out[-1] != ch:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()


class Isometry:
    """A unimodular 2x2 complex matrix of enclosures plus its word."""

    __slots__ = ("m", "word")

    def __init__(self, a, b, c, d, word: str = ""):
        object.__setattr__(self, "m", tuple(_acb(x) for x in (a, b, c, d)))
        object.__setattr__(self, "word", word)

    def __setattr__(self, key, value):
        raise AttributeError("Isometry is immutable")

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1, 0, 0, 1, "")

    @classmethod
    def from_complex(cls, mat, word: str = "", normalize: bool = True) -> "Isometry":
        a, b, c, d = (complex(x) for x in np.asarray(mat).ravel())
        g = cls(a, b, c, d, word)
        return g.normalized() if normalize else g

    # entries as enclosures
    a = property(lambda self: ComplexEnclosure(self.m[0]))
    b = property(lambda self: ComplexEnclosure(self.m[1]))
    c = property(lambda self: ComplexEnclosure(self.m[2]))
    d = property(lambda self: ComplexEnclosure(self.m[3]))

    def __repr__(self):
        return f"Isometry({self.word or '1'}, {np.round(self.to_numpy(), 6).tolist()})"

    def det(self) -> ComplexEnclosure:
        a, b, c, d = self.m
        return ComplexEnclosure(a * d - b * c)

    def trace(self) -> ComplexEnclosure:
        return ComplexEnclosure(self.m[0] + self.m[3])

    def normalized(self) -> "Isometry":
        """Divide by a certified square root of the determinant."""
        det = self.m[0] * self.m[3] - self.m[1] * self.m[2]
        if det.contains(0):
            raise DomainViolation("determinant enclosure contains 0")
        if det == 1:
            return self
        s = det.sqrt()
        return Isometry(*(x / s for x in self.m), word=self.word)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        a, b, c, d = self.m
        e, f, g, h = other.m
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h,
                        reduce_word(self.word + other.word))

    def inverse(self) -> "Isometry":
        a, b, c, d = self.m
        return Isometry(d, -b, -c, a, invert_word(self.word))

    def conjugate(self, m: "Isometry") -> "Isometry":
        """Return ``m @ self @ m^-1``."""
        return m @ self @ m.inverse()

    def with_word(self, word: str) -> "Isometry":
        return Isometry(*self.m, word=word)

    def to_numpy(self) -> np.ndarray:
        return np.array([[complex(x.mid()) for x in self.m[:2]],
                         [complex(x.mid()) for x in self.m[2:]]])

    def max_radius(self) -> float:
        return max(max(float(x.real.rad()), float(x.imag.rad())) for x in self.m)

    def cosh_displacement(self) -> Enclosure:
        """``cosh d(O, gO)`` for ``O = (0,0,1)``: half the squared Frobenius norm."""
        s = arb(0)
        for x in self.m:
            s += x.real * x.real + x.imag * x.imag
        return Enclosure(s / 2)

    def contains_identity(self) -> bool:
        a, b, c, d = self.m
        if not (b.contains(0) and c.contains(0)):
            return False
        return (a.contains(1) and d.contains(1)) or (a.contains(-1) and d.contains(-1))

    def overlaps(self, other: "Isometry") -> bool:
        """Whether the two PSL(2,C) elements may coincide (up to sign)."""
        pos = all(x.overlaps(y) for x, y in zip(self.m, other.m))
        neg = all(x.overlaps(-y) for x, y in zip(self.m, other.m))
        return pos or neg


def _acb(x) -> acb:
    return _to_acb(x)


def evaluate_word(word: str, generators: dict[str, Isometry]) -> Isometry:
    g = Isometry.identity()
    for ch in word:
        if ch in generators:
            h = generators[ch]
        elif ch.swapcase() in generators:
            h = generators[ch.swapcase()].inverse()
        else:
            raise KeyError(ch)
        g = g @ h
    return g.with_word(reduce_word(word))


# ---------------------------------------------------------------------------
# points of upper half-space


@dataclass(frozen=True)
class UhpPoint:
    x: Enclosure
    y: Enclosure
    z: Enclosure

    def __post_init__(self):
        if not self.z.certainly_positive():
            raise ZDecisionFailed("height not certifiably positive")

    @classmethod
    def of(cls, x, y, z) -> "UhpPoint":
        return cls(_enc(x), _enc(y), _enc(z))

    @property
    def zeta(self) -> acb:
        return acb(self.x.ball, self.y.ball)


def _enc(x) -> Enclosure:
    return x if isinstance(x, Enclosure) else Enclosure(x)


ORIGIN = UhpPoint(Enclosure(0), Enclosure(0), Enclosure(1))


def apply(g: Isometry, p: UhpPoint) -> UhpPoint:
    """Quaternion action ``(a w + b)(c w + d)^-1`` written out in coordinates."""
    a, b, c, d = g.m
    zeta = p.zeta
    h = p.z.ball
    num = a * zeta + b
    den = c * zeta + d
    den_abs2 = den.real * den.real + den.imag * den.imag + (c.real * c.real + c.imag * c.imag) * h * h
    if den_abs2.contains(0):
        raise ZDecisionFailed("denominator of the action contains 0")
    new = (num * den.conjugate() + a * c.conjugate() * h * h) / den_abs2
    # det may differ from 1 by rounding; dividing by |det| keeps the height exact
    det = abs(a * d - b * c)
    z = h * det / den_abs2
    if not z > 0:
        raise ZDecisionFailed("image height not certifiably positive")
    return UhpPoint(Enclosure(new.real), Enclosure(new.imag), Enclosure(z))


def cosh_uhp_distance(p: UhpPoint, q: UhpPoint) -> Enclosure:
    dz = p.zeta - q.zeta
    dh = p.z.ball - q.z.ball
    return Enclosure(1 + (dz.real * dz.real + dz.imag * dz.imag + dh * dh) / (2 * p.z.ball * q.z.ball))


def uhp_distance(p: UhpPoint, q: UhpPoint) -> Enclosure:
    return cosh_uhp_distance(p, q).arccosh(clamp=True)


# ---------------------------------------------------------------------------
# complex length and axes


@dataclass(frozen=True)
class ComplexLength:
    """``s + i t`` with ``s > 0`` and ``t`` reduced to ``(-pi, pi]``."""

    value: ComplexEnclosure

    @property
    def re(self) -> Enclosure:
        return self.value.re

    @property
    def im(self) -> Enclosure:
        return self.value.im

    def __complex__(self):
        return complex(self.value)

    def conjugate(self) -> "ComplexLength":
        return ComplexLength(ComplexEnclosure(self.value.re, reduce_angle(-self.value.im)))


def _some_sqrt(z: acb) -> acb:
    """A square root of ``z``, taken away from the branch cut; the sign is unspecified."""
    if z.real < 0:
        return acb(0, 1) * (-z).sqrt()
    return z.sqrt()


def _eigenvalue(tr: acb) -> acb:
    """The eigenvalue of modulus >= 1 for trace ``tr``, or raise."""
    half = tr / 2
    s = _some_sqrt(half * half - 1)
    e1, e2 = half + s, half - s
    if abs(e1) > abs(e2):
        return e1
    if abs(e2) > abs(e1):
        return e2
    raise ParabolicOrElliptic("eigenvalue moduli not separated")


def length_from_trace(tr: ComplexEnclosure | acb) -> ComplexLength:
    tr = _acb(tr)
    e = _eigenvalue(tr)
    lam = e * e  # exp(length)
    if lam.real < 0:
        raw = (-lam).log() + acb(0, arb.pi())
    else:
        raw = lam.log()
    re = Enclosure(raw.real)
    if not re.certainly_positive():
        raise ParabolicOrElliptic("real length not certifiably positive")
    return ComplexLength(ComplexEnclosure(re.ball, reduce_angle(Enclosure(raw.imag)).ball))


def complex_length(g: Isometry) -> ComplexLength:
    """``2 arccosh(tr/2)`` normalised; the sign ambiguity of ``tr`` is absorbed by reduction."""
    return length_from_trace(g.trace())


def fixed_points(g: Isometry):
    """Repelling and attracting fixed points ``(z0, z1)`` on the sphere at infinity."""
    a, b, c, d = g.m
    tr = a + d
    e = _eigenvalue(tr)
    if c == 0:
        if b == 0 and a == d:
            raise ParabolicOrElliptic("identity")
        denom = d - a
        if denom.contains(0):
            raise ParabolicOrElliptic("upper-triangular element with equal diagonal")
        fin = ComplexEnclosure(b / denom)
        # z -> (a z + b)/d scales by a/d at infinity
        if abs(a) > abs(d):
            return fin, INFINITY
        if abs(d) > abs(a):
            return INFINITY, fin
        raise ParabolicOrElliptic("diagonal moduli not separated")
    if c.contains(0):
        raise DivisorContainsZero("lower-left entry straddles zero; cannot place axis")
    # c z1 + d = e, the expanding eigenvalue, so z1 is attracting
    z1 = (e - d) / c
    z0 = (1 / e - d) / c
    return ComplexEnclosure(z0), ComplexEnclosure(z1)


def normalizer_to_axis(g: Isometry) -> Isometry:
    """An ``m`` with ``m(0) = z0``, ``m(inf) = z1``; then ``m^-1 g m`` is diagonal."""
    z0, z1 = fixed_points(g)
    if z1 is INFINITY:
        return Isometry(1, z0.ball, 0, 1)
    if z0 is INFINITY:
        return Isometry(z1.ball, -1, 1, 0)
    diff = z1.ball - z0.ball
    if diff.contains(0):
        raise ParabolicOrElliptic("fixed points not separated")
    return Isometry(z1.ball, z0.ball / diff, 1, 1 / diff)


def ortho_trace(h: Isometry) -> ComplexEnclosure:
    a, b, c, d = h.m
    return ComplexEnclosure(a * d + b * c)


def axis_basepoint_distance(g: Isometry, basepoint: UhpPoint = ORIGIN) -> Enclosure:
    ell = complex_length(g)
    cosh_d = cosh_uhp_distance(basepoint, apply(g, basepoint))
    return axis_distance_from(cosh_d, ell)


def axis_distance_from(cosh_d: Enclosure, ell: ComplexLength) -> Enclosure:
    cos_t = ell.im.cos()
    num = cosh_d - cos_t
    den = ell.re.cosh() - cos_t
    ratio = Enclosure(num.ball / den.ball)
    # exact ratio is >= 1; rounding may dip below
    if not ratio.ball >= 1:
        ratio = Enclosure(arb(1).union(ratio.upper()) if ratio.upper() >= 1 else arb(1))
    return ratio.sqrt().arccosh(clamp=True)


# ---------------------------------------------------------------------------
# parameter boxes


@dataclass(frozen=True)
class BoxParameters:
    L: ComplexEnclosure
    D: ComplexEnclosure
    R: ComplexEnclosure


def parameters_to_generators(P: BoxParameters) -> tuple[Isometry, Isometry]:
    for name in ("L", "D", "R"):
        if getattr(P, name).contains_zero():
            raise DomainViolation(f"parameter {name} contains 0")
    sl = P.L.ball.sqrt()
    u = P.R.ball.sqrt()
    v = P.D.ball.sqrt()
    cp = (v + 1 / v) / 2
    cm = (v - 1 / v) / 2
    f = Isometry(sl, 0, 0, 1 / sl, "f")
    w = Isometry(u * cp, u * cm, cm / u, cp / u, "w")
    return f, w


Box = dict  # name -> (Enclosure lo, Enclosure hi) pairs for re and im


def _in_box(z: ComplexEnclosure, bounds) -> bool | None:
    """True if certainly inside, False if certainly outside, None if undecided."""
    (re_lo, re_hi), (im_lo, im_hi) = bounds
    re, im = z.ball.real, z.ball.imag
    lo = [arb(re_lo), arb(im_lo)]
    hi = [arb(re_hi), arb(im_hi)]
    inside = re >= lo[0] and re <= hi[0] and im >= lo[1] and im <= hi[1]
    if inside:
        return True
    outside = re < lo[0] or re > hi[0] or im < lo[1] or im > hi[1]
    if outside:
        return False
    return None


def traces_to_parameters(p, q, r, box: dict) -> BoxParameters:
    """Invert the trace triple ``(tr f, tr w, tr f^-1 w)``.

    ``box`` maps ``"L"``, ``"D"``, ``"R"`` to ``((re_lo, re_hi), (im_lo, im_hi))``.
    Each explicit sign is resolved by box membership.
    """
    p, q, r = (_acb(x) for x in (p, q, r))
    disc = _some_sqrt(p * p - 4)
    candidates = []
    for s1 in (1, -1):
        sl = (p + s1 * disc) / 2
        L = sl * sl
        den = r * sl - q
        if den.contains(0):
            continue
        R = (q * L - r * sl) / den
        sR = R.sqrt()
        root = _some_sqrt(q * q * R - (1 + R) * (1 + R))
        for s2 in (1, -1):
            one_r = 1 + R
            if one_r.contains(0):
                continue
            D = ((q * sR + s2 * root) / one_r)
            D = D * D
            candidates.append(BoxParameters(ComplexEnclosure(L), ComplexEnclosure(D), ComplexEnclosure(R)))
    inside, undecided = [], []
    for P in candidates:
        verdicts = [_in_box(getattr(P, k), box[k]) for k in ("L", "D", "R")]
        if all(v is True for v in verdicts):
            inside.append(P)
        elif not any(v is False for v in verdicts):
            undecided.append(P)
    if len(inside) == 1 and not undecided:
        return inside[0]
    if len(inside) + len(undecided) > 1:
        raise AmbiguousBranch("more than one sign choice lands in the box")
    if undecided:
        raise AmbiguousBranch("box membership undecided at this precision")
    raise NoBranchInBox("no sign choice lands in the box")
