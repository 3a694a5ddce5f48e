"""Ortholines between closed geodesics, their basings, and tube radii."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from flint import acb, arb

from .dirichlet import DirichletDomain
from .isometry import (ComplexLength, Isometry, _some_sqrt, axis_basepoint_distance, normalizer_to_axis,
                       ortho_trace)
from .rigor import (ComplexEnclosure, DivisorContainsZero, Enclosure, RigorError, Trichotomy, cmp,
                    exact_rational, pi, reduce_angle)
from .spectrum import GeodesicClass, _arb, _candidates, search


class OrientationUndecided(RigorError):
    """The side test choosing the forward endpoint of an ortholine is not decided."""


class UndecidableDedup(UserWarning):
    """Two candidate ortholines overlap without one enclosing the other; they were merged."""


# ---------------------------------------------------------------------------
# small complex helpers


def _log(w: acb) -> acb:
    """A logarithm of ``w`` computed away from the principal cut (imaginary part not reduced)."""
    if w.contains(0):
        raise DivisorContainsZero("log of an enclosure containing 0")
    if w.real < 0:
        return (-w).log() + acb(0, arb.pi())
    return w.log()


def _arccosh(z: acb) -> acb:
    """``arccosh`` with real part ``>= 0`` and imaginary part reduced, valid across the real cut."""
    r = _log(z + _some_sqrt(z * z - 1))
    if r.real < 0:
        r = -r
    re = r.real
    if not re >= 0:
        re = arb(0).union(re.upper())
    return acb(re, reduce_angle(Enclosure(r.imag)).ball)


# ---------------------------------------------------------------------------
# basings


@dataclass(frozen=True)
class Basing:
    """Position of an ortholine endpoint on an oriented geodesic.

    ``position`` lives on the torus ``C / (Z L + 2 pi i Z)`` of the geodesic of
    complex length ``L``; it is stored reduced to ``(-Re L/2, Re L/2] x (-pi, pi]``.
    """

    position: ComplexEnclosure

    def __complex__(self):
        return complex(self.position)

    def same(self, other: "Basing", length: ComplexLength) -> bool:
        d = reduce_to_torus(self.position - other.position, length, centre_im=True)
        return d.contains_zero()


def reduce_to_torus(z: ComplexEnclosure, length: ComplexLength, centre_im: bool = False) -> ComplexEnclosure:
    """Subtract multiples of ``length`` and ``2 pi i`` (chosen by midpoint)."""
    lam = length.re.ball
    k = math.floor(float(z.re.mid) / float(lam.mid()) + 0.5)
    w = z.ball - k * length.value.ball
    # the fundamental interval is half-open on the left
    if w.real.mid() <= -lam.mid() / 2:
        w = w + length.value.ball
    elif w.real.mid() > lam.mid() / 2:
        w = w - length.value.ball
    im = reduce_angle(Enclosure(w.imag))
    if centre_im and float(im.mid) > 0 and im.ball.overlaps(arb.pi()):
        im = Enclosure(im.ball - 2 * arb.pi())
    return ComplexEnclosure(acb(w.real, im.ball))


def _perpendicular_endpoint(ph: Isometry) -> acb:
    """Either endpoint of the common perpendicular (sign not chosen)."""
    a, b, c, d = ph.m
    if c.contains(0) or d.contains(0):
        raise DivisorContainsZero("image axis has an endpoint at infinity")
    return _some_sqrt((b / d) * (a / c))


def _forward_endpoint(ph: Isometry) -> acb:
    """The endpoint ``T`` of the common perpendicular from ``B(0, inf)`` to ``ph(B(0, inf))``.

    The perpendicular has endpoints ``+-T`` with ``T^2 = ph(0) ph(inf)``; ``T`` is
    the one on whose side the perpendicular meets the image axis, which is
    the case exactly when ``Re(ph(0) / T) > 0``.
    """
    a, b, c, d = ph.m
    if c.contains(0) or d.contains(0):
        raise DivisorContainsZero("image axis has an endpoint at infinity")
    z0 = b / d
    T = _some_sqrt(z0 * (a / c))
    if T.contains(0):
        raise OrientationUndecided("image axis passes through the vertical axis")
    side = (z0 * T.conjugate()).real
    if side < 0:
        return -T
    if side > 0:
        return T
    raise OrientationUndecided("side of the perpendicular foot is not decided")


def side_determinants(ph: Isometry) -> Enclosure:
    """Product of the two 2x2 determinants of the classical side test, for comparison."""
    a, b, c, d = ph.m
    z0, z1 = b / d, a / c
    T = _forward_endpoint(ph)
    dz = z1 - z0
    first = z0.real * dz.imag - z0.imag * dz.real
    second = T.real * dz.imag - T.imag * dz.real
    return Enclosure(first * second)


def basing_of_endpoint(ph: Isometry, side: str, length: ComplexLength, T: acb | None = None) -> Basing:
    """Basing of the ortholine from ``B(0, inf)`` to ``ph(B(0, inf))``.

    ``side='source'`` gives ``Log T`` on the first geodesic; ``side='target'``
    gives ``Log(ph^-1(T)) + pi i`` on the second, both reduced modulo
    ``length`` (the complex length of the geodesic carrying the endpoint).
    ``T`` overrides the perpendicular endpoint (used when the axes cross).
    """
    if T is None:
        T = _forward_endpoint(ph)
    if side == "source":
        raw = _log(T)
    elif side == "target":
        a, b, c, d = ph.m
        den = a - c * T
        if den.contains(0):
            raise DivisorContainsZero("pull-back of the endpoint is at infinity")
        raw = _log((d * T - b) / den) + acb(0, arb.pi())
    else:
        raise ValueError("side must be 'source' or 'target'")
    return Basing(reduce_to_torus(ComplexEnclosure(raw), length))


# ---------------------------------------------------------------------------
# ortholines


@dataclass
class Ortholine:
    length: ComplexEnclosure
    source_basing: Basing
    target_basing: Basing
    source_id: int
    target_id: int
    conjugator: str = ""
    warnings: tuple = ()

    def key(self) -> tuple:
        """Float sort key: length, then the two basings."""
        L, s, t = complex(self.length), complex(self.source_basing), complex(self.target_basing)
        return (round(L.real, 9), round(L.imag, 9), round(s.real, 9), round(s.imag, 9),
                round(t.real, 9), round(t.imag, 9))


def ortho_conjugator_bound(lam_f, lam_g, delta, r) -> Enclosure:
    """``(lam_f + lam_g)/2 + delta + r``, the displacement every needed conjugator satisfies.

    ``r`` bounds the sum of the distances from the basepoint to the two axes.
    """
    vals = [x.ball if isinstance(x, Enclosure) else _arb(x) for x in (lam_f, lam_g, delta, r)]
    if any(v < 0 for v in vals):
        raise ValueError("inputs must be non-negative")
    lf, lg, dl, rr = vals
    return Enclosure((lf + lg) / 2 + dl + rr)


_SEARCHES: dict = {}


def _cached_search(D: DirichletDomain, bound: Enclosure):
    """Reuse the largest search made so far on ``D`` (one domain kept)."""
    hit = _SEARCHES.get(id(D))
    if hit is not None and hit[0] is D and bound.ball <= hit[1].ball:
        return hit[2]
    # round up to a grid so nearby requests share one search
    bound = Enclosure(arb(math.ceil(float(bound.ball.upper()) * 8 + 1e-9) / 8))
    s = search(D, bound)
    _SEARCHES.clear()
    _SEARCHES[id(D)] = (D, bound, s)
    return s


def centred_class(cls: GeodesicClass, D: DirichletDomain) -> GeodesicClass:
    """The same class with its representative conjugated so its axis passes near the basepoint.

    Every point of the axis lies within the outradius of some translate ``cO``,
    so conjugators within ``r + lam/2 + outradius`` include one that brings the
    axis within the outradius.  Only the search radius of the ortholine
    computation depends on the choice.
    """
    g = cls.rep
    lam = float(cls.length.re)
    theta = float(cls.length.im)
    r0 = float(cls.axis_distance)
    bound = Enclosure(arb(r0 + lam / 2)) + D.outradius()
    s = _cached_search(D, bound)
    idx = _candidates(s, bound)
    m = g.to_numpy()
    mats = s.mats[idx]
    conj = np.linalg.inv(mats) @ m[None] @ mats
    cd = np.sum(abs(conj) ** 2, axis=(1, 2)) / 2
    ratio = (cd - math.cos(theta)) / (math.cosh(lam) - math.cos(theta))
    cur = (np.sum(abs(m) ** 2) / 2 - math.cos(theta)) / (math.cosh(lam) - math.cos(theta))
    if len(idx) == 0:
        return cls
    k = int(np.argmin(ratio))
    if not ratio[k] < cur * (1 - 1e-9):
        return cls
    c = s.element(int(idx[k]))
    rep = (c.inverse() @ g @ c)
    return replace(cls, rep=rep, axis_distance=axis_basepoint_distance(rep))


def _preserves_vertical(ph: Isometry) -> bool:
    a, b, c, d = ph.m
    return (b.contains(0) and c.contains(0)) or (a.contains(0) and d.contains(0))


def _matches(x: Ortholine, y: Ortholine, Lf: ComplexLength, Lg: ComplexLength) -> bool:
    if not x.length.overlaps(y.length):
        return False
    if x.source_basing.same(y.source_basing, Lf) and x.target_basing.same(y.target_basing, Lg):
        return True
    if "intersecting" in x.warnings or "intersecting" in y.warnings:
        flip = ComplexEnclosure(0, pi())
        return (Basing(x.source_basing.position + flip).same(y.source_basing, Lf)
                and Basing(x.target_basing.position + flip).same(y.target_basing, Lg))
    return False


# An ortholine is determined by its source foot point and direction, i.e. by
# its source basing.  Overlapping basings name the same ortholine unless the
# enclosures are too wide to separate neighbours; flag merges above this width.
_MERGE_WIDTH = 1e-8


def _tight(x: Ortholine, y: Ortholine) -> bool:
    return all(float(e.rad()) < _MERGE_WIDTH for o in (x, y)
               for e in (o.length.ball.real, o.length.ball.imag,
                         o.source_basing.position.ball.real, o.source_basing.position.ball.imag))


def orthospectrum(f_class: GeodesicClass, g_class: GeodesicClass, D: DirichletDomain, delta,
                  elements=None) -> list:
    """All ortholines of real length ``<= delta`` from ``f_class`` to ``g_class``.

    Each ortholine of the manifold appears once.  For a geodesic to itself the
    two orientations of one segment count once, listed in the orientation whose
    source basing has the smaller real part.  ``elements`` may supply the
    conjugators directly (used by tests); by default every element within
    the conjugator bound is searched.
    """
    delta_q = exact_rational(delta)
    if delta_q <= 0:
        raise ValueError("delta must be positive")
    if elements is None:
        f_class = centred_class(f_class, D)
        g_class = f_class if g_class.label == f_class.label else centred_class(g_class, D)
    f, g = f_class.rep, g_class.rep
    Lf, Lg = f_class.length, g_class.length
    qf = normalizer_to_axis(f)
    qg = normalizer_to_axis(g)
    qfi = qf.inverse()
    self_case = f_class is g_class or (f_class.label == g_class.label and f.overlaps(g))

    if elements is None:
        r = f_class.axis_distance + g_class.axis_distance
        bound = ortho_conjugator_bound(Lf.re, Lg.re, delta_q, r)
        s = _cached_search(D, bound)
        idx = np.concatenate([[0], _candidates(s, bound)])
        idx = _prefilter(s.mats[idx], s.errs[idx], qfi, qg, float(delta_q), idx)
        elements = [s.element(int(i)) for i in idx]

    cut = _arb(delta_q)
    found: list[Ortholine] = []
    notes: list[str] = []
    for h in elements:
        ph = qfi @ h @ qg
        otr = ortho_trace(ph).ball
        if otr.overlaps(acb(1)) or otr.overlaps(acb(-1)):
            if not _preserves_vertical(ph):
                notes.append(f"{h.word or '1'}: axes meet or are too close to separate; skipped")
            continue
        L = _arccosh(otr)
        v = cmp(Enclosure(L.real), Enclosure(cut))
        if v is Trichotomy.ABOVE:
            continue
        flags = ("length-undecided",) if v is Trichotomy.OVERLAP else ()
        try:
            T = _forward_endpoint(ph)
        except OrientationUndecided:
            # crossing axes: both perpendicular directions are valid
            if not L.real.contains(0):
                raise
            T = _perpendicular_endpoint(ph)
            flags += ("intersecting",)
        src = basing_of_endpoint(ph, "source", Lf, T)
        tgt = basing_of_endpoint(ph, "target", Lg, T)
        found.append(Ortholine(ComplexEnclosure(L), src, tgt, f_class.label, g_class.label,
                               h.word, flags))

    found.sort(key=lambda o: (o.key(), len(o.conjugator), o.conjugator))
    out: list[Ortholine] = []
    undecided = 0
    for o in found:
        dup = False
        for p in out:
            if _matches(o, p, Lf, Lg) or (self_case and _matches(_swapped(o), p, Lf, Lg)):
                if not _tight(o, p):
                    undecided += 1
                dup = True
                break
        if not dup:
            out.append(o)
    if self_case:
        out = [_canonical(o, Lf) for o in out]
    if undecided:
        warnings.warn(f"{undecided} ortholine pairs merged on wide overlapping enclosures", UndecidableDedup)
    for n in notes:
        warnings.warn(n, UndecidableDedup)
    out.sort(key=lambda o: (o.key(), o.conjugator))
    return out


def _swapped(o: Ortholine) -> Ortholine:
    return Ortholine(o.length, o.target_basing, o.source_basing, o.target_id, o.source_id,
                     o.conjugator, o.warnings)


def _canonical(o: Ortholine, L: ComplexLength) -> Ortholine:
    s, t = complex(o.source_basing), complex(o.target_basing)
    if (round(t.real, 9), round(t.imag, 9)) < (round(s.real, 9), round(s.imag, 9)):
        return _swapped(o)
    return o


def _prefilter(mats, errs, qfi: Isometry, qg: Isometry, delta: float, idx):
    """Drop elements whose ortho-trace certainly exceeds ``cosh(delta)`` in modulus.

    ``|cosh(x + iy)| >= sinh(x)``, so real length ``<= delta`` forces
    ``|otr| <= cosh(delta)``.
    """
    A, B = qfi.to_numpy(), qg.to_numpy()
    ph = A[None] @ mats @ B[None]
    otr = ph[:, 0, 0] * ph[:, 1, 1] + ph[:, 0, 1] * ph[:, 1, 0]
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    nm = np.sqrt(np.sum(abs(mats) ** 2, axis=(1, 2)))
    e = na * nb * (errs + 1e-15 * nm) + 1e-15 * na * nb * nm
    nph = np.sqrt(np.sum(abs(ph) ** 2, axis=(1, 2)))
    err = 2 * (2 * nph * e + e * e) + 1e-12 * abs(otr)
    keep = abs(otr) - err <= math.cosh(delta) * (1 + 1e-12)
    return idx[keep]


# ---------------------------------------------------------------------------
# tube radii


def shortest_self_ortholines(g_class: GeodesicClass, D: DirichletDomain, start=None,
                             max_delta=16) -> list:
    """Self-ortholines of the smallest real length, doubling the cutoff until one appears."""
    delta = exact_rational(start) if start is not None else Fraction(10986123, 10000000)  # ~log 3
    while True:
        lines = orthospectrum(g_class, g_class, D, delta)
        if lines:
            lo = min(lines, key=lambda o: float(o.length.re))
            return [o for o in lines if o.length.re.overlaps(lo.length.re)]
        if delta >= max_delta:
            raise RigorError(f"no self-ortholine below {float(delta)}")
        delta *= 2


def tube_radius(g_class: GeodesicClass, D: DirichletDomain) -> Enclosure:
    """Half the real length of a shortest self-ortholine."""
    lines = shortest_self_ortholines(g_class, D)
    re = lines[0].length.re.ball
    for o in lines[1:]:
        re = re.union(o.length.re.ball)
    return Enclosure(re / 2)


def ortholine_split(D: DirichletDomain):
    """A ``split`` hook for the length spectrum: classes are told apart by tube radius."""
    cache: dict = {}

    def split(cls: GeodesicClass) -> Enclosure:
        key = id(cls)
        if key not in cache:
            cache[key] = tube_radius(cls, D)
        return cache[key]

    return split
