"""Length spectra: closed geodesics of bounded length, one per conjugacy class."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from flint import acb, arb, ctx
from scipy.spatial import cKDTree

from .dirichlet import DirichletDomain
from .isometry import (INFINITY, ComplexLength, Isometry, ParabolicOrElliptic, axis_basepoint_distance,
                       complex_length, fixed_points, reduce_word)
from .kernel import enumerate_ball, orbit_coords
from .rigor import (DivisorContainsZero, Enclosure, RigorError, Trichotomy, cmp, exact_rational,
                    working_precision)


class UndecidableFrontier(UserWarning):
    """A displacement or length straddles its bound; the element was kept."""


def _arb(q) -> arb:
    q = exact_rational(q)
    return arb(q.numerator) / q.denominator


def tiling_bound(r: Enclosure, lam) -> Enclosure:
    """``2 arccosh(cosh r cosh(lam/2))``: translates needed to see every geodesic of length ``<= lam``."""
    lam = _arb(lam)
    if lam <= 0:
        raise ValueError("cutoff must be positive")
    r = r.ball if isinstance(r, Enclosure) else _arb(r)
    v = 2 * (r.cosh() * (lam / 2).cosh()).acosh()
    return Enclosure(v)


# ---------------------------------------------------------------------------
# element search


@dataclass
class ElementSearch:
    """Group elements reached from the face pairings, with lazy certified evaluation."""

    pairings: list
    mats: np.ndarray
    errs: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def path(self, idx: int) -> tuple:
        out = []
        while idx > 0:
            out.append(int(self.letter[idx]))
            idx = int(self.parent[idx])
        return tuple(reversed(out))

    def word(self, idx: int) -> str:
        return reduce_word("".join(self.pairings[k].word for k in self.path(idx)))

    def element(self, idx: int) -> Isometry:
        chain = []
        i = idx
        while i > 0 and i not in self._cache:
            chain.append(i)
            i = int(self.parent[i])
        g = self._cache[i] if i > 0 else Isometry.identity()
        for j in reversed(chain):
            g = g @ self.pairings[int(self.letter[j])]
            g = g.with_word(reduce_word(g.word))
            self._cache[j] = g
        return g


def search(D: DirichletDomain, bound: Enclosure, slack=None) -> ElementSearch:
    """Every element whose translate of the domain meets the ball of radius ``bound``.

    A segment from the centre to ``gO`` only crosses tiles whose centres lie
    within ``bound + outradius``; consecutive tiles share a face, so a tree
    search over face pairings pruned at that radius reaches all of them.
    """
    pairings = D.pairings
    slack = D.outradius() if slack is None else slack
    radius = float((bound.ball + slack.ball).upper())
    mats = np.array([g.to_numpy() for g in pairings])
    gerr = np.array([g.max_radius() * 4 + 4e-16 * np.linalg.norm(m) for g, m in zip(pairings, mats)])
    cosh_min = float(D.min_displacement().ball.lower().cosh())
    sep = math.sqrt(max(2 * (cosh_min - 1), 0.0))
    found = enumerate_ball(mats, gerr, math.cosh(radius) * (1 + 1e-12), sep)
    return ElementSearch(pairings, *found)


def _x0_bounds(s: ElementSearch) -> tuple[np.ndarray, np.ndarray]:
    norm = np.sqrt(np.sum(abs(s.mats) ** 2, axis=(1, 2)))
    from ._pykernel import coord_error

    return norm * norm / 2, coord_error(norm, s.errs)


def _candidates(s: ElementSearch, bound: Enclosure) -> np.ndarray:
    """Indices whose displacement is not certifiably above ``bound`` in float."""
    x0, err = _x0_bounds(s)
    cb = float(bound.ball.upper().cosh()) * (1 + 1e-12)
    idx = np.nonzero(x0 - err <= cb)[0]
    return idx[idx > 0]


def big_list(D: DirichletDomain, bound: Enclosure) -> list:
    """Elements ``g != 1`` with ``d(O, gO) <= bound``; straddling ones are kept with a warning."""
    s = search(D, bound)
    return [s.element(i) for i in _within(s, bound)]


def _within(s: ElementSearch, bound: Enclosure) -> list[int]:
    cb = bound.ball.cosh()
    out = []
    undecided = 0
    for i in _candidates(s, bound).tolist():
        c = s.element(i).cosh_displacement().ball
        if c > cb:
            continue
        if not c <= cb:
            undecided += 1
        out.append(i)
    if undecided:
        warnings.warn(f"{undecided} elements straddle the search radius; kept", UndecidableFrontier)
    return out


# ---------------------------------------------------------------------------
# filtering


_LENGTH_UNDECIDED = "length-undecided"
_AXIS_UNDECIDED = "axis-undecided"


def _classify(g: Isometry, lam: arb, spine: arb) -> tuple[bool, tuple]:
    """Keep/drop decision for one element plus warning flags for kept ones."""
    try:
        ell = complex_length(g)
    except (ParabolicOrElliptic, DivisorContainsZero, RigorError):
        return False, ()
    flags = []
    v = cmp(ell.re, lam)
    if v is Trichotomy.ABOVE:
        return False, ()
    if v is Trichotomy.OVERLAP:
        flags.append(_LENGTH_UNDECIDED)
    try:
        dist = axis_basepoint_distance(g)
    except RigorError:
        return True, tuple(flags + [_AXIS_UNDECIDED])
    if dist.ball > spine:
        return False, ()
    if not dist.ball <= spine:
        flags.append(_AXIS_UNDECIDED)
    return True, tuple(flags)


def _trace_prefilter(s: ElementSearch, idx: np.ndarray, lam: float) -> np.ndarray:
    # |tr-2| + |tr+2| = 4 cosh(Re(length)/2); float error in tr is at most sqrt(2) * err
    m = s.mats[idx]
    tr = m[:, 0, 0] + m[:, 1, 1]
    focal = abs(tr - 2) + abs(tr + 2) - 2 * math.sqrt(2) * s.errs[idx] - 1e-12 * abs(tr)
    return idx[focal <= 4 * math.cosh(lam / 2)]


def filter_geodesics(big, D: DirichletDomain, lam, workers: int = 1) -> list:
    """Loxodromic elements with ``Re(length) <= lam`` whose axis meets the spine ball."""
    lam_b = _arb(lam)
    spine = D.spine_radius.ball
    out = []
    for g in big:
        keep, _ = _classify(g, lam_b, spine)
        if keep:
            out.append(g)
    return out


def _pack(g: Isometry) -> tuple:
    def one(x: arb):
        m, e = x.mid().man_exp()
        r, f = x.rad().man_exp()
        return int(m), int(e), int(r), int(f)

    return tuple((one(z.real), one(z.imag)) for z in g.m), g.word


def _unpack(p) -> Isometry:
    def one(t):
        m, e, r, f = t
        mid = arb(m) * arb(2) ** e
        return mid + arb(0, arb(r) * arb(2) ** f) if r else mid

    entries, word = p
    return Isometry(*(acb(one(re), one(im)) for re, im in entries), word=word)


_WORKER: dict = {}


def _worker_init(packed, lam_q, spine_p, bits):
    ctx.prec = bits
    _WORKER["pairings"] = [_unpack(p) for p in packed]
    _WORKER["lam"] = _arb(lam_q)
    m, e, r, f = spine_p
    _WORKER["spine"] = arb(m) * arb(2) ** e + arb(0, arb(r) * arb(2) ** f)


def _worker_run(paths):
    gens = _WORKER["pairings"]
    out = []
    for p in paths:
        g = Isometry.identity()
        for k in p:
            g = g @ gens[k]
        out.append(_classify(g, _WORKER["lam"], _WORKER["spine"]))
    return out


def _geodesic_indices(s: ElementSearch, cand: list[int], lam, spine, workers: int) -> list[tuple[int, tuple]]:
    lam_b = _arb(lam)
    if workers <= 1 or len(cand) < 64:
        res = [_classify(s.element(i), lam_b, spine) for i in cand]
    else:
        m, e = spine.mid().man_exp()
        r, f = spine.rad().man_exp()
        init = ([_pack(g) for g in s.pairings], exact_rational(lam), (int(m), int(e), int(r), int(f)), ctx.prec)
        chunks = [cand[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers, initializer=_worker_init, initargs=init) as ex:
            parts = list(ex.map(_worker_run, [[s.path(i) for i in c] for c in chunks]))
        decided = {}
        for c, p in zip(chunks, parts):
            decided.update(zip(c, p))
        res = [decided[i] for i in cand]
    return [(i, flags) for i, (keep, flags) in zip(cand, res) if keep]


# ---------------------------------------------------------------------------
# powers and conjugacy


def _axes_overlap(g: Isometry, h: Isometry) -> bool:
    try:
        a = fixed_points(g)
        b = fixed_points(h)
    except RigorError:
        return False

    def same(p, q):
        if p is INFINITY or q is INFINITY:
            return p is q
        return p.overlaps(q)

    return (same(a[0], b[0]) and same(a[1], b[1])) or (same(a[0], b[1]) and same(a[1], b[0]))


def power_test(g: Isometry, h: Isometry) -> bool:
    """Whether ``g`` is ``h^k`` up to inversion for some ``k >= 2`` (by length and axis)."""
    lg, lh = complex_length(g), complex_length(h)
    ratio = lg.re.ball / lh.re.ball
    k_lo = int(math.floor(float(ratio.lower())))
    k_hi = int(math.ceil(float(ratio.upper())))
    two_pi = 2 * arb.pi()
    for k in range(max(k_lo, 2), k_hi + 1):
        if not (lh.re.ball * k).overlaps(lg.re.ball):
            continue
        for sign in (1, -1):
            d = (lg.im.ball - sign * k * lh.im.ball) / two_pi
            n = round(float(d.mid()))
            if (d - n).contains(0) and _axes_overlap(g, h):
                return True
    return False


def _sphere(z) -> np.ndarray:
    if z is INFINITY:
        return np.array([0.0, 0.0, 1.0])
    w = complex(z)
    r2 = abs(w) ** 2
    return np.array([2 * w.real, 2 * w.imag, r2 - 1]) / (r2 + 1)


def _float_axis(m: np.ndarray) -> np.ndarray:
    """Unordered endpoints of the axis as a 6-vector of sphere points (float)."""
    a, b, c, d = m.ravel()
    tr = a + d
    disc = np.sqrt(tr * tr - 4)
    pts = []
    for sgn in (1, -1):
        e = (tr + sgn * disc) / 2
        if abs(c) > 1e-300:
            pts.append(_sphere((e - d) / c))
        else:
            pts.append(_sphere(INFINITY) if abs(e - a) < abs(e - d) else _sphere(b / (e - a) if abs(e - a) > 0 else 0))
    pts.sort(key=lambda p: tuple(np.round(p, 9)))
    return np.concatenate(pts)


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j) -> bool:
        a, b = self.find(i), self.find(j)
        if a == b:
            return False
        self.p[max(a, b)] = min(a, b)
        return True


@dataclass
class GeodesicClass:
    rep: Isometry
    length: ComplexLength
    axis_endpoints: tuple | None
    axis_distance: Enclosure
    label: int = -1
    warnings: tuple = ()
    members: int = 1


@dataclass
class SpectrumTable:
    cutoff: Fraction
    classes: list
    groups: list  # lists of indices into classes
    warnings: list = field(default_factory=list)

    @property
    def multiplicities(self) -> list[int]:
        return [len(g) for g in self.groups]

    def group_length(self, k: int) -> ComplexLength:
        return self.classes[self.groups[k][0]].length

    def rows(self) -> list[tuple]:
        out = []
        for k, grp in enumerate(self.groups):
            L = self.classes[grp[0]].length
            flags = sorted({w for i in grp for w in self.classes[i].warnings})
            out.append((k, L.re, L.im, len(grp), ",".join(flags)))
        return out


def _key(g: Isometry):
    return (len(g.word), g.word)


def small_list(filtered, D: DirichletDomain, lam, conjugators=None, flags=None,
               split=None) -> SpectrumTable:
    """One representative per conjugacy class (up to inversion and powers), grouped by length.

    ``conjugators`` defaults to all elements within ``2 arccosh(cosh r cosh(lam/4))``
    (plus the identity); ``split`` optionally refines the length groups by a
    further class invariant (a callable returning an ``Enclosure``).
    """
    lam_q = exact_rational(lam)
    items = sorted(set(range(len(filtered))), key=lambda i: _key(filtered[i]))
    elems = [filtered[i] for i in items]
    flg = [tuple(flags[i]) if flags else () for i in items]
    n = len(elems)
    if n == 0:
        return SpectrumTable(lam_q, [], [])
    fl = np.array([g.to_numpy() for g in elems])
    lengths = [complex_length(g) for g in elems]

    # powers: elements sharing an axis form a cyclic group; keep its shortest members
    axes = np.array([_float_axis(m) for m in fl])
    uf_axis = _UF(n)
    for i, j in sorted(cKDTree(axes).query_pairs(1e-7)):
        uf_axis.union(i, j)
    by_axis: dict[int, list[int]] = {}
    for i in range(n):
        by_axis.setdefault(uf_axis.find(i), []).append(i)
    primitive = []
    notes: list[str] = []
    for grp in by_axis.values():
        m = min(float(lengths[i].re) for i in grp)
        base = [i for i in grp if float(lengths[i].re) < m * (1 + 1e-9) + 1e-12]
        for i in grp:
            if i in base:
                primitive.append(i)
            elif not any(power_test(elems[i], elems[b]) for b in base):
                primitive.append(i)
                notes.append(f"{elems[i].word}: power relation not certified; kept")
    primitive.sort()
    P = [elems[i] for i in primitive]
    pm = fl[primitive]
    pts = orbit_coords(pm)
    tree = cKDTree(pts)
    scale = 1e-8 * (1 + np.sum(abs(pm) ** 2, axis=(1, 2)).max())

    def lookup(m):
        d, j = tree.query(orbit_coords(m), distance_upper_bound=scale)
        return None if not np.isfinite(d) else int(j)

    uf = _UF(len(P))

    def merge(i, j, conj: Isometry | None):
        if uf.find(i) == uf.find(j):
            return
        g = P[i] if conj is None else (conj @ P[i] @ conj.inverse())
        h = P[j]
        # certify the match before merging: c g c^-1 equals h or h^-1 up to sign
        if g.overlaps(h) or g.overlaps(h.inverse()):
            uf.union(i, j)

    for i, m in enumerate(pm):
        j = lookup(np.linalg.inv(m))
        if j is not None:
            merge(i, j, Isometry.identity())
    if conjugators is None:
        conjugators = big_list(D, tiling_bound(D.spine_radius, Fraction(lam_q) / 2))
    cm = [c.to_numpy() for c in conjugators]
    for c, cn in zip(conjugators, cm):
        ci = np.linalg.inv(cn)
        conj_all = cn[None] @ pm @ ci[None]
        for i in range(len(P)):
            j = lookup(conj_all[i])
            if j is None:
                j = lookup(np.linalg.inv(conj_all[i]))
            if j is not None and j != i:
                merge(i, j, c)

    roots: dict[int, list[int]] = {}
    for i in range(len(P)):
        roots.setdefault(uf.find(i), []).append(i)
    classes = []
    for members in roots.values():
        rep_i = min(members, key=lambda i: _key(P[i]))
        rep = P[rep_i]
        try:
            ends = fixed_points(rep)
        except RigorError:
            ends = None
        w = sorted({f for i in members for f in flg[primitive[i]]})
        classes.append(GeodesicClass(rep, lengths[primitive[rep_i]], ends, axis_basepoint_distance(rep),
                                     warnings=tuple(w), members=len(members)))
    classes.sort(key=lambda c: (round(float(c.length.re), 8), round(float(c.length.im), 8), _key(c.rep)))
    for k, c in enumerate(classes):
        c.label = k
    groups = _group(classes, split)
    return SpectrumTable(lam_q, classes, groups, notes)


def _group(classes, split=None) -> list[list[int]]:
    groups: list[list[int]] = []
    for k, c in enumerate(classes):
        for g in groups:
            if classes[g[0]].length.value.overlaps(c.length.value):
                g.append(k)
                break
        else:
            groups.append([k])
    if split is not None:
        refined = []
        for g in groups:
            if len(g) == 1:
                refined.append(g)
                continue
            vals = {k: split(classes[k]) for k in g}
            sub: list[list[int]] = []
            for k in g:
                for s in sub:
                    if vals[s[0]].overlaps(vals[k]):
                        s.append(k)
                        break
                else:
                    sub.append([k])
            sub.sort(key=lambda s: float(vals[s[0]]))
            refined += sub
        groups = refined
    groups.sort(key=lambda g: (round(float(classes[g[0]].length.re), 8),
                               round(float(classes[g[0]].length.im), 8), g[0]))
    return groups


# ---------------------------------------------------------------------------
# driver


def length_spectrum(D: DirichletDomain, lam, workers: int = 1, split=None,
                    bits: int | None = None) -> SpectrumTable:
    """Certified length spectrum up to real length ``lam``."""
    with working_precision(bits or ctx.prec):
        lam_q = exact_rational(lam)
        bound = tiling_bound(D.spine_radius, lam_q)
        s = search(D, bound)
        cand = _within(s, bound)
        cand = _trace_prefilter(s, np.array(cand, dtype=np.int64), float(lam_q)).tolist()
        kept = _geodesic_indices(s, cand, lam_q, D.spine_radius.ball, workers)
        filtered = [s.element(i) for i, _ in kept]
        flags = [f for _, f in kept]
        cbound = tiling_bound(D.spine_radius, lam_q / 2)
        conj = [s.element(i) for i in _within(s, cbound)]
        return small_list(filtered, D, lam_q, conjugators=conj, flags=flags, split=split)
