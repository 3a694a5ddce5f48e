"""Dirichlet domains centred at ``O = (0,0,1)`` in the projective (Klein) ball.

A group element ``g`` contributes the half-space ``{r : n.r <= t}`` where
``n`` is the Klein point of ``gO`` and ``t = 1 - sqrt(1 - |n|^2)``.  Vertices
are certified intersections of three face planes; vertices whose
enclosures overlap are merged, so symmetric domains with four or more
planes through a vertex come out with their true combinatorics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from flint import arb
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial import ConvexHull, QhullError

from .isometry import Isometry, UhpPoint, evaluate_word, invert_word, reduce_word
from .kernel import KernelPrecisionError, enumerate_ball, orbit_coords
from .rigor import DomainViolation, Enclosure, RigorError


class NotClosed(RigorError):
    """Some face has no partner face: the pairing list is incomplete."""


class DegenerateVertex(RigorError):
    """Merged vertex enclosures are inconsistent with a convex polyhedron."""


class BasepointFixed(RigorError):
    pass


class CapExceeded(RigorError):
    pass


class NoEdges(RigorError):
    pass


# ---------------------------------------------------------------------------
# points and planes


@dataclass(frozen=True)
class BallPoint:
    x: Enclosure
    y: Enclosure
    z: Enclosure

    def __post_init__(self):
        if not self.norm2().ball < 1:
            raise DomainViolation("point not certifiably inside the unit ball")

    def norm2(self) -> Enclosure:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def balls(self) -> tuple:
        return (self.x.ball, self.y.ball, self.z.ball)

    def __array__(self, dtype=None, copy=None):
        return np.array([float(self.x), float(self.y), float(self.z)], dtype=dtype)


def ball_from_uhp(p: UhpPoint) -> BallPoint:
    """Klein coordinates via the hyperboloid; ``(0,0,1)`` goes to the centre."""
    h = p.z.ball
    zeta = p.zeta
    s = zeta.real * zeta.real + zeta.imag * zeta.imag + h * h
    x0 = (s + 1) / (2 * h)
    x3 = (s - 1) / (2 * h)
    return BallPoint(Enclosure(zeta.real / h / x0), Enclosure(zeta.imag / h / x0), Enclosure(x3 / x0))


def uhp_from_ball(q: BallPoint) -> UhpPoint:
    r2 = q.norm2().ball
    if not r2 < 1:
        raise DomainViolation("point outside the ball")
    x0 = 1 / (1 - r2).sqrt()
    x1, x2, x3 = (c * x0 for c in q.balls())
    h = 1 / (x0 - x3)
    return UhpPoint(Enclosure(x1 * h), Enclosure(x2 * h), Enclosure(h))


def klein_point(g: Isometry) -> tuple:
    """Klein coordinates of ``gO`` and ``cosh d(O, gO)`` as arb balls."""
    a, b, c, d = g.m
    p = a * c.conjugate() + b * d.conjugate()
    aa = a.real * a.real + a.imag * a.imag
    bb = b.real * b.real + b.imag * b.imag
    cc = c.real * c.real + c.imag * c.imag
    dd = d.real * d.real + d.imag * d.imag
    x0 = (aa + bb + cc + dd) / 2
    x3 = (aa + bb - cc - dd) / 2
    return (p.real / x0, p.imag / x0, x3 / x0), x0


@dataclass(frozen=True)
class HalfSpace:
    """``{r : n.r <= t}``; the face plane is the bisector of ``O`` and ``pairing(O)``."""

    n: BallPoint
    t: Enclosure
    pairing: Isometry

    def plane(self) -> tuple:
        return self.n.balls() + (self.t.ball,)

    def overlaps(self, other: "HalfSpace") -> bool:
        return all(u.overlaps(v) for u, v in zip(self.plane(), other.plane()))


def bisector(g: Isometry) -> HalfSpace:
    n, x0 = klein_point(g)
    if x0.contains(1):
        raise BasepointFixed("element may fix the basepoint")
    t = 1 - 1 / x0  # equals 1 - sqrt(1 - |n|^2)
    return HalfSpace(BallPoint(*(Enclosure(c) for c in n)), Enclosure(t), g)


# ---------------------------------------------------------------------------
# polyhedron


@dataclass(frozen=True)
class DirichletDomain:
    basepoint: UhpPoint
    faces: list
    vertices: list
    edges: list  # ((i, j), (face_a, face_b))
    spine_radius: Enclosure
    face_vertices: list = field(default_factory=list)  # cyclic vertex order per face
    vertex_faces: list = field(default_factory=list)

    @property
    def pairings(self) -> list:
        return [f.pairing for f in self.faces]

    def outradius(self) -> Enclosure:
        """Largest hyperbolic distance from the centre to a vertex."""
        best = None
        for v in self.vertices:
            r = v.norm2().ball.sqrt().atanh()
            best = r if best is None else best.max(r)
        return Enclosure(best)

    def min_displacement(self) -> Enclosure:
        best = None
        for f in self.faces:
            c = f.pairing.cosh_displacement().ball
            best = c if best is None else best.min(c)
        return Enclosure(best).arccosh(clamp=True)

    def mesh(self, decimals: int = 6) -> str:
        lines = []
        for v in self.vertices:
            lines.append("v " + " ".join(f"{float(c):.{decimals}f}" for c in (v.x, v.y, v.z)))
        for cyc in self.face_vertices:
            lines.append("f " + " ".join(str(i + 1) for i in cyc))
        return "\n".join(lines) + "\n"


def _float_planes(halfspaces) -> tuple[np.ndarray, np.ndarray]:
    N = np.array([[float(c.mid()) for c in h.n.balls()] for h in halfspaces])
    T = np.array([float(h.t.mid) for h in halfspaces])
    return N, T


def _float_vertex_triples(N: np.ndarray, T: np.ndarray) -> list[tuple[int, int, int]]:
    """Triples of planes meeting at vertices, from the hull of the polar points ``n/t``."""
    P = N / T[:, None]
    try:
        hull = ConvexHull(P, qhull_options="Qt")
    except QhullError as exc:
        raise NotClosed(f"face planes do not bound a polyhedron ({exc.args[0].splitlines()[0]})")
    # the centre must be strictly inside the polar hull for the polyhedron to be bounded
    if not np.all(hull.equations[:, 3] < -1e-12):
        raise NotClosed("polyhedron is unbounded")
    return [tuple(sorted(s)) for s in hull.simplices.tolist()]


def _solve3(rows, rhs):
    """Cramer's rule over arb; returns None when the determinant may vanish."""
    (a, b, c), (d, e, f), (g, h, i) = rows
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if det.contains(0):
        return None
    r0, r1, r2 = rhs
    x = (r0 * (e * i - f * h) - b * (r1 * i - f * r2) + c * (r1 * h - e * r2)) / det
    y = (a * (r1 * i - f * r2) - r0 * (d * i - f * g) + c * (d * r2 - r1 * g)) / det
    z = (a * (e * r2 - r1 * h) - b * (d * r2 - r1 * g) + r0 * (d * h - e * g)) / det
    return (x, y, z)


def _dot(n, v):
    return n[0] * v[0] + n[1] * v[1] + n[2] * v[2]


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        a, b = self.find(i), self.find(j)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _sort_key(g: Isometry):
    return (round(float(g.cosh_displacement().mid), 9), len(g.word), g.word)


def build_domain(pairings, basepoint: UhpPoint | None = None) -> DirichletDomain:
    """Intersect the bisector half-spaces of ``pairings`` and certify the result."""
    from .isometry import ORIGIN

    basepoint = basepoint or ORIGIN
    pairings = sorted(pairings, key=_sort_key)
    halfspaces = []
    for g in pairings:
        h = bisector(g)
        if any(h.overlaps(o) for o in halfspaces):
            continue
        halfspaces.append(h)
    if len(halfspaces) < 4:
        raise NotClosed("fewer than four half-spaces cannot bound a polyhedron")
    N, T = _float_planes(halfspaces)
    triples = _float_vertex_triples(N, T)

    planes = [h.plane() for h in halfspaces]
    raw = []
    for tri in triples:
        v = _solve3([planes[i][:3] for i in tri], [planes[i][3] for i in tri])
        if v is None:
            continue
        raw.append(v)
    if not raw:
        raise NotClosed("no certified vertices")

    # merge overlapping vertex enclosures
    uf = _UnionFind(len(raw))
    order = sorted(range(len(raw)), key=lambda i: float(raw[i][0].mid()))
    for a_pos, i in enumerate(order):
        for j in order[a_pos + 1:]:
            if float(raw[j][0].lower()) > float(raw[i][0].upper()):
                break
            if all(raw[i][k].overlaps(raw[j][k]) for k in range(3)):
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(raw)):
        groups.setdefault(uf.find(i), []).append(i)
    merged = []
    for members in groups.values():
        v = raw[members[0]]
        for m in members[1:]:
            v = tuple(v[k].union(raw[m][k]) for k in range(3))
        merged.append(v)
    merged.sort(key=lambda v: tuple(round(float(c.mid()), 9) for c in v))

    # incidences and validity against every half-space
    incid: list[list[int]] = []
    for v in merged:
        on = []
        for fi, p in enumerate(planes):
            s = _dot(p, v) - p[3]
            if s > 0:
                raise NotClosed("a vertex violates a face inequality; planes missing from the hull stage")
            if s.contains(0):
                on.append(fi)
        if len(on) < 3:
            raise DegenerateVertex("merged vertex lies on fewer than three planes")
        incid.append(on)

    face_ids = sorted({fi for on in incid for fi in on},
                      key=lambda fi: _sort_key(halfspaces[fi].pairing))
    count = {fi: 0 for fi in face_ids}
    for on in incid:
        for fi in on:
            count[fi] += 1
    face_ids = [fi for fi in face_ids if count[fi] >= 3]
    remap = {fi: k for k, fi in enumerate(face_ids)}
    faces = [halfspaces[fi] for fi in face_ids]
    vertex_faces = [sorted(remap[fi] for fi in on if fi in remap) for on in incid]
    if any(len(vf) < 3 for vf in vertex_faces):
        raise DegenerateVertex("vertex on fewer than three faces")

    vertices = []
    for v in merged:
        try:
            vertices.append(BallPoint(*(Enclosure(c) for c in v)))
        except DomainViolation:
            raise NotClosed("a vertex is not inside the ball: the domain is not compact")

    edges = []
    for i, j in itertools.combinations(range(len(vertices)), 2):
        common = sorted(set(vertex_faces[i]) & set(vertex_faces[j]))
        if len(common) == 2:
            edges.append(((i, j), tuple(common)))
        elif len(common) > 2:
            raise DegenerateVertex("two vertices share more than two faces")

    _check_closure(faces)
    face_vertices = [_cycle(faces[k], [i for i, vf in enumerate(vertex_faces) if k in vf], vertices)
                     for k in range(len(faces))]
    radius = spine_radius_of(vertices, edges)
    return DirichletDomain(basepoint, faces, vertices, edges, radius, face_vertices, vertex_faces)


def _check_closure(faces):
    for f in faces:
        partner = bisector(f.pairing.inverse())
        if not any(partner.overlaps(o) for o in faces):
            raise NotClosed(f"face of {f.pairing.word or '?'} has no partner face")


def _cycle(face: HalfSpace, idx: list[int], vertices) -> list[int]:
    """Order a face's vertices counter-clockwise seen from outside (along +n)."""
    n = np.array(face.n, dtype=float)
    n /= np.linalg.norm(n)
    pts = np.array([np.array(vertices[i], dtype=float) for i in idx])
    c = pts.mean(axis=0)
    u = pts[0] - c
    u -= n * (u @ n)
    u /= np.linalg.norm(u)
    w = np.cross(n, u)
    ang = np.arctan2((pts - c) @ w, (pts - c) @ u)
    return [idx[k] for k in np.argsort(ang)]


# ---------------------------------------------------------------------------
# spine radius


def edge_distance(p, q) -> arb:
    """Hyperbolic distance from the centre to the Klein segment ``[p, q]``.

    Klein geodesics are straight and the perpendicular foot from the centre
    is the Euclidean foot, so the distance is ``atanh`` of the Euclidean one.
    """
    d = tuple(q[k] - p[k] for k in range(3))
    dd = _dot(d, d)
    pd = _dot(p, d)
    pp = _dot(p, p)
    qq = _dot(q, q)
    ends = pp.min(qq)
    if dd.contains(0):
        rho2 = ends
    else:
        tstar = -pd / dd
        foot = pp - pd * pd / dd
        if tstar > 0 and tstar < 1:
            rho2 = foot
        elif tstar < 0 or tstar > 1:
            rho2 = ends
        else:
            rho2 = foot.union(ends)
    rho2 = rho2.nonnegative_part() if rho2.lower() < 0 else rho2
    return rho2.sqrt().atanh()


def spine_radius_of(vertices, edges) -> Enclosure:
    if not edges:
        raise NoEdges("domain has no edges")
    best = None
    for (i, j), _ in edges:
        e = edge_distance(vertices[i].balls(), vertices[j].balls())
        best = e if best is None else best.max(e)
    return Enclosure(best)


def spine_radius(D: DirichletDomain) -> Enclosure:
    return spine_radius_of(D.vertices, D.edges)


# ---------------------------------------------------------------------------
# automatic face pairings



def _float_bisector(m: np.ndarray):
    x = orbit_coords(m)
    x0 = np.sum(abs(m) ** 2, axis=(-2, -1)) / 2
    return x / x0[..., None], 1 - 1 / x0


def _float_domain(mats: np.ndarray, tol: float = 1e-9, merge: float = 0.0):
    """Face indices and vertices of the float polyhedron, or None if it is unbounded.

    A plane counts as a face only when at least three polyhedron vertices lie on
    it; planes touching the polyhedron in an edge or vertex are dropped.
    Vertices closer than ``merge`` count once: rounded inputs split a vertex
    where four or more planes meet into a cluster spanning tiny faces.
    """
    N, T = _float_bisector(mats)
    try:
        hull = ConvexHull(N / T[:, None], qhull_options="Qt")
    except QhullError:
        return None
    if not np.all(hull.equations[:, 3] < -1e-12):
        return None
    # the polar facet a.x + off = 0 is the vertex -a/off
    verts = -hull.equations[:, :3] / hull.equations[:, 3:4]
    if np.any(np.sum(verts**2, axis=1) >= 1):
        return None
    on = np.abs(verts @ N.T - T[None, :]) < max(tol, merge)
    if merge > 0:
        labels = fcluster(linkage(verts, "single"), merge, criterion="distance") if len(verts) > 1 else [1]
        counts = np.array([len(set(np.asarray(labels)[on[:, k]])) for k in range(on.shape[1])])
    else:
        counts = on.sum(axis=0)
    faces = np.nonzero(counts >= 3)[0]
    return faces.tolist(), verts


class _Words:
    """Float matrices with words, deduplicated by orbit point."""

    def __init__(self, resolution: float = 1e-6):
        self.words: list[str] = []
        self.mats = np.zeros((0, 2, 2), dtype=complex)
        self.keys: dict[tuple, int] = {}
        self.resolution = resolution
        self.merge = 0.0

    def add(self, words: list[str], mats: np.ndarray) -> list[int]:
        """Insert elements, keeping the shorter word on collisions; returns pool indices.

        Elements moving the centre by less than the resolution allows are taken
        to be the identity (index -1): with rounded inputs, relators are only
        near-trivial.
        """
        mats = np.asarray(mats).reshape(-1, 2, 2)
        keys = np.round(orbit_coords(mats) / self.resolution)
        moving = np.sum(abs(mats) ** 2, axis=(1, 2)) / 2 > 1 + max(10 * self.resolution, 1e-9)
        out = []
        base = len(self.words)
        fresh: dict[int, int] = {}  # pool index -> row of mats
        for w, k, mv, i in zip(words, map(tuple, keys.tolist()), moving, range(len(words))):
            if not mv:
                out.append(-1)
                continue
            j = self.keys.get(k)
            if j is None:
                j = self.keys[k] = len(self.words)
                self.words.append(w)
                fresh[j] = i
            elif len(w) < len(self.words[j]):
                self.words[j] = w
                if j >= base:
                    fresh[j] = i
                else:
                    self.mats[j] = mats[i]
            out.append(j)
        if fresh:
            self.mats = np.concatenate([self.mats, mats[[fresh[j] for j in range(base, len(self.words))]]])
        return out


def _inverse_closed(mats: np.ndarray, tol: float) -> bool:
    P = orbit_coords(mats)
    Q = orbit_coords(np.linalg.inv(mats))
    d = np.linalg.norm(Q[:, None, :] - P[None, :, :], axis=2)
    return bool(np.all(d.min(axis=1) < tol))


def auto_pairings(generators, word_length_cap: int = 12, verify: bool = True,
                  max_rounds: int = 20) -> list:
    """Face pairings found from the generators alone.

    Words grow by length until their bisectors bound a compact polyhedron; the
    faces are then refined by taking products of face pairings until the face
    set is stable and closed under inverses, and the result is checked against
    every element within three outradii of the centre.
    """
    gens = list(generators)
    if not gens:
        raise CapExceeded("no generators: cap reached at word length 0")
    table = {g.word: g for g in gens}
    alphabet = []
    for name in sorted(table):
        alphabet += [name, name.upper()]
    fl = np.array([evaluate_word(ch, table).to_numpy() for ch in alphabet])

    # coarse inputs only satisfy their relators approximately
    spread = max(g.max_radius() for g in gens)
    pool = _Words(min(max(1e3 * spread, 1e-6), 1e-2))
    pool.merge = 10 * spread if spread > 1e-12 else 0.0
    fwords, fmats = [""], np.eye(2, dtype=complex)[None]
    res = None
    for length in range(1, word_length_cap + 1):
        prod = np.einsum("fij,kjl->fkil", fmats, fl).reshape(-1, 2, 2)
        words = [w + ch for w in fwords for ch in alphabet]
        keep = [k for k, w in enumerate(words) if len(w) < 2 or w[-2] != w[-1].swapcase()]
        before = len(pool.words)
        pool.add([words[k] for k in keep], prod[keep])
        fwords, fmats = pool.words[before:], pool.mats[before:]
        if len(pool.words) >= 4:
            res = _float_domain(pool.mats, merge=pool.merge)
            if res is not None:
                break
    if res is None:
        raise CapExceeded(f"no compact domain from words up to length {word_length_cap}")

    faces = res[0]
    for _ in range(max_rounds):
        faces = _refine(pool, faces)
        if not verify:
            break
        extra = _violators(pool.mats[faces], [pool.words[i] for i in faces], pool.resolution)
        if not extra:
            break
        idx = pool.add(extra, np.array([evaluate_word(w, table).to_numpy() for w in extra]))
        faces = sorted(set(faces) | {i for i in idx if i >= 0})
    else:
        raise CapExceeded("face refinement did not stabilise")
    chosen = [evaluate_word(pool.words[i], table) for i in faces]
    return sorted(chosen, key=_sort_key)


def _refine(pool: _Words, faces: list[int], max_rounds: int = 12, max_faces: int = 500) -> list[int]:
    """Close a face set under inverses and pairwise products until it is stable.

    Planes that are not faces stay non-faces when more planes are added, so
    each round only looks at the current faces and the new candidates.
    """
    for _ in range(max_rounds):
        inv = pool.add([invert_word(pool.words[i]) for i in faces], np.linalg.inv(pool.mats[faces]))
        cur = sorted(set(faces) | {i for i in inv if i >= 0})
        m = pool.mats[cur]
        prod = np.einsum("aij,bjl->abil", m, m).reshape(-1, 2, 2)
        words = [reduce_word(pool.words[i] + pool.words[j]) for i in cur for j in cur]
        idx = pool.add(words, prod)
        sub = sorted(set(cur) | {i for i in idx if i >= 0})
        new = _float_domain(pool.mats[sub], merge=pool.merge)
        if new is None:
            raise NotClosed("face refinement lost compactness")
        nf = sorted(sub[k] for k in new[0])
        if len(nf) > max_faces:
            raise CapExceeded(f"more than {max_faces} faces; inputs too coarse for a stable domain")
        if nf == sorted(faces) and _inverse_closed(pool.mats[nf], pool.resolution):
            return nf
        faces = nf
    raise CapExceeded("face refinement did not stabilise")


def _violators(mats: np.ndarray, words: list[str], tol: float) -> list[str]:
    """Words of elements within three outradii whose bisector cuts the polyhedron."""
    res = _float_domain(mats)
    if res is None:
        raise NotClosed("face pairings do not bound a compact polyhedron")
    _, verts = res
    rout = float(np.max(np.arctanh(np.linalg.norm(verts, axis=1))))
    x0 = np.sum(abs(mats) ** 2, axis=(1, 2)) / 2
    sep = math.sqrt(2 * (float(np.min(x0)) - 1))
    try:
        found, _, parent, letter = enumerate_ball(mats, np.full(len(mats), 1e-15),
                                                  math.cosh(3 * rout) * (1 + 1e-9), sep,
                                                  max_elements=2 * 10**6)
    except (MemoryError, KernelPrecisionError) as exc:
        raise CapExceeded(f"verification ball too large or too inexact ({exc})")
    N, T = _float_bisector(found[1:])
    viol = np.nonzero((verts @ N.T - T[None, :]).max(axis=0) > max(tol, 1e-9))[0] + 1
    out = []
    for idx in viol.tolist():
        path = []
        while idx > 0:
            path.append(int(letter[idx]))
            idx = int(parent[idx])
        out.append(reduce_word("".join(words[k] for k in reversed(path))))
    return out
