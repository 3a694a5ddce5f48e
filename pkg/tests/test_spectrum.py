"""Length spectra: search radius, element enumeration, filtering, conjugacy classes."""

import math
from fractions import Fraction

import numpy as np
import pytest
from flint import acb, arb
from hypothesis import given, settings
from hypothesis import strategies as st

from orthospec import kernel
from orthospec.isometry import Isometry, complex_length
from orthospec.kernel import orbit_coords
from orthospec.rigor import Enclosure
from orthospec.spectrum import (big_list, filter_geodesics, length_spectrum, power_test, search,
                                small_list, tiling_bound)



def diag(s: complex) -> Isometry:
    e = acb(s.real, s.imag) / 2
    return Isometry(e.exp(), 0, 0, (-e).exp())


def _rows(table):
    """Canonical comparable form of a spectrum table."""
    return [(L_re.ball.str(15), L_im.ball.str(15), mult, flags) for _, L_re, L_im, mult, flags in table.rows()]


# --- tiling bound ----------------------------------------------------------------


def test_tiling_bound_degenerates_to_cutoff():
    """[TRIVIAL] r = 0 gives the cutoff itself."""
    assert tiling_bound(Enclosure(0), 2).ball.overlaps(arb(2))


def test_tiling_bound_scalar_oracle():
    """[DERIVED]"""
    r = Enclosure(Fraction(1, 2), Fraction(1, 10**12))
    expected = 2 * math.acosh(math.cosh(0.5) * math.cosh(1.0))
    assert tiling_bound(r, 2).contains(Fraction(expected).limit_denominator(10**15))


@settings(max_examples=200, deadline=None)
@given(st.fractions(0, 3, max_denominator=1000), st.fractions(0, 3, max_denominator=1000),
       st.fractions(Fraction(1, 10), 8, max_denominator=1000))
def test_tiling_bound_monotone(r1, r2, lam):
    """[TRIVIAL]"""
    lo, hi = sorted((r1, r2))
    if lo < hi:
        assert tiling_bound(Enclosure(lo), lam).ball < tiling_bound(Enclosure(hi), lam).ball


# --- big list vs exhaustive words ------------------------------------------------


def _brute_force(D, cosh_bound: float, max_len: int):
    """Every reduced-or-not word up to ``max_len`` with displacement within the bound.

    Returns {rounded gO: letter path} per length prefix, so stabilisation can be checked.
    """
    G = np.array([g.to_numpy() for g in D.pairings])
    layer = G.copy()
    paths = [(k,) for k in range(len(G))]
    found: dict = {}
    sizes = []
    for L in range(1, max_len + 1):
        x0 = np.sum(abs(layer) ** 2, axis=(1, 2)) / 2
        for i in np.nonzero(x0 <= cosh_bound)[0]:
            key = tuple(np.round(orbit_coords(layer[i]), 7))
            found.setdefault(key, paths[i])
        sizes.append(len(found))
        if L < max_len:
            layer = np.einsum("aij,kjl->akil", layer, G).reshape(-1, 2, 2)
            paths = [p + (k,) for p in paths for k in range(len(G))]
    found.pop(tuple(np.round(orbit_coords(np.eye(2, dtype=complex)), 7)), None)  # identity, from g g^-1
    return found, sizes


def test_big_list_empty_below_minimal_displacement(n2):
    """[TRIVIAL]"""
    lo = n2.min_displacement().ball.lower() / 2
    assert big_list(n2, Enclosure(lo)) == []


@pytest.mark.parametrize("lam", ["1.0", "1.5"])
def test_big_list_matches_exhaustive_words(n2, lam):
    """[DERIVED] exhaustive word enumeration oracle; the found set stops growing well before length 4."""
    bound = tiling_bound(n2.spine_radius, lam)
    brute, sizes = _brute_force(n2, math.cosh(float(bound.ball.mid())), 4)
    assert sizes[-1] == sizes[-2] == sizes[-3]
    got = {tuple(np.round(orbit_coords(g.to_numpy()), 7)) for g in big_list(n2, bound)}
    assert got == set(brute)


def test_small_list_matches_exhaustive_words(n2):
    """[DERIVED] the spectrum built from brute-force words equals the pruned-search spectrum."""
    lam = Fraction(3, 2)
    bound = tiling_bound(n2.spine_radius, lam)
    cbound = tiling_bound(n2.spine_radius, lam / 2)
    brute, _ = _brute_force(n2, math.cosh(float(bound.ball.mid())), 4)

    def certified(path):
        g = Isometry.identity()
        for k in path:
            g = g @ n2.pairings[k]
        return g

    elems = [certified(p) for p in brute.values()]
    conj = [Isometry.identity()] + [g for g in elems if g.cosh_displacement().ball <= cbound.ball.cosh()]
    table = small_list(filter_geodesics(elems, n2, lam), n2, lam, conjugators=conj)
    ref = length_spectrum(n2, lam)
    assert table.multiplicities == ref.multiplicities == [6, 3]
    for a, b in zip(table.classes, ref.classes):
        assert a.length.value.overlaps(b.length.value)


def test_kernel_backends_agree(n2):
    """[DERIVED] compiled and reference enumeration return the same elements in the same order."""
    bound = tiling_bound(n2.spine_radius, "2.5")
    mats = np.array([g.to_numpy() for g in n2.pairings])
    err = np.array([g.max_radius() * 4 + 1e-15 for g in n2.pairings])
    impls = kernel.backends()
    results = {name: f(mats, err, math.cosh(float(bound.ball.upper())), 0.5) for name, f in impls.items()}
    ref = results.pop("python")
    for res in results.values():
        assert np.array_equal(res[2], ref[2]) and np.array_equal(res[3], ref[3])
        assert np.allclose(res[0], ref[0], atol=1e-12)


def test_search_reaches_every_orbit_point(n2):
    """[DERIVED] tree search radius covers the float displacement of every listed element."""
    bound = tiling_bound(n2.spine_radius, "2.0")
    s = search(n2, bound)
    disp = np.arccosh(np.maximum(np.sum(abs(s.mats) ** 2, axis=(1, 2)) / 2, 1.0))
    assert disp.max() <= float((bound.ball + n2.outradius().ball).upper()) + 1e-9


# --- filtering -------------------------------------------------------------------


def _perp_translation(t: float) -> Isometry:
    """Translation by ``t`` along the geodesic from -1 to 1."""
    return Isometry(arb(t / 2).cosh(), arb(t / 2).sinh(), arb(t / 2).sinh(), arb(t / 2).cosh())


def test_filter_removes_parabolic_and_far_axes(n2):
    """[TRIVIAL] constructed elements."""
    parabolic = Isometry(1, 1, 0, 1)
    f = diag(1.06128 + 0.5j)
    far = f.conjugate(_perp_translation(2 * float(n2.spine_radius) + 2))
    kept = filter_geodesics([parabolic, f, far], n2, Fraction(318385, 100000))
    assert len(kept) == 1 and kept[0] is f


def test_filter_keeps_n2_generator(n2):
    """[PAPER] f has length about 1.06128 and, in the fixture's own frame, an axis through the basepoint.

    After recentring the same axis sits 1.30 away, beyond the spine, so there it is dropped and
    a conjugate represents the class instead.
    """
    from conftest import manifold

    mf = manifold("N2_hp")
    f = mf.generators["f"]
    assert filter_geodesics([f], n2, "3.18385") == [f]
    assert abs(float(complex_length(f).re) - 1.06128) < 5e-6
    assert filter_geodesics([mf.centred_generators()["f"]], n2, "3.18385") == []


# --- powers and conjugacy ---------------------------------------------------------


def test_power_test_examples():
    """[TRIVIAL] g^2 is a power of g; g is not a proper power of itself."""
    g = diag(0.7 + 0.4j)
    assert power_test(g @ g, g)
    assert not power_test(g, g)


def test_power_test_disjoint_axes():
    """[DERIVED] equal lengths on certifiably distinct axes."""
    g = diag(0.7 + 0.4j)
    m = Isometry(acb(1), acb(0.3, 0.2), acb(0), acb(1))
    h = g.conjugate(m)
    assert not power_test(h @ h, g)
    assert power_test(h @ h, h)


def test_small_list_constructed_class(n2):
    """[TRIVIAL] {g, g^2, m g m^-1, g^-1} collapse to the single class of g."""
    g = diag(0.9 + 0.3j).with_word("g")
    m = Isometry(acb(1), acb(0.1, 0.05), acb(0), acb(1), word="m")
    items = [g, g @ g, g.conjugate(m), g.inverse()]
    table = small_list(items, n2, 2, conjugators=[Isometry.identity(), m, m.inverse()])
    assert len(table.classes) == 1 and table.multiplicities == [1]
    assert table.classes[0].rep.overlaps(g) or table.classes[0].rep.overlaps(g.inverse())


# --- N2 spectrum --------------------------------------------------------------------


def test_n2_spectrum_groups(n2_spec):
    """[PAPER] Re lengths 1.06128 (x6 and x3), 1.76275 (x3), 2.13862 (x6) open the table."""
    rows = n2_spec.rows()
    head = [(round(float(r[1]), 5), r[3]) for r in rows[:4]]
    assert sorted(head[:2], key=lambda t: t[1]) == [(1.06128, 3), (1.06128, 6)]
    assert head[2:] == [(1.76275, 3), (2.13862, 6)]


def test_spectrum_invariants(n2, n2_spec):
    """[DERIVED] certified lengths below the cutoff, axes within the spine, no inverse reported twice."""
    lam = arb(318385) / 100000
    spine = n2.spine_radius.ball
    for c in n2_spec.classes:
        assert c.length.re.ball > 0 and not c.length.re.ball > lam
        assert not c.axis_distance.ball > spine
        L = complex_length(c.rep.inverse())
        assert L.value.overlaps(c.length.value) or L.conjugate().value.overlaps(c.length.value)
    reps = [c.rep for c in n2_spec.classes]
    for i, a in enumerate(reps):
        assert not any(a.inverse().overlaps(b) for b in reps[i + 1:])
    for k, grp in enumerate(n2_spec.groups):
        assert all(n2_spec.classes[i].length.value.overlaps(n2_spec.group_length(k).value) for i in grp)
    res = [float(n2_spec.group_length(k).re) for k in range(len(n2_spec.groups))]
    assert res == sorted(res)


def test_spine_containment_n4(n4, n4_spec):
    """[DERIVED] every closed geodesic meets the spine ball."""
    for c in n4_spec.classes:
        assert not c.axis_distance.ball > n4.spine_radius.ball


def test_determinism_across_runs_and_workers(n2, n2_spec):
    """[DERIVED] identical tables from a fresh run and from a two-process run."""
    again = length_spectrum(n2, "3.18385")
    assert _rows(again) == _rows(n2_spec)
    assert [c.rep.word for c in again.classes] == [c.rep.word for c in n2_spec.classes]
    par = length_spectrum(n2, "3.18385", workers=2)
    assert _rows(par) == _rows(n2_spec)
    assert [c.rep.word for c in par.classes] == [c.rep.word for c in n2_spec.classes]


def test_brute_force_small_cutoff_equivalence_n4(n4):
    """[DERIVED] the same word oracle on a second manifold."""
    bound = tiling_bound(n4.spine_radius, "1.0")
    brute, sizes = _brute_force(n4, math.cosh(float(bound.ball.mid())), 3)
    assert sizes[-1] == sizes[-2]
    got = {tuple(np.round(orbit_coords(g.to_numpy()), 7)) for g in big_list(n4, bound)}
    assert got == set(brute)
