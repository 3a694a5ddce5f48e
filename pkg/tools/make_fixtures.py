"""Regenerate the manifold fixtures in ``src/orthospec/data``.

Two variants per manifold:

* ``<name>.mfd`` carries the generator matrices at the five printed decimals.
* ``<name>_hp.mfd`` carries generators refined by Gauss-Newton on the two
  relators (unknowns ``sqrt L'``, ``sqrt R'``, ``sqrt D'``), 60 digits.

Both carry a basepoint: the best local maximum of the minimal displacement
``min_g d(x, g x)`` found by a random-restart sequential-LP search (the
seeds below).  Here they are only polished by Gauss-Newton on the
equalities between the active displacements.

Run with ``python tools/make_fixtures.py``; needs mpmath and numpy.
"""

from __future__ import annotations

import math
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 90
OUT = Path(__file__).resolve().parents[1] / "src" / "orthospec" / "data"

PRINTED = {
    "N2": dict(
        f=["0.74293-1.52908j", "0", "0", "0.25706+0.52908j"],
        w=["0.39135-0.96022j", "-0.30677-1.26724j", "0.59162-0.48807j", "0.60864-0.03977j"],
        relators=["FwfwfWffWfwfwFww", "FFwFFwwFwfwfwFww"],
        volume="3.6638",
        seed=(-0.44419081494030005, -1.2661932187565967, 0.7898838120622494),
    ),
    "N3": dict(
        f=["1.40427-1.17926j", "0", "0", "0.417611+0.350696j"],
        w=["1.07481-0.850372j", "0.313498-1.03464j", "0.493763-0.322133j", "0.747073+0.0218061j"],
        relators=["FFwfwFFwwFWFwFWfWFWffWFWfWFwFWFww", "FFwfwFwfWfwfWWfwfWfwFwfwFFwwFWFww"],
        volume="7.73809",
        seed=(0.705921, 0.232596, 0.44644547615351315),
    ),
    "N4": dict(
        f=["1.35462-1.22513j", "0", "0", "0.40607+0.367252j"],
        w=["1.02306-0.877334j", "0.265945-1.07164j", "0.501555-0.337493j", "0.737634+0.0194601j"],
        relators=["FFwfwFwfWfwfWfwFwfwFFwwFWFwFWFww", "FFwfwFwfwFFwwFWFwFWfWFWfWFwFWFww"],
        volume="7.517689",
        seed=(-0.6103581444790658, -1.2744914851262559, 1.5276738735233597),
    ),
}


def inv(m):
    return mp.matrix([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def mats(a, u, v):
    f = mp.matrix([[a, 0], [0, 1 / a]])
    c, s = (v + 1 / v) / 2, (v - 1 / v) / 2
    w = mp.matrix([[u * c, u * s], [s / u, c / u]])
    return f, w


def word(r, gens):
    p = mp.eye(2)
    for ch in r:
        p = p * gens[ch]
    return p


def residual(x, relators):
    f, w = mats(*x)
    g = {"f": f, "w": w, "F": inv(f), "W": inv(w)}
    out = []
    for r in relators:
        p = word(r, g)
        out += [p[0, 1], p[1, 0], p[0, 0] - p[1, 1]]
    return out


def gauss_newton(fun, x, tol, h):
    for _ in range(60):
        r = fun(x)
        if max(abs(t) for t in r) < tol:
            break
        J = mp.matrix(len(r), len(x))
        for k in range(len(x)):
            y = list(x)
            y[k] += h
            r2 = fun(y)
            for i in range(len(r)):
                J[i, k] = (r2[i] - r[i]) / h
        U, S, V = mp.svd(J) if isinstance(x[0], mp.mpc) else mp.svd_r(J)
        step = mp.matrix(len(x), 1)
        rv = mp.matrix(r)
        for i in range(min(len(S), len(x))):
            if S[i] > mp.mpf(10) ** -30:
                c = (U[:, i].H * rv)[0] / S[i]
                step -= c * V[i, :].H
        x = [x[k] + (step[k] if isinstance(x[k], mp.mpc) else mp.re(step[k])) for k in range(len(x))]
    return x


def refine_generators(spec):
    a = mp.mpc(complex(spec["f"][0]))
    w = [mp.mpc(complex(s)) for s in spec["w"]]
    u = mp.sqrt(w[0] / w[3])
    v = w[0] / u + w[1] / u
    x = gauss_newton(lambda y: residual(y, spec["relators"]), [a, u, v],
                     mp.mpf(10) ** -80, mp.mpf(10) ** -60)
    return mats(*x)


def conj_to(x, y, z):
    s = mp.sqrt(z)
    return mp.matrix([[s, mp.mpc(x, y) / s], [0, 1 / s]])


def cosh_disp(g):
    return sum(abs(g[i, j]) ** 2 for i in range(2) for j in range(2)) / 2


def short_words(f, w, seed, radius=3.0):
    """Words whose displacement at ``seed`` is within ``radius`` (float BFS)."""
    fn = np.array(f.tolist(), dtype=complex)
    wn = np.array(w.tolist(), dtype=complex)
    gens = {"f": fn, "w": wn, "F": np.linalg.inv(fn), "W": np.linalg.inv(wn)}
    m = np.array(conj_to(*seed).tolist(), dtype=complex)
    mi = np.linalg.inv(m)
    gens = {k: mi @ v @ m for k, v in gens.items()}
    bound = math.cosh(radius)
    seen = {tuple(np.round(_hyperboloid(np.eye(2)), 6)): ("", 1.0)}
    frontier = [(np.eye(2, dtype=complex), "")]
    while frontier:
        nxt = []
        for g, wd in frontier:
            for ch, s in gens.items():
                h = g @ s
                c = np.sum(abs(h) ** 2) / 2
                if c > bound:
                    continue
                key = tuple(np.round(_hyperboloid(h), 6))
                if key in seen:
                    continue
                seen[key] = (wd + ch, c)
                nxt.append((h, wd + ch))
        frontier = nxt
    return [v for v in seen.values() if v[0]]


def _hyperboloid(g):
    a, b, c, d = g.ravel()
    x0 = (abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2) / 2
    p = a * np.conj(c) + b * np.conj(d)
    return np.array([x0, p.real, p.imag, (abs(a) ** 2 + abs(b) ** 2 - abs(c) ** 2 - abs(d) ** 2) / 2])


def polish_basepoint(f, w, seed):
    cands = short_words(f, w, seed)
    m0 = min(c for _, c in cands)
    # seeds are good to about six digits, so near-ties count as active
    active = [wd for wd, c in cands if math.acosh(c) < math.acosh(m0) + 1e-4]
    G = {"f": f, "w": w, "F": inv(f), "W": inv(w)}
    mats_ = [word(a, G) for a in active]

    def disp(p, g):
        m = conj_to(p[0], p[1], mp.exp(p[2]))
        return cosh_disp(inv(m) * g * m)

    def fun(p):
        d0 = disp(p, mats_[0])
        return [disp(p, g) - d0 for g in mats_[1:]]

    p = [mp.mpf(seed[0]), mp.mpf(seed[1]), mp.log(seed[2])]
    if len(mats_) > 1:
        p = gauss_newton(fun, p, mp.mpf(10) ** -75, mp.mpf(10) ** -40)
    spread = max(abs(r) for r in fun(p)) if len(mats_) > 1 else 0
    assert spread < mp.mpf(10) ** -50, f"active displacements not equalised ({mp.nstr(spread, 3)})"
    return (p[0], p[1], mp.exp(p[2])), mp.acosh(disp(p, mats_[0])), active


def fmt(x, digits):
    s = mp.nstr(x, digits, min_fixed=-mp.inf, max_fixed=mp.inf)
    return "0" if mp.almosteq(x, 0, mp.mpf(10) ** -(digits + 5)) else s


def matrix_line(letter, m, digits):
    vals = []
    for i in range(2):
        for j in range(2):
            z = mp.mpc(m[i, j])
            vals += [fmt(z.real, digits), fmt(z.imag, digits)]
    return f"generator {letter} " + " ".join(vals)


def printed_matrix(entries):
    return mp.matrix([[mp.mpc(complex(entries[0])), mp.mpc(complex(entries[1]))],
                      [mp.mpc(complex(entries[2])), mp.mpc(complex(entries[3]))]])


def printed_line(letter, entries):
    vals = []
    for e in entries:
        z = complex(e)
        if e == "0":
            vals += ["0", "0"]
            continue
        # keep the printed digits verbatim
        body = e.rstrip("j")
        k = max(body.rfind("+"), body.rfind("-"))
        re, im = body[:k], body[k:]
        vals += [re, im.lstrip("+")]
        assert complex(float(re), float(im)) == z
    return f"generator {letter} " + " ".join(vals)


def write(name, spec):
    f, w = refine_generators(spec)
    bp, maximin, active = polish_basepoint(f, w, spec["seed"])
    rel = "\n".join(f"# relator {r}" for r in spec["relators"])
    head = (f"name {name}\n{rel}\n"
            f"# basepoint: local maximum of the minimal displacement, value {mp.nstr(maximin, 12)}\n"
            f"# active elements at the basepoint: {' '.join(active)}\n")
    bp_line = "basepoint " + " ".join(fmt(c, 60) for c in bp)
    hp = (head + "# generators refined on the relators by Gauss-Newton, 60 digits\n"
          + matrix_line("f", f, 60) + "\n" + matrix_line("w", w, 60) + "\n"
          + bp_line + f"\nvolume {spec['volume']}\n")
    lo = (head + "# generators at the printed five decimals\n"
          + printed_line("f", spec["f"]) + "\n" + printed_line("w", spec["w"]) + "\n"
          + bp_line + f"\nvolume {spec['volume']}\n")
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{name}_hp.mfd").write_text(hp)
    (OUT / f"{name}.mfd").write_text(lo)
    print(name, "maximin", mp.nstr(maximin, 15), "active", len(active))


if __name__ == "__main__":
    for name, spec in PRINTED.items():
        write(name, spec)
