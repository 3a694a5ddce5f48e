"""Pure-Python breadth-first enumeration of group elements (reference kernel).

Elements are complex128 matrices with a Frobenius-norm bound on their
deviation from the exact product.  Two elements are identified when their
orbit points ``gO`` (hyperboloid coordinates, identical for ``g`` and
``-g``) are closer than half the minimal orbit separation.
"""

from __future__ import annotations

import math

import numpy as np

UNIT = 2.0**-53
# a 2x2 complex product: two complex multiplications and one addition per entry
GAMMA = 16 * UNIT


class KernelPrecisionError(ArithmeticError):
    """Accumulated float error is no longer small against the orbit separation."""


def orbit_coords(m: np.ndarray) -> np.ndarray:
    """Spatial hyperboloid coordinates ``(X1, X2, X3)`` of ``gO``; works on stacks."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    p = a * np.conj(c) + b * np.conj(d)
    x3 = (abs(a) ** 2 + abs(b) ** 2 - abs(c) ** 2 - abs(d) ** 2) / 2
    return np.stack([p.real, p.imag, x3], axis=-1)


def coord_error(norm: np.ndarray, err: np.ndarray) -> np.ndarray:
    """Bound on the error of ``orbit_coords`` and of ``X0 = |g|^2/2``."""
    return norm * err + err * err + 8 * UNIT * norm * norm


class _Cells:
    def __init__(self, h: float):
        self.h = h
        self.table: dict[tuple[int, int, int], list[int]] = {}

    def find(self, x: np.ndarray, pts: list, tol: float, radius: float) -> int:
        h = self.h
        base = [math.floor(v / h) for v in x]
        offs = []
        for ax in range(3):
            o = [0]
            frac = x[ax] - base[ax] * h
            if frac < tol:
                o.append(-1)
            if frac > h - tol:
                o.append(1)
            offs.append(o)
        r2 = radius * radius
        for i in offs[0]:
            for j in offs[1]:
                for k in offs[2]:
                    for idx in self.table.get((base[0] + i, base[1] + j, base[2] + k), ()):
                        y = pts[idx]
                        if (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 + (x[2] - y[2]) ** 2 < r2:
                            return idx
        return -1

    def add(self, x: np.ndarray, idx: int):
        key = tuple(math.floor(v / self.h) for v in x)
        self.table.setdefault(key, []).append(idx)


def enumerate_ball(gens, gen_err, cosh_bound: float, separation: float, max_elements: int = 10**7):
    """All products of ``gens`` (children are ``node @ gen``) with ``cosh d(O, gO)`` not
    certifiably above ``cosh_bound``, found breadth-first through such products.

    Returns ``(mats, err, parent, letter)``; index 0 is the identity.
    """
    gens = np.asarray(gens, dtype=np.complex128).reshape(-1, 2, 2)
    gen_err = np.asarray(gen_err, dtype=np.float64).reshape(-1)
    k = len(gens)
    gnorm = np.sqrt(np.sum(abs(gens) ** 2, axis=(1, 2)))
    h = separation / 2
    radius = separation / 2
    cells = _Cells(h)
    mats = [np.eye(2, dtype=np.complex128)]
    errs = [0.0]
    parent = [-1]
    letter = [-1]
    pts = [np.zeros(3)]
    cells.add(pts[0], 0)
    frontier = [0]
    tol_cap = separation / 8
    emax = 0.0
    while frontier and k:
        F = np.array([mats[i] for i in frontier])
        Fe = np.array([errs[i] for i in frontier])
        Fn = np.sqrt(np.sum(abs(F) ** 2, axis=(1, 2)))
        prod = np.einsum("fij,kjl->fkil", F, gens)
        pn = np.sqrt(np.sum(abs(prod) ** 2, axis=(2, 3)))
        perr = (Fe[:, None] * gnorm[None, :] + Fn[:, None] * gen_err[None, :]
                + Fe[:, None] * gen_err[None, :] + GAMMA * Fn[:, None] * gnorm[None, :])
        x0 = pn * pn / 2
        x0err = coord_error(pn, perr)
        keep = (x0 - x0err) <= cosh_bound
        coords = orbit_coords(prod)
        nxt = []
        fi, gi = np.nonzero(keep)
        for a, b in zip(fi.tolist(), gi.tolist()):
            e = x0err[a, b]
            if e > tol_cap:
                raise KernelPrecisionError("float error too large against orbit separation")
            x = coords[a, b]
            # a duplicate lies within the sum of the two error bounds
            if cells.find(x, pts, e + emax, radius) >= 0:
                continue
            idx = len(mats)
            if idx >= max_elements:
                raise MemoryError("element cap reached")
            mats.append(prod[a, b])
            errs.append(float(perr[a, b]))
            parent.append(frontier[a])
            letter.append(b)
            pts.append(x)
            cells.add(x, idx)
            emax = max(emax, e)
            nxt.append(idx)
        frontier = nxt
    return (np.array(mats), np.array(errs), np.array(parent, dtype=np.int64),
            np.array(letter, dtype=np.int64))
