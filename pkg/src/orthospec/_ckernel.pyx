# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_pykernel.enumerate_ball``; identical semantics and output."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from libc.stdint cimport int64_t

from ._pykernel import KernelPrecisionError

cnp.import_array()

cdef extern from *:
    """
    template <class It> static inline long long dereference_second(It it) { return it->second; }
    """
    long long dereference_second(unordered_map[int64_t, int64_t].iterator it)

cdef double UNIT = 2.0 ** -53
cdef double GAMMA = 16 * UNIT


cdef inline int64_t cell_key(int64_t i, int64_t j, int64_t k) nogil:
    return ((i + (1 << 20)) << 42) | ((j + (1 << 20)) << 21) | (k + (1 << 20))


cdef struct Mat:
    double ar, ai, br, bi, cr, ci, dr, di


cdef inline void coords(Mat m, double* x) nogil:
    # a conj(c) + b conj(d), and (|a|^2 + |b|^2 - |c|^2 - |d|^2) / 2
    x[0] = m.ar * m.cr + m.ai * m.ci + m.br * m.dr + m.bi * m.di
    x[1] = m.ai * m.cr - m.ar * m.ci + m.bi * m.dr - m.br * m.di
    x[2] = (m.ar * m.ar + m.ai * m.ai + m.br * m.br + m.bi * m.bi
            - m.cr * m.cr - m.ci * m.ci - m.dr * m.dr - m.di * m.di) / 2


cdef inline Mat mul(Mat p, Mat q) nogil:
    cdef Mat r
    r.ar = p.ar * q.ar - p.ai * q.ai + p.br * q.cr - p.bi * q.ci
    r.ai = p.ar * q.ai + p.ai * q.ar + p.br * q.ci + p.bi * q.cr
    r.br = p.ar * q.br - p.ai * q.bi + p.br * q.dr - p.bi * q.di
    r.bi = p.ar * q.bi + p.ai * q.br + p.br * q.di + p.bi * q.dr
    r.cr = p.cr * q.ar - p.ci * q.ai + p.dr * q.cr - p.di * q.ci
    r.ci = p.cr * q.ai + p.ci * q.ar + p.dr * q.ci + p.di * q.cr
    r.dr = p.cr * q.br - p.ci * q.bi + p.dr * q.dr - p.di * q.di
    r.di = p.cr * q.bi + p.ci * q.br + p.dr * q.di + p.di * q.dr
    return r


cdef inline double norm2(Mat m) nogil:
    return (m.ar * m.ar + m.ai * m.ai + m.br * m.br + m.bi * m.bi
            + m.cr * m.cr + m.ci * m.ci + m.dr * m.dr + m.di * m.di)


cdef class _Store:
    cdef vector[Mat] mats
    cdef vector[double] errs
    cdef vector[int64_t] parent
    cdef vector[int64_t] letter
    cdef vector[double] pts
    cdef vector[int64_t] nxt
    cdef unordered_map[int64_t, int64_t] head
    cdef double h

    cdef int64_t find(self, double* x, double tol, double radius):
        cdef int64_t b[3]
        cdef int lo[3]
        cdef int hi[3]
        cdef int ax, i, j, k
        cdef double frac, dx, dy, dz, r2 = radius * radius
        cdef int64_t idx
        cdef unordered_map[int64_t, int64_t].iterator it
        for ax in range(3):
            b[ax] = <int64_t>floor(x[ax] / self.h)
            frac = x[ax] - b[ax] * self.h
            lo[ax] = -1 if frac < tol else 0
            hi[ax] = 1 if frac > self.h - tol else 0
        for i in range(lo[0], hi[0] + 1):
            for j in range(lo[1], hi[1] + 1):
                for k in range(lo[2], hi[2] + 1):
                    it = self.head.find(cell_key(b[0] + i, b[1] + j, b[2] + k))
                    if it == self.head.end():
                        continue
                    idx = dereference_second(it)
                    while idx >= 0:
                        dx = x[0] - self.pts[3 * idx]
                        dy = x[1] - self.pts[3 * idx + 1]
                        dz = x[2] - self.pts[3 * idx + 2]
                        if dx * dx + dy * dy + dz * dz < r2:
                            return idx
                        idx = self.nxt[idx]
        return -1

    cdef void add(self, Mat m, double err, int64_t par, int64_t let, double* x):
        cdef int64_t idx = self.mats.size()
        cdef unordered_map[int64_t, int64_t].iterator it
        cdef int64_t key = cell_key(<int64_t>floor(x[0] / self.h), <int64_t>floor(x[1] / self.h),
                                    <int64_t>floor(x[2] / self.h))
        self.mats.push_back(m)
        self.errs.push_back(err)
        self.parent.push_back(par)
        self.letter.push_back(let)
        self.pts.push_back(x[0])
        self.pts.push_back(x[1])
        self.pts.push_back(x[2])
        it = self.head.find(key)
        if it == self.head.end():
            self.nxt.push_back(-1)
        else:
            self.nxt.push_back(dereference_second(it))
        self.head[key] = idx



def enumerate_ball(gens, gen_err, double cosh_bound, double separation, long max_elements=10**7):
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] G = np.ascontiguousarray(
        np.asarray(gens, dtype=np.complex128).reshape(-1, 2, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] GE = np.ascontiguousarray(
        np.asarray(gen_err, dtype=np.float64).reshape(-1))
    cdef int k = G.shape[0]
    cdef vector[Mat] gm
    cdef vector[double] gnorm
    cdef Mat m, prod
    cdef int g
    for g in range(k):
        m.ar = G[g, 0, 0].real; m.ai = G[g, 0, 0].imag
        m.br = G[g, 0, 1].real; m.bi = G[g, 0, 1].imag
        m.cr = G[g, 1, 0].real; m.ci = G[g, 1, 0].imag
        m.dr = G[g, 1, 1].real; m.di = G[g, 1, 1].imag
        gm.push_back(m)
        gnorm.push_back(sqrt(norm2(m)))

    cdef _Store st = _Store()
    st.h = separation / 2
    cdef double radius = separation / 2
    cdef double tol_cap = separation / 8
    cdef double emax = 0.0
    cdef double x[3]
    cdef Mat ident
    ident.ar = 1; ident.ai = 0; ident.br = 0; ident.bi = 0
    ident.cr = 0; ident.ci = 0; ident.dr = 1; ident.di = 0
    x[0] = 0; x[1] = 0; x[2] = 0
    st.add(ident, 0.0, -1, -1, x)

    cdef vector[int64_t] frontier, nextf
    frontier.push_back(0)
    cdef size_t fi
    cdef int64_t node
    cdef double fn, fe, pn, perr, x0, x0err
    while frontier.size() > 0 and k > 0:
        nextf.clear()
        for fi in range(frontier.size()):
            node = frontier[fi]
            m = st.mats[node]
            fe = st.errs[node]
            fn = sqrt(norm2(m))
            for g in range(k):
                prod = mul(m, gm[g])
                pn = sqrt(norm2(prod))
                perr = fe * gnorm[g] + fn * GE[g] + fe * GE[g] + GAMMA * fn * gnorm[g]
                x0 = pn * pn / 2
                x0err = pn * perr + perr * perr + 8 * UNIT * pn * pn
                if x0 - x0err > cosh_bound:
                    continue
                if x0err > tol_cap:
                    raise KernelPrecisionError("float error too large against orbit separation")
                coords(prod, x)
                if st.find(x, x0err + emax, radius) >= 0:
                    continue
                if <long>st.mats.size() >= max_elements:
                    raise MemoryError("element cap reached")
                nextf.push_back(st.mats.size())
                st.add(prod, perr, node, g, x)
                if x0err > emax:
                    emax = x0err
        frontier.swap(nextf)

    cdef Py_ssize_t n = st.mats.size(), i
    mats = np.empty((n, 2, 2), dtype=np.complex128)
    errs = np.empty(n, dtype=np.float64)
    parent = np.empty(n, dtype=np.int64)
    letter = np.empty(n, dtype=np.int64)
    cdef cnp.complex128_t[:, :, :] mv = mats
    cdef double[:] ev = errs
    cdef int64_t[:] pv = parent
    cdef int64_t[:] lv = letter
    for i in range(n):
        m = st.mats[i]
        mv[i, 0, 0] = m.ar + 1j * m.ai
        mv[i, 0, 1] = m.br + 1j * m.bi
        mv[i, 1, 0] = m.cr + 1j * m.ci
        mv[i, 1, 1] = m.dr + 1j * m.di
        ev[i] = st.errs[i]
        pv[i] = st.parent[i]
        lv[i] = st.letter[i]
    return mats, errs, parent, letter
