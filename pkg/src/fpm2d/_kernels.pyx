# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stiffness kernels.

Both kernels work on packed per-point data: point ``i`` owns the recovery
matrix ``cflat[coff[i]:...]`` of shape (2*nb, 2*npts[i]) stored row-major,
and its subdomain center ``center[i]``.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

ctypedef cnp.float64_t f8
ctypedef cnp.int64_t i8


cdef inline void _basis(double dx, double dy, int nb, double* h, double* g1, double* g2) noexcept nogil:
    h[0] = dx
    h[1] = dy
    g1[0] = 1.0
    g1[1] = 0.0
    g2[0] = 0.0
    g2[1] = 1.0
    if nb == 5:
        h[2] = 0.5 * dx * dx
        h[3] = 0.5 * dy * dy
        h[4] = dx * dy
        g1[2] = dx
        g1[3] = 0.0
        g1[4] = dy
        g2[2] = 0.0
        g2[3] = dy
        g2[4] = dx


cdef void _eval(const f8* C, int nb, int ncol, double dx, double dy,
                double* N, double* B) noexcept nogil:
    """N (2 x ncol) and B (3 x ncol) of one point at offset (dx, dy)."""
    cdef double h[5]
    cdef double g1[5]
    cdef double g2[5]
    cdef int b, c
    cdef double n0, n1, a00, a01, a10, a11, cu, cv
    _basis(dx, dy, nb, h, g1, g2)
    for c in range(ncol):
        n0 = 0.0
        n1 = 0.0
        a00 = 0.0
        a01 = 0.0
        a10 = 0.0
        a11 = 0.0
        for b in range(nb):
            cu = C[b * ncol + c]
            cv = C[(nb + b) * ncol + c]
            n0 += h[b] * cu
            n1 += h[b] * cv
            a00 += g1[b] * cu
            a01 += g2[b] * cu
            a10 += g1[b] * cv
            a11 += g2[b] * cv
        if N != NULL:
            N[c] = n0
            N[ncol + c] = n1
        B[c] = a00
        B[ncol + c] = a11
        B[2 * ncol + c] = a01 + a10
    if N != NULL:
        N[0] += 1.0
        N[ncol + 1] += 1.0


def point_blocks(f8[:, ::1] center, i8[::1] npts, i8[::1] coff, f8[::1] cflat, int nb,
                 i8[::1] items, i8[::1] qptr, f8[:, ::1] qxy, f8[::1] qw,
                 f8[:, ::1] D, i8[::1] ooff, f8[::1] out):
    """K_E = sum_q w_q B^T D B for each point in ``items``."""
    cdef Py_ssize_t k, q, a, b, r, s
    cdef int p, ncol
    cdef double w, acc
    cdef double* B
    cdef double* DB
    cdef double* K
    for k in range(items.shape[0]):
        p = items[k]
        ncol = 2 * npts[p]
        B = <double*> malloc(3 * ncol * sizeof(double))
        DB = <double*> malloc(3 * ncol * sizeof(double))
        K = &out[ooff[k]]
        memset(K, 0, ncol * ncol * sizeof(double))
        for q in range(qptr[k], qptr[k + 1]):
            _eval(&cflat[coff[p]], nb, ncol, qxy[q, 0] - center[p, 0], qxy[q, 1] - center[p, 1], NULL, B)
            w = qw[q]
            for r in range(3):
                for a in range(ncol):
                    acc = 0.0
                    for s in range(3):
                        acc += D[r, s] * B[s * ncol + a]
                    DB[r * ncol + a] = acc
            for a in range(ncol):
                for b in range(ncol):
                    acc = 0.0
                    for r in range(3):
                        acc += B[r * ncol + a] * DB[r * ncol + b]
                    K[a * ncol + b] += w * acc
        free(B)
        free(DB)


def segment_blocks(f8[:, ::1] center, i8[::1] npts, i8[::1] coff, f8[::1] cflat, int nb,
                   i8[::1] left, i8[::1] right, f8[:, ::1] normal, f8[::1] pen, double c_cons,
                   i8[::1] qptr, f8[:, ::1] qxy, f8[::1] qw, f8[:, ::1] D,
                   i8[::1] usize, i8[::1] lmap_off, i8[::1] lmap, i8[::1] rmap_off, i8[::1] rmap,
                   i8[::1] ooff, f8[::1] out):
    """Interior-penalty boundary stiffness for each segment.

    K_h = sum_q w_q [c_cons (-J^T S - S^T J) + pen J^T J] with the jump
    operator J = N_left - N_right and the average traction operator
    S = n_e D (B_left + B_right) / 2, both on the union of the two dof sets.
    ``lmap``/``rmap`` give the union position of each dof point of the two sides.
    """
    cdef Py_ssize_t k, q, a, b, c, j
    cdef int L, R, nl, nr, nu, pu
    cdef double w, n1, n2, t0, t1, t2, coefj
    cdef double* NL
    cdef double* BL
    cdef double* NR
    cdef double* BR
    cdef double* J
    cdef double* S
    cdef double* Bs
    cdef double* K
    for k in range(left.shape[0]):
        L = left[k]
        R = right[k]
        nl = 2 * npts[L]
        nr = 2 * npts[R]
        nu = 2 * usize[k]
        NL = <double*> malloc(2 * nl * sizeof(double))
        BL = <double*> malloc(3 * nl * sizeof(double))
        NR = <double*> malloc(2 * nr * sizeof(double))
        BR = <double*> malloc(3 * nr * sizeof(double))
        J = <double*> malloc(2 * nu * sizeof(double))
        Bs = <double*> malloc(3 * nu * sizeof(double))
        S = <double*> malloc(2 * nu * sizeof(double))
        K = &out[ooff[k]]
        memset(K, 0, nu * nu * sizeof(double))
        n1 = normal[k, 0]
        n2 = normal[k, 1]
        for q in range(qptr[k], qptr[k + 1]):
            _eval(&cflat[coff[L]], nb, nl, qxy[q, 0] - center[L, 0], qxy[q, 1] - center[L, 1], NL, BL)
            _eval(&cflat[coff[R]], nb, nr, qxy[q, 0] - center[R, 0], qxy[q, 1] - center[R, 1], NR, BR)
            memset(J, 0, 2 * nu * sizeof(double))
            memset(Bs, 0, 3 * nu * sizeof(double))
            for j in range(npts[L]):
                pu = lmap[lmap_off[k] + j]
                for c in range(2):
                    J[2 * pu + c] += NL[2 * j + c]
                    J[nu + 2 * pu + c] += NL[nl + 2 * j + c]
                    for a in range(3):
                        Bs[a * nu + 2 * pu + c] += 0.5 * BL[a * nl + 2 * j + c]
            for j in range(npts[R]):
                pu = rmap[rmap_off[k] + j]
                for c in range(2):
                    J[2 * pu + c] -= NR[2 * j + c]
                    J[nu + 2 * pu + c] -= NR[nr + 2 * j + c]
                    for a in range(3):
                        Bs[a * nu + 2 * pu + c] += 0.5 * BR[a * nr + 2 * j + c]
            # S = n_e D Bs, n_e = [[n1, 0, n2], [0, n2, n1]]
            for c in range(nu):
                t0 = D[0, 0] * Bs[c] + D[0, 1] * Bs[nu + c] + D[0, 2] * Bs[2 * nu + c]
                t1 = D[1, 0] * Bs[c] + D[1, 1] * Bs[nu + c] + D[1, 2] * Bs[2 * nu + c]
                t2 = D[2, 0] * Bs[c] + D[2, 1] * Bs[nu + c] + D[2, 2] * Bs[2 * nu + c]
                S[c] = n1 * t0 + n2 * t2
                S[nu + c] = n2 * t1 + n1 * t2
            w = qw[q]
            coefj = pen[k]
            for a in range(nu):
                for b in range(nu):
                    K[a * nu + b] += w * (
                        -c_cons * (J[a] * S[b] + J[nu + a] * S[nu + b]
                                   + S[a] * J[b] + S[nu + a] * J[nu + b])
                        + coefj * (J[a] * J[b] + J[nu + a] * J[nu + b]))
        free(NL)
        free(BL)
        free(NR)
        free(BR)
        free(J)
        free(Bs)
        free(S)
