"""Pure-NumPy implementation of the stiffness kernels (same API as the compiled one)."""

from __future__ import annotations

import numpy as np


def _basis(dx: np.ndarray, nb: int):
    x, y = dx[:, 0], dx[:, 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    if nb == 2:
        return np.column_stack([x, y]), np.column_stack([one, zero]), np.column_stack([zero, one])
    return (np.column_stack([x, y, 0.5 * x * x, 0.5 * y * y, x * y]),
            np.column_stack([one, zero, x, zero, y]),
            np.column_stack([zero, one, zero, y, x]))


def _eval(C: np.ndarray, nb: int, dx: np.ndarray):
    """N (nq, 2, ncol) and B (nq, 3, ncol) at offsets ``dx``."""
    h, g1, g2 = _basis(dx, nb)
    Cu, Cv = C[:nb], C[nb:]
    N = np.stack([h @ Cu, h @ Cv], axis=1)
    N[:, 0, 0] += 1.0
    N[:, 1, 1] += 1.0
    B = np.stack([g1 @ Cu, g2 @ Cv, g2 @ Cu + g1 @ Cv], axis=1)
    return N, B


def _cmat(cflat, coff, npts, nb, p):
    ncol = 2 * npts[p]
    return cflat[coff[p]:coff[p] + 2 * nb * ncol].reshape(2 * nb, ncol)


def point_blocks(center, npts, coff, cflat, nb, items, qptr, qxy, qw, D, ooff, out):
    for k, p in enumerate(items):
        C = _cmat(cflat, coff, npts, nb, p)
        sl = slice(qptr[k], qptr[k + 1])
        _, B = _eval(C, nb, qxy[sl] - center[p])
        K = np.einsum("q,qra,rs,qsb->ab", qw[sl], B, D, B, optimize=True)
        out[ooff[k]:ooff[k] + K.size] = K.ravel()


def segment_blocks(center, npts, coff, cflat, nb, left, right, normal, pen, c_cons,
                   qptr, qxy, qw, D, usize, lmap_off, lmap, rmap_off, rmap, ooff, out):
    for k in range(len(left)):
        L, R = left[k], right[k]
        nu = 2 * usize[k]
        sl = slice(qptr[k], qptr[k + 1])
        x = qxy[sl]
        NL, BL = _eval(_cmat(cflat, coff, npts, nb, L), nb, x - center[L])
        NR, BR = _eval(_cmat(cflat, coff, npts, nb, R), nb, x - center[R])
        colL = (2 * lmap[lmap_off[k]:lmap_off[k] + npts[L]][:, None] + np.arange(2)).ravel()
        colR = (2 * rmap[rmap_off[k]:rmap_off[k] + npts[R]][:, None] + np.arange(2)).ravel()
        J = np.zeros((len(x), 2, nu))
        Bs = np.zeros((len(x), 3, nu))
        J[:, :, colL] += NL
        J[:, :, colR] -= NR
        Bs[:, :, colL] += 0.5 * BL
        Bs[:, :, colR] += 0.5 * BR
        n1, n2 = normal[k]
        ne = np.array([[n1, 0.0, n2], [0.0, n2, n1]])
        S = np.einsum("ir,rs,qsa->qia", ne, D, Bs)
        JS = np.einsum("q,qia,qib->ab", qw[sl], J, S)
        JJ = np.einsum("q,qia,qib->ab", qw[sl], J, J)
        K = -c_cons * (JS + JS.T) + pen[k] * JJ
        out[ooff[k]:ooff[k] + K.size] = K.ravel()
