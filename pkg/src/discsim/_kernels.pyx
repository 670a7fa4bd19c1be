# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: joint-trellis BCJR and the sliding-product encoder."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


def bcjr_app(double[:, :, ::1] lc, cnp.intp_t[:, ::1] next_state, double[:, :, ::1] outputs,
             bint terminated=False):
    """Per-bit APP LLRs ``ln Pr(b=0)/Pr(b=1)``, shape (B, N).

    ``lc`` holds channel LLRs per code stream, shape (B, K, N). The trellis
    starts in state 0 and ends in state 0 when ``terminated``, otherwise in
    an unknown state. Recursions run in the
    probability domain; branch metrics are shifted by their per-step maximum
    and state metrics renormalized to sum 1, with the log-domain shifts
    cancelling in the final ratio.
    """
    cdef Py_ssize_t nb = lc.shape[0], nk = lc.shape[1], nn = lc.shape[2]
    cdef Py_ssize_t ns = next_state.shape[0]
    cdef Py_ssize_t b, k, n, s, u, t
    cdef double acc, best, v, p0, p1, tot

    app_arr = np.empty((nb, nn), dtype=np.float64)
    cdef double[:, ::1] app = app_arr
    cdef double[:, ::1] alpha = np.empty((nn + 1, ns), dtype=np.float64)
    cdef double[::1] beta = np.empty(ns, dtype=np.float64)
    cdef double[::1] beta_new = np.empty(ns, dtype=np.float64)
    cdef double[:, :, ::1] gam = np.empty((nn, ns, 2), dtype=np.float64)

    with nogil:
        for b in range(nb):
            for n in range(nn):
                best = -INFINITY
                for s in range(ns):
                    for u in range(2):
                        acc = 0.0
                        for k in range(nk):
                            acc = acc + lc[b, k, n] * outputs[s, u, k]
                        gam[n, s, u] = 0.5 * acc
                        if gam[n, s, u] > best:
                            best = gam[n, s, u]
                for s in range(ns):
                    for u in range(2):
                        gam[n, s, u] = exp(gam[n, s, u] - best)
            for s in range(ns):
                alpha[0, s] = 0.0
            alpha[0, 0] = 1.0
            for n in range(nn):
                for s in range(ns):
                    alpha[n + 1, s] = 0.0
                for s in range(ns):
                    v = alpha[n, s]
                    if v == 0.0:
                        continue
                    for u in range(2):
                        t = next_state[s, u]
                        alpha[n + 1, t] += v * gam[n, s, u]
                tot = 0.0
                for s in range(ns):
                    tot += alpha[n + 1, s]
                for s in range(ns):
                    alpha[n + 1, s] /= tot
            for s in range(ns):
                beta[s] = 0.0 if terminated else 1.0
            beta[0] = 1.0
            for n in range(nn - 1, -1, -1):
                p0 = 0.0
                p1 = 0.0
                tot = 0.0
                for s in range(ns):
                    beta_new[s] = 0.0
                    for u in range(2):
                        v = gam[n, s, u] * beta[next_state[s, u]]
                        beta_new[s] += v
                        if u == 0:
                            p0 += alpha[n, s] * v
                        else:
                            p1 += alpha[n, s] * v
                    tot += beta_new[s]
                app[b, n] = log(p0) - log(p1)
                for s in range(ns):
                    beta[s] = beta_new[s] / tot
    return app_arr


def sliding_product(double[:, ::1] frames, cnp.intp_t[::1] offsets):
    """``out[b, n] = prod_j frames[b, n - offsets[j]]``, +1 before the frame."""
    cdef Py_ssize_t nb = frames.shape[0], nn = frames.shape[1], nj = offsets.shape[0]
    cdef Py_ssize_t b, n, j, i
    cdef double acc
    out_arr = np.empty((nb, nn), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for b in range(nb):
            for n in range(nn):
                acc = 1.0
                for j in range(nj):
                    i = n - offsets[j]
                    if i >= 0:
                        acc = acc * frames[b, i]
                out[b, n] = acc
    return out_arr
