# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequence kernels for the recurrent cell.

Same contract as :mod:`parkfed.neural.lstm_numpy`: batched forward over a
window from the all-zero state, and backward-through-time seeded at the final
output gate. Per-step matrix products go through BLAS; the gate arithmetic is
plain C loops, so the per-step Python overhead of the numpy path disappears.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline double _sig(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef void _gemm(char ta, char tb, int m, int n, int k,
                double alpha, double* a, int lda, double* b, int ldb,
                double beta, double* c, int ldc) noexcept nogil:
    dgemm(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc)


def lstm_seq_forward(double[:, ::1] w_h2, double[:, ::1] w_x2,
                     double[::1] b2, double[:, :, ::1] xs):
    cdef int B = xs.shape[0]
    cdef int z = xs.shape[1]
    cdef int In = xs.shape[2]
    cdef int H4 = w_h2.shape[0]
    cdef int H = H4 // 4

    gates_arr = np.empty((z, B, H4))
    cell_arr = np.empty((z, B, H))
    tanh_cell_arr = np.empty((z, B, H))
    hidden_arr = np.empty((z, B, H))
    cdef double[:, :, ::1] gates = gates_arr
    cdef double[:, :, ::1] cell = cell_arr
    cdef double[:, :, ::1] tanh_cell = tanh_cell_arr
    cdef double[:, :, ::1] hidden = hidden_arr

    h_arr = np.zeros((B, H))
    c_arr = np.zeros((B, H))
    pre_arr = np.empty((B, H4))
    xt_arr = np.empty((B, In))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] pre = pre_arr
    cdef double[:, ::1] xt = xt_arr

    cdef int t, i, j
    cdef double f, u, cand, o, cv
    with nogil:
        for t in range(z):
            for i in range(B):
                for j in range(In):
                    xt[i, j] = xs[i, t, j]
                for j in range(H4):
                    pre[i, j] = b2[j]
            # pre += h @ w_h2^T ; pre += x_t @ w_x2^T
            _gemm(b'T', b'N', H4, B, H, 1.0, &w_h2[0, 0], H,
                  &h[0, 0], H, 1.0, &pre[0, 0], H4)
            _gemm(b'T', b'N', H4, B, In, 1.0, &w_x2[0, 0], In,
                  &xt[0, 0], In, 1.0, &pre[0, 0], H4)
            for i in range(B):
                for j in range(H):
                    f = _sig(pre[i, j])
                    u = _sig(pre[i, H + j])
                    cand = tanh(pre[i, 2 * H + j])
                    o = _sig(pre[i, 3 * H + j])
                    cv = f * c[i, j] + u * cand
                    c[i, j] = cv
                    gates[t, i, j] = f
                    gates[t, i, H + j] = u
                    gates[t, i, 2 * H + j] = cand
                    gates[t, i, 3 * H + j] = o
                    cell[t, i, j] = cv
                    cv = tanh(cv)
                    tanh_cell[t, i, j] = cv
                    h[i, j] = o * cv
                    hidden[t, i, j] = h[i, j]
    return gates_arr, cell_arr, tanh_cell_arr, hidden_arr


def lstm_seq_backward(double[:, ::1] w_h2, double[:, ::1] w_x2,
                      double[:, :, ::1] xs,
                      double[:, :, ::1] gates, double[:, :, ::1] cell,
                      double[:, :, ::1] tanh_cell, double[:, :, ::1] hidden,
                      double[:, ::1] d_out_final):
    cdef int z = gates.shape[0]
    cdef int B = gates.shape[1]
    cdef int H4 = gates.shape[2]
    cdef int H = H4 // 4
    cdef int In = xs.shape[2]

    d_wh_arr = np.zeros((H4, H))
    d_wx_arr = np.zeros((H4, In))
    d_b_arr = np.zeros(H4)
    cdef double[:, ::1] d_wh = d_wh_arr
    cdef double[:, ::1] d_wx = d_wx_arr
    cdef double[::1] d_b = d_b_arr

    dh_arr = np.zeros((B, H))
    dc_arr = np.zeros((B, H))
    da_arr = np.empty((B, H4))
    xt_arr = np.empty((B, In))
    cdef double[:, ::1] dh = dh_arr
    cdef double[:, ::1] dc = dc_arr
    cdef double[:, ::1] da = da_arr
    cdef double[:, ::1] xt = xt_arr

    cdef int t, i, j
    cdef double f, u, cand, o, tc, do, dcv
    with nogil:
        for t in range(z - 1, -1, -1):
            for i in range(B):
                for j in range(H):
                    f = gates[t, i, j]
                    u = gates[t, i, H + j]
                    cand = gates[t, i, 2 * H + j]
                    o = gates[t, i, 3 * H + j]
                    tc = tanh_cell[t, i, j]
                    do = dh[i, j] * tc
                    if t == z - 1:
                        do = do + d_out_final[i, j]
                    dcv = dc[i, j] + dh[i, j] * o * (1.0 - tc * tc)
                    if t > 0:
                        da[i, j] = dcv * cell[t - 1, i, j] * f * (1.0 - f)
                    else:
                        da[i, j] = 0.0
                    da[i, H + j] = dcv * cand * u * (1.0 - u)
                    da[i, 2 * H + j] = dcv * u * (1.0 - cand * cand)
                    da[i, 3 * H + j] = do * o * (1.0 - o)
                    dc[i, j] = dcv * f
                for j in range(In):
                    xt[i, j] = xs[i, t, j]
            if t > 0:
                # d_wh += da^T @ hidden[t-1]
                _gemm(b'N', b'T', H, H4, B, 1.0, &hidden[t - 1, 0, 0], H,
                      &da[0, 0], H4, 1.0, &d_wh[0, 0], H)
            # d_wx += da^T @ x_t
            _gemm(b'N', b'T', In, H4, B, 1.0, &xt[0, 0], In,
                  &da[0, 0], H4, 1.0, &d_wx[0, 0], In)
            for j in range(H4):
                for i in range(B):
                    d_b[j] += da[i, j]
            # dh = da @ w_h2
            _gemm(b'N', b'N', H, B, H4, 1.0, &w_h2[0, 0], H,
                  &da[0, 0], H4, 0.0, &dh[0, 0], H)
    return d_wh_arr, d_wx_arr, d_b_arr
