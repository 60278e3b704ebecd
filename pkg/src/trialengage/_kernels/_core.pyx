# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Reference semantics live in ``_fallback.py``; the two must stay in lockstep.
Outputs are integer arrays only, so results are bit-identical to the fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def simulate_columns(double[:, ::1] uniforms, double[::1] x_cdf,
                     double[::1] u_given_x, double p_v, bint has_v,
                     double[:, ::1] p_s, double e_trial,
                     double[:, ::1] p_a_usual, double[:, :, :, ::1] mean_table,
                     double delta_v, bint shared):
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t ncat = x_cdf.shape[0]
    xi_arr = np.empty(n, dtype=np.int64)
    u_arr = np.empty(n, dtype=np.int8)
    v_arr = np.empty(n, dtype=np.int8)
    s_arr = np.empty(n, dtype=np.int8)
    a0_arr = np.empty(n, dtype=np.int8)
    a1_arr = np.empty(n, dtype=np.int8)
    a_arr = np.empty(n, dtype=np.int8)
    y00_arr = np.empty(n, dtype=np.int8)
    y01_arr = np.empty(n, dtype=np.int8)
    y10_arr = np.empty(n, dtype=np.int8)
    y11_arr = np.empty(n, dtype=np.int8)
    y_arr = np.empty(n, dtype=np.int8)

    cdef cnp.int64_t[::1] xi = xi_arr
    cdef cnp.int8_t[::1] u = u_arr
    cdef cnp.int8_t[::1] v = v_arr
    cdef cnp.int8_t[::1] s = s_arr
    cdef cnp.int8_t[::1] a0 = a0_arr
    cdef cnp.int8_t[::1] a1 = a1_arr
    cdef cnp.int8_t[::1] a = a_arr
    cdef cnp.int8_t[::1] y00 = y00_arr
    cdef cnp.int8_t[::1] y01 = y01_arr
    cdef cnp.int8_t[::1] y10 = y10_arr
    cdef cnp.int8_t[::1] y11 = y11_arr
    cdef cnp.int8_t[::1] y = y_arr

    cdef Py_ssize_t i, j, uu, vv, ss, aa
    cdef double ux, shift, e0
    for i in range(n):
        ux = uniforms[i, 0]
        j = 0
        while j < ncat - 1 and ux >= x_cdf[j]:
            j += 1
        xi[i] = j
        uu = 1 if uniforms[i, 1] < u_given_x[j] else 0
        u[i] = <cnp.int8_t> uu
        vv = 1 if (has_v and uniforms[i, 2] < p_v) else 0
        v[i] = <cnp.int8_t> vv
        ss = 1 if uniforms[i, 3] < p_s[j, vv] else 0
        s[i] = <cnp.int8_t> ss
        a1[i] = 1 if uniforms[i, 4] < e_trial else 0
        a0[i] = 1 if uniforms[i, 5] < p_a_usual[j, uu] else 0

        shift = delta_v * vv
        if shared:
            e0 = uniforms[i, 6]
            y00[i] = 1 if e0 <= mean_table[0, 0, j, uu] + shift else 0
            y01[i] = 1 if e0 <= mean_table[0, 1, j, uu] + shift else 0
            y10[i] = 1 if e0 <= mean_table[1, 0, j, uu] + shift else 0
            y11[i] = 1 if e0 <= mean_table[1, 1, j, uu] + shift else 0
        else:
            y00[i] = 1 if uniforms[i, 6] <= mean_table[0, 0, j, uu] + shift else 0
            y01[i] = 1 if uniforms[i, 7] <= mean_table[0, 1, j, uu] + shift else 0
            y10[i] = 1 if uniforms[i, 8] <= mean_table[1, 0, j, uu] + shift else 0
            y11[i] = 1 if uniforms[i, 9] <= mean_table[1, 1, j, uu] + shift else 0

        aa = a1[i] if ss == 1 else a0[i]
        a[i] = <cnp.int8_t> aa
        if ss == 1:
            y[i] = y11[i] if aa == 1 else y10[i]
        else:
            y[i] = y01[i] if aa == 1 else y00[i]

    return (xi_arr, u_arr, v_arr, s_arr, a0_arr, a1_arr, a_arr,
            y00_arr, y01_arr, y10_arr, y11_arr, y_arr)


cdef inline void _accumulate(cnp.int64_t[:, ::1] out, cnp.int64_t c,
                             cnp.int8_t si, cnp.int8_t ai, cnp.int8_t yi,
                             cnp.uint8_t ci) nogil:
    out[c, 0] += 1
    if si == 1:
        if ai == 0:
            out[c, 1] += 1
            if yi == 1:
                out[c, 3] += 1
        elif ai == 1:
            out[c, 2] += 1
            if yi == 1:
                out[c, 4] += 1
    else:
        out[c, 5] += 1
        if ci != 0:
            out[c, 6] += 1
            if yi == 1:
                out[c, 7] += 1


def cell_counts(cnp.int64_t[::1] cell, cnp.int8_t[::1] s, cnp.int8_t[::1] a,
                cnp.int8_t[::1] y, cnp.uint8_t[::1] control, Py_ssize_t n_cells):
    out_arr = np.zeros((n_cells, 8), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, n = cell.shape[0]
    for i in range(n):
        _accumulate(out, cell[i], s[i], a[i], y[i], control[i])
    return out_arr


def resampled_cell_counts(cnp.int64_t[::1] cell, cnp.int8_t[::1] s,
                          cnp.int8_t[::1] a, cnp.int8_t[::1] y,
                          cnp.uint8_t[::1] control, cnp.int64_t[::1] idx,
                          Py_ssize_t n_cells):
    out_arr = np.zeros((n_cells, 8), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, r, n = idx.shape[0]
    for i in range(n):
        r = idx[i]
        _accumulate(out, cell[r], s[r], a[r], y[r], control[r])
    return out_arr
