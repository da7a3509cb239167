# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernels: the hot leapfrog loops.

Mirrors _kernels_py semantics exactly (same arithmetic expression order);
see that module for the scheme notes.
"""

from libc.math cimport isfinite

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def step_batch(double[:, ::1] v_prev, double[:, ::1] v_curr,
               double[:, ::1] inv_fac, double[:, ::1] src,
               double[::1] parity, double dt, double dr):
    """One leapfrog step for a batch of modes, shapes (n_modes, n_r)."""
    cdef Py_ssize_t nm = v_curr.shape[0]
    cdef Py_ssize_t nr = v_curr.shape[1]
    out = np.empty((nm, nr), dtype=np.float64)
    cdef double[:, ::1] v_next = out
    cdef double idr2 = 1.0 / (dr * dr)
    cdef double dt2 = dt * dt
    cdef Py_ssize_t q, j
    cdef double lap, vm
    for q in range(nm):
        for j in range(nr):
            if j == 0:
                lap = (v_curr[q, 1] - (2.0 - parity[q]) * v_curr[q, 0]) * idr2
            elif j == nr - 1:
                lap = (-2.0 * v_curr[q, j] + v_curr[q, j - 1]) * idr2
            else:
                lap = (v_curr[q, j + 1] - 2.0 * v_curr[q, j] + v_curr[q, j - 1]) * idr2
            v_next[q, j] = inv_fac[q, j] * (2.0 * v_curr[q, j]
                                            + dt2 * (lap + src[q, j])) - v_prev[q, j]
    return out


def evolve_mode(double[::1] v_prev_in, double[::1] v_curr_in,
                double[::1] inv_fac, double parity,
                double[:, ::1] src, double[::1] vt0,
                double dt, double dr, Py_ssize_t slice_every):
    """Full time loop for one mode; see the python twin for the contract."""
    cdef Py_ssize_t n_steps = src.shape[0] - 1
    cdef Py_ssize_t nr = v_prev_in.shape[0]
    if n_steps % slice_every != 0:
        raise ValueError("slice_every must divide the step count")
    cdef Py_ssize_t n_slices = n_steps // slice_every + 1
    v_out_arr = np.full((n_slices, nr), np.nan)
    vt_out_arr = np.full((n_slices, nr), np.nan)
    cdef double[:, ::1] v_out = v_out_arr
    cdef double[:, ::1] vt_out = vt_out_arr
    work = np.empty((3, nr), dtype=np.float64)
    cdef double[:, ::1] buf = work
    cdef double idr2 = 1.0 / (dr * dr)
    cdef double dt2 = dt * dt
    cdef Py_ssize_t n, j, k, ip = 0, ic = 1, inext = 2, tmp
    cdef Py_ssize_t bad_step = -1, bad_index = -1
    cdef double lap, val
    for j in range(nr):
        buf[0, j] = v_prev_in[j]
        buf[1, j] = v_curr_in[j]
        v_out[0, j] = v_prev_in[j]
        vt_out[0, j] = vt0[j]
    for n in range(1, n_steps + 1):
        for j in range(nr):
            if j == 0:
                lap = (buf[ic, 1] - (2.0 - parity) * buf[ic, 0]) * idr2
            elif j == nr - 1:
                lap = (-2.0 * buf[ic, j] + buf[ic, j - 1]) * idr2
            else:
                lap = (buf[ic, j + 1] - 2.0 * buf[ic, j] + buf[ic, j - 1]) * idr2
            val = inv_fac[j] * (2.0 * buf[ic, j] + dt2 * (lap + src[n, j])) - buf[ip, j]
            buf[inext, j] = val
            if not isfinite(val) and bad_step < 0:
                bad_step = n + 1
                bad_index = j
        if bad_step >= 0:
            break
        if n % slice_every == 0:
            k = n // slice_every
            for j in range(nr):
                v_out[k, j] = buf[ic, j]
                vt_out[k, j] = (buf[inext, j] - buf[ip, j]) / (2.0 * dt)
        tmp = ip
        ip = ic
        ic = inext
        inext = tmp
    return v_out_arr, vt_out_arr, int(bad_step), int(bad_index)
