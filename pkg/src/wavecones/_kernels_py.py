"""Pure-NumPy stepping kernels: the fallback backend.

The scheme advances v = r * u per mode with a leapfrog step in which the
diagonal centrifugal term l(l+1)/r^2 is time-averaged over (n+1, n-1).
That keeps the step explicit (a diagonal division), second order and
nondissipative, while the stability limit stays dt <= dr from the radial
second difference alone; a fully explicit treatment of the centrifugal
term would force dt ~ dr / l near the origin.

Update rule, with inv = 1 / (1 + dt^2 pot / 2):

    v_next = inv * (2 v + dt^2 (D_rr v + src)) - v_prev

Ghost handling: v(-dr/2) = parity * v(dr/2) with parity = (-1)^(l+1)
(v = r*u inherits this parity from the mode's r^l behaviour), and a
homogeneous Dirichlet value beyond r_max, which the support cone never
reaches on a valid grid.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def laplacian(v: np.ndarray, dr: float, parity) -> np.ndarray:
    """Second radial difference with parity ghost at the origin."""
    v = np.asarray(v, dtype=float)
    parity = np.asarray(parity, dtype=float)
    idr2 = 1.0 / (dr * dr)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]) * idr2
    out[..., 0] = (v[..., 1] - (2.0 - parity) * v[..., 0]) * idr2
    out[..., -1] = (-2.0 * v[..., -1] + v[..., -2]) * idr2
    return out


def step_batch(v_prev, v_curr, inv_fac, src, parity, dt, dr):
    """One leapfrog step for a batch of modes, shapes (n_modes, n_r)."""
    dt2 = dt * dt
    lap = laplacian(v_curr, dr, np.asarray(parity, dtype=float)[:, None])
    return inv_fac * (2.0 * v_curr + dt2 * (lap + src)) - v_prev


def evolve_mode(v_prev, v_curr, inv_fac, parity, src, vt0, dt, dr, slice_every):
    """Full time loop for one mode with a precomputed source table.

    src has shape (n_steps + 1, n_r); src[n] drives the step from t_n.
    Returns (v_slices, vt_slices, bad_step, bad_index): slices are stored
    every `slice_every` steps (slice 0 holds the initial data and vt0), the
    stored time derivative is the centered difference, and bad_step is the
    first step index with a non-finite value (-1 if none) with bad_index
    its radial location.
    """
    v_prev = np.array(v_prev, dtype=float)
    v_curr = np.array(v_curr, dtype=float)
    n_steps = src.shape[0] - 1
    n_r = v_prev.shape[0]
    if n_steps % slice_every != 0:
        raise ValueError("slice_every must divide the step count")
    n_slices = n_steps // slice_every + 1
    v_out = np.full((n_slices, n_r), np.nan)
    vt_out = np.full((n_slices, n_r), np.nan)
    v_out[0] = v_prev
    vt_out[0] = vt0
    dt2 = dt * dt
    par = float(parity)
    bad_step, bad_index = -1, -1
    for n in range(1, n_steps + 1):
        lap = laplacian(v_curr, dr, par)
        v_next = inv_fac * (2.0 * v_curr + dt2 * (lap + src[n])) - v_prev
        finite = np.isfinite(v_next)
        if not finite.all():
            bad_step = n + 1
            bad_index = int(np.argmin(finite))
            break
        if n % slice_every == 0:
            k = n // slice_every
            v_out[k] = v_curr
            vt_out[k] = (v_next - v_prev) / (2.0 * dt)
        v_prev, v_curr = v_curr, v_next
    return v_out, vt_out, bad_step, bad_index
