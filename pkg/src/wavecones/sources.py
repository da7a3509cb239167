"""Right-hand-side catalogue for the linear solver and estimate certification.

Sources are declared in mode space: each entry lists (l, m) components with a
closed-form envelope a_lm(t, r), so the solver needs no sphere projection and
the retarded-potential oracle can still evaluate the physical field
F(t, y) = sum a_lm(t, |y|) Y_lm(y/|y|) anywhere.

Every evaluator is masked to the declared support |x| <= t + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import GridError, _real_harmonic_tables, mode_index, n_modes


def bump(x):
    """C^3 polynomial bump (1 - x^2)^4 on |x| < 1, zero outside."""
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    u = x[inside]
    y[inside] = (1.0 - u * u) ** 4
    return y


def _shifted_bump(center, width):
    def f(t, r):
        return bump((r - center) / width)

    return f


@dataclass
class SourceSpec:
    """A declared right-hand side F(t, r, omega).

    mode_envelopes maps (l, m) to a vectorized callable (t, r) -> values;
    t and r broadcast.  support_radius(t) certifies F = 0 for r beyond it;
    the mask is enforced on every evaluation unless masked=False (test
    sources such as the uniform Kirchhoff check disable it deliberately).
    """

    source_id: str
    mode_envelopes: dict
    kind: str = "closed-form"
    support_radius: Callable[[float], float] = field(default=lambda t: t + 1.0)
    time_support: tuple | None = None
    radial_support: float | None = None
    masked: bool = True

    @property
    def modes(self):
        return sorted(self.mode_envelopes.keys())

    @property
    def max_degree(self) -> int:
        return max((l for l, _ in self.modes), default=0)

    def _mask(self, t, r, values):
        if not self.masked:
            return values
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        return np.where(r <= t + 1.0, values, 0.0)

    def mode_values(self, l: int, m: int, t, r) -> np.ndarray:
        """Masked envelope a_lm on the (t, r) broadcast product."""
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        if t.ndim == 1 and r.ndim == 1:
            t = t[:, None]
        shape = np.broadcast_shapes(t.shape, r.shape)
        env = self.mode_envelopes.get((l, m))
        if env is None:
            return np.zeros(shape)
        vals = np.broadcast_to(np.asarray(env(t, r), dtype=float), shape)
        return self._mask(t, r, vals)

    def mode_table(self, grid, times=None) -> np.ndarray:
        """Dense (n_times, n_modes, n_r) table on a grid."""
        times = grid.times if times is None else np.asarray(times)
        out = np.zeros((times.size, n_modes(grid.lmax), grid.n_r))
        for (l, m) in self.modes:
            if l > grid.lmax:
                raise GridError(
                    f"source degree l={l} exceeds grid band limit {grid.lmax}"
                )
            out[:, mode_index(l, m), :] = self.mode_values(l, m, times, grid.r)
        return out

    def eval_physical(self, t: float, points: np.ndarray) -> np.ndarray:
        """F(t, y) at Cartesian points, shape (n, 3) -> (n,)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(points, axis=1)
        safe_r = np.where(r > 0, r, 1.0)
        theta = np.arccos(np.clip(points[:, 2] / safe_r, -1.0, 1.0))
        phi = np.arctan2(points[:, 1], points[:, 0])
        lmax = self.max_degree
        ytab, _, _ = _real_harmonic_tables(lmax, np.cos(theta), phi)
        total = np.zeros(points.shape[0])
        for (l, m), env in self.mode_envelopes.items():
            vals = np.broadcast_to(np.asarray(env(float(t), r), dtype=float), r.shape)
            total = total + vals * ytab[mode_index(l, m)]
        return self._mask(float(t), r, total)

    @classmethod
    def from_table(cls, source_id, grid, times, tables, **kw):
        """Tabulated source: per-mode samples, linear interpolation in t.

        tables maps (l, m) -> array (n_times, n_r) on grid.r.
        """
        times = np.asarray(times, dtype=float)

        def make_env(tab):
            tab = np.asarray(tab, dtype=float)

            def env(t, r):
                t_arr = np.asarray(t, dtype=float)
                rows = np.empty(t_arr.shape + (grid.n_r,))
                flat = np.atleast_1d(t_arr).ravel()
                interp = np.empty((flat.size, grid.n_r))
                for i, tv in enumerate(flat):
                    k = np.clip(np.searchsorted(times, tv) - 1, 0, times.size - 2)
                    w = (tv - times[k]) / (times[k + 1] - times[k])
                    w = min(max(w, 0.0), 1.0)
                    interp[i] = (1 - w) * tab[k] + w * tab[k + 1]
                rows = interp.reshape(t_arr.shape + (grid.n_r,)) if t_arr.ndim else interp[0]
                return rows

            return env

        envs = {lm: make_env(tab) for lm, tab in tables.items()}
        return cls(source_id=source_id, mode_envelopes=envs, kind="tabulated", **kw)


def _sep(l, m, r_center, r_width, t_center, t_width, amp=1.0, omega=None):
    def env(t, r):
        val = amp * bump((r - r_center) / r_width) * bump((t - t_center) / t_width)
        if omega is not None:
            val = val * np.sin(omega * t)
        return val

    return (l, m), env


def _cone(l, m, frac_center, frac_width, t_center, t_width, amp=1.0):
    # support hugs the cone: r/(t+1) restricted to a band
    def env(t, r):
        u = r / (t + 1.0)
        return amp * bump((u - frac_center) / frac_width) * bump((t - t_center) / t_width)

    return (l, m), env


def source_catalogue() -> dict:
    """The 20 certification sources, all time-compact within t <= 4."""
    entries = {}

    def add(source_id, *mode_envs, time_support=None, radial_support=None):
        entries[source_id] = SourceSpec(
            source_id=source_id,
            mode_envelopes=dict(mode_envs),
            time_support=time_support,
            radial_support=radial_support,
        )

    add("bump", _sep(0, 0, 0.4, 0.35, 1.0, 1.0), time_support=(0.0, 2.0),
        radial_support=0.75)
    add("bump-wide", _sep(0, 0, 0.0, 0.9, 1.5, 1.5), time_support=(0.0, 3.0),
        radial_support=0.9)
    add("bump-offcenter", _sep(0, 0, 0.6, 0.3, 2.0, 1.2), time_support=(0.8, 3.2),
        radial_support=0.9)
    add("shell", _sep(0, 0, 0.7, 0.2, 1.0, 0.8), time_support=(0.2, 1.8),
        radial_support=0.9)
    add("osc-bump", _sep(0, 0, 0.5, 0.4, 2.0, 2.0, omega=3.0),
        time_support=(0.0, 4.0), radial_support=0.9)
    add("late-bump", _sep(0, 0, 0.5, 0.45, 3.0, 1.0), time_support=(2.0, 4.0),
        radial_support=0.95)
    add("cone-half", _cone(0, 0, 0.5, 0.5, 1.5, 1.4), time_support=(0.1, 2.9))
    add("cone-edge", _cone(0, 0, 0.8, 0.2, 1.5, 1.4), time_support=(0.1, 2.9))
    add("y10-bump", _sep(1, 0, 0.5, 0.5, 1.2, 1.0), time_support=(0.2, 2.2),
        radial_support=1.0)
    add("y11-shell", _sep(1, 1, 0.65, 0.25, 1.2, 1.0), time_support=(0.2, 2.2),
        radial_support=0.9)
    add("y1m1-osc", _sep(1, -1, 0.5, 0.4, 2.0, 1.8, omega=2.0),
        time_support=(0.2, 3.8), radial_support=0.9)
    add("y20-bump", _sep(2, 0, 0.55, 0.35, 1.5, 1.2), time_support=(0.3, 2.7),
        radial_support=0.9)
    add("y21-cone", _cone(2, 1, 0.5, 0.5, 2.0, 1.6), time_support=(0.4, 3.6))
    add("y2m2-osc", _sep(2, -2, 0.6, 0.3, 1.8, 1.5, omega=4.0),
        time_support=(0.3, 3.3), radial_support=0.9)
    add("y30-bump", _sep(3, 0, 0.5, 0.4, 1.0, 0.9), time_support=(0.1, 1.9),
        radial_support=0.9)
    add("y33-shell", _sep(3, 3, 0.7, 0.25, 1.4, 1.1), time_support=(0.3, 2.5),
        radial_support=0.95)
    add("mix-012",
        _sep(0, 0, 0.4, 0.35, 1.0, 1.0),
        _sep(1, 0, 0.55, 0.3, 1.4, 1.0, amp=0.7),
        _sep(2, 1, 0.6, 0.3, 1.8, 1.0, amp=0.5),
        time_support=(0.0, 2.8), radial_support=0.9)
    add("mix-osc",
        _sep(0, 0, 0.5, 0.4, 2.0, 1.8, omega=3.0),
        _sep(2, -1, 0.6, 0.3, 2.0, 1.5, amp=0.6, omega=2.0),
        time_support=(0.2, 3.8), radial_support=0.9)
    add("flash", _sep(0, 0, 0.4, 0.4, 0.5, 0.5), time_support=(0.0, 1.0),
        radial_support=0.8)
    add("flash-y1", _sep(1, 1, 0.5, 0.3, 0.5, 0.5), time_support=(0.0, 1.0),
        radial_support=0.8)
    return entries


def uniform_test_source() -> SourceSpec:
    """F = 1 / Y_00 coefficient everywhere, mask disabled.

    Synthesizes the constant field F(t, x) = 1, so the retarded potential is
    exactly t^2 / 2.  Only for oracle calibration tests.
    """
    c00 = float(np.sqrt(4.0 * np.pi))

    def env(t, r):
        shape = np.broadcast_shapes(np.shape(t), np.shape(r))
        return np.full(shape, c00)

    return SourceSpec(
        source_id="uniform-unmasked",
        mode_envelopes={(0, 0): env},
        masked=False,
    )


def get_source(source_id: str) -> SourceSpec:
    cat = source_catalogue()
    if source_id in cat:
        return cat[source_id]
    if source_id == "uniform-unmasked":
        return uniform_test_source()
    raise GridError(
        f"unknown source '{source_id}'; catalogue ids: {sorted(cat)}"
    )
