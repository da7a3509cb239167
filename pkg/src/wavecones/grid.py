"""Radial grid, sphere quadrature and real spherical-harmonic transforms.

All fields live as mode coefficients u_lm(t, r) on a cell-centered radial
grid; physical values on the sphere exist only transiently at quadrature
nodes.  The sphere quadrature is Gauss-Legendre in cos(theta) crossed with a
uniform phi grid, which integrates products Y_lm * Y_l'm' exactly for
degrees up to the band limit.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, lpmv, roots_legendre

MAX_CFL = 0.9


class GridError(ValueError):
    """Invalid grid or quadrature configuration."""


def n_modes(lmax: int) -> int:
    return (lmax + 1) ** 2


def mode_list(lmax: int) -> list[tuple[int, int]]:
    """Flat (l, m) ordering used everywhere: l ascending, m from -l to l."""
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def mode_index(l: int, m: int) -> int:
    if abs(m) > l:
        raise GridError(f"|m|={abs(m)} exceeds degree l={l}")
    return l * l + l + m


def mode_degrees(lmax: int) -> np.ndarray:
    """Per-flat-index degree l, shape (n_modes,)."""
    return np.array([l for l, _ in mode_list(lmax)], dtype=np.int64)


def _real_harmonic_tables(lmax, x, phi):
    """Value and tangential-derivative tables of real orthonormal harmonics.

    Returns (Y, dY_dtheta, dY_dphi_over_sin), each (n_modes, n_nodes), at
    nodes with cos(theta) = x and azimuth phi.  Real convention:
    sqrt(2) * N_lm * P_l^m(x) * cos(m phi) for m > 0 and sin(|m| phi) for
    m < 0; Condon-Shortley phase kept from lpmv (orthonormality is
    unaffected).
    """
    sin_theta = np.sqrt(1.0 - x * x)
    nm = n_modes(lmax)
    y = np.zeros((nm, x.size))
    dth = np.zeros_like(y)
    dph = np.zeros_like(y)
    for l in range(lmax + 1):
        for mm in range(0, l + 1):
            lognorm = 0.5 * (
                math.log((2 * l + 1) / (4.0 * math.pi))
                + gammaln(l - mm + 1)
                - gammaln(l + mm + 1)
            )
            norm = math.exp(lognorm) * (math.sqrt(2.0) if mm > 0 else 1.0)
            p = lpmv(mm, l, x)
            # d/dtheta P_l^m(cos theta) via (1-x^2) dP/dx = (l+m) P_{l-1}^m - l x P_l^m
            pm1 = lpmv(mm, l - 1, x) if l >= 1 else np.zeros_like(x)
            dp_dtheta = -((l + mm) * pm1 - l * x * p) / sin_theta
            for m in ([0] if mm == 0 else [mm, -mm]):
                k = mode_index(l, m)
                trig = np.cos(mm * phi) if m >= 0 else np.sin(mm * phi)
                dtrig = -mm * np.sin(mm * phi) if m >= 0 else mm * np.cos(mm * phi)
                y[k] = norm * p * trig
                dth[k] = norm * dp_dtheta * trig
                dph[k] = norm * p * dtrig / sin_theta
    return y, dth, dph


@dataclass(frozen=True)
class SphereQuadrature:
    """Product quadrature on S^2 exact for harmonic products up to lmax.

    (lmax+1) Gauss-Legendre nodes in cos(theta) x (2*lmax+1) uniform phi
    nodes; weights sum to 4*pi.
    """

    lmax: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    ymat: np.ndarray
    grad_theta: np.ndarray
    grad_phi: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.weights.size

    @property
    def n_modes(self) -> int:
        return n_modes(self.lmax)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Mode coefficients of nodal samples; last axis must be nodes."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.n_nodes:
            raise GridError(
                f"expected {self.n_nodes} sphere nodes, got {values.shape[-1]}"
            )
        bad = ~np.isfinite(values)
        if bad.any():
            where = np.argwhere(bad)[0]
            raise GridError(f"non-finite sample at index {tuple(where)}")
        return (values * self.weights) @ self.ymat.T

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal samples of mode coefficients; last axis must be modes."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != self.n_modes:
            raise GridError(
                f"expected {self.n_modes} mode coefficients, got {coeffs.shape[-1]}"
            )
        return coeffs @ self.ymat

    def synthesize_gradient(self, coeffs: np.ndarray):
        """Tangential gradient components (d_theta, d_phi/sin) at nodes."""
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs @ self.grad_theta, coeffs @ self.grad_phi

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        return np.asarray(values) @ self.weights

    def nodes_cartesian(self) -> np.ndarray:
        """Unit vectors of the quadrature nodes, shape (n_nodes, 3)."""
        st, ct = np.sin(self.theta), np.cos(self.theta)
        return np.stack(
            [st * np.cos(self.phi), st * np.sin(self.phi), ct], axis=-1
        )


@lru_cache(maxsize=32)
def sphere_quadrature(lmax: int) -> SphereQuadrature:
    if lmax < 0:
        raise GridError("lmax must be >= 0")
    x1d, w1d = roots_legendre(lmax + 1)
    nphi = 2 * lmax + 1
    phi1d = 2.0 * math.pi * np.arange(nphi) / nphi
    x = np.repeat(x1d, nphi)
    phi = np.tile(phi1d, lmax + 1)
    w = np.repeat(w1d, nphi) * (2.0 * math.pi / nphi)
    y, dth, dph = _real_harmonic_tables(lmax, x, phi)
    return SphereQuadrature(
        lmax=lmax,
        theta=np.arccos(x),
        phi=phi,
        weights=w,
        ymat=y,
        grad_theta=dth,
        grad_phi=dph,
    )


def sobolev_sphere_norm(coeffs: np.ndarray, k: int, lmax: int) -> float | np.ndarray:
    """Spectral H^k(S^2) norm: (sum (1 + l(l+1))^k |c_lm|^2)^(1/2), k in {0,1,2}.

    Accepts stacked coefficient arrays; modes on the last axis.
    """
    if k not in (0, 1, 2):
        raise GridError(f"sphere Sobolev order k={k} not in {{0, 1, 2}}")
    coeffs = np.asarray(coeffs, dtype=float)
    l = mode_degrees(lmax).astype(float)
    mult = (1.0 + l * (l + 1.0)) ** k
    return np.sqrt(np.sum(mult * coeffs * coeffs, axis=-1))


@dataclass(frozen=True)
class Grid:
    """Space-time grid sized so the support cone never reaches the boundary.

    Radial samples sit at cell centers r_j = (j + 1/2) * dr, which keeps the
    centrifugal term l(l+1)/r^2 finite without special-casing the origin.
    The time step is cfl * dr (rounded down so the horizon lands on a step).
    """

    r_max: float
    dr: float
    t_max: float
    lmax: int
    cfl: float = MAX_CFL

    def __post_init__(self):
        if self.dr <= 0 or self.t_max <= 0 or self.r_max <= 0:
            raise GridError("r_max, dr and t_max must be positive")
        if not 0 < self.cfl <= MAX_CFL:
            raise GridError(f"cfl must be in (0, {MAX_CFL}], got {self.cfl}")
        if self.lmax < 0:
            raise GridError("lmax must be >= 0")
        needed = self.t_max + 1.0 + 2.0 * self.dr
        if self.r_max < needed:
            raise GridError(
                f"r_max={self.r_max} too small: support cone |x| <= t+1 needs "
                f"r_max >= t_max + 1 + 2*dr = {needed}"
            )

    @property
    def n_r(self) -> int:
        return int(round(self.r_max / self.dr))

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def n_steps(self) -> int:
        # rounded up to a multiple of 16 so refined grids share a time
        # lattice (probe times and slice strides then align exactly)
        raw = math.ceil(self.t_max / (self.cfl * self.dr) - 1e-12)
        return 16 * math.ceil(raw / 16)

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def sphere(self) -> SphereQuadrature:
        return sphere_quadrature(self.lmax)

    @property
    def n_modes(self) -> int:
        return n_modes(self.lmax)

    def refined(self, factor: int = 2) -> "Grid":
        """Same domain with dr (and hence dt) divided by `factor`."""
        return Grid(self.r_max, self.dr / factor, self.t_max, self.lmax, self.cfl)

    def stride_for(self, target: int) -> int:
        """Largest divisor of n_steps not exceeding target (slice stride)."""
        target = max(1, min(int(target), self.n_steps))
        for k in range(target, 0, -1):
            if self.n_steps % k == 0:
                return k
        return 1

    def meta(self) -> dict:
        return {
            "r_max": self.r_max,
            "dr": self.dr,
            "t_max": self.t_max,
            "dt": self.dt,
            "lmax": self.lmax,
            "cfl": self.cfl,
            "n_r": self.n_r,
            "n_steps": self.n_steps,
        }

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser, section: str = "grid") -> "Grid":
        sec = cfg[section]
        return cls(
            r_max=sec.getfloat("r_max"),
            dr=sec.getfloat("dr"),
            t_max=sec.getfloat("t_max"),
            lmax=sec.getint("lmax"),
            cfl=sec.getfloat("cfl", fallback=MAX_CFL),
        )


@dataclass
class RadialModeField:
    """Per-(l, m) samples u_lm(t_k, r_j) of a field expanded in harmonics.

    values has shape (n_times, n_modes, n_r); times holds the stored slice
    times (a subset of grid steps when a slice stride is used).
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    blown_up: bool = False
    blowup_location: tuple | None = None

    def __post_init__(self):
        expect = (len(self.times), self.grid.n_modes, self.grid.n_r)
        if self.values.shape != expect:
            raise GridError(f"values shape {self.values.shape} != {expect}")

    def validate_finite(self):
        if self.blown_up:
            return
        bad = ~np.isfinite(self.values)
        if bad.any():
            where = tuple(int(i) for i in np.argwhere(bad)[0])
            raise GridError(f"non-finite sample at (time, mode, r) index {where}")

    def slice_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        spacing = self.times[1] - self.times[0] if len(self.times) > 1 else self.grid.dt
        if abs(self.times[k] - t) > 0.5 * spacing + 1e-12:
            raise GridError(f"time {t} not among stored slices")
        return k

    def at_nodes(self, k: int) -> np.ndarray:
        """Physical samples at (r_j, sphere nodes) for stored slice k."""
        return np.einsum("mr,mn->rn", self.values[k], self.grid.sphere.ymat)

    def to_csv(self, path, mode_subset=None):
        """Columns: l, m, t, r, value."""
        modes = mode_list(self.grid.lmax)
        keep = range(len(modes)) if mode_subset is None else [
            mode_index(l, m) for l, m in mode_subset
        ]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["l", "m", "t", "r", "value"])
            r = self.grid.r
            for k, t in enumerate(self.times):
                for q in keep:
                    l, m = modes[q]
                    for j in range(self.grid.n_r):
                        wr.writerow([l, m, repr(float(t)), repr(float(r[j])),
                                     repr(float(self.values[k, q, j]))])
