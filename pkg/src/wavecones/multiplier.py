"""Weighted light-cone multiplier, its exact divergence identity, and the
expansion inequality for the weight bracket.

The multiplier combines outgoing and incoming derivative directions with
weights (t+2+r)^s and (t+2-r)^s.  Multiplying the wave operator by it and
rearranging gives an algebraically exact divergence-form identity whose
residual must vanish to round-off on any smooth function; the checks here
evaluate every term from hand-coded closed-form derivatives, never finite
differences, so a nonzero residual means an algebra bug rather than
discretization error.

For functions with a single angular mode g(t, r) Y_lm the identity is
checked in sphere-integrated form: pure angular divergences drop out and
the tangential gradient square integrates to l(l+1) g^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridError


class DomainError(ValueError):
    """Input outside the validity region of a weight or identity."""


# ---------------------------------------------------------------------------
# weight parameters


@dataclass(frozen=True)
class WeightParams:
    """Exponent bundle (s, delta, alpha, p, theta, q) for the weighted norms.

    sigma and beta are derived from (theta, q) by the interpolation relations
    1/sigma = theta/2 and 1/beta = theta/q + (1-theta)/2.
    """

    s: float
    delta: float = 0.05
    alpha: float = 0.0
    p: float | None = None
    theta: float | None = None
    q: float = 4.0

    @property
    def sigma(self) -> float:
        if self.theta is None:
            raise DomainError("sigma requires theta")
        return 2.0 / self.theta

    @property
    def beta(self) -> float:
        if self.theta is None:
            raise DomainError("beta requires theta")
        return 1.0 / (self.theta / self.q + (1.0 - self.theta) / 2.0)

    def validate(self, final_path: bool = False):
        if not 1.0 < self.s < 2.0:
            raise DomainError(f"weight exponent s={self.s} must lie in (1, 2)")
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        if self.alpha < 0:
            raise DomainError("alpha must be >= 0")
        if self.theta is not None and not 0.0 < self.theta < 1.0:
            raise DomainError("theta must lie in (0, 1)")
        if self.q < 2.0:
            raise DomainError("q must be >= 2")
        if final_path and 1.0 + 2.0 * self.delta > self.s + 1e-12:
            raise DomainError(
                f"delta={self.delta} too large: 1 + 2*delta must not exceed s={self.s}"
            )
        return self


# ---------------------------------------------------------------------------
# weights and multiplier


def weight_eval(t, r, s, sign: str):
    """(t+2+r)^s for sign '+', (t+2-r)^s for sign '-'.

    The '-' branch requires r <= t+2; on the support region r <= t+1 its
    value is >= 1.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(t < 0) or np.any(r < 0):
        raise DomainError("weights are defined for t >= 0, r >= 0")
    if sign == "+":
        return (t + 2.0 + r) ** s
    if sign == "-":
        base = t + 2.0 - r
        if np.any(base < 0):
            raise DomainError("weight base t+2-r negative: r > t+2")
        return base**s
    raise DomainError(f"sign must be '+' or '-', got {sign!r}")


def apply_multiplier(phi_t, phi_r, phi, t, r, s):
    """X phi = (t+2+r)^s (phi_t + phi_r + phi/r) + (t+2-r)^s (phi_t - phi_r - phi/r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("multiplier needs r > 0 (phi/r term)")
    wp = weight_eval(t, r, s, "+")
    wm = weight_eval(t, r, s, "-")
    out = phi_t + phi_r + phi / r
    inc = phi_t - phi_r - phi / r
    return wp * out + wm * inc


# ---------------------------------------------------------------------------
# the weight-bracket expansion inequality


def taylor_gap(t, r, s):
    """(t+2-(s-1)r)(t+2+r)^(s-1) - (t+2-r)^(s-1)(t+2+(s-1)r), stably.

    Valid for 1 <= s <= 2 and 0 <= r <= t+1, where the gap is >= 0 with
    exact zeros on the faces r = 0 and s = 1 (and s = 2).  Evaluated via
    gap = (t+2)^s (1-rho)^u (1+u rho) expm1(2[u atanh(rho) - atanh(u rho)])
    with rho = r/(t+2), u = s-1, which avoids the cancellation of the two
    nearly equal products and returns exact zeros on the faces.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s < 1.0) or np.any(s > 2.0):
        raise DomainError("taylor_gap requires 1 <= s <= 2")
    if np.any(r < 0) or np.any(r > t + 1.0):
        raise DomainError("taylor_gap requires 0 <= r <= t+1")
    rho = r / (t + 2.0)
    u = s - 1.0
    h = 2.0 * (u * np.arctanh(rho) - np.arctanh(u * rho))
    return (t + 2.0) ** s * (1.0 - rho) ** u * (1.0 + u * rho) * np.expm1(h)


def taylor_gap_direct(t, r, s):
    """Textbook two-product evaluation of the same gap (cancellation-prone)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return (t + 2.0 - (s - 1.0) * r) * (t + 2.0 + r) ** (s - 1.0) - (
        t + 2.0 - r
    ) ** (s - 1.0) * (t + 2.0 + (s - 1.0) * r)


def taylor_gap_sweep(n_samples: int, seed: int, t_max: float = 100.0) -> dict:
    """Random sweep of the gap over s in (1,2), t in [0, t_max], r in [0, t+1]."""
    rng = np.random.default_rng(seed)
    s = 1.0 + rng.random(n_samples)
    t = rng.random(n_samples) * t_max
    r = rng.random(n_samples) * (t + 1.0)
    gaps = taylor_gap(t, r, s)
    t_face = rng.random(1024) * t_max
    s_face = 1.0 + rng.random(1024)
    face_r0 = taylor_gap(t_face, np.zeros(1024), s_face)
    face_s1 = taylor_gap(t_face, rng.random(1024) * (t_face + 1.0), np.ones(1024))
    return {
        "samples": int(n_samples),
        "seed": int(seed),
        "t_max": float(t_max),
        "min_gap": float(gaps.min()),
        "max_gap": float(gaps.max()),
        "face_r0_max_abs": float(np.abs(face_r0).max()),
        "face_s1_max_abs": float(np.abs(face_s1).max()),
    }


# ---------------------------------------------------------------------------
# analytic test functions with exact derivatives


def _bump3(x):
    """(1-x^2)^4 with first and second derivatives, zero outside |x|<1."""
    x = np.asarray(x, dtype=float)
    b = np.zeros_like(x)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    u = x[inside]
    q = 1.0 - u * u
    b[inside] = q**4
    d1[inside] = -8.0 * u * q**3
    d2[inside] = -8.0 * q**3 + 48.0 * u * u * q**2
    return b, d1, d2


def _time_bump(center, width):
    def a(t):
        b, d1, d2 = _bump3((np.asarray(t, dtype=float) - center) / width)
        return b, d1 / width, d2 / width**2

    return a


def _time_osc_bump(omega, center, width):
    def a(t):
        t = np.asarray(t, dtype=float)
        b, d1, d2 = _bump3((t - center) / width)
        b1, b2 = d1 / width, d2 / width**2
        sn, cs = np.sin(omega * t), np.cos(omega * t)
        val = sn * b
        dv = omega * cs * b + sn * b1
        ddv = -omega * omega * sn * b + 2.0 * omega * cs * b1 + sn * b2
        return val, dv, ddv

    return a


@dataclass(frozen=True)
class TestFunction:
    """Catalogue entry with exact closed-form derivatives up to second order.

    Radial when degree == 0; otherwise represents g(t, r) Y_{lm}.  deriv
    returns (g, g_t, g_r, g_tt, g_tr, g_rr) on broadcast (t, r) input and
    zero_data marks entries with g(0, .) = g_t(0, .) = 0, usable as
    manufactured solutions for the zero-data solver.
    """

    name: str
    degree: int
    order: int
    deriv: Callable
    t_window: tuple
    zero_data: bool = False

    def __call__(self, t, r):
        return self.deriv(np.asarray(t, dtype=float), np.asarray(r, dtype=float))

    def wave_operator(self, t, r):
        """g_tt - g_rr - (2/r) g_r + l(l+1) g / r^2, the mode d'Alembertian."""
        g, gt, gr, gtt, gtr, grr = self(t, r)
        lam = self.degree * (self.degree + 1)
        r = np.asarray(r, dtype=float)
        return gtt - grr - 2.0 * gr / r + lam * g / (r * r)


def _separable(name, l, m, a, r_center, r_width, t_window, zero_data=False):
    def deriv(t, r):
        av, ad, add_ = a(t)
        b, b1, b2 = _bump3((r - r_center) / r_width)
        b1, b2 = b1 / r_width, b2 / r_width**2
        return (av * b, ad * b, av * b1, add_ * b, ad * b1, av * b2)

    return TestFunction(name, l, m, deriv, t_window, zero_data)


def _cone_adapted(name, l, m, a, frac_center, frac_width, t_window):
    def deriv(t, r):
        av, ad, add_ = a(t)
        tp1 = t + 1.0
        u = (r / tp1 - frac_center) / frac_width
        ur = 1.0 / (tp1 * frac_width)
        ut = -r / (tp1 * tp1 * frac_width)
        utt = 2.0 * r / (tp1**3 * frac_width)
        utr = -1.0 / (tp1 * tp1 * frac_width)
        b, b1, b2 = _bump3(u)
        g = av * b
        gt = ad * b + av * b1 * ut
        gr = av * b1 * ur
        gtt = add_ * b + 2.0 * ad * b1 * ut + av * (b2 * ut * ut + b1 * utt)
        gtr = ad * b1 * ur + av * (b2 * ut * ur + b1 * utr)
        grr = av * b2 * ur * ur
        return g, gt, gr, gtt, gtr, grr

    return TestFunction(name, l, m, deriv, t_window)


def _traveling(name, l, m, a, speed, offset, width, t_window):
    def deriv(t, r):
        av, ad, add_ = a(t)
        b, b1, b2 = _bump3((r - speed * t - offset) / width)
        b1, b2 = b1 / width, b2 / width**2
        g = av * b
        gt = ad * b - av * speed * b1
        gr = av * b1
        gtt = add_ * b - 2.0 * ad * speed * b1 + av * speed * speed * b2
        gtr = ad * b1 - av * speed * b2
        grr = av * b2
        return g, gt, gr, gtt, gtr, grr

    return TestFunction(name, l, m, deriv, t_window)


def test_function_catalogue() -> dict:
    """Radial and single-mode entries, smooth on r > 0, supported in r <= t+1."""
    entries = [
        _separable("r-sep-bump", 0, 0, _time_bump(2.0, 1.5), 0.5, 0.5, (0.5, 3.5)),
        _separable("r-sep-shell", 0, 0, _time_bump(1.2, 1.0), 0.7, 0.25, (0.2, 2.2)),
        _separable("r-osc", 0, 0, _time_osc_bump(3.0, 2.0, 1.8), 0.45, 0.4, (0.2, 3.8)),
        _cone_adapted("r-cone", 0, 0, _time_bump(1.5, 1.4), 0.5, 0.5, (0.1, 2.9)),
        _traveling("r-travel", 0, 0, _time_bump(2.5, 2.0), 0.4, 0.3, 0.3, (0.5, 4.5)),
        _separable("r-mms", 0, 0, _time_bump(1.2, 1.2), 0.45, 0.45, (0.0, 2.4),
                   zero_data=True),
        _separable("y10-sep", 1, 0, _time_bump(1.8, 1.4), 0.5, 0.5, (0.4, 3.2)),
        _cone_adapted("y21-cone", 2, 1, _time_bump(1.5, 1.4), 0.5, 0.5, (0.1, 2.9)),
        _separable("y3m2-shell", 3, -2, _time_bump(1.4, 1.1), 0.7, 0.25, (0.3, 2.5)),
        _separable("y20-mms", 2, 0, _time_bump(1.2, 1.2), 0.45, 0.45, (0.0, 2.4),
                   zero_data=True),
    ]
    return {tf.name: tf for tf in entries}


# ---------------------------------------------------------------------------
# the divergence-form identity


_PARTS = ("first", "second", "third", "combined")


def identity_terms(tf: TestFunction, t, r, s, part: str = "combined"):
    """Multiplier side and expanded divergence side of one identity part.

    Returns (lhs, terms) where terms is a dict of named addends whose sum
    must equal lhs exactly.  For degree >= 1 the expressions are the
    sphere-integrated forms: (grad_S2 phi)^2 -> l(l+1) g^2 and the pure
    angular divergences vanish.
    """
    if part not in _PARTS:
        raise DomainError(f"part must be one of {_PARTS}")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("identity checks need r > 0")
    g, gt, gr, gtt, gtr, grr = tf(t, r)
    lam = float(tf.degree * (tf.degree + 1))
    wp = (t + 2.0 + r) ** s
    wm = (t + 2.0 - r) ** s
    wp1 = (t + 2.0 + r) ** (s - 1.0)
    wm1 = (t + 2.0 - r) ** (s - 1.0)
    box = gtt - grr - 2.0 * gr / r + lam * g / (r * r)

    if part == "first":
        lhs = wp * (gt + gr) * r * r * box
        terms = {
            "transport_sq": -r * wp * (gt + gr) ** 2
            + wp * r * r * (gt + gr) * (gtt - grr),
            "pressure": r * wp * (gt * gt - gr * gr),
            "angular": wp * lam * g * (gt + gr),
        }
    elif part == "second":
        lhs = wm * (gt - gr) * r * r * box
        terms = {
            "transport_sq": r * wm * (gt - gr) ** 2
            + wm * r * r * (gt - gr) * (gtt - grr),
            "pressure": -r * wm * (gt * gt - gr * gr),
            "angular": wm * lam * g * (gt - gr),
        }
    elif part == "third":
        lhs = (wp - wm) * g * r * box
        common = r * (gt * gt - gr * gr) + r * g * (gtt - grr) - 2.0 * g * gr
        terms = {
            "outgoing_transport": wp * common,
            "incoming_transport": -wm * common,
            "pressure": -(wp - wm) * r * (gt * gt - gr * gr),
            "angular": (wp - wm) * lam * g * g / r,
        }
    else:
        out = gt + gr + g / r
        inc = gt - gr - g / r
        out_rate = gtt - grr + (gt - gr) / r + g / (r * r)
        inc_rate = gtt - grr - (gt + gr) / r + g / (r * r)
        lhs = (wp * out + wm * inc) * box * r * r
        terms = {
            "outgoing_sq": -r * wp * out**2 + wp * r * r * out * out_rate,
            "incoming_sq": r * wm * inc**2 + wm * r * r * inc * inc_rate,
            "angular_minus": lam * (s * wm1 * g * g + wm * g * (gt - gr)),
            "angular_plus": lam * (s * wp1 * g * g + wp * g * (gt + gr)),
            "bracket_gap": lam * g * g / r * taylor_gap_direct(t, r, s),
        }
    return lhs, terms


def identity_residual(tf: TestFunction, t, r, s, part: str = "combined"):
    """|divergence expansion - multiplier side| and the local magnitude scale."""
    lhs, terms = identity_terms(tf, t, r, s, part)
    rhs = sum(terms.values())
    scale = np.abs(lhs) + sum(np.abs(v) for v in terms.values())
    return np.abs(rhs - lhs), scale


def identity_sweep(
    tf: TestFunction,
    n_samples: int,
    seed: int,
    s_values=(1.2, 1.5, 1.8),
    part: str = "combined",
) -> dict:
    """Max relative residual over random points inside the sampling window."""
    rng = np.random.default_rng(seed)
    t_lo, t_hi = tf.t_window
    worst = 0.0
    live = 0
    for s in s_values:
        t = t_lo + (t_hi - t_lo) * rng.random(n_samples)
        r = 0.02 + (t + 0.98) * rng.random(n_samples)
        res, scale = identity_residual(tf, t, r, s, part)
        alive = scale > 1e-12
        live += int(alive.sum())
        rel = res[alive] / scale[alive]
        if rel.size:
            worst = max(worst, float(rel.max()))
    return {
        "test_function": tf.name,
        "degree": tf.degree,
        "part": part,
        "samples_per_s": int(n_samples),
        "active_samples": live,
        "s_values": list(s_values),
        "seed": int(seed),
        "max_relative_residual": worst,
    }


# ---------------------------------------------------------------------------
# pointwise energy-density rearrangement


def density_forms(phi_t, phi_r, phi, t, r, s) -> dict:
    """Three equal forms of the weighted outgoing/incoming density and its
    lower bound 2 (t+2-r)^s [phi_t^2 + (phi_r + phi/r)^2].
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("density forms need r > 0")
    wp = weight_eval(t, r, s, "+")
    wm = weight_eval(t, r, s, "-")
    c = phi_r + phi / r
    out = phi_t + c
    inc = phi_t - c
    direct = wp * out**2 + wm * inc**2
    symmetric = (wp + wm) * (phi_t**2 + c**2) + 2.0 * (wp - wm) * phi_t * c
    squared = 2.0 * wm * (phi_t**2 + c**2) + (wp - wm) * out**2
    lower = 2.0 * wm * (phi_t**2 + c**2)
    return {
        "direct": direct,
        "symmetric": symmetric,
        "squared": squared,
        "lower_bound": lower,
    }
