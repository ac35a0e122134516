"""Special functions for Liouville correlation numerics.

Provides log-gamma with pole detection, the gamma ratio l(x) = Gamma(x) /
Gamma(1 - x), the Upsilon function (integral representation on the strip
0 < Re z < Q plus shift-relation continuation with zero-order bookkeeping),
a Gauss hypergeometric series with a certified truncation bound, the
two-element solution bases of the degenerate second-order ODE around 0 and 1
together with their connection coefficients, and quadrature checks of two
closed-form integral identities used by the exact-versus-probabilistic
comparison suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.special as sc

from .errors import (
    ContinuationError,
    DivergenceError,
    PoleError,
    PrecisionError,
)

# Absolute distance below which an argument counts as sitting on a pole/zero
# of Gamma.  Matches the documented contract of log_gamma.
POLE_TOL = 1e-12

# Hard ceiling on the number of shift-relation applications in upsilon().
MAX_SHIFTS = 256

__all__ = [
    "POLE_TOL",
    "QuadResult",
    "UpsilonConfig",
    "HypParams",
    "BpzBasis",
    "CheckReport",
    "make_report",
    "log_gamma",
    "l_func",
    "upsilon",
    "upsilon_tagged",
    "upsilon_prime_zero",
    "hyp2f1",
    "bpz_basis",
    "connection_coefficients",
    "connection_residuals",
    "lemma_integral_check",
    "planar_identity_check",
    "planar_degenerate_check",
]


# ---------------------------------------------------------------------------
# small result containers


@dataclass(frozen=True)
class QuadResult:
    """Value of a quadrature-backed evaluation plus an error estimate.

    err_bound combines the node-refinement difference of every panel with
    analytic bounds for the truncated tail and the small-t series remainder;
    it is an estimate, not a rigorous enclosure, but is deliberately
    conservative (tests allow 2x).
    """

    value: complex
    err_bound: float


@dataclass(frozen=True)
class UpsilonConfig:
    """Quadrature controls for upsilon().

    Attributes:
        gamma: coupling, any positive real (values outside (0, 2) arise when
            checking the gamma <-> 4/gamma duality).
        t_cut: upper integration cutoff; None selects it from tol and the
            decay rate of the integrand.
        n_nodes: Gauss-Legendre nodes per panel (>= 16).
        series_eps: switch point below which the integrand is handled by an
            analytic small-t expansion.
        tol: target absolute accuracy for ln Upsilon.
    """

    gamma: float
    t_cut: float | None = None
    n_nodes: int = 48
    series_eps: float = 0.05
    tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.n_nodes < 16:
            raise ValueError("n_nodes must be at least 16")
        if not (0.0 < self.series_eps <= 0.2):
            raise ValueError("series_eps must lie in (0, 0.2]")
        if self.t_cut is not None and self.t_cut <= self.series_eps:
            raise ValueError("t_cut must exceed series_eps")

    @property
    def q_parameter(self) -> float:
        return 2.0 / self.gamma + self.gamma / 2.0


@dataclass(frozen=True)
class HypParams:
    """Parameter triple (a, b, c) of the Gauss hypergeometric series."""

    a: complex
    b: complex
    c: complex


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a single identity check.

    residual is relative: |lhs - rhs| / max(|lhs|, |rhs|, floor).
    """

    name: str
    lhs: complex
    rhs: complex
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": _jsonify(self.lhs),
            "rhs": _jsonify(self.rhs),
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
        }


def _jsonify(v: complex) -> float | list[float]:
    v = complex(v)
    if v.imag == 0.0:
        return v.real
    return [v.real, v.imag]


def make_report(name: str, lhs: complex, rhs: complex, tol: float) -> CheckReport:
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return CheckReport(name, lhs, rhs, abs(lhs - rhs) / scale, tol)


# ---------------------------------------------------------------------------
# gamma-family helpers


def _nearest_nonpositive_int(z: complex) -> int | None:
    """Index of the Gamma pole within POLE_TOL of z, or None."""
    n = round(z.real)
    if n <= 0 and abs(z - n) <= POLE_TOL:
        return n
    return None


def log_gamma(z: complex) -> complex:
    """Principal branch of ln Gamma(z).

    Raises PoleError when z is within POLE_TOL of a non-positive integer.
    Real positive input returns a float.
    """
    zc = complex(z)
    n = _nearest_nonpositive_int(zc)
    if n is not None:
        raise PoleError(f"log_gamma: argument {zc} sits on the pole at {n}")
    out = complex(sc.loggamma(zc))
    if zc.imag == 0.0 and zc.real > 0.0:
        return out.real
    return out


def l_func(x: complex) -> complex:
    """Gamma ratio l(x) = Gamma(x) / Gamma(1 - x).

    Simple poles at non-positive integers raise PoleError; zeros at positive
    integers >= 1 return exactly 0.  Real input yields a real result.
    """
    xc = complex(x)
    if _nearest_nonpositive_int(xc) is not None:
        raise PoleError(f"l_func: pole at x={xc}")
    if _nearest_nonpositive_int(1.0 - xc) is not None:
        return 0.0
    out = complex(np.exp(sc.loggamma(xc) - sc.loggamma(1.0 - xc)))
    if xc.imag == 0.0:
        return out.real
    return out


def _l_order(x: complex) -> int:
    """Order of l at x: -1 for a pole, +1 for a zero, 0 otherwise."""
    if _nearest_nonpositive_int(complex(x)) is not None:
        return -1
    if _nearest_nonpositive_int(1.0 - complex(x)) is not None:
        return 1
    return 0


# ---------------------------------------------------------------------------
# Gauss-Legendre panel machinery


@lru_cache(maxsize=64)
def _gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_panel(f, lo: float, hi: float, n: int) -> complex:
    x, w = _gl_nodes(n)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * np.sum(w * f(mid + half * x))


def _gl_panels_with_error(f, pts, n: int) -> tuple[complex, float]:
    """Integrate f over consecutive panels; error from n vs n//2 refinement."""
    total = 0.0 + 0.0j
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        fine = _gl_panel(f, lo, hi, n)
        coarse = _gl_panel(f, lo, hi, max(n // 2, 8))
        total += fine
        err += abs(fine - coarse)
    return total, err


def _geometric_points(lo: float, hi: float, n_geo: int = 36) -> list[float]:
    """Panel endpoints on [lo, hi] accumulating geometrically toward lo."""
    pts = [hi]
    width = hi - lo
    for _ in range(n_geo):
        width /= 2.0
        pts.append(lo + width)
    pts.append(lo)
    pts.reverse()
    return pts


# ---------------------------------------------------------------------------
# Upsilon: strip integral


def _ein(x: float) -> float:
    """Entire exponential integral Ein(x) = sum_{k>=1} (-1)^(k+1) x^k/(k k!)."""
    total = 0.0
    term = 1.0
    for k in range(1, 60):
        term *= -x / k
        piece = -term / k
        total += piece
        if abs(piece) < 1e-20 * max(1.0, abs(total)):
            break
    return total


def _small_t_piece(w: complex, a: float, b: float, eps: float) -> tuple[complex, float]:
    """Analytic integral of the strip integrand over [0, eps].

    The integrand f(t) = [w^2 e^{-t} - sinh^2(w t/2)/(sinh(a t) sinh(b t))]/t
    expands as w^2 (e^{-t}-1)/t - w^2 (r1 t + r2 t^3 + r3 t^5) + O(t^7) where
    the r_k combine the sinh^2 series coefficients n_k with the denominator
    series coefficients d_k.
    """
    w2 = w * w
    n1 = w2 / 12.0
    n2 = w2 * w2 / 360.0
    n3 = w2 * w2 * w2 / 20160.0
    d1 = (a * a + b * b) / 6.0
    d2 = (a**4 + b**4) / 120.0 + (a * b) ** 2 / 36.0
    d3 = (a**6 + b**6) / 5040.0 + (a**4 * b**2 + a**2 * b**4) / 720.0
    r1 = n1 - d1
    r2 = n2 - n1 * d1 + (d1 * d1 - d2)
    r3 = n3 - n2 * d1 + n1 * (d1 * d1 - d2) - (d1**3 - 2.0 * d1 * d2 + d3)
    value = w2 * (-_ein(eps)) - w2 * (
        r1 * eps**2 / 2.0 + r2 * eps**4 / 4.0 + r3 * eps**6 / 6.0
    )
    # next omitted term is ~ r4 eps^8/8; bound r4 by the product pattern
    r4_scale = (abs(n3) + abs(d3)) * (abs(n1) + abs(d1) + 1.0)
    err = abs(w2) * r4_scale * eps**8 / 8.0
    return value, err


def _strip_integrand(w: complex, a: float, b: float):
    q2 = a + b  # Q/2

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        lo = t < 50.0
        if np.any(lo):
            ts = t[lo]
            num = np.sinh(w * ts / 2.0) ** 2
            den = np.sinh(a * ts) * np.sinh(b * ts)
            out[lo] = (w * w * np.exp(-ts) - num / den) / ts
        if np.any(~lo):
            # exp-scaled form, overflow-safe for large t:
            # sinh^2(wt/2)/(sinh at sinh bt)
            #   = [e^{(w-Q/2)t} + e^{-(w+Q/2)t} - 2 e^{-Qt/2}]
            #     / ((1-e^{-2at})(1-e^{-2bt}))
            tl = t[~lo]
            den = (1.0 - np.exp(-2.0 * a * tl)) * (1.0 - np.exp(-2.0 * b * tl))
            num = (
                np.exp((w - q2) * tl)
                + np.exp(-(w + q2) * tl)
                - 2.0 * np.exp(-q2 * tl)
            )
            out[~lo] = (w * w * np.exp(-tl) - num / den) / tl
        return out

    return f


def _log_upsilon_strip(z: complex, cfg: UpsilonConfig) -> tuple[complex, float]:
    """ln Upsilon(z) for Re z inside the open strip (0, Q)."""
    gamma = cfg.gamma
    q = cfg.q_parameter
    a, b = gamma / 4.0, 1.0 / gamma
    w = q / 2.0 - z
    delta = q / 2.0 - abs(w.real)
    if delta <= 0.0:
        raise ContinuationError(
            f"strip integral called with Re z = {z.real} outside (0, {q})"
        )

    eps = cfg.series_eps
    small_val, small_err = _small_t_piece(w, a, b, eps)

    if cfg.t_cut is not None:
        t_cut = cfg.t_cut
    else:
        t1 = math.log(max(4.0 * abs(w) ** 2 / cfg.tol, 4.0))
        t2 = math.log(16.0 / (cfg.tol * delta)) / delta
        t_cut = max(40.0, t1, t2)

    pts = [eps, 0.25, 0.5, 1.0]
    while pts[-1] * 2.0 < t_cut:
        pts.append(pts[-1] * 2.0)
    pts.append(t_cut)
    # keep panels short relative to the oscillation period set by Im w
    omega = max(abs(w.imag), 1.0)
    refined: list[float] = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        k = int((hi - lo) * omega / 25.0) + 1
        refined.extend(lo + (hi - lo) * (j + 1) / k for j in range(k))
    f = _strip_integrand(w, a, b)
    quad_val, quad_err = _gl_panels_with_error(f, refined, cfg.n_nodes)

    # tail beyond t_cut: |w^2 e^{-t}| plus the exp-scaled ratio, which decays
    # at least like e^{-delta t} with a bounded prefactor
    den_floor = (1.0 - math.exp(-2.0 * a * t_cut)) * (1.0 - math.exp(-2.0 * b * t_cut))
    tail = (
        abs(w) ** 2 * math.exp(-t_cut)
        + 4.0 * math.exp(-delta * t_cut) / den_floor / delta
    ) / t_cut

    return small_val + quad_val, small_err + quad_err + tail


# ---------------------------------------------------------------------------
# Upsilon: shift continuation


def _shift_plan(x: float, lo: float, hi: float, s_half: float, s_two: float):
    """Minimal (k_half, k_two) with x + k_half*s_half + k_two*s_two in [lo, hi].

    Counts share a sign (both non-positive when stepping down).  Among plans
    of minimal total length the one using more 2/gamma steps wins, which
    keeps the plan deterministic.
    """
    if lo <= x <= hi:
        return 0, 0
    direction = 1.0 if x < lo else -1.0
    dist = (lo - x) if x < lo else (x - hi)
    best: tuple[int, int, int] | None = None
    max_two = int(dist / s_two) + 2
    for k2 in range(max_two, -1, -1):
        rem = dist - k2 * s_two
        k1 = max(0, math.ceil((rem - 1e-12) / s_half))
        landing = x + direction * (k1 * s_half + k2 * s_two)
        if not (lo - 1e-12 <= landing <= hi + 1e-12):
            continue
        total = k1 + k2
        if best is None or total < best[0]:
            best = (total, k1, k2)
    if best is None:
        raise ContinuationError(
            f"no shift combination lands Re z = {x} in [{lo}, {hi}]"
        )
    _, k1, k2 = best
    return int(direction) * k1, int(direction) * k2


def _shift_factor(gamma: float, z: complex, step: str) -> tuple[complex, int]:
    """Multiplier M with Upsilon(z + step) = M * Upsilon(z), as (value, order).

    order is the zero-order of M: +1 when the l factor vanishes, -1 at an l
    pole.  When order != 0 the returned value is only the finite power part
    and must be consumed through the order bookkeeping.
    """
    if step == "half":
        arg = gamma * z / 2.0
        power = (gamma / 2.0) ** (1.0 - gamma * z)
    else:
        arg = 2.0 * z / gamma
        power = (gamma / 2.0) ** (4.0 * z / gamma - 1.0)
    order = _l_order(arg)
    if order == 0:
        return l_func(arg) * power, 0
    return complex(power), order


def upsilon_tagged(z: complex, cfg: UpsilonConfig) -> tuple[complex, float, int]:
    """Upsilon(z) with zero-order bookkeeping.

    Returns (value, err_bound, zero_order).  zero_order > 0 means z sits on a
    lattice zero of that multiplicity and value is exactly 0; callers that
    need ratio limits use the order instead of the value.
    """
    zc = complex(z)
    gamma = cfg.gamma
    q = cfg.q_parameter
    s_half, s_two = gamma / 2.0, 2.0 / gamma
    lo = min(s_half, s_two) / 2.0
    hi = q - lo

    k_half, k_two = _shift_plan(zc.real, lo, hi, s_half, s_two)
    n_steps = abs(k_half) + abs(k_two)
    if n_steps > MAX_SHIFTS:
        raise ContinuationError(
            f"continuation from Re z = {zc.real} needs {n_steps} shifts "
            f"(budget {MAX_SHIFTS})"
        )

    # accumulate the prefactor in log form to stay overflow-safe
    log_pref = 0.0 + 0.0j
    order = 0
    cur = zc
    if k_half >= 0 and k_two >= 0:
        # stepping up: Upsilon(z0) = Upsilon(z_land) / prod M(intermediate);
        # dividing by an M with a pole (order -1) makes Upsilon(z0) vanish,
        # so the multiplier order enters negated
        for _ in range(k_half):
            m, o = _shift_factor(gamma, cur, "half")
            order -= o
            if o == 0:
                log_pref -= np.log(complex(m))
            cur += s_half
        for _ in range(k_two):
            m, o = _shift_factor(gamma, cur, "two")
            order -= o
            if o == 0:
                log_pref -= np.log(complex(m))
            cur += s_two
    else:
        # stepping down: Upsilon(z0) = prod M(below) * Upsilon(z_land)
        for _ in range(-k_half):
            cur -= s_half
            m, o = _shift_factor(gamma, cur, "half")
            order += o
            if o == 0:
                log_pref += np.log(complex(m))
        for _ in range(-k_two):
            cur -= s_two
            m, o = _shift_factor(gamma, cur, "two")
            order += o
            if o == 0:
                log_pref += np.log(complex(m))

    if order < 0:
        raise ContinuationError(
            f"continuation to z={zc} produced a pole of order {-order}; "
            "Upsilon is entire, so the shift plan is inconsistent"
        )

    log_up, log_err = _cached_log_upsilon_strip(
        complex(cur), gamma, cfg.t_cut, cfg.n_nodes, cfg.series_eps, cfg.tol
    )
    if order > 0:
        return 0.0, 0.0, order
    value = np.exp(log_up + log_pref)
    err = abs(value) * (log_err + 1e-15 * n_steps)
    return complex(value), float(err), 0


@lru_cache(maxsize=100_000)
def _cached_log_upsilon_strip(z, gamma, t_cut, n_nodes, series_eps, tol):
    cfg = UpsilonConfig(
        gamma=gamma, t_cut=t_cut, n_nodes=n_nodes, series_eps=series_eps, tol=tol
    )
    return _log_upsilon_strip(z, cfg)


def upsilon(z: complex, cfg: UpsilonConfig) -> QuadResult:
    """Upsilon function for coupling cfg.gamma at any complex z.

    Inside the strip 0 < Re z < Q the integral representation is used
    directly; outside, the two shift relations continue the value.  Lattice
    zeros return value exactly 0.
    """
    value, err, _order = upsilon_tagged(z, cfg)
    if not (math.isfinite(abs(value)) and math.isfinite(err)):
        raise PrecisionError(f"upsilon({z}) produced a non-finite result")
    return QuadResult(value, err)


def upsilon_prime_zero(cfg: UpsilonConfig, h: float = 1e-4) -> QuadResult:
    """Upsilon'(0), primary route Upsilon(gamma/2).

    Cross-checked against the centered difference
    (Upsilon(h) - Upsilon(-h)) / 2h; PrecisionError if the two routes differ
    by more than 1e-6 relative.
    """
    primary = upsilon(cfg.gamma / 2.0, cfg)
    up = upsilon(complex(h), cfg)
    down = upsilon(complex(-h), cfg)
    fd = (up.value - down.value) / (2.0 * h)
    scale = max(abs(primary.value), 1e-300)
    mismatch = abs(primary.value - fd) / scale
    if mismatch > 1e-6:
        raise PrecisionError(
            f"Upsilon'(0) cross-check failed: shift route {primary.value}, "
            f"finite difference {fd} (relative gap {mismatch:.3e})"
        )
    err = max(primary.err_bound, abs(primary.value - fd))
    return QuadResult(primary.value, err)


# ---------------------------------------------------------------------------
# Gauss hypergeometric series


def hyp2f1(
    a: complex,
    b: complex,
    c: complex,
    z: complex,
    tol: float = 1e-12,
    max_terms: int = 200_000,
) -> complex:
    """2F1(a, b; c; z) by the defining series with a certified stop rule.

    Requires |z| < 1.  Past the parameter scale k0 the term ratio admits the
    monotone majorant q = |z| * max(1,(j+|a|)/(j+1)) * (1+(|b|+|c|)/(j-|c|)),
    so summation stops once |T_j| q/(1-q) <= tol * max(1, |S|).
    """
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    if _nearest_nonpositive_int(c) is not None:
        raise DivergenceError(f"hyp2f1: c={c} is a non-positive integer")
    az = abs(z)
    if az >= 1.0:
        raise DivergenceError(f"hyp2f1 series requires |z| < 1, got |z|={az}")
    if az == 0.0:
        return 1.0 + 0.0j

    s = 1.0 + 0.0j
    term = 1.0 + 0.0j
    k0 = int(2.0 * max(abs(a), abs(b), abs(c))) + 4
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        s += term
        j = k + 1
        if j >= k0:
            qbar = (
                az
                * max(1.0, (j + abs(a)) / (j + 1.0))
                * (1.0 + (abs(b) + abs(c)) / (j - abs(c)))
            )
            if qbar < 1.0 and abs(term) * qbar / (1.0 - qbar) <= tol * max(1.0, abs(s)):
                return s
    raise PrecisionError(
        f"hyp2f1 did not converge to tol={tol} within {max_terms} terms "
        f"(|z|={az})"
    )


# ---------------------------------------------------------------------------
# degenerate-equation solution bases and connection


@dataclass(frozen=True)
class BpzBasis:
    """Solution bases around z=0 (f_minus, f_plus) and z=1 (g_minus, g_plus).

    f_minus = 2F1(a, b; c; z)
    f_plus  = z^(1-c) 2F1(1+a-c, 1+b-c; 2-c; z)
    g_minus = 2F1(a, b; a+b-c+1; 1-z)
    g_plus  = (1-z)^(c-a-b) 2F1(c-a, c-b; c-a-b+1; 1-z)
    """

    f_minus: complex
    f_plus: complex
    g_minus: complex
    g_plus: complex


def connection_coefficients(p: HypParams) -> tuple[complex, complex, complex, complex]:
    """Coefficients (A, B, D, E) expressing the 0-basis in the 1-basis:

        f_minus = A g_minus + B g_plus
        f_plus  = D g_minus + E g_plus
    """
    a, b, c = complex(p.a), complex(p.b), complex(p.c)
    A = np.exp(
        log_gamma(c) + log_gamma(c - a - b) - log_gamma(c - a) - log_gamma(c - b)
    )
    B = np.exp(log_gamma(c) + log_gamma(a + b - c) - log_gamma(a) - log_gamma(b))
    D = np.exp(
        log_gamma(2.0 - c)
        + log_gamma(c - a - b)
        - log_gamma(1.0 - a)
        - log_gamma(1.0 - b)
    )
    E = np.exp(
        log_gamma(2.0 - c)
        + log_gamma(a + b - c)
        - log_gamma(a - c + 1.0)
        - log_gamma(b - c + 1.0)
    )
    return complex(A), complex(B), complex(D), complex(E)


def bpz_basis(p: HypParams, z: complex, tol: float = 1e-13) -> BpzBasis:
    """Evaluate both solution bases at z (0 < Re z < 1 recommended).

    Powers z^(1-c) and (1-z)^(c-a-b) use the principal branch; for the real
    z in (0, 1) used by the comparison suite both bases converge.
    """
    a, b, c = complex(p.a), complex(p.b), complex(p.c)
    zc = complex(z)
    one_minus = 1.0 - zc
    f_minus = hyp2f1(a, b, c, zc, tol=tol)
    f_plus = np.exp((1.0 - c) * np.log(zc)) * hyp2f1(
        1.0 + a - c, 1.0 + b - c, 2.0 - c, zc, tol=tol
    )
    g_minus = hyp2f1(a, b, a + b - c + 1.0, one_minus, tol=tol)
    g_plus = np.exp((c - a - b) * np.log(one_minus)) * hyp2f1(
        c - a, c - b, c - a - b + 1.0, one_minus, tol=tol
    )
    return BpzBasis(
        complex(f_minus), complex(f_plus), complex(g_minus), complex(g_plus)
    )


def connection_residuals(p: HypParams, z: complex) -> tuple[float, float]:
    """Relative residuals of the two connection identities at z."""
    basis = bpz_basis(p, z)
    A, B, D, E = connection_coefficients(p)
    r1 = abs(basis.f_minus - (A * basis.g_minus + B * basis.g_plus))
    r2 = abs(basis.f_plus - (D * basis.g_minus + E * basis.g_plus))
    s1 = max(abs(basis.f_minus), 1.0)
    s2 = max(abs(basis.f_plus), 1.0)
    return r1 / s1, r2 / s2


# ---------------------------------------------------------------------------
# closed-form integral identity #1: the shifted-moment integral


def lemma_integral_check(
    p: float, a: float, tol: float = 1e-8, n_nodes: int = 32
) -> CheckReport:
    """Quadrature check of

        int_0^inf ((1+v)^-p - 1) v^-a dv
            = - Gamma(2-a) Gamma(p+a-1) / ((a-1) Gamma(p)),

    valid for 1 < a < 2 and p > a-1.  The special case p=1, a=3/2 equals -pi.

    The integrand's endpoint power laws are removed analytically: on [0, 1]
    the leading -p v^{1-a} piece, and on [1, inf) (mapped to u = 1/v in
    (0, 1]) the pure -u^{a-2} piece; what remains is integrated with
    Gauss-Legendre panels after power substitutions that bound the integrand.
    """
    if not (1.0 < a < 2.0):
        raise ValueError(f"need 1 < a < 2, got a={a}")
    if not (p > a - 1.0):
        raise ValueError(f"need p > a-1 for convergence, got p={p}, a={a}")

    # [0, 1]: g(v) = (1+v)^-p - 1 + p v  ~  v^2, computed via expm1 to keep
    # the cancellation exact; substitute v = s^(1/(3-a)) so the integrand of
    # s is bounded.
    pow1 = 3.0 - a

    def f_lower(s):
        s = np.asarray(s, dtype=float)
        v = s ** (1.0 / pow1)
        g = np.expm1(-p * np.log1p(v)) + p * v
        return g * v ** (-a) * v / (s * pow1)

    pts = _geometric_points(0.0, 1.0)
    pts[0] = 1e-290
    low, err_low = _gl_panels_with_error(f_lower, pts, n_nodes)
    low = low.real - p / (2.0 - a)

    # [1, inf): with u = 1/v the integrand is (u^p (1+u)^-p - 1) u^{a-2};
    # split off -u^{a-2} exactly, then substitute s = u^(p+a-1) for the rest.
    pow2 = p + a - 1.0

    def f_upper(s):
        s = np.asarray(s, dtype=float)
        u = s ** (1.0 / pow2)
        return (1.0 + u) ** (-p) / pow2

    pts = _geometric_points(0.0, 1.0)
    pts[0] = 1e-290
    upp, err_upp = _gl_panels_with_error(f_upper, pts, n_nodes)
    upp = upp.real - 1.0 / (a - 1.0)

    lhs = low + upp
    err = err_low + err_upp
    if err > tol:
        raise PrecisionError(
            f"lemma integral quadrature error {err:.3e} exceeds tol {tol:.1e}"
        )
    rhs = -math.gamma(2.0 - a) * math.gamma(p + a - 1.0) / ((a - 1.0) * math.gamma(p))
    return make_report(f"lemma_integral p={p} a={a}", lhs, rhs, tol)


# ---------------------------------------------------------------------------
# closed-form integral identity #2: planar two-insertion moments


def _pochhammer(x: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= x + j
    return out


def _angular_coefficient(beta: float, m: int, r: float, tol: float = 1e-12) -> float:
    """(1/2pi) int_0^{2pi} e^{-i m theta} |1 + r e^{i theta}|^{-2 beta} dtheta.

    Closed form ((beta)_m / m!) r^m 2F1(beta, beta+m; m+1; r^2) for r < 1;
    r > 1 reduces to it by pulling out r^{-2 beta - m}.  Near r = 1 the
    series is slow and the 1-basis connection takes over.
    """
    if r == 1.0:
        raise PoleError("angular coefficient evaluated on the unit circle")
    if r > 1.0:
        # |1 + r e^{i theta}| = r |1 + (1/r) e^{-i theta}| and A_m = A_{-m},
        # so A_m(r) = r^{-2 beta} A_m(1/r); the core already carries (1/r)^m
        return r ** (-2.0 * beta) * _angular_core(beta, m, 1.0 / r, tol)
    return _angular_core(beta, m, r, tol)


def _angular_core(beta: float, m: int, r: float, tol: float) -> float:
    x = r * r
    front = _pochhammer(beta, m) / math.factorial(m) * r**m
    if x <= 0.8:
        return front * hyp2f1(beta, beta + m, m + 1.0, x, tol=tol).real
    A, B = _angular_connection(beta, m)
    g_minus = hyp2f1(beta, beta + m, 2.0 * beta, 1.0 - x, tol=tol)
    g_plus = (1.0 - x) ** (1.0 - 2.0 * beta) * hyp2f1(
        m + 1.0 - beta, 1.0 - beta, 2.0 - 2.0 * beta, 1.0 - x, tol=tol
    )
    return front * (A * g_minus + B * g_plus).real


@lru_cache(maxsize=4096)
def _angular_connection(beta: float, m: int) -> tuple[complex, complex]:
    # only the f_minus row of the connection; with (a, b, c) =
    # (beta, beta+m, m+1) the f_plus row would need Gamma(2-c) = Gamma(1-m),
    # which is singular for the integer m used here
    a, b, c = complex(beta), complex(beta + m), complex(m + 1.0)
    A = np.exp(
        log_gamma(c) + log_gamma(c - a - b) - log_gamma(c - a) - log_gamma(c - b)
    )
    B = np.exp(log_gamma(c) + log_gamma(a + b - c) - log_gamma(a) - log_gamma(b))
    return complex(A), complex(B)


def planar_identity_check(
    gamma: float,
    alpha1: float,
    tol: float = 1e-4,
    n_nodes: int = 32,
) -> list[CheckReport]:
    """Check the two planar two-insertion moment identities.

    With beta = gamma*alpha1/2 and h = gamma^2/4, writing A_m(r) for the
    angular coefficient of |1 + r e^{i theta}|^{-2 beta} and
    I_m = 2 pi int_0^inf r^{gamma^2/2 - 1} A_m(r) dr, the closed forms are

        h (h - 1) I_2 = (h + 1 - beta)(h - beta) P
        h^2       I_0 = (h + 1 - beta)^2         P
        P = pi / ( l(beta) l(-h) l(2 - beta + h) )

    Preconditions gamma/2 < alpha1 < 2/gamma keep both sides finite and the
    radial integrals absolutely convergent.
    """
    if not (gamma / 2.0 < alpha1 < 2.0 / gamma):
        raise ValueError(
            f"need gamma/2 < alpha1 < 2/gamma, got gamma={gamma}, alpha1={alpha1}"
        )
    beta = gamma * alpha1 / 2.0
    if abs(2.0 * beta - round(2.0 * beta)) < 1e-9:
        raise PoleError(
            "planar check needs 2*beta away from integers for the 1-basis "
            f"connection; got beta={beta}"
        )
    h = gamma * gamma / 4.0
    s_exp = gamma * gamma / 2.0 - 1.0

    p_common = (
        math.pi
        / complex(
            l_func(beta) * l_func(-h) * l_func(2.0 - beta + h)
        ).real
    )

    reports = []
    for m, pref_lhs, pref_rhs in (
        (2, h * (h - 1.0), (h + 1.0 - beta) * (h - beta)),
        (0, h * h, (h + 1.0 - beta) ** 2),
    ):
        radial = _radial_integral(beta, m, s_exp, n_nodes, tol)
        lhs = pref_lhs * 2.0 * math.pi * radial
        rhs = pref_rhs * p_common
        reports.append(
            make_report(
                f"planar_moment m={m} gamma={gamma} alpha1={alpha1}", lhs, rhs, tol
            )
        )
    return reports


def _radial_integral(
    beta: float, m: int, s_exp: float, n_nodes: int, tol: float
) -> float:
    """int_0^inf r^{s_exp} A_m(r) dr, resolving the r=0 and r=1 power laws.

    Near r = 1 the angular coefficient carries C |1 - r|^{1 - 2 beta} with
    C = (beta)_m/m! * B * 2^{1-2 beta} on both sides (B from the 1-basis
    connection); that piece integrates in closed form and only the bounded
    remainder goes through quadrature.
    """

    def f(r):
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(rr.shape)
        for i, ri in enumerate(rr):
            out[i] = ri**s_exp * _angular_coefficient(beta, m, ri)
        return out

    # [0, 0.8]: substitute s = r^(s_exp + 1); then r^{s_exp} dr = ds / sigma0
    # exactly and the integrand reduces to the bounded A_m(r(s)) / sigma0
    sigma0 = s_exp + 1.0

    def f_origin(s):
        ss = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty(ss.shape)
        for i, si in enumerate(ss):
            out[i] = _angular_coefficient(beta, m, si ** (1.0 / sigma0)) / sigma0
        return out

    pts = _geometric_points(0.0, 0.8**sigma0, n_geo=30)
    pts[0] = 1e-290
    part1, err1 = _gl_panels_with_error(f_origin, pts, n_nodes)

    # singular coefficient at r=1
    front = _pochhammer(beta, m) / math.factorial(m)
    _, B = _angular_connection(beta, m)
    c_sing = front * B.real * 2.0 ** (1.0 - 2.0 * beta)
    hw = 0.2
    sing_mass = 2.0 * c_sing * hw ** (2.0 - 2.0 * beta) / (2.0 - 2.0 * beta)

    def f_below(r):
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        return f(rr) - c_sing * (1.0 - rr) ** (1.0 - 2.0 * beta)

    def f_above(r):
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        return f(rr) - c_sing * (rr - 1.0) ** (1.0 - 2.0 * beta)

    # the bounded remainders stop 1e-9 short of r=1; the omitted sliver is
    # O(1e-9) because the |1-r|^{1-2 beta} part is already in sing_mass
    cut = 1e-9
    pts = [1.0 - q for q in _geometric_points(0.0, hw, n_geo=27)]
    pts.reverse()
    pts[-1] = 1.0 - cut
    part2, err2 = _gl_panels_with_error(f_below, pts, n_nodes)

    pts = [1.0 + q for q in _geometric_points(0.0, hw, n_geo=27)]
    pts[0] = 1.0 + cut
    part3, err3 = _gl_panels_with_error(f_above, pts, n_nodes)

    # [1.2, 3] plain panels, then the analytic large-r series tail
    part4, err4 = _gl_panels_with_error(f, [1.2, 1.5, 2.0, 2.5, 3.0], n_nodes)
    tail = _radial_tail(beta, m, s_exp, 3.0, tol)

    total = (part1 + part2 + part3 + part4).real + sing_mass + tail
    err = err1 + err2 + err3 + err4
    if err > tol / 4.0:
        raise PrecisionError(
            f"planar radial quadrature error {err:.3e} exceeds budget {tol/4:.1e}"
        )
    return total


def _radial_tail(beta: float, m: int, s_exp: float, r_from: float, tol: float) -> float:
    """int_{r_from}^inf r^{s_exp} A_m(r) dr via the large-r series.

    A_m(r) = (beta)_m/m! r^{-2 beta - m} 2F1(beta, beta+m; m+1; r^-2), so
    each series term integrates in closed form; requires
    s_exp - 2 beta - m < -1.
    """
    lead = s_exp - 2.0 * beta - m
    if lead >= -1.0:
        raise DivergenceError(
            f"radial tail diverges: exponent {lead} >= -1 at infinity"
        )
    front = _pochhammer(beta, m) / math.factorial(m)
    total = 0.0
    ck = 1.0
    for k in range(200):
        if k > 0:
            ck *= (beta + k - 1.0) * (beta + m + k - 1.0) / ((m + k) * k)
        e = lead - 2.0 * k
        piece = ck * r_from ** (e + 1.0) / -(e + 1.0)
        total += piece
        if abs(piece) < tol / 10.0 and k >= 2:
            break
    return front * total


def planar_degenerate_check(gamma: float) -> CheckReport:
    """Order bookkeeping for the planar closed form at alpha1 = Q.

    At alpha1 = Q = 2/gamma + gamma/2 the right-hand prefactor
    (h + 1 - beta)^2 vanishes to second order while l(2 - beta + h) = l(1)
    contributes a simple zero in the denominator, so the right-hand side
    vanishes to net first order and the limit is exactly 0.
    """
    q = 2.0 / gamma + gamma / 2.0
    beta = gamma * q / 2.0  # = 1 + gamma^2/4
    h = gamma * gamma / 4.0
    numerator_order = 2  # (h + 1 - beta)^2 == 0^2
    denominator_order = _l_order(beta) + _l_order(-h) + _l_order(2.0 - beta + h)
    net = numerator_order - denominator_order
    if net <= 0:
        raise PoleError(f"planar degenerate limit is not finite: net order {net}")
    return make_report(f"planar_degenerate gamma={gamma}", 0.0, 0.0, 1e-12)


# ---------------------------------------------------------------------------
# randomized identity suite over the special-function layer


def _lattice_gap(z: complex, gamma: float, kmax: int = 10) -> float:
    """Distance from z to the Upsilon zero lattice (truncated at kmax)."""
    q = 2.0 / gamma + gamma / 2.0
    zc = complex(z)
    best = math.inf
    for m in range(kmax + 1):
        for n in range(kmax + 1):
            t = 0.5 * gamma * m + 2.0 * n / gamma
            best = min(best, abs(zc + t), abs(zc - q - t))
    return best


def upsilon_suite(
    gamma: float, n_points: int = 20, seed: int = 0, tol: float = 1e-8
) -> list[CheckReport]:
    """Randomized checks of the Upsilon layer: both shift relations, the
    reflection symmetry about Q/2, self-duality under gamma -> 4/gamma, the
    normalization at Q/2, plus a few hypergeometric-connection and
    closed-form integral draws.  Deterministic given seed."""
    rng = np.random.default_rng((seed, 97))
    cfg = UpsilonConfig(gamma=gamma)
    cfg_dual = UpsilonConfig(gamma=4.0 / gamma)
    q = cfg.q_parameter
    reports = [
        make_report("upsilon_q_half", upsilon(q / 2.0, cfg).value, 1.0, tol)
    ]

    def draw_z():
        for _ in range(200):
            z = complex(rng.uniform(0.2, q - 0.2), rng.uniform(-0.6, 0.6))
            if rng.random() < 0.5:
                z = complex(z.real, 0.0)
            args = (z, z + gamma / 2.0, z + 2.0 / gamma, q - z)
            if min(_lattice_gap(a, gamma) for a in args) < 0.04:
                continue
            l_args = (gamma * z / 2.0, 2.0 * z / gamma)
            if min(abs(x - round(x.real)) for x in l_args) < 0.02:
                continue
            return z
        raise RuntimeError("upsilon_suite sampler failed")

    for _ in range(n_points):
        z = draw_z()
        u0 = upsilon(z, cfg).value
        lhs = upsilon(z + gamma / 2.0, cfg).value
        rhs = l_func(gamma * z / 2.0) * (gamma / 2.0) ** (1.0 - gamma * z) * u0
        reports.append(make_report("upsilon_shift_half", lhs, rhs, tol))
        lhs = upsilon(z + 2.0 / gamma, cfg).value
        rhs = l_func(2.0 * z / gamma) * (gamma / 2.0) ** (4.0 * z / gamma - 1.0) * u0
        reports.append(make_report("upsilon_shift_dual", lhs, rhs, tol))
        reports.append(
            make_report("upsilon_symmetry", u0, upsilon(q - z, cfg).value, tol)
        )
        reports.append(
            make_report("upsilon_duality", u0, upsilon(z, cfg_dual).value, tol)
        )

    for _ in range(max(2, n_points // 4)):
        p = HypParams(
            complex(rng.uniform(0.1, 1.2)),
            complex(rng.uniform(0.1, 1.2)),
            complex(rng.uniform(1.3, 2.4)),
        )
        if min(
            abs(x - round(x.real))
            for x in (p.c, complex(p.c) - p.a - p.b)
        ) < 0.05:
            continue
        z = rng.uniform(0.25, 0.6)
        r1, r2 = connection_residuals(p, z)
        reports.append(CheckReport("connection_f_minus", r1, 0.0, r1, 1e-10))
        reports.append(CheckReport("connection_f_plus", r2, 0.0, r2, 1e-10))
        a_exp = float(rng.uniform(1.15, 1.85))
        p_exp = float(rng.uniform(a_exp - 0.8, 3.0))
        if p_exp <= a_exp - 1.0 + 0.05:
            p_exp = a_exp - 0.5 + 1.0
        reports.append(lemma_integral_check(p_exp, a_exp, tol=max(tol, 1e-9)))

    return reports
