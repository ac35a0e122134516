"""Monte Carlo estimators paired with their closed-form comparators.

Every estimator here simulates either the cylinder chaos or the
conditioned-drift path process and reduces to an MCEstimate (or a small
report dataclass) whose manifest reproduces the run bit-for-bit.

Seeding discipline: field estimators draw sample ``i`` from the dedicated
stream ``RngStream(master_seed, stream_offset + i)``, so the result is
independent of batch size and worker count.  Path estimators (the
reflection coefficient) draw one stream per reduction *batch* instead —
the zero-boundary rejection step consumes a data-dependent number of
normals, which makes a fixed per-sample draw order impossible — so their
results depend on ``cfg.batch`` (recorded in the manifest) but still not
on the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dozz import LiouvilleParams, WeightTriple, _as_triple
from .errors import (
    BoundsError,
    InsufficientTailError,
    PoleError,
    SeibergBoundError,
    VarianceBlowupError,
)
from .gmc import (
    CylinderGrid,
    RngStream,
    _assemble_fields,
    _draw_field_normals,
    _em_conditioned_batch,
    _harmonic,
    _kernel_tables,
    _mass_batch,
    _refined_mass_batch,
    _refined_pick,
    _z_batch,
    max_step_for,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

# stream indices >= this are reserved for internal sub-estimates (e.g. the
# reflection-bar run a tail fit performs for its amplitude comparison)
_INTERNAL_STREAM_BASE = 1 << 30

# manifest keys that never enter the reproducibility hash
_HASH_EXCLUDED = frozenset({"hash", "workers", "created_unix"})


# ---------------------------------------------------------------------------
# configuration and result types


@dataclass(frozen=True)
class MCConfig:
    """Sample count, spatial grid, and seeding of one Monte Carlo run.

    grid may stay None for estimators that never touch the cylinder grid
    (reflection coefficients, tail fits).
    """

    n_samples: int
    grid: CylinderGrid | None = None
    master_seed: int = 0
    batch: int = 256

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 (stderr is undefined)")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass(frozen=True)
class PathConfig:
    """Discretization of the conditioned-path integral for R-bar.

    dt = None resolves to the largest step the conditioned sampler
    accepts for the drift in play; z_spacing is the record spacing at
    which the lateral slice process Z is sampled and the trapezoid rule
    applied.
    """

    horizon: float = 30.0
    dt: float | None = None
    z_spacing: float = 0.05
    n_modes: int = 16
    n_theta: int = 64

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.dt is not None and self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.z_spacing <= 0.0:
            raise ValueError("z_spacing must be positive")
        if self.n_theta < 4 * self.n_modes:
            raise ValueError("n_theta must be >= 4 n_modes")

    def resolved_dt(self, nu: float) -> float:
        dt = max_step_for(nu) if self.dt is None else self.dt
        if dt > max_step_for(nu):
            raise ValueError(
                f"dt={dt:g} too coarse for drift nu={nu:g}; "
                f"need dt <= {max_step_for(nu):g}"
            )
        return dt

    def as_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "dt": self.dt,
            "z_spacing": self.z_spacing,
            "n_modes": self.n_modes,
            "n_theta": self.n_theta,
        }


@dataclass(frozen=True)
class MCEstimate:
    """Mean, stderr = sample-SD/sqrt(n), and the manifest of the run."""

    mean: float
    stderr: float
    n: int
    manifest: dict

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n": self.n,
            "manifest": self.manifest,
        }


@dataclass(frozen=True)
class TwoPointLimitReport:
    """Scaled estimates eps * C(...) per eps plus their linear limit.

    estimates[j] is eps[j] * (three-point estimate at alpha1 = alpha -
    alpha2 + eps[j]); the extrapolation is a weighted least-squares line
    in eps (weights 1/stderr^2) evaluated at eps = 0.
    """

    alpha: float
    alpha2: float
    a_factor: int
    eps: tuple
    estimates: tuple
    extrapolated_mean: float
    extrapolated_stderr: float
    manifest: dict


@dataclass(frozen=True)
class TailFitReport:
    """Rank-regression fit of log P(W > x) against log x.

    The fit uses n_thresholds log-spaced thresholds between the 1%-tail
    order statistic and the 30th-largest sample, so the largest threshold
    always keeps >= 30 exceedances; slope_ci is the 1-sigma spread of the
    slope over a 20-block bootstrap.
    """

    fitted_slope: float
    slope_ci: float
    amplitude: float
    x_range: tuple
    n_tail: int
    theory_slope: float
    theory_amplitude: float | None
    manifest: dict


@dataclass(frozen=True)
class MomentScalingRow:
    kind: str  # "plain" or "weighted"
    p: float
    slope: float
    slope_stderr: float
    theory_slope: float
    means: tuple
    stderrs: tuple


@dataclass(frozen=True)
class MomentScalingReport:
    eps: tuple
    rows: tuple
    manifest: dict


# ---------------------------------------------------------------------------
# manifest plumbing


def manifest_hash(manifest: dict) -> str:
    """Reproducibility hash: SHA-256 of the canonical JSON of every field
    except the hash itself, timestamps, and the worker count."""
    core = {k: v for k, v in manifest.items() if k not in _HASH_EXCLUDED}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _finish_manifest(core: dict, workers: int) -> dict:
    manifest = dict(core)
    manifest["hash"] = manifest_hash(core)
    manifest["workers"] = int(workers)
    manifest["created_unix"] = round(time.time(), 3)
    return manifest


def _cfg_core(cfg: MCConfig, stream_mode: str, stream_offset: int) -> dict:
    from . import __version__

    return {
        "n_samples": cfg.n_samples,
        "batch": cfg.batch,
        "master_seed": cfg.master_seed,
        "grid": None if cfg.grid is None else cfg.grid.as_dict(),
        "stream_mode": stream_mode,
        "stream_offset": stream_offset,
        "code_version": __version__,
    }


# ---------------------------------------------------------------------------
# scalar helpers


def _gamma_signed(s: float) -> float:
    """Gamma(s) for real non-pole s through log-gamma, sign explicit.

    Negative arguments go through the reflection formula
    Gamma(s) = pi / (sin(pi s) Gamma(1 - s)); the sign is that of
    sin(pi s), carried outside the exponential.
    """
    if s > 0.0:
        return math.exp(math.lgamma(s))
    sinpi = math.sin(math.pi * s)
    log_abs = math.log(math.pi) - math.log(abs(sinpi)) - math.lgamma(1.0 - s)
    return math.copysign(math.exp(log_abs), sinpi)


def _gamma_pole_at(s: float) -> bool:
    n = round(s)
    return n <= 0 and abs(s - n) <= 1e-9


def _raise_pole(s: float, what: str):
    exc = PoleError(f"{what}: Gamma pole at s = {s:g}")
    exc.argument = float(s)
    exc.order = 1
    raise exc


def _real_triple(w) -> tuple[float, float, float]:
    vals = _as_triple(w)
    if any(v.imag != 0.0 for v in vals):
        raise ValueError("Monte Carlo estimators take real weights")
    return tuple(float(v.real) for v in vals)


def _moment_cap(gamma: float, q: float, alphas) -> float:
    """Largest t with E[(chaos integral)^t] < infinity: the smaller of the
    global bound 4/gamma^2 and the per-insertion bounds 2(Q - alpha)/gamma."""
    return min(
        4.0 / gamma**2, min(2.0 * (q - a) / gamma for a in alphas)
    )


def _require_refined_at(grid: CylinderGrid, s0: float, theta0: float, what: str):
    """Demand a refinement anchor over every cell touching (s0, theta0)."""
    if not (grid.s_min < s0 < grid.s_max):
        raise BoundsError(
            f"{what} singularity sits at s = {s0:g}, outside the grid "
            f"truncation [{grid.s_min:g}, {grid.s_max:g}]"
        )
    se, te = grid.s_edges(), grid.theta_edges()
    tol = 1e-12
    t0 = theta0 % (2.0 * math.pi)
    rows = [i for i in range(grid.n_s) if se[i] - tol <= s0 <= se[i + 1] + tol]
    cols = [j for j in range(grid.n_theta) if te[j] - tol <= t0 <= te[j + 1] + tol]
    if t0 <= tol or t0 >= 2.0 * math.pi - tol:
        cols = sorted(set(cols) | {0, grid.n_theta - 1})
    levels = {(i, j): lv for i, j, lv in grid.refined_cells()}
    missing = [
        (i, j) for i in rows for j in cols if levels.get((i, j), 0) < 1
    ]
    if missing:
        raise ValueError(
            f"grid must refine the cells around the {what} singularity at "
            f"(s, theta) = ({s0:g}, {t0:g}); add a refinement anchor there"
        )


def _blocks(n: int, batch: int):
    return [(lo, min(lo + batch, n)) for lo in range(0, n, batch)]


def _dispatch(worker, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(worker, payloads))


# ---------------------------------------------------------------------------
# cylinder kernels

# x = e^{-s + i theta}; all kernels are densities against the chaos measure


def _dist_to_one(s, theta):
    """|x - 1| on broadcast (s, theta) arrays."""
    r = np.exp(-s)
    return np.sqrt(np.maximum(r * r - 2.0 * r * np.cos(theta) + 1.0, 0.0))


def _dist_to_image(s, theta, s0: float, theta0: float):
    """|x - x0| with x0 = e^{-s0 + i theta0}."""
    r = np.exp(-s)
    r0 = math.exp(-s0)
    return np.sqrt(
        np.maximum(r * r - 2.0 * r * r0 * np.cos(theta - theta0) + r0 * r0, 0.0)
    )


def _make_kernels(kind: str, params: tuple):
    if kind == "three_point":
        gamma, a1, a2, abar = params

        def kernel(s, theta):
            return np.exp(
                gamma * a1 * s - gamma * abar * np.minimum(s, 0.0)
            ) * _dist_to_one(s, theta) ** (-gamma * a2)

        return [kernel]

    if kind == "four_point":
        gamma, a0, a1, a2, abar, s_star, t_star = params

        def kernel(s, theta):
            log_k = gamma * a1 * s - gamma * (a0 + abar) * np.minimum(s, 0.0)
            return (
                np.exp(log_k)
                * _dist_to_one(s, theta) ** (-gamma * a2)
                * _dist_to_image(s, theta, s_star, t_star) ** (-gamma * a0)
            )

        return [kernel]

    if kind == "ball_moments":
        gamma, alpha, eps, weighted = params
        kernels = []
        for e in eps:

            def plain(s, theta, _e=e):
                return (_dist_to_one(s, theta) < _e).astype(float)

            kernels.append(plain)
        if weighted:
            for e in eps:

                def heavy(s, theta, _e=e):
                    d = _dist_to_one(s, theta)
                    inside = d < _e
                    out = np.zeros(np.broadcast(s, theta).shape)
                    out[inside] = d[inside] ** (-gamma * alpha)
                    return out

                kernels.append(heavy)
        return kernels

    raise ValueError(f"unknown kernel kind {kind!r}")


# ---------------------------------------------------------------------------
# batched sample generation (field estimators: one stream per sample)


def _field_values_batch(grid, gamma, kernels, master_seed, lo, hi, offset):
    """Per-sample chaos integrals of every kernel for samples [lo, hi)."""
    tables = [_kernel_tables(grid, k) for k in kernels]
    z_pos, z_neg, z_modes = [], [], []
    for i in range(lo, hi):
        g = RngStream(master_seed, offset + i).generator()
        zp, zn, zm = _draw_field_normals(grid, g)
        z_pos.append(zp)
        z_neg.append(zn)
        z_modes.append(zm)
    radial, a, b = _assemble_fields(
        grid, np.asarray(z_pos), np.asarray(z_neg), np.asarray(z_modes)
    )
    mass = _mass_batch(grid, gamma, radial, a, b)
    refined = _refined_mass_batch(grid, gamma, radial, a, b)
    out = np.empty((hi - lo, len(kernels)))
    for col, (base_k, subs) in enumerate(tables):
        vals = np.einsum("bij,ij->b", mass, base_k)
        sub_map = dict(subs)
        for i, j, mass_levels in refined:
            kv_levels = sub_map[(i, j)]
            contribs = np.stack(
                [
                    np.tensordot(m, kv, axes=([1, 2], [0, 1]))
                    for m, kv in zip(mass_levels, kv_levels)
                ],
                axis=1,
            )
            vals = vals + _refined_pick(contribs)
        out[:, col] = vals
    return out


def _field_worker(payload):
    grid_dict, gamma, kind, params, master_seed, lo, hi, offset = payload
    grid = CylinderGrid.from_dict(grid_dict)
    kernels = _make_kernels(kind, params)
    return _field_values_batch(grid, gamma, kernels, master_seed, lo, hi, offset)


def _run_field_samples(cfg, gamma, kind, params, workers, offset=0):
    if cfg.grid is None:
        raise ValueError("this estimator needs cfg.grid")
    payloads = [
        (cfg.grid.as_dict(), gamma, kind, params, cfg.master_seed, lo, hi, offset)
        for lo, hi in _blocks(cfg.n_samples, cfg.batch)
    ]
    parts = _dispatch(_field_worker, payloads, workers)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# three-point structure constant


def estimate_three_point(
    w,
    p: LiouvilleParams,
    cfg: MCConfig,
    *,
    workers: int = 1,
    strict_variance: bool = False,
    unit_volume: bool = False,
    stream_offset: int = 0,
) -> MCEstimate:
    """Monte Carlo three-point structure constant with insertions 0, 1, oo.

    C = 2 mu^{-s} gamma^{-1} Gamma(s) E[rho^{-s}],  s = (sum alpha - 2Q)/gamma,

    where rho integrates |x|_+^{gamma sum(alpha)} / (|x|^{gamma a1}
    |x-1|^{gamma a2}) against the chaos.  The insertions at 0 and infinity
    are exact cylinder ends; the x = 1 singularity must be covered by a
    refinement anchor of cfg.grid.  unit_volume=True drops the
    mu^{-s} Gamma(s) factor (the rescaling C-bar = mu^s C / Gamma(s)).

    Per-sample values rho^{-s} have finite variance only when
    2|s| stays below the moment cap for s < 0; outside that region the
    manifest records variance_ok = False (and strict_variance=True turns
    the flag into a VarianceBlowupError).
    """
    a1, a2, a3 = _real_triple(w)
    q = p.q
    gamma = p.gamma
    for a in (a1, a2, a3):
        if a >= q:
            raise SeibergBoundError(
                f"alpha = {a:g} >= Q = {q:g}: the chaos moment diverges"
            )
    abar = a1 + a2 + a3
    s = (abar - 2.0 * q) / gamma
    cap = _moment_cap(gamma, q, (a1, a2, a3))
    if -s >= cap:
        raise SeibergBoundError(
            f"extended Seiberg bound violated: -s = {-s:g} >= "
            f"min(4/gamma^2, 2(Q-alpha_k)/gamma) = {cap:g}"
        )
    if _gamma_pole_at(s):
        _raise_pole(s, "three-point constant is infinite")
    if cfg.grid is None:
        raise ValueError("three-point estimation needs cfg.grid")
    _require_refined_at(cfg.grid, 0.0, 0.0, "x = 1")

    variance_ok = -2.0 * s < cap
    if strict_variance and not variance_ok:
        raise VarianceBlowupError(
            f"per-sample variance of rho^(-s) is infinite: "
            f"-2s = {-2.0 * s:g} >= {cap:g}"
        )

    vals = _run_field_samples(
        cfg, gamma, "three_point", (gamma, a1, a2, abar), workers, stream_offset
    )[:, 0]
    y = vals ** (-s)
    pref = 2.0 / gamma if unit_volume else 2.0 * p.mu ** (-s) / gamma * _gamma_signed(s)
    n = cfg.n_samples
    mean = float(pref * y.mean())
    stderr = float(abs(pref) * y.std(ddof=1) / math.sqrt(n))

    core = {
        "estimator": "three_point",
        "alphas": [a1, a2, a3],
        "gamma": gamma,
        "mu": p.mu,
        "s": s,
        "unit_volume": bool(unit_volume),
        "variance_ok": bool(variance_ok),
        **_cfg_core(cfg, "per-sample", stream_offset),
    }
    return MCEstimate(mean, stderr, n, _finish_manifest(core, workers))


# ---------------------------------------------------------------------------
# reflection coefficient


def _reflection_worker(payload):
    (
        nu,
        gamma,
        horizon,
        dt,
        stride,
        n_modes,
        n_theta,
        master_seed,
        stream_index,
        count,
        lam,
    ) = payload
    g = RngStream(master_seed, stream_index).generator()
    right = _em_conditioned_batch(nu, horizon, dt, count, g, stride)
    left = _em_conditioned_batch(nu, horizon, dt, count, g, stride)
    k = right.shape[1]
    s_right = stride * dt * np.arange(1, k + 1)
    s = np.concatenate([-s_right[::-1], [0.0], s_right])
    path = np.concatenate([-left[:, ::-1], np.zeros((count, 1)), -right], axis=1)
    z = _z_batch(s, gamma, n_modes, n_theta, count, g)
    v = _trapezoid(np.exp(gamma * path) * z, s, axis=1)
    return v**lam


def estimate_reflection_bar(
    alpha: float,
    p: LiouvilleParams,
    cfg: MCConfig,
    path_cfg: PathConfig | None = None,
    *,
    workers: int = 1,
    stream_offset: int = 0,
) -> MCEstimate:
    """Unit-volume reflection coefficient.

    R-bar(alpha) = E[ (integral of e^{gamma B_s} Z_s ds)^{2(Q-alpha)/gamma} ]

    with B the two-sided conditioned path of drift nu = Q - alpha and Z
    the lateral slice chaos.  The requirement alpha in (gamma/2, Q) is
    equivalent to the moment bound 2(Q-alpha)/gamma < 4/gamma^2, so the
    power is always in the finite-moment region.  One RNG stream per
    batch (see module docstring); the horizon truncates an integrand
    decaying like e^{-gamma nu |s|}.
    """
    gamma = p.gamma
    q = p.q
    if not (gamma / 2.0 < alpha < q):
        raise BoundsError(
            f"alpha must lie in (gamma/2, Q) = ({gamma / 2.0:g}, {q:g}), "
            f"got {alpha:g}"
        )
    nu = q - alpha
    lam = 2.0 * nu / gamma
    pc = path_cfg if path_cfg is not None else PathConfig()
    dt = pc.resolved_dt(nu)
    stride = max(1, int(round(pc.z_spacing / dt)))

    payloads = [
        (
            nu,
            gamma,
            pc.horizon,
            dt,
            stride,
            pc.n_modes,
            pc.n_theta,
            cfg.master_seed,
            stream_offset + b,
            hi - lo,
            lam,
        )
        for b, (lo, hi) in enumerate(_blocks(cfg.n_samples, cfg.batch))
    ]
    y = np.concatenate(_dispatch(_reflection_worker, payloads, workers))
    n = cfg.n_samples
    mean = float(y.mean())
    stderr = float(y.std(ddof=1) / math.sqrt(n))
    core = {
        "estimator": "reflection_bar",
        "alpha": float(alpha),
        "gamma": gamma,
        "mu": p.mu,
        "lambda": lam,
        "path": pc.as_dict(),
        "dt_resolved": dt,
        "record_stride": stride,
        **_cfg_core(cfg, "per-batch", stream_offset),
    }
    return MCEstimate(mean, stderr, n, _finish_manifest(core, workers))


def estimate_reflection(
    alpha: float,
    p: LiouvilleParams,
    cfg: MCConfig,
    path_cfg: PathConfig | None = None,
    *,
    workers: int = 1,
    stream_offset: int = 0,
) -> MCEstimate:
    """Full reflection coefficient.

    R(alpha) = mu^{2(Q-alpha)/gamma} Gamma(-2(Q-alpha)/gamma)
               * (2(Q-alpha)/gamma) * R-bar(alpha).

    The Gamma factor has poles where 2(Q-alpha)/gamma is a positive
    integer, i.e. alpha in {2/gamma - n gamma/2}; those raise PoleError.
    The deterministic prefactor can be negative (R(alpha) < 0 near Q).
    """
    gamma = p.gamma
    q = p.q
    lam = 2.0 * (q - alpha) / gamma
    if abs(lam - round(lam)) <= 1e-9 and round(lam) >= 1:
        _raise_pole(-lam, f"reflection coefficient has a pole at alpha = {alpha:g}")
    bar = estimate_reflection_bar(
        alpha, p, cfg, path_cfg, workers=workers, stream_offset=stream_offset
    )
    factor = p.mu**lam * _gamma_signed(-lam) * lam
    core = {
        "estimator": "reflection",
        "alpha": float(alpha),
        "gamma": gamma,
        "mu": p.mu,
        "lambda": lam,
        "prefactor": factor,
        "path": (path_cfg if path_cfg is not None else PathConfig()).as_dict(),
        **_cfg_core(cfg, "per-batch", stream_offset),
    }
    return MCEstimate(
        float(factor * bar.mean),
        float(abs(factor) * bar.stderr),
        bar.n,
        _finish_manifest(core, workers),
    )


# ---------------------------------------------------------------------------
# two-point limit


def _rescaled(est: MCEstimate, factor: float, workers: int) -> MCEstimate:
    core = {
        k: v for k, v in est.manifest.items() if k not in _HASH_EXCLUDED
    }
    core["scale"] = factor
    return MCEstimate(
        float(factor * est.mean),
        float(abs(factor) * est.stderr),
        est.n,
        _finish_manifest(core, workers),
    )


def estimate_two_point_limit(
    alpha: float,
    eps_list,
    p: LiouvilleParams,
    cfg: MCConfig,
    alpha2: float | None = None,
    *,
    workers: int = 1,
) -> TwoPointLimitReport:
    """Two-point constant as the limit of scaled three-point constants.

    For each eps the estimator runs the three-point constant at weights
    (alpha - alpha2 + eps, alpha2, alpha) — the symmetric case alpha2 =
    alpha gives (eps, alpha, alpha) — scales it by eps, and extrapolates
    eps -> 0 with a 1/stderr^2-weighted least-squares line.  The limit is
    a_factor * R(alpha) with a_factor = 4 when alpha2 = alpha and 2 when
    alpha2 < alpha.

    Each eps run uses its own disjoint block of sample streams, so the
    extrapolation combines statistically independent estimates.  These
    configurations usually sit in the infinite-per-sample-variance
    regime; the per-eps manifests carry variance_ok = False then.
    """
    gamma = p.gamma
    q = p.q
    if not (gamma / 2.0 < alpha < q):
        raise BoundsError(
            f"alpha must lie in (gamma/2, Q) = ({gamma / 2.0:g}, {q:g}), "
            f"got {alpha:g}"
        )
    lam = 2.0 * (q - alpha) / gamma
    if abs(lam - round(lam)) <= 1e-9 and round(lam) >= 1:
        _raise_pole(-lam, f"R has a pole at alpha = {alpha:g}")
    a2 = alpha if alpha2 is None else float(alpha2)
    if a2 > alpha:
        raise ValueError("alpha2 must be <= alpha")
    eps = tuple(sorted(float(e) for e in eps_list))
    if len(eps) < 2:
        raise ValueError("need at least two eps values to extrapolate")
    if eps[0] <= 0.0:
        raise ValueError("eps values must be positive")
    a_factor = 4 if a2 == alpha else 2

    estimates = []
    for j, e in enumerate(eps):
        raw = estimate_three_point(
            WeightTriple(alpha - a2 + e, a2, alpha),
            p,
            cfg,
            workers=workers,
            stream_offset=j * cfg.n_samples,
        )
        estimates.append(_rescaled(raw, e, workers))

    x = np.array(eps)
    y = np.array([est.mean for est in estimates])
    wts = 1.0 / np.array([est.stderr for est in estimates]) ** 2
    s0 = wts.sum()
    s1 = (wts * x).sum()
    s2 = (wts * x * x).sum()
    det = s0 * s2 - s1 * s1
    c0 = (s2 * (wts * y).sum() - s1 * (wts * x * y).sum()) / det
    var0 = s2 / det

    core = {
        "estimator": "two_point_limit",
        "alpha": float(alpha),
        "alpha2": a2,
        "a_factor": a_factor,
        "eps": list(eps),
        "gamma": gamma,
        "mu": p.mu,
        "runs": [est.manifest["hash"] for est in estimates],
        **_cfg_core(cfg, "per-sample", 0),
    }
    return TwoPointLimitReport(
        alpha=float(alpha),
        alpha2=a2,
        a_factor=a_factor,
        eps=eps,
        estimates=tuple(estimates),
        extrapolated_mean=float(c0),
        extrapolated_stderr=float(math.sqrt(var0)),
        manifest=_finish_manifest(core, workers),
    )


# ---------------------------------------------------------------------------
# tail of one (or two) insertion integrals


def _ar1_uniform(phi, innov, z):
    """Stationary AR(1) over a uniform grid from given normals z of shape
    (batch, rows, K); phi/innov are per-row constants."""
    paths = np.empty_like(z)
    paths[:, :, 0] = z[:, :, 0]
    for step in range(1, z.shape[2]):
        paths[:, :, step] = (
            phi[None, :] * paths[:, :, step - 1] + innov[None, :] * z[:, :, step]
        )
    return paths


def _tail_worker(payload):
    (
        gamma,
        nu,
        du,
        n_modes,
        n_theta,
        master_seed,
        lo,
        hi,
        sigmas,
        log_f_tables,
        z_mods,
    ) = payload
    count = hi - lo
    n_wells = len(sigmas)
    k = log_f_tables[0].shape[0]
    u = du * np.arange(k)
    n = np.arange(1, n_modes + 1, dtype=float)
    amp = 1.0 / np.sqrt(n)
    theta = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    ang = np.outer(n, theta)
    cosm, sinm = np.cos(ang), np.sin(ang)
    phi = np.repeat(np.exp(-n * du), 2)
    innov = np.sqrt(1.0 - phi**2)
    h = _harmonic(n_modes)
    dtheta = 2.0 * math.pi / n_theta

    # fixed per-sample draw order: for each well, one normal for the
    # field value at the well, K-1 radial increments, then the mode block
    xi_n = np.empty((count, n_wells))
    xi_b = np.empty((count, n_wells, k - 1))
    zm = np.empty((count, n_wells, 2 * n_modes, k))
    for i in range(count):
        g = RngStream(master_seed, lo + i).generator()
        for wl in range(n_wells):
            xi_n[i, wl] = g.standard_normal()
            xi_b[i, wl] = g.standard_normal(k - 1)
            zm[i, wl] = g.standard_normal((2 * n_modes, k))

    w = np.zeros(count)
    drift = gamma * (-nu * u)
    for wl in range(n_wells):
        b = np.zeros((count, k))
        b[:, 1:] = np.cumsum(math.sqrt(du) * xi_b[:, wl, :], axis=1)
        paths = _ar1_uniform(phi, innov, zm[:, wl])
        a_m, b_m = paths[:, 0::2, :], paths[:, 1::2, :]
        y = np.einsum("n,bnk,nj->bkj", amp, a_m, cosm) + np.einsum(
            "n,bnk,nj->bkj", amp, b_m, sinm
        )
        log_i = (
            (gamma * b + drift[None, :])[:, :, None]
            + gamma * y
            - 0.5 * gamma**2 * h
            + log_f_tables[wl][None, :, :]
        )
        integral = _trapezoid(np.exp(log_i).sum(axis=2) * dtheta, dx=du, axis=1)
        w += z_mods[wl] * np.exp(gamma * sigmas[wl] * xi_n[:, wl]) * integral
    return w


def _rank_fit(w_sorted: np.ndarray, n_thresholds: int):
    """Least-squares line through (log x, log P(W > x)) on log-spaced
    thresholds from the 1% order statistic up to the 30th largest value."""
    n = len(w_sorted)
    k_max = int(0.01 * n)
    lo, hi = w_sorted[n - k_max], w_sorted[n - 30]
    if not (0.0 < lo < hi):
        raise InsufficientTailError(
            "tail thresholds are degenerate; the sample tail is too thin"
        )
    xs = np.geomspace(lo, hi, n_thresholds)
    counts = n - np.searchsorted(w_sorted, xs, side="left")
    slope, intercept = np.polyfit(np.log(xs), np.log(counts / n), 1)
    return float(slope), float(math.exp(intercept)), (float(xs[0]), float(xs[-1]))


def fit_tail_one_insertion(
    alpha: float,
    z,
    F,
    p: LiouvilleParams,
    cfg: MCConfig,
    *,
    rbar=None,
    u_max: float = 25.0,
    du: float = 0.05,
    n_modes: int = 16,
    n_theta: int = 64,
    n_thresholds: int = 20,
    bootstrap_draws: int = 200,
    workers: int = 1,
) -> TailFitReport:
    """Tail fit of W = integral over B(z,1) of F(x) |x-z|^{-gamma alpha} dM.

    Samples W from the local polar decomposition of the field around z
    (an independent field value at the well, a radial Brownian motion,
    and the lateral slice chaos), fits log P(W > x) against log x by rank
    regression, and compares slope/amplitude to the predicted power law
    x^{-2(Q-alpha)/gamma} with amplitude
    |z|^{4 alpha (alpha - Q)} F(z)^{2(Q-alpha)/gamma} R-bar(alpha).

    z may be one point or a sequence of wells (all with |z| > 2); wells
    are sampled independently and W is their sum, which doubles the
    predicted amplitude for two equal wells.  F must map a complex
    ndarray to positive values (None means F = 1); it is only evaluated
    on a fixed point grid, up front, so it never crosses process
    boundaries when workers > 1.  rbar (float or MCEstimate) supplies the
    comparator R-bar; None runs estimate_reflection_bar internally on a
    reserved stream block with n_samples/10 paths.
    """
    gamma = p.gamma
    q = p.q
    if not (gamma / 2.0 < alpha < q):
        raise BoundsError(
            f"alpha must lie in (gamma/2, Q) = ({gamma / 2.0:g}, {q:g}), "
            f"got {alpha:g}"
        )
    wells = tuple(complex(v) for v in np.atleast_1d(z))
    for zk in wells:
        if abs(zk) <= 2.0:
            raise BoundsError(f"well at {zk} too close to the origin; need |z| > 2")
    nu = q - alpha
    lam = 2.0 * nu / gamma
    n = cfg.n_samples
    if int(0.01 * n) < 60:
        raise InsufficientTailError(
            f"the 1% tail of {n} samples holds {int(0.01 * n)} points; "
            "need at least 60 (n_samples >= 6000)"
        )

    if F is None:
        profile = lambda x: np.ones(np.shape(x))  # noqa: E731
    else:
        profile = F
    k = int(round(u_max / du)) + 1
    u = du * np.arange(k)
    theta = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    offsets = np.exp(-u)[:, None] * np.exp(1j * theta)[None, :]
    log_f_tables = []
    f_at_wells = []
    z_mods = []
    sigmas = []
    for zk in wells:
        f_vals = np.asarray(profile(zk + offsets), dtype=float)
        if f_vals.shape != offsets.shape or np.any(f_vals <= 0.0):
            raise ValueError("F must map a complex array to positive values")
        log_f_tables.append(np.log(f_vals))
        f_at_wells.append(float(np.asarray(profile(np.array([zk])))[0]))
        z_mods.append(abs(zk) ** (-4.0 - gamma**2))
        sigmas.append(math.sqrt(2.0 * math.log(abs(zk))))

    payloads = [
        (
            gamma,
            nu,
            du,
            n_modes,
            n_theta,
            cfg.master_seed,
            lo,
            hi,
            tuple(sigmas),
            tuple(log_f_tables),
            tuple(z_mods),
        )
        for lo, hi in _blocks(n, cfg.batch)
    ]
    w_all = np.concatenate(_dispatch(_tail_worker, payloads, workers))

    slope, amplitude, x_range = _rank_fit(np.sort(w_all), n_thresholds)
    blocks = np.array_split(w_all, 20)
    boot_rng = np.random.default_rng((cfg.master_seed, 0x7A11))
    boot = np.empty(bootstrap_draws)
    for t in range(bootstrap_draws):
        pick = boot_rng.integers(0, 20, size=20)
        resampled = np.sort(np.concatenate([blocks[i] for i in pick]))
        boot[t] = _rank_fit(resampled, n_thresholds)[0]
    slope_ci = float(boot.std(ddof=1))

    if rbar is None:
        rbar_val = estimate_reflection_bar(
            alpha,
            p,
            MCConfig(
                n_samples=max(2000, n // 10),
                master_seed=cfg.master_seed,
                batch=cfg.batch,
            ),
            PathConfig(n_modes=n_modes, n_theta=n_theta),
            workers=workers,
            stream_offset=_INTERNAL_STREAM_BASE,
        ).mean
    elif isinstance(rbar, MCEstimate):
        rbar_val = rbar.mean
    else:
        rbar_val = float(rbar)
    theory_amplitude = rbar_val * sum(
        abs(zk) ** (4.0 * alpha * (alpha - q)) * fz**lam
        for zk, fz in zip(wells, f_at_wells)
    )

    core = {
        "estimator": "tail_one_insertion",
        "alpha": float(alpha),
        "gamma": gamma,
        "mu": p.mu,
        "wells": [[zk.real, zk.imag] for zk in wells],
        "profile_at_wells": f_at_wells,
        "u_max": u_max,
        "du": du,
        "n_modes": n_modes,
        "n_theta": n_theta,
        "n_thresholds": n_thresholds,
        "bootstrap_draws": bootstrap_draws,
        **_cfg_core(cfg, "per-sample", 0),
    }
    return TailFitReport(
        fitted_slope=slope,
        slope_ci=slope_ci,
        amplitude=amplitude,
        x_range=x_range,
        n_tail=int(0.01 * n),
        theory_slope=-lam,
        theory_amplitude=float(theory_amplitude),
        manifest=_finish_manifest(core, workers),
    )


# ---------------------------------------------------------------------------
# degenerate four-point function


def four_point_grid(
    z,
    n_modes: int = 16,
    half_width: float = 12.0,
    cells_per_unit: int = 20,
    level: int = 6,
) -> CylinderGrid:
    """Default grid plus a refinement anchor at the image of z."""
    z = complex(z)
    s_star = -math.log(abs(z))
    t_star = math.atan2(z.imag, z.real) % (2.0 * math.pi)
    n_s = int(round(2 * half_width * cells_per_unit))
    return CylinderGrid(
        s_min=-half_width,
        s_max=half_width,
        n_s=n_s,
        n_theta=4 * n_modes,
        n_modes=n_modes,
        refine=((0.0, 0.0, level), (s_star, t_star, level)),
    )


def estimate_four_point(
    z,
    w,
    alpha0: float,
    p: LiouvilleParams,
    cfg: MCConfig,
    *,
    workers: int = 1,
    strict_variance: bool = False,
    enforce_z_domain: bool = True,
    stream_offset: int = 0,
) -> MCEstimate:
    """Reduced four-point function with one degenerate insertion at z.

    T = 2 mu^{-s} gamma^{-1} Gamma(s) E[R_{alpha0}(z)^{-s}],
    s = (alpha0 + sum alpha - 2Q)/gamma,

    with R_{alpha0}(z) the chaos integral of |x|_+^{gamma(alpha0 + sum
    alpha)} / (|x-z|^{gamma alpha0} |x|^{gamma a1} |x-1|^{gamma a2}).
    Both finite singular images (x = 1 and x = z) need refinement
    anchors in cfg.grid; four_point_grid builds a suitable grid.

    The supported v1 domain keeps |z| <= 0.9 and z at least 0.05 away
    from 0 and 1; pass enforce_z_domain=False for limit checks outside it
    (e.g. the z -> 0 consistency test against the fused three-point
    constant).  The closed-form comparator is four_point_rhs, which
    classifies the regime itself (RegimeError outside the covered ones).
    """
    z = complex(z)
    gamma = p.gamma
    q = p.q
    if enforce_z_domain and (
        abs(z) > 0.9 or abs(z) < 0.05 or abs(z - 1.0) < 0.05
    ):
        raise BoundsError(
            f"z = {z} outside the supported domain (|z| <= 0.9 and at "
            "least 0.05 away from 0 and 1)"
        )
    if abs(z) == 0.0 or z == 1.0:
        raise BoundsError("z must differ from the insertion points 0 and 1")
    if not (
        abs(alpha0 + gamma / 2.0) <= 1e-9 or abs(alpha0 + 2.0 / gamma) <= 1e-9
    ):
        raise BoundsError(
            f"alpha0 = {alpha0:g} is not a degenerate weight "
            f"(-gamma/2 = {-gamma / 2.0:g} or -2/gamma = {-2.0 / gamma:g})"
        )
    a1, a2, a3 = _real_triple(w)
    for a in (a1, a2, a3):
        if a >= q:
            raise SeibergBoundError(
                f"alpha = {a:g} >= Q = {q:g}: the chaos moment diverges"
            )
    abar = a1 + a2 + a3
    s = (alpha0 + abar - 2.0 * q) / gamma
    if s <= 0.0:
        raise SeibergBoundError(
            f"four-point Seiberg bound: sum(alpha) = {abar:g} must exceed "
            f"2Q + |alpha0| = {2.0 * q - alpha0:g}"
        )
    if cfg.grid is None:
        raise ValueError("four-point estimation needs cfg.grid")
    s_star = -math.log(abs(z))
    t_star = math.atan2(z.imag, z.real) % (2.0 * math.pi)
    _require_refined_at(cfg.grid, 0.0, 0.0, "x = 1")
    _require_refined_at(cfg.grid, s_star, t_star, "x = z")

    cap = _moment_cap(gamma, q, (alpha0, a1, a2, a3))
    variance_ok = -2.0 * s < cap  # always true here since s > 0
    if strict_variance and not variance_ok:
        raise VarianceBlowupError(
            f"per-sample variance is infinite: -2s = {-2.0 * s:g} >= {cap:g}"
        )

    vals = _run_field_samples(
        cfg,
        gamma,
        "four_point",
        (gamma, float(alpha0), a1, a2, abar, s_star, t_star),
        workers,
        stream_offset,
    )[:, 0]
    y = vals ** (-s)
    pref = 2.0 * p.mu ** (-s) / gamma * _gamma_signed(s)
    n = cfg.n_samples
    core = {
        "estimator": "four_point",
        "z": [z.real, z.imag],
        "alpha0": float(alpha0),
        "alphas": [a1, a2, a3],
        "gamma": gamma,
        "mu": p.mu,
        "s": s,
        "variance_ok": bool(variance_ok),
        **_cfg_core(cfg, "per-sample", stream_offset),
    }
    return MCEstimate(
        float(pref * y.mean()),
        float(abs(pref) * y.std(ddof=1) / math.sqrt(n)),
        n,
        _finish_manifest(core, workers),
    )


# ---------------------------------------------------------------------------
# ball-moment multifractal scaling


def _jackknife_slope(log_eps, samples, powers_col, n_blocks=20):
    """Grouped-jackknife stderr of the log-log slope over sample blocks."""
    blocks = np.array_split(samples, n_blocks, axis=0)
    slopes = []
    for b in range(n_blocks):
        rest = np.concatenate([blk for t, blk in enumerate(blocks) if t != b])
        means = rest.mean(axis=0)
        slopes.append(np.polyfit(log_eps, np.log(means), 1)[0])
    slopes = np.asarray(slopes)
    g = n_blocks
    return float(math.sqrt((g - 1) / g * ((slopes - slopes.mean()) ** 2).sum()))


def moment_scaling_report(
    gamma: float,
    alpha: float,
    p_list,
    eps_list,
    cfg: MCConfig,
    *,
    workers: int = 1,
) -> MomentScalingReport:
    """Multifractal scaling of ball moments around the point x = 1.

    For each radius eps the estimator integrates the chaos over
    B(1, eps), plainly and (when alpha > 0) weighted by
    |x-1|^{-gamma alpha}, and fits the slope of log E[mass^p] against
    log eps for each p.  Comparators: gamma Q p - gamma^2 p^2 / 2 for the
    plain ball and gamma (Q - alpha) p - gamma^2 p^2 / 2 weighted.
    Moments with p >= 4/gamma^2 (or p >= 2(Q-alpha)/gamma weighted) are
    infinite and raise BoundsError.

    Sample means of high moments are dominated by rare large masses, so
    slopes are most reliable at moderate eps; slope_stderr comes from a
    20-block grouped jackknife (the same samples enter every eps).
    """
    if not (0.0 < gamma < 2.0):
        raise BoundsError(f"gamma must lie in (0, 2), got {gamma}")
    q = 2.0 / gamma + gamma / 2.0
    if alpha < 0.0 or alpha >= q:
        raise BoundsError(f"alpha must lie in [0, Q), got {alpha}")
    powers = tuple(float(v) for v in p_list)
    if any(v <= 0.0 for v in powers):
        raise ValueError("moment orders must be positive")
    weighted = alpha > 0.0
    for v in powers:
        if v >= 4.0 / gamma**2:
            raise BoundsError(
                f"moment p = {v:g} >= 4/gamma^2 = {4.0 / gamma**2:g} is infinite"
            )
        if weighted and v >= 2.0 * (q - alpha) / gamma:
            raise BoundsError(
                f"weighted moment p = {v:g} >= 2(Q-alpha)/gamma = "
                f"{2.0 * (q - alpha) / gamma:g} is infinite"
            )
    eps = tuple(sorted(float(e) for e in eps_list))
    if len(eps) < 2:
        raise ValueError("need at least two radii to fit a slope")
    if eps[0] <= 0.0 or eps[-1] >= 1.0:
        raise ValueError("radii must lie in (0, 1)")
    grid = cfg.grid
    if grid is None:
        raise ValueError("moment scaling needs cfg.grid")
    if -math.log(1.0 - eps[-1]) > grid.s_max or -math.log(1.0 + eps[-1]) < grid.s_min:
        raise ValueError("largest ball sticks out of the grid truncation")
    if eps[0] < 2.0 * max(grid.ds, grid.dtheta):
        raise ValueError("smallest ball is under-resolved by the grid")
    if weighted:
        _require_refined_at(grid, 0.0, 0.0, "x = 1")

    vals = _run_field_samples(
        cfg, gamma, "ball_moments", (gamma, float(alpha), eps, weighted), workers
    )
    log_eps = np.log(eps)
    kinds = ("plain",) + (("weighted",) if weighted else ())
    rows = []
    for t, kind in enumerate(kinds):
        cols = vals[:, t * len(eps) : (t + 1) * len(eps)]
        shift = alpha if kind == "weighted" else 0.0
        for v in powers:
            powered = cols**v
            means = powered.mean(axis=0)
            stderrs = powered.std(axis=0, ddof=1) / math.sqrt(cfg.n_samples)
            slope = float(np.polyfit(log_eps, np.log(means), 1)[0])
            rows.append(
                MomentScalingRow(
                    kind=kind,
                    p=v,
                    slope=slope,
                    slope_stderr=_jackknife_slope(log_eps, powered, v),
                    theory_slope=gamma * (q - shift) * v - gamma**2 * v**2 / 2.0,
                    means=tuple(float(m) for m in means),
                    stderrs=tuple(float(s) for s in stderrs),
                )
            )

    core = {
        "estimator": "moment_scaling",
        "gamma": gamma,
        "alpha": float(alpha),
        "p_list": list(powers),
        "eps": list(eps),
        **_cfg_core(cfg, "per-sample", 0),
    }
    return MomentScalingReport(
        eps=eps, rows=tuple(rows), manifest=_finish_manifest(core, workers)
    )
