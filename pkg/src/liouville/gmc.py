"""Cylinder sampling of the whole-plane log-correlated field and its chaos.

Everything here lives in log-polar coordinates x = e^{-s + i theta}: the
radial part of the field is a two-sided Brownian motion in s pinned at
s = 0 (the unit circle), the angular part is the "lateral noise", a
stationary log-correlated field on the cylinder synthesized mode by mode,
and the reference measure |x|_+^{-4} d^2x turns into e^{-2|s|} ds dtheta.
The module also provides the path-space samplers (conditioned drifted
Brownian motion, lateral chaos slices Z_s, the exact law of the running
maximum) that the reflection-coefficient estimators are built on, plus a
dense Cholesky sampler on small planar squares used as a mutual oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    BoundsError,
    FactorizationError,
    PrecisionError,
    SingularCellError,
)

# mean of ln 1/|x - y| over two independent uniform points of the unit
# square; scales to side h as (this constant) - ln h
UNIT_SQUARE_LOG_ENERGY = 0.8050866438867972

# relative change between the two deepest refinement levels below which a
# refined cell's contribution is accepted
_REFINE_RTOL = 5e-3

_JITTER_LADDER = (0.0, 1e-12, 1e-10)


def _harmonic(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def _radial_weight(s):
    """Reference density on the cylinder: |x|_+^{-4} d^2x = e^{-2|s|} ds dtheta."""
    return np.exp(-2.0 * np.abs(s))


# ---------------------------------------------------------------------------
# randomness plumbing


@dataclass(frozen=True)
class RngStream:
    """A derived, reproducible random substream.

    Distinct stream indices give statistically independent generators and
    the same (master_seed, stream_index) pair reproduces the same draws
    byte for byte.
    """

    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng((self.master_seed, self.stream_index))


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class CylinderGrid:
    """Truncated cylinder grid with optional geometric refinement anchors.

    s runs from s_min < 0 (large |x|) to s_max > 0 (near the origin),
    theta over [0, 2pi).  Each refinement anchor (s0, theta0, levels) marks
    a point whose surrounding cells are subdivided `levels` times, halving
    the cell extent in both directions at each level.
    """

    s_min: float
    s_max: float
    n_s: int
    n_theta: int
    n_modes: int
    refine: tuple = ()

    def __post_init__(self):
        if not (self.s_min < 0.0 < self.s_max):
            raise ValueError(
                f"s range must straddle 0, got [{self.s_min}, {self.s_max}]"
            )
        if self.n_s < 2 or self.n_theta < 1 or self.n_modes < 1:
            raise ValueError("grid sizes must be positive")
        if self.n_theta < 4 * self.n_modes:
            raise ValueError(
                f"n_theta={self.n_theta} cannot resolve {self.n_modes} modes; "
                "need n_theta >= 4 n_modes"
            )
        for anchor in self.refine:
            s0, _theta0, levels = anchor
            if not self.s_min <= s0 <= self.s_max:
                raise ValueError(f"refinement anchor at s={s0} is off the grid")
            if levels < 0:
                raise ValueError("refinement levels must be >= 0")

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / self.n_s

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    def s_edges(self) -> np.ndarray:
        return self.s_min + self.ds * np.arange(self.n_s + 1)

    def s_midpoints(self) -> np.ndarray:
        return self.s_edges()[:-1] + 0.5 * self.ds

    def theta_edges(self) -> np.ndarray:
        return self.dtheta * np.arange(self.n_theta + 1)

    def theta_midpoints(self) -> np.ndarray:
        return self.theta_edges()[:-1] + 0.5 * self.dtheta

    def refined_cells(self):
        """Resolve anchors to (i, j, levels) cells; a point on a cell edge
        refines every adjacent cell."""
        out: dict[tuple[int, int], int] = {}
        se, te = self.s_edges(), self.theta_edges()
        tol = 1e-12
        for s0, theta0, levels in self.refine:
            t0 = theta0 % (2.0 * math.pi)
            rows = [
                i
                for i in range(self.n_s)
                if se[i] - tol <= s0 <= se[i + 1] + tol
            ]
            cols = [
                j
                for j in range(self.n_theta)
                if te[j] - tol <= t0 <= te[j + 1] + tol
            ]
            if t0 <= tol or t0 >= 2.0 * math.pi - tol:
                cols = sorted(set(cols) | {0, self.n_theta - 1})
            for i in rows:
                for j in cols:
                    out[(i, j)] = max(out.get((i, j), 0), int(levels))
        return tuple((i, j, lv) for (i, j), lv in sorted(out.items()))

    def as_dict(self) -> dict:
        return {
            "s_min": self.s_min,
            "s_max": self.s_max,
            "n_s": self.n_s,
            "n_theta": self.n_theta,
            "n_modes": self.n_modes,
            "refine": [list(a) for a in self.refine],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CylinderGrid":
        return cls(
            s_min=float(d["s_min"]),
            s_max=float(d["s_max"]),
            n_s=int(d["n_s"]),
            n_theta=int(d["n_theta"]),
            n_modes=int(d["n_modes"]),
            refine=tuple(tuple(a) for a in d.get("refine", ())),
        )

    @classmethod
    def default(
        cls,
        n_modes: int = 16,
        half_width: float = 12.0,
        cells_per_unit: int = 20,
        refine=((0.0, 0.0, 6),),
    ) -> "CylinderGrid":
        """Desk-scale grid: s in [-12, 12] keeps the expected truncated-out
        mass below 1e-3 of the full-plane total for gamma <= 1.4."""
        n_s = int(round(2 * half_width * cells_per_unit))
        return cls(
            s_min=-half_width,
            s_max=half_width,
            n_s=n_s,
            n_theta=4 * n_modes,
            n_modes=n_modes,
            refine=tuple(refine),
        )


def _sub_midpoints(lo: float, width: float, level: int) -> np.ndarray:
    m = 2**level
    return lo + (np.arange(m) + 0.5) * (width / m)


@lru_cache(maxsize=32)
def _sample_plan(grid: CylinderGrid):
    """All s values the field must be sampled at, plus bookkeeping that maps
    base cells and refined sub-cells to positions in that array."""
    se, te = grid.s_edges(), grid.theta_edges()
    base = se[:-1] + 0.5 * grid.ds
    parts = [base]
    raw_entries = []
    for i, j, levels in grid.refined_cells():
        per_level_s = [
            _sub_midpoints(se[i], grid.ds, lv) for lv in range(levels + 1)
        ]
        per_level_t = [
            _sub_midpoints(te[j], grid.dtheta, lv) for lv in range(levels + 1)
        ]
        parts.extend(per_level_s)
        raw_entries.append((i, j, levels, per_level_s, per_level_t))
    s_values = np.unique(np.concatenate(parts))
    base_idx = np.searchsorted(s_values, base)
    entries = tuple(
        (
            i,
            j,
            levels,
            tuple(np.searchsorted(s_values, ss) for ss in per_level_s),
            tuple(per_level_t),
        )
        for i, j, levels, per_level_s, per_level_t in raw_entries
    )
    return s_values, base_idx, entries


@lru_cache(maxsize=32)
def _mode_tables(grid: CylinderGrid):
    """cos/sin(n theta_j) tables and the n^{-1/2} mode amplitudes."""
    n = np.arange(1, grid.n_modes + 1, dtype=float)
    theta = grid.theta_midpoints()
    ang = np.outer(n, theta)
    return np.cos(ang), np.sin(ang), 1.0 / np.sqrt(n)


# ---------------------------------------------------------------------------
# field sampling


@dataclass(frozen=True, eq=False)
class CylinderField:
    """One sample of the field on a cylinder grid.

    radial holds the two-sided Brownian motion B_s at every sampled s
    (B_0 = 0, independent increments of variance = interval length);
    mode_cos[n-1] and mode_sin[n-1] hold the stationary unit-variance
    processes a_n(s), b_n(s) with covariance e^{-n|s-t|}.  The field at a
    point is  X(s, theta) = B_s + sum_n n^{-1/2} (a_n cos + b_n sin)(n theta).
    """

    grid: CylinderGrid
    s_values: np.ndarray
    radial: np.ndarray
    mode_cos: np.ndarray
    mode_sin: np.ndarray
    seed_manifest: dict = field(default_factory=dict)

    def value(self, s_index, theta):
        """Field at sampled s (by index into s_values) and arbitrary theta."""
        n = np.arange(1, self.grid.n_modes + 1, dtype=float)
        ang = np.multiply.outer(n, np.asarray(theta, dtype=float))
        lateral = np.tensordot(
            self.mode_cos[:, s_index] / np.sqrt(n), np.cos(ang), axes=(0, 0)
        ) + np.tensordot(
            self.mode_sin[:, s_index] / np.sqrt(n), np.sin(ang), axes=(0, 0)
        )
        return self.radial[s_index] + lateral


def _draw_field_normals(grid: CylinderGrid, g: np.random.Generator):
    """Raw standard normals for one field, in a fixed order (radial positive
    side, radial negative side, then a_n and b_n for each mode)."""
    s_values, _, _ = _sample_plan(grid)
    k = len(s_values)
    n_pos = int(np.sum(s_values > 0))
    n_neg = k - n_pos
    z_pos = g.standard_normal(n_pos)
    z_neg = g.standard_normal(n_neg)
    z_modes = np.empty((2 * grid.n_modes, k))
    for m in range(grid.n_modes):
        z_modes[2 * m] = g.standard_normal(k)
        z_modes[2 * m + 1] = g.standard_normal(k)
    return z_pos, z_neg, z_modes


def _assemble_fields(grid: CylinderGrid, z_pos, z_neg, z_modes):
    """Turn batches of raw normals into radial paths and AR(1) mode paths.

    Shapes: z_pos (B, n_pos), z_neg (B, n_neg), z_modes (B, 2 n_modes, K).
    The AR(1) recursion is exact for the e^{-n|s-t|} covariance on an
    arbitrary s grid.
    """
    s_values, _, _ = _sample_plan(grid)
    k = len(s_values)
    batch = z_modes.shape[0]
    neg_mask = s_values < 0
    pos_mask = s_values > 0
    s_pos = s_values[pos_mask]
    s_neg = s_values[neg_mask]

    radial = np.zeros((batch, k))
    if s_pos.size:
        std = np.sqrt(np.diff(s_pos, prepend=0.0))
        radial[:, pos_mask] = np.cumsum(std[None, :] * z_pos, axis=1)
    if s_neg.size:
        dist = -s_neg[::-1]  # ascending distance from 0
        std = np.sqrt(np.diff(dist, prepend=0.0))
        walk = np.cumsum(std[None, :] * z_neg, axis=1)
        radial[:, neg_mask] = walk[:, ::-1]

    n = np.arange(1, grid.n_modes + 1, dtype=float)
    gaps = np.diff(s_values)
    phi = np.exp(-np.outer(n, gaps))  # (n_modes, K-1)
    phi = np.repeat(phi, 2, axis=0)  # interleaved a/b rows
    innov = np.sqrt(1.0 - phi**2)
    paths = np.empty_like(z_modes)
    paths[:, :, 0] = z_modes[:, :, 0]
    for step in range(1, k):
        paths[:, :, step] = (
            phi[None, :, step - 1] * paths[:, :, step - 1]
            + innov[None, :, step - 1] * z_modes[:, :, step]
        )
    return radial, paths[:, 0::2, :], paths[:, 1::2, :]


def sample_field(grid: CylinderGrid, rng: RngStream) -> CylinderField:
    """Exact sample of the cylinder field at every grid (and refinement)
    point.  Radial increments are Gaussian with variance = interval length;
    lateral modes use the exact AR(1) transition e^{-n ds}."""
    g = rng.generator()
    z_pos, z_neg, z_modes = _draw_field_normals(grid, g)
    radial, a, b = _assemble_fields(
        grid, z_pos[None, :], z_neg[None, :], z_modes[None, :, :]
    )
    s_values, _, _ = _sample_plan(grid)
    return CylinderField(
        grid=grid,
        s_values=s_values,
        radial=radial[0],
        mode_cos=a[0],
        mode_sin=b[0],
        seed_manifest={
            "master_seed": rng.master_seed,
            "stream_index": rng.stream_index,
        },
    )


# ---------------------------------------------------------------------------
# chaos construction


@dataclass(frozen=True, eq=False)
class ChaosMeasure:
    """Cell masses of the multiplicative chaos against |x|_+^{-4} d^2x.

    cell_mass is the full base grid; for refined cells the entry holds the
    deepest-level total, and `refined` keeps the per-level sub-cell mass
    arrays (level ell is a 2^ell x 2^ell matrix) for kernels that need the
    finer midpoints.
    """

    grid: CylinderGrid
    gamma: float
    cell_mass: np.ndarray
    refined: dict
    seed_manifest: dict = field(default_factory=dict)

    def total_mass(self) -> float:
        return float(self.cell_mass.sum())


def _mass_batch(grid: CylinderGrid, gamma: float, radial, a, b):
    """Base-grid cell masses for a batch of fields: (B, n_s, n_theta)."""
    s_values, base_idx, _ = _sample_plan(grid)
    cosmat, sinmat, amp = _mode_tables(grid)
    s_mid = s_values[base_idx]
    x = radial[:, base_idx][:, :, None] + np.einsum(
        "n,bnk,nj->bkj", amp, a[:, :, base_idx], cosmat
    ) + np.einsum("n,bnk,nj->bkj", amp, b[:, :, base_idx], sinmat)
    var = np.abs(s_mid) + _harmonic(grid.n_modes)
    log_norm = gamma * x - 0.5 * gamma**2 * var[None, :, None]
    area = grid.ds * grid.dtheta
    return np.exp(log_norm) * (_radial_weight(s_mid)[None, :, None] * area)


def _refined_mass_batch(grid: CylinderGrid, gamma: float, radial, a, b):
    """Per-level sub-cell masses for every refined cell.

    Returns a list of (i, j, [mass_level_0, ..., mass_level_L]) where each
    mass array has shape (B, 2^ell, 2^ell).
    """
    _, _, entries = _sample_plan(grid)
    h = _harmonic(grid.n_modes)
    out = []
    n = np.arange(1, grid.n_modes + 1, dtype=float)
    amp = 1.0 / np.sqrt(n)
    for i, j, levels, s_idx_levels, theta_levels in entries:
        per_level = []
        for lv in range(levels + 1):
            idx = s_idx_levels[lv]
            theta = theta_levels[lv]
            ang = np.outer(n, theta)
            cosm, sinm = np.cos(ang), np.sin(ang)
            x = radial[:, idx][:, :, None] + np.einsum(
                "n,bnk,nj->bkj", amp, a[:, :, idx], cosm
            ) + np.einsum("n,bnk,nj->bkj", amp, b[:, :, idx], sinm)
            s_sub = _sample_plan(grid)[0][idx]
            var = np.abs(s_sub) + h
            area = (grid.ds / 2**lv) * (grid.dtheta / 2**lv)
            mass = np.exp(gamma * x - 0.5 * gamma**2 * var[None, :, None])
            mass *= _radial_weight(s_sub)[None, :, None] * area
            per_level.append(mass)
        out.append((i, j, per_level))
    return out


def build_chaos(field: CylinderField, grid: CylinderGrid, gamma: float) -> ChaosMeasure:
    """Midpoint chaos masses exp(gamma X - gamma^2/2 E[X^2]) w(s) ds dtheta,
    with E[X^2] = |s| + sum_{n <= n_modes} 1/n.  gamma = 0 degenerates to
    the (deterministic) reference measure."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    radial = field.radial[None, :]
    a = field.mode_cos[None, :, :]
    b = field.mode_sin[None, :, :]
    cell = _mass_batch(grid, gamma, radial, a, b)[0]
    refined = {}
    for i, j, per_level in _refined_mass_batch(grid, gamma, radial, a, b):
        levels = [m[0] for m in per_level]
        refined[(i, j)] = tuple(levels)
        cell[i, j] = float(levels[-1].sum())
    return ChaosMeasure(
        grid=grid,
        gamma=gamma,
        cell_mass=cell,
        refined=refined,
        seed_manifest=dict(field.seed_manifest),
    )


def _kernel_tables(grid: CylinderGrid, kernel):
    """Kernel values on the base grid and on every refined sub-level.

    Base values at refined cells are replaced by 0 (those cells are handled
    at their sub-levels); any non-finite value elsewhere is a contract
    violation of the caller's kernel.
    """
    s_mid = grid.s_midpoints()
    theta_mid = grid.theta_midpoints()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        base = np.asarray(
            kernel(s_mid[:, None], theta_mid[None, :]), dtype=float
        )
    _, _, entries = _sample_plan(grid)
    refined_idx = [(i, j) for i, j, *_ in entries]
    for i, j in refined_idx:
        base[i, j] = 0.0
    if not np.all(np.isfinite(base)):
        i, j = np.argwhere(~np.isfinite(base))[0]
        raise SingularCellError(
            f"kernel is not finite at cell midpoint (s={s_mid[i]:g}, "
            f"theta={theta_mid[j]:g}); add a refinement anchor"
        )
    subs = []
    s_values, _, _ = _sample_plan(grid)
    for i, j, levels, s_idx_levels, theta_levels in entries:
        per_level = []
        for lv in range(levels + 1):
            kv = np.asarray(
                kernel(
                    s_values[s_idx_levels[lv]][:, None],
                    theta_levels[lv][None, :],
                ),
                dtype=float,
            )
            if not np.all(np.isfinite(kv)):
                raise SingularCellError(
                    f"kernel is not finite inside refined cell ({i}, {j}) "
                    f"at level {lv}"
                )
            per_level.append(kv)
        subs.append(((i, j), per_level))
    return base, subs


def _refined_pick(contribs: np.ndarray) -> np.ndarray:
    """Per-sample adaptive level choice: first level whose contribution moved
    by < _REFINE_RTOL relative to the previous one, else the deepest."""
    batch, n_levels = contribs.shape
    if n_levels == 1:
        return contribs[:, 0]
    diff = np.abs(np.diff(contribs, axis=1))
    scale = np.maximum(np.abs(contribs[:, 1:]), 1e-300)
    ok = diff <= _REFINE_RTOL * scale
    # index of the first converged level (offset by 1 into contribs)
    first = np.argmax(ok, axis=1)
    has = ok.any(axis=1)
    pick = np.where(has, first + 1, n_levels - 1)
    return contribs[np.arange(batch), pick]


def integrate_kernel(measure: ChaosMeasure, kernel) -> float:
    """Sum of kernel(midpoint) * cell mass, with refined cells evaluated at
    their sub-level midpoints and accepted once the last two levels agree
    to 0.5%.  `kernel` must be vectorized over (s, theta) arrays and finite
    at every evaluated midpoint (SingularCellError otherwise).
    """
    base_k, subs = _kernel_tables(measure.grid, kernel)
    total = float(np.sum(base_k * measure.cell_mass))
    # zeroed base entries of refined cells also zeroed their cell_mass term
    s_mid = measure.grid.s_midpoints()
    theta_mid = measure.grid.theta_midpoints()
    for (i, j), kv_levels in subs:
        if (i, j) not in measure.refined:
            # measures loaded from a dump keep only the folded base masses
            kv = float(kernel(np.array([s_mid[i]]), np.array([theta_mid[j]]))[0])
            if not math.isfinite(kv):
                raise SingularCellError(
                    f"kernel singular at cell ({i}, {j}) and no sub-level "
                    "masses are available"
                )
            total += kv * float(measure.cell_mass[i, j])
            continue
        mass_levels = measure.refined[(i, j)]
        contribs = np.array(
            [[float(np.sum(kv * m)) for kv, m in zip(kv_levels, mass_levels)]]
        )
        total += float(_refined_pick(contribs)[0])
    return total


# ---------------------------------------------------------------------------
# lateral covariance bookkeeping


def lateral_covariance_modes(s, t, dtheta, n_modes: int) -> float:
    """Truncated mode sum sum_{n<=N} e^{-n|s-t|} cos(n dtheta) / n."""
    n = np.arange(1, n_modes + 1, dtype=float)
    r = math.exp(-abs(s - t))
    return float(np.sum(r**n * np.cos(n * dtheta) / n))


def lateral_covariance_exact(s, t, dtheta) -> float:
    """ln( (e^{-s} v e^{-t}) / |e^{-s} e^{i dtheta} - e^{-t}| )."""
    top = max(math.exp(-s), math.exp(-t))
    gap = abs(math.exp(-s) * complex(math.cos(dtheta), math.sin(dtheta)) - math.exp(-t))
    return math.log(top / gap)


def lateral_tail_bound(s, t, dtheta, n_modes: int) -> float:
    """Upper bound on the dropped tail sum_{n>N} e^{-n|s-t|} cos(n dtheta)/n."""
    r = math.exp(-abs(s - t))
    if r < 1.0:
        return r ** (n_modes + 1) / ((n_modes + 1) * (1.0 - r))
    # equal radii: Dirichlet-kernel (Abel summation) bound
    return 1.0 / ((n_modes + 1) * abs(math.sin(dtheta / 2.0)))


# ---------------------------------------------------------------------------
# path samplers


@dataclass(frozen=True, eq=False)
class ConditionedPath:
    """Two-sided path of the drifted Brownian motion conditioned to stay
    negative, glued at s = 0 where the value is 0."""

    s: np.ndarray
    values: np.ndarray
    nu: float


def _coth(y):
    # stable for all y > 0: -> 1/y as y -> 0, -> 1 as y -> inf
    return 1.0 + 2.0 / np.expm1(2.0 * y)


def max_step_for(nu: float) -> float:
    """Largest Euler-Maruyama step the conditioned sampler accepts."""
    return 1e-3 * min(1.0, 1.0 / nu**2)


def _em_conditioned_batch(nu, horizon, dt, n, g, record_stride=1):
    """Euler-Maruyama paths of the +nu coth(nu x) diffusion (the negated
    conditioned process), entrance at sqrt(dt), steps crossing zero redrawn.

    Returns values at s = k * dt * record_stride, k = 1..K (positive side
    of the process, i.e. negate for the conditioned path)."""
    steps = int(round(horizon / dt))
    n_rec = steps // record_stride
    rec = np.empty((n, n_rec))
    x = np.full(n, math.sqrt(dt))
    sqdt = math.sqrt(dt)
    r = 0
    for k in range(1, steps + 1):
        drift = nu * _coth(nu * x) * dt
        prop = x + drift + sqdt * g.standard_normal(n)
        bad = prop <= 0.0
        tries = 0
        while bad.any():
            prop[bad] = x[bad] + drift[bad] + sqdt * g.standard_normal(int(bad.sum()))
            bad = prop <= 0.0
            tries += 1
            if tries > 10_000:
                raise PrecisionError("conditioned path stuck at the 0 boundary")
        x = prop
        if k % record_stride == 0:
            rec[:, r] = x
            r += 1
    return rec


def sample_conditioned_bm(
    nu: float, horizon: float, dt: float, rng: RngStream
) -> ConditionedPath:
    """Two independent one-sided conditioned paths glued at 0.

    The one-sided process is the negation of the diffusion with generator
    (1/2) d^2/dx^2 + nu coth(nu x) d/dx started at the entrance point
    (numerically x0 = sqrt(dt)).
    """
    if nu <= 0:
        raise BoundsError(f"drift nu must be positive, got {nu}")
    if dt > max_step_for(nu):
        raise ValueError(
            f"dt={dt:g} too coarse for nu={nu:g}; need dt <= {max_step_for(nu):g}"
        )
    g = rng.generator()
    right = _em_conditioned_batch(nu, horizon, dt, 1, g)[0]
    left = _em_conditioned_batch(nu, horizon, dt, 1, g)[0]
    steps = len(right)
    s_right = dt * np.arange(1, steps + 1)
    s = np.concatenate([-s_right[::-1], [0.0], s_right])
    values = np.concatenate([-left[::-1], [0.0], -right])
    return ConditionedPath(s=s, values=values, nu=nu)


def sample_max_drifted_bm(nu: float, rng: RngStream) -> float:
    """Exact draw of M = sup_s (B_s - nu s): exponential with rate 2 nu,
    by inverse CDF."""
    if nu <= 0:
        raise BoundsError(f"drift nu must be positive, got {nu}")
    u = rng.generator().random()
    return -math.log(1.0 - u) / (2.0 * nu)


def reversal_marginal_batch(
    nu: float,
    s_eval: float,
    n: int,
    rng: RngStream,
    level: float = 6.0,
    dt: float = 1e-3,
    max_rounds: int = 8,
) -> np.ndarray:
    """Marginal of the conditioned path at s_eval via Williams time reversal.

    Simulates Brownian motion with drift +nu to its first passage of
    `level` and reads the reversed path s_eval before the passage time;
    by the time-reversal lemma this has the law of the conditioned path at
    s_eval up to the (exponentially small in `level`) event that the
    conditioned path returns to -level after s_eval.
    """
    g = rng.generator()
    k_eval = int(round(s_eval / dt))
    max_steps = int(round((level / nu * 6 + s_eval) / dt))
    out = np.empty(0)
    for _ in range(max_rounds):
        need = n - len(out)
        if need <= 0:
            break
        w = np.zeros(need)
        buf = np.zeros((k_eval + 1, need))  # ring buffer of the last k_eval+1 values
        hit_val = np.full(need, np.nan)
        alive = np.ones(need, dtype=bool)
        sqdt = math.sqrt(dt)
        for k in range(1, max_steps + 1):
            w = w + nu * dt + sqdt * g.standard_normal(need)
            crossed = alive & (w >= level)
            if k >= k_eval:
                if crossed.any():
                    # reverse from the realized passage value, not the nominal
                    # level: the discrete path overshoots by ~0.58 sqrt(dt)
                    hit_val[crossed] = (
                        buf[(k - k_eval) % (k_eval + 1), crossed] - w[crossed]
                    )
                    alive[crossed] = False
            else:
                alive &= ~crossed  # passage before s_eval: discard the path
            buf[k % (k_eval + 1)] = w
            if not alive.any():
                break
        got = hit_val[~np.isnan(hit_val)]
        out = np.concatenate([out, got])
    if len(out) < n:
        raise PrecisionError(
            "reversal sampler could not collect enough valid paths; "
            "raise `level` or `max_rounds`"
        )
    return out[:n]


# ---------------------------------------------------------------------------
# lateral chaos slices Z_s


def _ar1_over(s_values, n_modes, batch, g):
    """Stationary AR(1) mode paths over an arbitrary sorted s grid:
    returns (batch, 2 n_modes, K) with a/b rows interleaved."""
    k = len(s_values)
    z = g.standard_normal((batch, 2 * n_modes, k))
    n = np.arange(1, n_modes + 1, dtype=float)
    phi = np.exp(-np.outer(n, np.diff(s_values)))
    phi = np.repeat(phi, 2, axis=0)
    innov = np.sqrt(1.0 - phi**2)
    paths = np.empty_like(z)
    paths[:, :, 0] = z[:, :, 0]
    for step in range(1, k):
        paths[:, :, step] = (
            phi[None, :, step - 1] * paths[:, :, step - 1]
            + innov[None, :, step - 1] * z[:, :, step]
        )
    return paths


def _z_batch(s_values, gamma, n_modes, n_theta, batch, g):
    """Z_s per grid point for a batch: theta-integrated lateral chaos
    sum_j exp(gamma Y - gamma^2/2 E[Y^2]) dtheta, shape (batch, K)."""
    paths = _ar1_over(s_values, n_modes, batch, g)
    a, b = paths[:, 0::2, :], paths[:, 1::2, :]
    n = np.arange(1, n_modes + 1, dtype=float)
    amp = 1.0 / np.sqrt(n)
    theta = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    ang = np.outer(n, theta)
    cosm, sinm = np.cos(ang), np.sin(ang)
    y = np.einsum("n,bnk,nj->bkj", amp, a, cosm) + np.einsum(
        "n,bnk,nj->bkj", amp, b, sinm
    )
    h = _harmonic(n_modes)
    dens = np.exp(gamma * y - 0.5 * gamma**2 * h)
    return dens.sum(axis=2) * (2.0 * math.pi / n_theta)


def sample_z_process(
    s_values: np.ndarray,
    gamma: float,
    n_modes: int,
    n_theta: int,
    rng: RngStream,
) -> np.ndarray:
    """One sample of the slice process Z_s on the given s grid (stationary
    in s by construction; E[Z_s] = 2 pi for every s)."""
    if n_theta < 4 * n_modes:
        raise ValueError("n_theta must be >= 4 n_modes")
    s_values = np.asarray(s_values, dtype=float)
    if np.any(np.diff(s_values) <= 0):
        raise ValueError("s grid must be strictly increasing")
    g = rng.generator()
    return _z_batch(s_values, gamma, n_modes, n_theta, 1, g)[0]


# ---------------------------------------------------------------------------
# dense planar oracle


@dataclass(frozen=True, eq=False)
class OracleField:
    """Exact Gaussian field sample on an n x n planar square grid."""

    centers: np.ndarray  # (n^2, 2)
    values: np.ndarray  # (n^2,)
    var_diag: np.ndarray  # (n^2,)
    h: float  # cell side


@lru_cache(maxsize=8)
def _oracle_factor(n: int, region: tuple):
    x0, y0, side = region
    h = side / n
    mids = np.arange(n) * h + h / 2.0
    xs, ys = np.meshgrid(x0 + mids, y0 + mids, indexing="ij")
    centers = np.column_stack([xs.ravel(), ys.ravel()])
    radii = np.hypot(centers[:, 0], centers[:, 1])
    log_plus = np.log(np.maximum(radii, 1.0))
    dx = centers[:, None, 0] - centers[None, :, 0]
    dy = centers[:, None, 1] - centers[None, :, 1]
    dist = np.hypot(dx, dy)
    with np.errstate(divide="ignore"):
        cov = -np.log(dist) + log_plus[:, None] + log_plus[None, :]
    diag = (UNIT_SQUARE_LOG_ENERGY - math.log(h)) + 2.0 * log_plus
    np.fill_diagonal(cov, diag)
    for jitter in _JITTER_LADDER:
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(len(cov)))
            return centers, diag, h, chol
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"covariance on the {n}x{n} grid is not positive definite within "
        f"the jitter budget {_JITTER_LADDER[-1]:g}"
    )


def grid_oracle_field(n: int, region, rng: RngStream) -> OracleField:
    """Exact dense-Cholesky sample of the field at the n x n cell midpoints
    of a planar square `region` = (x0, y0, side).  The covariance diagonal
    is the cell-averaged self-covariance, so cell-midpoint chaos masses have
    exactly unit-mean density."""
    if n > 64:
        raise ValueError(f"dense oracle limited to n <= 64, got {n}")
    if n < 1:
        raise ValueError("n must be positive")
    region = (float(region[0]), float(region[1]), float(region[2]))
    centers, diag, h, chol = _oracle_factor(n, region)
    z = rng.generator().standard_normal(len(centers))
    return OracleField(centers=centers, values=chol @ z, var_diag=diag, h=h)


def oracle_chaos_mass(f: OracleField, gamma: float) -> np.ndarray:
    """Per-cell chaos masses of the oracle sample against |x|_+^{-4} d^2x."""
    radii = np.hypot(f.centers[:, 0], f.centers[:, 1])
    ref = np.maximum(radii, 1.0) ** -4.0 * f.h**2
    return np.exp(gamma * f.values - 0.5 * gamma**2 * f.var_diag) * ref


def _oracle_mass_batch(n, region, gamma, master_seed, count, stream_offset=0):
    """Chaos-mass batches from the dense oracle, one substream per sample."""
    centers, diag, h, chol = _oracle_factor(
        n, (float(region[0]), float(region[1]), float(region[2]))
    )
    radii = np.hypot(centers[:, 0], centers[:, 1])
    ref = np.maximum(radii, 1.0) ** -4.0 * h**2
    out = np.empty((count, len(centers)))
    for i in range(count):
        z = RngStream(master_seed, stream_offset + i).generator().standard_normal(
            len(centers)
        )
        v = chol @ z
        out[i] = np.exp(gamma * v - 0.5 * gamma**2 * diag) * ref
    return out


# ---------------------------------------------------------------------------
# binary dumps


_MAGIC = b"LGMC"
_DUMP_VERSION = 1


def save_chaos(measure: ChaosMeasure, path) -> None:
    """Versioned binary dump: magic, version, JSON header (grid, gamma,
    seed manifest), then row-major little-endian float64 base cell masses.
    Refined sub-level masses are not serialized; the base grid already
    carries their deepest-level totals."""
    meta = json.dumps(
        {
            "grid": measure.grid.as_dict(),
            "gamma": measure.gamma,
            "seed_manifest": measure.seed_manifest,
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_DUMP_VERSION.to_bytes(4, "little"))
        fh.write(len(meta).to_bytes(8, "little"))
        fh.write(meta)
        fh.write(np.ascontiguousarray(measure.cell_mass, dtype="<f8").tobytes())


def load_chaos(path) -> ChaosMeasure:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a chaos dump")
        version = int.from_bytes(fh.read(4), "little")
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        meta_len = int.from_bytes(fh.read(8), "little")
        meta = json.loads(fh.read(meta_len).decode())
        grid = CylinderGrid.from_dict(meta["grid"])
        raw = fh.read(8 * grid.n_s * grid.n_theta)
    cell = np.frombuffer(raw, dtype="<f8").reshape(grid.n_s, grid.n_theta).copy()
    return ChaosMeasure(
        grid=grid,
        gamma=float(meta["gamma"]),
        cell_mass=cell,
        refined={},
        seed_manifest=dict(meta.get("seed_manifest", {})),
    )
