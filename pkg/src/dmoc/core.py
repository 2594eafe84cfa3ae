"""Evaluation grids and the exact discrete modulus of continuity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from dmoc import _kernels
from dmoc.metric_space import DataSet, GeometrySummary, geometry, pair_indices, pair_values

GRID_KINDS = ("exponential", "linear", "explicit")
_GRID_CODES = {
    "explicit": _kernels.GRID_EXPLICIT,
    "exponential": _kernels.GRID_EXPONENTIAL,
    "linear": _kernels.GRID_LINEAR,
}

DEFAULT_K = 10_000


class DuplicateSiteWarning(UserWarning):
    """Identical sites carry different values; omega is positive at every scale."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing positive evaluation scales.

    ``inv_step`` holds 1/log(ratio) for exponential grids and 1/spacing for
    linear ones; it drives the constant-time bucket lookup.
    """

    scales: np.ndarray
    kind: str = "explicit"
    inv_step: float = 0.0

    def __post_init__(self):
        if self.kind not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        scales = np.array(self.scales, dtype=np.float64).ravel()
        if scales.size < 1:
            raise ValueError("a grid needs at least one scale")
        if not np.all(np.isfinite(scales)) or scales[0] <= 0:
            raise ValueError("grid scales must be finite and positive")
        if np.any(np.diff(scales) <= 0):
            raise ValueError("grid scales must be strictly increasing")
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)
        if scales.size == 1 or self.inv_step <= 0:
            # no closed-form lookup without a step; fall back to binary search
            object.__setattr__(self, "kind", "explicit")

    def __len__(self) -> int:
        return self.scales.size

    @property
    def K(self) -> int:
        return self.scales.size

    @property
    def code(self) -> int:
        return _GRID_CODES[self.kind]

    def same_scales(self, other: Grid) -> bool:
        return self.scales.shape == other.scales.shape and bool(
            np.all(self.scales.view(np.uint64) == other.scales.view(np.uint64))
        )


def make_grid(kind: str, K: int, t_min: float, t_max: float) -> Grid:
    """Geometric or arithmetic scales from ``t_min`` to ``t_max`` inclusive."""
    if kind not in ("exponential", "linear"):
        raise ValueError(f"make_grid builds exponential or linear grids, not {kind!r}")
    if not (math.isfinite(t_min) and math.isfinite(t_max)) or t_min <= 0:
        raise ValueError(f"t_min must be positive and finite, got {t_min}")
    if t_min > t_max:
        raise ValueError(f"t_min={t_min} exceeds t_max={t_max}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K == 1:
        if t_min != t_max:
            raise ValueError("K=1 requires t_min == t_max")
        return Grid(np.array([float(t_min)]), kind)
    if t_min == t_max:
        raise ValueError("K >= 2 requires t_min < t_max")
    k = np.arange(K, dtype=np.float64)
    if kind == "exponential":
        log_ratio = (math.log(t_max) - math.log(t_min)) / (K - 1)
        scales = t_min * np.exp(k * log_ratio)
        inv_step = 1.0 / log_ratio
    else:
        step = (t_max - t_min) / (K - 1)
        scales = t_min + k * step
        inv_step = 1.0 / step
    scales[0] = t_min
    scales[-1] = t_max
    return Grid(scales, kind, inv_step)


def explicit_grid(scales) -> Grid:
    return Grid(np.asarray(scales, dtype=np.float64), "explicit")


def grid_bucket(grid: Grid, r: float) -> int | None:
    """Index of the smallest scale with ``r <= t_k``; None beyond the last scale."""
    k = int(
        _kernels.bucket_many(
            grid.scales, grid.code, grid.scales[0], grid.inv_step, np.array([float(r)])
        )[0]
    )
    return None if k < 0 else k


def grid_buckets(grid: Grid, r: np.ndarray) -> np.ndarray:
    """Vectorized :func:`grid_bucket`; -1 marks distances past the grid."""
    return _kernels.bucket_many(
        grid.scales, grid.code, grid.scales[0], grid.inv_step, np.ascontiguousarray(r, dtype=np.float64)
    )


def default_grid(
    ds: DataSet,
    K: int = DEFAULT_K,
    kind: str = "exponential",
    t_min: float | None = None,
    t_max: float | None = None,
    geom: GeometrySummary | None = None,
) -> Grid:
    """Grid from the separation distance up to the data diameter.

    With duplicate sites the smallest positive distance replaces the
    (zero) separation distance.  With K = 1, or when the two ends
    coincide, the grid is the single scale t_max.
    """
    if t_min is None or t_max is None:
        geom = geom or geometry(ds)
        if t_min is None:
            if geom.min_positive is None:
                raise ValueError("all sites coincide; no positive scale exists")
            t_min = geom.separation if geom.separation > 0 else geom.min_positive
        if t_max is None:
            t_max = geom.diameter
    if K == 1 or t_min == t_max:
        return explicit_grid([t_max])
    return make_grid(kind, K, t_min, t_max)


@dataclass(frozen=True, eq=False)
class DmocCurve:
    grid: Grid
    omega: np.ndarray
    meta: GeometrySummary | None = None
    estimator: str = "exact"
    pair_evaluations: int = 0
    batch_size: int | None = None
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        omega = np.array(self.omega, dtype=np.float64).ravel()
        if omega.shape != self.grid.scales.shape:
            raise ValueError(f"omega has {omega.size} entries for a grid of {self.grid.K}")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales


def _dmoc_interpreted(ds: DataSet, grid: Grid, I: np.ndarray, J: np.ndarray):
    r, s = pair_values(ds, I, J)
    k = grid_buckets(grid, r)
    keep = k >= 0
    omega = np.zeros(grid.K)
    np.maximum.at(omega, k[keep], s[keep])
    return np.maximum.accumulate(omega), int(r.size), int(np.count_nonzero((r == 0) & (s > 0)))


def run_batched(ds: DataSet, grid: Grid, order: np.ndarray, C: int, B: int, threads: int | None):
    """Shared driver: per-bucket max over within-batch pairs, then prefix max."""
    if ds.compiled:
        with _kernels.thread_count(threads) as nt:
            omega, count, conflicts = _kernels.batched_dmoc(
                ds.sites,
                ds.values,
                ds.metric_x.code,
                ds.metric_y.code,
                np.ascontiguousarray(order, dtype=np.int64),
                C,
                B,
                grid.scales,
                grid.code,
                grid.scales[0],
                grid.inv_step,
                _kernels.n_chunks(B * (C - 1), nt),
            )
        return omega, int(count), int(conflicts)
    li, lj = pair_indices(C)
    offs = (np.arange(B, dtype=np.int64) * C)[:, None]
    I = order[(offs + li).ravel()]
    J = order[(offs + lj).ravel()]
    return _dmoc_interpreted(ds, grid, I, J)


def _conflict_warning(conflicts: int) -> tuple[str, ...]:
    if not conflicts:
        return ()
    msg = f"{conflicts} zero-distance pair(s) with differing values"
    warnings.warn(msg, DuplicateSiteWarning, stacklevel=3)
    return (msg,)


def compute_dmoc(
    ds: DataSet,
    grid: Grid | None = None,
    threads: int | None = None,
    geom: GeometrySummary | None = None,
) -> DmocCurve:
    """Exact DMOC on ``grid`` in O(N^2 + K).

    Each pair lands in the first bucket whose scale covers its site
    distance; a prefix max over buckets then yields omega.  Pairs past the
    last scale fall outside every bucket.
    """
    if ds.n < 2:
        raise ValueError(f"need at least 2 sites, got {ds.n}")
    if geom is None:
        geom = geometry(ds, threads)
    if grid is None:
        grid = default_grid(ds, geom=geom)
    order = np.arange(ds.n, dtype=np.int64)
    omega, count, conflicts = run_batched(ds, grid, order, ds.n, 1, threads)
    return DmocCurve(
        grid=grid,
        omega=omega,
        meta=geom,
        estimator="exact",
        pair_evaluations=count,
        warnings=_conflict_warning(conflicts),
    )


def dmoc_at_pair_distances(ds: DataSet) -> tuple[np.ndarray, np.ndarray]:
    """Exact DMOC at every distinct positive pair distance, ascending.

    Holds all N(N-1)/2 pair distances in memory.
    """
    if ds.n < 2:
        raise ValueError(f"need at least 2 sites, got {ds.n}")
    r, s = pair_values(ds, *pair_indices(ds.n))
    positive = r > 0
    if not positive.any():
        raise ValueError("all sites coincide; the pair-distance set has no positive value")
    floor = s[~positive].max(initial=0.0)
    z, inverse = np.unique(r[positive], return_inverse=True)
    omega = np.zeros(z.size)
    np.maximum.at(omega, inverse, s[positive])
    omega = np.maximum.accumulate(np.maximum(omega, floor))
    return z, omega
