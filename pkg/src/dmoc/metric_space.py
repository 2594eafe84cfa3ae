"""Metrics, datasets, pair enumeration and scattered-data geometry."""

from __future__ import annotations

from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from dmoc import _kernels

METRIC_KINDS = ("euclidean", "manhattan", "custom")


@dataclass(frozen=True)
class Metric:
    """A metric on R^n.

    ``kind="custom"`` takes a callable ``func(a, b) -> float``; it runs through
    the slow interpreted path and must satisfy the metric axioms itself.
    """

    kind: str = "euclidean"
    func: Callable[[np.ndarray, np.ndarray], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {METRIC_KINDS}")
        if (self.kind == "custom") != (self.func is not None):
            raise ValueError("a custom metric needs func, and only a custom metric may have one")

    @property
    def compiled(self) -> bool:
        return self.kind != "custom"

    @property
    def code(self) -> int:
        if self.kind == "euclidean":
            return _kernels.EUCLIDEAN
        if self.kind == "manhattan":
            return _kernels.MANHATTAN
        raise ValueError("custom metrics have no compiled kernel")

    def __call__(self, a, b) -> float:
        return distance(self, a, b)


EUCLIDEAN = Metric("euclidean")
MANHATTAN = Metric("manhattan")


def as_metric(metric: Metric | str | None) -> Metric:
    if metric is None:
        return EUCLIDEAN
    if isinstance(metric, Metric):
        return metric
    return Metric(metric)


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, order="C", copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 1-D or 2-D array, got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise ValueError(f"{name} has zero columns")
    bad = ~np.isfinite(arr)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ValueError(f"{name} contains a non-finite entry at row {row}, column {col}")
    arr.setflags(write=False)
    return arr


def distance(metric: Metric, a, b) -> float:
    a = np.ascontiguousarray(a, dtype=np.float64).ravel()
    b = np.ascontiguousarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if metric.kind == "custom":
        return float(metric.func(a, b))
    return float(_kernels.dist_one(a, b, metric.code))


@dataclass(frozen=True, eq=False)
class DataSet:
    """Paired data sites and values (the site-to-value map).

    Arrays are copied to read-only float64 matrices; a 1-D input becomes a
    single column.  NaN and infinity are rejected here so no downstream
    max/min is silently poisoned.
    """

    sites: np.ndarray
    values: np.ndarray
    metric_x: Metric = EUCLIDEAN
    metric_y: Metric = EUCLIDEAN

    def __post_init__(self):
        sites = _as_matrix(self.sites, "sites")
        values = _as_matrix(self.values, "values")
        if sites.shape[0] != values.shape[0]:
            raise ValueError(
                f"sites and values have different row counts ({sites.shape[0]} vs {values.shape[0]})"
            )
        if sites.shape[0] < 1:
            raise ValueError("a dataset needs at least one row")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "metric_x", as_metric(self.metric_x))
        object.__setattr__(self, "metric_y", as_metric(self.metric_y))

    @property
    def n(self) -> int:
        return self.sites.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def compiled(self) -> bool:
        return self.metric_x.compiled and self.metric_y.compiled

    def subset(self, rows) -> DataSet:
        rows = np.asarray(rows)
        return DataSet(self.sites[rows], self.values[rows], self.metric_x, self.metric_y)


@dataclass(frozen=True)
class GeometrySummary:
    separation: float
    diameter: float
    n_points: int
    min_positive: float | None = None  # smallest nonzero pair distance
    fill: float | None = None

    @property
    def has_duplicates(self) -> bool:
        return self.separation == 0.0


class PairRecord(NamedTuple):
    i: int
    j: int
    r: float
    s: float


def pair_offsets(n: int) -> np.ndarray:
    """Canonical index of the first pair (i, i+1) of each row i."""
    i = np.arange(n, dtype=np.int64)
    return i * (2 * n - i - 1) // 2


def pair_indices(n: int, start: int = 0, stop: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Map canonical pair indices ``start..stop-1`` to row-major (i, j) with i < j."""
    total = n * (n - 1) // 2
    stop = total if stop is None else stop
    if not 0 <= start <= stop <= total:
        raise ValueError(f"pair range [{start}, {stop}) outside [0, {total})")
    p = np.arange(start, stop, dtype=np.int64)
    offsets = pair_offsets(n)
    i = np.searchsorted(offsets, p, side="right") - 1
    j = p - offsets[i] + i + 1
    return i, j


def pair_values(ds: DataSet, I: np.ndarray, J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Site and value distances (r, s) for index arrays I, J."""
    I = np.ascontiguousarray(I, dtype=np.int64)
    J = np.ascontiguousarray(J, dtype=np.int64)
    if ds.compiled:
        return _kernels.pair_values(
            ds.sites, ds.values, ds.metric_x.code, ds.metric_y.code, I, J
        )
    r = np.array([distance(ds.metric_x, ds.sites[i], ds.sites[j]) for i, j in zip(I, J)])
    s = np.array([distance(ds.metric_y, ds.values[i], ds.values[j]) for i, j in zip(I, J)])
    return r.reshape(-1), s.reshape(-1)


def pair_stream(
    ds: DataSet, start: int = 0, stop: int | None = None, chunk: int = 1 << 16
) -> Iterator[PairRecord]:
    """Yield pair records in canonical order over ``[start, stop)``."""
    stop = ds.n_pairs if stop is None else stop
    pair_indices(ds.n, start, stop)  # validates the range
    for lo in range(start, stop, chunk):
        I, J = pair_indices(ds.n, lo, min(lo + chunk, stop))
        r, s = pair_values(ds, I, J)
        for rec in zip(I.tolist(), J.tolist(), r.tolist(), s.tolist()):
            yield PairRecord(*rec)


def _require_pairs(ds: DataSet) -> None:
    if ds.n < 2:
        raise ValueError(f"need at least 2 sites, got {ds.n}")


def geometry(ds: DataSet, threads: int | None = None) -> GeometrySummary:
    """Separation distance, discrete diameter and smallest positive distance."""
    _require_pairs(ds)
    if ds.compiled:
        with _kernels.thread_count(threads) as nt:
            lo, hi, lo_pos = _kernels.geometry(
                ds.sites, ds.metric_x.code, _kernels.n_chunks(ds.n - 1, nt)
            )
    else:
        r, _ = pair_values(ds, *pair_indices(ds.n))
        lo, hi = r.min(), r.max()
        pos = r[r > 0]
        lo_pos = pos.min() if pos.size else np.inf
    return GeometrySummary(
        separation=float(lo),
        diameter=float(hi),
        n_points=ds.n,
        min_positive=float(lo_pos) if np.isfinite(lo_pos) else None,
    )


def separation_distance(ds: DataSet, threads: int | None = None) -> float:
    return geometry(ds, threads).separation


def diameter(ds: DataSet, threads: int | None = None) -> float:
    return geometry(ds, threads).diameter


def fill_distance(ds: DataSet, reference_sites, threads: int | None = None) -> float:
    """Worst-case distance from a reference point to its nearest data site.

    Approximates the sup over the (unknown) domain by a finite reference
    sampling of it; see :func:`uniform_reference`.
    """
    ref = _as_matrix(reference_sites, "reference_sites")
    if ref.shape[0] == 0:
        raise ValueError("reference set is empty")
    if ref.shape[1] != ds.sites.shape[1]:
        raise ValueError(
            f"reference dimension {ref.shape[1]} does not match site dimension {ds.sites.shape[1]}"
        )
    if ds.metric_x.compiled:
        with _kernels.thread_count(threads):
            return float(_kernels.fill(ds.sites, ref, ds.metric_x.code))
    return float(
        max(min(distance(ds.metric_x, x, site) for site in ds.sites) for x in ref)
    )


def uniform_reference(ds: DataSet, n_samples: int, seed: int) -> np.ndarray:
    """Seeded uniform sample of the bounding box of the data sites."""
    rng = np.random.default_rng(seed)
    lo = ds.sites.min(axis=0)
    hi = ds.sites.max(axis=0)
    return lo + (hi - lo) * rng.random((n_samples, ds.sites.shape[1]))
