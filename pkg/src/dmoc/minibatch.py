"""Minibatch DMOC restricted to within-batch pairs, O(N C)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dmoc.core import DmocCurve, Grid, _conflict_warning, compute_dmoc, run_batched
from dmoc.metric_space import DataSet, GeometrySummary


@dataclass(frozen=True)
class BatchPlan:
    batch_size: int
    n_rows: int
    shuffle_seed: int | None = None

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError(f"batch size must be >= 2, got {self.batch_size}")
        if self.batch_size > self.n_rows:
            raise ValueError(f"batch size {self.batch_size} exceeds the {self.n_rows} available rows")

    @property
    def n_batches(self) -> int:
        return self.n_rows // self.batch_size

    @property
    def dropped_tail(self) -> int:
        return self.n_rows - self.n_batches * self.batch_size

    @property
    def pair_evaluations(self) -> int:
        C = self.batch_size
        return self.n_batches * C * (C - 1) // 2

    def order(self) -> np.ndarray:
        """Row order; batch b holds positions b*C .. (b+1)*C - 1."""
        if self.shuffle_seed is None:
            return np.arange(self.n_rows, dtype=np.int64)
        return np.random.default_rng(self.shuffle_seed).permutation(self.n_rows).astype(np.int64)

    def batches(self) -> list[np.ndarray]:
        order = self.order()
        C = self.batch_size
        return [order[b * C : (b + 1) * C] for b in range(self.n_batches)]


def compute_dmoc_minibatch(
    ds: DataSet,
    grid: Grid,
    plan: BatchPlan | int,
    threads: int | None = None,
    geom: GeometrySummary | None = None,
) -> DmocCurve:
    """Max over batches of the within-batch DMOC; the tail is dropped.

    Taking the per-bucket max over all within-batch pairs before the prefix
    max gives the same values as a per-batch curve merged by max.
    """
    if isinstance(plan, int):
        plan = BatchPlan(plan, ds.n)
    if plan.n_rows != ds.n:
        raise ValueError(f"plan covers {plan.n_rows} rows but the dataset has {ds.n}")
    omega, count, conflicts = run_batched(
        ds, grid, plan.order(), plan.batch_size, plan.n_batches, threads
    )
    return DmocCurve(
        grid=grid,
        omega=omega,
        meta=geom,
        estimator="minibatch",
        pair_evaluations=count,
        batch_size=plan.batch_size,
        warnings=_conflict_warning(conflicts),
    )


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    grid: Grid
    exact: DmocCurve | None
    curves: dict[int, DmocCurve]
    gaps: dict[int, np.ndarray]  # exact - minibatch, per scale; empty without exact


def convergence_study(
    ds: DataSet,
    grid: Grid,
    batch_sizes,
    shuffle_seed: int | None = None,
    with_exact: bool = True,
    threads: int | None = None,
    geom: GeometrySummary | None = None,
) -> ConvergenceStudy:
    batch_sizes = [int(c) for c in batch_sizes]
    for c in batch_sizes:
        BatchPlan(c, ds.n)
    exact = compute_dmoc(ds, grid, threads, geom) if with_exact else None
    curves = {}
    gaps = {}
    for c in batch_sizes:
        curve = compute_dmoc_minibatch(ds, grid, BatchPlan(c, ds.n, shuffle_seed), threads, geom)
        curves[c] = curve
        if exact is not None:
            gaps[c] = exact.omega - curve.omega
    return ConvergenceStudy(grid, exact, curves, gaps)
