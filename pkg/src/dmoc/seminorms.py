"""Rho-normalized DMOC curves, discrete seminorms and Lipschitz estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dmoc import _kernels
from dmoc.core import DmocCurve
from dmoc.metric_space import DataSet, pair_indices, pair_values
from dmoc.minibatch import BatchPlan

_EMPTY = np.zeros(1)


@dataclass(frozen=True, eq=False)
class RhoFunction:
    """Nondecreasing weight, positive on (0, inf).

    ``table`` interpolates linearly between knots and is constant outside
    them, so every knot value must be positive.
    """

    kind: str = "identity"
    beta: float = 1.0
    knots_t: np.ndarray | None = None
    knots_v: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "power":
            if not (math.isfinite(self.beta) and self.beta > 0):
                raise ValueError(f"power exponent must be positive, got {self.beta}")
        elif self.kind == "table":
            kt = np.array(self.knots_t, dtype=np.float64).ravel()
            kv = np.array(self.knots_v, dtype=np.float64).ravel()
            if kt.size < 1 or kt.shape != kv.shape:
                raise ValueError("table needs matching, nonempty knot arrays")
            if not (np.all(np.isfinite(kt)) and np.all(np.isfinite(kv))):
                raise ValueError("table knots must be finite")
            if np.any(np.diff(kt) <= 0):
                raise ValueError("table knot positions must be strictly increasing")
            if np.any(np.diff(kv) < 0):
                raise ValueError("table values must be nondecreasing")
            if kv[0] <= 0:
                raise ValueError("table values must be positive")
            kt.setflags(write=False)
            kv.setflags(write=False)
            object.__setattr__(self, "knots_t", kt)
            object.__setattr__(self, "knots_v", kv)
        elif self.kind != "identity":
            raise ValueError(f"unknown rho kind {self.kind!r}")

    @classmethod
    def power(cls, beta: float) -> RhoFunction:
        if beta == 1.0:
            return cls("identity")
        return cls("power", beta=float(beta))

    @classmethod
    def table(cls, t, v) -> RhoFunction:
        return cls("table", knots_t=t, knots_v=v)

    @property
    def _args(self):
        if self.kind == "identity":
            return _kernels.RHO_IDENTITY, 1.0, _EMPTY, _EMPTY
        if self.kind == "power":
            return _kernels.RHO_POWER, self.beta, _EMPTY, _EMPTY
        return _kernels.RHO_TABLE, 1.0, self.knots_t, self.knots_v

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = _kernels.rho_many(*self._args, np.ascontiguousarray(t.ravel()))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def describe(self) -> str:
        if self.kind == "power":
            return f"power:{self.beta!r}"
        if self.kind == "table":
            return f"table:{self.knots_t.size}"
        return "identity"


IDENTITY = RhoFunction("identity")


def parse_rho(text: str) -> RhoFunction:
    """``identity``, ``power:<beta>`` or ``table:<t1>=<v1>,<t2>=<v2>,...``."""
    kind, _, arg = text.partition(":")
    if kind == "identity" and not arg:
        return IDENTITY
    if kind == "power":
        return RhoFunction.power(float(arg))
    if kind == "table":
        pairs = [item.split("=") for item in arg.split(",") if item]
        try:
            t, v = zip(*((float(a), float(b)) for a, b in pairs))
        except ValueError as exc:
            raise ValueError(f"malformed rho table {arg!r}") from exc
        return RhoFunction.table(t, v)
    raise ValueError(f"cannot parse rho specification {text!r}")


@dataclass(frozen=True)
class SeminormResult:
    value: float
    argmax_scale: float | None = None
    argmax_pair: tuple[int, int] | None = None
    unbounded: bool = False  # zero-distance pair with differing values; value is inf
    rho: str = "identity"


def normalized_curve(curve: DmocCurve, rho: RhoFunction = IDENTITY) -> np.ndarray:
    weights = rho(curve.scales)
    if np.any(weights <= 0):
        raise ValueError("rho vanishes at a grid scale")
    return curve.omega / weights


def curve_seminorm(curve: DmocCurve, rho: RhoFunction = IDENTITY) -> SeminormResult:
    """Grid-based variant: max of the normalized curve over grid scales."""
    nu = normalized_curve(curve, rho)
    k = int(np.argmax(nu))
    return SeminormResult(float(nu[k]), float(curve.scales[k]), None, False, rho.describe())


def _pair_seminorm(ds: DataSet, rho: RhoFunction, order, C: int, B: int, threads):
    if ds.compiled:
        with _kernels.thread_count(threads) as nt:
            return _kernels.batched_seminorm(
                ds.sites,
                ds.values,
                ds.metric_x.code,
                ds.metric_y.code,
                np.ascontiguousarray(order, dtype=np.int64),
                C,
                B,
                *rho._args,
                _kernels.n_chunks(B * (C - 1), nt),
            )
    li, lj = pair_indices(C)
    offs = (np.arange(B, dtype=np.int64) * C)[:, None]
    I = order[(offs + li).ravel()]
    J = order[(offs + lj).ravel()]
    I, J = np.minimum(I, J), np.maximum(I, J)
    r, s = pair_values(ds, I, J)
    zero = (r == 0) & (s > 0)
    zi = zj = -1
    if zero.any():
        p = np.lexsort((J[zero], I[zero]))[0]
        zi, zj = int(I[zero][p]), int(J[zero][p])
    pos = r > 0
    if not pos.any():
        return -1.0, -1, -1, 0.0, zi, zj
    v = s[pos] / rho(r[pos])
    top = np.flatnonzero(v == v.max())
    p = top[np.lexsort((J[pos][top], I[pos][top]))[0]]
    return float(v[p]), int(I[pos][p]), int(J[pos][p]), float(r[pos][p]), zi, zj


def _seminorm(ds: DataSet, rho: RhoFunction, order, C: int, B: int, threads) -> SeminormResult:
    value, i, j, r, zi, zj = _pair_seminorm(ds, rho, order, C, B, threads)
    if zi >= 0:
        return SeminormResult(math.inf, 0.0, (int(zi), int(zj)), True, rho.describe())
    if i < 0:
        raise ValueError("no pair with positive site distance")
    return SeminormResult(float(value), float(r), (int(i), int(j)), False, rho.describe())


def discrete_seminorm(
    ds: DataSet, rho: RhoFunction = IDENTITY, threads: int | None = None
) -> SeminormResult:
    """Max over pairs with positive site distance of d_Y / rho(d_X).

    Grid-free and equal to the max of omega_N(t) / rho(t) over the nonzero
    pair distances t.  Duplicate sites with differing values make the
    result unbounded (flagged, value inf) rather than raising.
    """
    if ds.n < 2:
        raise ValueError(f"need at least 2 sites, got {ds.n}")
    return _seminorm(ds, rho, np.arange(ds.n, dtype=np.int64), ds.n, 1, threads)


def lipschitz_from_dmoc(ds: DataSet, threads: int | None = None) -> SeminormResult:
    """Exact Lipschitz constant of the site-to-value map."""
    return discrete_seminorm(ds, IDENTITY, threads)


def minibatch_seminorm(
    ds: DataSet, plan: BatchPlan | int, rho: RhoFunction = IDENTITY, threads: int | None = None
) -> SeminormResult:
    """Seminorm over within-batch pairs only; a lower bound of the exact one."""
    if isinstance(plan, int):
        plan = BatchPlan(plan, ds.n)
    return _seminorm(ds, rho, plan.order(), plan.batch_size, plan.n_batches, threads)
