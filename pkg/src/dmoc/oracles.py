"""Analytic test functions with known moduli of continuity, and seeded data generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from dmoc.metric_space import DataSet

ORACLE_KINDS = ("power", "sqrt", "tanh_on_interval", "log_modulus", "linear_map")


class ClosedFormUnavailable(ValueError):
    """The oracle has no closed-form modulus of continuity; use brute_force_moc."""


@dataclass(frozen=True, eq=False)
class OracleFunction:
    kind: str
    alpha: float = 0.5
    interval: tuple[float, float] = (0.0, 1.0)
    weights: np.ndarray | None = None
    offset: np.ndarray | None = None
    box: tuple[float, float] = field(default=(-1.0, 1.0))

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        if self.kind == "power" and not 0 < self.alpha <= 1:
            raise ValueError(f"power exponent must lie in (0, 1], got {self.alpha}")
        if self.kind == "sqrt":
            object.__setattr__(self, "alpha", 0.5)
        if self.kind == "tanh_on_interval" and not self.interval[0] < self.interval[1]:
            raise ValueError(f"empty interval {self.interval}")
        if self.kind == "linear_map":
            W = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
            if not np.all(np.isfinite(W)):
                raise ValueError("weight matrix must be finite")
            b = np.zeros(W.shape[0]) if self.offset is None else np.asarray(self.offset, float).ravel()
            if b.shape != (W.shape[0],):
                raise ValueError(f"offset has shape {b.shape}, expected ({W.shape[0]},)")
            object.__setattr__(self, "weights", W)
            object.__setattr__(self, "offset", b)

    @classmethod
    def power(cls, alpha: float) -> OracleFunction:
        return cls("power", alpha=alpha)

    @classmethod
    def tanh(cls, a: float = -100.0, b: float = 100.0) -> OracleFunction:
        return cls("tanh_on_interval", interval=(a, b))

    @classmethod
    def linear(cls, W, b=None, box=(-1.0, 1.0)) -> OracleFunction:
        return cls("linear_map", weights=W, offset=b, box=box)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1] if self.kind == "linear_map" else 1

    @property
    def domain(self) -> tuple[float, float]:
        """Per-coordinate interval of the (box) domain."""
        if self.kind == "tanh_on_interval":
            return self.interval
        if self.kind == "linear_map":
            return self.box
        return (0.0, 1.0)

    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("power", "sqrt", "log_modulus")


def evaluate(fn: OracleFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    lo, hi = fn.domain
    if fn.kind == "linear_map":
        if x.shape[-1] != fn.in_dim:
            raise ValueError(f"expected inputs of dimension {fn.in_dim}, got {x.shape[-1]}")
        return x @ fn.weights.T + fn.offset
    if np.any(x < lo) or np.any(x > hi) or not np.all(np.isfinite(x)):
        raise ValueError(f"input outside the domain [{lo}, {hi}]")
    if fn.kind in ("power", "sqrt"):
        return x**fn.alpha
    if fn.kind == "tanh_on_interval":
        return np.tanh(x)
    with np.errstate(divide="ignore"):
        out = 1.0 / np.abs(np.log(x) - 2.0)
    return np.where(x == 0, 0.0, out)


def true_moc(fn: OracleFunction, t: float) -> float:
    """Closed-form MOC; only for the power family and the log-modulus function."""
    if not fn.has_closed_form:
        raise ClosedFormUnavailable(f"no closed-form MOC for {fn.kind}")
    if t < 0:
        raise ValueError("scale must be nonnegative")
    # the domain [0, 1] has diameter 1, so the modulus saturates there
    t = min(float(t), 1.0)
    return float(evaluate(fn, np.array([t]))[0])


def brute_force_moc(fn, domain_grid_step: float, t: float, domain: tuple[float, float] = (0.0, 1.0)) -> float:
    """Dense-grid sup of |f(x) - f(x')| over grid pairs with |x - x'| <= t.

    A lower bound on the MOC for one-dimensional domains.  ``fn`` is an
    :class:`OracleFunction` or any vectorized callable on ``domain``.
    """
    if domain_grid_step <= 0:
        raise ValueError("grid step must be positive")
    if isinstance(fn, OracleFunction):
        if fn.in_dim != 1:
            raise ValueError("brute-force MOC needs a one-dimensional domain")
        domain = fn.domain
        func = (lambda x: evaluate(fn, x.reshape(-1, 1))) if fn.kind == "linear_map" else (lambda x: evaluate(fn, x))
    else:
        func = fn
    lo, hi = domain
    n = int(math.ceil((hi - lo) / domain_grid_step)) + 1
    x = np.linspace(lo, hi, n)
    step = (hi - lo) / (n - 1)
    f = np.asarray(func(x), dtype=np.float64)
    m = min(int(math.floor(t / step * (1 + 1e-12))), n - 1)
    if m < 1:
        return 0.0
    if f.ndim == 1:
        size = m + 1
        spread = maximum_filter1d(f, size, mode="nearest") - minimum_filter1d(f, size, mode="nearest")
        return float(spread.max())
    best = 0.0
    for d in range(1, m + 1):
        best = max(best, float(np.linalg.norm(f[d:] - f[:-d], axis=1).max()))
    return best


def generate_net(dim: int, spacing: float, centered: bool = False) -> np.ndarray:
    """Uniform lattice on [0, 1]^dim; a (spacing/2)-net of the cube.

    The default lattice contains the vertices ``k * spacing`` (plus 1 when
    the spacing does not divide 1).  ``centered`` uses cell midpoints
    ``(k + 1/2) * spacing`` and needs 1/spacing to be an integer.
    """
    if not 0 < spacing <= 1:
        raise ValueError(f"spacing must lie in (0, 1], got {spacing}")
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    cells = 1.0 / spacing
    if centered:
        m = round(cells)
        if abs(cells - m) > 1e-9 * cells:
            raise ValueError("centered lattice needs 1/spacing to be an integer")
        axis = (np.arange(m) + 0.5) * spacing
    else:
        m = int(math.floor(cells * (1 + 1e-12)))
        axis = np.arange(m + 1) * spacing
        axis = axis[axis <= 1.0]
        if axis[-1] < 1.0:
            axis = np.append(axis, 1.0)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def sample_dataset(fn: OracleFunction, sites) -> DataSet:
    sites = np.asarray(sites, dtype=np.float64)
    if fn.kind == "linear_map":
        return DataSet(sites, evaluate(fn, sites))
    return DataSet(sites, evaluate(fn, sites.ravel()).reshape(-1, 1))


def generate_classifier_dataset(
    n_classes: int,
    points_per_class: int,
    min_cross_distance: float,
    seed: int,
    dim: int = 2,
    cluster_width: float | None = None,
) -> DataSet:
    """One-hot labelled clusters whose minimum cross-class distance is exact.

    Class 0 fills x_0 in [-w, 0] with an anchor at the origin, class 1 fills
    x_0 in [d, d + w] with an anchor at d e_0, and every later class sits at
    least 2d further along the first axis.  Rounding is monotone, so no
    computed cross-class distance drops below d, and the anchor pair gives
    exactly d since sqrt(d * d) == d.
    """
    d = float(min_cross_distance)
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if points_per_class < 1:
        raise ValueError("need at least one point per class")
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if not (math.isfinite(d) and d > 0):
        raise ValueError(f"minimum cross-class distance must be positive, got {d}")
    w = d if cluster_width is None else float(cluster_width)
    if not (math.isfinite(w) and w >= 0):
        raise ValueError(f"cluster width must be nonnegative, got {w}")
    rng = np.random.default_rng(seed)
    sites = []
    labels = []
    for c in range(n_classes):
        pts = np.empty((points_per_class, dim))
        u = rng.random((points_per_class, dim))
        if c == 0:
            pts[:, 0] = -w * u[:, 0]
        else:
            origin = d + (c - 1) * (w + 2 * d)
            pts[:, 0] = origin + w * u[:, 0]
        pts[:, 1:] = w * (u[:, 1:] - 0.5)
        pts[0] = 0.0
        pts[0, 0] = 0.0 if c == 0 else d + (c - 1) * (w + 2 * d)
        sites.append(pts)
        labels.append(np.full(points_per_class, c))
    sites = np.concatenate(sites)
    onehot = np.eye(n_classes)[np.concatenate(labels)]
    if not np.all(np.isfinite(sites)):
        raise ValueError("cluster geometry overflows floating point")
    return DataSet(sites, onehot)


def class_labels(ds: DataSet) -> np.ndarray:
    return np.argmax(ds.values, axis=1)


def generate_linear_dataset(
    W,
    n_samples: int,
    seed: int,
    include_singular_pair: bool = False,
    box: tuple[float, float] = (-1.0, 1.0),
    eps: float | None = None,
) -> DataSet:
    """Uniform samples of x -> W x on a box.

    With ``include_singular_pair`` two rows x0, x0 + eps v1 are appended, v1
    being the top right-singular vector, so that the pair ratio equals the
    operator norm of W.  x0 is the box center.
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    if not np.all(np.isfinite(W)):
        raise ValueError("weight matrix must be finite")
    lo, hi = box
    n_in = W.shape[1]
    rng = np.random.default_rng(seed)
    X = lo + (hi - lo) * rng.random((n_samples, n_in))
    if include_singular_pair:
        if eps is None:
            eps = 1e-3 * (hi - lo) * math.sqrt(n_in)
        v1 = np.linalg.svd(W)[2][0]
        x0 = np.full(n_in, 0.5 * (lo + hi))
        X = np.vstack([X, x0, x0 + eps * v1])
    return DataSet(X, X @ W.T)
