"""Layer-product Lipschitz upper bound from explicit weight matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last_estimate: float, iterations: int):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class PowerIterationResult:
    sigma: float
    vector: np.ndarray
    iterations: int
    converged: bool


def power_iteration(
    M, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0
) -> PowerIterationResult:
    """Largest singular value of ``M`` by power iteration on M^T M.

    Stops once two successive Rayleigh quotients agree to ``tol`` relative.
    The iteration approaches sigma from below and can stall short of it when
    the top two singular values are close, so the reported value comes from
    a Rayleigh-Ritz step on the Krylov block [v, Av, A^2 v], A = M^T M: the
    largest singular value of M restricted to that block.  It is still a
    lower bound, but far tighter than |M v| alone.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0 or not np.all(np.isfinite(M)):
        raise ValueError("matrix must be nonempty and finite")
    v = np.random.default_rng(seed).standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = M.T @ (M @ v)
        lam_new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0:
            return PowerIterationResult(0.0, v, it, True)
        v = w / norm
        if abs(lam_new - lam) <= tol * lam_new:
            return PowerIterationResult(_ritz(M, v), v, it, True)
        lam = lam_new
    return PowerIterationResult(_ritz(M, v), v, max_iter, False)


def _ritz(M: np.ndarray, v: np.ndarray) -> float:
    block = [v]
    for _ in range(2):
        block.append(M.T @ (M @ block[-1]))
    Q, R = np.linalg.qr(np.stack(block, axis=1))
    # drop directions the Krylov block does not actually span
    keep = np.abs(np.diag(R)) > 1e-12 * abs(R[0, 0])
    ritz = float(np.linalg.svd(M @ Q[:, keep], compute_uv=False)[0])
    return max(ritz, float(np.linalg.norm(M @ v)))


def spectral_norm(M, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    res = power_iteration(M, tol, max_iter, seed)
    if not res.converged:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations", res.sigma, max_iter
        )
    return res.sigma


@dataclass(frozen=True, eq=False)
class WeightStack:
    """Weights W_1 .. W_L applied in order; biases do not affect the bound."""

    matrices: list[np.ndarray]
    activation_lipschitz: list[float] = field(default_factory=list)

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in self.matrices]
        if not mats:
            raise ValueError("a weight stack needs at least one matrix")
        for k, (a, b) in enumerate(zip(mats, mats[1:])):
            if b.shape[1] != a.shape[0]:
                raise ValueError(
                    f"layers {k} and {k + 1} do not chain: {a.shape} then {b.shape}"
                )
        acts = list(self.activation_lipschitz) or [1.0] * len(mats)
        if len(acts) != len(mats):
            raise ValueError(f"{len(acts)} activation constants for {len(mats)} layers")
        if any(not (a > 0 and math.isfinite(a)) for a in acts):
            raise ValueError("activation Lipschitz constants must be positive")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "activation_lipschitz", [float(a) for a in acts])

    @property
    def in_dim(self) -> int:
        return self.matrices[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrices[-1].shape[0]


def layer_norms(stack: WeightStack, tol: float = 1e-10, max_iter: int = 10_000) -> list[float]:
    return [spectral_norm(W, tol, max_iter) for W in stack.matrices]


def trivial_bound(stack: WeightStack, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    bound = 1.0
    for norm, act in zip(layer_norms(stack, tol, max_iter), stack.activation_lipschitz):
        bound *= norm * act
    return bound


def relu_forward(stack: WeightStack, X, biases=None) -> np.ndarray:
    """Apply the stack with ReLU between layers (none after the last)."""
    h = np.atleast_2d(np.asarray(X, dtype=np.float64))
    last = len(stack.matrices) - 1
    for k, W in enumerate(stack.matrices):
        h = h @ W.T
        if biases is not None:
            h = h + biases[k]
        if k < last:
            h = np.maximum(h, 0.0)
    return h


def random_stack(rng: np.random.Generator, n_layers: int, in_dim: int, max_width: int) -> WeightStack:
    dims = [in_dim] + [int(rng.integers(1, max_width + 1)) for _ in range(n_layers)]
    mats = [rng.standard_normal((dims[k + 1], dims[k])) / math.sqrt(dims[k]) for k in range(n_layers)]
    return WeightStack(mats)
