"""Alignment metrics between two DMOC curves on a common grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dmoc.core import DmocCurve


@dataclass(frozen=True)
class AlignmentReport:
    relative_alignment: float
    score: float
    pearson: float | None  # None when either curve is constant
    K: int


def _pair(w, w2, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=np.float64).ravel()
    w2 = np.asarray(w2, dtype=np.float64).ravel()
    if w.shape != w2.shape:
        raise ValueError(f"length mismatch: {w.size} vs {w2.size}")
    if w.size < min_len:
        raise ValueError(f"need at least {min_len} entries, got {w.size}")
    return w, w2


def relative_alignment(w, w2) -> float:
    """l1 discrepancy of ``w2`` from the reference ``w``, relative to ``|w|_1``."""
    w, w2 = _pair(w, w2)
    ref = np.abs(w).sum()
    if ref == 0:
        raise ValueError("reference curve is identically zero")
    return float(np.abs(w - w2).sum() / ref)


def alignment_score(w, w2) -> float:
    """1 - relative alignment; negative for very poor alignment."""
    return 1.0 - relative_alignment(w, w2)


def pearson(w, w2) -> float | None:
    """Correlation with each vector centered by its own l1 mean ``|w|_1 / K``.

    For nonnegative input (every DMOC) this is the arithmetic mean and the
    usual Pearson coefficient.  Returns None if either centered vector is 0.
    """
    w, w2 = _pair(w, w2, min_len=2)
    if np.all(w == w[0]) or np.all(w2 == w2[0]):
        # guards against a rounding residue from the l1 mean of a constant
        return None
    K = w.size
    a = w - np.abs(w).sum() / K
    b = w2 - np.abs(w2).sum() / K
    aa = float(a @ a)
    bb = float(b @ b)
    if aa == 0 or bb == 0:
        return None
    prod = aa * bb
    if prod == 0 or math.isinf(prod):
        den = math.sqrt(aa) * math.sqrt(bb)
    else:
        # sqrt(x * x) == x exactly, so r(w, w) is exactly 1
        den = math.sqrt(prod)
    r = float(a @ b) / den
    return min(1.0, max(-1.0, r))


def compare(w, w2) -> AlignmentReport:
    A = relative_alignment(w, w2)
    r = pearson(w, w2) if np.size(w) >= 2 else None
    return AlignmentReport(A, 1.0 - A, r, int(np.size(w)))


def compare_curves(reference: DmocCurve, candidate: DmocCurve) -> AlignmentReport:
    if not reference.grid.same_scales(candidate.grid):
        raise ValueError("curves are sampled on different grids")
    return compare(reference.omega, candidate.omega)
