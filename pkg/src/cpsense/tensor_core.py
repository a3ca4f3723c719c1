"""Dense tensor and CP model algebra.

Conventions used throughout the package:

* A dense order-N tensor is a numpy array of shape (I_1, ..., I_N).
* ``vec(X)`` is the C-order (row-major) flattening, i.e. the last mode
  index varies fastest.  With this convention
  ``vec(reconstruct(model)) == khatri_rao_chain(model.factors) @ ones(F)``.
* Matrices are 2-D numpy arrays of shape (rows, cols).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    """Incompatible shapes between factors, tensors, or operators."""


def check_shape(dims) -> tuple[int, ...]:
    """Validate tensor dimensions (order >= 2, every dim >= 1)."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise DimensionMismatch(f"tensor order must be >= 2, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise DimensionMismatch(f"all dimensions must be >= 1, got {dims}")
    return dims


@dataclass(frozen=True)
class CpModel:
    """A CP model: one I_n x F factor matrix per mode, weights absorbed."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(np.asarray(a, dtype=float) for a in self.factors)
        if len(factors) < 2:
            raise DimensionMismatch("a CP model needs at least 2 factor matrices")
        for a in factors:
            if a.ndim != 2:
                raise DimensionMismatch("factor matrices must be 2-D")
            if not np.all(np.isfinite(a)):
                raise ValueError("factor entries must be finite")
        cols = {a.shape[1] for a in factors}
        if len(cols) != 1:
            raise DimensionMismatch(f"factors disagree on column count: {sorted(cols)}")
        if factors[0].shape[1] < 1:
            raise DimensionMismatch("rank must be >= 1")
        object.__setattr__(self, "factors", factors)

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.factors)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; the b-row index varies fastest."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatch("khatri_rao expects 2-D matrices")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}"
        )
    ia, f = a.shape
    ib, _ = b.shape
    return (a[:, None, :] * b[None, :, :]).reshape(ia * ib, f)


def khatri_rao_chain(factors) -> np.ndarray:
    """Left-associated Khatri-Rao product of a list of matrices."""
    factors = [np.asarray(a, dtype=float) for a in factors]
    if not factors:
        raise DimensionMismatch("khatri_rao_chain needs at least one matrix")
    out = factors[0]
    for a in factors[1:]:
        out = khatri_rao(out, a)
    return out


def reconstruct(model: CpModel) -> np.ndarray:
    """Dense tensor equal to the sum of the model's rank-one components."""
    chain = khatri_rao_chain(model.factors)
    return chain.sum(axis=1).reshape(model.shape)


def vec(x: np.ndarray) -> np.ndarray:
    """Canonical vectorization (C order, last index fastest)."""
    return np.asarray(x, dtype=float).ravel()


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float).ravel()))


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise DimensionMismatch("spectral_norm of an empty matrix")
    return float(np.linalg.svd(a, compute_uv=False)[0])


def sigma_min(a: np.ndarray) -> float:
    """Smallest of the min(rows, cols) singular values."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise DimensionMismatch("sigma_min of an empty matrix")
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def mse(truth: np.ndarray, recovered: np.ndarray) -> float:
    """Squared Frobenius distance divided by the number of entries."""
    truth = np.asarray(truth, dtype=float)
    recovered = np.asarray(recovered, dtype=float)
    if truth.shape != recovered.shape:
        raise DimensionMismatch(
            f"shape mismatch: {truth.shape} vs {recovered.shape}"
        )
    diff = truth - recovered
    return float(np.dot(diff.ravel(), diff.ravel()) / truth.size)


def param_count(dims, rank: int) -> int:
    """Total factor entry count sum_n I_n * F."""
    return int(sum(dims) * rank)
