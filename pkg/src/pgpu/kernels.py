"""Kernel functions and dense Gram matrices shared by the SVM trainer and the KMM solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_VALID_KINDS = ("linear", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and rbf bandwidth; ``gamma`` is ignored for linear kernels."""

    kind: str = "rbf"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _VALID_KINDS:
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf kernel requires gamma > 0")


def default_kernel(dim: int) -> KernelSpec:
    """rbf kernel with gamma = 1/dim, the usual SVM-library default."""
    if dim < 1:
        raise ValueError("dim must be positive")
    return KernelSpec(kind="rbf", gamma=1.0 / dim)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    """Evaluate the kernel on a single pair of feature vectors."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.ndim != 1 or x.shape != z.shape:
        raise ValueError(f"feature vectors must share one dimension, got {x.shape} and {z.shape}")
    if spec.kind == "linear":
        return float(np.dot(x, z))
    diff = x - z
    return float(np.exp(-spec.gamma * np.dot(diff, diff)))


def gram_matrix(spec: KernelSpec, X, Z) -> np.ndarray:
    """Pairwise kernel matrix with entry (i, j) = k(X[i], Z[j]).

    Passing the same array object for X and Z yields an exactly symmetric
    result (the matrix is symmetrized after the BLAS product).
    """
    same = X is Z
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = X if same else np.atleast_2d(np.asarray(Z, dtype=float))
    if X.size == 0 or Z.size == 0:
        raise ValueError("gram_matrix requires nonempty inputs")
    if X.shape[1] != Z.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    if spec.kind == "linear":
        out = X @ Z.T
    else:
        sx = np.sum(X * X, axis=1)
        sz = np.sum(Z * Z, axis=1)
        sq = sx[:, None] + sz[None, :] - 2.0 * (X @ Z.T)
        # values below the cancellation-error bound of the expansion are noise
        sq[sq <= 1e-13 * (sx[:, None] + sz[None, :])] = 0.0
        out = np.exp(-spec.gamma * sq)
    if same:
        out = 0.5 * (out + out.T)
    return out
