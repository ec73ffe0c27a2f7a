"""Kernel mean matching: importance weights that align a biased subsample with the full sample.

Solves min_beta || (1/n) sum_i phi(x_i) - (1/n') sum_j beta_j phi(x'_j) ||^2
subject to 0 <= beta_j <= B and |mean(beta) - 1| <= epsilon, by projected
gradient descent with an exact line search along each feasible segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gram_matrix

_GRAM_CHUNK = 2048


@dataclass(frozen=True)
class KmmConfig:
    """Box cap B, mean-constraint slack epsilon (None: (sqrt(n')-1)/sqrt(n')), and solver limits."""

    upper_bound_B: float = 1000.0
    epsilon: float | None = None
    max_iters: int = 5000
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.upper_bound_B >= 1.0:
            raise ValueError("upper_bound_B must be at least 1")
        if self.epsilon is not None and not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class BetaWeights:
    """Importance weights on the source sample, with solver diagnostics."""

    beta: np.ndarray
    objective: float
    trace: np.ndarray  # objective value after each solver iteration


def default_epsilon(n_source: int) -> float:
    root = math.sqrt(n_source)
    return (root - 1.0) / root


def _gram_row_sums(kernel: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """sum_j k(a_i, b_j) without materializing huge cross matrices."""
    out = np.zeros(A.shape[0])
    for start in range(0, B.shape[0], _GRAM_CHUNK):
        out += gram_matrix(kernel, A, B[start:start + _GRAM_CHUNK]).sum(axis=1)
    return out


def mmd_objective(kernel: KernelSpec, target_X, source_X, beta) -> float:
    """Squared distance between the target kernel mean and the beta-weighted source mean."""
    target_X = np.atleast_2d(np.asarray(target_X, dtype=float))
    source_X = np.atleast_2d(np.asarray(source_X, dtype=float))
    beta = np.asarray(beta, dtype=float)
    n, ns = target_X.shape[0], source_X.shape[0]
    k_ss = gram_matrix(kernel, source_X, source_X)
    kappa = _gram_row_sums(kernel, source_X, target_X)
    const = _gram_row_sums(kernel, target_X, target_X).sum() / (n * n)
    return float(beta @ k_ss @ beta / (ns * ns) - 2.0 * (kappa @ beta) / (n * ns) + const)


def _clip_to_sum(v: np.ndarray, cap: float, target: float) -> np.ndarray:
    """Project v onto {0 <= x <= cap, sum(x) = target} via bisection on the shift."""
    lo = -float(v.max()) - 1.0
    hi = cap - float(v.min()) + 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.clip(v + mid, 0.0, cap).sum() < target:
            lo = mid
        else:
            hi = mid
    x = np.clip(v + 0.5 * (lo + hi), 0.0, cap)
    interior = (x > 0.0) & (x < cap)
    n_int = int(interior.sum())
    if n_int:  # polish the last bisection residue on the unclipped entries
        x[interior] += (target - x.sum()) / n_int
        np.clip(x, 0.0, cap, out=x)
    return x


def _project(v: np.ndarray, cap: float, lo_sum: float, hi_sum: float) -> np.ndarray:
    x = np.clip(v, 0.0, cap)
    s = x.sum()
    if s > hi_sum:
        return _clip_to_sum(v, cap, hi_sum)
    if s < lo_sum:
        return _clip_to_sum(v, cap, lo_sum)
    return x


class _SolverBreakdown(RuntimeError):
    pass


def _projected_descent(k_ss, kappa, n_target, cap, eps, max_iters, tol):
    ns = k_ss.shape[0]
    inv2 = 1.0 / (ns * ns)
    lin = kappa / (n_target * ns)
    lo_sum = ns * (1.0 - eps)
    hi_sum = ns * (1.0 + eps)

    beta = _project(np.ones(ns), cap, lo_sum, hi_sum)
    k_beta = k_ss @ beta

    def objective(b, kb):
        return float(b @ kb * inv2 - 2.0 * (lin @ b))

    # Gershgorin bound on the largest Hessian eigenvalue gives a safe step.
    lips = 2.0 * inv2 * float(np.abs(k_ss).sum(axis=1).max())
    step = 1.0 / max(lips, 1e-300)

    obj = objective(beta, k_beta)
    trace = [obj]
    for _ in range(max_iters):
        grad = 2.0 * inv2 * k_beta - 2.0 * lin
        cand = _project(beta - step * grad, cap, lo_sum, hi_sum)
        d = cand - beta
        if np.abs(d).max() <= 1e-14 * max(1.0, np.abs(beta).max()):
            break
        k_d = k_ss @ d
        curv = float(d @ k_d) * inv2
        if not np.isfinite(curv) or curv < -1e-12 * max(1.0, abs(obj)):
            raise _SolverBreakdown("negative curvature in the source Gram matrix")
        gd = float(grad @ d)
        theta = 1.0 if curv <= 0.0 else min(1.0, max(0.0, -gd / (2.0 * curv)))
        beta = beta + theta * d
        k_beta = k_beta + theta * k_d
        new_obj = objective(beta, k_beta)
        if not np.isfinite(new_obj):
            raise _SolverBreakdown("objective became non-finite")
        trace.append(new_obj)
        if obj - new_obj <= tol * max(1.0, abs(obj)):
            obj = new_obj
            break
        obj = new_obj
    return beta, np.asarray(trace)


def solve_kmm(kernel: KernelSpec, target_X, source_X, config: KmmConfig = KmmConfig()) -> BetaWeights:
    """Importance weights beta for the source sample relative to the target sample.

    The returned trace (objective per iteration, offset so it equals the true
    squared mean discrepancy) is monotonically non-increasing.
    """
    target_X = np.atleast_2d(np.asarray(target_X, dtype=float))
    source_X = np.atleast_2d(np.asarray(source_X, dtype=float))
    n, ns = target_X.shape[0], source_X.shape[0]
    if n < 1 or ns < 1:
        raise ValueError("target and source must be nonempty")
    if target_X.shape[1] != source_X.shape[1]:
        raise ValueError(f"dimension mismatch: {target_X.shape[1]} vs {source_X.shape[1]}")
    eps = config.epsilon if config.epsilon is not None else default_epsilon(ns)
    if config.upper_bound_B < 1.0 - eps:
        raise ValueError("infeasible constraints: upper_bound_B below the mean band")

    k_ss = gram_matrix(kernel, source_X, source_X)
    kappa = _gram_row_sums(kernel, source_X, target_X)
    const = _gram_row_sums(kernel, target_X, target_X).sum() / (n * n)
    try:
        beta, trace = _projected_descent(k_ss, kappa, n, config.upper_bound_B, eps,
                                         config.max_iters, config.tol)
    except _SolverBreakdown:
        k_ss = k_ss + 1e-8 * np.eye(ns)
        try:
            beta, trace = _projected_descent(k_ss, kappa, n, config.upper_bound_B, eps,
                                             config.max_iters, config.tol)
        except _SolverBreakdown as exc:
            raise RuntimeError(f"KMM solver failed even with ridge regularization: {exc}") from exc
    trace = trace + const
    return BetaWeights(beta=beta, objective=float(trace[-1]), trace=trace)
