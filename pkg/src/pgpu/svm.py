"""Weighted soft-margin kernel SVM trained by SMO, plus sigmoid probability calibration.

The trainer solves the dual with a per-example box constraint
0 <= alpha_i <= C * weight_i, selecting the maximal violating pair each step.
The calibrator fits a two-parameter sigmoid to (cross-validated) decision
values so that models can emit class posteriors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, default_kernel, gram_matrix

_TAU = 1e-12
_P_EPS = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    """Hyperparameters shared by every SVM fit in a pipeline run."""

    C: float = 1.0
    kernel: KernelSpec | None = None  # None: rbf with gamma = 1/dim, resolved per dataset

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError("C must be positive")

    def resolve_kernel(self, dim: int) -> KernelSpec:
        return self.kernel if self.kernel is not None else default_kernel(dim)


@dataclass
class SvmModel:
    """Dual-form classifier: f(x) = sum_i dual_coefs[i] * k(sv_i, x) + bias."""

    support_vectors: np.ndarray  # (m, d)
    dual_coefs: np.ndarray       # (m,), alpha_i * y_i, all nonzero
    bias: float
    kernel: KernelSpec
    C: float


@dataclass(frozen=True)
class PlattCalibration:
    """Sigmoid parameters mapping decision values to P(y=+1|x) = 1/(1+exp(A*f+B))."""

    A: float
    B: float


def smo_solve(K, y, c_box, tol: float = 1e-3, max_iter: int | None = None):
    """Minimize 0.5 a'Qa - sum(a), Q_ij = y_i y_j K_ij, over the weighted box.

    Constraints are 0 <= a_i <= c_box_i and sum_i a_i y_i = 0. The working
    pair is the maximal violating one, ties broken by lowest index, so
    identical inputs give bit-identical results.

    Returns (alpha, bias, iterations).
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    c_box = np.asarray(c_box, dtype=float)
    n = y.size
    if max_iter is None:
        max_iter = max(10_000, 100 * n)

    alpha = np.zeros(n)
    grad = -np.ones(n)
    y_pos = y > 0
    iters = 0
    while True:
        minus_yg = -(y * grad)
        can_up = np.where(y_pos, alpha < c_box, alpha > 0.0)
        can_low = np.where(y_pos, alpha > 0.0, alpha < c_box)
        up_vals = np.where(can_up, minus_yg, -np.inf)
        low_vals = np.where(can_low, minus_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_up = up_vals[i]
        m_low = low_vals[j]
        if not np.isfinite(m_up) or not np.isfinite(m_low):
            break
        if m_up - m_low <= tol or iters >= max_iter:
            break
        iters += 1

        ci, cj = c_box[i], c_box[j]
        old_ai, old_aj = alpha[i], alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = _TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_ai - old_aj
            ai = old_ai + delta
            aj = old_aj + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > ci - cj:
                if ai > ci:
                    ai = ci
                    aj = ci - diff
            else:
                if aj > cj:
                    aj = cj
                    ai = cj + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            ssum = old_ai + old_aj
            ai = old_ai - delta
            aj = old_aj + delta
            if ssum > ci:
                if ai > ci:
                    ai = ci
                    aj = ssum - ci
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = ssum
            if ssum > cj:
                if aj > cj:
                    aj = cj
                    ai = ssum - cj
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = ssum
        alpha[i] = ai
        alpha[j] = aj
        qi = (y[i] * y) * K[i]
        qj = (y[j] * y) * K[j]
        grad += qi * (ai - old_ai) + qj * (aj - old_aj)

    minus_yg = -(y * grad)
    free = (alpha > 0.0) & (alpha < c_box)
    if free.any():
        bias = float(minus_yg[free].mean())
    else:
        can_up = np.where(y_pos, alpha < c_box, alpha > 0.0)
        can_low = np.where(y_pos, alpha > 0.0, alpha < c_box)
        lo = float(minus_yg[can_up].max()) if can_up.any() else None
        hi = float(minus_yg[can_low].min()) if can_low.any() else None
        if lo is not None and hi is not None:
            bias = 0.5 * (lo + hi)
        elif lo is not None:
            bias = lo
        elif hi is not None:
            bias = hi
        else:
            bias = 0.0
    return alpha, bias, iters


def train_weighted_svm(X, y, weights, C: float = 1.0, kernel: KernelSpec | None = None,
                       tol: float = 1e-3, max_iter: int | None = None) -> SvmModel:
    """Train a soft-margin SVM where example i gets box constraint C * weights[i].

    Zero-weight examples are dropped before training; both classes must
    remain among the positively weighted ones.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    weights = np.asarray(weights, dtype=float)
    n = X.shape[0]
    if y.shape != (n,) or weights.shape != (n,):
        raise ValueError("X, y, and weights must have matching lengths")
    if n < 2:
        raise ValueError("need at least 2 training examples")
    if not np.isin(y, (-1, 1)).all():
        raise ValueError("labels must be +1 or -1")
    if not np.isfinite(weights).all() or (weights < 0).any():
        raise ValueError("weights must be finite and nonnegative")
    if not C > 0:
        raise ValueError("C must be positive")
    active = weights > 0
    if not active.any():
        raise ValueError("all weights are zero")
    ya = y[active]
    if (ya > 0).all() or (ya < 0).all():
        raise ValueError("degenerate training set")

    if kernel is None:
        kernel = default_kernel(X.shape[1])
    Xa = X[active]
    K = gram_matrix(kernel, Xa, Xa)
    alpha, bias, _ = smo_solve(K, ya.astype(float), C * weights[active], tol=tol, max_iter=max_iter)
    sv = alpha > 0.0
    return SvmModel(
        support_vectors=Xa[sv].copy(),
        dual_coefs=(alpha * ya)[sv],
        bias=bias,
        kernel=kernel,
        C=float(C),
    )


def decision_values(model: SvmModel, X) -> np.ndarray:
    """Decision function of the model on the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: model expects {model.support_vectors.shape[1]}, got {X.shape[1]}"
        )
    if model.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    return gram_matrix(model.kernel, X, model.support_vectors) @ model.dual_coefs + model.bias


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    return float(decision_values(model, x[None, :])[0])


def fit_platt(decision_vals, y, max_iter: int = 100, grad_tol: float = 1e-8,
              sigma: float = 1e-12) -> PlattCalibration:
    """Fit sigmoid parameters (A, B) by Newton descent on the calibration likelihood.

    Targets are the smoothed values (N+ + 1)/(N+ + 2) and 1/(N- + 2). Iterates
    until the gradient norm drops below ``grad_tol`` or ``max_iter`` rounds.
    """
    f = np.asarray(decision_vals, dtype=float)
    y = np.asarray(y, dtype=int)
    if f.shape != y.shape or f.ndim != 1:
        raise ValueError("decision values and labels must be 1-d with equal length")
    n_pos = int((y > 0).sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("calibration requires both classes")
    if np.all(f == f[0]):
        raise ValueError("constant decision values cannot be calibrated")

    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def objective(a: float, b: float) -> float:
        z = a * f + b
        return float(np.sum(np.where(z >= 0, t * z, (t - 1.0) * z) + np.log1p(np.exp(-np.abs(z)))))

    a_par = 0.0
    b_par = math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(a_par, b_par)
    for _ in range(max_iter):
        z = a_par * f + b_par
        ez = np.exp(-np.abs(z))
        p = np.where(z >= 0.0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        d1 = t - p
        g1 = float(np.dot(f, d1))
        g2 = float(d1.sum())
        if math.hypot(g1, g2) < grad_tol:
            break
        d2 = p * (1.0 - p)
        h11 = float(np.dot(f * f, d2)) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float(np.dot(f, d2))
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(h11 * g2 - h21 * g1) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            cand_a = a_par + step * da
            cand_b = b_par + step * db
            cand_f = objective(cand_a, cand_b)
            if cand_f < fval + 1e-4 * step * gd:
                a_par, b_par, fval = cand_a, cand_b, cand_f
                break
            step *= 0.5
        else:
            break  # no further progress possible at float precision
    return PlattCalibration(A=a_par, B=b_par)


def predict_proba_batch(model: SvmModel, calib: PlattCalibration, X) -> np.ndarray:
    """Calibrated P(y=+1|x) for each row of X, clipped into the open interval (0, 1)."""
    z = calib.A * decision_values(model, X) + calib.B
    ez = np.exp(-np.abs(z))
    p = np.where(z >= 0.0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
    return np.clip(p, _P_EPS, 1.0 - _P_EPS)


def predict_proba(model: SvmModel, calib: PlattCalibration, x) -> tuple[float, float]:
    """(P(y=+1|x), P(y=-1|x)); the two sum to 1 exactly."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    p_pos = float(predict_proba_batch(model, calib, x[None, :])[0])
    return p_pos, 1.0 - p_pos


def _round_robin_folds(y: np.ndarray, k: int) -> np.ndarray:
    fold = np.empty(y.size, dtype=int)
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        fold[idx] = np.arange(idx.size) % k
    return fold


def train_prob_svm(X, y, config: SvmConfig = SvmConfig(), weights=None,
                   tol: float = 1e-3, cv_min_size: int = 30,
                   cv_folds: int = 3) -> tuple[SvmModel, PlattCalibration]:
    """Train an SVM and calibrate its posteriors.

    Calibration targets come from 3-fold cross-validated decision values when
    the sample is large enough (n >= cv_min_size and at least cv_folds
    examples per class); smaller samples use raw training decision values,
    which avoids fitting a sigmoid on three points.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if weights is None:
        weights = np.ones(X.shape[0])
    else:
        weights = np.asarray(weights, dtype=float)
    kernel = config.resolve_kernel(X.shape[1])
    model = train_weighted_svm(X, y, weights, config.C, kernel, tol=tol)

    n = y.size
    min_class = min(int((y > 0).sum()), int((y < 0).sum()))
    dv = None
    if n >= cv_min_size and min_class >= cv_folds:
        try:
            dv = np.empty(n)
            fold = _round_robin_folds(y, cv_folds)
            for k in range(cv_folds):
                hold = fold == k
                sub = train_weighted_svm(X[~hold], y[~hold], weights[~hold], config.C, kernel, tol=tol)
                dv[hold] = decision_values(sub, X[hold])
        except ValueError:
            dv = None  # a fold went degenerate (e.g. zero weights): fall back
    if dv is None:
        dv = decision_values(model, X)
    calib = fit_platt(dv, y)
    return model, calib
