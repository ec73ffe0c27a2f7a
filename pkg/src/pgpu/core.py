"""Observed probability gaps, boundary estimation, and confident relabelling of PU data.

The observed gap of an instance is P(s=+1|x) - P(s=-1|x) under the PU labels.
Unlabelled instances whose gap falls below a negative boundary l are safely
negative, those with positive gap are safely positive, and the band in
between is discarded. The forward map from true gap to observed gap under a
positive-class flip rate is provided for synthetic oracles and tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .kernels import KernelSpec
from .kmm import BetaWeights, KmmConfig, solve_kmm
from .svm import (
    SvmConfig,
    SvmModel,
    decision_values,
    predict_proba_batch,
    train_prob_svm,
    train_weighted_svm,
)

if TYPE_CHECKING:
    from .datagen import PUDataset

BOUNDARY_GRID: tuple[float, ...] = tuple(round(-0.90 + 0.01 * k, 2) for k in range(31))

_BOUNDARY_MARGIN = 1e-6


@dataclass(frozen=True)
class GapEstimate:
    """Per-instance observed probability gaps, each in [-1, 1]."""

    gaps: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gaps, dtype=float)
        if g.ndim != 1:
            raise ValueError("gaps must be a 1-d array")
        if np.any(g < -1.0) or np.any(g > 1.0):
            raise ValueError("gaps must lie in [-1, 1]")
        object.__setattr__(self, "gaps", g)


@dataclass(frozen=True)
class RelabelResult:
    """Partition of instance indices into relabelled-positive, relabelled-negative, discarded."""

    boundary_l: float
    positive_idx: np.ndarray
    negative_idx: np.ndarray
    discarded_idx: np.ndarray


@dataclass(frozen=True)
class FlipRateSpec:
    """Flip-rate family for turning clean positives into unlabelled examples.

    kinds: inverse (alpha/(alpha + gap*(1+beta))), linear (alpha*(1-gap)),
    constant (alpha). Rates are clipped into [0, 1] and are zero wherever the
    gap is negative, since only positive-region instances lose their label.
    """

    kind: str
    alpha: float
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("inverse", "linear", "constant"):
            raise ValueError(f"unknown flip kind: {self.kind!r}")
        if not self.alpha >= 0:
            raise ValueError("alpha must be nonnegative")
        if self.kind == "inverse":
            if self.beta is None:
                raise ValueError("inverse flip rate requires beta")
            if not self.alpha > 0:
                raise ValueError("inverse flip rate requires alpha > 0")
        elif self.beta is not None:
            raise ValueError(f"{self.kind} flip rate takes no beta")

    def rate(self, gaps) -> np.ndarray:
        g = np.asarray(gaps, dtype=float)
        pos = np.clip(g, 0.0, 1.0)
        if self.kind == "constant":
            rho = np.full_like(g, self.alpha)
        elif self.kind == "linear":
            rho = self.alpha * (1.0 - pos)
        else:
            rho = self.alpha / (self.alpha + pos * (1.0 + self.beta))
        rho = np.clip(rho, 0.0, 1.0)
        rho[g < 0.0] = 0.0
        return rho

    def describe(self) -> str:
        if self.kind == "inverse":
            return f"inverse({self.alpha:g},{self.beta:g})"
        return f"{self.kind}({self.alpha:g})"

    @classmethod
    def parse(cls, text: str) -> "FlipRateSpec":
        """Parse 'inverse:a,b', 'linear:a', or 'constant:a'."""
        kind, _, rest = text.partition(":")
        try:
            nums = [float(part) for part in rest.split(",") if part != ""]
        except ValueError:
            raise ValueError(f"invalid flip parameters in {text!r}") from None
        if kind == "inverse":
            if len(nums) != 2:
                raise ValueError("inverse flip needs two parameters, e.g. inverse:0.1,0.5")
            return cls("inverse", nums[0], nums[1])
        if kind in ("linear", "constant"):
            if len(nums) != 1:
                raise ValueError(f"{kind} flip needs one parameter, e.g. {kind}:0.3")
            return cls(kind, nums[0])
        raise ValueError(f"unknown flip kind: {kind!r}")


KMM_GAMMA_SCALE = 20.0


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the relabel-reweight-retrain pipeline needs besides the data.

    The matching kernel for KMM defaults to a sharper bandwidth than the
    classifier kernel (gamma = 20/dim instead of 1/dim): the mean embedding
    has to resolve density differences at the width of the discarded band,
    which the classifier default smooths away.
    """

    svm: SvmConfig = SvmConfig()
    kmm: KmmConfig = KmmConfig()
    n_prime: int = 3
    kmm_kernel: KernelSpec | None = None

    def __post_init__(self) -> None:
        if self.n_prime < 1:
            raise ValueError("n_prime must be positive")

    def resolve_kmm_kernel(self, dim: int) -> KernelSpec:
        if self.kmm_kernel is not None:
            return self.kmm_kernel
        return KernelSpec(kind="rbf", gamma=KMM_GAMMA_SCALE / dim)


def observed_gap(p_pos) -> GapEstimate:
    """Gap values 2p - 1 from positive-class posterior probabilities."""
    p = np.asarray(p_pos, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return GapEstimate(2.0 * p - 1.0)


def forward_gap(true_gap, rho_plus):
    """Observed gap produced by a true gap under positive flip rate rho_plus.

    Equals (1 - rho)*(gap + 1) - 1; used by synthetic oracles and tests only.
    """
    g = np.asarray(true_gap, dtype=float)
    r = np.asarray(rho_plus, dtype=float)
    if np.any(g < -1.0) or np.any(g > 1.0):
        raise ValueError("true gap must lie in [-1, 1]")
    if np.any(r < 0.0) or np.any(r >= 1.0):
        raise ValueError("flip rate must lie in [0, 1)")
    out = (1.0 - r) * (g + 1.0) - 1.0
    if out.ndim == 0:
        return float(out)
    return out


def estimate_boundary_min(gaps: GapEstimate, observed_labels, n_prime: int = 3) -> float:
    """Mean of the n_prime smallest gaps among observed positives, clamped into (-1, 0).

    Averaging over n_prime > 1 points robustifies the plain minimum against
    calibration outliers.
    """
    if n_prime < 1:
        raise ValueError("n_prime must be positive")
    s = np.asarray(observed_labels, dtype=int)
    g = gaps.gaps
    if s.shape != g.shape:
        raise ValueError("labels and gaps must have equal length")
    pos = g[s == 1]
    if pos.size < n_prime:
        raise ValueError(f"need at least {n_prime} observed positives, got {pos.size}")
    smallest = np.partition(pos, n_prime - 1)[:n_prime]
    return float(np.clip(smallest.mean(), -1.0 + _BOUNDARY_MARGIN, -_BOUNDARY_MARGIN))


def relabel(gaps: GapEstimate, observed_labels, boundary_l: float) -> RelabelResult:
    """Assign confident labels: observed positives stay positive, unlabelled
    instances become negative when gap <= boundary_l, positive when gap > 0,
    and are discarded inside the ambiguous band (boundary_l, 0]."""
    if not -1.0 < boundary_l < 0.0:
        raise ValueError("boundary_l must lie strictly inside (-1, 0)")
    s = np.asarray(observed_labels, dtype=int)
    g = gaps.gaps
    if s.shape != g.shape:
        raise ValueError("labels and gaps must have equal length")
    obs_pos = s == 1
    unl = ~obs_pos
    new_neg = unl & (g <= boundary_l)
    new_pos = unl & (g > 0.0)
    discard = unl & ~new_neg & ~new_pos
    return RelabelResult(
        boundary_l=float(boundary_l),
        positive_idx=np.flatnonzero(obs_pos | new_pos),
        negative_idx=np.flatnonzero(new_neg),
        discarded_idx=np.flatnonzero(discard),
    )


def fit_relabelled_classifier(X, s, gaps: GapEstimate, boundary_l: float,
                              config: PipelineConfig = PipelineConfig(),
                              ) -> tuple[SvmModel, RelabelResult, BetaWeights]:
    """Relabel, correct the induced domain bias with KMM, and train the weighted SVM.

    The KMM target is the full sample and the source is the relabelled subset,
    so the weights undo the bias from dropping the ambiguous band.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    s = np.asarray(s, dtype=int)
    result = relabel(gaps, s, boundary_l)
    if result.positive_idx.size == 0 or result.negative_idx.size == 0:
        raise ValueError("relabelling produced one class")
    sel = np.concatenate([result.positive_idx, result.negative_idx])
    labels = np.concatenate([
        np.ones(result.positive_idx.size, dtype=int),
        -np.ones(result.negative_idx.size, dtype=int),
    ])
    kernel = config.svm.resolve_kernel(X.shape[1])
    beta = solve_kmm(config.resolve_kmm_kernel(X.shape[1]), X, X[sel], config.kmm)
    model = train_weighted_svm(X[sel], labels, beta.beta, config.svm.C, kernel)
    return model, result, beta


def _stratified_folds(s: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    fold = np.empty(s.size, dtype=int)
    for cls in (1, -1):
        idx = rng.permutation(np.flatnonzero(s == cls))
        fold[idx] = np.arange(idx.size) % folds
    return fold


def estimate_boundary_cv(train: "PUDataset", config: PipelineConfig = PipelineConfig(),
                         grid: Sequence[float] = BOUNDARY_GRID, folds: int = 5,
                         seed: int = 0) -> float:
    """Pick the boundary from ``grid`` that maximizes cross-validated accuracy.

    Each candidate is scored by running the full relabel-KMM-SVM pipeline on
    the training folds and measuring accuracy against the held-out observed PU
    labels. Grid candidates are scanned in ascending order, so ties resolve to
    the most negative boundary. Degenerate (candidate, fold) pairs are skipped;
    if every candidate degenerates everywhere, this raises.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    X = np.atleast_2d(np.asarray(train.X, dtype=float))
    s = np.asarray(train.s, dtype=int)
    if min(int((s == 1).sum()), int((s == -1).sum())) < folds:
        raise ValueError(f"each observed class needs at least {folds} examples for {folds}-fold CV")
    fold = _stratified_folds(s, folds, np.random.default_rng(seed))

    sums = np.zeros(len(grid))
    counts = np.zeros(len(grid))
    for k in range(folds):
        hold = fold == k
        try:
            model, calib = train_prob_svm(X[~hold], s[~hold], config.svm)
        except ValueError:
            continue
        fold_gaps = observed_gap(predict_proba_batch(model, calib, X[~hold]))
        for ci, cand in enumerate(grid):
            try:
                clf, _, _ = fit_relabelled_classifier(X[~hold], s[~hold], fold_gaps, cand, config)
            except (ValueError, RuntimeError):
                continue
            pred = np.where(decision_values(clf, X[hold]) >= 0.0, 1, -1)
            sums[ci] += float(np.mean(pred == s[hold]))
            counts[ci] += 1
    if not (counts > 0).any():
        raise ValueError("every boundary candidate was degenerate in cross-validation")
    scores = np.where(counts > 0, sums / np.maximum(counts, 1.0), -np.inf)
    return float(grid[int(np.argmax(scores))])


def monotone_rate(spec: FlipRateSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Monotone non-increasing extension of a flip-rate family over the whole gap range.

    The data-generation semantics zero the rate on negative gaps, which makes
    the observed gap jump at zero. The ordering guarantees of the forward map
    hold for rates that decrease monotonically over the full range, so tests
    use this extension: the inverse family saturates just below 1 on
    nonpositive gaps, and linear rates are clipped below 1.
    """
    cap = 1.0 - 1e-9

    def rho(gaps: np.ndarray) -> np.ndarray:
        g = np.asarray(gaps, dtype=float)
        if spec.kind == "constant":
            return np.full_like(g, min(spec.alpha, cap))
        if spec.kind == "linear":
            return np.clip(spec.alpha * (1.0 - g), 0.0, cap)
        return np.minimum(spec.alpha / (spec.alpha + np.maximum(g, 0.0) * (1.0 + spec.beta)), cap)

    return rho
