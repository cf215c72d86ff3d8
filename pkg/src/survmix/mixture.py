"""Convex two-classifier mixtures and the dual-cutoff abstention rule.

The mixture score is ``alpha * p_a + (1 - alpha) * p_b``.  The weight is
found by grid search maximizing AUC times class-separation — the objective
is piecewise constant in alpha (AUC is rank-based), so a grid is the honest
search; ties go to the larger weight.  Classification abstains on the middle
band: scores strictly below the low cutoff are labeled negative, strictly
above the high cutoff positive, and everything else — including scores
exactly at a cutoff — stays unclassified.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DomainError
from .evaluation import roc_curve, separation_score

ABSTENTION_LABELS = ("negative", "positive", "unclassified")

DEFAULT_CUTOFF_LOW = 0.2
DEFAULT_CUTOFF_HIGH = 0.8


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    auc: float
    separation: float
    objective: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "auc": self.auc,
                "separation": self.separation, "objective": self.objective}


@dataclass(frozen=True)
class AbstentionResult:
    """Per-row labels plus the three group counts and fractions."""

    probabilities: np.ndarray
    labels: tuple
    counts: dict
    fractions: dict


class MixtureModel:
    """Two trained classifiers blended by a fixed weight."""

    def __init__(self, alpha, component_a, component_b,
                 cutoff_low=DEFAULT_CUTOFF_LOW, cutoff_high=DEFAULT_CUTOFF_HIGH):
        if not 0.0 <= alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        if not (0.0 <= cutoff_low < cutoff_high <= 1.0):
            raise DomainError("cutoffs must satisfy 0 <= low < high <= 1")
        self.alpha = float(alpha)
        self.component_a = component_a
        self.component_b = component_b
        self.cutoff_low = float(cutoff_low)
        self.cutoff_high = float(cutoff_high)

    def predict_proba(self, data: Dataset) -> np.ndarray:
        p_a = self.component_a.predict_proba(data)
        p_b = self.component_b.predict_proba(data)
        return mix_scores(self.alpha, p_a, p_b)

    def classify(self, data: Dataset) -> AbstentionResult:
        return classify_scores(self.predict_proba(data),
                               self.cutoff_low, self.cutoff_high)


def mix_scores(alpha, scores_a, scores_b) -> np.ndarray:
    scores_a = np.asarray(scores_a, dtype=float)
    scores_b = np.asarray(scores_b, dtype=float)
    if scores_a.shape != scores_b.shape:
        raise DomainError("component score vectors must have equal length")
    return alpha * scores_a + (1.0 - alpha) * scores_b


def optimize_weight(scores_a, scores_b, labels, grid_step=0.01):
    """Best mixture weight on the alpha grid, with the full objective trace.

    Returns (alpha, trace); the trace holds one GridPoint per alpha in grid
    order, and the returned alpha is the largest grid point attaining the
    maximal objective.
    """
    scores_a = np.asarray(scores_a, dtype=float)
    scores_b = np.asarray(scores_b, dtype=float)
    labels = np.asarray(labels)
    if not (scores_a.shape == scores_b.shape == labels.shape):
        raise DomainError("score and label vectors must have equal length")
    if not 0.0 < grid_step <= 1.0:
        raise DomainError("grid_step must lie in (0, 1]")
    n_steps = int(math.ceil(1.0 / grid_step - 1e-9))
    alphas = np.minimum(np.arange(n_steps + 1) * grid_step, 1.0)
    if alphas[-1] < 1.0:
        alphas = np.append(alphas, 1.0)

    trace = []
    best_alpha, best_objective = None, -math.inf
    for alpha in alphas:
        mixed = mix_scores(alpha, scores_a, scores_b)
        auc = roc_curve(mixed, labels).auc
        separation = separation_score(mixed, labels)
        objective = auc * separation
        trace.append(GridPoint(float(alpha), auc, separation, objective))
        if objective >= best_objective:  # >= : ties go to the larger alpha
            best_alpha, best_objective = float(alpha), objective
    return best_alpha, trace


def classify_scores(scores, cutoff_low=DEFAULT_CUTOFF_LOW,
                    cutoff_high=DEFAULT_CUTOFF_HIGH) -> AbstentionResult:
    """Split scores into negative / positive / unclassified by strict cutoffs."""
    scores = np.asarray(scores, dtype=float)
    if not (0.0 <= cutoff_low < cutoff_high <= 1.0):
        raise DomainError("cutoffs must satisfy 0 <= low < high <= 1")
    if scores.ndim != 1 or np.isnan(scores).any() \
            or (scores < 0).any() or (scores > 1).any():
        raise DomainError("scores must be a vector of probabilities in [0, 1]")
    labels = np.where(scores < cutoff_low, "negative",
                      np.where(scores > cutoff_high, "positive", "unclassified"))
    n = len(scores)
    counts = {name: int((labels == name).sum()) for name in ABSTENTION_LABELS}
    fractions = {name: counts[name] / n if n else 0.0 for name in ABSTENTION_LABELS}
    return AbstentionResult(probabilities=scores, labels=tuple(labels.tolist()),
                            counts=counts, fractions=fractions)
