"""Non-kernel calibration diagnostics: ECE/MCE, quantile curves, losses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Categorical, ClassLabel, Prediction, RealVector, TruncatedCountable
from .estimators import Dataset
from .exceptions import DimensionError, FamilyError, ParameterError

DEFAULT_TAU_GRID = tuple(np.round(np.arange(0.05, 0.96, 0.05), 2))


def _discrete_probs(p: Prediction, width: int) -> np.ndarray:
    if isinstance(p, Categorical):
        probs = p.probs
    elif isinstance(p, TruncatedCountable):
        probs = p.probs / p.probs.sum()
    else:
        raise FamilyError(
            f"oracle calibration errors are defined for discrete families, not {p.family!r}"
        )
    if probs.shape[0] > width:
        raise DimensionError("oracle distribution support is narrower than the prediction's")
    return np.pad(probs, (0, width - probs.shape[0]))


def _common_width(data: Dataset, oracle) -> int:
    width = 0
    for p in data.predictions:
        if isinstance(p, Categorical):
            width = max(width, p.n_classes)
        elif isinstance(p, TruncatedCountable):
            width = max(width, p.support_size)
        else:
            raise FamilyError(
                f"oracle calibration errors are defined for discrete families, not {p.family!r}"
            )
        q = oracle(p)
        width = max(
            width, q.n_classes if isinstance(q, Categorical) else q.support_size
        )
    return width


def oracle_ece(data: Dataset, oracle, q: float = 2.0) -> float:
    """Sample-average q-norm discrepancy between the true conditional and
    the prediction, aligned over the common (truncated) support.

    ``oracle`` maps a prediction to the true conditional distribution of the
    target given that prediction, as a prediction of the same target space.
    """
    if not (1.0 < q < math.inf):
        raise ParameterError(f"norm order must lie in (1, inf), got {q!r}")
    width = _common_width(data, oracle)
    total = 0.0
    for p in data.predictions:
        diff = _discrete_probs(oracle(p), width) - _discrete_probs(p, width)
        total += float(np.sum(np.abs(diff) ** q))
    return total / len(data)


def oracle_mce(data: Dataset, oracle) -> float:
    """Maximum sup-norm discrepancy over the dataset's predictions."""
    width = _common_width(data, oracle)
    worst = 0.0
    for p in data.predictions:
        diff = _discrete_probs(oracle(p), width) - _discrete_probs(p, width)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def binned_confidence_ece(data: Dataset, num_bins: int = 10) -> float:
    """Standard confidence-binned ECE baseline (biased; no debiasing)."""
    if num_bins < 1:
        raise ParameterError("need at least one bin")
    for p in data.predictions:
        if not isinstance(p, Categorical):
            raise FamilyError("binned confidence ECE requires categorical predictions")
    confidences = np.array([float(np.max(p.probs)) for p in data.predictions])
    correct = np.array(
        [
            1.0 if int(np.argmax(p.probs)) == y.index else 0.0
            for p, y in zip(data.predictions, data.targets)
        ]
    )
    edges = np.linspace(0.0, 1.0, num_bins + 1)
    bins = np.clip(np.digitize(confidences, edges[1:-1]), 0, num_bins - 1)
    n = len(data)
    ece = 0.0
    for b in range(num_bins):
        mask = bins == b
        count = int(mask.sum())
        if count == 0:
            continue
        ece += (count / n) * abs(correct[mask].mean() - confidences[mask].mean())
    return ece


@dataclass
class QuantileCurve:
    """Empirical cumulative probability at each quantile level."""

    taus: np.ndarray
    empirical: np.ndarray

    def max_diagonal_deviation(self) -> float:
        return float(np.max(np.abs(self.empirical - self.taus)))

    def mean_diagonal_deviation(self) -> float:
        return float(np.mean(np.abs(self.empirical - self.taus)))


def _univariate_pit(data: Dataset) -> np.ndarray:
    pit = np.empty(len(data))
    for i, (p, y) in enumerate(zip(data.predictions, data.targets)):
        if not isinstance(y, RealVector) or y.dim != 1:
            raise DimensionError("quantile diagnostics require univariate real targets")
        pit[i] = p.cdf(float(y.values[0]))
    return pit


def quantile_curve(data: Dataset, taus=DEFAULT_TAU_GRID) -> QuantileCurve:
    """Fraction of points whose predicted CDF value falls at or below tau.

    A quantile-calibrated model yields a curve close to the diagonal.
    """
    taus = np.asarray(taus, dtype=np.float64)
    if np.any(taus <= 0) or np.any(taus > 1):
        raise ParameterError("quantile levels must lie in (0, 1]")
    pit = _univariate_pit(data)
    empirical = np.array([np.mean(pit <= t) for t in taus])
    return QuantileCurve(taus=taus, empirical=empirical)


def pinball_loss(data: Dataset, tau: float) -> float:
    """Mean check loss of the predicted tau-quantiles against the targets."""
    tau = float(tau)
    if not (0.0 < tau < 1.0):
        raise ParameterError(f"quantile level must lie in (0, 1), got {tau!r}")
    total = 0.0
    for p, y in zip(data.predictions, data.targets):
        if not isinstance(y, RealVector) or y.dim != 1:
            raise DimensionError("pinball loss requires univariate real targets")
        pred = p.quantile(tau)
        obs = float(y.values[0])
        total += (1.0 - tau) * max(pred - obs, 0.0) + tau * max(obs - pred, 0.0)
    return total / len(data)


def nll(data: Dataset) -> float:
    """Mean negative log density; +inf if any point has zero density."""
    values = [p.log_density(y) for p, y in zip(data.predictions, data.targets)]
    if any(v == -math.inf for v in values):
        return math.inf
    return -float(np.mean(values))


def mse(data: Dataset) -> float:
    """Mean squared Euclidean distance between targets and predictive means."""
    total = 0.0
    for p, y in zip(data.predictions, data.targets):
        if not isinstance(y, RealVector):
            raise FamilyError("mse requires real-vector targets")
        mean = _predictive_mean(p)
        total += float(np.sum((y.values - mean) ** 2))
    return total / len(data)


def _predictive_mean(p: Prediction) -> np.ndarray:
    from .distributions import DiagNormal, Laplace, Mixture

    if isinstance(p, DiagNormal):
        return p.mean
    if isinstance(p, Laplace):
        return np.array([p.loc])
    if isinstance(p, Mixture):
        return np.sum(
            [w * _predictive_mean(c) for w, c in zip(p.weights, p.components)], axis=0
        )
    raise FamilyError(f"no predictive mean for family {p.family!r}")
