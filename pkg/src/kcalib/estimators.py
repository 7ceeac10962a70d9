"""SKCE and UCME estimators over datasets of (prediction, target) pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    Categorical,
    ClassLabel,
    Count,
    DiagNormal,
    Laplace,
    Mixture,
    Prediction,
    RealVector,
    Target,
    TruncatedCountable,
)
from .exceptions import DimensionError, FamilyError, ParameterError
from .kernels import (
    KernelSpec,
    eval_prediction_kernel,
    eval_target_kernel,
    expect_target_kernel,
    pairwise_h,
)


def _check_pair(p: Prediction, y: Target) -> None:
    if isinstance(p, Categorical):
        if not isinstance(y, ClassLabel):
            raise FamilyError("categorical predictions require class-label targets")
        if y.index >= p.n_classes:
            raise DimensionError(f"class index {y.index} out of range for {p.n_classes} classes")
    elif isinstance(p, TruncatedCountable):
        if not isinstance(y, Count):
            raise FamilyError("truncated countable predictions require count targets")
    else:
        if not isinstance(y, RealVector):
            raise FamilyError(f"{p.family} predictions require real-vector targets")
        if y.dim != p.dim:
            raise DimensionError(f"target dimension {y.dim} != prediction dimension {p.dim}")


class Dataset:
    """Homogeneous sequence of (prediction, target) pairs."""

    def __init__(self, predictions, targets):
        predictions = list(predictions)
        targets = list(targets)
        if len(predictions) != len(targets):
            raise ParameterError("predictions and targets must have equal length")
        if len(predictions) == 0:
            raise ParameterError("datasets must contain at least one pair")
        first = predictions[0]
        for p, y in zip(predictions, targets):
            if p.family != first.family:
                raise FamilyError(
                    f"mixed prediction families: {first.family!r} vs {p.family!r}"
                )
            _check_pair(p, y)
        self.predictions = predictions
        self.targets = targets

    @classmethod
    def from_pairs(cls, pairs) -> "Dataset":
        preds, tgts = zip(*pairs)
        return cls(preds, tgts)

    @property
    def family(self) -> str:
        return self.predictions[0].family

    def __len__(self) -> int:
        return len(self.predictions)

    def __getitem__(self, i):
        return self.predictions[i], self.targets[i]

    def subset(self, indices) -> "Dataset":
        return Dataset(
            [self.predictions[i] for i in indices], [self.targets[i] for i in indices]
        )


@dataclass
class TestLocations:
    """Fixed (prediction, target) locations for the UCME/CME test."""

    __test__ = False  # not a pytest class

    predictions: list
    targets: list

    def __post_init__(self):
        if len(self.predictions) != len(self.targets) or len(self.predictions) < 1:
            raise ParameterError("test locations need at least one (prediction, target) pair")
        for p, y in zip(self.predictions, self.targets):
            _check_pair(p, y)

    def __len__(self) -> int:
        return len(self.predictions)


@dataclass
class EstimateReport:
    kind: str
    value: float
    block_estimates: np.ndarray | None = None
    sigma_hat_b: float | None = None
    h_squared_hat: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _pair_sum(values) -> float:
    # Pairwise (tree) reduction keeps the result independent of threading
    # and bounds round-off for long sums.
    arr = np.asarray(values, dtype=np.float64)
    while arr.size > 1024:
        half = arr.size // 2
        head = arr[: 2 * half].reshape(half, 2).sum(axis=1)
        arr = np.concatenate([head, arr[2 * half :]])
    return float(arr.sum())


def h_matrix(spec: KernelSpec, data: Dataset) -> np.ndarray:
    """Full n x n matrix of h values, diagonal included (n^2 evaluations)."""
    n = len(data)
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    values = pairwise_h(spec, data.predictions, data.targets, rows.ravel(), cols.ravel())
    return values.reshape(n, n)


def skce_plug_in(spec: KernelSpec, data: Dataset) -> EstimateReport:
    """Biased plug-in estimator: n^-2 sum over all ordered pairs of h."""
    n = len(data)
    h = h_matrix(spec, data)
    raw = _pair_sum(h.ravel()) / (n * n)
    return EstimateReport(
        kind="plug-in",
        value=max(raw, 0.0),
        diagnostics={"raw_value": raw, "h_evaluations": n * n},
    )


def _block_pairs(n: int, block_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Within-block (i < j) index pairs and the block id of each pair."""
    iu, ju = np.triu_indices(block_size, k=1)
    num_blocks = n // block_size
    offsets = np.arange(num_blocks) * block_size
    rows = (offsets[:, None] + iu[None, :]).ravel()
    cols = (offsets[:, None] + ju[None, :]).ravel()
    block_ids = np.repeat(np.arange(num_blocks), iu.size)
    return rows, cols, block_ids


def skce_block(spec: KernelSpec, data: Dataset, block_size: int) -> EstimateReport:
    """Unbiased block estimator with ``floor(n / B)`` disjoint blocks.

    Trailing ``n mod B`` points are dropped, as the block formula implies.
    """
    n = len(data)
    if not 2 <= block_size <= n:
        raise ParameterError(f"block size must satisfy 2 <= B <= n, got B={block_size}, n={n}")
    rows, cols, block_ids = _block_pairs(n, block_size)
    values = pairwise_h(spec, data.predictions, data.targets, rows, cols)
    num_blocks = n // block_size
    pairs_per_block = block_size * (block_size - 1) // 2
    etas = np.array(
        [
            _pair_sum(values[block_ids == b]) / pairs_per_block
            for b in range(num_blocks)
        ]
    )
    sigma_hat = float(np.std(etas, ddof=1)) if num_blocks >= 2 else None
    return EstimateReport(
        kind=f"block(B={block_size})",
        value=float(np.mean(etas)),
        block_estimates=etas,
        sigma_hat_b=sigma_hat,
        diagnostics={
            "h_evaluations": int(rows.size),
            "dropped_points": n - num_blocks * block_size,
            "num_blocks": num_blocks,
            "block_size": block_size,
        },
    )


def skce_ustat(spec: KernelSpec, data: Dataset) -> EstimateReport:
    """Minimum-variance unbiased estimator: the block estimator with B = n."""
    n = len(data)
    if n < 2:
        raise ParameterError("the U-statistic estimator needs at least 2 pairs")
    report = skce_block(spec, data, n)
    report.kind = "u-statistic"
    return report


def h_squared_hat(spec: KernelSpec, data: Dataset) -> float:
    """Unbiased estimate of E h^2: mean of h(i, j)^2 over unordered pairs."""
    n = len(data)
    if n < 2:
        raise ParameterError("estimating E h^2 needs at least 2 pairs")
    rows, cols = np.triu_indices(n, k=1)
    values = pairwise_h(spec, data.predictions, data.targets, rows, cols)
    return _pair_sum(values**2) / rows.size


def cme_feature_matrix(spec: KernelSpec, data: Dataset, locs: TestLocations) -> np.ndarray:
    """n x J matrix with entries k(T_j, (p_i, y_i)) - E_{Z~p_i} k(T_j, (p_i, Z))."""
    n, j_count = len(data), len(locs)
    z = np.empty((n, j_count))
    for j in range(j_count):
        tp, ty = locs.predictions[j], locs.targets[j]
        for i in range(n):
            p, y = data.predictions[i], data.targets[i]
            kp = eval_prediction_kernel(spec.prediction_kernel, tp, p)
            z[i, j] = kp * (
                eval_target_kernel(spec.target_kernel, ty, y)
                - expect_target_kernel(spec, p, ty)
            )
    return z


def ucme_squared(spec: KernelSpec, data: Dataset, locs: TestLocations) -> EstimateReport:
    """Plug-in estimator of the squared unnormalized calibration mean embedding."""
    z = cme_feature_matrix(spec, data, locs)
    inner_means = z.mean(axis=0)
    return EstimateReport(
        kind=f"ucme(J={len(locs)})",
        value=float(np.mean(inner_means**2)),
        diagnostics={"inner_means": inner_means},
    )
