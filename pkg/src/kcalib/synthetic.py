"""Synthetic scenario generators and benchmark sweeps.

Scenarios: calibrated/uncalibrated Gaussian setups, an OLS regression
pipeline with homoscedastic Gaussian predictions, and the Friedman-1 data
generator (data only; a misspecified linear Gaussian model is provided for
demos in place of any trained model).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .calibration_tests import (
    default_cme_locations,
    test_asymptotic_block,
    test_asymptotic_sqrt_block,
    test_bootstrap_ustat,
    test_cme,
)
from .distributions import DiagNormal, RealVector
from .estimators import Dataset, skce_block, skce_plug_in, skce_ustat
from .exceptions import ParameterError
from .kernels import KernelSpec, default_kernel_spec
from .rng import substream


# ---------------------------------------------------------------------------
# Generators


def gen_calibrated(d: int, n: int, seed: int, replicate: int = 0) -> Dataset:
    """Calibrated model: predictions N(c 1_d, 0.1^2 I), c ~ U(0, 1), and
    targets drawn from the predictions themselves."""
    if d < 1 or n < 1:
        raise ParameterError("need d >= 1 and n >= 1")
    rng = substream(seed, "calibrated", replicate)
    var = np.full(d, 0.01)
    c = rng.uniform(0.0, 1.0, size=n)
    predictions = [DiagNormal(np.full(d, ci), var) for ci in c]
    targets = [p.sample(rng) for p in predictions]
    return Dataset(predictions, targets)


def gen_uncalibrated(d: int, n: int, seed: int, replicate: int = 0) -> Dataset:
    """Uncalibrated model: as the calibrated setup, except the first target
    coordinate is drawn with mean 0.1 regardless of the predicted mean."""
    if d < 1 or n < 1:
        raise ParameterError("need d >= 1 and n >= 1")
    rng = substream(seed, "uncalibrated", replicate)
    var = np.full(d, 0.01)
    c = rng.uniform(0.0, 1.0, size=n)
    predictions = [DiagNormal(np.full(d, ci), var) for ci in c]
    targets = []
    for p in predictions:
        mean = p.mean.copy()
        mean[0] = 0.1
        targets.append(RealVector(mean + np.sqrt(var) * rng.standard_normal(d)))
    return Dataset(predictions, targets)


@dataclass
class OlsScenario:
    train_x: np.ndarray
    train_y: np.ndarray
    intercept: float
    slope: float
    noise_var: float
    validation_x: np.ndarray
    validation: Dataset


def _draw_sine_pairs(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = rng.uniform(-1.0, 1.0, size=n)
    eps = 0.15 * rng.standard_normal(n)
    y = np.sin(math.pi * x) + np.abs(1.0 + x) * eps
    return x, y


def gen_ols_scenario(seed: int, replicate: int = 0) -> OlsScenario:
    """Sine-wave regression data with an OLS linear model fitted on 100
    training points; 50 validation pairs get homoscedastic normal
    predictions from the fitted model."""
    rng = substream(seed, "ols", replicate)
    train_x, train_y = _draw_sine_pairs(rng, 100)
    design = np.column_stack([np.ones_like(train_x), train_x])
    coef, *_ = np.linalg.lstsq(design, train_y, rcond=None)
    residuals = train_y - design @ coef
    noise_var = float(residuals @ residuals / (len(train_x) - 2))
    val_x, val_y = _draw_sine_pairs(rng, 50)
    predictions = [
        DiagNormal([coef[0] + coef[1] * x], [noise_var]) for x in val_x
    ]
    targets = [RealVector([y]) for y in val_y]
    return OlsScenario(
        train_x=train_x,
        train_y=train_y,
        intercept=float(coef[0]),
        slope=float(coef[1]),
        noise_var=noise_var,
        validation_x=val_x,
        validation=Dataset(predictions, targets),
    )


def friedman1_response(x: np.ndarray) -> np.ndarray:
    """Noiseless Friedman-1 response for inputs of shape (n, 10)."""
    x = np.atleast_2d(x)
    return (
        10.0 * np.sin(math.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 10.0 * x[:, 3]
        + 5.0 * x[:, 4]
    )


def gen_friedman1(n: int, noise_sd: float, seed: int, replicate: int = 0):
    """Friedman-1 inputs uniform on [0, 1]^10 with Gaussian response noise."""
    if n < 1:
        raise ParameterError("need n >= 1")
    if noise_sd < 0:
        raise ParameterError("noise standard deviation must be nonnegative")
    rng = substream(seed, "friedman1", replicate)
    x = rng.uniform(0.0, 1.0, size=(n, 10))
    y = friedman1_response(x) + noise_sd * rng.standard_normal(n)
    return x, y


def fit_linear_gaussian(x: np.ndarray, y: np.ndarray):
    """OLS fit with homoscedastic variance; a deliberately misspecified
    closed-form stand-in for trained Friedman-1 models."""
    design = np.column_stack([np.ones(len(x)), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - design @ coef
    dof = max(len(x) - design.shape[1], 1)
    return coef, float(residuals @ residuals / dof)


def linear_gaussian_predictions(coef: np.ndarray, noise_var: float, x: np.ndarray, y: np.ndarray) -> Dataset:
    design = np.column_stack([np.ones(len(x)), x])
    means = design @ coef
    predictions = [DiagNormal([m], [noise_var]) for m in means]
    targets = [RealVector([v]) for v in y]
    return Dataset(predictions, targets)


_SCENARIOS = {
    "calibrated": gen_calibrated,
    "uncalibrated": gen_uncalibrated,
}


def make_scenario_dataset(scenario: str, d: int, n: int, seed: int, replicate: int = 0) -> Dataset:
    if scenario == "ols":
        return gen_ols_scenario(seed, replicate).validation
    if scenario not in _SCENARIOS:
        raise ParameterError(f"unknown scenario {scenario!r}")
    return _SCENARIOS[scenario](d, n, seed, replicate)


# ---------------------------------------------------------------------------
# Ground truth and benchmarks


@dataclass
class GroundTruthEstimate:
    value: float
    std_error: float
    num_datasets: int
    n_per: int


def estimate_ground_truth(
    spec: KernelSpec,
    scenario: str,
    d: int,
    num_datasets: int,
    n_per: int,
    seed: int,
) -> GroundTruthEstimate:
    """Mean of the U-statistic estimator over independent datasets."""
    if num_datasets < 1:
        raise ParameterError("need at least one dataset")
    values = np.empty(num_datasets)
    for r in range(num_datasets):
        data = make_scenario_dataset(scenario, d, n_per, seed, replicate=r)
        values[r] = skce_ustat(spec, data).value
    std_error = float(np.std(values, ddof=1) / math.sqrt(num_datasets)) if num_datasets > 1 else 0.0
    return GroundTruthEstimate(
        value=float(values.mean()),
        std_error=std_error,
        num_datasets=num_datasets,
        n_per=n_per,
    )


@dataclass
class BenchmarkConfig:
    scenario: str = "calibrated"
    d: int = 1
    n_grid: tuple = (4, 16, 64, 256, 1024)
    replicates: int = 200
    alpha: float = 0.05
    seed: int = 0
    spec: KernelSpec = field(default_factory=default_kernel_spec)
    num_bootstrap: int = 500
    cme_locations: int = 10
    estimators: tuple = ("plug-in", "block-2", "block-sqrt", "u-statistic")
    tests: tuple = ("block-2", "sqrt-block", "bootstrap", "cme")
    ground_truth_datasets: int = 500
    ground_truth_n: int = 500

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError("need at least one replicate")
        if any(n < 1 for n in self.n_grid) or len(self.n_grid) == 0:
            raise ParameterError("invalid n grid")
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError("significance level must lie in (0, 1)")


@dataclass
class BenchmarkResult:
    """Grid of benchmark cells as flat rows with a fixed column order."""

    rows: list

    COLUMNS = ("scenario", "d", "n", "method", "metric", "value", "stderr")

    def to_csv(self, fh) -> None:
        fh.write(",".join(self.COLUMNS) + "\n")
        for row in self.rows:
            fh.write(",".join(str(row[c]) for c in self.COLUMNS) + "\n")


def _estimate_once(name: str, spec: KernelSpec, data: Dataset):
    n = len(data)
    if name == "plug-in":
        return skce_plug_in(spec, data)
    if name == "block-2":
        return skce_block(spec, data, 2)
    if name == "block-sqrt":
        return skce_block(spec, data, max(2, int(math.isqrt(n))))
    if name == "u-statistic":
        return skce_ustat(spec, data)
    raise ParameterError(f"unknown estimator {name!r}")


def run_estimator_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """Mean absolute error and variance of SKCE estimates versus the
    scenario's ground truth, per (n, estimator) cell."""
    if config.scenario == "calibrated":
        truth = 0.0
    else:
        truth = estimate_ground_truth(
            config.spec,
            config.scenario,
            config.d,
            config.ground_truth_datasets,
            config.ground_truth_n,
            seed=config.seed + 1_000_003,
        ).value
    rows = []
    for n in config.n_grid:
        datasets = [
            make_scenario_dataset(config.scenario, config.d, n, config.seed, replicate=r)
            for r in range(config.replicates)
        ]
        for name in config.estimators:
            if name != "plug-in" and n < 2:
                continue
            estimates = np.empty(config.replicates)
            h_evals = 0
            start = time.perf_counter()
            for r, data in enumerate(datasets):
                report = _estimate_once(name, config.spec, data)
                estimates[r] = report.value
                h_evals = report.diagnostics["h_evaluations"]
            elapsed = time.perf_counter() - start
            abs_err = np.abs(estimates - truth)
            base = {"scenario": config.scenario, "d": config.d, "n": n, "method": name}
            rows.append(
                base | {
                    "metric": "mean_abs_error",
                    "value": float(abs_err.mean()),
                    "stderr": float(abs_err.std(ddof=1) / math.sqrt(config.replicates)),
                }
            )
            rows.append(
                base | {"metric": "variance", "value": float(estimates.var(ddof=1)), "stderr": ""}
            )
            rows.append(base | {"metric": "h_evaluations", "value": h_evals, "stderr": ""})
            rows.append(
                base | {"metric": "wall_time_s", "value": elapsed / config.replicates, "stderr": ""}
            )
    return BenchmarkResult(rows)


def _test_once(name: str, config: BenchmarkConfig, data: Dataset, replicate: int):
    n = len(data)
    if name == "block-2":
        return test_asymptotic_block(config.spec, data, 2)
    if name == "sqrt-block":
        return test_asymptotic_sqrt_block(config.spec, data)
    if name == "bootstrap":
        return test_bootstrap_ustat(
            config.spec, data, config.num_bootstrap, seed=config.seed * 7919 + replicate
        )
    if name == "cme":
        locs = default_cme_locations(config.d, config.cme_locations, seed=config.seed)
        return test_cme(config.spec, data, locs)
    raise ParameterError(f"unknown test {name!r}")


def run_test_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """Rejection rates at the configured significance level per (n, test)."""
    rows = []
    for n in config.n_grid:
        datasets = [
            make_scenario_dataset(config.scenario, config.d, n, config.seed, replicate=r)
            for r in range(config.replicates)
        ]
        for name in config.tests:
            if name in ("block-2",) and n < 4:
                continue
            if name == "sqrt-block" and n < 8:
                continue
            if name == "cme" and n <= config.cme_locations:
                continue
            rejections = 0
            start = time.perf_counter()
            for r, data in enumerate(datasets):
                report = _test_once(name, config, data, r)
                if report.p_value < config.alpha:
                    rejections += 1
            elapsed = time.perf_counter() - start
            rate = rejections / config.replicates
            stderr = math.sqrt(rate * (1.0 - rate) / config.replicates)
            base = {"scenario": config.scenario, "d": config.d, "n": n, "method": name}
            rows.append(
                base | {"metric": "rejection_rate", "value": rate, "stderr": stderr}
            )
            rows.append(
                base | {"metric": "wall_time_s", "value": elapsed / config.replicates, "stderr": ""}
            )
    return BenchmarkResult(rows)
