"""Tensor-product kernels on (prediction, target) pairs.

A kernel spec combines an exponential-metric kernel on the prediction space
with a target-space kernel, evaluated either with closed-form expectations
over predicted distributions or with seeded Monte-Carlo averaging. The
centered kernel ``eval_h`` is the building block of all SKCE estimators.
"""

from __future__ import annotations

import hashlib
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
    mixture_wasserstein,
    wasserstein2,
)
from .exceptions import ConfigurationError, DimensionError, FamilyError, ParameterError
from .rng import substream

# Relative half-width of the band around the Laplacian kernel poles inside
# which the limit formulas replace the exact ones (which divide by
# beta^2 * gamma^2 - 1 and beta^2 - beta'^2).
_LAPLACE_POLE_TOL = 1e-8

_CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# Kernel configuration types


@dataclass(frozen=True)
class GaussianRBF:
    """exp(-gamma * ||y - y'||_2^2) on targets."""

    gamma: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError(f"gamma must be finite and positive, got {self.gamma!r}")


@dataclass(frozen=True)
class LaplacianExp:
    """exp(-gamma * ||y - y'||_1) on targets."""

    gamma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError(f"gamma must be finite and positive, got {self.gamma!r}")


@dataclass(frozen=True)
class KroneckerDelta:
    """1 if targets are equal, else 0."""


TargetKernel = GaussianRBF | LaplacianExp | KroneckerDelta


@dataclass(frozen=True)
class W2:
    """Closed-form 2-Wasserstein metric (diagonal normals, Laplace)."""


@dataclass(frozen=True)
class MW:
    """Mixture transport metric of order ``s`` with W2 ground cost."""

    s: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 1.0):
            raise ParameterError(f"transport order must satisfy s >= 1, got {self.s!r}")


@dataclass(frozen=True)
class ParamEuclidean:
    """Euclidean distance between canonical parameter embeddings."""


PredictionMetric = W2 | MW | ParamEuclidean


@dataclass(frozen=True)
class PredictionKernel:
    """exp(-lam * d(p, p')^nu) for a prediction-space metric d."""

    metric: PredictionMetric = field(default_factory=W2)
    lam: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"lambda must be finite and positive, got {self.lam!r}")
        if not (math.isfinite(self.nu) and 0 < self.nu <= 2):
            raise ParameterError(f"nu must lie in (0, 2], got {self.nu!r}")


@dataclass(frozen=True)
class Analytic:
    """Closed-form expectations; rejects unsupported (family, kernel) pairs."""


@dataclass(frozen=True)
class MonteCarlo:
    """Seeded Monte-Carlo expectations with a fixed sample count."""

    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ParameterError("Monte-Carlo expectations need at least 1 sample")


ExpectationMode = Analytic | MonteCarlo


@dataclass(frozen=True)
class KernelSpec:
    prediction_kernel: PredictionKernel = field(default_factory=PredictionKernel)
    target_kernel: TargetKernel = field(default_factory=GaussianRBF)
    expectation: ExpectationMode = field(default_factory=Analytic)


def default_kernel_spec() -> KernelSpec:
    """exp(-W2(p, p')) * exp(-(y - y')^2 / 2), the benchmark default."""
    return KernelSpec(
        prediction_kernel=PredictionKernel(metric=W2(), lam=1.0, nu=1.0),
        target_kernel=GaussianRBF(gamma=0.5),
        expectation=Analytic(),
    )


# ---------------------------------------------------------------------------
# Prediction-space metric and kernel


def _param_embedding(p: Prediction) -> np.ndarray:
    if isinstance(p, Categorical):
        return p.probs
    if isinstance(p, DiagNormal):
        return np.concatenate([p.mean, np.sqrt(p.var)])
    if isinstance(p, Laplace):
        return np.array([p.loc, math.sqrt(2.0) * p.scale])
    if isinstance(p, TruncatedCountable):
        return np.append(p.probs, p.tail_mass)
    raise ConfigurationError(
        f"no canonical parameter embedding for family {p.family!r}"
    )


def prediction_distance(metric: PredictionMetric, p: Prediction, q: Prediction) -> float:
    if isinstance(metric, W2):
        return wasserstein2(p, q)
    if isinstance(metric, MW):
        if not isinstance(p, Mixture):
            p = Mixture([1.0], [p])
        if not isinstance(q, Mixture):
            q = Mixture([1.0], [q])
        return mixture_wasserstein(p, q, metric.s)
    a, b = _param_embedding(p), _param_embedding(q)
    if a.shape != b.shape:
        raise DimensionError("parameter embeddings have mismatched dimensions")
    return float(np.linalg.norm(a - b))


def eval_prediction_kernel(pk: PredictionKernel, p: Prediction, q: Prediction) -> float:
    d = prediction_distance(pk.metric, p, q)
    return math.exp(-pk.lam * d**pk.nu)


# ---------------------------------------------------------------------------
# Target kernel on concrete targets


def _target_coords(y: Target) -> np.ndarray:
    if isinstance(y, RealVector):
        return y.values
    if isinstance(y, ClassLabel):
        return np.array([float(y.index)])
    if isinstance(y, Count):
        return np.array([float(y.value)])
    raise FamilyError(f"unknown target type {type(y).__name__}")


def eval_target_kernel(tk: TargetKernel, y: Target, z: Target) -> float:
    if isinstance(tk, KroneckerDelta):
        if isinstance(y, ClassLabel) and isinstance(z, ClassLabel):
            return 1.0 if y.index == z.index else 0.0
        if isinstance(y, Count) and isinstance(z, Count):
            return 1.0 if y.value == z.value else 0.0
        return 1.0 if np.array_equal(_target_coords(y), _target_coords(z)) else 0.0
    a, b = _target_coords(y), _target_coords(z)
    if a.shape != b.shape:
        raise DimensionError("target dimensions do not match")
    if isinstance(tk, GaussianRBF):
        return math.exp(-tk.gamma * float(np.sum((a - b) ** 2)))
    return math.exp(-tk.gamma * float(np.sum(np.abs(a - b))))


# ---------------------------------------------------------------------------
# Analytic expectations


def _discrete_support(p: Prediction) -> tuple[np.ndarray, list[Target]]:
    if isinstance(p, Categorical):
        return p.probs, [ClassLabel(i) for i in range(p.n_classes)]
    # Truncated expectations renormalize over the truncated support; the
    # induced absolute error is bounded by 2 * tail_mass.
    probs = p.probs / p.probs.sum()
    return probs, [Count(i) for i in range(p.support_size)]


def _normal_gauss_expect(mean, var, y, gamma) -> float:
    denom = 1.0 + 2.0 * gamma * var
    return float(np.prod(denom**-0.5 * np.exp(-gamma * (mean - y) ** 2 / denom)))


def _normal_gauss_double(mean1, var1, mean2, var2, gamma) -> float:
    denom = 1.0 + 2.0 * gamma * (var1 + var2)
    return float(np.prod(denom**-0.5 * np.exp(-gamma * (mean1 - mean2) ** 2 / denom)))


def _laplace_exp_expect(loc: float, scale: float, y: float, gamma: float) -> float:
    m = abs(loc - y)
    bg = scale * gamma
    if abs(bg - 1.0) <= _LAPLACE_POLE_TOL:
        return 0.5 * (1.0 + gamma * m) * math.exp(-gamma * m)
    return (bg * math.exp(-m / scale) - math.exp(-gamma * m)) / (bg * bg - 1.0)


def _laplace_exp_double(l1: float, b1: float, l2: float, b2: float, gamma: float) -> float:
    m = abs(l1 - l2)
    g1 = b1 * gamma
    g2 = b2 * gamma
    pole1 = abs(g1 - 1.0) <= _LAPLACE_POLE_TOL
    pole2 = abs(g2 - 1.0) <= _LAPLACE_POLE_TOL
    equal_scales = abs(b1 - b2) <= _LAPLACE_POLE_TOL * max(b1, b2)
    if pole1 and pole2:
        return (3.0 + 3.0 * gamma * m + (gamma * m) ** 2) / 8.0 * math.exp(-gamma * m)
    if equal_scales and not pole1:
        c = g1 * g1 - 1.0
        return (
            math.exp(-gamma * m) / (c * c)
            + (gamma * (b1 + m) / (2.0 * c) - g1 / (c * c)) * math.exp(-m / b1)
        )
    if pole1:
        c = g2 * g2 - 1.0
        return (
            g2**3 / (c * c) * math.exp(-m / b2)
            - ((1.0 + gamma * m) / (2.0 * c) + g2 * g2 / (c * c)) * math.exp(-gamma * m)
        )
    if pole2:
        c = g1 * g1 - 1.0
        return (
            g1**3 / (c * c) * math.exp(-m / b1)
            - ((1.0 + gamma * m) / (2.0 * c) + g1 * g1 / (c * c)) * math.exp(-gamma * m)
        )
    c1 = g1 * g1 - 1.0
    c2 = g2 * g2 - 1.0
    d = b1 * b1 - b2 * b2
    return (
        gamma * b1**3 / (c1 * d) * math.exp(-m / b1)
        + gamma * b2**3 / (c2 * -d) * math.exp(-m / b2)
        + math.exp(-gamma * m) / (c1 * c2)
    )


def _analytic_expect(tk: TargetKernel, p: Prediction, y: Target) -> float:
    if isinstance(p, (Categorical, TruncatedCountable)):
        probs, support = _discrete_support(p)
        return float(sum(w * eval_target_kernel(tk, s, y) for w, s in zip(probs, support)))
    if isinstance(p, Mixture):
        return float(
            sum(w * _analytic_expect(tk, c, y) for w, c in zip(p.weights, p.components))
        )
    if isinstance(p, DiagNormal) and isinstance(tk, GaussianRBF):
        if not isinstance(y, RealVector) or y.dim != p.dim:
            raise DimensionError("target must be a real vector matching the prediction dimension")
        return _normal_gauss_expect(p.mean, p.var, y.values, tk.gamma)
    if isinstance(p, Laplace) and isinstance(tk, LaplacianExp):
        if not isinstance(y, RealVector) or y.dim != 1:
            raise DimensionError("target must be a univariate real vector")
        return _laplace_exp_expect(p.loc, p.scale, float(y.values[0]), tk.gamma)
    raise ConfigurationError(
        f"no closed-form expectation for family {p.family!r} with "
        f"{type(tk).__name__}; use MonteCarlo expectation mode"
    )


def _analytic_double_expect(tk: TargetKernel, p: Prediction, q: Prediction) -> float:
    if isinstance(p, Mixture):
        return float(
            sum(w * _analytic_double_expect(tk, c, q) for w, c in zip(p.weights, p.components))
        )
    if isinstance(q, Mixture):
        return float(
            sum(w * _analytic_double_expect(tk, p, c) for w, c in zip(q.weights, q.components))
        )
    if isinstance(p, (Categorical, TruncatedCountable)):
        probs, support = _discrete_support(p)
        return float(
            sum(w * _analytic_expect(tk, q, s) for w, s in zip(probs, support))
        )
    if isinstance(q, (Categorical, TruncatedCountable)):
        probs, support = _discrete_support(q)
        return float(
            sum(w * _analytic_expect(tk, p, s) for w, s in zip(probs, support))
        )
    if isinstance(p, DiagNormal) and isinstance(q, DiagNormal) and isinstance(tk, GaussianRBF):
        if p.dim != q.dim:
            raise DimensionError("prediction dimensions do not match")
        return _normal_gauss_double(p.mean, p.var, q.mean, q.var, tk.gamma)
    if isinstance(p, Laplace) and isinstance(q, Laplace) and isinstance(tk, LaplacianExp):
        return _laplace_exp_double(p.loc, p.scale, q.loc, q.scale, tk.gamma)
    raise ConfigurationError(
        f"no closed-form double expectation for families {p.family!r}, {q.family!r} with "
        f"{type(tk).__name__}; use MonteCarlo expectation mode"
    )


# ---------------------------------------------------------------------------
# Monte-Carlo expectations


def _pred_key(p: Prediction) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(p.family.encode())
    if isinstance(p, Categorical):
        h.update(p.probs.tobytes())
    elif isinstance(p, DiagNormal):
        h.update(p.mean.tobytes())
        h.update(p.var.tobytes())
    elif isinstance(p, Laplace):
        h.update(np.array([p.loc, p.scale]).tobytes())
    elif isinstance(p, TruncatedCountable):
        h.update(p.probs.tobytes())
        h.update(np.array([p.tail_mass]).tobytes())
    elif isinstance(p, Mixture):
        h.update(p.weights.tobytes())
        for c in p.components:
            h.update(_pred_key(c).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def _sample_coords(p: Prediction, rng: np.random.Generator, n: int) -> np.ndarray | None:
    """Draw n samples as an (n, dim) coordinate array, or None if unsupported."""
    if isinstance(p, DiagNormal):
        return rng.normal(p.mean, np.sqrt(p.var), size=(n, p.dim))
    if isinstance(p, Laplace):
        return rng.laplace(p.loc, p.scale, size=(n, 1))
    if isinstance(p, Categorical):
        return rng.choice(p.n_classes, size=n, p=p.probs).astype(float).reshape(n, 1)
    if isinstance(p, TruncatedCountable) and p.tail_mass == 0.0:
        return rng.choice(p.support_size, size=n, p=p.probs).astype(float).reshape(n, 1)
    if isinstance(p, Mixture):
        counts = rng.multinomial(n, p.weights)
        parts = []
        for c, m in zip(p.components, counts):
            if m == 0:
                continue
            drawn = _sample_coords(c, rng, int(m))
            if drawn is None:
                return None
            parts.append(drawn)
        coords = np.concatenate(parts, axis=0)
        return coords[rng.permutation(n)]
    return None


def _kernel_rows(tk: TargetKernel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise kernel values between two (n, dim) coordinate arrays."""
    if isinstance(tk, KroneckerDelta):
        return np.all(a == b, axis=1).astype(float)
    if isinstance(tk, GaussianRBF):
        return np.exp(-tk.gamma * np.sum((a - b) ** 2, axis=1))
    return np.exp(-tk.gamma * np.sum(np.abs(a - b), axis=1))


def _mc_samples(p: Prediction, mode: MonteCarlo, role: str) -> list[Target]:
    rng = substream(mode.seed, _pred_key(p), role)
    return [p.sample(rng) for _ in range(mode.samples)]


def _mc_expect(tk: TargetKernel, p: Prediction, y: Target, mode: MonteCarlo) -> float:
    rng = substream(mode.seed, _pred_key(p), "single")
    coords = _sample_coords(p, rng, mode.samples)
    if coords is not None:
        target = np.broadcast_to(_target_coords(y), coords.shape)
        return float(np.mean(_kernel_rows(tk, coords, target)))
    draws = _mc_samples(p, mode, "single")
    return float(np.mean([eval_target_kernel(tk, z, y) for z in draws]))


def _mc_double_expect(tk: TargetKernel, p: Prediction, q: Prediction, mode: MonteCarlo) -> float:
    rng_l = substream(mode.seed, _pred_key(p), "pair-left")
    rng_r = substream(mode.seed, _pred_key(q), "pair-right")
    left = _sample_coords(p, rng_l, mode.samples)
    right = _sample_coords(q, rng_r, mode.samples)
    if left is not None and right is not None:
        return float(np.mean(_kernel_rows(tk, left, right)))
    draws_l = _mc_samples(p, mode, "pair-left")
    draws_r = _mc_samples(q, mode, "pair-right")
    return float(np.mean([eval_target_kernel(tk, a, b) for a, b in zip(draws_l, draws_r)]))


# ---------------------------------------------------------------------------
# Public kernel surface


def expect_target_kernel(spec: KernelSpec, p: Prediction, y: Target) -> float:
    """E_{Z ~ p} k_Y(Z, y)."""
    if isinstance(spec.expectation, MonteCarlo):
        return _mc_expect(spec.target_kernel, p, y, spec.expectation)
    return _analytic_expect(spec.target_kernel, p, y)


def double_expect_target_kernel(spec: KernelSpec, p: Prediction, q: Prediction) -> float:
    """E_{Z ~ p, Z' ~ q} k_Y(Z, Z')."""
    if isinstance(spec.expectation, MonteCarlo):
        return _mc_double_expect(spec.target_kernel, p, q, spec.expectation)
    return _analytic_double_expect(spec.target_kernel, p, q)


def eval_kernel(spec: KernelSpec, p: Prediction, y: Target, q: Prediction, z: Target) -> float:
    """Tensor-product kernel value on two (prediction, target) pairs."""
    return eval_prediction_kernel(spec.prediction_kernel, p, q) * eval_target_kernel(
        spec.target_kernel, y, z
    )


def eval_h(spec: KernelSpec, p: Prediction, y: Target, q: Prediction, z: Target) -> float:
    """Kernel on two pairs with each prediction's own law marginalized out.

    For tensor kernels this factors as k_P(p, q) times the centered
    target-kernel bracket.
    """
    kp = eval_prediction_kernel(spec.prediction_kernel, p, q)
    bracket = (
        eval_target_kernel(spec.target_kernel, y, z)
        - expect_target_kernel(spec, p, z)
        - expect_target_kernel(spec, q, y)
        + double_expect_target_kernel(spec, p, q)
    )
    return kp * bracket


# ---------------------------------------------------------------------------
# Vectorized pairwise h evaluation

def _is_w2_like(metric: PredictionMetric, family: str) -> bool:
    # ParamEuclidean coincides with W2 for diagonal normals and Laplace
    # because their canonical embeddings are the W2 embeddings.
    if isinstance(metric, W2):
        return family in ("diag_normal", "laplace")
    if isinstance(metric, ParamEuclidean):
        return family in ("diag_normal", "laplace")
    return False


def _h_normal_gauss(pk, gamma, mu, var, ys, rows, cols, out):
    lam, nu = pk.lam, pk.nu
    sd = np.sqrt(var)
    for start in range(0, rows.size, _CHUNK):
        r = rows[start : start + _CHUNK]
        c = cols[start : start + _CHUNK]
        dmu = mu[r] - mu[c]
        w2 = np.sqrt(np.sum(dmu**2 + (sd[r] - sd[c]) ** 2, axis=1))
        kp = np.exp(-lam * w2**nu)
        ky = np.exp(-gamma * np.sum((ys[r] - ys[c]) ** 2, axis=1))
        d1 = 1.0 + 2.0 * gamma * var[r]
        e1 = np.prod(d1**-0.5 * np.exp(-gamma * (mu[r] - ys[c]) ** 2 / d1), axis=1)
        d2 = 1.0 + 2.0 * gamma * var[c]
        e2 = np.prod(d2**-0.5 * np.exp(-gamma * (mu[c] - ys[r]) ** 2 / d2), axis=1)
        dd = 1.0 + 2.0 * gamma * (var[r] + var[c])
        ee = np.prod(dd**-0.5 * np.exp(-gamma * dmu**2 / dd), axis=1)
        out[start : start + r.size] = kp * (ky - e1 - e2 + ee)
    return out


def _laplace_expect_vec(loc, scale, y, gamma):
    m = np.abs(loc - y)
    bg = scale * gamma
    pole = np.abs(bg - 1.0) <= _LAPLACE_POLE_TOL
    denom = np.where(pole, 1.0, bg * bg - 1.0)
    exact = (bg * np.exp(-m / scale) - np.exp(-gamma * m)) / denom
    limit = 0.5 * (1.0 + gamma * m) * np.exp(-gamma * m)
    return np.where(pole, limit, exact)


def _laplace_double_vec(l1, b1, l2, b2, gamma):
    m = np.abs(l1 - l2)
    g1 = b1 * gamma
    g2 = b2 * gamma
    pole1 = np.abs(g1 - 1.0) <= _LAPLACE_POLE_TOL
    pole2 = np.abs(g2 - 1.0) <= _LAPLACE_POLE_TOL
    eq = np.abs(b1 - b2) <= _LAPLACE_POLE_TOL * np.maximum(b1, b2)
    c1 = np.where(pole1, 1.0, g1 * g1 - 1.0)
    c2 = np.where(pole2, 1.0, g2 * g2 - 1.0)
    d = b1 * b1 - b2 * b2
    d_safe = np.where(eq, 1.0, d)

    both = (3.0 + 3.0 * gamma * m + (gamma * m) ** 2) / 8.0 * np.exp(-gamma * m)
    equal = np.exp(-gamma * m) / (c1 * c1) + (
        gamma * (b1 + m) / (2.0 * c1) - g1 / (c1 * c1)
    ) * np.exp(-m / b1)
    p1only = g2**3 / (c2 * c2) * np.exp(-m / b2) - (
        (1.0 + gamma * m) / (2.0 * c2) + g2 * g2 / (c2 * c2)
    ) * np.exp(-gamma * m)
    p2only = g1**3 / (c1 * c1) * np.exp(-m / b1) - (
        (1.0 + gamma * m) / (2.0 * c1) + g1 * g1 / (c1 * c1)
    ) * np.exp(-gamma * m)
    generic = (
        gamma * b1**3 / (c1 * d_safe) * np.exp(-m / b1)
        - gamma * b2**3 / (c2 * d_safe) * np.exp(-m / b2)
        + np.exp(-gamma * m) / (c1 * c2)
    )
    out = generic
    out = np.where(eq & ~pole1, equal, out)
    out = np.where(pole1 & ~pole2, p1only, out)
    out = np.where(pole2 & ~pole1, p2only, out)
    out = np.where(pole1 & pole2, both, out)
    return out


def _h_laplace(pk, gamma, loc, scale, ys, rows, cols, out):
    lam, nu = pk.lam, pk.nu
    for start in range(0, rows.size, _CHUNK):
        r = rows[start : start + _CHUNK]
        c = cols[start : start + _CHUNK]
        w2 = np.sqrt((loc[r] - loc[c]) ** 2 + 2.0 * (scale[r] - scale[c]) ** 2)
        kp = np.exp(-lam * w2**nu)
        ky = np.exp(-gamma * np.abs(ys[r] - ys[c]))
        e1 = _laplace_expect_vec(loc[r], scale[r], ys[c], gamma)
        e2 = _laplace_expect_vec(loc[c], scale[c], ys[r], gamma)
        ee = _laplace_double_vec(loc[r], scale[r], loc[c], scale[c], gamma)
        out[start : start + r.size] = kp * (ky - e1 - e2 + ee)
    return out


def _h_categorical(spec, probs, labels, rows, cols, out):
    pk = spec.prediction_kernel
    tk = spec.target_kernel
    n_classes = probs.shape[1]
    idx = np.arange(n_classes, dtype=np.float64)
    if isinstance(tk, KroneckerDelta):
        kcc = np.eye(n_classes)
    elif isinstance(tk, GaussianRBF):
        kcc = np.exp(-tk.gamma * (idx[:, None] - idx[None, :]) ** 2)
    else:
        kcc = np.exp(-tk.gamma * np.abs(idx[:, None] - idx[None, :]))
    a = probs @ kcc  # a[i, c] = E_{Z~p_i} k(Z, c)
    for start in range(0, rows.size, _CHUNK):
        r = rows[start : start + _CHUNK]
        c = cols[start : start + _CHUNK]
        dist = np.sqrt(np.sum((probs[r] - probs[c]) ** 2, axis=1))
        kp = np.exp(-pk.lam * dist**pk.nu)
        ky = kcc[labels[r], labels[c]]
        e1 = a[r, labels[c]]
        e2 = a[c, labels[r]]
        ee = np.sum(a[r] * probs[c], axis=1)
        out[start : start + r.size] = kp * (ky - e1 - e2 + ee)
    return out


def pairwise_h(
    spec: KernelSpec,
    predictions,
    targets,
    rows: np.ndarray,
    cols: np.ndarray,
) -> np.ndarray:
    """h values for the index pairs (rows[k], cols[k]).

    Uses a vectorized closed-form path for homogeneous diagonal-normal,
    Laplace, and categorical datasets; falls back to per-pair evaluation
    otherwise.
    """
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    out = np.empty(rows.size, dtype=np.float64)
    if rows.size == 0:
        return out
    p0 = predictions[0]
    analytic = isinstance(spec.expectation, Analytic)
    if analytic and isinstance(p0, DiagNormal) and isinstance(spec.target_kernel, GaussianRBF):
        if _is_w2_like(spec.prediction_kernel.metric, "diag_normal"):
            mu = np.array([p.mean for p in predictions])
            var = np.array([p.var for p in predictions])
            ys = np.array([t.values for t in targets])
            return _h_normal_gauss(
                spec.prediction_kernel, spec.target_kernel.gamma, mu, var, ys, rows, cols, out
            )
    if analytic and isinstance(p0, Laplace) and isinstance(spec.target_kernel, LaplacianExp):
        if _is_w2_like(spec.prediction_kernel.metric, "laplace"):
            loc = np.array([p.loc for p in predictions])
            scale = np.array([p.scale for p in predictions])
            ys = np.array([t.values[0] for t in targets])
            return _h_laplace(
                spec.prediction_kernel, spec.target_kernel.gamma, loc, scale, ys, rows, cols, out
            )
    if (
        analytic
        and isinstance(p0, Categorical)
        and isinstance(spec.prediction_kernel.metric, ParamEuclidean)
    ):
        probs = np.array([p.probs for p in predictions])
        labels = np.array([t.index for t in targets], dtype=np.intp)
        return _h_categorical(spec, probs, labels, rows, cols, out)
    for k in range(rows.size):
        i, j = rows[k], cols[k]
        out[k] = eval_h(spec, predictions[i], targets[i], predictions[j], targets[j])
    return out
