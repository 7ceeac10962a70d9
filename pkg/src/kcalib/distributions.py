"""Predictive-distribution families, transport distances, and recalibration.

Supported families: categorical, diagonal-covariance normal, univariate
Laplace, finite mixtures of a single non-mixture family, and truncated
countable distributions with an explicitly declared tail mass. All values
are immutable after construction; only ``sample`` touches mutable state,
and it mutates nothing but the caller-owned generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import logsumexp, ndtr, ndtri

from .exceptions import DimensionError, FamilyError, ParameterError

SIMPLEX_TOL = 1e-9
MAX_MIXTURE_COMPONENTS = 64


# ---------------------------------------------------------------------------
# Targets


@dataclass(frozen=True)
class ClassLabel:
    """A class index for categorical predictions."""

    index: int

    def __post_init__(self):
        if not isinstance(self.index, (int, np.integer)) or self.index < 0:
            raise ParameterError(f"class index must be a nonnegative integer, got {self.index!r}")
        object.__setattr__(self, "index", int(self.index))


class RealVector:
    """A real-valued target vector."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
        if arr.ndim != 1:
            raise DimensionError("real targets must be one-dimensional vectors")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("real targets must be finite")
        arr.setflags(write=False)
        self.values = arr

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, RealVector) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"RealVector({self.values.tolist()})"


@dataclass(frozen=True)
class Count:
    """A nonnegative integer count target."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, (int, np.integer)) or self.value < 0:
            raise ParameterError(f"count must be a nonnegative integer, got {self.value!r}")
        object.__setattr__(self, "value", int(self.value))


Target = ClassLabel | RealVector | Count


def _validated_simplex(probs, what: str) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1:
        raise ParameterError(f"{what} must be a vector")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what} must be finite")
    if np.any(arr < 0):
        raise ParameterError(f"{what} must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ParameterError(f"{what} must sum to 1 (got {total!r})")
    arr = arr / total
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Predictions


class Prediction:
    """Base class of all prediction families."""

    family: str

    def sample(self, rng: np.random.Generator) -> Target:
        raise NotImplementedError

    def cdf(self, y: float) -> float:
        raise DimensionError(f"cdf is not defined for family {self.family!r}")

    def quantile(self, tau: float) -> float:
        raise DimensionError(f"quantile is not defined for family {self.family!r}")

    def log_density(self, target: Target) -> float:
        raise NotImplementedError


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (0.0 < tau < 1.0):
        raise ParameterError(f"quantile level must lie in (0, 1), got {tau!r}")
    return tau


class Categorical(Prediction):
    """Distribution over a finite set of class labels."""

    family = "categorical"
    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = _validated_simplex(probs, "class probabilities")
        if arr.shape[0] < 2:
            raise ParameterError("categorical predictions need at least 2 classes")
        self.probs = arr

    @property
    def n_classes(self) -> int:
        return self.probs.shape[0]

    def sample(self, rng: np.random.Generator) -> ClassLabel:
        return ClassLabel(int(rng.choice(self.n_classes, p=self.probs)))

    def log_density(self, target: Target) -> float:
        if not isinstance(target, ClassLabel):
            raise FamilyError("categorical predictions require class-label targets")
        if target.index >= self.n_classes:
            raise DimensionError(
                f"class index {target.index} out of range for {self.n_classes} classes"
            )
        p = self.probs[target.index]
        return math.log(p) if p > 0 else -math.inf

    def __eq__(self, other):
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"Categorical({self.probs.tolist()})"


class DiagNormal(Prediction):
    """Multivariate normal with diagonal covariance; zero variance allowed."""

    family = "diag_normal"
    __slots__ = ("mean", "var")

    def __init__(self, mean, var):
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        var = np.atleast_1d(np.asarray(var, dtype=np.float64))
        if mean.ndim != 1 or var.ndim != 1 or mean.shape != var.shape:
            raise DimensionError("mean and var must be vectors of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(var))):
            raise ParameterError("normal parameters must be finite")
        if np.any(var < 0):
            raise ParameterError("variances must be nonnegative")
        mean.setflags(write=False)
        var.setflags(write=False)
        self.mean = mean
        self.var = var

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: np.random.Generator) -> RealVector:
        return RealVector(self.mean + np.sqrt(self.var) * rng.standard_normal(self.dim))

    def cdf(self, y: float) -> float:
        if self.dim != 1:
            raise DimensionError("cdf requires a univariate prediction")
        mu, v = self.mean[0], self.var[0]
        if v == 0.0:
            return 1.0 if y >= mu else 0.0
        return float(ndtr((y - mu) / math.sqrt(v)))

    def quantile(self, tau: float) -> float:
        tau = _check_tau(tau)
        if self.dim != 1:
            raise DimensionError("quantile requires a univariate prediction")
        mu, v = self.mean[0], self.var[0]
        if v == 0.0:
            return float(mu)
        return float(mu + math.sqrt(v) * ndtri(tau))

    def log_density(self, target: Target) -> float:
        if not isinstance(target, RealVector):
            raise FamilyError("normal predictions require real-vector targets")
        if target.dim != self.dim:
            raise DimensionError(f"target dimension {target.dim} != prediction dimension {self.dim}")
        if np.any(self.var == 0):
            # Point-mass coordinates carry no Lebesgue density.
            return math.inf if np.allclose(target.values, self.mean) else -math.inf
        z = (target.values - self.mean) ** 2 / self.var
        return float(-0.5 * (np.sum(z) + np.sum(np.log(2.0 * math.pi * self.var))))

    def __eq__(self, other):
        return (
            isinstance(other, DiagNormal)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.var, other.var)
        )

    def __repr__(self):
        return f"DiagNormal(mean={self.mean.tolist()}, var={self.var.tolist()})"


class Laplace(Prediction):
    """Univariate Laplace distribution with strictly positive scale."""

    family = "laplace"
    __slots__ = ("loc", "scale")

    def __init__(self, loc: float, scale: float):
        loc = float(loc)
        scale = float(scale)
        if not (math.isfinite(loc) and math.isfinite(scale)):
            raise ParameterError("Laplace parameters must be finite")
        if scale <= 0:
            raise ParameterError("Laplace scale must be strictly positive")
        self.loc = loc
        self.scale = scale

    @property
    def dim(self) -> int:
        return 1

    def sample(self, rng: np.random.Generator) -> RealVector:
        return RealVector([rng.laplace(self.loc, self.scale)])

    def cdf(self, y: float) -> float:
        z = (y - self.loc) / self.scale
        if z < 0:
            return 0.5 * math.exp(z)
        return 1.0 - 0.5 * math.exp(-z)

    def quantile(self, tau: float) -> float:
        tau = _check_tau(tau)
        if tau < 0.5:
            return self.loc + self.scale * math.log(2.0 * tau)
        return self.loc - self.scale * math.log(2.0 * (1.0 - tau))

    def log_density(self, target: Target) -> float:
        if not isinstance(target, RealVector):
            raise FamilyError("Laplace predictions require real-vector targets")
        if target.dim != 1:
            raise DimensionError("Laplace predictions are univariate")
        return -abs(target.values[0] - self.loc) / self.scale - math.log(2.0 * self.scale)

    def __eq__(self, other):
        return isinstance(other, Laplace) and (self.loc, self.scale) == (other.loc, other.scale)

    def __repr__(self):
        return f"Laplace(loc={self.loc}, scale={self.scale})"


class Mixture(Prediction):
    """Finite mixture of predictions from one non-mixture family.

    Zero-weight components are dropped at construction, so stored weights
    are strictly positive.
    """

    family = "mixture"
    __slots__ = ("weights", "components")

    def __init__(self, weights, components):
        weights = _validated_simplex(weights, "mixture weights")
        components = tuple(components)
        if len(components) != weights.shape[0]:
            raise ParameterError("number of weights must match number of components")
        if len(components) == 0:
            raise ParameterError("mixtures need at least one component")
        if len(components) > MAX_MIXTURE_COMPONENTS:
            raise ParameterError(f"mixtures are capped at {MAX_MIXTURE_COMPONENTS} components")
        keep = weights > 0
        if not np.all(keep):
            components = tuple(c for c, k in zip(components, keep) if k)
            weights = _validated_simplex(weights[keep] / weights[keep].sum(), "mixture weights")
        first = components[0]
        if isinstance(first, Mixture):
            raise FamilyError("mixtures of mixtures are not supported")
        for c in components:
            if not isinstance(c, type(first)):
                raise FamilyError("mixture components must share one family")
            if _pred_dim(c) != _pred_dim(first):
                raise DimensionError("mixture components must share one dimension")
        self.weights = weights
        self.components = components

    @property
    def component_family(self) -> str:
        return self.components[0].family

    @property
    def dim(self) -> int:
        return _pred_dim(self.components[0])

    def sample(self, rng: np.random.Generator) -> Target:
        idx = int(rng.choice(len(self.components), p=self.weights))
        return self.components[idx].sample(rng)

    def cdf(self, y: float) -> float:
        if self.dim != 1:
            raise DimensionError("cdf requires a univariate mixture")
        return float(sum(w * c.cdf(y) for w, c in zip(self.weights, self.components)))

    def quantile(self, tau: float) -> float:
        tau = _check_tau(tau)
        if self.dim != 1:
            raise DimensionError("quantile requires a univariate mixture")
        los = [c.quantile(tau) for c in self.components]
        lo, hi = min(los), max(los)
        if lo == hi:
            return lo
        return float(optimize.brentq(lambda y: self.cdf(y) - tau, lo, hi, xtol=1e-12))

    def log_density(self, target: Target) -> float:
        terms = [math.log(w) + c.log_density(target) for w, c in zip(self.weights, self.components)]
        return float(logsumexp(terms))

    def __eq__(self, other):
        return (
            isinstance(other, Mixture)
            and np.array_equal(self.weights, other.weights)
            and self.components == other.components
        )

    def __repr__(self):
        return f"Mixture(weights={self.weights.tolist()}, components={list(self.components)})"


class TruncatedCountable(Prediction):
    """Distribution over counts {0, ..., K} with a declared tail mass.

    The library never auto-truncates: the caller supplies the truncated
    probabilities and the mass assigned beyond the cutoff.
    """

    family = "truncated_countable"
    __slots__ = ("probs", "tail_mass")

    def __init__(self, probs, tail_mass: float = 0.0):
        arr = np.asarray(probs, dtype=np.float64)
        tail_mass = float(tail_mass)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ParameterError("truncated probabilities must be a nonempty vector")
        if not np.all(np.isfinite(arr)) or not math.isfinite(tail_mass):
            raise ParameterError("truncated parameters must be finite")
        if np.any(arr < 0) or tail_mass < 0:
            raise ParameterError("probabilities and tail mass must be nonnegative")
        total = float(arr.sum()) + tail_mass
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ParameterError(f"probs plus tail mass must sum to 1 (got {total!r})")
        if arr.sum() <= 0:
            raise ParameterError("truncated support must carry positive mass")
        arr = arr * ((1.0 - tail_mass) / arr.sum())
        arr.setflags(write=False)
        self.probs = arr
        self.tail_mass = tail_mass

    @property
    def support_size(self) -> int:
        return self.probs.shape[0]

    def sample(self, rng: np.random.Generator) -> Count:
        if self.tail_mass > 0:
            raise FamilyError("cannot sample a truncated distribution with undeclared tail support")
        return Count(int(rng.choice(self.support_size, p=self.probs / self.probs.sum())))

    def cdf(self, y: float) -> float:
        if y < 0:
            return 0.0
        k = min(int(math.floor(y)), self.support_size - 1)
        return float(self.probs[: k + 1].sum())

    def log_density(self, target: Target) -> float:
        if not isinstance(target, Count):
            raise FamilyError("truncated countable predictions require count targets")
        if target.value < self.support_size:
            p = self.probs[target.value]
            return math.log(p) if p > 0 else -math.inf
        if self.tail_mass == 0.0:
            return -math.inf
        raise FamilyError("log mass beyond the truncation point is undetermined (tail mass > 0)")

    def __eq__(self, other):
        return (
            isinstance(other, TruncatedCountable)
            and np.array_equal(self.probs, other.probs)
            and self.tail_mass == other.tail_mass
        )

    def __repr__(self):
        return f"TruncatedCountable({self.probs.tolist()}, tail_mass={self.tail_mass})"


def _pred_dim(p: Prediction) -> int:
    if isinstance(p, Categorical):
        return p.n_classes
    if isinstance(p, TruncatedCountable):
        return p.support_size
    if isinstance(p, (DiagNormal, Laplace, Mixture)):
        return p.dim
    raise FamilyError(f"unknown prediction type {type(p).__name__}")


# ---------------------------------------------------------------------------
# Distances between predictions


def wasserstein2(p: Prediction, q: Prediction) -> float:
    """2-Wasserstein distance in closed form.

    Supported for pairs of diagonal normals of equal dimension (diagonal
    covariances commute) and pairs of Laplace distributions.
    """
    if isinstance(p, DiagNormal) and isinstance(q, DiagNormal):
        if p.dim != q.dim:
            raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")
        sq = np.sum((p.mean - q.mean) ** 2) + np.sum((np.sqrt(p.var) - np.sqrt(q.var)) ** 2)
        return float(math.sqrt(sq))
    if isinstance(p, Laplace) and isinstance(q, Laplace):
        sq = (p.loc - q.loc) ** 2 + 2.0 * (p.scale - q.scale) ** 2
        return math.sqrt(sq)
    raise FamilyError(
        f"wasserstein2 is not defined between {type(p).__name__} and {type(q).__name__}"
    )


def _solve_transport(weights_a: np.ndarray, weights_b: np.ndarray, cost: np.ndarray) -> float:
    """Exact minimum cost of the dense transportation problem."""
    m, n = cost.shape
    # Row and column marginal constraints; the last row is redundant.
    a_eq = np.zeros((m + n - 1, m * n))
    b_eq = np.zeros(m + n - 1)
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
        b_eq[i] = weights_a[i]
    for j in range(n - 1):
        a_eq[m + j, j::n] = 1.0
        b_eq[m + j] = weights_b[j]
    res = optimize.linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:  # pragma: no cover - marginals are always feasible
        raise ParameterError(f"transportation problem failed: {res.message}")
    return float(res.fun)


def mixture_wasserstein(p: Mixture, q: Mixture, s: float = 2.0) -> float:
    """Transport distance between mixtures with ``wasserstein2`` ground cost.

    Solves min over couplings of the component weights of
    sum_ij w_ij d(p_i, q_j)^s, then takes the 1/s power.
    """
    if not isinstance(p, Mixture) or not isinstance(q, Mixture):
        raise FamilyError("mixture_wasserstein requires mixture predictions")
    s = float(s)
    if s < 1.0:
        raise ParameterError(f"transport order must satisfy s >= 1, got {s!r}")
    cost = np.empty((len(p.components), len(q.components)))
    for i, ci in enumerate(p.components):
        for j, cj in enumerate(q.components):
            cost[i, j] = wasserstein2(ci, cj) ** s
    value = _solve_transport(p.weights, q.weights, cost)
    return max(value, 0.0) ** (1.0 / s)


# ---------------------------------------------------------------------------
# Temperature scaling


def temperature_scale(p: Prediction, t: float) -> Prediction:
    """Generalized temperature scaling with temperature ``t`` > 0.

    Categorical probabilities are raised to the power 1/t and renormalized;
    normal variances and Laplace scales are multiplied by t. Means and
    locations are unchanged, so point predictions keep their accuracy.
    """
    t = float(t)
    if not math.isfinite(t) or t <= 0:
        raise ParameterError(f"temperature must be finite and positive, got {t!r}")
    if isinstance(p, Categorical):
        scaled = p.probs ** (1.0 / t)
        return Categorical(scaled / scaled.sum())
    if isinstance(p, DiagNormal):
        return DiagNormal(p.mean, p.var * t)
    if isinstance(p, Laplace):
        return Laplace(p.loc, p.scale * t)
    raise FamilyError(f"temperature scaling has no closed form for family {p.family!r}")
