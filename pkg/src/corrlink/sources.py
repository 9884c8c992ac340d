"""Seeded samplers for every joint law the estimators consume.

Two layers live here. The marginal laws expose tail probabilities, tail
quantiles, and conditional tail moments; every variate in the package is
produced by inverse-CDF transform of open uniforms so that streams are
reproducible across platforms from the seed alone. The joint models combine
marginals into (X, Y) pairs with known ground-truth correlation, and the
crossing helpers at the bottom draw "first sample beyond a threshold" events
either literally (sequential scan) or by an exact distribution-equivalent
shortcut (geometric index plus conditional tail draw) that makes tiny
crossing probabilities affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np
from scipy.stats import binom as _binom

from .errors import ConfigurationError, DomainError
from .linalg import CorrelationMatrix, sym_inv_sqrt, sym_sqrt
from .statmath import (
    _qinv_unchecked,
    inverse_mills,
    qfunc,
    truncated_normal_moments,
)

__all__ = [
    "StdNormal",
    "UnitLaplace",
    "ParetoTwoSided",
    "UnitUniform",
    "Rademacher",
    "GaussianScalar",
    "GaussianYVec",
    "GaussianXVec",
    "AdditiveNoise",
    "DoublySymmetricBinary",
    "BlockAveraged",
    "JointModel",
    "MarginalLaw",
    "substream",
    "normal_from_uniform",
    "SampleStream",
    "sample_stream",
    "true_correlations",
    "x_support_upper",
    "crossing_prob",
    "CrossingBatch",
    "draw_first_crossing",
    "scan_first_crossing",
]

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)

_MIN_UNIFORM = 2.0**-53


def substream(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator number ``index`` derived from a master seed.

    Counter-based keying: the pair (master_seed, index) is the generator key,
    so any worker can construct its stream without coordination and the
    result never depends on scheduling order.
    """
    key = np.array([np.uint64(master_seed & (2**64 - 1)), np.uint64(index & (2**64 - 1))])
    return np.random.Generator(np.random.Philox(key=key))


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    # rng.random can return exactly 0; the quantile transforms need (0, 1).
    return np.where(u == 0.0, _MIN_UNIFORM, u)


def normal_from_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normals by inverse tail transform of open uniforms."""
    return _qinv_unchecked(_open_uniform(rng, size))


# ---------------------------------------------------------------------------
# Marginal laws: zero mean, unit variance.


@dataclass(frozen=True)
class StdNormal:
    """Standard normal marginal."""

    name = "normal"
    support_upper = math.inf

    def tail_prob(self, x):
        return qfunc(x)

    def tail_quantile(self, p):
        return _qinv_unchecked(p)

    def tail_mean(self, t: float) -> float:
        return inverse_mills(t)

    def tail_variance(self, t: float) -> float:
        return truncated_normal_moments(t).variance

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return normal_from_uniform(rng, size)


@dataclass(frozen=True)
class UnitLaplace:
    """Symmetric exponential with unit variance: Pr(X > x) = exp(-sqrt(2) x)/2 for x >= 0."""

    name = "laplace"
    support_upper = math.inf

    def tail_prob(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0.0, 0.5 * np.exp(-_SQRT2 * x), 1.0 - 0.5 * np.exp(_SQRT2 * x))
        return float(out) if out.ndim == 0 else out

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        upper = -np.log(2.0 * p) / _SQRT2
        lower = np.log(2.0 * (1.0 - p)) / _SQRT2
        out = np.where(p <= 0.5, upper, lower)
        return float(out) if out.ndim == 0 else out

    def tail_mean(self, t: float) -> float:
        t = float(t)
        if t >= 0.0:
            # Memoryless beyond the origin.
            return t + 1.0 / _SQRT2
        partial = 0.5 * math.exp(_SQRT2 * t) * (-t + 1.0 / _SQRT2)
        return partial / self.tail_prob(t)

    def tail_variance(self, t: float) -> float:
        t = float(t)
        if t >= 0.0:
            return 0.5
        s = -t
        partial_sq = 1.0 - 0.5 * math.exp(-_SQRT2 * s) * ((s + 1.0 / _SQRT2) ** 2 + 0.5)
        mean = self.tail_mean(t)
        return partial_sq / self.tail_prob(t) - mean * mean

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.tail_quantile(_open_uniform(rng, size))


@dataclass(frozen=True)
class ParetoTwoSided:
    """Symmetric power-law tails Pr(|X| > x) = (x0/x)^alpha, no mass inside (-x0, x0).

    Unit variance forces x0 = sqrt((alpha - 2)/alpha); alpha must exceed 2 for
    the variance to exist at all.
    """

    alpha: float
    name = "pareto"
    support_upper = math.inf

    def __post_init__(self):
        if not self.alpha > 2.0:
            raise ConfigurationError(
                f"two-sided power law needs tail exponent > 2 for unit variance, got {self.alpha!r}"
            )

    @property
    def x0(self) -> float:
        return math.sqrt((self.alpha - 2.0) / self.alpha)

    def tail_prob(self, x):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        x0 = self.x0
        out = np.where(
            x >= x0,
            0.5 * (x0 / np.maximum(x, x0)) ** a,
            np.where(x > -x0, 0.5, 1.0 - 0.5 * (x0 / np.maximum(-x, x0)) ** a),
        )
        return float(out) if out.ndim == 0 else out

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        a = self.alpha
        x0 = self.x0
        upper = x0 * (2.0 * p) ** (-1.0 / a)
        lower = -x0 * (2.0 * (1.0 - p)) ** (-1.0 / a)
        out = np.where(p <= 0.5, upper, lower)
        return float(out) if out.ndim == 0 else out

    def tail_mean(self, t: float) -> float:
        t = float(t)
        a = self.alpha
        x0 = self.x0
        if t >= x0:
            return a * t / (a - 1.0)
        pos_part = a * x0 / (2.0 * (a - 1.0))
        if t > -x0:
            return pos_part / 0.5
        neg_part = -pos_part * (1.0 - (x0 / -t) ** (a - 1.0))
        return (pos_part + neg_part) / self.tail_prob(t)

    def tail_variance(self, t: float) -> float:
        t = float(t)
        a = self.alpha
        x0 = self.x0
        mean = self.tail_mean(t)
        if t >= x0:
            return a * t * t / ((a - 1.0) ** 2 * (a - 2.0))
        if t > -x0:
            second = 1.0
        else:
            second = (1.0 - 0.5 * (x0 / -t) ** (a - 2.0)) / self.tail_prob(t)
        return second - mean * mean

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.tail_quantile(_open_uniform(rng, size))


@dataclass(frozen=True)
class UnitUniform:
    """Uniform on [-sqrt(3), sqrt(3)]."""

    name = "uniform"
    support_upper = _SQRT3

    def tail_prob(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip((_SQRT3 - x) / (2.0 * _SQRT3), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = _SQRT3 * (1.0 - 2.0 * p)
        return float(out) if out.ndim == 0 else out

    def tail_mean(self, t: float) -> float:
        t = float(t)
        if t >= _SQRT3:
            raise DomainError(f"no mass above {t!r} for the bounded uniform law")
        return (max(t, -_SQRT3) + _SQRT3) / 2.0

    def tail_variance(self, t: float) -> float:
        t = float(t)
        if t >= _SQRT3:
            raise DomainError(f"no mass above {t!r} for the bounded uniform law")
        return (_SQRT3 - max(t, -_SQRT3)) ** 2 / 12.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.tail_quantile(_open_uniform(rng, size))


@dataclass(frozen=True)
class Rademacher:
    """Fair signs: +1 or -1 with equal probability."""

    name = "rademacher"
    support_upper = 1.0

    def tail_prob(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 1.0, 0.0, np.where(x >= -1.0, 0.5, 1.0))
        return float(out) if out.ndim == 0 else out

    def tail_quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = np.where(p <= 0.5, 1.0, -1.0)
        return float(out) if out.ndim == 0 else out

    def tail_mean(self, t: float) -> float:
        t = float(t)
        if t >= 1.0:
            raise DomainError(f"no mass above {t!r} for the sign law")
        return 1.0 if t >= -1.0 else 0.0

    def tail_variance(self, t: float) -> float:
        t = float(t)
        if t >= 1.0:
            raise DomainError(f"no mass above {t!r} for the sign law")
        return 0.0 if t >= -1.0 else 1.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.tail_quantile(_open_uniform(rng, size))


MarginalLaw = Union[StdNormal, UnitLaplace, ParetoTwoSided, UnitUniform, Rademacher]


def _check_rho_scalar(rho: float) -> float:
    rho = float(rho)
    if not abs(rho) <= 1.0:
        raise ConfigurationError(f"correlation must lie in [-1, 1], got {rho!r}")
    return rho


# ---------------------------------------------------------------------------
# Joint models.


@dataclass(frozen=True)
class GaussianScalar:
    """Bivariate normal pair with unit marginals and correlation ``rho``."""

    rho: float

    def __post_init__(self):
        object.__setattr__(self, "rho", _check_rho_scalar(self.rho))


@dataclass(frozen=True)
class GaussianYVec:
    """Scalar X against a d-vector Y with per-coordinate correlations ``rho``.

    The Y side has correlation matrix ``sigma_y``; the residual covariance
    sigma_y - rho rho^T must be positive semidefinite for the model to exist.
    """

    rho: np.ndarray = field(repr=True)
    sigma_y: CorrelationMatrix = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        if np.any(np.abs(rho) > 1.0):
            raise ConfigurationError("every correlation entry must lie in [-1, 1]")
        if rho.size != self.sigma_y.dim:
            raise ConfigurationError(
                f"correlation vector length {rho.size} does not match matrix dim {self.sigma_y.dim}"
            )
        resid = self.sigma_y.values - np.outer(rho, rho)
        vals, vecs = np.linalg.eigh(resid)
        if vals[0] < -1e-10:
            raise ConfigurationError(
                f"residual Y covariance not positive semidefinite (eigenvalue {vals[0]:.3e})"
            )
        noise_sqrt = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
        rho.setflags(write=False)
        noise_sqrt.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "_noise_sqrt", noise_sqrt)

    @property
    def dim(self) -> int:
        return self.rho.size


@dataclass(frozen=True)
class GaussianXVec:
    """d-vector X with correlation matrix ``sigma_x`` against a scalar Y.

    Coordinate correlations are ``rho``; the conditional noise variance
    1 - rho sigma_x^{-1} rho^T must be nonnegative.
    """

    rho: np.ndarray = field(repr=True)
    sigma_x: CorrelationMatrix = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        if np.any(np.abs(rho) > 1.0):
            raise ConfigurationError("every correlation entry must lie in [-1, 1]")
        if rho.size != self.sigma_x.dim:
            raise ConfigurationError(
                f"correlation vector length {rho.size} does not match matrix dim {self.sigma_x.dim}"
            )
        w = np.linalg.solve(self.sigma_x.values, rho)
        sigma2 = 1.0 - float(rho @ w)
        if sigma2 < -1e-10:
            raise ConfigurationError(
                f"conditional noise variance {sigma2:.3e} is negative; correlations incompatible"
            )
        sigma2 = max(sigma2, 0.0)
        sqrt_sx = sym_sqrt(self.sigma_x.values)
        inv_sqrt_sx = sym_inv_sqrt(self.sigma_x.values)
        whitened_rho = inv_sqrt_sx @ rho
        for arr in (rho, sqrt_sx, inv_sqrt_sx, whitened_rho):
            arr.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "noise_var", sigma2)
        object.__setattr__(self, "sqrt_sigma_x", sqrt_sx)
        object.__setattr__(self, "inv_sqrt_sigma_x", inv_sqrt_sx)
        object.__setattr__(self, "whitened_rho", whitened_rho)

    @property
    def dim(self) -> int:
        return self.rho.size


@dataclass(frozen=True)
class AdditiveNoise:
    """Y = rho X + sqrt(1 - rho^2) Z with X, Z independent unit-variance laws."""

    rho: float
    x_law: MarginalLaw
    z_law: MarginalLaw

    def __post_init__(self):
        object.__setattr__(self, "rho", _check_rho_scalar(self.rho))


@dataclass(frozen=True)
class DoublySymmetricBinary:
    """Centered fair signs where Y flips the sign of X with probability ``flip_prob``.

    The induced correlation is 1 - 2 flip_prob.
    """

    flip_prob: float

    def __post_init__(self):
        p = float(self.flip_prob)
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"flip probability must lie in [0, 1], got {p!r}")
        object.__setattr__(self, "flip_prob", p)

    @property
    def rho(self) -> float:
        return 1.0 - 2.0 * self.flip_prob


@dataclass(frozen=True)
class BlockAveraged:
    """Each emitted pair is a block of ``m`` inner pairs summed and scaled by 1/sqrt(m).

    Preserves the inner correlation exactly while making the marginals
    approximately normal as ``m`` grows.
    """

    inner: "JointModel"
    m: int

    def __post_init__(self):
        m = int(self.m)
        if m < 1:
            raise ConfigurationError(f"block size must be >= 1, got {self.m!r}")
        if isinstance(self.inner, BlockAveraged):
            raise ConfigurationError("nested block averaging is not supported")
        if isinstance(self.inner, (GaussianYVec, GaussianXVec)):
            raise ConfigurationError("block averaging is defined for scalar pair models only")
        object.__setattr__(self, "m", m)


JointModel = Union[
    GaussianScalar,
    GaussianYVec,
    GaussianXVec,
    AdditiveNoise,
    DoublySymmetricBinary,
    BlockAveraged,
]


def true_correlations(model: JointModel) -> np.ndarray:
    """Ground-truth correlation vector of the model, for error measurement."""
    if isinstance(model, GaussianScalar):
        return np.array([model.rho])
    if isinstance(model, (GaussianYVec, GaussianXVec)):
        return np.array(model.rho, dtype=float)
    if isinstance(model, AdditiveNoise):
        return np.array([model.rho])
    if isinstance(model, DoublySymmetricBinary):
        return np.array([model.rho])
    if isinstance(model, BlockAveraged):
        return true_correlations(model.inner)
    raise ConfigurationError(f"unknown model {model!r}")


def x_support_upper(model: JointModel) -> float:
    """Supremum of the emitted X values (inf when unbounded)."""
    if isinstance(model, (GaussianScalar, GaussianYVec, GaussianXVec)):
        return math.inf
    if isinstance(model, AdditiveNoise):
        return model.x_law.support_upper
    if isinstance(model, DoublySymmetricBinary):
        return 1.0
    if isinstance(model, BlockAveraged):
        inner = x_support_upper(model.inner)
        return inner * math.sqrt(model.m) if math.isfinite(inner) else math.inf
    raise ConfigurationError(f"unknown model {model!r}")


def crossing_prob(model: JointModel, t: float) -> Optional[float]:
    """Pr(X > t) for scalar-X models, or None when no closed form is known."""
    t = float(t)
    if isinstance(model, (GaussianScalar, GaussianYVec)):
        return float(qfunc(t))
    if isinstance(model, AdditiveNoise):
        return float(model.x_law.tail_prob(t))
    if isinstance(model, DoublySymmetricBinary):
        return float(Rademacher().tail_prob(t))
    if isinstance(model, BlockAveraged):
        inner = model.inner
        if isinstance(inner, GaussianScalar):
            # Block averages of normals are exactly standard normal.
            return float(qfunc(t))
        if isinstance(inner, DoublySymmetricBinary):
            m = model.m
            # (2 B - m)/sqrt(m) > t with B the count of +1 signs in the block.
            bmin = math.floor((m + t * math.sqrt(m)) / 2.0) + 1
            if bmin > m:
                return 0.0
            if bmin <= 0:
                return 1.0
            return float(_binom.sf(bmin - 1, m, 0.5))
        return None
    if isinstance(model, GaussianXVec):
        return None
    raise ConfigurationError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Plain i.i.d. streams.


class SampleStream:
    """Infinite deterministic iterator of (x, y) pairs for one model and seed.

    Single consumer. Iteration yields floats for scalar coordinates and 1-D
    arrays for vector ones; ``take`` returns stacked arrays. For the X-vector
    model ``take_whitened`` emits the decorrelated X coordinates instead,
    which is the representation the selection protocol operates on.
    """

    def __init__(self, model: JointModel, seed: int, chunk: int = 8192):
        self.model = model
        self._rng = substream(seed, 0)
        self._chunk = int(chunk)

    def draw_chunk(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``n`` pairs as arrays, shapes (n, ...) per side."""
        return _draw_pairs(self.model, self._rng, int(n))

    def take(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.draw_chunk(n)

    def take_whitened(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``n`` (whitened X vector, scalar Y) pairs; X-vector model only."""
        if not isinstance(self.model, GaussianXVec):
            raise ConfigurationError("whitened draws are defined for the X-vector model only")
        return _draw_xvec_whitened(self.model, self._rng, int(n))

    def __iter__(self) -> Iterator[tuple]:
        while True:
            xs, ys = self.draw_chunk(self._chunk)
            for i in range(xs.shape[0]):
                x = xs[i] if xs.ndim > 1 else float(xs[i])
                y = ys[i] if ys.ndim > 1 else float(ys[i])
                yield x, y


def sample_stream(model: JointModel, seed: int) -> SampleStream:
    """Stream constructor matching the documented (model, seed) interface."""
    return SampleStream(model, seed)


def _draw_pairs(model: JointModel, rng: np.random.Generator, n: int):
    if isinstance(model, GaussianScalar):
        x = normal_from_uniform(rng, n)
        z = normal_from_uniform(rng, n)
        y = model.rho * x + math.sqrt(1.0 - model.rho**2) * z
        return x, y
    if isinstance(model, GaussianYVec):
        x = normal_from_uniform(rng, n)
        z = normal_from_uniform(rng, (n, model.dim))
        y = x[:, None] * model.rho + z @ model._noise_sqrt
        return x, y
    if isinstance(model, GaussianXVec):
        w, y = _draw_xvec_whitened(model, rng, n)
        return w @ model.sqrt_sigma_x, y
    if isinstance(model, AdditiveNoise):
        x = model.x_law.sample(rng, n)
        z = model.z_law.sample(rng, n)
        y = model.rho * x + math.sqrt(1.0 - model.rho**2) * z
        return x, y
    if isinstance(model, DoublySymmetricBinary):
        x = Rademacher().sample(rng, n)
        flips = _open_uniform(rng, n) < model.flip_prob
        y = np.where(flips, -x, x)
        return x, y
    if isinstance(model, BlockAveraged):
        xi, yi = _draw_pairs(model.inner, rng, n * model.m)
        scale = 1.0 / math.sqrt(model.m)
        x = xi.reshape(n, model.m).sum(axis=1) * scale
        y = yi.reshape(n, model.m).sum(axis=1) * scale
        return x, y
    raise ConfigurationError(f"unknown model {model!r}")


def _draw_xvec_whitened(model: GaussianXVec, rng: np.random.Generator, n: int):
    w = normal_from_uniform(rng, (n, model.dim))
    y = w @ model.whitened_rho + math.sqrt(model.noise_var) * normal_from_uniform(rng, n)
    return w, y


# ---------------------------------------------------------------------------
# First-crossing draws.


@dataclass(frozen=True)
class CrossingBatch:
    """Per-trial first-crossing results: index, crossing X, paired Y, cap flags.

    Indices are 1-based and stored as floats: their magnitudes can exceed the
    exact-integer range long before the statistics degrade, and they enter
    the estimators only through sample accounting.
    """

    index: np.ndarray
    x: np.ndarray
    y: np.ndarray
    capped: np.ndarray


def _geometric_index(p: float, rng: np.random.Generator, n: int) -> np.ndarray:
    if p >= 1.0:
        return np.ones(n)
    u = _open_uniform(rng, n)
    # First-success index: ceil(ln u / ln(1 - p)), always >= 1.
    j = np.ceil(np.log(u) / math.log1p(-p))
    return np.maximum(j, 1.0)


def _conditional_tail_x(model: JointModel, t: float, rng: np.random.Generator, n: int):
    """Draw X | X > t for scalar-crossing models with known tail structure."""
    u = _open_uniform(rng, n)
    if isinstance(model, (GaussianScalar, GaussianYVec)):
        return _qinv_unchecked(u * qfunc(t))
    if isinstance(model, AdditiveNoise):
        return model.x_law.tail_quantile(u * model.x_law.tail_prob(t))
    if isinstance(model, DoublySymmetricBinary):
        law = Rademacher()
        return law.tail_quantile(u * law.tail_prob(t))
    if isinstance(model, BlockAveraged):
        inner = model.inner
        if isinstance(inner, GaussianScalar):
            return _qinv_unchecked(u * qfunc(t))
        if isinstance(inner, DoublySymmetricBinary):
            m = model.m
            bmin = math.floor((m + t * math.sqrt(m)) / 2.0) + 1
            counts = np.arange(bmin, m + 1)
            weights = _binom.pmf(counts, m, 0.5)
            cum = np.cumsum(weights)
            cum /= cum[-1]
            b = counts[np.searchsorted(cum, u, side="left")]
            return (2.0 * b - m) / math.sqrt(m)
    raise ConfigurationError(f"no conditional tail draw for model {model!r}")


def _y_given_x(model: JointModel, x: np.ndarray, rng: np.random.Generator):
    n = x.shape[0]
    if isinstance(model, GaussianScalar):
        z = normal_from_uniform(rng, n)
        return model.rho * x + math.sqrt(1.0 - model.rho**2) * z
    if isinstance(model, GaussianYVec):
        z = normal_from_uniform(rng, (n, model.dim))
        return x[:, None] * model.rho + z @ model._noise_sqrt
    if isinstance(model, AdditiveNoise):
        z = model.z_law.sample(rng, n)
        return model.rho * x + math.sqrt(1.0 - model.rho**2) * z
    if isinstance(model, DoublySymmetricBinary):
        flips = _open_uniform(rng, n) < model.flip_prob
        return np.where(flips, -x, x)
    if isinstance(model, BlockAveraged):
        inner = model.inner
        m = model.m
        sq = math.sqrt(m)
        if isinstance(inner, GaussianScalar):
            # The block-average pair is itself bivariate normal with the same rho.
            z = normal_from_uniform(rng, n)
            return inner.rho * x + math.sqrt(1.0 - inner.rho**2) * z
        if isinstance(inner, DoublySymmetricBinary):
            b = np.rint((x * sq + m) / 2.0).astype(np.int64)
            pf = inner.flip_prob
            lost = rng.binomial(b, pf)
            gained = rng.binomial(m - b, pf)
            return (2.0 * (b - lost + gained) - m) / sq
    raise ConfigurationError(f"no conditional Y draw for model {model!r}")


def draw_first_crossing(
    model: JointModel, t: float, rng: np.random.Generator, size: int
) -> CrossingBatch:
    """Sample (J, X_J, Y_J) for the first X exceeding ``t``, without scanning.

    Uses the exact factorization of the first-crossing event: the index is
    geometric with the crossing probability, independent of the crossing
    value, whose law is X | X > t; Y is then drawn from its conditional given
    X. Identical in distribution to a literal scan (see the matching scan
    function) at any crossing probability, including ones far too small to
    wait out.
    """
    p = crossing_prob(model, t)
    if p is None:
        raise ConfigurationError(
            f"model {model!r} has no closed-form crossing probability; use a literal scan"
        )
    if p <= 0.0:
        raise ConfigurationError(
            f"threshold {t!r} can never be crossed under {model!r} (crossing probability 0)"
        )
    n = int(size)
    index = _geometric_index(p, rng, n)
    x = _conditional_tail_x(model, t, rng, n)
    y = _y_given_x(model, x, rng)
    return CrossingBatch(index=index, x=x, y=y, capped=np.zeros(n, dtype=bool))


def scan_first_crossing(
    model: JointModel,
    t: float,
    rng: np.random.Generator,
    size: int,
    cap: int,
    chunk: int = 4096,
) -> CrossingBatch:
    """Literal sequential search for the first X > t, one trial at a time.

    Intended for moderate crossing probabilities: validation against
    draw_first_crossing, and models without a closed-form crossing
    probability. Trials that scan past ``cap`` samples are flagged in
    ``capped`` with NaN payloads rather than raising, so batch callers can
    count them.
    """
    n = int(size)
    cap = int(cap)
    y_probe = _draw_pairs(model, rng, 1)[1]
    ydim = y_probe.shape[1] if y_probe.ndim > 1 else 0
    index = np.empty(n)
    xs = np.empty(n)
    ys = np.empty((n, ydim)) if ydim else np.empty(n)
    capped = np.zeros(n, dtype=bool)
    for i in range(n):
        seen = 0
        found = False
        while seen < cap:
            take = min(chunk, cap - seen)
            xc, yc = _draw_pairs(model, rng, take)
            hits = np.nonzero(xc > t)[0]
            if hits.size:
                h = int(hits[0])
                index[i] = seen + h + 1
                xs[i] = xc[h]
                ys[i] = yc[h]
                found = True
                break
            seen += take
        if not found:
            index[i] = cap
            xs[i] = math.nan
            if ydim:
                ys[i] = math.nan
            else:
                ys[i] = math.nan
            capped[i] = True
    return CrossingBatch(index=index, x=xs, y=ys, capped=capped)
