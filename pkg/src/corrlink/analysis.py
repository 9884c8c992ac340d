"""Closed-form theory: variances, Fisher information, lower bounds, benchmarks.

Every function here is a pure closed-form (or quadrature-backed) expression;
nothing samples. Asymptotic formulas drop their vanishing correction terms
and are labeled asymptotic; exact formulas are exact for every finite
parameter value. The Monte Carlo layer compares against these, never the
other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError
from .linalg import CorrelationMatrix, invert
from .protocol import allocate_bits_pareto, allocate_bits_xvec
from .sources import GaussianXVec, MarginalLaw, UnitLaplace
from .statmath import (
    geometric_entropy_inv,
    inverse_mills,
    max_normal_moments,
    phi,
    qfunc,
    qfunc_inv,
    truncated_normal_moments,
)

__all__ = [
    "TheoryReport",
    "zhang_berger_variance",
    "zhang_berger_optimal",
    "fisher_scalar_given_x",
    "fisher_threshold",
    "fisher_max",
    "exact_threshold_variance",
    "exact_max_variance",
    "threshold_for_budget",
    "fisher_yvec",
    "crlb_yvec",
    "yvec_sum_mse",
    "fisher_xvec",
    "crlb_xvec",
    "stopping_second_moment",
    "stopping_moment_bracket",
    "quantization_loss_bound",
    "xvec_mse_bound",
    "unquantized_xvec_trace_bound",
    "additive_exact_variance",
    "laplace_theory",
    "pareto_theory",
    "pareto_unquantized_floor",
    "binary_example_theory",
    "linear_baseline_trace",
    "build_report",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class TheoryReport:
    """Closed-form summary for one scheme at one parameter point."""

    scheme: str
    k: float
    exact_variance: Optional[float]
    asymptotic_variance: float
    fisher: np.ndarray
    crlb_trace: float
    bounds: list = field(default_factory=list)

    def __post_init__(self):
        if self.exact_variance is not None and self.crlb_trace > 0.0:
            # Allow a hair of quadrature slack in the unbiased-estimator ordering.
            if self.exact_variance < self.crlb_trace * (1.0 - 1e-9):
                raise ConfigurationError(
                    f"exact variance {self.exact_variance} fell below the lower "
                    f"bound trace {self.crlb_trace}; the formulas disagree"
                )
        if not self.asymptotic_variance >= 0.0:
            raise ConfigurationError("asymptotic variance must be nonnegative")


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise DomainError(f"correlation must lie strictly inside (-1, 1), got {rho!r}")
    return rho


# ---------------------------------------------------------------------------
# Scalar benchmark and scalar schemes.


def zhang_berger_variance(rho: float, k: float, rate: float) -> float:
    """Random-coding benchmark variance at a given per-sample rate (vanishing term dropped)."""
    rho = float(rho)
    if not rate > 0.0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    return (rate / k) * (1.0 + rho * rho + (1.0 - rho * rho) / (2.0 ** (2.0 * rate) - 1.0))


def zhang_berger_optimal(rho: float, k: float) -> float:
    """Zero-rate limit of the random-coding benchmark: (1 - rho^2)/(2 k ln 2)."""
    rho = float(rho)
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    return (1.0 - rho * rho) / (2.0 * k * _LN2)


def fisher_scalar_given_x(rho: float, x: float) -> float:
    """Information about the correlation carried by Y when X is pinned at x."""
    rho = _check_rho(rho)
    one = 1.0 - rho * rho
    return (one * x * x + 2.0 * rho * rho) / (one * one)


def fisher_threshold(rho: float, t: float) -> float:
    """Information in (J, Y_J) for the first-crossing scheme at threshold t."""
    rho = _check_rho(rho)
    s = inverse_mills(t)
    second = 1.0 + t * s
    one = 1.0 - rho * rho
    return (one * second + 2.0 * rho * rho) / (one * one)


def fisher_max(rho: float, k: int) -> float:
    """Information in (J, Y_J) for the largest-of-2^k scheme."""
    rho = _check_rho(rho)
    second = max_normal_moments(2.0 ** int(k)).second_moment
    one = 1.0 - rho * rho
    return (one * second + 2.0 * rho * rho) / (one * one)


def threshold_for_budget(k: float) -> float:
    """Crossing threshold whose index entropy equals the bit budget."""
    return qfunc_inv(geometric_entropy_inv(k))


def exact_threshold_variance(rho: float, t: float) -> float:
    """Exact variance of the first-crossing estimator at threshold t."""
    rho = _check_rho(rho)
    s = inverse_mills(t)
    return (1.0 - rho * rho * (s - t) * s) / (s * s)


def exact_max_variance(rho: float, k: int) -> float:
    """Exact variance of the largest-of-2^k estimator."""
    rho = _check_rho(rho)
    mm = max_normal_moments(2.0 ** int(k))
    return (rho * rho * mm.variance + 1.0 - rho * rho) / (mm.mean * mm.mean)


# ---------------------------------------------------------------------------
# Y-vector scheme.


def _yvec_noise(rho: np.ndarray, sigma_y: np.ndarray) -> np.ndarray:
    noise = sigma_y - np.outer(rho, rho)
    eigmin = float(np.linalg.eigvalsh(noise).min())
    if eigmin <= 0.0:
        raise DomainError(
            f"conditional noise covariance must be positive definite (smallest eigenvalue {eigmin:.3e})"
        )
    return noise


def fisher_yvec(rho: np.ndarray, sigma_y: np.ndarray, exj2: float) -> np.ndarray:
    """Fisher matrix for the shared-index vector scheme given E[X_J^2]."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    sigma_y = np.asarray(sigma_y, dtype=float)
    noise = _yvec_noise(rho, sigma_y)
    noise_inv = invert(noise)
    nr = noise_inv @ rho
    return noise_inv * (float(exj2) + float(rho @ nr)) + np.outer(nr, nr)


def crlb_yvec(rho: np.ndarray, sigma_y: np.ndarray, exj2: float) -> np.ndarray:
    """Closed-form inverse of the vector Fisher matrix (rank-one update identity)."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    sigma_y = np.asarray(sigma_y, dtype=float)
    noise = _yvec_noise(rho, sigma_y)
    nr = np.linalg.solve(noise, rho)
    quad = float(rho @ nr)
    c = float(exj2) + quad
    return (noise - np.outer(rho, rho) / (float(exj2) + 2.0 * quad)) / c


def yvec_sum_mse(rho: np.ndarray, t: float) -> float:
    """Exact summed coordinate variance of the shared-index vector estimator.

    Each coordinate behaves like the scalar scheme at its own correlation, so
    the sum does not depend on the off-diagonal structure of Bob's covariance.
    """
    rho = np.asarray(rho, dtype=float).reshape(-1)
    return float(sum(exact_threshold_variance(r, t) for r in rho))


# ---------------------------------------------------------------------------
# X-vector scheme.


def stopping_second_moment(a: float, b: float, d: int) -> float:
    """Exact diagonal value of E[W W^T] for the stopping-set selection matrix.

    One coordinate per column is two-sided tail-conditioned beyond ``a``
    (second moment 1 + a*s(a)), the rest are truncated inside (-b, b); all
    cross terms vanish by sign symmetry, so E[W W^T] is this multiple of the
    identity.
    """
    if d < 1:
        raise DomainError(f"dimension must be at least 1, got {d!r}")
    strong = 1.0 + a * inverse_mills(a)
    if d == 1:
        return strong
    if b <= 0.0:
        raise DomainError("weak band must have positive width when d > 1")
    body = 1.0 - 2.0 * qfunc(b)
    weak = 1.0 - 2.0 * b * phi(b) / body
    return strong + (d - 1) * weak


def stopping_moment_bracket(a: float, b: float, d: int) -> tuple[float, float]:
    """Two-sided bracket for the inverse second moment of a selection row."""
    if not a > (d - 1) * b:
        raise DomainError(
            f"strong bound {a!r} must exceed (d-1) times the weak bound for the bracket to hold"
        )
    lower = 1.0 / (a * a + d + 1.0)
    upper = 1.0 / (a - (d - 1) * b) ** 2
    return lower, upper


def fisher_xvec(rho: np.ndarray, sigma_x: np.ndarray, alpha: float, sigma2: float,
                d: int) -> np.ndarray:
    """Fisher matrix for the stopping-set scheme with row second moment alpha."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    sigma_x = np.asarray(sigma_x, dtype=float)
    if rho.shape[0] != d or sigma_x.shape != (d, d):
        raise ConfigurationError("dimension argument disagrees with the vector inputs")
    if not sigma2 > 0.0:
        raise DomainError(f"conditional noise variance must be positive, got {sigma2!r}")
    sx_inv = invert(sigma_x)
    sr = sx_inv @ rho
    return (alpha / sigma2) * sx_inv + (2.0 * d / sigma2**2) * np.outer(sr, sr)


def crlb_xvec(rho: np.ndarray, sigma_x: np.ndarray, alpha: float, sigma2: float,
              d: int) -> np.ndarray:
    """Closed-form inverse of the stopping-set Fisher matrix."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    sigma_x = np.asarray(sigma_x, dtype=float)
    if not sigma2 > 0.0:
        raise DomainError(f"conditional noise variance must be positive, got {sigma2!r}")
    denom = alpha * sigma2 + 2.0 * d * (1.0 - sigma2)
    return (sigma2 / alpha) * (sigma_x - (2.0 * d / denom) * np.outer(rho, rho))


def quantization_loss_bound(a: float, k_q: float, d: int) -> float:
    """Additive mean-squared-error penalty bound for midpoint matrix quantization."""
    if d < 1:
        raise DomainError(f"dimension must be at least 1, got {d!r}")
    return (2.0 * d) ** 6 * (math.exp(-a * a / 2.0) + 2.0 ** (-k_q))


def xvec_mse_bound(rho: np.ndarray, d: int, k: float) -> float:
    """Leading-order summed-error bound for the full vector scheme at budget k."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.shape[0] != d:
        raise ConfigurationError("dimension argument disagrees with the correlation vector")
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    worst = float(np.min(1.0 - rho * rho))
    return (d * d / (2.0 * _LN2)) * worst / k


def unquantized_xvec_trace_bound(rho: np.ndarray, d: int, k_l: float) -> float:
    """Leading-order covariance-trace bound for the exact-matrix variant."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    worst = float(np.min(1.0 - rho * rho))
    return (d / (2.0 * _LN2)) * worst / k_l


# ---------------------------------------------------------------------------
# Non-Gaussian additive schemes.


def additive_exact_variance(x_law: MarginalLaw, rho: float, t: float) -> float:
    """Exact variance of the tail-mean-normalized first-crossing estimator."""
    rho = _check_rho(rho)
    mean = float(x_law.tail_mean(t))
    var = float(x_law.tail_variance(t))
    return (rho * rho * var + 1.0 - rho * rho) / (mean * mean)


def laplace_theory(rho: float, k: float) -> float:
    """Asymptotic variance of the first-crossing scheme under double-exponential X."""
    rho = _check_rho(rho)
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    return (2.0 - rho * rho) / (_LN2 * k) ** 2


def pareto_theory(alpha: float, rho: float, k: float) -> tuple[float, float]:
    """Asymptotic error bound and budget exponent for the quantized heavy-tail scheme.

    Returns (bound, exponent) with bound = (1 + rho^2) * 2^(-exponent * k) and
    exponent = (2/alpha) * (alpha - 2)/(alpha - 1).
    """
    rho = float(rho)
    if not alpha > 2.0:
        raise DomainError(f"tail exponent must exceed 2, got {alpha!r}")
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    exponent = (2.0 / alpha) * (alpha - 2.0) / (alpha - 1.0)
    return (1.0 + rho * rho) * 2.0 ** (-exponent * k), exponent


def pareto_unquantized_floor(alpha: float, rho: float) -> float:
    """Variance floor of the unquantized heavy-tail scheme as the budget grows."""
    rho = float(rho)
    if not alpha > 2.0:
        raise DomainError(f"tail exponent must exceed 2, got {alpha!r}")
    return rho * rho / (alpha * (alpha - 2.0))


def binary_example_theory(p: float, k: float) -> tuple[float, float]:
    """Asymptotic variances for flip-probability estimation on doubly symmetric bits.

    Returns (block-averaged scheme variance, plain sign-counting variance);
    their ratio is 1/(2 ln 2) independent of p and k.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"flip probability must lie in [0, 1], got {p!r}")
    if not k > 0.0:
        raise DomainError(f"bit budget must be positive, got {k!r}")
    return p * (1.0 - p) / (2.0 * k * _LN2), p * (1.0 - p) / k


# ---------------------------------------------------------------------------
# Linear-transform baseline.


def linear_baseline_trace(model: GaussianXVec, budgets: tuple[float, float],
                          m_transform: np.ndarray) -> float:
    """Exact covariance trace of the transform-then-threshold baseline estimator."""
    from .estimators import normalize_transform_rows

    if model.dim != 2:
        raise ConfigurationError("the transform baseline is defined for two coordinates")
    mt = normalize_transform_rows(m_transform, model.sigma_x.values)
    alphas = np.clip(mt @ model.rho, -1.0, 1.0)
    inv_mt = np.linalg.inv(mt)
    trace = 0.0
    for i, k in enumerate(budgets):
        t = threshold_for_budget(float(k))
        var_i = exact_threshold_variance(float(alphas[i]), t)
        trace += var_i * float(inv_mt[:, i] @ inv_mt[:, i])
    return trace


# ---------------------------------------------------------------------------
# Report assembly.


def _scalar_report(scheme: str, rho: float, k: float) -> TheoryReport:
    if scheme == "max":
        k_int = int(round(k))
        fisher = fisher_max(rho, k_int)
        exact = exact_max_variance(rho, k_int)
    else:
        t = threshold_for_budget(k)
        fisher = fisher_threshold(rho, t)
        exact = exact_threshold_variance(rho, t)
    return TheoryReport(
        scheme=scheme,
        k=float(k),
        exact_variance=exact,
        asymptotic_variance=zhang_berger_optimal(rho, k),
        fisher=np.array([[fisher]]),
        crlb_trace=1.0 / fisher,
        bounds=[("benchmark-zero-rate", zhang_berger_optimal(rho, k))],
    )


def _yvec_report(rho: np.ndarray, sigma_y: np.ndarray, k: float) -> TheoryReport:
    rho = np.asarray(rho, dtype=float).reshape(-1)
    t = threshold_for_budget(k)
    s = inverse_mills(t)
    exj2 = 1.0 + t * s
    fisher = fisher_yvec(rho, sigma_y, exj2)
    crlb = crlb_yvec(rho, sigma_y, exj2)
    asym = float(np.sum(1.0 - rho * rho)) / (2.0 * k * _LN2)
    return TheoryReport(
        scheme="yvec",
        k=float(k),
        exact_variance=yvec_sum_mse(rho, t),
        asymptotic_variance=asym,
        fisher=fisher,
        crlb_trace=float(np.trace(crlb)),
        bounds=[("per-coordinate-benchmark-sum", asym)],
    )


def _xvec_report(model: GaussianXVec, k: float, b0: float,
                 alpha_empirical: Optional[float] = None) -> TheoryReport:
    d = model.dim
    params = allocate_bits_xvec(k, d, b0)
    alpha_exact = stopping_second_moment(params.a, params.b, d)
    alpha_used = alpha_exact if alpha_empirical is None else float(alpha_empirical)
    sigma2 = max(model.noise_var, 1e-300)
    fisher = fisher_xvec(model.rho, model.sigma_x.values, alpha_used, sigma2, d)
    crlb = crlb_xvec(model.rho, model.sigma_x.values, alpha_used, sigma2, d)
    lower, upper = stopping_moment_bracket(params.a, params.b, d)
    bounds = [
        ("summed-error-budget-bound", xvec_mse_bound(model.rho, d, k)),
        ("inverse-moment-lower", lower),
        ("inverse-moment-upper", upper),
        ("quantization-penalty", quantization_loss_bound(params.a, params.k_q, d)),
        ("row-second-moment", alpha_exact),
    ]
    return TheoryReport(
        scheme="xvec",
        k=float(k),
        exact_variance=None,
        asymptotic_variance=xvec_mse_bound(model.rho, d, k),
        fisher=fisher,
        crlb_trace=float(np.trace(crlb)),
        bounds=bounds,
    )


def build_report(scheme: str, **kwargs) -> TheoryReport:
    """Assemble the theory report for one scheme at one parameter point.

    Accepted keywords depend on the scheme: scalar schemes take ``rho`` and
    ``k``; ``yvec`` takes ``rho`` (vector), ``k`` and optional ``sigma_y``;
    ``xvec`` takes a model or (``rho``, ``sigma_x``) plus ``k``, ``b0`` and
    an optional empirical ``alpha``; additive schemes take their law
    parameters.
    """
    if scheme in ("max", "threshold"):
        return _scalar_report(scheme, kwargs["rho"], kwargs["k"])
    if scheme == "yvec":
        rho = np.asarray(kwargs["rho"], dtype=float).reshape(-1)
        sigma_y = kwargs.get("sigma_y")
        if sigma_y is None:
            sigma_y = np.outer(rho, rho) + np.diag(1.0 - rho * rho)
        else:
            sigma_y = np.asarray(sigma_y, dtype=float)
        return _yvec_report(rho, sigma_y, kwargs["k"])
    if scheme in ("xvec", "xvec_exact"):
        model = kwargs.get("model")
        if model is None:
            sigma_x = kwargs.get("sigma_x")
            rho = np.asarray(kwargs["rho"], dtype=float).reshape(-1)
            if sigma_x is None:
                sigma_x = CorrelationMatrix.identity(rho.shape[0])
            elif not isinstance(sigma_x, CorrelationMatrix):
                sigma_x = CorrelationMatrix(np.asarray(sigma_x, dtype=float))
            model = GaussianXVec(rho=rho, sigma_x=sigma_x)
        return _xvec_report(model, kwargs["k"], kwargs.get("b0", 0.3),
                            kwargs.get("alpha"))
    if scheme == "clt":
        rho = kwargs["rho"]
        k = kwargs["k"]
        t = threshold_for_budget(k)
        rep = _scalar_report("threshold", rho, k)
        return TheoryReport(
            scheme="clt",
            k=float(k),
            exact_variance=rep.exact_variance,
            asymptotic_variance=rep.asymptotic_variance,
            fisher=rep.fisher,
            crlb_trace=rep.crlb_trace,
            bounds=[("gaussian-limit-variance", exact_threshold_variance(rho, t))],
        )
    if scheme == "pareto":
        alpha = kwargs["alpha"]
        rho = kwargs["rho"]
        k = kwargs["k"]
        bound, exponent = pareto_theory(alpha, rho, k)
        return TheoryReport(
            scheme="pareto",
            k=float(k),
            exact_variance=None,
            asymptotic_variance=bound,
            fisher=np.array([[math.nan]]),
            crlb_trace=0.0,
            bounds=[("budget-exponent", exponent),
                    ("unquantized-floor", pareto_unquantized_floor(alpha, rho))],
        )
    if scheme == "additive":
        x_law = kwargs.get("x_law", UnitLaplace())
        rho = kwargs["rho"]
        k = kwargs["k"]
        p = geometric_entropy_inv(k)
        t = float(x_law.tail_quantile(p))
        exact = additive_exact_variance(x_law, rho, t)
        bounds = []
        if isinstance(x_law, UnitLaplace):
            bounds.append(("double-exponential-asymptote", laplace_theory(rho, k)))
        return TheoryReport(
            scheme="additive",
            k=float(k),
            exact_variance=exact,
            asymptotic_variance=bounds[0][1] if bounds else exact,
            fisher=np.array([[math.nan]]),
            crlb_trace=0.0,
            bounds=bounds,
        )
    raise ConfigurationError(f"unknown scheme {scheme!r}")
