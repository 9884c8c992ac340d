"""Every correlation estimator, in batch form for sweeps and single-run form.

Batch functions sample many independent trials at once. They draw the
selected samples from the exact conditional laws of the selection events
(geometric index, tail-conditioned values) rather than scanning sample by
sample; the two paths are distribution-identical and the literal scans in
`protocol` stay available for validation. Each batch reports estimates,
per-trial sample consumption, bit costs, and failure flags; nothing is ever
silently dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, TrialFailureError
from .linalg import sym_sqrt
from .protocol import (
    LedgerMode,
    ParetoAllocation,
    StoppingSetParams,
    allocate_bits_pareto,
    allocate_bits_xvec,
    golomb_length_array,
    golomb_parameter,
    quantize_correlation_entries,
)
from .sources import (
    AdditiveNoise,
    BlockAveraged,
    DoublySymmetricBinary,
    GaussianScalar,
    GaussianXVec,
    GaussianYVec,
    ParetoTwoSided,
    SampleStream,
    _open_uniform,
    crossing_prob,
    draw_first_crossing,
    normal_from_uniform,
    scan_first_crossing,
    substream,
    true_correlations,
    x_support_upper,
)
from .statmath import (
    _qinv_unchecked,
    geometric_entropy,
    geometric_entropy_inv,
    inverse_mills,
    max_normal_moments,
    qfunc,
    qfunc_inv,
)

__all__ = [
    "TrialBatch",
    "EstimateReport",
    "ApproxMLResult",
    "threshold_trials",
    "max_trials",
    "yvec_trials",
    "stopping_matrix_batch",
    "xvec_core_batch",
    "xvec_trials",
    "xvec_unquantized_trials",
    "xvec_paired_batch",
    "clt_trials",
    "pareto_trials",
    "additive_trials",
    "linear_baseline_trials",
    "normalize_transform_rows",
    "estimate_max",
    "estimate_threshold",
    "estimate_yvec",
    "estimate_xvec",
    "estimate_xvec_unquantized",
    "estimate_clt",
    "estimate_pareto_quantized",
    "estimate_additive_threshold",
    "estimate_linear_transform_baseline",
    "approx_ml_estimate",
    "stopping_params_from_body_budget",
]

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class TrialBatch:
    """Vectorized outcome of n independent trials of one scheme."""

    estimates: np.ndarray
    truth: np.ndarray
    bits_expected: float
    bits_realized: Optional[np.ndarray]
    samples: np.ndarray
    failed: np.ndarray

    @property
    def n(self) -> int:
        return self.estimates.shape[0]


@dataclass(frozen=True)
class EstimateReport:
    """One protocol run: the estimate and everything it cost."""

    estimate: np.ndarray
    bits_expected: float
    bits_realized: Optional[int]
    samples_consumed: int
    seed: int


def _threshold_from_budget(k: float) -> tuple[float, float, float]:
    p = geometric_entropy_inv(k)
    t = qfunc_inv(p)
    return t, inverse_mills(t), p


def _realized_for_indices(index: np.ndarray, p: float, mode: LedgerMode):
    if mode is not LedgerMode.REALIZED:
        return None
    return golomb_length_array(index, golomb_parameter(p))


# ---------------------------------------------------------------------------
# Scalar schemes.


def threshold_trials(
    model: GaussianScalar, k: float, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """First-crossing scheme on a unit bivariate normal pair: estimate = Y_J / E[X|X>t]."""
    if not isinstance(model, GaussianScalar):
        raise ConfigurationError("threshold trials need the scalar Gaussian model")
    t, s, p = _threshold_from_budget(k)
    batch = draw_first_crossing(model, t, rng, size)
    est = (batch.y / s)[:, None]
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=geometric_entropy(p),
        bits_realized=_realized_for_indices(batch.index, p, mode),
        samples=batch.index,
        failed=np.zeros(batch.index.shape[0], dtype=bool),
    )


def max_trials(
    model: GaussianScalar, k: int, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """Largest-of-2^k scheme: estimate = Y_J / E[max of 2^k normals].

    The argmax position of an i.i.d. block is uniform and independent of the
    maximum value, so the trial draws (J, X_J) directly from those laws; the
    fixed-length index code costs exactly k bits either way.
    """
    k = int(k)
    if k < 1:
        raise ConfigurationError(f"bit budget must be a positive integer, got {k!r}")
    if not isinstance(model, GaussianScalar):
        raise ConfigurationError("max trials need the scalar Gaussian model")
    n_samples = 2.0**k
    mean_max = max_normal_moments(n_samples).mean
    u = _open_uniform(rng, size)
    # CDF of the block maximum is Phi^n; invert through the upper tail.
    x = _qinv_unchecked(-np.expm1(np.log(u) / n_samples))
    z = normal_from_uniform(rng, size)
    y = model.rho * x + math.sqrt(1.0 - model.rho**2) * z
    est = (y / mean_max)[:, None]
    realized = None
    if mode is LedgerMode.REALIZED:
        realized = np.full(size, k, dtype=np.int64)
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=float(k),
        bits_realized=realized,
        samples=np.full(size, n_samples),
        failed=np.zeros(size, dtype=bool),
    )


def additive_trials(
    model: AdditiveNoise, k: float, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """Threshold scheme for a general additive-noise pair, normalized by the law's tail mean."""
    if not isinstance(model, AdditiveNoise):
        raise ConfigurationError("additive trials need an additive-noise model")
    p = geometric_entropy_inv(k)
    t = float(model.x_law.tail_quantile(p))
    norm = model.x_law.tail_mean(t)
    batch = draw_first_crossing(model, t, rng, size)
    est = (batch.y / norm)[:, None]
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=geometric_entropy(p),
        bits_realized=_realized_for_indices(batch.index, p, mode),
        samples=batch.index,
        failed=np.zeros(batch.index.shape[0], dtype=bool),
    )


def require_crossable_block(model: BlockAveraged, k: float) -> None:
    """Reject block sizes whose bounded support cannot reach the budget's threshold."""
    if not isinstance(model, BlockAveraged):
        raise ConfigurationError("CLT trials need a block-averaged model")
    t, _, _ = _threshold_from_budget(k)
    xsup = x_support_upper(model)
    if math.isfinite(xsup) and t >= xsup:
        inner_sup = x_support_upper(model.inner)
        m_min = math.floor(t * t / (inner_sup * inner_sup)) + 1
        raise ConfigurationError(
            f"block size {model.m} cannot cross threshold {t:.4f} (block support tops out "
            f"at {xsup:.4f}); the smallest workable block size is {m_min}"
        )


def clt_trials(
    model: BlockAveraged, k: float, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
    cap: Optional[int] = None,
) -> TrialBatch:
    """Threshold scheme on block averages, normalized as if the blocks were Gaussian.

    The reported expected bits are the entropy cost of the realized crossing
    probability of the block-average process, which tends to the configured
    budget as the block size grows but differs from it at finite block sizes.
    """
    require_crossable_block(model, k)
    t, s, _ = _threshold_from_budget(k)
    p = crossing_prob(model, t)
    if p is not None:
        if p <= 0.0:
            raise ConfigurationError(
                f"crossing probability is 0 at block size {model.m}; increase the block size"
            )
        batch = draw_first_crossing(model, t, rng, size)
        est = (batch.y / s)[:, None]
        return TrialBatch(
            estimates=est,
            truth=true_correlations(model),
            bits_expected=geometric_entropy(p),
            bits_realized=_realized_for_indices(batch.index, p, mode),
            samples=batch.index,
            failed=np.zeros(batch.index.shape[0], dtype=bool),
        )
    # No closed-form crossing probability: fall back to a literal scan.
    if mode is LedgerMode.REALIZED:
        raise ConfigurationError(
            "realized accounting needs a closed-form crossing probability for the index code"
        )
    if cap is None:
        cap = 4096 * 1024
    batch = scan_first_crossing(model, t, rng, size, cap=cap)
    est = (batch.y / s)[:, None]
    est = np.where(batch.capped[:, None], np.nan, est)
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=math.nan,
        bits_realized=None,
        samples=batch.index,
        failed=batch.capped.copy(),
    )


def pareto_trials(
    model: AdditiveNoise, k: float, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> tuple[TrialBatch, ParetoAllocation]:
    """Quantized-value threshold scheme for power-law X: estimate = Y_J / quantized X_J."""
    if not isinstance(model, AdditiveNoise) or not isinstance(model.x_law, ParetoTwoSided):
        raise ConfigurationError("the quantized heavy-tail scheme needs a power-law X marginal")
    alpha = model.x_law.alpha
    if not alpha > 3.0:
        raise ConfigurationError(
            f"the quantized scheme's error analysis needs tail exponent > 3, got {alpha!r}"
        )
    alloc = allocate_bits_pareto(k, alpha)
    p = geometric_entropy_inv(alloc.k_l)
    batch = draw_first_crossing(model, alloc.t, rng, size)
    cells = max(1, int(math.floor(2.0**alloc.k_q)))
    step = (alloc.u - alloc.t) / cells
    idx = np.clip(np.floor((batch.x - alloc.t) / step), 0, cells - 1)
    xhat = np.where(batch.x > alloc.u, alloc.u, alloc.t + (idx + 0.5) * step)
    est = (batch.y / xhat)[:, None]
    realized = None
    if mode is LedgerMode.REALIZED:
        payload = int(math.ceil(math.log2(cells))) if cells > 1 else 0
        realized = golomb_length_array(batch.index, golomb_parameter(p)) + payload
    return (
        TrialBatch(
            estimates=est,
            truth=true_correlations(model),
            bits_expected=geometric_entropy(p) + alloc.k_q,
            bits_realized=realized,
            samples=batch.index,
            failed=np.zeros(batch.index.shape[0], dtype=bool),
        ),
        alloc,
    )


# ---------------------------------------------------------------------------
# Vector schemes.


def yvec_trials(
    model: GaussianYVec, k: float, rng: np.random.Generator, size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """One shared crossing index, all of Bob's coordinates read at it."""
    if not isinstance(model, GaussianYVec):
        raise ConfigurationError("Y-vector trials need the Y-vector Gaussian model")
    t, s, p = _threshold_from_budget(k)
    batch = draw_first_crossing(model, t, rng, size)
    est = batch.y / s
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=geometric_entropy(p),
        bits_realized=_realized_for_indices(batch.index, p, mode),
        samples=batch.index,
        failed=np.zeros(batch.index.shape[0], dtype=bool),
    )


def stopping_params_from_body_budget(k_l: float, d: int, b0: float) -> StoppingSetParams:
    """Stopping-set geometry from a per-index budget alone (no quantization split)."""
    p = geometric_entropy_inv(k_l)
    q_a = p / (2.0 * (1.0 - 2.0 * qfunc(b0)) ** (d - 1))
    if not 0.0 < q_a < 0.5:
        raise ConfigurationError(f"per-index budget {k_l!r} gives no valid strong bound")
    a = qfunc_inv(q_a)
    return StoppingSetParams(a=a, b=b0, d=d, k_l=k_l, k_q=0.0)


def stopping_matrix_batch(
    d: int, a: float, b: float, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` selection matrices and their index gaps directly.

    Column l of each matrix is the l-th selected whitened vector: coordinate
    l two-sided tail-conditioned beyond ``a``, the others truncated inside
    (-b, b). Gaps between consecutive selections are geometric with the
    stopping-set crossing probability. Returns (W with shape (size, d, d),
    gaps with shape (size, d)).
    """
    p = 2.0 * float(qfunc(a)) * (1.0 - 2.0 * float(qfunc(b))) ** (d - 1)
    if not 0.0 < p < 1.0:
        raise ConfigurationError(f"stopping-set crossing probability {p!r} outside (0, 1)")
    q_a = float(qfunc(a))
    q_b = float(qfunc(b))
    w = np.empty((size, d, d))
    # Strong diagonal: random sign, magnitude conditioned beyond a.
    signs = np.where(_open_uniform(rng, (size, d)) < 0.5, -1.0, 1.0)
    mags = _qinv_unchecked(_open_uniform(rng, (size, d)) * q_a)
    # Weak off-diagonals: normal truncated to (-b, b) via its probability band.
    if d > 1:
        u_off = _open_uniform(rng, (size, d, d))
        band = q_b + u_off * (1.0 - 2.0 * q_b)
        off = _qinv_unchecked(band)
    for ell in range(d):
        if d > 1:
            w[:, :, ell] = off[:, :, ell]
        w[:, ell, ell] = signs[:, ell] * mags[:, ell]
    u_gap = _open_uniform(rng, (size, d))
    gaps = np.maximum(np.ceil(np.log(u_gap) / math.log1p(-p)), 1.0)
    return w, gaps


def _quantize_W_batch(w: np.ndarray, params: StoppingSetParams) -> np.ndarray:
    """Vectorized midpoint quantization of a stack of selection matrices."""
    if params.k_q > 52:
        return w.copy()
    cells = int(math.floor(2.0**params.k_q))
    cells -= cells % 2
    cells = max(cells, 2)
    half = cells // 2
    a = params.a
    c = _SQRT3 * a
    d = params.d
    step_diag = (c - a) / half
    out = np.empty_like(w)
    eye = np.eye(d, dtype=bool)
    diag_vals = w[:, eye]
    mag = np.abs(diag_vals)
    idx = np.clip(np.floor((mag - a) / step_diag), 0, half - 1)
    out[:, eye] = np.sign(diag_vals) * (a + (idx + 0.5) * step_diag)
    if d > 1:
        if params.b > 0.0:
            step_off = 2.0 * params.b / cells
            vals = np.clip(w[:, ~eye], -params.b, params.b)
            oidx = np.clip(np.floor((vals + params.b) / step_off), 0, cells - 1)
            out[:, ~eye] = -params.b + (oidx + 0.5) * step_off
        else:
            out[:, ~eye] = 0.0
    return out


def _batch_inverse(w: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(w)
    # One refinement step per matrix; keeps solver bias below Monte Carlo noise.
    eye = np.eye(w.shape[-1])
    resid = eye[None, :, :] - np.einsum("nij,njk->nik", w, inv)
    return inv + np.einsum("nij,njk->nik", inv, resid)


def xvec_core_batch(
    model: GaussianXVec,
    params: StoppingSetParams,
    rng: np.random.Generator,
    size: int,
    quantize: bool,
    mode: LedgerMode = LedgerMode.EXPECTED,
    charge_sigma: bool = False,
) -> TrialBatch:
    """Stopping-set selection, optional matrix quantization, and reconstruction."""
    d = model.dim
    if params.d != d:
        raise ConfigurationError(f"params dimension {params.d} does not match model {d}")
    w, gaps = stopping_matrix_batch(d, params.a, params.b, rng, size)
    sigma = math.sqrt(model.noise_var)
    z = normal_from_uniform(rng, (size, d))
    y = np.einsum("j,njl->nl", model.whitened_rho, w) + sigma * z
    w_used = _quantize_W_batch(w, params) if quantize else w
    # Deterministic screen: diagonal dominance gives a positive lower bound on
    # the smallest singular value for every valid parameter set.
    absw = np.abs(w_used)
    diag = np.einsum("nii->ni", absw)
    row_off = absw.sum(axis=2) - diag
    col_off = absw.sum(axis=1) - diag
    bound = (diag - 0.5 * (row_off + col_off)).min(axis=1)
    failed = ~(bound > 0.0)
    safe_w = np.where(failed[:, None, None], np.eye(d)[None, :, :], w_used)
    w_inv = _batch_inverse(safe_w)
    recon = model.sqrt_sigma_x
    bits_expected = d * geometric_entropy(params.crossing_prob)
    realized = None
    if mode is LedgerMode.REALIZED:
        m_code = golomb_parameter(params.crossing_prob)
        realized = golomb_length_array(gaps.reshape(-1), m_code).reshape(size, d).sum(axis=1)
    if quantize:
        bits_expected += d * d * params.k_q
        if mode is LedgerMode.REALIZED:
            cells = max(2, int(math.floor(2.0**params.k_q)) - int(math.floor(2.0**params.k_q)) % 2)
            realized = realized + int(math.ceil(d * d * math.log2(cells)))
    if charge_sigma:
        total_budget = d * params.k_l + d * d * params.k_q
        q_sigma, sig_bits, sig_realized = quantize_correlation_entries(
            model.sigma_x.values, total_budget
        )
        recon = sym_sqrt(q_sigma)
        bits_expected += sig_bits
        if mode is LedgerMode.REALIZED:
            realized = realized + sig_realized
    est = np.einsum("nl,nlk,km->nm", y, w_inv, recon)
    est = np.where(failed[:, None], np.nan, est)
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=bits_expected,
        bits_realized=realized,
        samples=gaps.sum(axis=1),
        failed=failed,
    )


def xvec_trials(
    model: GaussianXVec, k: float, rng: np.random.Generator, size: int,
    b0: float = 0.3,
    mode: LedgerMode = LedgerMode.EXPECTED,
    charge_sigma: bool = False,
) -> TrialBatch:
    """Full vector-X scheme under a total budget: allocation, selection, quantization."""
    params = allocate_bits_xvec(k, model.dim, b0)
    return xvec_core_batch(model, params, rng, size, quantize=True, mode=mode,
                           charge_sigma=charge_sigma)


def xvec_unquantized_trials(
    model: GaussianXVec, k_l: float, rng: np.random.Generator, size: int,
    b0: float = 0.3,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """Diagnostic variant with the exact selection matrix (index bits only)."""
    params = stopping_params_from_body_budget(k_l, model.dim, b0)
    return xvec_core_batch(model, params, rng, size, quantize=False, mode=mode)


def xvec_paired_batch(
    model: GaussianXVec,
    params: StoppingSetParams,
    rng: np.random.Generator,
    size: int,
) -> tuple[TrialBatch, TrialBatch]:
    """Quantized and unquantized reconstructions of the same selection draws.

    Sharing the selection randomness turns the quantization-loss comparison
    into a paired design, which is what the additive loss bound speaks about.
    """
    d = model.dim
    w, gaps = stopping_matrix_batch(d, params.a, params.b, rng, size)
    sigma = math.sqrt(model.noise_var)
    z = normal_from_uniform(rng, (size, d))
    y = np.einsum("j,njl->nl", model.whitened_rho, w) + sigma * z
    recon = model.sqrt_sigma_x
    truth = true_correlations(model)
    results = []
    for w_used, extra_bits in ((_quantize_W_batch(w, params), d * d * params.k_q), (w, 0.0)):
        w_inv = _batch_inverse(w_used)
        est = np.einsum("nl,nlk,km->nm", y, w_inv, recon)
        results.append(
            TrialBatch(
                estimates=est,
                truth=truth,
                bits_expected=d * geometric_entropy(params.crossing_prob) + extra_bits,
                bits_realized=None,
                samples=gaps.sum(axis=1),
                failed=np.zeros(size, dtype=bool),
            )
        )
    return results[0], results[1]


# ---------------------------------------------------------------------------
# Linear-transform baseline.


def normalize_transform_rows(m: np.ndarray, sigma_x: np.ndarray) -> np.ndarray:
    """Rescale each row of a mixing matrix so the transformed coordinates have unit variance."""
    m = np.asarray(m, dtype=float)
    row_vars = np.einsum("ij,jk,ik->i", m, sigma_x, m)
    if np.any(row_vars <= 0.0):
        raise ConfigurationError("transform rows must have positive variance")
    return m / np.sqrt(row_vars)[:, None]


def linear_baseline_trials(
    model: GaussianXVec,
    budgets: tuple[float, float],
    m_transform: np.ndarray,
    rng: np.random.Generator,
    size: int,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> TrialBatch:
    """Two scalar threshold runs on linearly transformed coordinates, then invert.

    Each transformed coordinate is a unit-variance Gaussian whose correlation
    with Y is the transformed correlation vector; the two runs use fresh
    independent samples and the estimates map back through the inverse
    transform.
    """
    if model.dim != 2:
        raise ConfigurationError("the transform baseline is defined for two coordinates")
    mt = normalize_transform_rows(m_transform, model.sigma_x.values)
    det = float(np.linalg.det(mt))
    if abs(det) < 1e-12:
        raise ConfigurationError("transform matrix is singular after row normalization")
    alphas = np.clip(mt @ model.rho, -1.0, 1.0)
    inv_mt = np.linalg.inv(mt)
    k1, k2 = budgets
    cols = []
    samples = np.zeros(size)
    bits_expected = 0.0
    realized = np.zeros(size, dtype=np.int64) if mode is LedgerMode.REALIZED else None
    for alpha, k in zip(alphas, (float(k1), float(k2))):
        t, s, p = _threshold_from_budget(k)
        channel = GaussianScalar(rho=float(alpha))
        batch = draw_first_crossing(channel, t, rng, size)
        cols.append(batch.y / s)
        samples += batch.index
        bits_expected += geometric_entropy(p)
        if realized is not None:
            realized = realized + golomb_length_array(batch.index, golomb_parameter(p))
    alpha_hat = np.stack(cols, axis=1)
    est = alpha_hat @ inv_mt.T
    return TrialBatch(
        estimates=est,
        truth=true_correlations(model),
        bits_expected=bits_expected,
        bits_realized=realized,
        samples=samples,
        failed=np.zeros(size, dtype=bool),
    )


# ---------------------------------------------------------------------------
# Approximate maximum-likelihood diagnostic.


class ApproxMLResult(NamedTuple):
    estimate: np.ndarray
    coefficient: float
    residual: float
    ambiguous: bool


def approx_ml_estimate(x_j: float, y_j: np.ndarray, sigma_y: np.ndarray) -> ApproxMLResult:
    """Solve the likelihood cubic for the scale applied to the selected Y.

    The admissible coefficient is the real root nearest 1/x_j; when another
    real root sits within twice that distance the choice is flagged
    ambiguous. This is a diagnostic estimator: its output is never
    transmitted, so no bits are charged.
    """
    x = float(x_j)
    if x == 0.0:
        raise DomainError("the selected X value must be nonzero")
    y = np.asarray(y_j, dtype=float).reshape(-1)
    sig = np.asarray(sigma_y, dtype=float)
    if sig.ndim == 0:
        v = float(y @ y / sig)
    else:
        v = float(y @ np.linalg.solve(sig, y))
    coeffs = np.array([v, -v * x, x * x - 1.0 + v, -x])
    roots = np.roots(coeffs)
    scale = max(abs(x), 1.0)
    real = roots[np.abs(roots.imag) < 1e-9 * scale].real
    if real.size == 0:
        raise DomainError("the likelihood cubic has no real root for these inputs")
    dist = np.abs(real - 1.0 / x)
    order = np.argsort(dist)
    c = float(real[order[0]])
    ambiguous = real.size > 1 and dist[order[1]] < 2.0 * dist[order[0]] + 1e-12
    residual = float(abs(((v * c - v * x) * c + x * x - 1.0 + v) * c - x))
    return ApproxMLResult(estimate=c * y, coefficient=c, residual=residual, ambiguous=ambiguous)


# ---------------------------------------------------------------------------
# Single-run wrappers.


def _single(batch_fn, seed: int, *args, **kwargs) -> EstimateReport:
    rng = substream(seed, 0)
    batch = batch_fn(*args, rng=rng, size=1, **kwargs)
    if isinstance(batch, tuple):
        batch = batch[0]
    if bool(batch.failed[0]):
        raise TrialFailureError("the single requested trial failed (degenerate selection)")
    realized = None if batch.bits_realized is None else int(batch.bits_realized[0])
    return EstimateReport(
        estimate=batch.estimates[0],
        bits_expected=float(batch.bits_expected),
        bits_realized=realized,
        samples_consumed=int(batch.samples[0]),
        seed=seed,
    )


def estimate_max(model: GaussianScalar, k: int, seed: int,
                 mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(max_trials, seed, model, k, mode=mode)


def estimate_threshold(model: GaussianScalar, k: float, seed: int,
                       mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(threshold_trials, seed, model, k, mode=mode)


def estimate_yvec(model: GaussianYVec, k: float, seed: int,
                  mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(yvec_trials, seed, model, k, mode=mode)


def estimate_xvec(model: GaussianXVec, k: float, seed: int, b0: float = 0.3,
                  mode: LedgerMode = LedgerMode.EXPECTED,
                  charge_sigma: bool = False) -> EstimateReport:
    return _single(xvec_trials, seed, model, k, b0=b0, mode=mode, charge_sigma=charge_sigma)


def estimate_xvec_unquantized(model: GaussianXVec, k_l: float, seed: int,
                              b0: float = 0.3,
                              mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(xvec_unquantized_trials, seed, model, k_l, b0=b0, mode=mode)


def estimate_clt(model, k: float, m: int, seed: int,
                 mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    blocked = model if isinstance(model, BlockAveraged) else BlockAveraged(inner=model, m=m)
    if blocked.m != int(m):
        raise ConfigurationError(f"block size argument {m!r} conflicts with the model's {blocked.m}")
    return _single(clt_trials, seed, blocked, k, mode=mode)


def estimate_pareto_quantized(model: AdditiveNoise, k: float, seed: int,
                              mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(pareto_trials, seed, model, k, mode=mode)


def estimate_additive_threshold(model: AdditiveNoise, k: float, seed: int,
                                mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(additive_trials, seed, model, k, mode=mode)


def estimate_linear_transform_baseline(model: GaussianXVec, budgets: tuple[float, float],
                                       m_transform: np.ndarray, seed: int,
                                       mode: LedgerMode = LedgerMode.EXPECTED) -> EstimateReport:
    return _single(linear_baseline_trials, seed, model, budgets, m_transform, mode=mode)
