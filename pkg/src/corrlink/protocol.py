"""Two-party machinery: what Alice sends, how it is coded, and what it costs.

Selection rules walk a paired sample stream exactly as the transmitting side
would, so their sample accounting is literal. Every transmitted object is
charged to a BitLedger either as entropy (expected bits, the default) or as
an actual prefix-free codeword length (realized bits): geometric indices get
a Golomb code matched to the crossing probability, fixed-size payloads get
fixed-length codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, WaitCapExceededError
from .sources import SampleStream, crossing_prob
from .statmath import geometric_entropy, geometric_entropy_inv, qfunc, qfunc_inv

__all__ = [
    "LedgerMode",
    "LedgerEntry",
    "BitLedger",
    "Transcript",
    "Selection",
    "StoppingSetParams",
    "ParetoAllocation",
    "golomb_parameter",
    "golomb_length",
    "golomb_encode",
    "golomb_decode",
    "select_max_index",
    "select_threshold_index",
    "select_stopping_set_indices",
    "quantize_W_matrix",
    "quantize_pareto_value",
    "quantize_correlation_entries",
    "allocate_bits_xvec",
    "allocate_bits_pareto",
    "default_wait_cap",
]

_SQRT3 = math.sqrt(3.0)

# Largest float that still represents every smaller integer exactly; indices
# beyond this cannot be Golomb-coded faithfully.
_MAX_EXACT_INDEX = 2.0**53


class LedgerMode(Enum):
    EXPECTED = "expected"
    REALIZED = "realized"


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    expected_bits: float
    realized_bits: Optional[int] = None


@dataclass
class BitLedger:
    """Per-message accounting of communication cost."""

    mode: LedgerMode = LedgerMode.EXPECTED
    entries: list[LedgerEntry] = field(default_factory=list)

    def charge(self, label: str, expected_bits: float, realized_bits: Optional[int] = None):
        if expected_bits < 0.0 and not math.isnan(expected_bits):
            raise ConfigurationError(f"cannot charge negative bits ({expected_bits!r})")
        if self.mode is LedgerMode.REALIZED:
            if realized_bits is None:
                raise ConfigurationError(f"realized mode requires a codeword length for {label!r}")
            if realized_bits < 1:
                raise ConfigurationError(f"codeword length must be >= 1, got {realized_bits!r}")
        self.entries.append(LedgerEntry(label, float(expected_bits), realized_bits))

    def total(self) -> float:
        return sum(e.expected_bits for e in self.entries)

    def total_realized(self) -> Optional[int]:
        if any(e.realized_bits is None for e in self.entries):
            return None
        return sum(e.realized_bits for e in self.entries)


@dataclass
class Transcript:
    """Everything one protocol run put on the wire."""

    label: str
    indices: list[int]
    ledger: BitLedger
    samples_consumed: int
    quantized_values: Optional[np.ndarray] = None

    def __post_init__(self):
        for prev, cur in zip(self.indices, self.indices[1:]):
            if cur <= prev:
                raise ConfigurationError(
                    f"transcript indices must be strictly increasing, got {self.indices!r}"
                )
        if self.indices and self.samples_consumed < self.indices[-1]:
            raise ConfigurationError("samples_consumed cannot be below the last index")

    def to_record(self) -> str:
        idx = ",".join(str(i) for i in self.indices)
        realized = self.ledger.total_realized()
        tail = "NA" if realized is None else str(realized)
        return f"{self.label}\t{idx}\t{self.ledger.total():.10g}\t{tail}"


@dataclass(frozen=True)
class Selection:
    """A selection rule's outcome: the transcript plus both parties' values."""

    transcript: Transcript
    x: np.ndarray
    y: np.ndarray


# ---------------------------------------------------------------------------
# Golomb coding of geometric indices.


def golomb_parameter(p: float) -> int:
    """Optimal Golomb divisor for a geometric index with success probability ``p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"success probability must lie in (0, 1), got {p!r}")
    denom = math.log1p(-p) / math.log(2.0)
    return max(1, math.ceil(-1.0 / denom))


def _trunc_binary_width(m: int) -> int:
    return (m - 1).bit_length()


def golomb_length(j: int, m: int) -> int:
    """Codeword length in bits for 1-based index ``j`` under divisor ``m``."""
    j = int(j)
    m = int(m)
    if j < 1 or m < 1:
        raise DomainError(f"need index >= 1 and divisor >= 1, got j={j!r} m={m!r}")
    q, r = divmod(j - 1, m)
    b = _trunc_binary_width(m)
    thr = (1 << b) - m
    return q + 1 + (b - 1 if r < thr else b)


def golomb_encode(j: int, m: int) -> str:
    """Encode index ``j`` as a '0'/'1' string: unary quotient, truncated-binary remainder."""
    j = int(j)
    m = int(m)
    if j < 1 or m < 1:
        raise DomainError(f"need index >= 1 and divisor >= 1, got j={j!r} m={m!r}")
    q, r = divmod(j - 1, m)
    b = _trunc_binary_width(m)
    thr = (1 << b) - m
    prefix = "1" * q + "0"
    if b == 0:
        return prefix
    if r < thr:
        # Short codewords drop the leading bit; width b-1 (possibly zero).
        return prefix + format(r, "b").zfill(b - 1) if b > 1 else prefix
    return prefix + format(r + thr, "b").zfill(b)


def _payload_width(cells: int) -> int:
    return int(math.ceil(math.log2(cells))) if cells > 1 else 0


def golomb_decode(bits: str, m: int) -> tuple[int, int]:
    """Decode one codeword from the front of ``bits``; returns (index, bits consumed)."""
    m = int(m)
    q = 0
    pos = 0
    while pos < len(bits) and bits[pos] == "1":
        q += 1
        pos += 1
    if pos >= len(bits):
        raise DomainError("truncated codeword: unary part has no terminator")
    pos += 1
    b = _trunc_binary_width(m)
    thr = (1 << b) - m
    if b == 0:
        r = 0
    else:
        if pos + b - 1 > len(bits):
            raise DomainError("truncated codeword: remainder bits missing")
        head = int(bits[pos : pos + b - 1], 2) if b > 1 else 0
        if head < thr:
            r = head
            pos += b - 1
        else:
            if pos + b > len(bits):
                raise DomainError("truncated codeword: remainder bits missing")
            r = int(bits[pos : pos + b], 2) - thr
            pos += b
    return q * m + r + 1, pos


def golomb_length_array(indices: np.ndarray, m: int) -> np.ndarray:
    """Vectorized golomb_length for a float array of exact integer indices."""
    j = np.asarray(indices, dtype=float)
    if np.any(j < 1.0):
        raise DomainError("indices must be >= 1")
    if np.any(j >= _MAX_EXACT_INDEX):
        raise ConfigurationError(
            "an index exceeds the exact float64 integer range; realized accounting "
            "is unavailable at this crossing probability"
        )
    ji = j.astype(np.int64)
    q, r = np.divmod(ji - 1, np.int64(m))
    b = _trunc_binary_width(m)
    thr = (1 << b) - m
    return (q + 1 + np.where(r < thr, max(b - 1, 0), b)).astype(np.int64)


# ---------------------------------------------------------------------------
# Parameter blocks.


@dataclass(frozen=True)
class StoppingSetParams:
    """Geometry and bit split for the vector-X selection rule.

    One coordinate must land beyond ``a`` in magnitude while every other stays
    inside (-b, b); ``k_l`` bits are budgeted per transmitted index and
    ``k_q`` per quantized matrix entry.
    """

    a: float
    b: float
    d: int
    k_l: float
    k_q: float

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.d!r}")
        if self.b < 0.0:
            raise ConfigurationError(f"weak-coordinate bound must be >= 0, got {self.b!r}")
        if not self.a > self.d * (self.b + 1.0):
            raise ConfigurationError(
                f"need a > d(b+1) for the quantization-loss guarantee: "
                f"a={self.a!r}, d={self.d!r}, b={self.b!r}"
            )
        if not self.a > (self.d - 1) * self.b:
            raise ConfigurationError("need a > (d-1)b for the selection matrix to be invertible")
        p = self.crossing_prob
        if not 0.0 < p < 1.0:
            raise ConfigurationError(f"stopping-set crossing probability {p!r} outside (0, 1)")

    @property
    def crossing_prob(self) -> float:
        return float(2.0 * qfunc(self.a) * (1.0 - 2.0 * qfunc(self.b)) ** (self.d - 1))


class ParetoAllocation(NamedTuple):
    """Bit split and induced thresholds for the quantized heavy-tail scheme."""

    k_l: float
    k_q: float
    t: float
    u: float


# ---------------------------------------------------------------------------
# Selection rules (literal stream walks).


def default_wait_cap(p: Optional[float]) -> int:
    """Default scan budget: 1024 expected waits; truncation odds are e^-1024 order."""
    if p is None or p <= 0.0:
        raise ConfigurationError("no crossing probability available; pass an explicit cap")
    return 1024 * math.ceil(1.0 / p)


def select_max_index(stream: SampleStream, n: int, mode: LedgerMode = LedgerMode.EXPECTED) -> Selection:
    """Scan ``n`` samples and transmit the position of the largest X.

    ``n`` must be a power of two at least 2 so the fixed-length index code is
    exactly log2(n) bits.
    """
    n = int(n)
    if n < 2 or (n & (n - 1)) != 0:
        raise ConfigurationError(f"sample count must be a power of two >= 2, got {n!r}")
    k = n.bit_length() - 1
    xs, ys = stream.draw_chunk(n)
    j = int(np.argmax(xs))
    ledger = BitLedger(mode=mode)
    ledger.charge("max-index", float(k), k)
    # samples_consumed is the full scan length here, not the chosen index.
    transcript = Transcript(label="max", indices=[j + 1], ledger=ledger, samples_consumed=n)
    return Selection(transcript=transcript, x=xs[j : j + 1], y=ys[j : j + 1])


def select_threshold_index(
    stream: SampleStream,
    t: float,
    cap: Optional[int] = None,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> Selection:
    """Walk the stream until X exceeds ``t`` and transmit that sample's position.

    The index cost is the geometric-index entropy when the crossing
    probability has a closed form (NaN otherwise), or the Golomb codeword
    length in realized mode.
    """
    p = crossing_prob(stream.model, t)
    if p is not None and p <= 0.0:
        raise ConfigurationError(f"threshold {t!r} can never be crossed under {stream.model!r}")
    if cap is None:
        cap = default_wait_cap(p)
    cap = int(cap)
    j = 0
    found = None
    while j < cap:
        take = min(4096, cap - j)
        xc, yc = stream.draw_chunk(take)
        hits = np.nonzero(xc > t)[0]
        if hits.size:
            h = int(hits[0])
            found = (j + h + 1, xc[h : h + 1], yc[h : h + 1])
            break
        j += take
    if found is None:
        raise WaitCapExceededError(f"no crossing of {t!r} within {cap} samples")
    index, x, y = found
    ledger = BitLedger(mode=mode)
    if mode is LedgerMode.REALIZED:
        if p is None:
            raise ConfigurationError(
                "realized accounting needs the crossing probability to pick the code"
            )
        m = golomb_parameter(p)
        ledger.charge("threshold-index", geometric_entropy(p), golomb_length(index, m))
    else:
        expected = geometric_entropy(p) if p is not None else math.nan
        ledger.charge("threshold-index", expected)
    transcript = Transcript(
        label="threshold", indices=[index], ledger=ledger, samples_consumed=index
    )
    return Selection(transcript=transcript, x=x, y=y)


def select_stopping_set_indices(
    stream: SampleStream,
    params: StoppingSetParams,
    cap: Optional[int] = None,
    mode: LedgerMode = LedgerMode.EXPECTED,
) -> Selection:
    """Collect d whitened samples, the l-th with coordinate l strong and the rest weak.

    Walks the whitened X stream once; the l-th transmitted index is the first
    position after the (l-1)-th where |W_l| > a and every other coordinate
    sits inside (-b, b). Returns the d selected whitened vectors as the
    columns of the x payload, matching the convention that column l is the
    l-th selection.
    """
    d = params.d
    if getattr(stream.model, "dim", None) != d:
        raise ConfigurationError(
            f"stream model dimension does not match params dimension {d}"
        )
    p = params.crossing_prob
    if cap is None:
        cap = d * default_wait_cap(p)
    cap = int(cap)
    m = golomb_parameter(p) if mode is LedgerMode.REALIZED else None
    indices: list[int] = []
    w_cols = np.empty((d, d))
    y_sel = np.empty(d)
    ledger = BitLedger(mode=mode)
    consumed = 0
    target = 0
    while target < d and consumed < cap:
        take = min(4096, cap - consumed)
        wc, yc = stream.take_whitened(take)
        absw = np.abs(wc)
        for row in range(take):
            if target >= d:
                break
            strong = absw[row, target] > params.a
            others = np.delete(absw[row], target)
            if strong and np.all(others < params.b):
                idx = consumed + row + 1
                gap = idx - (indices[-1] if indices else 0)
                if mode is LedgerMode.REALIZED:
                    ledger.charge(
                        f"stopping-index-{target + 1}",
                        geometric_entropy(p),
                        golomb_length(gap, m),
                    )
                else:
                    ledger.charge(f"stopping-index-{target + 1}", geometric_entropy(p))
                indices.append(idx)
                w_cols[:, target] = wc[row]
                y_sel[target] = yc[row]
                target += 1
        consumed += take
    if target < d:
        raise WaitCapExceededError(
            f"only {target} of {d} stopping sets hit within {cap} whitened samples"
        )
    transcript = Transcript(
        label="stopping-set", indices=indices, ledger=ledger, samples_consumed=indices[-1]
    )
    return Selection(transcript=transcript, x=w_cols, y=y_sel)


# ---------------------------------------------------------------------------
# Quantizers.


class QuantizedPayload(NamedTuple):
    values: np.ndarray
    bits_expected: float
    bits_realized: int


def _cell_count(k_q: float) -> int:
    # Fractional budgets round the alphabet down; two cells minimum keeps the
    # sign split on the strong coordinate meaningful.
    cells = int(math.floor(2.0**k_q))
    cells -= cells % 2
    return max(cells, 2)


def quantize_W_matrix(w: np.ndarray, params: StoppingSetParams) -> QuantizedPayload:
    """Midpoint-quantize a selection matrix for transmission.

    Diagonal entries keep their sign; magnitudes are clamped to
    [a, sqrt(3) a] and quantized on that doubled segment. Off-diagonal
    entries are quantized on [-b, b]. The whole matrix is charged d^2 k_q
    expected bits; the realized cost is one fixed-length codeword over the
    product alphabet.
    """
    w = np.asarray(w, dtype=float)
    d = params.d
    if w.shape != (d, d):
        raise ConfigurationError(f"selection matrix must be {d}x{d}, got {w.shape}")
    expected = d * d * params.k_q
    if params.k_q > 52:
        # Alphabet finer than float64 spacing; quantization is the identity.
        return QuantizedPayload(w.copy(), expected, int(math.ceil(expected)))
    cells = _cell_count(params.k_q)
    half = cells // 2
    a = params.a
    c = _SQRT3 * a
    step_diag = (c - a) / half
    step_off = 2.0 * params.b / cells if params.b > 0.0 else 0.0
    out = np.empty_like(w)
    diag = np.diag_indices(d)
    mag = np.abs(w[diag])
    idx = np.clip(np.floor((mag - a) / step_diag), 0, half - 1)
    out[diag] = np.sign(w[diag]) * (a + (idx + 0.5) * step_diag)
    off_mask = ~np.eye(d, dtype=bool)
    if step_off > 0.0:
        vals = np.clip(w[off_mask], -params.b, params.b)
        oidx = np.clip(np.floor((vals + params.b) / step_off), 0, cells - 1)
        out[off_mask] = -params.b + (oidx + 0.5) * step_off
    else:
        out[off_mask] = 0.0
    realized = int(math.ceil(d * d * math.log2(cells)))
    return QuantizedPayload(out, expected, max(realized, 1))


def quantize_pareto_value(x: float, t: float, u: float, k_q: float) -> QuantizedPayload:
    """Midpoint-quantize a crossing value on [t, u]; values beyond u saturate to u."""
    x = float(x)
    if not u > t:
        raise ConfigurationError(f"need u > t, got t={t!r} u={u!r}")
    if x <= t:
        raise DomainError(f"value {x!r} does not exceed the threshold {t!r}")
    cells = max(1, int(math.floor(2.0**k_q)))
    if x > u:
        value = u
    else:
        step = (u - t) / cells
        idx = min(int((x - t) / step), cells - 1)
        value = t + (idx + 0.5) * step
    return QuantizedPayload(np.array(value), float(k_q), _payload_width(cells))


def quantize_correlation_entries(values: np.ndarray, k: float) -> tuple[np.ndarray, float, int]:
    """Describe a correlation matrix with ceil(sqrt(k)) bits per entry.

    Entries are midpoint-quantized on [-1, 1]; the diagonal is restored
    exactly. Returns (quantized matrix, expected bits, realized bits), both
    charges equal to d^2 ceil(sqrt(k)).
    """
    values = np.asarray(values, dtype=float)
    d = values.shape[0]
    per_entry = math.ceil(math.sqrt(k))
    cells = 2**per_entry
    step = 2.0 / cells
    idx = np.clip(np.floor((values + 1.0) / step), 0, cells - 1)
    out = -1.0 + (idx + 0.5) * step
    np.fill_diagonal(out, 1.0)
    bits = float(d * d * per_entry)
    return out, bits, int(bits)


# ---------------------------------------------------------------------------
# Bit allocation.


def allocate_bits_xvec(k: float, d: int, b0: float = 0.3) -> StoppingSetParams:
    """Split a total budget between stopping-set indices and matrix quantization.

    Uses the closed-form split k_l = (sqrt(k+1) - 1)^2 / d per index and
    k_q = sqrt(4 k_l / d^3) per matrix entry, which exhausts the budget
    exactly: d k_l + d^2 k_q = k. The strong-coordinate bound solves the
    per-index entropy equation at the weak bound ``b0``.
    """
    k = float(k)
    d = int(d)
    if d < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {d!r}")
    if k <= 0.0:
        raise ConfigurationError(f"bit budget must be positive, got {k!r}")

    def geometry(budget: float) -> tuple[float, float, float]:
        k_l = (math.sqrt(budget + 1.0) - 1.0) ** 2 / d
        k_q = math.sqrt(4.0 * k_l / d**3)
        p = geometric_entropy_inv(k_l)
        q_a = p / (2.0 * (1.0 - 2.0 * qfunc(b0)) ** (d - 1))
        if not 0.0 < q_a < 0.5:
            raise ConfigurationError(
                f"budget {budget!r} gives no valid strong-coordinate bound"
            )
        return k_l, k_q, qfunc_inv(q_a)

    try:
        k_l, k_q, a = geometry(k)
        feasible = a > d * (b0 + 1.0)
    except DomainError as exc:
        # Over-large budgets push the crossing probability below float64.
        raise ConfigurationError(
            f"budget {k!r} needs {(math.sqrt(k + 1.0) - 1.0) ** 2 / d:.1f} index bits "
            f"per coordinate, beyond the representable crossing range: {exc}"
        ) from exc
    except ConfigurationError:
        feasible = False
    if not feasible:
        lo, hi = k, max(4.0 * k, 16.0)
        while True:
            try:
                if geometry(hi)[2] > d * (b0 + 1.0):
                    break
            except (ConfigurationError, DomainError):
                pass
            hi *= 2.0
            if hi > 1e9:
                raise ConfigurationError("no feasible budget found below 1e9 bits")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            try:
                ok = geometry(mid)[2] > d * (b0 + 1.0)
            except (ConfigurationError, DomainError):
                ok = False
            if ok:
                hi = mid
            else:
                lo = mid
        raise ConfigurationError(
            f"budget {k!r} too small for dimension {d} at weak bound {b0!r}; "
            f"minimal feasible budget is about {hi:.3f} bits"
        )
    return StoppingSetParams(a=a, b=b0, d=d, k_l=k_l, k_q=k_q)


def allocate_bits_pareto(k: float, alpha: float) -> ParetoAllocation:
    """Split a budget between index and value description for power-law tails.

    k_q = k/(alpha-1) value bits, k_l = k (alpha-2)/(alpha-1) index bits; the
    threshold solves the index-entropy equation on the upper tail and the
    saturation point is t^(alpha/(alpha-2)).
    """
    k = float(k)
    alpha = float(alpha)
    if not alpha > 2.0:
        raise ConfigurationError(f"tail exponent must exceed 2, got {alpha!r}")
    k_q = k / (alpha - 1.0)
    k_l = k * (alpha - 2.0) / (alpha - 1.0)
    if k_l <= 2.0:
        raise ConfigurationError(
            f"index budget {k_l:.3f} bits is too small (needs > 2, the value at crossing "
            f"probability 1/2); increase k"
        )
    p = geometric_entropy_inv(k_l)
    x0 = math.sqrt((alpha - 2.0) / alpha)
    if not 2.0 * p < x0**alpha:
        raise ConfigurationError(
            f"budget {k!r} puts the threshold below the support edge; infeasible"
        )
    t = x0 * (2.0 * p) ** (-1.0 / alpha)
    if t <= 1.0:
        raise ConfigurationError(
            f"threshold {t:.4f} <= 1 makes the saturation point non-increasing; "
            f"increase k"
        )
    u = t ** (alpha / (alpha - 2.0))
    return ParetoAllocation(k_l=k_l, k_q=k_q, t=t, u=u)
