"""Correlated activation model, activity distributions and exact joint entropy.

Devices are silent, send a uniformly drawn standard message, or (when the
common alarm fires and they detect it) send the one shared alarm message.
Probabilities are evaluated in the log domain (or through saddle-point
forms) so that populations of tens of thousands of devices neither overflow
nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import xlogy
from scipy.stats import binom

LN2 = math.log(2.0)

#: Probability mass that may be discarded when truncating a K-sum.
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class CorrelationModel:
    """Source and activation parameters.

    Attributes:
        p_a: probability that the common alarm event occurs.
        p_s: probability that a device sends a standard message.
        p_d: probability that a device detects (and reports) an alarm.
        N: total number of devices.
        M_a: number of alarm messages.
        M_s: number of standard messages. May be astronomically large
            (``2**100``); entropy formulas only ever use ``log2_Ms``.
    """

    p_a: float
    p_s: float
    p_d: float
    N: int
    M_a: int = 2
    M_s: int = 2
    log2_Ms: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("p_a", "p_s", "p_d"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if int(self.M_a) != self.M_a or self.M_a < 1:
            raise ValueError(f"M_a must be a positive integer, got {self.M_a!r}")
        if int(self.M_s) != self.M_s or self.M_s < 1:
            raise ValueError(f"M_s must be a positive integer, got {self.M_s!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M_a", int(self.M_a))
        object.__setattr__(self, "M_s", int(self.M_s))
        # math.log2 is exact for python ints of any size that are powers of two
        object.__setattr__(self, "log2_Ms", float(math.log2(self.M_s)))

    @classmethod
    def from_bits(cls, p_a, p_s, p_d, N, alarm_bits, standard_bits):
        """Build a model whose message sets hold ``2**bits`` messages."""
        return cls(p_a, p_s, p_d, N, M_a=2 ** int(alarm_bits), M_s=2 ** int(standard_bits))

    @property
    def log2_Ma(self) -> float:
        return math.log2(self.M_a)

    @property
    def q_alarm(self) -> float:
        """Per-device activation probability given that the alarm fired."""
        return self.p_d + (1.0 - self.p_d) * self.p_s

    def replace(self, **changes) -> "CorrelationModel":
        return replace(self, **changes)


@dataclass(frozen=True)
class ActivitySnapshot:
    """Number of active devices ``K`` and of alarm transmitters ``K_a``."""

    K: int
    K_a: int = 0

    def __post_init__(self):
        if self.K < 0 or not 0 <= self.K_a <= self.K:
            raise ValueError(f"need 0 <= K_a <= K, got K={self.K}, K_a={self.K_a}")

    def check(self, model: CorrelationModel) -> "ActivitySnapshot":
        if self.K > model.N:
            raise ValueError(f"K={self.K} exceeds N={model.N}")
        return self


# --------------------------------------------------------------------------
# log-domain binomial helpers
# --------------------------------------------------------------------------

def binom_pmf(k, n, p):
    """``C(n, k) p^k (1-p)^(n-k)`` for large ``n`` without overflow.

    Evaluated through the saddle-point deviance form (Boost), which keeps the
    pmf normalised to ~1e-15 for n in the tens of thousands; exponentiating
    log-gamma differences loses about three more digits there.
    """
    return binom.pmf(np.asarray(k), int(n), min(max(p, 0.0), 1.0))


def _check_k(k, upper, what="k"):
    arr = np.asarray(k)
    if np.any(arr < 0) or np.any(arr > upper):
        raise ValueError(f"{what} must lie in [0, {upper}], got {k!r}")
    if np.any(np.asarray(arr, dtype=float) != np.floor(np.asarray(arr, dtype=float))):
        raise ValueError(f"{what} must be integral, got {k!r}")


def _scalar_or_array(values, k):
    return float(values) if np.ndim(k) == 0 else values


def p_k_given_alarm(model: CorrelationModel, k):
    """Distribution of the number of active devices when the alarm fired."""
    _check_k(k, model.N)
    q = model.q_alarm
    out = binom_pmf(k, model.N, q)
    return _scalar_or_array(out, k)


def p_k_given_no_alarm(model: CorrelationModel, k):
    """Distribution of the number of active devices without an alarm."""
    _check_k(k, model.N)
    out = binom_pmf(k, model.N, model.p_s)
    return _scalar_or_array(out, k)


def alarm_share(model: CorrelationModel) -> float:
    """Probability that an active device in the alarm world sends the alarm."""
    q = model.q_alarm
    if q == 0.0:
        raise ValueError("p_d = p_s = 0: no device is ever active during an alarm")
    return model.p_d / q


def p_ka_given_k(model: CorrelationModel, K: int, k):
    """Distribution of the alarm-transmitter count given ``K`` active devices."""
    _check_k(K, model.N, "K")
    _check_k(k, K)
    if K == 0:
        out = np.ones_like(np.asarray(k, dtype=float))
        return _scalar_or_array(out, k)
    share = alarm_share(model)
    out = binom_pmf(k, K, share)
    return _scalar_or_array(out, k)


def effective_support(pmf, tol=TAIL_MASS):
    """Smallest contiguous window around the mode holding ``1 - tol`` of the mass.

    Returns ``(lo, hi, residual)`` with ``pmf[lo:hi+1]`` retained and
    ``residual`` the discarded mass (never negative).
    """
    pmf = np.asarray(pmf, dtype=float)
    lo = hi = int(np.argmax(pmf))
    mass = pmf[lo]
    last = pmf.size - 1
    # grow towards whichever neighbour carries more mass
    while 1.0 - mass >= tol and (lo > 0 or hi < last):
        left = pmf[lo - 1] if lo > 0 else -1.0
        right = pmf[hi + 1] if hi < last else -1.0
        if left >= right:
            lo -= 1
            mass += left
        else:
            hi += 1
            mass += right
        if left <= 0.0 and right <= 0.0:
            break
    return lo, hi, max(0.0, 1.0 - float(pmf[lo:hi + 1].sum()))


def k_support(pmf_fn, model: CorrelationModel, tol=TAIL_MASS):
    """Truncated support of a K-distribution: ``(ks, weights, residual)``."""
    ks = np.arange(model.N + 1)
    pmf = pmf_fn(model, ks)
    lo, hi, residual = effective_support(pmf, tol)
    return ks[lo:hi + 1], pmf[lo:hi + 1], residual


# --------------------------------------------------------------------------
# entropy
# --------------------------------------------------------------------------

def _binary_entropy_bits(x):
    x = np.asarray(x, dtype=float)
    return -(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / LN2


def _entropy_terms(model: CorrelationModel, K: int) -> np.ndarray:
    """``H(W_k | W_1^{k-1})`` for ``k = 1..K`` given exactly K active devices."""
    N = model.N
    p_a, p_d, p_s = model.p_a, model.p_d, model.p_s
    q = model.q_alarm
    r = (1.0 - p_d) * p_s
    u = 1.0 - p_d
    k = np.arange(1, K + 1, dtype=float)

    with np.errstate(divide="ignore"):
        log_pa = math.log(p_a) if p_a > 0 else -math.inf
        log_pna = math.log1p(-p_a) if p_a < 1 else -math.inf
        log_pd = math.log(p_d) if p_d > 0 else -math.inf

        # probability of "first K active, rest silent" (common (1-p_s)^(N-K) removed)
        log_alarm_world = log_pa + xlogy(K, q) + xlogy(N - K, u)
        log_plain_world = log_pna + xlogy(K, p_s)
        log_den = np.logaddexp(log_alarm_world, log_plain_world)
        if not np.isfinite(log_den):
            raise ValueError(
                f"K={K} active devices has zero probability under {model!r}")

        # P(at least one alarm among the first k-1 | T), closed form of the
        # binomial sum: p_a u^(N-K) (q^K - q^(K-k+1) r^(k-1)) / den
        if q > 0:
            tail = np.power(r / q, k - 1.0)
        else:
            tail = np.ones_like(k)
        log_mix = log_alarm_world + np.log1p(-np.minimum(tail, 1.0)) - log_den
        mixed = np.exp(log_mix)

        share = p_d / q if q > 0 else 0.0
        b0 = -xlogy(share, share) / LN2
        rest = r / q if q > 0 else 0.0
        b1 = rest * model.log2_Ms - xlogy(rest, rest) / LN2

        common = xlogy(N - K + k - 1.0, u) + xlogy(k - 1.0, p_s)
        log_b2_num = np.logaddexp(
            log_pa + common + xlogy(K - k + 1.0, q), log_plain_world)
        b2 = np.exp(log_b2_num - log_den)

        log_b3_num = log_pa + log_pd + xlogy(K - k, q) + common
        log_b3_den = log_b2_num
        b3 = np.where(np.isfinite(log_b3_den),
                      np.exp(log_b3_num - np.where(np.isfinite(log_b3_den), log_b3_den, 0.0)),
                      0.0)
    b3 = np.clip(b3, 0.0, 1.0)
    all_standard = _binary_entropy_bits(b3) + b3 * model.log2_Ma + (1.0 - b3) * model.log2_Ms
    return (b0 + b1) * mixed + b2 * all_standard


def conditional_entropy_term(model: CorrelationModel, K: int, k: int) -> float:
    """Entropy in bits of the k-th message given the previous ones, K active."""
    if not 1 <= k <= K <= model.N:
        raise ValueError(f"need 1 <= k <= K <= N, got k={k}, K={K}, N={model.N}")
    return float(_entropy_terms(model, K)[k - 1])


def entropy_terms(model: CorrelationModel, K: int) -> np.ndarray:
    """All chain-rule terms for ``k = 1..K`` (empty for ``K = 0``)."""
    _check_k(K, model.N, "K")
    if K == 0:
        return np.zeros(0)
    return _entropy_terms(model, int(K))


def joint_entropy(model: CorrelationModel, K: int) -> float:
    """``H(W_1^K)`` in bits given exactly K active devices."""
    return float(entropy_terms(model, K).sum())


def spectral_efficiency(model: CorrelationModel, K: int, n: int) -> float:
    """Joint entropy of the K transmitted messages per channel use."""
    if n < 1:
        raise ValueError(f"blocklength must be positive, got {n}")
    return joint_entropy(model, K) / n


def _mean_entropy_in_world(model, pmf_fn, tol):
    ks, weights, _ = k_support(pmf_fn, model, tol)
    total = 0.0
    for K, w in zip(ks, weights):
        if K == 0 or w == 0.0:
            continue
        total += w * joint_entropy(model, int(K)) / K
    return total


def mean_entropy_per_active_device(model: CorrelationModel, tol=TAIL_MASS) -> float:
    """Expected ``H(W_1^K) / K`` over the alarm/no-alarm mixture of K.

    The ``K = 0`` outcome contributes nothing.
    """
    total = 0.0
    if model.p_a > 0:
        total += model.p_a * _mean_entropy_in_world(model, p_k_given_alarm, tol)
    if model.p_a < 1:
        total += (1.0 - model.p_a) * _mean_entropy_in_world(model, p_k_given_no_alarm, tol)
    return total
