"""Random-coding achievability bounds for alarm random access on the GMAC.

The four error probabilities (missed/confused alarm, standard-message error
without and with an alarm, false-positive alarm) are bounded through
Gallager-type exponents. Each exponent is a maximisation over auxiliary
parameters; those are solved in batches by :mod:`alarm_access._search`.

Per-K building blocks:

* ``a(K, K_a)``: alarm decoded wrongly given K active, K_a of them alarm.
* ``b(K)``: false-positive alarm given K standard transmitters.
* ``c(K)``: per-device standard-message error (random-access bound with
  collision and power-truncation terms).
* ``e(K, K_a)``: alarm multiplicity misestimated.
* ``d(K, K_a)``: probability that alarm and multiplicity are both right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.special import gammaincc, gammaln, logsumexp

from . import _search
from .model import (
    TAIL_MASS,
    CorrelationModel,
    effective_support,
    p_k_given_alarm,
    p_k_given_no_alarm,
    p_ka_given_k,
)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ChannelConfig:
    """Blocklength ``n``, codebook power ``P_avg`` (P') and per-codeword cap ``P_max`` (P)."""

    n: int
    P_avg: float
    P_max: float = math.inf

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"blocklength must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.P_avg > 0:
            raise ValueError(f"P_avg must be positive, got {self.P_avg!r}")
        # equality is admitted so the cap can sit exactly at the average power
        if not self.P_max >= self.P_avg:
            raise ValueError(f"P_max must be at least P_avg, got P_max={self.P_max!r}, P_avg={self.P_avg!r}")

    def with_power(self, P_avg: float) -> "ChannelConfig":
        return ChannelConfig(self.n, P_avg, max(self.P_max, P_avg))


@dataclass(frozen=True)
class ExponentSearchConfig:
    """Numerical settings for the exponent maximisations.

    Attributes:
        rho_grid: grid points per rho-type dimension on [0, 1].
        lambda_bracket: search range for every Chernoff parameter lambda.
        refine_iters: golden-section iterations per dimension.
        qt_samples: Monte-Carlo samples for the information-density term of
            the standard-message bound; 0 uses the exponential term alone.
        lambda_grid: log-spaced grid points over ``lambda_bracket``.
        screen_exponent: inside the aggregated bounds, a term whose coarse
            exponent already satisfies ``n * E >= screen_exponent`` keeps that
            (valid, slightly loose) value instead of being refined.
            ``None`` refines everything.
    """

    rho_grid: int = 64
    lambda_bracket: Tuple[float, float] = (1e-9, 1e3)
    refine_iters: int = 40
    qt_samples: int = 0
    lambda_grid: int = 48
    screen_exponent: Optional[float] = 50.0

    def __post_init__(self):
        if self.rho_grid < 2:
            raise ValueError("rho_grid must be at least 2")
        lo, hi = self.lambda_bracket
        if not 0 < lo < hi:
            raise ValueError(f"invalid lambda bracket {self.lambda_bracket!r}")
        if self.refine_iters < 0 or self.qt_samples < 0 or self.lambda_grid < 2:
            raise ValueError("iteration and sample counts must be non-negative")
        object.__setattr__(self, "lambda_bracket", (float(lo), float(hi)))

    @property
    def rho_points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.rho_grid)

    @property
    def log_lambda_points(self) -> np.ndarray:
        lo, hi = self.lambda_bracket
        return np.linspace(math.log(lo), math.log(hi), self.lambda_grid)

    def coarse(self) -> "ExponentSearchConfig":
        """A cheap sub-grid used to screen negligible terms."""
        return ExponentSearchConfig(
            rho_grid=4, lambda_bracket=self.lambda_bracket, refine_iters=0,
            lambda_grid=max(2, self.lambda_grid // 4), screen_exponent=None)


DEFAULT_SEARCH = ExponentSearchConfig()


# --------------------------------------------------------------------------
# helper functions
# --------------------------------------------------------------------------

def phi(k, alpha, P_avg):
    """``0.5 * ln(1 + 2 k P' alpha)``; raises outside the log's domain."""
    arg = 1.0 + 2.0 * k * P_avg * alpha
    if arg <= 0:
        raise ValueError(f"phi undefined: 1 + 2*k*P'*alpha = {arg} <= 0")
    return 0.5 * math.log1p(2.0 * k * P_avg * alpha)


def phi_cap(k, alpha, P_avg):
    """``alpha / (1 + 2 k P' alpha)``; raises when the denominator is not positive."""
    den = 1.0 + 2.0 * k * P_avg * alpha
    if den <= 0:
        raise ValueError(f"Phi undefined: 1 + 2*k*P'*alpha = {den} <= 0")
    return alpha / den


def _phi(k, alpha, P):
    t = 2.0 * k * P * alpha
    return np.where(t > -1.0, 0.5 * np.log1p(t), np.nan)


def _phi_cap(k, alpha, P):
    den = 1.0 + 2.0 * k * P * alpha
    return np.where(den > 0.0, alpha / den, np.nan)


def _phi_noise(alpha):
    # phi(1/P', alpha): the P' cancels
    return np.where(alpha > -0.5, 0.5 * np.log1p(2.0 * alpha), np.nan)


def p0(cfg: ChannelConfig) -> float:
    """Probability that a Gaussian codeword exceeds the power cap ``n P``.

    ``P[chi2_n > n P / P']`` through the regularized upper incomplete gamma.
    """
    if math.isinf(cfg.P_max):
        return 0.0
    return float(gammaincc(cfg.n / 2.0, cfg.n * cfg.P_max / (2.0 * cfg.P_avg)))


def sum_exp_neg(n: int, exponents) -> float:
    """``min(sum_i exp(-n E_i), 1)`` accumulated in the log domain."""
    e = np.asarray(exponents, dtype=float)
    if e.size == 0:
        return 0.0
    with np.errstate(invalid="ignore"):
        terms = np.where(np.isposinf(e), -np.inf, -n * e)
    if np.all(np.isneginf(terms)):
        return 0.0
    return float(min(1.0, math.exp(min(0.0, logsumexp(terms)))))


# --------------------------------------------------------------------------
# objectives (vectorised; x, y are the two search coordinates)
# --------------------------------------------------------------------------

def _alarm_objective(rho, log_lam, K, Ka, Kap, rate, P):
    """Exponent of the alarm-confusion bound; ``rate = ln(M_a - 1) / n``."""
    lam = np.exp(log_lam)
    beta = _phi_cap(Kap * Kap, lam, P)
    rb = rho * beta
    gamma = _phi_cap(Ka * Ka, rb, P) - rho * lam
    psi = _phi_cap(K - Ka, gamma, P)
    xi = (rho * _phi(Kap * Kap, lam, P) + _phi(Ka * Ka, rb, P)
          + _phi(K - Ka, gamma, P) + _phi_noise(psi))
    return -rho * rate + xi


def _false_positive_objective(rho, log_lam, K, Kap, rate, P):
    """Exponent of the false-positive bound; ``rate = ln(M_a) / n``."""
    lam = np.exp(log_lam)
    beta = _phi_cap(Kap * Kap, lam, P) - lam
    rb = rho * beta
    gamma = _phi_cap(K, rb, P)
    xi = rho * _phi(Kap * Kap, lam, P) + _phi(K, rb, P) + _phi_noise(gamma)
    return -rho * rate + xi


def _multiplicity_objective(_unused, log_lam, delta2, K_std, P):
    """Exponent of the alarm-multiplicity bound (one free parameter)."""
    lam = np.exp(log_lam)
    beta = _phi_cap(delta2, lam, P) - lam
    gamma = _phi_cap(K_std, beta, P)
    return _phi(delta2, lam, P) + _phi(K_std, beta, P) + _phi_noise(gamma)


def _standard_objective(rho, rho1, t, R1, R2, P):
    """Exponent of the probability that exactly t standard messages are wrong."""
    Pt = P * t
    rr = rho * rho1
    D = (Pt - 1.0) ** 2 + 4.0 * Pt * (1.0 + rr) / (1.0 + rho)
    lam = (Pt - 1.0 + np.sqrt(D)) / (4.0 * (1.0 + rr) * Pt)
    mu = rho * _phi_cap(t, lam, P)
    b = rho * lam - _phi_cap(t, mu, P)
    arg = 1.0 - 2.0 * b * rho1
    E0 = (rr * _phi(t, lam, P) + rho1 * _phi(t, mu, P)
          + np.where(arg > 0, 0.5 * np.log(np.where(arg > 0, arg, 1.0)), np.nan))
    return -rr * t * R1 - rho1 * R2 + E0


def _maximize_lambda_family(objective, params, search, one_d=False):
    x = np.zeros(1) if one_d else search.rho_points
    return _search.grid_refine_max(objective, params, x, search.log_lambda_points,
                                   search.refine_iters, y_pad=2)


def _maximize_rho_pair(params, search):
    rho = search.rho_points
    return _search.grid_refine_max(_standard_objective, params, rho, rho,
                                   search.refine_iters, y_pad=1)


def _screened(kind, params, search, n, exact_mask=None):
    """Exponents with the coarse-screen shortcut described in ExponentSearchConfig."""
    solve = {
        "alarm": lambda p, s: _maximize_lambda_family(_alarm_objective, p, s),
        "fp": lambda p, s: _maximize_lambda_family(_false_positive_objective, p, s),
        "sa": lambda p, s: _maximize_lambda_family(_multiplicity_objective, p, s, one_d=True),
        "std": lambda p, s: _maximize_rho_pair(p, s),
    }[kind]
    params = [np.asarray(p, dtype=float) for p in params]
    size = params[0].size
    if size == 0:
        return np.zeros(0)
    if search.screen_exponent is None:
        return solve(params, search)
    coarse = solve(params, search.coarse())
    todo = n * coarse < search.screen_exponent
    if exact_mask is not None:
        todo |= exact_mask
    out = coarse.copy()
    if todo.any():
        fine = solve([p[todo] for p in params], search)
        out[todo] = np.maximum(fine, coarse[todo])
    return out


# --------------------------------------------------------------------------
# exponents (scalar API)
# --------------------------------------------------------------------------

def _full(search):
    # scalar exponents are always fully refined
    if search.screen_exponent is None:
        return search
    return ExponentSearchConfig(search.rho_grid, search.lambda_bracket, search.refine_iters,
                                search.qt_samples, search.lambda_grid, None)


def exponent_Ea(K, K_a, K_a_prime, M_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    """Alarm-confusion exponent for one competing multiplicity ``K_a_prime``."""
    if not (0 <= K_a <= K and 0 <= K_a_prime <= K):
        raise ValueError(f"need 0 <= K_a, K_a' <= K, got {K_a}, {K_a_prime}, K={K}")
    if M_a < 1:
        raise ValueError("M_a must be at least 1")
    if M_a == 1:
        return math.inf
    rate = math.log(M_a - 1) / cfg.n
    params = ([K], [K_a], [K_a_prime], [rate], [cfg.P_avg])
    return float(_maximize_lambda_family(_alarm_objective, params, _full(search))[0])


def exponent_Efp(K, K_a_prime, M_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    """False-positive exponent for a phantom alarm of multiplicity ``K_a_prime``."""
    if not 1 <= K_a_prime <= max(K, 1):
        raise ValueError(f"need 1 <= K_a' <= K, got K_a'={K_a_prime}, K={K}")
    rate = math.log(M_a) / cfg.n
    params = ([K], [K_a_prime], [rate], [cfg.P_avg])
    return float(_maximize_lambda_family(_false_positive_objective, params, _full(search))[0])


def exponent_Esa(K, K_a, K_a_prime, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    """Multiplicity-misestimation exponent (alarm message known)."""
    if not (0 <= K_a <= K and 0 <= K_a_prime <= K) or K_a == K_a_prime:
        raise ValueError(f"need distinct K_a, K_a' in [0, K], got {K_a}, {K_a_prime}")
    params = ([(K_a - K_a_prime) ** 2], [K - K_a], [cfg.P_avg])
    return float(_maximize_lambda_family(_multiplicity_objective, params, _full(search), one_d=True)[0])


def _rates(t, K, log2_Ms, n):
    t = np.asarray(t, dtype=float)
    K = np.asarray(K, dtype=float)
    R1 = log2_Ms * LN2 / n - gammaln(t + 1.0) / (n * t)
    R2 = (gammaln(K + 1.0) - gammaln(t + 1.0) - gammaln(K - t + 1.0)) / n
    return R1, R2


def exponent_Et(t, K, log2_Ms, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    """Exponent of the event that exactly ``t`` of ``K`` standard messages are lost."""
    if not 1 <= t <= K:
        raise ValueError(f"need 1 <= t <= K, got t={t}, K={K}")
    R1, R2 = _rates(t, K, log2_Ms, cfg.n)
    params = ([t], [R1], [R2], [cfg.P_avg])
    return float(_maximize_rho_pair(params, _full(search))[0])


# --------------------------------------------------------------------------
# information-density term of the standard-message bound
# --------------------------------------------------------------------------

def estimate_qt(t, K, log2_Ms, cfg: ChannelConfig, samples: int, rng=None,
                max_subsets: int = 256) -> float:
    """Monte-Carlo estimate of the information-density tail term ``q_t``.

    For each sample, K Gaussian codewords and noise are drawn and the minimum
    of the information density over t-subsets of the true messages is taken
    (all subsets when there are at most ``max_subsets``, a random selection
    otherwise). The infimum over the threshold is evaluated exactly on the
    empirical distribution.
    """
    if samples <= 0:
        return math.inf
    rng = np.random.default_rng(rng)
    n, P = cfg.n, cfg.P_avg
    R1, R2 = _rates(t, K, log2_Ms, n)
    log_count = float(n * (t * R1 + R2))
    cap = 0.5 * math.log1p(P * t)
    n_subsets = math.comb(K, t)
    if n_subsets <= max_subsets:
        subsets = np.array([[1.0 if i in s else 0.0 for i in range(K)]
                            for s in _combinations(K, t)])
    else:
        subsets = np.zeros((max_subsets, K))
        for row in subsets:
            row[rng.choice(K, size=t, replace=False)] = 1.0
    density = np.empty(samples)
    for s in range(samples):
        code = rng.normal(0.0, math.sqrt(P), size=(K, n))
        y = code.sum(axis=0) + rng.normal(size=n)
        a = subsets @ code                      # sum of the chosen subset
        b = (1.0 - subsets) @ code              # the rest
        yb = y - b
        dens = n * cap + 0.5 * (np.sum(yb * yb, axis=1) / (1.0 + P * t)
                                - np.sum((yb - a) ** 2, axis=1))
        density[s] = dens.min()
    density.sort()
    # inf over gamma of F(gamma) + exp(log_count - gamma): on each step of the
    # empirical cdf the infimum is approached just below the next jump
    below = np.arange(samples) / samples
    candidates = below + np.exp(np.minimum(log_count - density, 700.0))
    return float(min(1.0, candidates.min()))


def _combinations(K, t):
    from itertools import combinations
    return (set(c) for c in combinations(range(K), t))


# --------------------------------------------------------------------------
# segment helpers
# --------------------------------------------------------------------------

def _segment_sum_exp(log_terms, starts):
    """``min(sum exp(.), 1)`` for consecutive segments starting at ``starts``."""
    if log_terms.size == 0:
        return np.zeros(len(starts))
    seg_max = np.maximum.reduceat(log_terms, starts)
    finite = np.isfinite(seg_max)
    shift = np.where(finite, seg_max, 0.0)
    lengths = np.diff(np.append(starts, log_terms.size))
    rel = np.exp(log_terms - np.repeat(shift, lengths))
    total = np.add.reduceat(rel, starts)
    with np.errstate(divide="ignore"):
        out = np.where(finite, np.exp(np.minimum(shift + np.log(total), 0.0)), 0.0)
    return np.minimum(out, 1.0)


# --------------------------------------------------------------------------
# per-K bound terms
# --------------------------------------------------------------------------

class BoundEvaluator:
    """Caches every per-K bound term at one channel configuration.

    None of the cached terms depends on the activation probabilities, so one
    evaluator serves any number of ``CorrelationModel`` variants that share
    ``M_a`` and ``M_s`` (different ``p_a`` or ``p_d`` reuse the same terms).
    """

    def __init__(self, M_a: int, log2_Ms: float, cfg: ChannelConfig,
                 search: ExponentSearchConfig = DEFAULT_SEARCH, rng=None):
        if M_a < 1:
            raise ValueError("M_a must be at least 1")
        self.M_a = int(M_a)
        self.log2_Ms = float(log2_Ms)
        self.cfg = cfg
        self.search = search
        self.p0 = p0(cfg)
        self._rng = np.random.default_rng(rng)
        self._b: Dict[int, float] = {0: 0.0}
        self._c: Dict[int, float] = {0: 0.0}
        self._a: Dict[Tuple[int, int], float] = {}
        self._e: Dict[Tuple[int, int], float] = {}
        self._esa: Dict[Tuple[int, int], float] = {}

    @classmethod
    def for_model(cls, model: CorrelationModel, cfg: ChannelConfig,
                  search: ExponentSearchConfig = DEFAULT_SEARCH, rng=None):
        return cls(model.M_a, model.log2_Ms, cfg, search, rng)

    # -- b(K) ------------------------------------------------------------
    def b(self, Ks: Iterable[int]) -> np.ndarray:
        Ks = [int(K) for K in Ks]
        missing = sorted({K for K in Ks if K not in self._b})
        if missing:
            n = self.cfg.n
            K_col = np.concatenate([np.full(K, K) for K in missing])
            Kap = np.concatenate([np.arange(1, K + 1) for K in missing])
            rate = math.log(self.M_a) / n
            E = _screened("fp", [K_col, Kap, np.full(K_col.size, rate),
                                 np.full(K_col.size, self.cfg.P_avg)], self.search, n)
            starts = np.cumsum([0] + missing[:-1])
            vals = _segment_sum_exp(-n * E, starts)
            self._b.update(zip(missing, vals))
        return np.array([self._b[K] for K in Ks])

    # -- c(K) ------------------------------------------------------------
    def c(self, Ks: Iterable[int]) -> np.ndarray:
        Ks = [int(K) for K in Ks]
        missing = sorted({K for K in Ks if K not in self._c})
        if missing:
            n = self.cfg.n
            K_col = np.concatenate([np.full(K, K) for K in missing])
            t = np.concatenate([np.arange(1, K + 1) for K in missing])
            R1, R2 = _rates(t, K_col, self.log2_Ms, n)
            E = _screened("std", [t, R1, R2, np.full(t.size, self.cfg.P_avg)], self.search, n)
            p_t = np.exp(-n * np.maximum(E, 0.0))
            if self.search.qt_samples > 0:
                for idx in np.flatnonzero(p_t > 1e-12):
                    q_t = estimate_qt(int(t[idx]), int(K_col[idx]), self.log2_Ms, self.cfg,
                                      self.search.qt_samples, self._rng)
                    p_t[idx] = min(p_t[idx], q_t)
            weighted = t / K_col * p_t
            starts = np.cumsum([0] + missing[:-1])
            sums = np.add.reduceat(weighted, starts)
            for K, s in zip(missing, sums):
                collision = math.exp(math.log(K * (K - 1) / 2) - self.log2_Ms * LN2) if K >= 2 else 0.0
                self._c[K] = min(1.0, float(s) + collision + K * self.p0)
        return np.array([self._c[K] for K in Ks])

    # -- a(K, K_a), e(K, K_a) ----------------------------------------------
    def _fill_esa(self, keys):
        missing = sorted({k for k in keys if k not in self._esa})
        if not missing:
            return
        delta2 = np.array([k[0] for k in missing], dtype=float)
        K_std = np.array([k[1] for k in missing], dtype=float)
        E = _screened("sa", [delta2, K_std, np.full(delta2.size, self.cfg.P_avg)],
                      self.search, self.cfg.n)
        self._esa.update(zip(missing, E))

    def ae(self, pairs: Iterable[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray]:
        """``a(K, K_a)`` and ``e(K, K_a)`` for each pair."""
        pairs = [(int(K), int(Ka)) for K, Ka in pairs]
        for K, Ka in pairs:
            if not 0 <= Ka <= K:
                raise ValueError(f"need 0 <= K_a <= K, got K={K}, K_a={Ka}")
        missing = sorted({p for p in pairs if p not in self._a})
        if missing:
            n = self.cfg.n
            if self.M_a == 1:
                for p in missing:
                    self._a[p] = 0.0
            else:
                K_col = np.concatenate([np.full(K + 1, K) for K, _ in missing])
                Ka_col = np.concatenate([np.full(K + 1, Ka) for K, Ka in missing])
                Kap = np.concatenate([np.arange(K + 1) for K, _ in missing])
                rate = math.log(self.M_a - 1) / n
                E = _screened("alarm", [K_col, Ka_col, Kap, np.full(K_col.size, rate),
                                        np.full(K_col.size, self.cfg.P_avg)], self.search, n)
                starts = np.cumsum([0] + [K + 1 for K, _ in missing[:-1]])
                vals = _segment_sum_exp(-n * E, starts)
                self._a.update(zip(missing, vals))
            keys = {((Ka - Kap) ** 2, K - Ka) for K, Ka in missing
                    for Kap in range(K + 1) if Kap != Ka}
            self._fill_esa(keys)
            for K, Ka in missing:
                E = [self._esa[((Ka - Kap) ** 2, K - Ka)] for Kap in range(K + 1) if Kap != Ka]
                self._e[(K, Ka)] = sum_exp_neg(n, E)
        return (np.array([self._a[p] for p in pairs]), np.array([self._e[p] for p in pairs]))

    def d(self, pairs) -> np.ndarray:
        a, e = self.ae(pairs)
        return bound_d_from(a, e, self.p0)

    # -- aggregates ----------------------------------------------------------
    def _no_alarm_support(self, model, tol):
        ks = np.arange(model.N + 1)
        pmf = p_k_given_no_alarm(model, ks)
        lo, hi, _ = effective_support(pmf, tol)
        return ks[lo:hi + 1], pmf[lo:hi + 1]

    def no_alarm_bounds(self, model: CorrelationModel, tol=TAIL_MASS) -> Tuple[float, float]:
        """``(eps_s, eps_fp)`` averaged over K given no alarm."""
        Ks, w = self._no_alarm_support(model, tol)
        b = self.b(Ks)
        c = self.c(Ks)
        return _average(w, b + c - b * c), _average(w, b)

    def standard_only_bound(self, model: CorrelationModel, tol=TAIL_MASS) -> float:
        """``sum_K p_K(K | no alarm) c(K)``: standard error with no alarm traffic."""
        Ks, w = self._no_alarm_support(model, tol)
        return _average(w, self.c(Ks))

    def _alarm_blocks(self, model, tol):
        ks = np.arange(model.N + 1)
        pmf = p_k_given_alarm(model, ks)
        lo, hi, _ = effective_support(pmf, tol)
        blocks = []
        for K in range(lo, hi + 1):
            if K == 0:
                blocks.append((K, np.array([0]), np.array([1.0])))
                continue
            pk = p_ka_given_k(model, K, np.arange(K + 1))
            a_lo, a_hi, _ = effective_support(pk, tol)
            blocks.append((K, np.arange(a_lo, a_hi + 1), pk[a_lo:a_hi + 1]))
        return blocks, pmf[lo:hi + 1]

    def alarm_bounds(self, model: CorrelationModel, tol=TAIL_MASS) -> Tuple[float, float]:
        """``(eps_a, eps_sa)`` averaged over K and K_a given an alarm."""
        blocks, wK = self._alarm_blocks(model, tol)
        pairs = [(K, int(Ka)) for K, kas, _ in blocks for Ka in kas]
        self.ae(pairs)
        self.c({K - Ka for K, Ka in pairs})
        inner_a = np.empty(len(blocks))
        inner_sa = np.empty(len(blocks))
        for i, (K, kas, wka) in enumerate(blocks):
            a, e = self.ae([(K, int(Ka)) for Ka in kas])
            d = bound_d_from(a, e, self.p0)
            c = self.c(K - kas)
            inner_a[i] = _average(wka, a)
            inner_sa[i] = _average(wka, 1.0 - d * (1.0 - c))
        return min(_average(wK, inner_a) + self.p0, 1.0), _average(wK, inner_sa)

    def bound_set(self, model: CorrelationModel, tol=TAIL_MASS,
                  table_Ks: Optional[Iterable[int]] = None) -> "BoundSet":
        eps_s, eps_fp = self.no_alarm_bounds(model, tol)
        eps_a, eps_sa = self.alarm_bounds(model, tol)
        terms = {}
        if table_Ks is not None:
            terms = self.table(table_Ks)
        return BoundSet(eps_a, eps_s, eps_sa, eps_fp, terms)

    def table(self, Ks: Iterable[int]) -> Dict[Tuple[int, int], Dict[str, float]]:
        """Raw per-(K, K_a) terms for every ``0 <= K_a <= K``."""
        out = {}
        for K in Ks:
            K = int(K)
            pairs = [(K, Ka) for Ka in range(K + 1)]
            a, e = self.ae(pairs)
            d = bound_d_from(a, e, self.p0)
            b = float(self.b([K])[0])
            cK = float(self.c([K])[0])
            c_rest = self.c([K - Ka for _, Ka in pairs])
            for i, (_, Ka) in enumerate(pairs):
                out[(K, Ka)] = {"a": float(a[i]), "b": b, "c": cK, "c_rest": float(c_rest[i]),
                                "d": float(d[i]), "e": float(e[i])}
        return out


def _average(weights, values) -> float:
    """``sum w v`` plus the untracked mass ``1 - sum w`` counted with value one.

    Both sums share one summation order, so all-ones values give exactly 1.
    """
    total = float(np.sum(weights))
    value = float(np.sum(weights * values)) + max(0.0, 1.0 - total)
    return min(max(value, 0.0), 1.0)


def bound_d_from(a, e, p0_value):
    """Probability that alarm and multiplicity are both decoded correctly.

    Both error bounds are inflated by ``p0`` and clamped to one before the
    product is formed.
    """
    a = np.minimum(np.asarray(a, dtype=float) + p0_value, 1.0)
    e = np.minimum(np.asarray(e, dtype=float) + p0_value, 1.0)
    return (1.0 - a) * (1.0 - e)


# --------------------------------------------------------------------------
# scalar bound API
# --------------------------------------------------------------------------

def bound_a(K, K_a, M_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    return float(BoundEvaluator(M_a, 1.0, cfg, search).ae([(K, K_a)])[0][0])


def bound_b(K, M_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    return float(BoundEvaluator(M_a, 1.0, cfg, search).b([K])[0])


def bound_c(K, M_s_log2, cfg: ChannelConfig, search=DEFAULT_SEARCH, rng=None) -> float:
    return float(BoundEvaluator(2, M_s_log2, cfg, search, rng).c([K])[0])


def bound_e(K, K_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    return float(BoundEvaluator(2, 1.0, cfg, search).ae([(K, K_a)])[1][0])


def bound_d(K, K_a, M_a, cfg: ChannelConfig, search=DEFAULT_SEARCH) -> float:
    ev = BoundEvaluator(M_a, 1.0, cfg, search)
    return float(ev.d([(K, K_a)])[0])


@dataclass
class BoundSet:
    """K-averaged bounds on the four error probabilities plus raw per-K terms."""

    eps_a_bound: float
    eps_s_bound: float
    eps_sa_bound: float
    eps_fp_bound: float
    per_k_terms: Dict[Tuple[int, int], Dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, float]:
        return {"eps_a": self.eps_a_bound, "eps_s": self.eps_s_bound,
                "eps_sa": self.eps_sa_bound, "eps_fp": self.eps_fp_bound}


def eps_bounds(model: CorrelationModel, cfg: ChannelConfig,
               search: ExponentSearchConfig = DEFAULT_SEARCH,
               table_Ks: Optional[Iterable[int]] = None, rng=None) -> BoundSet:
    """Evaluate the four aggregate bounds for ``model`` on channel ``cfg``."""
    return BoundEvaluator.for_model(model, cfg, search, rng).bound_set(model, table_Ks=table_Ks)
