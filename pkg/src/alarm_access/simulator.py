"""Toy-scale Monte-Carlo of the random code and two-step decoder on the GMAC.

Each trial draws a fresh Gaussian codebook (the bounds hold for the ensemble
average, not for any fixed codebook), samples the traffic, sends the sum of
the codewords through unit-variance noise and decodes in two steps: a joint
search over the alarm message and its multiplicity, then an exhaustive
subset search for the standard messages on the cancelled residual.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from functools import lru_cache
from itertools import combinations
from typing import Optional, Tuple

import numpy as np

from .bounds import ChannelConfig
from .model import CorrelationModel

SUBSET_BUDGET = 1_000_000
CHUNK_TRIALS = 500
SILENT = -1


@dataclass(frozen=True)
class Codebook:
    """Alarm codewords first (rows ``0..M_a-1``), standard codewords after.

    Attributes:
        codewords: ``(M_a + M_s, n)`` Gaussian samples with variance ``P'``.
        power_flags: rows whose energy exceeds ``n P``; they are sent as zeros.
        M_a: number of alarm codewords.
    """

    codewords: np.ndarray
    power_flags: np.ndarray
    M_a: int

    @classmethod
    def draw(cls, M_a: int, M_s: int, cfg: ChannelConfig, rng) -> "Codebook":
        rng = np.random.default_rng(rng)
        words = rng.normal(0.0, math.sqrt(cfg.P_avg), size=(M_a + M_s, cfg.n))
        flags = np.einsum("ij,ij->i", words, words) > cfg.n * cfg.P_max
        return cls(words, flags, M_a)

    @property
    def M_s(self) -> int:
        return self.codewords.shape[0] - self.M_a

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    def transmitted(self) -> np.ndarray:
        """Codewords as actually sent (over-power rows replaced by zeros)."""
        if not self.power_flags.any():
            return self.codewords
        return np.where(self.power_flags[:, None], 0.0, self.codewords)


@dataclass(frozen=True)
class Traffic:
    """One activity draw.

    Attributes:
        alarm: whether the alarm event occurred.
        alarm_message: the common alarm message (row index), or ``None``.
        messages: codebook row per device, ``-1`` for silent devices.
    """

    alarm: bool
    alarm_message: Optional[int]
    messages: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return self.messages[self.messages != SILENT]

    @property
    def K(self) -> int:
        return int(np.count_nonzero(self.messages != SILENT))

    def K_a(self, M_a: int) -> int:
        return int(np.count_nonzero((self.messages >= 0) & (self.messages < M_a)))


@dataclass(frozen=True)
class Decision:
    """Decoder output: alarm row (or ``None``), multiplicity estimate, standard rows."""

    alarm: Optional[int]
    K_a: int
    standard: Tuple[int, ...]


def generate_traffic(model: CorrelationModel, rng) -> Traffic:
    """Sample the alarm event and every device's message."""
    rng = np.random.default_rng(rng)
    N = model.N
    alarm = bool(rng.random() < model.p_a)
    messages = np.full(N, SILENT, dtype=np.int64)
    w0 = None
    detect = np.zeros(N, dtype=bool)
    if alarm:
        w0 = int(rng.integers(model.M_a))
        detect = rng.random(N) < model.p_d
        messages[detect] = w0
    standard = ~detect & (rng.random(N) < model.p_s)
    messages[standard] = model.M_a + rng.integers(model.M_s, size=int(standard.sum()))
    return Traffic(alarm, w0, messages)


def transmit(codebook: Codebook, messages, rng, noise: bool = True) -> np.ndarray:
    """``Y = sum_j X_j + Z`` for the active rows in ``messages``."""
    rng = np.random.default_rng(rng)
    messages = np.asarray(messages, dtype=np.int64)
    rows = messages[messages != SILENT]
    counts = np.bincount(rows, minlength=codebook.codewords.shape[0]).astype(float)
    y = counts @ codebook.transmitted()
    if noise:
        y = y + rng.standard_normal(codebook.n)
    return y


@lru_cache(maxsize=64)
def _subsets(M_s: int, size: int) -> np.ndarray:
    return np.array(list(combinations(range(M_s), size)), dtype=np.int64).reshape(-1, size)


def subset_count(M_s: int, size: int) -> int:
    return math.comb(M_s, size)


def check_budget(M_s: int, K_max: int, budget: int = SUBSET_BUDGET) -> None:
    """Raise when some standard-decoding step would enumerate too many subsets."""
    worst = max(subset_count(M_s, k) for k in range(min(K_max, M_s) + 1))
    if worst > budget:
        raise ValueError(f"subset decoder needs {worst} enumerations, budget is {budget}")


def decode(codebook: Codebook, y: np.ndarray, K: int, budget: int = SUBSET_BUDGET) -> Decision:
    """Two-step maximum-likelihood-style decoder with known K.

    Ties are broken by the lowest index: alarm rows first, then multiplicity,
    then lexicographic subset order.
    """
    words = codebook.codewords
    M_a = codebook.M_a
    alarm_words = words[:M_a]
    # ||k c - y||^2 - ||y||^2 over (alarm row, k)
    k = np.arange(K + 1, dtype=float)
    energy = np.einsum("ij,ij->i", alarm_words, alarm_words)
    corr = alarm_words @ y
    metric = energy[:, None] * k[None, :] ** 2 - 2.0 * corr[:, None] * k[None, :]
    w_hat, ka_hat = np.unravel_index(int(np.argmin(metric)), metric.shape)
    ka_hat = int(ka_hat)
    alarm = int(w_hat) if ka_hat >= 1 else None
    residual = y - ka_hat * alarm_words[w_hat] if ka_hat else y

    size = min(K - ka_hat, codebook.M_s)
    if size <= 0:
        return Decision(alarm, ka_hat, ())
    if subset_count(codebook.M_s, size) > budget:
        raise ValueError(f"C({codebook.M_s}, {size}) subsets exceed the budget of {budget}")
    std = words[M_a:]
    gram = std @ std.T
    proj = std @ residual
    subs = _subsets(codebook.M_s, size)
    # ||r - sum_S c||^2 - ||r||^2
    score = gram[subs[:, :, None], subs[:, None, :]].sum(axis=(1, 2)) - 2.0 * proj[subs].sum(axis=1)
    best = subs[int(np.argmin(score))]
    return Decision(alarm, ka_hat, tuple(int(M_a + s) for s in best))


@dataclass
class TrialTally:
    """Counts of every error event over a campaign.

    Rates divide by the matching denominator: alarm quantities by
    ``alarm_trials``, no-alarm ones by ``no_alarm_trials``, the multiplicity
    error by ``alarm_correct`` (trials where the alarm was decoded right).
    """

    trials: int = 0
    alarm_trials: int = 0
    no_alarm_trials: int = 0
    alarm_missed: int = 0
    false_positive: int = 0
    std_errors_no_alarm: float = 0.0
    std_errors_alarm: float = 0.0
    alarm_correct: int = 0
    ka_misestimate: int = 0

    def merge(self, other: "TrialTally") -> "TrialTally":
        return TrialTally(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                             for f in fields(self)})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def _rate(num, den):
        return num / den if den else float("nan")

    def rates(self) -> dict:
        return {
            "eps_a": self._rate(self.alarm_missed, self.alarm_trials),
            "eps_fp": self._rate(self.false_positive, self.no_alarm_trials),
            "eps_s": self._rate(self.std_errors_no_alarm, self.no_alarm_trials),
            "eps_sa": self._rate(self.std_errors_alarm, self.alarm_trials),
            "ka_misestimate": self._rate(self.ka_misestimate, self.alarm_correct),
        }

    def denominators(self) -> dict:
        return {"eps_a": self.alarm_trials, "eps_fp": self.no_alarm_trials,
                "eps_s": self.no_alarm_trials, "eps_sa": self.alarm_trials,
                "ka_misestimate": self.alarm_correct}


def standard_error_fraction(traffic: Traffic, decision: Decision, M_a: int) -> float:
    """Share of standard transmitters whose message is lost or collided."""
    sent = traffic.active
    sent = sent[sent >= M_a]
    if sent.size == 0:
        return 0.0
    values, counts = np.unique(sent, return_counts=True)
    decoded = set(decision.standard)
    errors = sum(int(c) if (c > 1 or int(v) not in decoded) else 0 for v, c in zip(values, counts))
    return errors / sent.size


def score_trial(traffic: Traffic, decision: Decision, M_a: int) -> TrialTally:
    tally = TrialTally(trials=1)
    frac = standard_error_fraction(traffic, decision, M_a)
    if traffic.alarm:
        tally.alarm_trials = 1
        tally.std_errors_alarm = frac
        if decision.alarm != traffic.alarm_message:
            tally.alarm_missed = 1
        else:
            tally.alarm_correct = 1
            tally.ka_misestimate = int(decision.K_a != traffic.K_a(M_a))
    else:
        tally.no_alarm_trials = 1
        tally.std_errors_no_alarm = frac
        tally.false_positive = int(decision.K_a >= 1)
    return tally


def run_trial(model: CorrelationModel, cfg: ChannelConfig, rng,
              budget: int = SUBSET_BUDGET) -> TrialTally:
    traffic = generate_traffic(model, rng)
    codebook = Codebook.draw(model.M_a, model.M_s, cfg, rng)
    y = transmit(codebook, traffic.messages, rng)
    decision = decode(codebook, y, traffic.K, budget)
    return score_trial(traffic, decision, model.M_a)


def _run_chunk(model, cfg, trials, seed_seq, budget):
    rng = np.random.default_rng(seed_seq)
    tally = TrialTally()
    for _ in range(trials):
        tally = tally.merge(run_trial(model, cfg, rng, budget))
    return tally


def run_campaign(model: CorrelationModel, cfg: ChannelConfig, trials: int, seed: int,
                 threads: int = 1, budget: int = SUBSET_BUDGET,
                 progress=None) -> TrialTally:
    """Run ``trials`` independent trials and merge their tallies.

    Trials are split into fixed-size chunks, each seeded from its own child of
    ``SeedSequence(seed)``, so the result does not depend on ``threads``.
    """
    if trials < 0:
        raise ValueError("trials must be non-negative")
    if model.M_s > 64:
        raise ValueError("the exhaustive decoder is for toy message sets only (M_s <= 64)")
    check_budget(model.M_s, model.N, budget)
    sizes = [min(CHUNK_TRIALS, trials - s) for s in range(0, trials, CHUNK_TRIALS)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    total = TrialTally()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = pool.map(lambda job: _run_chunk(model, cfg, job[0], job[1], budget), jobs)
            for i, part in enumerate(results):
                total = total.merge(part)
                if progress:
                    progress(i + 1, len(jobs))
    else:
        for i, (size, ss) in enumerate(jobs):
            total = total.merge(_run_chunk(model, cfg, size, ss, budget))
            if progress:
                progress(i + 1, len(jobs))
    return total


def snapshot_traffic(K: int, K_a: int, alarm: bool, M_a: int, M_s: int, rng,
                     distinct: bool = False) -> Traffic:
    """Traffic with exactly ``K`` active devices, ``K_a`` of them on the alarm.

    With ``distinct`` the standard messages are drawn without replacement.
    """
    if not 0 <= K_a <= K or (K_a and not alarm):
        raise ValueError(f"invalid activity K={K}, K_a={K_a}, alarm={alarm}")
    if distinct and K - K_a > M_s:
        raise ValueError("more distinct standard messages requested than exist")
    w0 = int(rng.integers(M_a)) if alarm else None
    if distinct:
        std = M_a + rng.choice(M_s, size=K - K_a, replace=False)
    else:
        std = M_a + rng.integers(M_s, size=K - K_a)
    messages = np.concatenate([np.full(K_a, w0 if alarm else 0, dtype=np.int64), std])
    return Traffic(alarm, w0, messages)


def _run_snapshot_chunk(K, K_a, alarm, M_a, M_s, cfg, trials, seed_seq, budget, distinct):
    rng = np.random.default_rng(seed_seq)
    tally = TrialTally()
    for _ in range(trials):
        traffic = snapshot_traffic(K, K_a, alarm, M_a, M_s, rng, distinct)
        codebook = Codebook.draw(M_a, M_s, cfg, rng)
        y = transmit(codebook, traffic.messages, rng)
        tally = tally.merge(score_trial(traffic, decode(codebook, y, K, budget), M_a))
    return tally


def run_snapshot(K: int, K_a: int, M_a: int, M_s: int, cfg: ChannelConfig, trials: int,
                 seed: int, alarm: Optional[bool] = None, distinct: bool = False,
                 budget: int = SUBSET_BUDGET) -> TrialTally:
    """Campaign at fixed activity, for checking the per-K bound terms.

    ``alarm`` defaults to ``K_a > 0``; pass ``True`` with ``K_a = 0`` for an
    alarm that no device reported. ``distinct`` rules out standard-message
    collisions, which the interference model behind the a, b and e terms
    does not cover.
    """
    alarm = K_a > 0 if alarm is None else alarm
    check_budget(M_s, K, budget)
    sizes = [min(CHUNK_TRIALS, trials - s) for s in range(0, trials, CHUNK_TRIALS)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    total = TrialTally()
    for size, ss in zip(sizes, seeds):
        total = total.merge(_run_snapshot_chunk(K, K_a, alarm, M_a, M_s, cfg, size, ss,
                                                  budget, distinct))
    return total


def wilson_halfwidth(p_hat: float, trials: int, z: float = 1.959963984540054) -> float:
    """Half-width of the Wilson score interval (95% by default)."""
    if trials <= 0:
        return 1.0
    denom = 1.0 + z * z / trials
    return z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials)) / denom


def wilson_upper(p_hat: float, trials: int, z: float = 1.959963984540054) -> float:
    """Upper end of the Wilson score interval."""
    if trials <= 0:
        return 1.0
    centre = (p_hat + z * z / (2.0 * trials)) / (1.0 + z * z / trials)
    return min(1.0, max(p_hat, centre + wilson_halfwidth(p_hat, trials, z)))
