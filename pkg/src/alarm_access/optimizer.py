"""Minimum-power operating points and the energy-per-bit / spectral-efficiency sweeps.

The power problem is solved in two bisection stages. Stage one finds the
smallest codebook power meeting the two constraints that only involve the
no-alarm world (standard error and false positives). Stage two fixes that
power and finds the smallest detection probability meeting the two alarm
constraints. When no detection probability works, the detection probability
is pinned to one and the power is raised until the alarm constraints hold.

Every constraint is conditioned on the alarm state, so neither stage depends
on the alarm probability ``p_a``; only the energy per bit does.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from .bounds import DEFAULT_SEARCH, BoundEvaluator, ChannelConfig, ExponentSearchConfig
from .model import CorrelationModel, mean_entropy_per_active_device

log = logging.getLogger(__name__)

P_BRACKET = (1e-6, 1.0)
P_CEILING = 2.0 ** 40
BINDING_MARGIN = 0.05
CONSTRAINTS = ("eps_s", "eps_fp", "eps_a", "eps_sa")
# the sweep reports tiny alarm bounds, so it truncates deeper than the optimiser
SWEEP_TAIL_MASS = 1e-15


@dataclass(frozen=True)
class ReliabilityTargets:
    """Target error probabilities for the four reliability constraints."""

    eps_a: float
    eps_s: float
    eps_sa: float
    eps_fp: float

    def __post_init__(self):
        for name in CONSTRAINTS:
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in CONSTRAINTS}


@dataclass
class OperatingPoint:
    """Result of :func:`min_power`.

    Attributes:
        P_avg: minimised per-symbol codebook power.
        p_d: chosen detection probability.
        energy_per_bit: ``E_b/N_0`` as a linear ratio.
        feasible: whether all four constraints hold at the returned point.
        binding_constraints: constraints within 5% of their target.
        bounds: the four bound values re-evaluated at the returned point.
        fallback: whether the detection probability was pinned to one.
    """

    P_avg: float
    p_d: float
    energy_per_bit: float
    feasible: bool
    binding_constraints: List[str] = field(default_factory=list)
    bounds: Dict[str, float] = field(default_factory=dict)
    fallback: bool = False

    @property
    def energy_per_bit_db(self) -> float:
        return 10.0 * math.log10(self.energy_per_bit)


class EvaluatorPool:
    """Bound evaluators keyed by codebook power, shared across models.

    Cached bound terms depend only on the message-set sizes, the blocklength
    and the power, so every model in a sweep that agrees on those reuses them.
    """

    def __init__(self, M_a: int, log2_Ms: float, n: int,
                 search: ExponentSearchConfig = DEFAULT_SEARCH, P_max: float = math.inf,
                 seed: Optional[int] = None):
        self.M_a, self.log2_Ms, self.n = M_a, log2_Ms, n
        self.search = search
        self.P_max = P_max
        # every evaluator gets the same seed so q_t sampling is reproducible
        self.seed = seed
        self._pool: Dict[float, BoundEvaluator] = {}

    @classmethod
    def for_model(cls, model: CorrelationModel, n: int, search=DEFAULT_SEARCH,
                  seed: Optional[int] = None):
        return cls(model.M_a, model.log2_Ms, n, search, seed=seed)

    def matches(self, model: CorrelationModel, n: int, search) -> bool:
        return (model.M_a, model.log2_Ms, n, search) == (self.M_a, self.log2_Ms, self.n, self.search)

    def __call__(self, P_avg: float) -> BoundEvaluator:
        ev = self._pool.get(P_avg)
        if ev is None:
            cfg = ChannelConfig(self.n, P_avg, max(self.P_max, P_avg))
            ev = self._pool[P_avg] = BoundEvaluator(self.M_a, self.log2_Ms, cfg, self.search,
                                                    self.seed)
        return ev


def evaluate_constraints(model: CorrelationModel, pool: EvaluatorPool, P_avg: float,
                         which: Iterable[str] = CONSTRAINTS) -> Dict[str, float]:
    """Bound values of the requested constraints at ``(P_avg, model.p_d)``."""
    ev = pool(P_avg)
    which = set(which)
    out = {}
    if which & {"eps_s", "eps_fp"}:
        out["eps_s"], out["eps_fp"] = ev.no_alarm_bounds(model)
    if which & {"eps_a", "eps_sa"}:
        out["eps_a"], out["eps_sa"] = ev.alarm_bounds(model)
    return {k: v for k, v in out.items() if k in which}


def _meets(values: Dict[str, float], targets: ReliabilityTargets) -> bool:
    return all(v <= getattr(targets, k) for k, v in values.items())


def bisect_power(feasible: Callable[[float], bool], lo: float = P_BRACKET[0],
                 hi: float = P_BRACKET[1], tol: float = 1e-4) -> float:
    """Smallest feasible power, assuming feasibility is monotone in power.

    Returns ``lo`` when it is already feasible. The upper end is doubled until
    feasible; past ``2**40`` a ``RuntimeError`` is raised.
    """
    if feasible(lo):
        return lo
    while not feasible(hi):
        lo = hi
        hi *= 2.0
        if hi > P_CEILING:
            raise RuntimeError("no feasible power below 2**40; bracket expansion failed")
    while hi - lo >= tol * hi:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def bisect_detection(feasible: Callable[[float], bool], tol: float = 1e-6) -> Optional[float]:
    """Smallest feasible ``p_d`` in ``[0, 1]``, or ``None`` when ``p_d = 1`` fails."""
    if not feasible(1.0):
        return None
    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def energy_per_bit(model: CorrelationModel, n: int, P_avg: float) -> float:
    """``E_b/N_0 = n P' / (2 E[H(W_1^K)/K])`` as a linear ratio."""
    bits = mean_entropy_per_active_device(model)
    if not bits > 0:
        raise ValueError("mean entropy per active device is zero; energy per bit is undefined")
    return float(n * P_avg / (2.0 * bits))


def _binding(values: Dict[str, float], targets: ReliabilityTargets) -> List[str]:
    return [k for k in CONSTRAINTS
            if k in values and values[k] >= (1.0 - BINDING_MARGIN) * getattr(targets, k)]


def min_power(model: CorrelationModel, n: int, targets: ReliabilityTargets,
              search: ExponentSearchConfig = DEFAULT_SEARCH, tol: float = 1e-4,
              pd_tol: float = 1e-6, pool: Optional[EvaluatorPool] = None) -> OperatingPoint:
    """Minimum codebook power and detection probability meeting all four targets.

    The input ``model.p_d`` is ignored; the returned point carries the chosen
    one. No power cap is applied (the truncation term is zero).

    Args:
        model: activation model.
        n: blocklength.
        targets: reliability targets.
        search: exponent search settings.
        tol: relative bisection tolerance on the power.
        pd_tol: absolute bisection tolerance on the detection probability.
        pool: optional shared evaluator cache (must match ``model`` and ``n``).
    """
    if pool is None:
        pool = EvaluatorPool.for_model(model, n, search)
    elif not pool.matches(model, n, search):
        raise ValueError("evaluator pool was built for different message sets, n or search")

    def no_alarm_ok(P):
        return _meets(evaluate_constraints(model, pool, P, ("eps_s", "eps_fp")), targets)

    P_avg = bisect_power(no_alarm_ok, tol=tol)
    log.info("stage 1: P' = %.6g", P_avg)

    def alarm_ok_at(P):
        return lambda p_d: _meets(
            evaluate_constraints(model.replace(p_d=p_d), pool, P, ("eps_a", "eps_sa")), targets)

    p_d = bisect_detection(alarm_ok_at(P_avg), pd_tol)
    fallback = p_d is None
    if fallback:
        # p_d = 1 and raise the power; starting from the stage-1 power keeps
        # the no-alarm constraints satisfied
        p_d = 1.0
        stage1 = P_avg
        try:
            P_avg = bisect_power(lambda P: alarm_ok_at(P)(1.0), lo=stage1,
                                 hi=max(2.0 * stage1, P_BRACKET[1]), tol=tol)
        except RuntimeError:
            log.warning("fallback found no feasible power")
        log.info("fallback: p_d = 1, P' = %.6g", P_avg)
    else:
        log.info("stage 2: p_d = %.6g", p_d)

    chosen = model.replace(p_d=p_d)
    values = evaluate_constraints(chosen, pool, P_avg)
    feasible = _meets(values, targets)
    try:
        ebn0 = energy_per_bit(chosen, n, P_avg)
    except ValueError:
        ebn0 = math.inf
    return OperatingPoint(P_avg, p_d, ebn0, feasible, _binding(values, targets), values, fallback)


def min_power_uncorrelated(model: CorrelationModel, n: int, eps_s: float,
                           search: ExponentSearchConfig = DEFAULT_SEARCH, tol: float = 1e-4,
                           pool: Optional[EvaluatorPool] = None) -> OperatingPoint:
    """Reference point for uncorrelated devices (no alarm traffic).

    Only the standard-message error ``sum_K p_K(K) c(K) <= eps_s`` is imposed
    (no false-positive term), with ``K`` drawn from the no-alarm distribution.
    """
    if not 0.0 < eps_s < 1.0:
        raise ValueError(f"eps_s must lie in (0, 1), got {eps_s!r}")
    plain = model.replace(p_a=0.0, p_d=0.0)
    if pool is None:
        pool = EvaluatorPool.for_model(plain, n, search)

    def value(P):
        return pool(P).standard_only_bound(plain)

    P_avg = bisect_power(lambda P: value(P) <= eps_s, tol=tol)
    v = value(P_avg)
    binding = ["eps_s"] if v >= (1.0 - BINDING_MARGIN) * eps_s else []
    return OperatingPoint(P_avg, 0.0, energy_per_bit(plain, n, P_avg), v <= eps_s,
                          binding, {"eps_s": v})


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass
class TradeoffRow:
    p_d: float
    spectral_efficiency: float
    eps_a_bound: float
    eps_sa_bound: float


def calibrate_power(model: CorrelationModel, n: int, eps_s: float, eps_fp: float,
                    search: ExponentSearchConfig = DEFAULT_SEARCH, tol: float = 1e-4,
                    pool: Optional[EvaluatorPool] = None) -> float:
    """Smallest power meeting the standard-error and false-positive targets."""
    pool = pool or EvaluatorPool.for_model(model, n, search)

    def ok(P):
        v = evaluate_constraints(model, pool, P, ("eps_s", "eps_fp"))
        return v["eps_s"] <= eps_s and v["eps_fp"] <= eps_fp

    return bisect_power(ok, tol=tol)


def sweep_detection(model: CorrelationModel, n: int, P_avg: float, p_d_grid: Sequence[float],
                    search: ExponentSearchConfig = DEFAULT_SEARCH,
                    pool: Optional[EvaluatorPool] = None,
                    progress: Optional[Callable[[int, int], None]] = None,
                    tail_mass: float = SWEEP_TAIL_MASS) -> List[TradeoffRow]:
    """Spectral efficiency and alarm-error bound along a detection-probability sweep.

    Spectral efficiency is per active device and per channel use in the alarm
    world, ``E[H(W_1^K)/K | A] / n``. The K-sums are truncated at
    ``tail_mass``, which is also the resolution of the reported bounds.
    """
    pool = pool or EvaluatorPool.for_model(model, n, search)
    rows = []
    for i, p_d in enumerate(p_d_grid):
        m = model.replace(p_d=float(p_d))
        eps_a, eps_sa = pool(P_avg).alarm_bounds(m, tail_mass)
        rows.append(TradeoffRow(float(p_d), alarm_spectral_efficiency(m, n), eps_a, eps_sa))
        if progress:
            progress(i + 1, len(p_d_grid))
    return rows


def alarm_spectral_efficiency(model: CorrelationModel, n: int) -> float:
    """Per-device spectral efficiency during an alarm, ``E[H(W_1^K)/K | A] / n``."""
    return mean_entropy_per_active_device(model.replace(p_a=1.0)) / n


@dataclass
class PowerRow:
    N: int
    p_a: float
    P_avg: float
    p_d: float
    energy_per_bit: float
    feasible: bool
    fallback: bool
    binding: str
    P_avg_uncorrelated: float
    energy_per_bit_uncorrelated: float


def sweep_population(model: CorrelationModel, n: int, N_grid: Sequence[int],
                     p_a_grid: Sequence[float], targets: ReliabilityTargets,
                     search: ExponentSearchConfig = DEFAULT_SEARCH, tol: float = 1e-4,
                     progress: Optional[Callable[[int, int], None]] = None,
                     seed: Optional[int] = None) -> List[PowerRow]:
    """Minimum power and energy per bit over a device-count sweep.

    For each ``N`` the evaluator cache is shared across the ``p_a`` values,
    so the (identical) optimisation is only paid for once.
    """
    rows = []
    total = len(N_grid) * len(p_a_grid)
    done = 0
    for N in N_grid:
        base = model.replace(N=int(N))
        pool = EvaluatorPool.for_model(base, n, search, seed)
        ref = min_power_uncorrelated(base, n, targets.eps_s, search, tol, pool)
        for p_a in p_a_grid:
            op = min_power(base.replace(p_a=float(p_a)), n, targets, search, tol, pool=pool)
            rows.append(PowerRow(int(N), float(p_a), op.P_avg, op.p_d, op.energy_per_bit,
                                 op.feasible, op.fallback, "|".join(op.binding_constraints),
                                 ref.P_avg, ref.energy_per_bit))
            done += 1
            if progress:
                progress(done, total)
    return rows


def sweep_tradeoff(model: CorrelationModel, n: int, targets: ReliabilityTargets, *,
                   p_d_grid: Optional[Sequence[float]] = None,
                   N_grid: Optional[Sequence[int]] = None,
                   p_a_grid: Sequence[float] = (1.0,),
                   search: ExponentSearchConfig = DEFAULT_SEARCH, tol: float = 1e-4,
                   progress=None, seed: Optional[int] = None):
    """Either sweep: pass ``p_d_grid`` for the spectral-efficiency trade-off
    (power calibrated against ``targets.eps_s`` and ``targets.eps_fp``) or
    ``N_grid`` for the energy-per-bit curve.

    Returns ``(P_avg, rows)`` in the first mode and ``rows`` in the second.
    """
    if (p_d_grid is None) == (N_grid is None):
        raise ValueError("give exactly one of p_d_grid or N_grid")
    if p_d_grid is not None:
        pool = EvaluatorPool.for_model(model, n, search, seed)
        P_avg = calibrate_power(model, n, targets.eps_s, targets.eps_fp, search, tol, pool)
        return P_avg, sweep_detection(model, n, P_avg, p_d_grid, search, pool, progress)
    return sweep_population(model, n, N_grid, p_a_grid, targets, search, tol, progress, seed)
