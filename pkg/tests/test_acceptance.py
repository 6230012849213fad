"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed in the "acceptance criteria" section of the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from alarm_access.bounds import ChannelConfig, eps_bounds, p0
from alarm_access.cli import main
from alarm_access.model import (
    CorrelationModel,
    joint_entropy,
    p_k_given_alarm,
    p_k_given_no_alarm,
    p_ka_given_k,
    spectral_efficiency,
)
from alarm_access.optimizer import (
    SWEEP_TAIL_MASS,
    EvaluatorPool,
    ReliabilityTargets,
    evaluate_constraints,
    min_power,
    min_power_uncorrelated,
    sweep_tradeoff,
)
from alarm_access.simulator import run_campaign, wilson_halfwidth
from oracles import chi2_tail_mp, joint_entropy_bruteforce

# full-scale setting shared by the sweep criteria
BLOCK = 30_000
LARGE = dict(p_s=0.01, M_a=2 ** 3, M_s=2 ** 100)
FULL_TARGETS = ReliabilityTargets(eps_a=1e-5, eps_s=1e-1, eps_sa=1e-1, eps_fp=1e-5)
TOL = 1e-4


def to_db(x):
    return 10.0 * math.log10(x)


# -- 1 ---------------------------------------------------------------------------

def test_entropy_collapse(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for p_a, p_d in ((0.0, 0.5), (0.5, 0.0), (0.0, 0.0)):
        model = CorrelationModel(p_a, p_d=p_d, N=1000, **LARGE)
        for K in (1, 10, 100):
            want = K * 100 / BLOCK
            got = spectral_efficiency(model, K, BLOCK)
            worst = max(worst, abs(got - want) / want)
    at_ten = spectral_efficiency(CorrelationModel(0.0, 0.01, 0.5, 1000, 8, 2 ** 100), 10, BLOCK)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and abs(at_ten - 1 / 30) < 1e-9 / 30 and elapsed < 1.0
    acceptance(1, ok, f"entropy collapse: worst rel err {worst:.2e} (< 1e-9), "
                      f"S(K=10) = {at_ten:.12f}, {elapsed:.2f} s (< 1 s)")
    assert ok


# -- 2 ---------------------------------------------------------------------------

def test_entropy_matches_enumeration(acceptance):
    start = time.perf_counter()
    worst, compared, impossible = 0.0, 0, 0
    grid = [(p_a, p_d, p_s) for p_a in (0.1, 0.5, 1.0) for p_d in (0.0, 0.5, 1.0)
            for p_s in np.linspace(0.1, 0.9, 9)]
    assert len(grid) == 81
    for N in range(1, 5):
        for M_a in (1, 2):
            for M_s in range(1, 5):
                for p_a, p_d, p_s in grid:
                    model = CorrelationModel(p_a, float(p_s), p_d, N, M_a, M_s)
                    for K in range(1, N + 1):
                        want = joint_entropy_bruteforce(p_a, p_d, p_s, N, K, M_a, M_s)
                        try:
                            got = joint_entropy(model, K)
                        except ValueError:
                            # K active devices cannot happen here (p_a = p_d = 1, K < N)
                            impossible += 1
                            assert p_a == 1.0 and p_d == 1.0 and K < N
                            continue
                        worst = max(worst, abs(got - want))
                        compared += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 10.0
    acceptance(2, ok, f"entropy vs enumeration: {compared} cases on the 81-point grid, "
                      f"max |err| {worst:.2e} bits (< 1e-9), {impossible} zero-probability "
                      f"cases skipped, {elapsed:.1f} s (< 10 s)")
    assert ok


# -- 3 ---------------------------------------------------------------------------

def test_distributions_normalised(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for draw in range(100):
        N = 20_000 if draw < 5 else int(rng.integers(1, 20_001))
        p_s, p_d = rng.uniform(0.0, 1.0, size=2)
        if p_s + p_d == 0.0:
            p_s = 0.5
        model = CorrelationModel(float(rng.uniform()), float(p_s), float(p_d), N)
        ks = np.arange(N + 1)
        K = int(rng.integers(1, N + 1))
        sums = (p_k_given_alarm(model, ks).sum(), p_k_given_no_alarm(model, ks).sum(),
                p_ka_given_k(model, K, np.arange(K + 1)).sum())
        worst = max(worst, *(abs(s - 1.0) for s in sums))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 5.0
    acceptance(3, ok, f"pmf normalisation: 100 draws (N up to 20000), max |sum - 1| "
                      f"{worst:.2e} (< 1e-12), {elapsed:.2f} s (< 5 s)")
    assert ok


# -- 4 ---------------------------------------------------------------------------

def test_power_truncation_term(acceptance):
    small = p0(ChannelConfig(2, 1.0, 1.0))
    err_small = abs(small - math.exp(-1.0))
    worst = 0.0
    for P_avg, P_max in ((1.0, 1.01), (0.5, 0.51), (0.01, 0.0102), (1.0, 1.02), (1.0, 1.005)):
        got = p0(ChannelConfig(BLOCK, P_avg, P_max))
        want = chi2_tail_mp(BLOCK, P_max / P_avg)
        worst = max(worst, abs(got - want) / want)
    ok = err_small < 1e-12 and worst < 1e-10
    acceptance(4, ok, f"power truncation: n=2 gives e^-1 to {err_small:.1e} (< 1e-12), "
                      f"n=30000 max rel err {worst:.1e} vs multiprecision (< 1e-10)")
    assert ok


# -- 5 ---------------------------------------------------------------------------

# fixed before looking at any result; N <= 8, n <= 400, M_a <= 4, M_s <= 8
TOY_CONFIGS = [
    (CorrelationModel(1.0, 0.2, 0.8, 6, 2, 8), ChannelConfig(200, 1.0)),
    (CorrelationModel(0.5, 0.2, 0.8, 6, 2, 8), ChannelConfig(200, 1.0)),
    (CorrelationModel(0.5, 0.3, 0.5, 8, 4, 8), ChannelConfig(300, 0.5, 0.6)),
    (CorrelationModel(0.5, 0.25, 0.6, 4, 2, 4), ChannelConfig(100, 0.3)),
    (CorrelationModel(0.3, 0.1, 0.9, 8, 4, 8), ChannelConfig(400, 0.2)),
]


def test_simulator_dominated_by_bounds(acceptance):
    start = time.perf_counter()
    failures, checked, closest = [], 0, -math.inf
    for i, (model, cfg) in enumerate(TOY_CONFIGS):
        tally = run_campaign(model, cfg, 10_000, seed=100 + i)
        bounds = eps_bounds(model, cfg).as_dict()
        rates, dens = tally.rates(), tally.denominators()
        for key, bound in bounds.items():
            if dens[key] == 0:
                continue
            slack = bound + wilson_halfwidth(rates[key], dens[key]) - rates[key]
            closest = max(closest, -slack)
            checked += 1
            if slack < 0:
                failures.append(f"config {i} {key}: {rates[key]:.3g} > {bound:.3g}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300.0
    detail = "; ".join(failures) if failures else f"smallest margin {-closest:.2e}"
    acceptance(5, ok, f"simulator domination: {len(TOY_CONFIGS)} configs x 1e4 trials, "
                      f"{checked} rate/bound pairs, {detail}, {elapsed:.0f} s (< 300 s)")
    assert ok


# -- 6 ---------------------------------------------------------------------------

def test_tradeoff_shape(acceptance):
    start = time.perf_counter()
    model = CorrelationModel(1.0, p_d=0.0, N=1000, **LARGE)
    grid = [0.0, 0.0005, 0.001, 0.002, 0.003, 0.005, 0.0075, 0.01, 0.015, 0.02, 0.03,
            0.05, 0.1, 0.2, 0.5, 1.0]
    # only the standard-error and false-positive targets calibrate the power
    P_avg, rows = sweep_tradeoff(model, BLOCK, FULL_TARGETS, p_d_grid=grid, tol=TOL)
    eps_a = [r.eps_a_bound for r in rows]
    eff = [r.spectral_efficiency for r in rows]
    slack = 10 * SWEEP_TAIL_MASS
    alarm_monotone = all(b <= a + slack for a, b in zip(eps_a, eps_a[1:]))
    eff_monotone = all(b <= a for a, b in zip(eff, eff[1:]))
    endpoint = eps_a[0] == 1.0 and eff[0] == max(eff)
    elapsed = time.perf_counter() - start
    ok = alarm_monotone and eff_monotone and endpoint and elapsed < 600.0
    acceptance(6, ok, f"trade-off sweep: P'={P_avg:.4g}, alarm bound non-increasing "
                      f"{alarm_monotone} ({eps_a[0]:.3g} -> {eps_a[-1]:.3g}), efficiency "
                      f"non-increasing {eff_monotone} ({eff[0]:.4g} -> {eff[-1]:.3g}), p_d=0 "
                      f"endpoint bound 1 at max efficiency {endpoint}, {elapsed:.0f} s (< 600 s)")
    assert ok


# -- 7 and 8 share one optimisation per N ------------------------------------------

POPULATIONS = (500, 1000, 1500, 2000)
ALARM_RATES = (0.25, 0.5, 1.0)
SOLID_ALARM_RATE = 0.01


@pytest.fixture(scope="module")
def power_curve():
    out = {}
    for N in POPULATIONS:
        model = CorrelationModel(SOLID_ALARM_RATE, p_d=0.0, N=N, **LARGE)
        pool = EvaluatorPool.for_model(model, BLOCK)
        start = time.perf_counter()
        op = min_power(model, BLOCK, FULL_TARGETS, tol=TOL, pool=pool)
        elapsed = time.perf_counter() - start
        ref = min_power_uncorrelated(model, BLOCK, FULL_TARGETS.eps_s, tol=TOL, pool=pool)
        variants = {p_a: min_power(model.replace(p_a=p_a), BLOCK, FULL_TARGETS, tol=TOL, pool=pool)
                    for p_a in ALARM_RATES}
        out[N] = dict(model=model, op=op, ref=ref, variants=variants, seconds=elapsed)
    return out


def test_energy_per_bit_curve(acceptance, power_curve):
    gaps, invariant = [], True
    for N, res in power_curve.items():
        gaps.append(abs(to_db(res["op"].energy_per_bit) - to_db(res["ref"].energy_per_bit)))
        points = {(v.P_avg, v.p_d) for v in res["variants"].values()}
        points.add((res["op"].P_avg, res["op"].p_d))
        invariant &= len(points) == 1
    ok = max(gaps) <= 0.5 and invariant
    summary = ", ".join(
        f"N={N}: {to_db(r['op'].energy_per_bit):.3f} vs {to_db(r['ref'].energy_per_bit):.3f} dB"
        for N, r in power_curve.items())
    acceptance(7, ok, f"energy per bit: correlated (p_a={SOLID_ALARM_RATE}) vs uncorrelated "
                      f"max gap {max(gaps):.3f} dB (<= 0.5) [{summary}]; (P', p_d) identical "
                      f"across p_a in {ALARM_RATES}: {invariant}")
    assert ok


def test_optimizer_soundness(acceptance, power_curve):
    problems, slowest = [], 0.0
    for N, res in power_curve.items():
        op, model = res["op"], res["model"]
        slowest = max(slowest, res["seconds"])
        chosen = model.replace(p_d=op.p_d)
        # a fresh pool so nothing cached during the search is reused
        values = evaluate_constraints(chosen, EvaluatorPool.for_model(chosen, BLOCK), op.P_avg)
        if not all(values[k] <= t for k, t in FULL_TARGETS.as_dict().items()):
            problems.append(f"N={N} infeasible {values}")
        lower = op.P_avg * (1 - 10 * TOL)
        values = evaluate_constraints(chosen, EvaluatorPool.for_model(chosen, BLOCK), lower)
        if all(values[k] <= t for k, t in FULL_TARGETS.as_dict().items()):
            problems.append(f"N={N} still feasible at P'(1-10 tol)")
    ok = not problems and slowest < 120.0
    detail = "; ".join(problems) if problems else "all points feasible and minimal"
    acceptance(8, ok, f"optimizer soundness: {len(power_curve)} points, {detail}, "
                      f"slowest {slowest:.0f} s (< 120 s)")
    assert ok


# -- 9 ---------------------------------------------------------------------------

def test_simulate_deterministic(acceptance, tmp_path, capsys):
    outputs = []
    for run_id in range(2):
        path = tmp_path / f"report{run_id}.json"
        code = main(["simulate", "--seed", "2024", "--out", str(path)])
        capsys.readouterr()
        assert code == 0
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1]
    acceptance(9, ok, f"simulate determinism: two runs with seed 2024 byte-identical "
                      f"({len(outputs[0])} bytes)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
