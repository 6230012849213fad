"""Independent reference computations used by the test-suite.

None of these share code with the package: they enumerate the generative
process directly or evaluate in arbitrary precision.
"""

import itertools
import math

import mpmath
import numpy as np


def binom_pmf_mp(N, k, p, dps=50):
    """Binomial pmf in big-float arithmetic."""
    with mpmath.workdps(dps):
        p = mpmath.mpf(p)
        return float(mpmath.binomial(N, k) * p ** k * (1 - p) ** (N - k))


def chi2_tail_mp(n, ratio, dps=60):
    """``P[chi2_n > n * ratio]`` via mpmath's regularized incomplete gamma."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(n) / 2
        x = mpmath.mpf(n) * mpmath.mpf(ratio) / 2
        return float(mpmath.gammainc(a, x, mpmath.inf, regularized=True))


def _device_outcomes(M_a, M_s):
    # ("a", m) alarm message m, ("s", m) standard message m
    return [("a", m) for m in range(M_a)] + [("s", m) for m in range(M_s)]


def joint_message_pmf(p_a, p_d, p_s, N, K, M_a, M_s):
    """Joint pmf of (W_1..W_K) given devices 1..K active and K+1..N silent.

    Enumerates the alarm/no-alarm worlds, the common alarm message and every
    per-device outcome.
    """
    outcomes = _device_outcomes(M_a, M_s)
    silent_alarm = ((1 - p_d) * (1 - p_s)) ** (N - K)
    silent_plain = (1 - p_s) ** (N - K)
    table = {}
    for msgs in itertools.product(outcomes, repeat=K):
        prob = 0.0
        # alarm world: average over the common alarm message
        for w0 in range(M_a):
            pr = p_a / M_a * silent_alarm
            for kind, m in msgs:
                if kind == "a":
                    pr *= p_d if m == w0 else 0.0
                else:
                    pr *= (1 - p_d) * p_s / M_s
            prob += pr
        pr = (1 - p_a) * silent_plain
        for kind, m in msgs:
            pr *= 0.0 if kind == "a" else p_s / M_s
        prob += pr
        if prob > 0:
            table[msgs] = prob
    total = sum(table.values())
    return {k: v / total for k, v in table.items()} if total > 0 else {}


def joint_entropy_bruteforce(p_a, p_d, p_s, N, K, M_a, M_s):
    """``H(W_1^K | first K active)`` in bits by direct enumeration."""
    if K == 0:
        return 0.0
    pmf = joint_message_pmf(p_a, p_d, p_s, N, K, M_a, M_s)
    return -sum(p * math.log2(p) for p in pmf.values() if p > 0)


def conditional_entropy_bruteforce(p_a, p_d, p_s, N, K, k, M_a, M_s):
    """``H(W_k | W_1^{k-1})`` via ``H(W_1^k) - H(W_1^{k-1})`` on marginals."""
    pmf = joint_message_pmf(p_a, p_d, p_s, N, K, M_a, M_s)

    def marginal_entropy(length):
        if length == 0:
            return 0.0
        marg = {}
        for msgs, p in pmf.items():
            marg[msgs[:length]] = marg.get(msgs[:length], 0.0) + p
        return -sum(p * math.log2(p) for p in marg.values() if p > 0)

    return marginal_entropy(k) - marginal_entropy(k - 1)


def mean_entropy_per_active_bruteforce(p_a, p_d, p_s, N, M_a, M_s):
    """``E[H(W_1^K)/K]`` by enumerating every N-device outcome.

    Outcomes are grouped by the set of active devices; the entropy of the
    active devices' messages within each group is computed directly.
    """
    outcomes = [None] + _device_outcomes(M_a, M_s)
    groups = {}
    for world in ("alarm", "plain"):
        w_prob = p_a if world == "alarm" else 1 - p_a
        if w_prob == 0:
            continue
        alarm_msgs = range(M_a) if world == "alarm" else [None]
        for w0 in alarm_msgs:
            base = w_prob / (M_a if world == "alarm" else 1)
            for assign in itertools.product(outcomes, repeat=N):
                pr = base
                for o in assign:
                    if world == "alarm":
                        if o is None:
                            pr *= (1 - p_d) * (1 - p_s)
                        elif o[0] == "a":
                            pr *= p_d if o[1] == w0 else 0.0
                        else:
                            pr *= (1 - p_d) * p_s / M_s
                    else:
                        if o is None:
                            pr *= 1 - p_s
                        elif o[0] == "a":
                            pr *= 0.0
                        else:
                            pr *= p_s / M_s
                if pr == 0:
                    continue
                active = tuple(i for i, o in enumerate(assign) if o is not None)
                msgs = tuple(assign[i] for i in active)
                grp = groups.setdefault(active, {})
                grp[msgs] = grp.get(msgs, 0.0) + pr
    total = 0.0
    for active, table in groups.items():
        mass = sum(table.values())
        if not active:
            continue
        ent = -sum(p / mass * math.log2(p / mass) for p in table.values() if p > 0)
        total += mass * ent / len(active)
    return total


def wilson_halfwidth(p_hat, n, z=1.959963984540054):
    if n == 0:
        return 1.0
    denom = 1 + z * z / n
    return z * math.sqrt(p_hat * (1 - p_hat) / n + z * z / (4 * n * n)) / denom


def dense_grid_max(objective, x_grid, y_grid, chunk=200):
    """Exhaustive maximisation of ``objective(x, y)`` over a product grid."""
    best = -np.inf
    for i in range(0, len(x_grid), chunk):
        xs = np.asarray(x_grid[i:i + chunk])[:, None]
        vals = objective(xs, np.asarray(y_grid)[None, :])
        vals = np.where(np.isnan(vals), -np.inf, vals)
        best = max(best, float(np.max(vals)))
    return best


# --------------------------------------------------------------------------
# exponent objectives written out term by term (scalar-broadcast numpy)
# --------------------------------------------------------------------------

def _ln_half(x):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(x > 0, 0.5 * np.log(np.where(x > 0, x, 1.0)), np.nan)


def _f(k, a, P):
    return _ln_half(1 + 2 * k * P * a)


def _F(k, a, P):
    den = 1 + 2 * k * P * a
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, a / np.where(den > 0, den, 1.0), np.nan)


def alarm_objective_ref(rho, lam, K, Ka, Kap, M_a, n, P):
    beta = _F(Kap ** 2, lam, P)
    gamma = _F(Ka ** 2, rho * beta, P) - rho * lam
    psi = _F(K - Ka, gamma, P)
    xi = rho * _f(Kap ** 2, lam, P) + _f(Ka ** 2, rho * beta, P) + _f(K - Ka, gamma, P) + _f(1 / P, psi, P)
    return -rho / n * math.log(M_a - 1) + xi


def false_positive_objective_ref(rho, lam, K, Kap, M_a, n, P):
    beta = _F(Kap ** 2, lam, P) - lam
    gamma = _F(K, rho * beta, P)
    xi = rho * _f(Kap ** 2, lam, P) + _f(K, rho * beta, P) + _f(1 / P, gamma, P)
    return -rho / n * math.log(M_a) + xi


def multiplicity_objective_ref(lam, K, Ka, Kap, P):
    beta = _F((Ka - Kap) ** 2, lam, P) - lam
    gamma = _F(K - Ka, beta, P)
    return _f((Ka - Kap) ** 2, lam, P) + _f(K - Ka, beta, P) + _f(1 / P, gamma, P)


def standard_objective_ref(rho, rho1, t, K, log2_Ms, n, P):
    R1 = log2_Ms * math.log(2) / n - math.lgamma(t + 1) / (n * t)
    R2 = (math.lgamma(K + 1) - math.lgamma(t + 1) - math.lgamma(K - t + 1)) / n
    D = (P * t - 1) ** 2 + 4 * P * t * (1 + rho * rho1) / (1 + rho)
    lam = (P * t - 1 + np.sqrt(D)) / (4 * (1 + rho * rho1) * P * t)
    mu = rho * _F(t, lam, P)
    b = rho * lam - _F(t, mu, P)
    E0 = rho * rho1 * _f(t, lam, P) + rho1 * _f(t, mu, P) + _ln_half(1 - 2 * b * rho1)
    return -rho * rho1 * t * R1 - rho1 * R2 + E0
