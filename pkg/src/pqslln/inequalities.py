"""Weak-l_r norm plus empirical checks of two maximal inequalities.

* Marcus-Pisier: ``P(||V||_{r,inf} > u) <= (2e/u^r) sup_t t^r sum_k P(|V_k| > t)``.
* Weighted-sum bounds for symmetric i.i.d. ``V_n`` with ``a_n = 1/n^2``,
  ``b_n = sum_{k >= n} a_k``, ``L = sup_n b_n |V_n|^q`` and
  ``R = sum_n a_n |S_n|^q``: ``P(L > t) <= 2 P(R > t/alpha)`` and
  ``E L <= 2 alpha E R``, where ``alpha = 2^{1-q}`` for ``q <= 1`` and 1 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .montecarlo import _rng
from .tailmodel import DistributionSpec, as_fraction, sample

__all__ = [
    "BoundCheckResult",
    "weak_norm",
    "weak_norms",
    "weighted_tail_sup",
    "marcus_pisier_check",
    "hj_series_check",
    "hj_smoke_check",
    "hj_constants",
]

SLACK_SE = 3.0
GRID_POINTS = 16
SUP_GRID = 10_000


@dataclass
class BoundCheckResult:
    check: str
    trials: int
    violations: int
    max_ratio: float
    params: dict
    rows: list[dict] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "trials": self.trials,
            "violations": self.violations,
            "max_ratio": self.max_ratio,
            "params": self.params,
            "rows": self.rows,
            "error": self.error,
        }


def weak_norm(a, s) -> float:
    """``sup_k k^{1/s} a*_k`` over the nonincreasing rearrangement of ``|a|``; 0 when empty."""
    s = float(as_fraction(s))
    if s < 1:
        raise ValueError("weak norm order must be >= 1")
    x = np.sort(np.abs(np.asarray(a, dtype=float)))[::-1]
    if x.size == 0:
        return 0.0
    k = np.arange(1, x.size + 1, dtype=float)
    return float(np.max(k ** (1.0 / s) * x))


def weak_norms(rows: np.ndarray, s) -> np.ndarray:
    """Row-wise :func:`weak_norm` of a 2-d array."""
    s = float(as_fraction(s))
    if s < 1:
        raise ValueError("weak norm order must be >= 1")
    x = -np.sort(-np.abs(rows), axis=1)
    k = np.arange(1, x.shape[1] + 1, dtype=float)
    return np.max(x * k ** (1.0 / s), axis=1)


def _sup_finite(spec: DistributionSpec, s: Fraction) -> bool:
    if spec.bounded:
        return True
    a = spec.tail_asym
    if a is None:
        raise ValueError(f"{spec.label}: cannot decide whether sup_t t^s P(|X| > t) is finite")
    if s != a.t_exp:
        return s < a.t_exp
    return (a.log_exp, a.loglog_exp) >= (0, 0)


def weighted_tail_sup(spec: DistributionSpec, s) -> float:
    """``sup_{t > 0} t^s P(|X| > t)``; ``inf`` when it diverges."""
    s = as_fraction(s)
    if not _sup_finite(spec, s):
        return math.inf
    sf = float(s)
    if spec.name == "pareto":
        # t^s min(1, t^-alpha) peaks at t = 1 for s < alpha and is flat beyond for s = alpha
        return 1.0
    if spec.bounded:
        b = spec.support_bound
        return 0.0 if b == 0 else b**sf * spec.tail(np.nextafter(b, 0.0))
    a = spec.tail_asym
    g = lambda x: math.exp(sf * x) * spec.tail(math.exp(x))
    lo = math.log(min([1e-3, *[b for b in spec.breakpoints if b > 0]]))
    hi = math.log(1e12)
    xs = np.linspace(lo, hi, SUP_GRID)
    vals = np.array([g(x) for x in xs])
    i = int(np.argmax(vals))
    best = float(vals[i])
    a_lo, a_hi = xs[max(i - 1, 0)], xs[min(i + 1, SUP_GRID - 1)]
    if a_hi > a_lo:
        r = minimize_scalar(lambda x: -g(x), bounds=(a_lo, a_hi), method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(r.fun))
    # jumps of the tail: its left limit can carry the sup
    for b in spec.breakpoints:
        if b > 0:
            best = max(best, b**sf * spec.tail(np.nextafter(b, 0.0)))
    if s == a.t_exp and a.log_exp == 0 and a.loglog_exp == 0:
        best = max(best, a.scale)
    return best


def marcus_pisier_check(spec: DistributionSpec, n: int, s, u_grid=None, trials: int = 10_000, seed: int = 0) -> BoundCheckResult:
    """Empirical frequency of ``||V||_{s,inf} > u`` against ``(2e/u^s) n sup_t t^s P(|X| > t)``."""
    s = as_fraction(s)
    params = {"spec": spec.label, "n": n, "s": str(s), "seed": seed}
    sup = weighted_tail_sup(spec, s)
    if not math.isfinite(sup):
        return BoundCheckResult("marcus_pisier", trials, 0, math.nan, params, error="sup_t t^s P(|X| > t) is infinite")
    V = np.vstack([sample(spec, _rng(seed, i), n) for i in range(trials)])
    W = weak_norms(V, s)
    if u_grid is None:
        pos = W[W > 0]
        lo, hi = (np.quantile(pos, [0.10, 0.999]) if pos.size else (1.0, 2.0))
        u_grid = np.geomspace(lo, max(hi, lo * 1.01), GRID_POINTS)
    rows, violations, max_ratio = [], 0, 0.0
    for u in u_grid:
        u = float(u)
        lhs = float(np.mean(W > u))
        rhs = 2.0 * math.e * n * sup / u ** float(s)
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        bad = lhs > rhs
        violations += bad
        max_ratio = max(max_ratio, ratio)
        rows.append({"u": u, "lhs": lhs, "rhs": rhs, "violation": bool(bad)})
    params["sup_weighted_tail"] = sup
    return BoundCheckResult("marcus_pisier", trials, violations, max_ratio, params, rows)


def hj_constants(q) -> tuple[float, float]:
    q = as_fraction(q)
    qf = float(q)
    return (2.0 ** (1.0 - qf), 1.0) if q <= 1 else (1.0, 2.0 ** (qf - 1.0))


def _weights(N: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, N + 1, dtype=float)
    a = 1.0 / n**2
    # b_n = sum_{k=n}^N a_k, summed from the small end
    b = np.cumsum(a[::-1])[::-1]
    return a, b


def _hj_statistics(spec: DistributionSpec, q, N: int, trials: int, seed: int):
    if not spec.symmetric:
        raise ValueError(f"{spec.label} is not symmetric")
    qf = float(as_fraction(q))
    a, b = _weights(N)
    L = np.empty(trials)
    R = np.empty(trials)
    for i in range(trials):
        v = sample(spec, _rng(seed, i), N)
        L[i] = np.max(b * np.abs(v) ** qf)
        R[i] = np.dot(a, np.abs(np.cumsum(v)) ** qf)
    return L, R


def _excess(d: np.ndarray) -> tuple[float, float]:
    """Mean of a paired difference and its standard error."""
    m = float(np.mean(d))
    se = float(np.std(d, ddof=1) / math.sqrt(d.size)) if d.size > 1 else 0.0
    return m, se


def _t_grid(x: np.ndarray) -> np.ndarray:
    pos = x[x > 0]
    if pos.size == 0:
        return np.array([1.0])
    lo, hi = np.quantile(pos, [0.10, 0.999])
    return np.geomspace(lo, max(hi, lo * 1.01), GRID_POINTS)


def hj_series_check(spec: DistributionSpec, q, N: int = 1024, trials: int = 4000, seed: int = 0) -> BoundCheckResult:
    """Probability bound on a t-grid and the expectation bound, 3-SE slack each."""
    q = as_fraction(q)
    alpha, _ = hj_constants(q)
    L, R = _hj_statistics(spec, q, N, trials, seed)
    rows, violations, max_ratio = [], 0, 0.0
    for t in _t_grid(L):
        t = float(t)
        ind_l = (L > t).astype(float)
        ind_r = (R > t / alpha).astype(float)
        m, se = _excess(ind_l - 2.0 * ind_r)
        lhs, rhs = float(ind_l.mean()), 2.0 * float(ind_r.mean())
        bad = m > SLACK_SE * se if se > 0 else m > 0
        violations += bad
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        max_ratio = max(max_ratio, ratio)
        rows.append({"bound": "probability", "t": t, "lhs": lhs, "rhs": rhs, "violation": bool(bad)})
    m, se = _excess(L - 2.0 * alpha * R)
    lhs, rhs = float(L.mean()), 2.0 * alpha * float(R.mean())
    bad = m > SLACK_SE * se if se > 0 else m > 0
    violations += bad
    if rhs > 0:
        max_ratio = max(max_ratio, lhs / rhs)
    rows.append({"bound": "expectation", "lhs": lhs, "rhs": rhs, "violation": bool(bad)})
    params = {"spec": spec.label, "q": str(q), "N": N, "seed": seed, "alpha": alpha}
    return BoundCheckResult("hj_series", trials, violations, max_ratio, params, rows)


def hj_smoke_check(spec: DistributionSpec, q, N: int = 256, trials: int = 2000, seed: int = 0) -> BoundCheckResult:
    """Single-configuration check of the three-term tail bound and the t0 expectation bound.

    ``P(R > s+t+u) <= P(L > s/beta^2) + 4 P(R > u/(alpha beta)) P(R > t/(alpha beta^2))``
    on a small (s, t, u) grid, and ``E R <= 6 (alpha+beta)^3 (E L + t0)`` with
    ``t0 = inf{t : P(R > t) <= 1 / (24 (alpha+beta)^3)}``.
    """
    q = as_fraction(q)
    alpha, beta = hj_constants(q)
    L, R = _hj_statistics(spec, q, N, trials, seed)
    rows, violations, max_ratio = [], 0, 0.0
    level = 1.0 / (24.0 * (alpha + beta) ** 3)
    # empirical t0: smallest t with P(R > t) <= level
    Rs = np.sort(R)
    k = math.ceil(trials * (1.0 - level)) - 1
    t0 = float(Rs[min(max(k, 0), trials - 1)])
    well_defined = math.isfinite(t0) and float(np.mean(R > t0)) <= level
    grid = np.quantile(R, [0.25, 0.5, 0.75, 0.9]) if np.any(R > 0) else np.array([1.0])
    for s_ in grid:
        for t_ in grid:
            for u_ in grid:
                lhs_i = (R > s_ + t_ + u_).astype(float)
                r1 = (L > s_ / beta**2).astype(float)
                pu = float(np.mean(R > u_ / (alpha * beta)))
                pt = float(np.mean(R > t_ / (alpha * beta**2)))
                # the product term is not a per-trial mean, so compare with binomial SEs
                lhs, rhs = float(lhs_i.mean()), float(r1.mean()) + 4.0 * pu * pt
                se = math.sqrt(max(lhs * (1 - lhs), 1.0 / trials) / trials) + math.sqrt(max(r1.mean() * (1 - r1.mean()), 1.0 / trials) / trials)
                bad = lhs - rhs > SLACK_SE * se
                violations += bad
                if rhs > 0:
                    max_ratio = max(max_ratio, lhs / rhs)
                rows.append({"bound": "three_term", "s": float(s_), "t": float(t_), "u": float(u_), "lhs": lhs, "rhs": rhs, "violation": bool(bad)})
    c = 6.0 * (alpha + beta) ** 3
    m, se = _excess(R - c * L)
    lhs, rhs = float(R.mean()), c * (float(L.mean()) + t0)
    bad = (m - c * t0) > SLACK_SE * se
    violations += bad
    rows.append({"bound": "expectation_t0", "lhs": lhs, "rhs": rhs, "t0": t0, "violation": bool(bad)})
    if rhs > 0:
        max_ratio = max(max_ratio, lhs / rhs)
    params = {"spec": spec.label, "q": str(q), "N": N, "seed": seed, "alpha": alpha, "beta": beta, "t0_well_defined": well_defined}
    return BoundCheckResult("hj_smoke", trials, violations, max_ratio, params, rows)
