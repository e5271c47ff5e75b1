"""Exact convergence calculus for log-power integrals and series.

Everything here works on exponent triples ``(alpha, beta, gamma)`` standing
for ``t^-alpha (ln t)^-beta (ln ln t)^-gamma``; constants never matter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .tailmodel import DistributionSpec, LogPowerAsym, as_fraction

__all__ = [
    "Verdict",
    "LogPowerExponents",
    "converges",
    "integral_condition_exponents",
    "moment_finite",
    "qp_series_exponents",
    "truncmean_series",
]


class Verdict(str, enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    UNKNOWN = "Unknown"
    FINITE = "Finite"
    INFINITE = "Infinite"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LogPowerExponents:
    alpha: Fraction
    beta: Fraction = Fraction(0)
    gamma: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))

    def as_tuple(self) -> tuple[str, str, str]:
        return (str(self.alpha), str(self.beta), str(self.gamma))


def converges(e: LogPowerExponents) -> Verdict:
    """Bertrand test for ``int^inf dt / (t^a (ln t)^b (ln ln t)^c)``."""
    if e.alpha != 1:
        return Verdict.CONVERGES if e.alpha > 1 else Verdict.DIVERGES
    if e.beta != 1:
        return Verdict.CONVERGES if e.beta > 1 else Verdict.DIVERGES
    return Verdict.CONVERGES if e.gamma > 1 else Verdict.DIVERGES


def integral_condition_exponents(asym: LogPowerAsym, p, q) -> LogPowerExponents:
    """Exponents of ``P^{q/p}(|X|^q > t) = P^{q/p}(|X| > t^{1/q})`` at infinity."""
    p, q = as_fraction(p), as_fraction(q)
    if not 1 <= q < p:
        raise ValueError(f"integral condition needs 1 <= q < p, got p={p}, q={q}")
    k = q / p
    # ln(t^{1/q}) = ln(t)/q and ln ln(t^{1/q}) ~ ln ln t: only constants change
    return LogPowerExponents(asym.t_exp / p, k * asym.log_exp, k * asym.loglog_exp)


def moment_finite(asym: LogPowerAsym, s, delta=0) -> Verdict:
    """Whether ``E|X|^s ln^delta(1 + |X|)`` is finite for a tail ``~ asym``."""
    s, delta = as_fraction(s), as_fraction(delta)
    if s <= 0:
        raise ValueError("moment order must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if s != asym.t_exp:
        return Verdict.FINITE if s < asym.t_exp else Verdict.INFINITE
    # integrand s t^{s-1} ln^delta t * tail(t) ~ t^-1 (ln t)^{delta - a} (ln ln t)^-b
    ok = converges(LogPowerExponents(1, asym.log_exp - delta, asym.loglog_exp))
    return Verdict.FINITE if ok is Verdict.CONVERGES else Verdict.INFINITE


def qp_series_exponents(asym: LogPowerAsym, p) -> Verdict:
    """Verdict for ``sum_n (1/n) int_{min(u_n^p, n)}^n P(|X|^p > t) dt``.

    Rule for tail index equal to p (log exponents a, b): the inner integral
    behaves like ``a (ln n)^-a (ln ln n)^{1-b}`` because ``ln n - ln u_n^p ~
    a ln ln n``, so the series is the Bertrand triple ``(1, a, b - 1)``.
    Derived, not proven; cross-checked numerically by
    :func:`pqslln.criteria.qp_series_numeric`.
    """
    p = as_fraction(p)
    if moment_finite(asym, p, 0) is not Verdict.FINITE:
        raise ValueError("qp series is only defined here when E|X|^p < inf")
    if asym.t_exp > p:
        return Verdict.CONVERGES
    a, b = asym.log_exp, asym.loglog_exp
    # E|X|^p < inf with t_exp == p forces a >= 1, so ln n - ln u_n^p ~ a ln ln n
    return converges(LogPowerExponents(1, a, b - 1))


def truncmean_series(spec: DistributionSpec, q) -> Verdict:
    """Verdict for ``sum_n |E X 1{|X| <= n}|^q / n``; UNKNOWN without asymptotics."""
    q = as_fraction(q)
    if q < 1:
        raise ValueError("q must be >= 1")
    if spec.symmetric:
        return Verdict.CONVERGES
    tma = spec.trunc_mean_asym
    if tma is None:
        return Verdict.UNKNOWN
    return converges(LogPowerExponents(1, tma.log_exp * q, tma.loglog_exp * q))
