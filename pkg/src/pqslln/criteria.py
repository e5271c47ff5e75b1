"""Criterion tables for SLLN(p, q) on the real line and the expectation series.

Each condition is decided symbolically from the law's declared asymptotics
when possible and otherwise by a numeric block-sum probe
(:func:`classify_partial_sums`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import bertrand
from .bertrand import LogPowerExponents, Verdict
from .tailmodel import DistributionSpec, as_fraction, quantile, truncated_mean

__all__ = [
    "Regime",
    "UnsupportedRegime",
    "MissingMeanDeclaration",
    "ConditionVerdict",
    "CriterionReport",
    "SeriesProbe",
    "detect_regime",
    "classify_slln",
    "classify_mean_series",
    "classify_partial_sums",
    "qp_series_numeric",
    "integral_condition_numeric",
    "moment_numeric",
    "truncmean_series_numeric",
    "REGIME_CONDITIONS",
    "MEAN_SERIES_CONDITIONS",
]

OPEN_PROBLEM_NOTE = (
    "no necessary-and-sufficient criterion is known for 0 < q < 1 "
    "(open problem); supported range is 0 < p < 2, q >= 1"
)


class Regime(str, enum.Enum):
    Q_LT_P = "Q_LT_P"
    Q_EQ_P_GT1 = "Q_EQ_P_GT1"
    Q_GT_P_P_GT1 = "Q_GT_P_P_GT1"
    P_EQ_Q_EQ_1 = "P_EQ_Q_EQ_1"
    P1_Q_GT1 = "P1_Q_GT1"
    P_LT1 = "P_LT1"
    UNSUPPORTED = "Unsupported"


class UnsupportedRegime(ValueError):
    pass


class MissingMeanDeclaration(ValueError):
    pass


HOLDS, FAILS, INCONCLUSIVE = "Holds", "Fails", "Inconclusive"
SYMBOLIC, DERIVED, NUMERIC = "Symbolic", "Symbolic-Derived", "Numeric"

# condition names per regime, in report order
REGIME_CONDITIONS: dict[Regime, tuple[str, ...]] = {
    Regime.Q_LT_P: ("mean_zero", "integral_condition"),
    Regime.Q_EQ_P_GT1: ("mean_zero", "moment_p", "qp_series"),
    Regime.Q_GT_P_P_GT1: ("mean_zero", "moment_p"),
    Regime.P_EQ_Q_EQ_1: ("mean_zero", "truncmean_series", "qp_series"),
    Regime.P1_Q_GT1: ("mean_zero", "truncmean_series"),
    Regime.P_LT1: ("moment_p",),
}

MEAN_SERIES_CONDITIONS: dict[Regime, tuple[str, ...]] = {
    Regime.Q_LT_P: ("mean_zero", "integral_condition"),
    Regime.Q_EQ_P_GT1: ("mean_zero", "moment_p_log"),
    Regime.P_EQ_Q_EQ_1: ("mean_zero", "moment_p_log"),
    Regime.Q_GT_P_P_GT1: ("mean_zero", "moment_q"),
    Regime.P1_Q_GT1: ("mean_zero", "moment_q"),
    Regime.P_LT1: ("moment_q",),
}

Q_GT_P_NOTE = (
    "q > p: the expectation series is decided by E X = 0 and E|X|^q < inf; "
    "E|X|^p < inf alone is not sufficient in this regime"
)


def detect_regime(p, q) -> Regime:
    p, q = as_fraction(p), as_fraction(q)
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    if q < 1 or p >= 2:
        return Regime.UNSUPPORTED
    if p < 1:
        return Regime.P_LT1
    if p == 1:
        return Regime.P_EQ_Q_EQ_1 if q == 1 else Regime.P1_Q_GT1
    if q < p:
        return Regime.Q_LT_P
    return Regime.Q_EQ_P_GT1 if q == p else Regime.Q_GT_P_P_GT1


# ---------------------------------------------------------------------------
# numeric block-sum probe

# classification thresholds; see classify_partial_sums. Per level
# (rate, log, loglog): decide beyond MARGIN, pass to the next level within TIE
# of the boundary, Inconclusive in between.
MARGIN = (0.05, 0.1, 0.3)
TIE = (0.003, 0.006)
DRIFT_ABS = (0.01, 0.05, 0.3)
DRIFT_REL = 0.1
MIN_FIT_BLOCKS = 12
LEVELS = ("rate", "log", "loglog")


@dataclass
class SeriesProbe:
    """Dyadic block sums ``B_j = sum_{2^(j-1) < n <= 2^j} term(n)`` and their verdict.

    ``fits`` records, per decision level, the boundary deviation estimated on
    each fit window (see :func:`classify_partial_sums`).
    """

    term_rule: str
    block_sums: list[float]
    ratio: float
    loglog_slope: float
    fits: list[dict]
    classification: str
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "term_rule": self.term_rule,
            "block_sums": self.block_sums,
            "ratio": self.ratio,
            "loglog_slope": self.loglog_slope,
            "fits": self.fits,
            "classification": self.classification,
            "reason": self.reason,
        }


def _block_sums(terms: Callable[[float], float], J: int, evals: int) -> np.ndarray:
    out = np.empty(J)
    for j in range(1, J + 1):
        lo, hi = 2 ** (j - 1) + 1, 2**j
        if hi - lo + 1 <= evals:
            vals = [terms(n) for n in range(lo, hi + 1)]
            total = math.fsum(vals)
        else:
            # trapezoid in s = ln x over the block's continuous footprint
            s = np.linspace(math.log(lo - 0.5), math.log(hi + 0.5), evals)
            x = np.exp(s)
            vals = [terms(float(v)) for v in x]
            total = float(np.trapezoid(np.asarray(vals) * x, s))
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite term in block {j}")
        if any(v < 0 for v in vals):
            raise ValueError(f"negative term in block {j}")
        out[j - 1] = total
    return out


def _level_deviation(B: np.ndarray, j_lo: int, level: int) -> float:
    """Least-squares boundary deviation of one decay exponent on blocks ``j >= j_lo``.

    Model ``ln B_j = c - rate s - log ln s - loglog ln ln s`` with
    ``s = ln(block midpoint)``; exponents above ``level`` are pinned to the
    boundary (rate 0, log 1) before fitting the rest.
    """
    j = np.arange(1, len(B) + 1, dtype=float)
    m = j >= j_lo
    s = (j[m] - 0.5) * math.log(2.0)
    y = np.log(B[m])
    cols = [-s, -np.log(s), -np.log(np.log(s))]
    if level == 2:
        y = y + np.log(s)
    X = np.column_stack([np.ones(m.sum()), *cols[level:]])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[1]) - (0.0 if level == 0 else 1.0)


def classify_partial_sums(
    terms: Callable[[float], float], J: int, *, term_rule: str = "", evals_per_block: int = 64
) -> SeriesProbe:
    """Classify ``sum_n terms(n)`` from dyadic block sums up to ``2^J``.

    Blocks with more than ``evals_per_block`` integers are estimated by a
    trapezoid rule in ``ln n`` (terms must accept real arguments).

    The block sums of a Bertrand series ``n^-(1+rate) (ln n)^-log (ln ln n)^-loglog``
    behave like ``exp(-rate s) s^-log (ln s)^-loglog`` in ``s = ln n``. The
    exponents are fitted one level at a time on two windows (``j >= J/2`` and
    ``j >= 2J/3``): the rate first; the log exponent only when the rate sits
    at 0 (``|rate| <= 0.003``), refitted with rate pinned to 0; the loglog
    exponent only when the log exponent sits at 1 (within 0.006), refitted
    with both pinned. A level decides when both windows clear its margin
    (0.05, 0.1, 0.3) on the same side and their estimates differ by at most
    ``(0.01, 0.05, 0.3) + 10%``; a larger spread means the terms are still
    pre-asymptotic. Everything else is Inconclusive, which is where exact
    boundary triples such as (1, 1, 1) land.
    """
    if not 1 <= J <= 40:
        raise ValueError("J must be in [1, 40]")
    B = _block_sums(terms, J, evals_per_block)
    ratio = float(B[-1] / B[-2]) if J >= 2 and B[-2] > 0 else math.nan
    last = B[max(0, J - 8):]
    if J >= 2 and np.all(last > 0):
        jj = np.arange(J - len(last) + 1, J + 1)
        slope = float(np.polyfit(np.log(jj * math.log(2.0)), np.log(last), 1)[0])
    else:
        slope = math.nan
    fits: list[dict] = []

    def probe(cls, reason=""):
        return SeriesProbe(term_rule, B.tolist(), ratio, slope, fits, cls, reason)

    if J < MIN_FIT_BLOCKS:
        return probe("Inconclusive", f"need J >= {MIN_FIT_BLOCKS} blocks to fit decay exponents")
    windows = (max(4, math.ceil(J / 2)), max(4, math.ceil(2 * J / 3)))
    if np.all(B[windows[0] - 1:] == 0):
        return probe("Converges", "block sums vanish identically")
    if np.any(B[windows[0] - 1:] <= 0):
        return probe("Inconclusive", "zero block sums inside the fit window")
    for level, name in enumerate(LEVELS):
        devs = [_level_deviation(B, w, level) for w in windows]
        fits.append({"level": name, "windows": list(windows), "deviation": devs})
        spread = abs(devs[0] - devs[1])
        if spread > DRIFT_ABS[level] + DRIFT_REL * min(abs(d) for d in devs):
            return probe("Inconclusive", f"{name} exponent drifts between fit windows (pre-asymptotic)")
        if all(d > MARGIN[level] for d in devs):
            return probe("Converges")
        if all(d < -MARGIN[level] for d in devs):
            return probe("Diverges")
        if level == len(TIE) or any(abs(d) > TIE[level] for d in devs):
            return probe("Inconclusive", f"{name} exponent too close to its boundary to decide")
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# numeric versions of each condition


def _tail_integral(spec: DistributionSpec, lo: float, hi: float, p: float) -> float:
    """``int_lo^hi P(|X|^p > t) dt`` in log t, split at the tail's breakpoints."""
    if hi <= lo:
        return 0.0
    cuts = [lo, *sorted(b**p for b in spec.breakpoints if lo < b**p < hi), hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a <= 0.0:
            v, _ = quad(lambda t: spec.tail(t ** (1.0 / p)), a, b, epsabs=0.0, epsrel=1e-9, limit=200)
        else:
            g = lambda s: spec.tail(math.exp(s / p)) * math.exp(s)
            v, _ = quad(g, math.log(a), math.log(b), epsabs=0.0, epsrel=1e-9, limit=200)
        total += v
    return total


def qp_series_term(spec: DistributionSpec, p, n: float) -> float:
    """``(1/n) int_{min(u_n^p, n)}^n P(|X|^p > t) dt`` with the min taken literally."""
    pf = float(as_fraction(p))
    lo = min(quantile_real(spec, n) ** pf, n)
    return _tail_integral(spec, lo, n, pf) / n


def quantile_real(spec: DistributionSpec, n: float) -> float:
    """u_n for real n >= 1 (integers go through the law's cache)."""
    if float(n).is_integer():
        return quantile(spec, int(n))
    from .tailmodel import quantile_from_tail

    return quantile_from_tail(spec.tail, n)


def qp_series_numeric(spec: DistributionSpec, p, J: int = 24, evals_per_block: int = 64) -> SeriesProbe:
    p = as_fraction(p)
    return classify_partial_sums(
        lambda n: qp_series_term(spec, p, n),
        J,
        term_rule=f"(1/n) int_(min(u_n^{p}, n))^n P(|X|^{p} > t) dt",
        evals_per_block=evals_per_block,
    )


def integral_condition_numeric(spec: DistributionSpec, p, q, J: int = 30) -> SeriesProbe:
    """Probe ``int_0^inf P^{q/p}(|X|^q > t) dt`` through the sampled integrand."""
    p, q = as_fraction(p), as_fraction(q)
    k, inv_q = float(q / p), 1.0 / float(q)
    return classify_partial_sums(
        lambda t: spec.tail(t**inv_q) ** k, J, term_rule=f"P^({q}/{p})(|X|^{q} > t)"
    )


def moment_numeric(spec: DistributionSpec, s, delta=0, J: int = 30) -> SeriesProbe:
    """Probe ``E|X|^s ln^delta(1+|X|) = int phi'(t) P(|X| > t) dt``."""
    sf, df = float(as_fraction(s)), float(as_fraction(delta))

    def term(t):
        dphi = sf * t ** (sf - 1) * math.log1p(t) ** df
        if df:
            dphi += t**sf * df * math.log1p(t) ** (df - 1) / (1 + t)
        return dphi * spec.tail(t)

    return classify_partial_sums(term, J, term_rule=f"d/dt[t^{s} ln^{delta}(1+t)] P(|X| > t)")


def truncmean_series_numeric(spec: DistributionSpec, q, J: int = 30) -> SeriesProbe:
    qf = float(as_fraction(q))
    return classify_partial_sums(
        lambda n: abs(truncated_mean(spec, n)) ** qf / n,
        J,
        term_rule=f"|E X 1{{|X| <= n}}|^{q} / n",
    )


# ---------------------------------------------------------------------------
# reports


@dataclass
class ConditionVerdict:
    name: str
    verdict: str
    method: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict, "method": self.method, "evidence": self.evidence}


@dataclass
class CriterionReport:
    spec: str
    p: Fraction
    q: Fraction
    target: str
    regime: Regime
    conditions: list[ConditionVerdict]
    notes: list[str] = field(default_factory=list)

    @property
    def overall(self) -> str:
        verdicts = [c.verdict for c in self.conditions]
        yes, no = ("InSLLN", "NotInSLLN") if self.target == "slln" else ("SeriesConverges", "SeriesDiverges")
        if FAILS in verdicts:
            return no
        if all(v == HOLDS for v in verdicts):
            return yes
        return INCONCLUSIVE

    def condition(self, name: str) -> ConditionVerdict:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "p": str(self.p),
            "q": str(self.q),
            "target": self.target,
            "regime": self.regime.value,
            "conditions": [c.to_dict() for c in self.conditions],
            "overall": self.overall,
            "notes": list(self.notes),
        }


def _from_probe(name: str, probe: SeriesProbe, holds_on: str = "Converges") -> ConditionVerdict:
    cls = probe.classification
    verdict = INCONCLUSIVE if cls == "Inconclusive" else (HOLDS if cls == holds_on else FAILS)
    return ConditionVerdict(name, verdict, NUMERIC, {"probe": probe.to_dict()})


def _triple(e: LogPowerExponents) -> dict:
    return {"exponents": list(e.as_tuple())}


class _Evaluator:
    def __init__(self, spec: DistributionSpec, p: Fraction, q: Fraction, numeric: bool, J: int):
        self.spec, self.p, self.q, self.numeric, self.J = spec, p, q, numeric, J

    def _skip(self, name: str, why: str) -> ConditionVerdict:
        return ConditionVerdict(name, INCONCLUSIVE, SYMBOLIC, {"not_evaluated": why})

    def mean_zero(self) -> ConditionVerdict:
        m = self.spec.declared_mean
        if m is None:
            raise MissingMeanDeclaration(f"{self.spec.label} does not declare its mean")
        ev = {"declared_mean": "undefined (E|X| = inf)" if m == math.inf else m}
        return ConditionVerdict("mean_zero", HOLDS if m == 0 else FAILS, SYMBOLIC, ev)

    def _moment(self, name: str, s: Fraction, delta: Fraction) -> ConditionVerdict:
        spec = self.spec
        if spec.bounded:
            return ConditionVerdict(name, HOLDS, SYMBOLIC, {"bounded_support": spec.support_bound})
        if spec.tail_asym is not None:
            v = bertrand.moment_finite(spec.tail_asym, s, delta)
            a = spec.tail_asym
            ev = {"order": str(s), "log_power": str(delta), "exponents": [str(1 + a.t_exp - s), str(a.log_exp - delta), str(a.loglog_exp)]}
            return ConditionVerdict(name, HOLDS if v is Verdict.FINITE else FAILS, SYMBOLIC, ev)
        if not self.numeric:
            return self._skip(name, "no tail asymptotics and numeric fallback disabled")
        return _from_probe(name, moment_numeric(spec, s, delta, J=self.J))

    def moment_p(self):
        return self._moment("moment_p", self.p, Fraction(0))

    def moment_q(self):
        return self._moment("moment_q", self.q, Fraction(0))

    def moment_p_log(self):
        return self._moment("moment_p_log", self.p, Fraction(1))

    def integral_condition(self) -> ConditionVerdict:
        spec, name = self.spec, "integral_condition"
        if spec.bounded:
            return ConditionVerdict(name, HOLDS, SYMBOLIC, {"bounded_support": spec.support_bound})
        if spec.tail_asym is not None:
            e = bertrand.integral_condition_exponents(spec.tail_asym, self.p, self.q)
            v = bertrand.converges(e)
            return ConditionVerdict(name, HOLDS if v is Verdict.CONVERGES else FAILS, SYMBOLIC, _triple(e))
        if not self.numeric:
            return self._skip(name, "no tail asymptotics and numeric fallback disabled")
        return _from_probe(name, integral_condition_numeric(spec, self.p, self.q, J=self.J))

    def qp_series(self) -> ConditionVerdict:
        spec, name, p = self.spec, "qp_series", self.p
        if spec.bounded:
            return ConditionVerdict(name, HOLDS, SYMBOLIC, {"bounded_support": spec.support_bound})
        if spec.tail_asym is not None:
            if bertrand.moment_finite(spec.tail_asym, p, 0) is not Verdict.FINITE:
                return self._skip(name, f"requires E|X|^{p} < inf")
            v = bertrand.qp_series_exponents(spec.tail_asym, p)
            a = spec.tail_asym
            ev = {"tail_exponents": [str(a.t_exp), str(a.log_exp), str(a.loglog_exp)]}
            if a.t_exp == p:
                ev["series_exponents"] = ["1", str(a.log_exp), str(a.loglog_exp - 1)]
            method = DERIVED if a.t_exp == p else SYMBOLIC
            return ConditionVerdict(name, HOLDS if v is Verdict.CONVERGES else FAILS, method, ev)
        if not self.numeric:
            return self._skip(name, "no tail asymptotics and numeric fallback disabled")
        return _from_probe(name, qp_series_numeric(spec, p, J=min(self.J, 24)))

    def truncmean_series(self) -> ConditionVerdict:
        spec, name, q = self.spec, "truncmean_series", self.q
        if spec.declared_mean == math.inf:
            return self._skip(name, "E|X| = inf")
        v = bertrand.truncmean_series(spec, q)
        if v is not Verdict.UNKNOWN:
            if spec.symmetric:
                ev = {"symmetric": True}
            else:
                t = spec.trunc_mean_asym
                ev = _triple(LogPowerExponents(1, t.log_exp * q, t.loglog_exp * q))
            return ConditionVerdict(name, HOLDS if v is Verdict.CONVERGES else FAILS, SYMBOLIC, ev)
        if not self.numeric:
            return self._skip(name, "no truncated-mean asymptotics and numeric fallback disabled")
        return _from_probe(name, truncmean_series_numeric(spec, q, J=self.J))


def _check_supported(p: Fraction, q: Fraction) -> Regime:
    regime = detect_regime(p, q)
    if regime is Regime.UNSUPPORTED:
        raise UnsupportedRegime(f"(p={p}, q={q}): {OPEN_PROBLEM_NOTE}")
    return regime


def classify_slln(spec: DistributionSpec, p, q, *, numeric_fallback: bool = True, J: int = 30) -> CriterionReport:
    """Decide ``X in SLLN(p, q)`` from the per-regime conditions."""
    p, q = as_fraction(p), as_fraction(q)
    regime = _check_supported(p, q)
    ev = _Evaluator(spec, p, q, numeric_fallback, J)
    conds = [getattr(ev, name)() for name in REGIME_CONDITIONS[regime]]
    notes = []
    if any(c.method == DERIVED for c in conds):
        notes.append("qp_series verdict uses the derived log-power rule (a > 1, or a = 1 and b > 2)")
    return CriterionReport(spec.label, p, q, "slln", regime, conds, notes)


def classify_mean_series(spec: DistributionSpec, p, q, *, numeric_fallback: bool = True, J: int = 30) -> CriterionReport:
    """Decide ``sum_n (1/n) E(|S_n| / n^{1/p})^q < inf``."""
    p, q = as_fraction(p), as_fraction(q)
    regime = _check_supported(p, q)
    ev = _Evaluator(spec, p, q, numeric_fallback, J)
    conds = [getattr(ev, name)() for name in MEAN_SERIES_CONDITIONS[regime]]
    notes = [Q_GT_P_NOTE] if regime in (Regime.Q_GT_P_P_GT1, Regime.P1_Q_GT1) else []
    return CriterionReport(spec.label, p, q, "mean-series", regime, conds, notes)
