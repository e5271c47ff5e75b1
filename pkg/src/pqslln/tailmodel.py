"""Real-valued laws described by the tail function t -> P(|X| > t).

Each :class:`DistributionSpec` carries the exact tail, a sign structure that
reconstructs X from |X|, declared moment facts, and (optionally) a log-power
asymptotic form of the tail that the symbolic calculus in
:mod:`pqslln.bertrand` consumes.

Integral-defined tails are written, after ``x = e^u``, as
``t^{-k} * int_0^inf exp(-k w) h(ln t + w) dw`` so that the quadrature never
underflows however far out ``t`` is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

__all__ = [
    "E_E",
    "LogPowerAsym",
    "Symmetric",
    "AtomPlusPositiveTail",
    "SYMMETRIC",
    "DistributionSpec",
    "TruncMeanAsym",
    "tail_prob",
    "quantile",
    "quantile_from_tail",
    "sample",
    "truncated_mean",
    "abs_moment_finite",
    "ex4_1",
    "ex4_2",
    "logpower",
    "ex4_3",
    "pareto",
    "rademacher",
    "zero",
    "BUILTINS",
    "as_fraction",
]

E_E = math.exp(math.e)
QUANTILE_RTOL = 1e-12
BRACKET_CAP = 2.0**1000
TABLE_KNOTS = 4096

Rational = Union[Fraction, int, str]


def as_fraction(x) -> Fraction:
    """Coerce ints, strings like ``"8/5"`` and Fractions; floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not exponents")
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"exponent must be exact (int, Fraction or 'num/den'), got {x!r}")


@dataclass(frozen=True)
class LogPowerAsym:
    """``g(t) = C t^-alpha (ln t)^-beta (ln ln t)^-gamma`` for ``t >= t0``."""

    scale: float
    t_exp: Fraction
    log_exp: Fraction = Fraction(0)
    loglog_exp: Fraction = Fraction(0)
    valid_from: float = E_E

    def __post_init__(self):
        for name in ("t_exp", "log_exp", "loglog_exp"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.valid_from < E_E:
            raise ValueError("valid_from must be >= e^e so that ln ln t > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        return (
            self.scale
            * t ** -float(self.t_exp)
            * lt ** -float(self.log_exp)
            * np.log(lt) ** -float(self.loglog_exp)
        )

    def rescaled(self, factor: float) -> "LogPowerAsym":
        return LogPowerAsym(
            self.scale * factor, self.t_exp, self.log_exp, self.loglog_exp, self.valid_from
        )


@dataclass(frozen=True)
class Symmetric:
    pass


@dataclass(frozen=True)
class AtomPlusPositiveTail:
    """X equals ``atom_location`` with ``atom_mass``; otherwise X = |X| > 0.

    The positive part must live strictly above ``|atom_location|`` so that
    inverse-transform sampling of X and of |X| coincide off the atom.
    """

    atom_location: float
    atom_mass: float

    def __post_init__(self):
        if not 0.0 <= self.atom_mass <= 1.0:
            raise ValueError("atom_mass must be a probability")


SYMMETRIC = Symmetric()
SignModel = Union[Symmetric, AtomPlusPositiveTail]


@dataclass(frozen=True)
class TruncMeanAsym:
    """``E X 1{|X| <= n} ~ sign * (ln n)^-beta (ln ln n)^-gamma``."""

    sign: int
    log_exp: Fraction
    loglog_exp: Fraction

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "log_exp", as_fraction(self.log_exp))
        object.__setattr__(self, "loglog_exp", as_fraction(self.loglog_exp))


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A real random variable X given through its magnitude tail.

    ``declared_mean`` is ``None`` when undeclared, ``math.inf`` when E|X| is
    infinite (the mean does not exist), and the exact mean otherwise.
    ``support_bound`` is the essential sup of |X| for bounded laws.
    ``breakpoints`` lists the jump locations of the tail (left limits matter
    for suprema of ``t^s * tail(t)``). ``normalizer`` caches the constant
    (b or a) fixed at construction for the integral-defined built-ins.
    """

    name: str
    tail: Callable[[float], float]
    magnitude_ppf: Callable[[np.ndarray], np.ndarray]
    sign_model: SignModel = SYMMETRIC
    tail_asym: LogPowerAsym | None = None
    declared_mean: float | None = None
    trunc_mean_asym: TruncMeanAsym | None = None
    support_bound: float | None = None
    breakpoints: tuple[float, ...] = ()
    params: dict = field(default_factory=dict)
    asym_tolerance_from: float = 1e6
    normalizer: float | None = None
    truncated_mean_fn: Callable[[float], float] | None = field(default=None, repr=False)
    _quantiles: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def symmetric(self) -> bool:
        return isinstance(self.sign_model, Symmetric)

    @property
    def bounded(self) -> bool:
        return self.support_bound is not None

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        body = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params.items())
        return f"{self.name}:{body}"

    def positive_tail(self, t: float) -> float:
        """P(X > t) for the atom model; ``tail(t) / 2`` for symmetric laws."""
        if self.symmetric:
            return 0.5 * self.tail(t)
        sm = self.sign_model
        atom = sm.atom_mass if (sm.atom_location < 0 and t < -sm.atom_location) else 0.0
        return max(self.tail(t) - atom, 0.0)


def _fmt_param(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# ---------------------------------------------------------------------------
# numerics shared by the integral-defined built-ins


def _log_tail_factor(L: float, k: float, h: Callable[[float], float]) -> float:
    """``int_0^inf exp(-k w) h(L + w) dw``."""
    f = lambda w: math.exp(-k * w) * h(L + w)
    a, _ = quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    b, _ = quad(f, 1.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return a + b


def _tabulated_ppf(tail: Callable[[float], float], t_lo: float, start_level: float):
    """Inverse of the continuous part of a tail, ``t >= t_lo``.

    Returns ``v -> t`` mapping a tail level ``v <= start_level`` to the point
    where ``tail(t) = v``; log t is interpolated monotonically in -log v over
    :data:`TABLE_KNOTS` log-spaced knots.
    """
    # the top knot must sit beyond the smallest level 1 - U can take (2^-53)
    hi = t_lo * 2.0
    while tail(hi) > 2.0**-56:
        hi *= 4.0
    logt = np.linspace(math.log(t_lo), math.log(hi), TABLE_KNOTS)
    levels = np.array([tail(math.exp(x)) for x in logt])
    levels[0] = start_level
    x = -np.log(levels)
    interp = PchipInterpolator(x, logt, extrapolate=True)

    def ppf_levels(v):
        return np.exp(interp(-np.log(v)))

    return ppf_levels


class _Lazy:
    """Deferred construction of an expensive callable (sampling tables)."""

    def __init__(self, build):
        self._build = build
        self._fn = None

    def __call__(self, *args):
        if self._fn is None:
            self._fn = self._build()
        return self._fn(*args)


# ---------------------------------------------------------------------------
# operations


def tail_prob(spec: DistributionSpec, t: float) -> float:
    """P(|X| > t) for t >= 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(spec.tail(float(t)))


def quantile_from_tail(tail: Callable[[float], float], n: int, rtol: float = QUANTILE_RTOL) -> float:
    """``inf{t >= 0 : tail(t) < 1/n}`` by bracket doubling and bisection."""
    if n < 1:
        raise ValueError("n must be >= 1")
    below = lambda t: tail(t) * n < 1.0
    if below(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not below(hi):
        lo, hi = hi, 2.0 * hi
        if hi > BRACKET_CAP:
            raise ValueError(f"tail never drops below 1/{n} before {BRACKET_CAP:g}; malformed spec")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


def quantile(spec: DistributionSpec, n: int) -> float:
    """The order ``1 - 1/n`` quantile u_n of |X|, cached per spec."""
    n = int(n)
    cache = spec._quantiles
    if n not in cache:
        cache[n] = quantile_from_tail(spec.tail, n)
    return cache[n]


def sample(spec: DistributionSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` i.i.d. draws of X by inverse transform on the magnitude."""
    u = rng.random(count)
    if spec.symmetric:
        signs = rng.integers(0, 2, size=count) * 2 - 1
        return signs * spec.magnitude_ppf(u)
    sm = spec.sign_model
    out = spec.magnitude_ppf(u)
    if sm.atom_mass > 0:
        out = np.where(u < sm.atom_mass, sm.atom_location, out)
    return out


def abs_moment_finite(spec: DistributionSpec, s: Fraction) -> bool | None:
    """E|X|^s < inf when decidable from the declared structure, else None."""
    from .bertrand import moment_finite, Verdict

    if spec.bounded:
        return True
    if spec.tail_asym is None:
        return None
    return moment_finite(spec.tail_asym, as_fraction(s), Fraction(0)) is Verdict.FINITE


def _integrate_positive_tail(spec: DistributionSpec, n: float) -> float:
    """``int_0^n P(X > t) dt`` split at the breakpoints, log-substituted."""
    cuts = sorted({0.0, *[b for b in spec.breakpoints if 0 < b < n], n})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if a == 0.0:
            v, _ = quad(spec.positive_tail, a, b, epsabs=0.0, epsrel=1e-10, limit=200)
        else:
            g = lambda u: spec.positive_tail(math.exp(u)) * math.exp(u)
            v, _ = quad(g, math.log(a), math.log(b), epsabs=0.0, epsrel=1e-10, limit=400)
        total += v
    return total


def truncated_mean(spec: DistributionSpec, n: float) -> float:
    """``E X 1{|X| <= n}``; zero for symmetric laws, quadrature otherwise."""
    if spec.symmetric:
        return 0.0
    if abs_moment_finite(spec, Fraction(1)) is False or spec.declared_mean == math.inf:
        raise ValueError(f"{spec.label}: E|X| is infinite, truncated mean undefined")
    if spec.truncated_mean_fn is not None:
        return spec.truncated_mean_fn(n)
    return _generic_truncated_mean(spec, n)


def _generic_truncated_mean(spec: DistributionSpec, n: float) -> float:
    sm = spec.sign_model
    atom = sm.atom_location * sm.atom_mass if abs(sm.atom_location) <= n else 0.0
    # E X 1{0 < X <= n} = int_0^n P(X > t) dt - n P(X > n)
    return atom + _integrate_positive_tail(spec, n) - n * spec.positive_tail(n)


# ---------------------------------------------------------------------------
# built-ins


def _check_range(name, lo, x, hi):
    if not lo < x < hi:
        raise ValueError(f"{name} must lie in ({lo}, {hi}), got {x}")


def ex4_1(p: Rational = Fraction(8, 5), r: Rational = Fraction(5, 4)) -> DistributionSpec:
    """Symmetric, atom b at 0, ``P(|X| > t) = int_t^inf x^-(p+1) (ln x)^-r dx`` for t >= e.

    The integrand is read with ``ln^r x`` (not ``ln^r t``), matching the
    normalisation of b.
    """
    p, r = as_fraction(p), as_fraction(r)
    if not 1 < r < p < 2:
        raise ValueError(f"ex4_1 needs 1 < r < p < 2, got p={p}, r={r}")
    pf, rf = float(p), float(r)
    h = lambda u: u**-rf
    b = 1.0 - math.exp(-pf) * _log_tail_factor(1.0, pf, h)
    if not 0.0 < b < 1.0:
        raise ArithmeticError(f"ex4_1 atom mass {b} fell outside (0, 1)")

    def tail(t):
        if t < math.e:
            return 1.0 - b
        L = math.log(t)
        return math.exp(-pf * L) * _log_tail_factor(L, pf, h)

    def build():
        cont = _tabulated_ppf(tail, math.e, 1.0 - b)

        def ppf(u):
            v = 1.0 - np.asarray(u, dtype=float)
            out = np.zeros_like(v)
            m = v < 1.0 - b
            out[m] = cont(v[m])
            return out

        return ppf

    return DistributionSpec(
        name="ex4_1",
        params={"p": p, "r": r},
        tail=tail,
        magnitude_ppf=_Lazy(build),
        tail_asym=LogPowerAsym(1.0 / pf, p, r, 0),
        declared_mean=0.0,
        breakpoints=(0.0,),
        asym_tolerance_from=1e6,
        normalizer=b,
    )


def _h_log_loglog2(u: float) -> float:
    lu = math.log(u)
    return 1.0 / (u * lu * lu)


def _symmetric_logpower(name: str, params: dict, p: Fraction, a: Fraction, b: Fraction) -> DistributionSpec:
    """Symmetric density ``c / (|x|^(p+1) (ln|x|)^a (ln ln|x|)^b)`` on |x| > 3."""
    pf, af, bf = float(p), float(a), float(b)
    ln3 = math.log(3.0)

    def h(u):
        return u**-af * math.log(u) ** -bf

    half_mass = 3.0**-pf * _log_tail_factor(ln3, pf, h)
    c = 1.0 / (2.0 * half_mass)

    def tail(t):
        if t < 3.0:
            return 1.0
        L = math.log(t)
        return 2.0 * c * math.exp(-pf * L) * _log_tail_factor(L, pf, h)

    def build():
        cont = _tabulated_ppf(tail, 3.0, 1.0)
        return lambda u: cont(1.0 - np.asarray(u, dtype=float))

    return DistributionSpec(
        name=name,
        params=params,
        tail=tail,
        magnitude_ppf=_Lazy(build),
        tail_asym=LogPowerAsym(2.0 * c / pf, p, a, b),
        declared_mean=0.0,
        breakpoints=(3.0,),
        asym_tolerance_from=1e6 if a <= 1 else 1e8,
        normalizer=c,
    )


def ex4_2(p: Rational = Fraction(3, 2)) -> DistributionSpec:
    """Symmetric density ``b / (|x|^(p+1) ln|x| (ln ln|x|)^2)`` on |x| > 3."""
    p = as_fraction(p)
    if not 1 < p < 2:
        raise ValueError(f"ex4_2 needs 1 < p < 2, got p={p}")
    return _symmetric_logpower("ex4_2", {"p": p}, p, Fraction(1), Fraction(2))


def logpower(p: Rational = Fraction(3, 2), a: Rational = 1, b: Rational = 2) -> DistributionSpec:
    """Symmetric log-power family; ``logpower(p, 1, 2)`` is the law of :func:`ex4_2`.

    Needs ``1 < p < 2`` and ``E|X|^p < inf`` (``a > 1``, or ``a = 1`` and ``b > 1``)
    so that the q = p criterion series is defined.
    """
    p, a, b = as_fraction(p), as_fraction(a), as_fraction(b)
    if not 1 < p < 2:
        raise ValueError(f"logpower needs 1 < p < 2, got p={p}")
    if not (a > 1 or (a == 1 and b > 1)):
        raise ValueError(f"logpower needs a > 1 or (a = 1 and b > 1), got a={a}, b={b}")
    return _symmetric_logpower("logpower", {"p": p, "a": a, "b": b}, p, a, b)


def ex4_3() -> DistributionSpec:
    """Mean-zero law: atom at ``-1/(1-a)`` of mass ``1-a`` plus the positive density
    ``x^-2 / (ln x (ln ln x)^2)`` on ``x >= e^e`` (mass a).

    The normalising integral for a is taken from e^e; from e it diverges.
    """
    h = _h_log_loglog2
    a = math.exp(-math.e) * _log_tail_factor(math.e, 1.0, h)
    loc = -1.0 / (1.0 - a)

    def tail(t):
        if t < -loc:
            return 1.0
        if t < E_E:
            return a
        L = math.log(t)
        return math.exp(-L) * _log_tail_factor(L, 1.0, h)

    def trunc_mean(n):
        if n < -loc:
            return 0.0
        if n < E_E:
            return -1.0
        if n >= 1e4:
            return -1.0 / math.log(math.log(n))
        # E X 1{e^e < X <= n} = int_{e^e}^n dx / (x ln x (ln ln x)^2), taken in v = ln ln x
        v, _ = quad(lambda v: v**-2, 1.0, math.log(math.log(n)), epsabs=0.0, epsrel=1e-12)
        return -1.0 + v

    def build():
        cont = _tabulated_ppf(tail, E_E, a)

        def ppf(u):
            v = 1.0 - np.asarray(u, dtype=float)
            out = np.full_like(v, -loc)
            m = v < a
            out[m] = cont(v[m])
            return out

        return ppf

    return DistributionSpec(
        name="ex4_3",
        tail=tail,
        magnitude_ppf=_Lazy(build),
        sign_model=AtomPlusPositiveTail(loc, 1.0 - a),
        tail_asym=LogPowerAsym(1.0, 1, 1, 2),
        declared_mean=0.0,
        trunc_mean_asym=TruncMeanAsym(-1, 0, 1),
        breakpoints=(-loc, E_E),
        truncated_mean_fn=trunc_mean,
        asym_tolerance_from=1e8,
        normalizer=a,
    )


def pareto(alpha: Rational = 2, centered: bool = False) -> DistributionSpec:
    """``P(|X| > t) = min(1, t^-alpha)``.

    ``centered=True`` attaches an independent random sign (mean zero, same
    magnitude tail); otherwise X = |X| > 0.
    """
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise ValueError("tail index must be positive")
    af = float(alpha)

    def tail(t):
        return 1.0 if t < 1.0 else t**-af

    def ppf(u):
        return (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / af)

    if centered:
        sign_model, mean, tma = SYMMETRIC, 0.0, None
    else:
        sign_model = AtomPlusPositiveTail(0.0, 0.0)
        mean = af / (af - 1.0) if alpha > 1 else math.inf
        tma = TruncMeanAsym(1, 0, 0) if alpha > 1 else None

    def trunc_mean(n):
        if n < 1.0:
            return 0.0
        if alpha == 1:
            return math.log(n)
        return af / (af - 1.0) * (1.0 - n ** (1.0 - af))

    return DistributionSpec(
        name="pareto",
        params={"alpha": alpha, "centered": bool(centered)},
        tail=tail,
        magnitude_ppf=ppf,
        sign_model=sign_model,
        tail_asym=LogPowerAsym(1.0, alpha, 0, 0),
        declared_mean=mean,
        trunc_mean_asym=tma,
        breakpoints=(),
        truncated_mean_fn=None if centered else trunc_mean,
        asym_tolerance_from=E_E,
    )


def rademacher() -> DistributionSpec:
    """Fair random sign."""
    return DistributionSpec(
        name="rademacher",
        tail=lambda t: 1.0 if t < 1.0 else 0.0,
        magnitude_ppf=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        declared_mean=0.0,
        support_bound=1.0,
        breakpoints=(1.0,),
    )


def zero() -> DistributionSpec:
    """The point mass at 0."""
    return DistributionSpec(
        name="zero",
        tail=lambda t: 0.0,
        magnitude_ppf=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        declared_mean=0.0,
        support_bound=0.0,
    )


BUILTINS: dict[str, Callable[..., DistributionSpec]] = {
    "ex4_1": ex4_1,
    "ex4_2": ex4_2,
    "ex4_3": ex4_3,
    "logpower": logpower,
    "pareto": pareto,
    "rademacher": rademacher,
    "zero": zero,
}
