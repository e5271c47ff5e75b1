"""Monte Carlo trajectories of the weighted partial-sum series

    T_N = sum_{n <= N} (1/n) (|S_n| / n^{1/p})^q

and the dyadic-block maxima ``M_N = max_{N/2 < n <= N} |S_n| / n^{1/p}``.

Replication ``i`` draws from ``PCG64(child_seed(master_seed, i))``, so results
do not depend on how replications are spread over workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .tailmodel import DistributionSpec, as_fraction, sample

__all__ = [
    "SimConfig",
    "SimResult",
    "child_seed",
    "simulate_weighted_series",
    "sup_norm_trajectory",
    "estimate_expected_term",
]

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finaliser
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def child_seed(master_seed: int, index: int) -> int:
    """64-bit seed of replication ``index``: splitmix64 of ``master + (index+1)*phi``.

    Fixed forever; changing it changes every stored trajectory.
    """
    if index < 0:
        raise ValueError("replication index must be nonnegative")
    return _mix64((master_seed + (index + 1) * GOLDEN64) & MASK64)


def _rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(child_seed(master_seed, index)))


@dataclass(frozen=True)
class SimConfig:
    p: Fraction
    q: Fraction
    master_seed: int = 0
    reps: int = 512
    n_max: int = 2**16
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "q", as_fraction(self.q))
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n_max < 1 or self.n_max & (self.n_max - 1):
            raise ValueError("n_max must be a power of 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def checkpoints(self) -> list[int]:
        return [2**k for k in range(self.n_max.bit_length())]

    def as_dict(self) -> dict:
        # workers is deliberately absent: it cannot change results
        return {
            "p": str(self.p),
            "q": str(self.q),
            "master_seed": self.master_seed,
            "reps": self.reps,
            "n_max": self.n_max,
        }


@dataclass
class SimResult:
    config: SimConfig
    spec_label: str
    checkpoints: list[int]
    T: np.ndarray  # reps x checkpoints
    M: np.ndarray  # reps x checkpoints
    seeds: list[int]
    overflow: np.ndarray = field(default=None)  # per rep: T hit +inf

    def stats(self, which: str = "T") -> list[dict]:
        data = self.T if which == "T" else self.M
        out = []
        for k, N in enumerate(self.checkpoints):
            col = data[:, k]
            out.append(
                {
                    "checkpoint": N,
                    "mean": float(np.mean(col)),
                    "median": float(np.median(col)),
                    "q05": float(np.quantile(col, 0.05)),
                    "q95": float(np.quantile(col, 0.95)),
                }
            )
        return out

    def growth(self, stat: str, lo: int, hi: int, which: str = "T") -> float:
        """Ratio of a checkpoint statistic at ``hi`` to the one at ``lo``."""
        s = {d["checkpoint"]: d[stat] for d in self.stats(which)}
        return s[hi] / s[lo] if s[lo] > 0 else math.inf

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rep", "checkpoint", "T", "M"])
        for i in range(self.T.shape[0]):
            for k, N in enumerate(self.checkpoints):
                w.writerow([i, N, repr(float(self.T[i, k])), repr(float(self.M[i, k]))])
        return buf.getvalue()

    def stats_dict(self) -> dict:
        return {
            "spec": self.spec_label,
            "config": self.config.as_dict(),
            "T": self.stats("T"),
            "M": self.stats("M"),
            "overflow_reps": [int(i) for i in np.flatnonzero(self.overflow)],
        }


def _one_replication(spec: DistributionSpec, cfg: SimConfig, index: int):
    n_max = cfg.n_max
    x = sample(spec, _rng(cfg.master_seed, index), n_max)
    # extended precision: |S_n|/n^{1/p} raised to q spans many decades
    s = np.cumsum(x.astype(np.longdouble))
    n = np.arange(1, n_max + 1, dtype=np.longdouble)
    scaled = np.abs(s) / n ** np.longdouble(1.0 / float(cfg.p))
    with np.errstate(over="ignore"):
        terms = scaled ** np.longdouble(float(cfg.q)) / n
        partial = np.cumsum(terms)
    cps = cfg.checkpoints
    T = np.array([partial[N - 1] for N in cps], dtype=float)
    M = np.array([scaled[N // 2 : N].max() for N in cps], dtype=float)
    return T, M, bool(np.isinf(T[-1]))


def _run(spec: DistributionSpec, cfg: SimConfig):
    idx = range(cfg.reps)
    if cfg.workers == 1:
        rows = [_one_replication(spec, cfg, i) for i in idx]
    else:
        # each replication owns its stream; map keeps results in index order
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda i: _one_replication(spec, cfg, i), idx))
    T = np.vstack([r[0] for r in rows])
    M = np.vstack([r[1] for r in rows])
    overflow = np.array([r[2] for r in rows])
    return T, M, overflow


def simulate_weighted_series(spec: DistributionSpec, cfg: SimConfig) -> SimResult:
    """Per-replication T_N and M_N at every dyadic checkpoint up to ``cfg.n_max``."""
    T, M, overflow = _run(spec, cfg)
    return SimResult(
        config=cfg,
        spec_label=spec.label,
        checkpoints=cfg.checkpoints,
        T=T,
        M=M,
        seeds=[child_seed(cfg.master_seed, i) for i in range(cfg.reps)],
        overflow=overflow,
    )


def sup_norm_trajectory(spec: DistributionSpec, cfg: SimConfig) -> tuple[np.ndarray, list[dict]]:
    """Block maxima of ``|S_n|/n^{1/p}``: the reps x checkpoints matrix and per-checkpoint stats."""
    res = simulate_weighted_series(spec, cfg)
    return res.M, res.stats("M")


def estimate_expected_term(spec: DistributionSpec, p, q, n: int, reps: int, seed: int) -> tuple[float, float]:
    """Monte Carlo mean and standard error of ``(1/n)(|S_n|/n^{1/p})^q``."""
    if reps < 30:
        raise ValueError("reps must be >= 30")
    if n < 1:
        raise ValueError("n must be >= 1")
    pf, qf = float(as_fraction(p)), float(as_fraction(q))
    vals = np.empty(reps)
    for i in range(reps):
        x = sample(spec, _rng(seed, i), n)
        s = math.fsum(x.tolist())
        vals[i] = (abs(s) / n ** (1.0 / pf)) ** qf / n
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps))
