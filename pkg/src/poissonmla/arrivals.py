"""Poisson arrival model: request-sequence generation and statistical self-tests."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, asdict
from typing import Iterable, Iterator

import numpy as np
from scipy import stats

from .errors import InputError
from .schedule import RequestSequence, merge_sequences
from .tree import Instance


class Mode(str, enum.Enum):
    DISTRIBUTED = "distributed"
    CENTRALIZED = "centralized"


@dataclass(frozen=True)
class ArrivalConfig:
    instance: Instance
    horizon: float
    seed: int = 0
    mode: Mode = Mode.DISTRIBUTED

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InputError(f"horizon must be positive and finite, got {self.horizon}")
        if not self.instance.total_rate > 0:
            raise InputError("total arrival rate must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """PCG64 stream for one trial, split from the master seed."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(trial),))
    return np.random.Generator(np.random.PCG64(ss))


def _exp(rng: np.random.Generator, size, rate) -> np.ndarray:
    # inverse CDF so the draw is a fixed function of the uniform stream
    return -np.log1p(-rng.random(size)) / rate


def _distributed(rng, rates, verts, tau):
    lam = rates[verts]
    mean = lam * tau
    k = int(math.ceil(mean.max() + 6.0 * math.sqrt(mean.max()) + 8))
    gaps = _exp(rng, (verts.size, k), lam[:, None])
    arr = np.cumsum(gaps, axis=1)
    times, locs = [], []
    short = np.flatnonzero(arr[:, -1] <= tau)
    for row in short.tolist():
        # rare: the row ran out before passing tau, keep drawing for that vertex only
        extra = [arr[row]]
        last = arr[row, -1]
        while last <= tau:
            more = last + np.cumsum(_exp(rng, k, lam[row]))
            extra.append(more)
            last = more[-1]
        ext = np.concatenate(extra)
        ext = ext[ext <= tau]
        times.append(ext)
        locs.append(np.full(ext.size, verts[row], dtype=np.int64))
    mask = arr <= tau
    if short.size:
        mask[short] = False
    rows, _ = np.nonzero(mask)
    times.insert(0, arr[mask])
    locs.insert(0, verts[rows])
    t = np.concatenate(times)
    l = np.concatenate(locs)
    order = np.argsort(t, kind="stable")
    return t[order], l[order]


def _centralized(rng, rates, verts, tau):
    lam_tot = float(rates[verts].sum())
    cdf = np.cumsum(rates[verts]) / lam_tot
    cdf[-1] = 1.0
    chunk = int(math.ceil(lam_tot * tau + 6.0 * math.sqrt(lam_tot * tau) + 8))
    parts = []
    last = 0.0
    while last <= tau:
        arr = last + np.cumsum(_exp(rng, chunk, lam_tot))
        parts.append(arr)
        last = arr[-1]
    t = np.concatenate(parts)
    t = t[t <= tau]
    u = rng.random(t.size)
    l = verts[np.searchsorted(cdf, u, side="right")]
    return t, l


def generate(config: ArrivalConfig, trial: int = 0, rng: np.random.Generator | None = None) -> RequestSequence:
    """One realisation of the Poisson model on ``[0, horizon]``; deterministic per (seed, trial, mode)."""
    if rng is None:
        rng = trial_rng(config.seed, trial)
    rates = config.instance.rates
    verts = np.flatnonzero(rates > 0).astype(np.int64)
    tau = float(config.horizon)
    if config.mode is Mode.DISTRIBUTED:
        t, l = _distributed(rng, rates, verts, tau)
    else:
        t, l = _centralized(rng, rates, verts, tau)
    return RequestSequence(t, l, tau)


def generate_many(config: ArrivalConfig, trials: int, start: int = 0) -> Iterator[RequestSequence]:
    for k in range(start, start + trials):
        yield generate(config, k)


def restrict(sequence: RequestSequence, vertices: Iterable[int] | None = None,
             interval: tuple[float, float] | None = None) -> RequestSequence:
    """Filter by vertex subset and/or time interval (interval start becomes time 0)."""
    out = sequence
    if vertices is not None:
        out = out.restrict_vertices(vertices)
    if interval is not None:
        out = out.restrict_interval(*interval)
    return out


def merge(parts: Iterable[RequestSequence]) -> RequestSequence:
    return merge_sequences(list(parts))


@dataclass
class SummaryStats:
    trials: int
    counts: np.ndarray
    terminal_delay: np.ndarray

    @property
    def mean_count(self) -> float:
        return float(self.counts.mean())

    @property
    def se_count(self) -> float:
        return _se(self.counts)

    @property
    def mean_terminal_delay(self) -> float:
        return float(self.terminal_delay.mean())

    @property
    def se_terminal_delay(self) -> float:
        return _se(self.terminal_delay)


def _se(x: np.ndarray) -> float:
    if x.size < 2:
        return float("nan")
    return float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass
class Check:
    name: str
    observed: float
    expected: float
    se: float | None
    passed: bool | None
    note: str = ""


@dataclass
class SelfTestReport:
    trials: int
    rate: float
    horizon: float
    mode: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def summarize(config: ArrivalConfig, trials: int) -> tuple[SummaryStats, list[RequestSequence]]:
    seqs = list(generate_many(config, trials))
    counts = np.array([len(s) for s in seqs], dtype=np.float64)
    tdel = np.array([float(np.sum(s.horizon - s.times)) for s in seqs])
    return SummaryStats(trials, counts, tdel), seqs


def statistical_selftest(instance: Instance, horizon: float, trials: int, seed: int = 0,
                         mode: Mode | str = Mode.DISTRIBUTED, alpha: float = 0.01,
                         n_se: float = 3.0) -> SelfTestReport:
    """Check counts, terminal delay mass, conditional uniformity and the median bound.

    With fewer than two trials no standard error exists; every check is then
    reported with ``passed=None``.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    cfg = ArrivalConfig(instance, horizon, seed, Mode(mode))
    summ, seqs = summarize(cfg, trials)
    lam = instance.total_rate
    mean_n = lam * horizon
    rep = SelfTestReport(trials, lam, horizon, cfg.mode.value)
    degenerate = trials < 2

    def within(obs, exp, se):
        if degenerate or not se > 0:
            return None if degenerate else bool(obs == exp)
        return bool(abs(obs - exp) <= n_se * se)

    rep.checks.append(Check("mean_count", summ.mean_count, mean_n, summ.se_count,
                            within(summ.mean_count, mean_n, summ.se_count)))
    exp_td = 0.5 * lam * horizon ** 2
    rep.checks.append(Check("mean_terminal_delay", summ.mean_terminal_delay, exp_td, summ.se_terminal_delay,
                            within(summ.mean_terminal_delay, exp_td, summ.se_terminal_delay)))

    # Given N = n0, arrival times are the order statistics of n0 uniforms.
    n0 = max(1, int(math.floor(mean_n)))
    pooled = [s.times for s in seqs if len(s) == n0]
    if not pooled:
        pooled = [s.times for s in seqs if len(s) > 0]
        n0 = -1
    sample = np.concatenate(pooled) / horizon if pooled else np.empty(0)
    if sample.size >= 2 and not degenerate:
        res = stats.kstest(sample, "uniform")
        rep.checks.append(Check("ks_uniform", float(res.statistic), 0.0, None, bool(res.pvalue >= alpha),
                                f"p={res.pvalue:.4g}, n={sample.size}, conditioned on N={n0}"))
    else:
        rep.checks.append(Check("ks_uniform", float("nan"), 0.0, None, None, "too few samples"))

    if mean_n >= 1:
        hits = (summ.counts >= mean_n).astype(np.float64)
        p = float(hits.mean())
        se = _se(hits) if not degenerate else float("nan")
        ok = None if degenerate else bool(p >= 0.5 - n_se * se)
        rep.checks.append(Check("p_count_at_least_mean", p, 0.5, se, ok, "lower bound, not equality"))
    return rep
