"""Monte-Carlo harness: ratio-of-expectations estimates and the star separation table."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .arrivals import ArrivalConfig, Mode, generate
from .baselines import fixed_period, greedy, instant
from .errors import CapacityError, InputError
from .gen import GenScheduler
from .instances import star_instance
from .opt import MAX_REQUESTS, LowerBound, lower_bound, opt_cost
from .plan import build_plan, plan_schedule
from .schedule import RequestSequence, schedule_cost
from .tree import Instance

# lambda(T) * tau above this makes more than MAX_REQUESTS arrivals too likely
OPT_LOAD_GUARD = 8.0
MAX_RESAMPLES = 1000

PAPER_CONSTANTS = {
    "instant": 16.0 / (3.0 - 3.0 * math.exp(-1.0)),
    "plan": 64.0 / 3.0,
    "plan:blind": 64.0 / 3.0,
    "gen": 210.0,
}


def make_runner(name: str, instance: Instance) -> Callable[[RequestSequence], tuple[float, float]]:
    """Scheduler name to a function sequence -> (delay, weight).

    Names: instant, greedy, gen, plan, plan:blind, periodic:<p>, periodic:<p>:blind.
    """
    tree = instance.tree
    blind = name.endswith(":blind")
    base = name[: -len(":blind")] if blind else name
    if base == "instant":
        sched = lambda s: instant(s, tree)
    elif base == "greedy":
        sched = lambda s: greedy(s, tree)
    elif base == "gen":
        g = GenScheduler(instance)
        sched = g.schedule
    elif base == "plan":
        plan = build_plan(instance)
        sched = lambda s: plan_schedule(s, plan)
    elif base.startswith("periodic:"):
        try:
            p = float(base.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad period in {name!r}") from None
        sched = lambda s: fixed_period(s, tree, p)
    else:
        raise InputError(f"unknown scheduler {name!r}")
    if blind and not (base == "plan" or base.startswith("periodic:")):
        raise InputError(f"{base} has no blind accounting")

    def run(seq):
        c = schedule_cost(sched(seq), tree, seq, blind=blind, validate=False)
        return c.delay, c.weight

    return run


@dataclass
class ExperimentConfig:
    instance: Instance
    horizon: float
    trials: int = 1000
    seed: int = 0
    schedulers: list = field(default_factory=lambda: ["instant"])
    denominator: str = "opt"  # "opt" or a LowerBound kind name
    mode: str = "distributed"
    workers: int = 1
    load_guard: float = OPT_LOAD_GUARD

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        if self.denominator != "opt":
            LowerBound(self.denominator)
        elif self.instance.total_rate * self.horizon > self.load_guard:
            raise CapacityError(
                f"lambda(T)*tau = {self.instance.total_rate * self.horizon:.4g} exceeds the exact-OPT guard {self.load_guard}"
            )


@dataclass
class SchedulerResult:
    name: str
    mean: float
    se: float
    ratio: float
    ratio_se: float
    constant: float | None


@dataclass
class RoEReport:
    trials: int
    horizon: float
    denominator: str
    denom_mean: float
    denom_se: float
    results: list[SchedulerResult]
    resampled: int = 0
    rows: list = field(default_factory=list, repr=False)

    @property
    def se_defined(self) -> bool:
        return self.trials >= 2

    def result(self, name: str) -> SchedulerResult:
        return next(r for r in self.results if r.name == name)

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "rows"}
        d["se_defined"] = self.se_defined
        return _nan_to_none(d)

    def table(self) -> str:
        lines = [f"trials={self.trials}  tau={self.horizon:g}  denominator={self.denominator} "
                 f"mean={self.denom_mean:.6g} se={_fmt(self.denom_se)}"]
        lines.append(f"{'scheduler':<22}{'mean':>12}{'se':>10}{'ratio':>10}{'ratio_se':>10}{'constant':>10}")
        for r in self.results:
            const = "n/a" if r.constant is None else f"{r.constant:.4g}"
            lines.append(f"{r.name:<22}{r.mean:>12.6g}{_fmt(r.se):>10}{r.ratio:>10.4g}{_fmt(r.ratio_se):>10}{const:>10}")
        if not self.se_defined:
            lines.append("note: standard errors are undefined with a single trial")
        if self.resampled:
            lines.append(f"note: {self.resampled} draws exceeded {MAX_REQUESTS} requests and were resampled")
        return "\n".join(lines)


def _fmt(x):
    return "undef" if x is None or not math.isfinite(x) else f"{x:.4g}"


def _nan_to_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _nan_to_none(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_nan_to_none(v) for v in x]
    return x


def ratio_of_means(x: np.ndarray, y: np.ndarray | None, y_const: float | None = None) -> tuple[float, float]:
    """Ratio of sample means with a delta-method standard error (paired when y is sampled)."""
    n = x.size
    mx = float(x.mean())
    if y is None:
        r = mx / y_const
        se = float(x.std(ddof=1) / math.sqrt(n)) / y_const if n > 1 else math.nan
        return r, se
    my = float(y.mean())
    r = mx / my
    if n < 2:
        return r, math.nan
    vx = x.var(ddof=1) / n
    vy = y.var(ddof=1) / n
    cxy = float(np.cov(x, y, ddof=1)[0, 1]) / n
    var = (vx - 2 * r * cxy + r * r * vy) / (my * my)
    return r, math.sqrt(max(var, 0.0))


def _draw(cfg: ArrivalConfig, trial: int, need_opt: bool) -> tuple[RequestSequence, int]:
    seq = generate(cfg, trial)
    extra = 0
    while need_opt and len(seq) > MAX_REQUESTS:
        extra += 1
        if extra > MAX_RESAMPLES:
            raise CapacityError("could not draw a sequence small enough for exact OPT")
        ss = np.random.SeedSequence(entropy=int(cfg.seed) & ((1 << 64) - 1), spawn_key=(int(trial), extra))
        seq = generate(cfg, trial, rng=np.random.Generator(np.random.PCG64(ss)))
    return seq, extra


def _run_chunk(args):
    config, lo, hi = args
    cfg = ArrivalConfig(config.instance, config.horizon, config.seed, Mode(config.mode))
    runners = [(name, make_runner(name, config.instance)) for name in config.schedulers]
    need_opt = config.denominator == "opt"
    rows = []
    resampled = 0
    for trial in range(lo, hi):
        seq, extra = _draw(cfg, trial, need_opt)
        resampled += extra
        denom = opt_cost(seq, config.instance.tree) if need_opt else math.nan
        for name, run in runners:
            d, w = run(seq)
            rows.append((trial, name, len(seq), d, w, d + w, denom))
    return rows, resampled


def run_experiment(config: ExperimentConfig) -> RoEReport:
    """Run every scheduler on the same sampled sequences and estimate RoE as a ratio of means."""
    T = config.trials
    workers = max(1, int(config.workers))
    if workers == 1 or T < 2 * workers:
        chunks = [(config, 0, T)]
        results = [_run_chunk(chunks[0])]
    else:
        edges = np.linspace(0, T, workers + 1).astype(int)
        chunks = [(config, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, chunks))
    rows = [r for part, _ in results for r in part]
    resampled = sum(x for _, x in results)

    names = list(config.schedulers)
    by_name = {nm: np.array([r[5] for r in rows if r[1] == nm]) for nm in names}
    if config.denominator == "opt":
        first = names[0] if names else None
        y = np.array([r[6] for r in rows if r[1] == first])
        dmean = float(y.mean())
        dse = float(y.std(ddof=1) / math.sqrt(T)) if T > 1 else math.nan
        const = None
    else:
        y = None
        const = lower_bound(config.instance, config.horizon, config.denominator)
        dmean, dse = const, 0.0
    res = []
    for nm in names:
        x = by_name[nm]
        r, rse = ratio_of_means(x, y, const)
        se = float(x.std(ddof=1) / math.sqrt(T)) if T > 1 else math.nan
        res.append(SchedulerResult(nm, float(x.mean()), se, r, rse, PAPER_CONSTANTS.get(nm)))
    return RoEReport(T, config.horizon, config.denominator, dmean, dse, res, resampled, rows)


ROW_HEADER = ["trial", "scheduler", "requests", "delay", "weight", "total", "denominator"]


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_HEADER)
    for r in rows:
        w.writerow([r[0], r[1], r[2]] + [repr(float(x)) for x in r[3:]])
    return buf.getvalue()


def emit_reports(report, out_dir: str, formats=("csv", "json", "txt"), stem: str = "roe") -> list[str]:
    """Write per-trial CSV, JSON summary and a text table; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats and getattr(report, "rows", None) is not None:
        path = os.path.join(out_dir, f"{stem}_trials.csv")
        with open(path, "w") as fh:
            fh.write(rows_csv(report.rows) if isinstance(report, RoEReport) else report.csv())
        written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, f"{stem}_summary.json")
        with open(path, "w") as fh:
            json.dump(report.summary(), fh, indent=2, sort_keys=True)
        written.append(path)
    if "txt" in formats:
        path = os.path.join(out_dir, f"{stem}_table.txt")
        with open(path, "w") as fh:
            fh.write(report.table() + "\n")
        written.append(path)
    return written


# ---------------------------------------------------------------- star separation

def trunk_alg_cost(seq: RequestSequence, instance: Instance, trunk_period: float) -> float:
    """Trunk bought every ``trunk_period`` (and at the horizon) whether or not anything waits;
    pending leaf requests ride along at each purchase."""
    tree = instance.tree
    sch = fixed_period(seq, tree, trunk_period)
    c = schedule_cost(sch, tree, seq, validate=False)
    used = np.zeros(sch.n_services, dtype=bool)
    used[sch.assignment] = True
    trunk = float(tree.weight[1])
    return c.total + trunk * float(np.count_nonzero(~used))


@dataclass
class SeparationRow:
    n: int
    plan_period: float
    trunk_period: float
    horizon: float
    instant_mean: float
    instant_se: float
    instant_theory: float
    plan_mean: float
    plan_se: float
    plan_theory: float
    alg_mean: float
    alg_se: float
    alg_theory: float

    @property
    def instant_over_alg(self) -> float:
        return self.instant_mean / self.alg_mean

    @property
    def plan_over_alg(self) -> float:
        return self.plan_mean / self.alg_mean


@dataclass
class SeparationTable:
    trials: int
    seed: int
    rows: list[SeparationRow]

    def summary(self) -> dict:
        out = []
        for r in self.rows:
            d = asdict(r)
            d["instant_over_alg"] = r.instant_over_alg
            d["plan_over_alg"] = r.plan_over_alg
            out.append(d)
        return {"trials": self.trials, "seed": self.seed, "rows": out}

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(self.summary()["rows"][0].keys()) if self.rows else []
        w.writerow(keys)
        for d in self.summary()["rows"]:
            w.writerow([d[k] for k in keys])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'n':>6}{'INSTANT':>12}{'theory':>12}{'PLAN':>12}{'theory':>12}{'ALG':>12}{'theory':>12}"
                 f"{'INST/ALG':>10}{'PLAN/ALG':>10}"]
        for r in self.rows:
            lines.append(f"{r.n:>6}{r.instant_mean:>12.6g}{r.instant_theory:>12.6g}{r.plan_mean:>12.6g}"
                         f"{r.plan_theory:>12.6g}{r.alg_mean:>12.6g}{r.alg_theory:>12.6g}"
                         f"{r.instant_over_alg:>10.4g}{r.plan_over_alg:>10.4g}")
        return "\n".join(lines)


def appendix_b_separation(ns=(16, 256, 4096), trials: int = 1000, seed: int = 0,
                          periods: float = 100.0) -> SeparationTable:
    """INSTANT, PLAN (blind) and the trunk-periodic algorithm on the star, horizon = periods * PLAN period."""
    rows = []
    for n in ns:
        inst = star_instance(int(n))
        tree = inst.tree
        plan = build_plan(inst)
        p = float(plan.rounded_periods.max())
        tau = periods * p
        q = n ** 0.25
        cfg = ArrivalConfig(inst, tau, seed + int(n))
        ci, cp, ca = [], [], []
        for k in range(trials):
            seq = generate(cfg, k)
            ci.append(schedule_cost(instant(seq, tree), tree, seq, validate=False).total)
            cp.append(schedule_cost(plan_schedule(seq, plan), tree, seq, blind=True, validate=False).total)
            ca.append(trunk_alg_cost(seq, inst, q))
        ci, cp, ca = map(np.asarray, (ci, cp, ca))

        def se(x):
            return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan

        rows.append(SeparationRow(
            n=int(n), plan_period=p, trunk_period=q, horizon=tau,
            instant_mean=float(ci.mean()), instant_se=se(ci), instant_theory=(math.sqrt(n) + 1) * tau,
            plan_mean=float(cp.mean()), plan_se=se(cp), plan_theory=math.sqrt(2 * (n + math.sqrt(n))) * tau,
            alg_mean=float(ca.mean()), alg_se=se(ca), alg_theory=(1.5 * q + 1) * tau,
        ))
    return SeparationTable(trials, seed, rows)
