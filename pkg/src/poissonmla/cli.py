"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or schedule, 3 capacity/guard exceeded, 1 other errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .arrivals import ArrivalConfig, Mode, generate, statistical_selftest
from .errors import InputError, MLAError
from .experiment import ExperimentConfig, appendix_b_separation, emit_reports, make_runner, run_experiment
from .gen import GenScheduler
from .instances import KINDS, generate_instance
from .opt import LowerBound, UpperBound, lower_bound, opt_bruteforce, upper_bound_formulas
from .plan import build_plan
from .schedule import RequestSequence
from .tree import Instance, classify, heaviness

log = logging.getLogger("poissonmla")


def _params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _instance(args) -> Instance:
    if getattr(args, "instance", None):
        try:
            return Instance.load(args.instance)
        except OSError as exc:
            raise InputError(f"cannot read instance: {exc}") from None
    if getattr(args, "kind", None):
        return generate_instance(args.kind, _params(args.param), args.seed)
    raise InputError("give --instance FILE or --kind NAME")


def _write(args, text: str, name: str):
    if args.out:
        path = args.out
        if os.path.isdir(path) or path.endswith(os.sep):
            os.makedirs(path, exist_ok=True)
            path = os.path.join(path, name)
        with open(path, "w") as fh:
            fh.write(text)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def _tau(args, default=None) -> float:
    tau = args.tau if args.tau is not None else default
    if tau is None or not tau > 0:
        raise InputError("--tau must be positive")
    return float(tau)


def cmd_gen_instance(args):
    inst = generate_instance(args.kind, _params(args.param), args.seed)
    doc = inst.to_dict()
    _write(args, json.dumps(doc, indent=2) + "\n", "instance.json")
    log.info("classification: %s, heaviness %.6g", classify(inst).value, heaviness(inst))


def _load_sequence(args, inst, tau):
    if args.sequence:
        with open(args.sequence) as fh:
            return RequestSequence.from_csv(fh.read(), tau, inst.tree)
    return generate(ArrivalConfig(inst, tau, args.seed, Mode(args.mode)), 0)


def cmd_simulate(args):
    inst = _instance(args)
    tau = _tau(args)
    cfg = ArrivalConfig(inst, tau, args.seed, Mode(args.mode))
    names = args.scheduler or ["instant"]
    runners = [(nm, make_runner(nm, inst)) for nm in names]
    totals = {nm: [] for nm in names}
    for k in range(args.trials):
        seq = generate(cfg, k)
        for nm, run in runners:
            d, w = run(seq)
            totals[nm].append((d, w))
    out = {"tau": tau, "trials": args.trials, "seed": args.seed, "schedulers": {}}
    for nm, vals in totals.items():
        a = np.asarray(vals)
        tot = a.sum(axis=1)
        se = float(tot.std(ddof=1) / math.sqrt(a.shape[0])) if a.shape[0] > 1 else None
        out["schedulers"][nm] = {"delay": float(a[:, 0].mean()), "weight": float(a[:, 1].mean()),
                                 "total": float(tot.mean()), "se": se}
    _write(args, json.dumps(out, indent=2) + "\n", "simulate.json")


def cmd_opt(args):
    inst = _instance(args)
    tau = _tau(args)
    seq = _load_sequence(args, inst, tau)
    sch, cost = opt_bruteforce(seq, inst.tree, max_requests=args.max_requests)
    doc = {"requests": len(seq), "cost": cost.to_dict(), "schedule": sch.to_dict(), "sequence": seq.to_dict()}
    _write(args, json.dumps(doc, indent=2) + "\n", "opt.json")


def cmd_partition(args):
    inst = _instance(args)
    if args.algorithm == "plan":
        doc = build_plan(inst).to_dict()
    else:
        doc = GenScheduler(inst).to_dict()
    _write(args, json.dumps(doc, indent=2) + "\n", f"partition_{args.algorithm}.json")


def cmd_bounds(args):
    inst = _instance(args)
    tau = _tau(args)
    kinds = args.bound or [k.value for k in LowerBound] + [k.value for k in UpperBound]
    out = {"tau": tau, "heaviness": heaviness(inst), "classification": classify(inst).value, "lower": {}, "upper": {}}
    for k in kinds:
        try:
            if k in {b.value for b in LowerBound}:
                out["lower"][k] = lower_bound(inst, tau, k)
            elif k in {b.value for b in UpperBound}:
                out["upper"][k] = upper_bound_formulas(inst, tau, k)
            else:
                raise InputError(f"unknown bound kind {k!r}")
        except InputError as exc:
            if args.bound:
                raise
            out.setdefault("skipped", {})[k] = str(exc)
    _write(args, json.dumps(out, indent=2) + "\n", "bounds.json")


def cmd_roe(args):
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        for key, val in conf.items():
            if getattr(args, key, None) in (None, [], False):
                setattr(args, key, val)
    inst = _instance(args)
    tau = _tau(args)
    cfg = ExperimentConfig(inst, tau, trials=args.trials, seed=args.seed,
                           schedulers=args.scheduler or ["instant"], denominator=args.denominator,
                           mode=args.mode, workers=args.workers)
    rep = run_experiment(cfg)
    if args.out:
        for p in emit_reports(rep, args.out, stem="roe"):
            log.info("wrote %s", p)
    print(rep.table())


def cmd_appendix_b(args):
    tab = appendix_b_separation(args.n, trials=args.trials, seed=args.seed, periods=args.periods)
    if args.out:
        for p in emit_reports(tab, args.out, stem="appendix_b"):
            log.info("wrote %s", p)
    print(tab.table())


def cmd_selftest(args):
    inst = _instance(args)
    tau = _tau(args)
    rep = statistical_selftest(inst, tau, args.trials, args.seed, args.mode, alpha=args.alpha)
    _write(args, json.dumps(rep.to_dict(), indent=2) + "\n", "selftest.json")
    if rep.passed is False:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poissonmla", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, trials=1000, tau=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=trials)
        if tau:
            p.add_argument("--tau", type=float, default=None, help="time horizon")
        p.add_argument("--out", default=None, help="output file or directory")

    def source(p):
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--kind", choices=KINDS, help="generate an instance instead of loading one")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter")
        p.add_argument("--mode", choices=[m.value for m in Mode], default="distributed")

    p = sub.add_parser("gen-instance", help="write a generated instance as JSON")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    common(p, trials=1, tau=False)
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("simulate", help="mean cost of schedulers over sampled sequences")
    source(p)
    common(p, trials=100)
    p.add_argument("--scheduler", action="append",
                   help="instant | greedy | gen | plan[:blind] | periodic:<p>[:blind]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("opt", help="exact offline optimum for one sampled or given sequence")
    source(p)
    common(p, trials=1)
    p.add_argument("--sequence", help="CSV with columns time,vertex")
    p.add_argument("--max-requests", type=int, default=12)
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("partition", help="dump the PLAN clusters or the GEN partition")
    source(p)
    common(p, trials=1, tau=False)
    p.add_argument("--algorithm", choices=["plan", "gen"], default="plan")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("bounds", help="evaluate closed-form bounds")
    source(p)
    common(p, trials=1)
    p.add_argument("--bound", action="append", help="bound kind (default: every applicable one)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("roe", help="estimate ratios of expectations")
    source(p)
    common(p)
    p.add_argument("--scheduler", action="append")
    p.add_argument("--denominator", default="opt", help="opt or a lower-bound kind")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", help="JSON file with any of the options above")
    p.set_defaults(func=cmd_roe)

    p = sub.add_parser("appendix-b", help="star instance separating INSTANT and PLAN from a trunk-periodic rule")
    common(p, tau=False)
    p.add_argument("--n", type=int, nargs="+", default=[16, 256, 4096])
    p.add_argument("--periods", type=float, default=100.0, help="horizon in PLAN periods")
    p.set_defaults(func=cmd_appendix_b)

    p = sub.add_parser("selftest", help="statistical checks of the arrival generator")
    source(p)
    common(p)
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        rc = args.func(args)
    except MLAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
