"""Command-line interface.

Subcommands: run, bench, profile, check-grad, theory, datasets.
Exit codes: 0 success, 1 convergence failure, 2 config/IO error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from dataclasses import fields
from pathlib import Path

from . import data_io, harness, theory
from .harness import ExperimentConfig, emit, performance_profile, run_experiment

_INT_FIELDS = {"subset", "subset_seed", "max_iters", "runs", "base_seed",
               "trace_loss_every", "workers"}
_FLOAT_FIELDS = {"alpha", "sigma0", "theta1", "epsilon"}


def _coerce(key: str, value: str):
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    return value


def _config_from_sources(file_path: str | None, section: str, overrides: list[str],
                         cli_pairs: dict) -> ExperimentConfig:
    """Precedence: CLI flag > --override > config file > defaults."""
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    if file_path:
        parser = configparser.ConfigParser()
        read = parser.read(file_path)
        if not read:
            raise FileNotFoundError(f"config file {file_path!r} not found")
        if parser.has_section(section):
            for key, val in parser.items(section):
                if key not in known:
                    raise KeyError(f"unknown config key {key!r} in [{section}]")
                values[key] = _coerce(key, val)
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"--override expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        if key not in known:
            raise KeyError(f"unknown override key {key!r}")
        values[key] = _coerce(key, val)
    for key, val in cli_pairs.items():
        if val is not None:
            values[key] = val
    return ExperimentConfig(**values)


def _cmd_run(args) -> int:
    cli_pairs = {k: getattr(args, k, None)
                 for k in ("method", "dataset", "subset", "objective", "runs",
                           "base_seed", "epsilon", "max_iters", "workers")}
    cfg = _config_from_sources(args.config, "experiment", args.override, cli_pairs)
    result = run_experiment(cfg)
    costs = {(cfg.method, cfg.problem_name or cfg.dataset):
             result.mean_tau() if all(result.solved) else math.inf}
    profile = performance_profile(costs)
    emit(result.records, result.aggregate, profile, args.out, plots=args.plots)
    solved = sum(result.solved)
    print(f"{cfg.method}: {solved}/{cfg.runs} runs converged, "
          f"mean tau = {result.mean_tau():.6g}")
    return 0 if solved == cfg.runs else 1


def _cmd_bench(args) -> int:
    parser = configparser.ConfigParser()
    if not parser.read(args.suite):
        raise FileNotFoundError(f"suite file {args.suite!r} not found")
    shared = dict(parser.items("suite")) if parser.has_section("suite") else {}
    method_sections = [s for s in parser.sections() if s.startswith("method:")]
    if not method_sections:
        raise ValueError("suite file defines no [method:...] sections")

    results = []
    for sec in method_sections:
        values = dict(shared)
        values.update(dict(parser.items(sec)))
        values["method"] = sec.split(":", 1)[1]
        known = {f.name for f in fields(ExperimentConfig)}
        bad = set(values) - known
        if bad:
            raise KeyError(f"unknown suite keys {sorted(bad)}")
        cfg = ExperimentConfig(**{k: _coerce(k, v) if isinstance(v, str) else v
                                  for k, v in values.items()})
        results.append(run_experiment(cfg))

    # loss gaps against the best value across all methods
    f_star = min((r.min_loss() for r in results
                  if not math.isnan(r.min_loss())), default=math.nan)
    costs = {}
    all_records = []
    for r in results:
        prob = r.cfg.problem_name or f"{r.cfg.dataset}/{r.cfg.objective}"
        costs[(r.cfg.method, prob)] = r.mean_tau() if all(r.solved) else math.inf
        r.aggregate = harness.build_aggregate(r, f_star, denom_N(r))
        all_records.extend(r.records)
    profile = performance_profile(costs)
    agg = results[0].aggregate if len(results) == 1 else \
        [row for r in results for row in r.aggregate]
    emit(all_records, agg, profile, args.out, plots=args.plots)

    report = Path(args.out) / "report.txt"
    with open(report, "w", encoding="utf-8") as fh:
        fh.write("method  problem  solved  mean_tau\n")
        for r in results:
            prob = r.cfg.problem_name or f"{r.cfg.dataset}/{r.cfg.objective}"
            fh.write(f"{r.cfg.method}  {prob}  {sum(r.solved)}/{r.cfg.runs}  "
                     f"{r.mean_tau():.6g}\n")
    print(report.read_text(), end="")
    return 0 if all(all(r.solved) for r in results) else 1


def denom_N(result) -> int:
    if result.cfg.subset:
        return result.cfg.subset
    if result.cfg.dataset.startswith("synthetic:"):
        return int(result.cfg.dataset.split(":", 1)[1])
    info = data_io.REGISTRY.get(result.cfg.dataset)
    return info.samples if info else 1


def _cmd_profile(args) -> int:
    costs = {}
    with open(args.costs, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            tau = row["tau"].strip()
            costs[(row["method"], row["problem"])] = \
                math.inf if tau in ("inf", "") else float(tau)
    table = performance_profile(costs)
    out = Path(args.out) / "profile.csv" if Path(args.out).is_dir() else Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("method,theta,rho\n")
        for m, theta, rho in table.rows():
            fh.write(f"{m},{theta!r},{rho!r}\n")
    print(f"wrote {out}")
    return 0


def _cmd_check_grad(args) -> int:
    from .objectives import FiniteSumProblem

    if args.dataset.startswith("synthetic:"):
        ds = data_io.synthetic_binary(N=int(args.dataset.split(":", 1)[1]),
                                      n=args.features, seed=11)
    else:
        ds = data_io.load(args.dataset)
    problem = FiniteSumProblem(ds, kind=args.objective, alpha=args.alpha)
    worst_g, worst_h = harness.check_gradients(problem, points=args.points, seed=0)
    print(f"{args.objective}: max relative gradient error {worst_g:.3e} "
          f"(tol 1e-5), HVP error {worst_h:.3e} (tol 1e-4)")
    return 0 if worst_g <= 1e-5 and worst_h <= 1e-4 else 1


def _cmd_theory(args) -> int:
    tp = theory.TheoryParams(p=args.p, L_p=args.L, kappaD=args.kappa_d,
                             sigma0=args.sigma0, theta1=args.theta1, m=args.m,
                             kappa_high=args.kappa_high, Gamma0=args.gamma0,
                             E_g0=args.e_g0)
    chain = theory.kappa_chain(tp)
    for name in ("chi1", "chi2", "chi3", "chi4", "kappa_p", "kappa_a", "kappa_b",
                 "kappa_c", "kappa_d", "kappa_e", "kappa_f", "kappa_g", "eta",
                 "sigma_max", "sigma_max_explicit"):
        print(f"{name:18s} = {getattr(chain, name):.10g}")
    print(f"{'bound(k=%d)' % args.k:18s} = {theory.complexity_bound(tp, args.k):.10g}")
    if tp.p in (1, 2):
        print(f"{'corollary_const':18s} = {theory.corollary_constant(tp):.10g}")
    return 0


def _cmd_datasets(args) -> int:
    if args.action == "list":
        for info in data_io.REGISTRY.values():
            print(f"{info.name:8s} samples={info.samples:>9d} features={info.features:>4d} "
                  f"{info.url}")
        return 0
    path = data_io.fetch(args.name)
    print(f"fetched {args.name} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stoffar",
                                 description="objective-function-free adaptive-regularization "
                                             "optimizer benchmark tool")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment configuration")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--override", action="append", default=[], metavar="k=v")
    p_run.add_argument("--method")
    p_run.add_argument("--dataset")
    p_run.add_argument("--subset", type=int)
    p_run.add_argument("--objective")
    p_run.add_argument("--runs", type=int)
    p_run.add_argument("--base-seed", dest="base_seed", type=int)
    p_run.add_argument("--epsilon", type=float)
    p_run.add_argument("--max-iters", dest="max_iters", type=int)
    p_run.add_argument("--workers", type=int)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--plots", action="store_true")
    p_run.set_defaults(fn=_cmd_run)

    p_bench = sub.add_parser("bench", help="run a multi-method suite")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--out", default="out")
    p_bench.add_argument("--plots", action="store_true")
    p_bench.set_defaults(fn=_cmd_bench)

    p_prof = sub.add_parser("profile", help="performance profile from a cost table")
    p_prof.add_argument("--costs", required=True, help="CSV with method,problem,tau")
    p_prof.add_argument("--out", default="profile.csv")
    p_prof.set_defaults(fn=_cmd_profile)

    p_chk = sub.add_parser("check-grad", help="finite-difference derivative check")
    p_chk.add_argument("--objective", required=True,
                       choices=["sigmoid_ls", "nc_logistic"])
    p_chk.add_argument("--dataset", default="synthetic:300")
    p_chk.add_argument("--features", type=int, default=40)
    p_chk.add_argument("--alpha", type=float, default=0.001)
    p_chk.add_argument("--points", type=int, default=100)
    p_chk.set_defaults(fn=_cmd_check_grad)

    p_th = sub.add_parser("theory", help="print the constant chain and bounds")
    p_th.add_argument("--p", type=int, default=2)
    p_th.add_argument("--L", type=float, default=3.0)
    p_th.add_argument("--kappa-d", dest="kappa_d", type=float, default=0.0)
    p_th.add_argument("--sigma0", type=float, default=1.0)
    p_th.add_argument("--theta1", type=float, default=2.0)
    p_th.add_argument("--m", type=int, default=1)
    p_th.add_argument("--kappa-high", dest="kappa_high", type=float, default=0.0)
    p_th.add_argument("--gamma0", type=float, default=1.0)
    p_th.add_argument("--e-g0", dest="e_g0", type=float, default=1.0)
    p_th.add_argument("--k", type=int, default=0)
    p_th.set_defaults(fn=_cmd_theory)

    p_ds = sub.add_parser("datasets", help="manage the dataset cache")
    p_ds.add_argument("action", choices=["fetch", "list"])
    p_ds.add_argument("name", nargs="?", default="a9a")
    p_ds.set_defaults(fn=_cmd_datasets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, KeyError, ValueError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
