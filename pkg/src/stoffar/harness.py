"""Experiment runner: multi-run averaging, cost accounting, performance profiles.

Reproduces the benchmarking protocol: repeated seeded runs per method, the
sample-weighted cost tau = sum_i (b_g,i + b_H,i) * ege_i, Dolan-More
performance profiles across methods, and CSV emission (trace / aggregate /
profile). Plots are optional; CSV is the normative output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data_io
from .objectives import FiniteSumProblem
from .optimizer import RunRecord, StoffarConfig, TRACE_COLUMNS, OptimizerError, run
from .sampling import BatchSchedule, SampledEstimator
from .subproblem import SolverConfig

METHOD_DEFAULTS = {
    # offar2-<m> handled by parser; listed here for reference defaults
    "offar2": dict(p=2, sigma0=0.01, max_iters=1000, schedule="paper_practical"),
    "wngrad": dict(p=1, m=1, sigma0=0.1, max_iters=10000, schedule="wngrad_practical"),
}


@dataclass
class ExperimentConfig:
    method: str = "offar2-1"        # offar2-<m> | wngrad
    dataset: str = "a9a"            # registry name, path, or synthetic:<N>
    subset: int | None = None
    subset_seed: int = 12345
    objective: str = "nc_logistic"  # sigmoid_ls | nc_logistic
    alpha: float = 0.001
    sigma0: float | None = None     # method default when None
    theta1: float = 2.0
    epsilon: float = 5e-4
    max_iters: int | None = None
    runs: int = 20
    base_seed: int = 0
    schedule: str | None = None
    solver: str = "matrix_free"     # matrix_free | exact_secular
    trace_loss_every: int = 10      # 0 disables exact-loss tracing
    workers: int = 1
    problem_name: str = ""

    def parsed_method(self):
        """(family, p, m) from the method string."""
        if self.method == "wngrad":
            return "wngrad", 1, 1
        if self.method.startswith("offar2-"):
            m = int(self.method.split("-", 1)[1])
            if m < 1:
                raise ValueError("memory m must be >= 1")
            return "offar2", 2, m
        raise ValueError(f"unknown method {self.method!r}")

    def resolved(self):
        """Fill method-dependent defaults."""
        family, p, m = self.parsed_method()
        d = METHOD_DEFAULTS[family]
        sigma0 = self.sigma0 if self.sigma0 is not None else d["sigma0"]
        max_iters = self.max_iters if self.max_iters is not None else d["max_iters"]
        schedule = self.schedule if self.schedule is not None else d["schedule"]
        return family, p, m, sigma0, max_iters, schedule


def tau_cost(record: RunRecord) -> float:
    """sum over iterations of (b_g + b_H) * ege."""
    return float(sum((r.b_g + r.b_h) * r.ege for r in record.rows))


def load_dataset(cfg: ExperimentConfig) -> data_io.SparseDataset:
    if cfg.dataset.startswith("synthetic:"):
        N = int(cfg.dataset.split(":", 1)[1])
        ds = data_io.synthetic_binary(N=N, seed=cfg.subset_seed, name=cfg.dataset)
    else:
        ds = data_io.load(cfg.dataset)
    if cfg.subset is not None and cfg.subset < ds.N:
        ds = data_io.subset(ds, cfg.subset, seed=cfg.subset_seed)
    return ds


def _build(cfg: ExperimentConfig, dataset) -> tuple[FiniteSumProblem, object, StoffarConfig]:
    family, p, m, sigma0, max_iters, schedule_kind = cfg.resolved()
    problem = FiniteSumProblem(dataset, kind=cfg.objective, alpha=cfg.alpha)
    schedule = BatchSchedule(kind=schedule_kind)
    estimator = SampledEstimator(p, schedule)
    opt = StoffarConfig(p=p, sigma0=sigma0, theta1=cfg.theta1, epsilon1=cfg.epsilon,
                        memory=m, max_iters=max_iters,
                        solver=SolverConfig(method=cfg.solver, theta1=cfg.theta1))
    return problem, estimator, opt


def _run_one(payload):
    cfg, dataset, run_index = payload
    problem, estimator, opt = _build(cfg, dataset)
    losses = []

    def cb(k, x, gbar, sigma, result, problem):
        if cfg.trace_loss_every and (k % cfg.trace_loss_every == 0 or result is None):
            losses.append((k, problem.value(x)))

    try:
        rec = run(problem, estimator, opt, seed=cfg.base_seed + run_index,
                  callback=cb if cfg.trace_loss_every else None)
    except OptimizerError as exc:
        rec = exc.record
    return run_index, rec, losses


@dataclass
class ExperimentResult:
    cfg: ExperimentConfig
    records: list
    loss_traces: list
    aggregate: list = field(default_factory=list)  # rows of AGGREGATE_COLUMNS
    f_star: float = math.nan

    @property
    def solved(self):
        return [r.status == "converged" for r in self.records]

    @property
    def taus(self):
        return [tau_cost(r) for r in self.records]

    def mean_tau(self) -> float:
        return float(np.mean(self.taus)) if self.records else math.nan

    def min_loss(self) -> float:
        vals = [l for trace in self.loss_traces for _, l in trace]
        return min(vals) if vals else math.nan


AGGREGATE_COLUMNS = ("k", "mean_gbar_norm", "mean_sigma", "mean_cum_samples",
                     "mean_epoch", "mean_loss_gap", "n_runs")


def run_experiment(cfg: ExperimentConfig, dataset=None) -> ExperimentResult:
    """Execute cfg.runs seeded runs; aggregation is a deterministic join."""
    if cfg.runs < 1:
        raise ValueError("runs >= 1 required")
    dataset = dataset if dataset is not None else load_dataset(cfg)
    payloads = [(cfg, dataset, i) for i in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outs = list(pool.map(_run_one, payloads))
    else:
        outs = [_run_one(p) for p in payloads]
    outs.sort(key=lambda t: t[0])
    records = [o[1] for o in outs]
    losses = [o[2] for o in outs]
    result = ExperimentResult(cfg=cfg, records=records, loss_traces=losses)
    result.f_star = result.min_loss()
    result.aggregate = build_aggregate(result, result.f_star, dataset.N)
    return result


def build_aggregate(result: ExperimentResult, f_star: float, N: int):
    """Per-iteration mean curves over runs still active at each k."""
    rows = []
    max_len = max((r.n_iters for r in result.records), default=0)
    cum_samples = [np.cumsum([row.b_g + row.b_h for row in r.rows]) for r in result.records]
    loss_maps = [dict(trace) for trace in result.loss_traces]
    for k in range(max_len):
        gb, sg, cs, lg = [], [], [], []
        for rec, cums, lmap in zip(result.records, cum_samples, loss_maps):
            if k < rec.n_iters:
                gb.append(rec.rows[k].gbar_norm)
                sg.append(rec.rows[k].sigma)
                cs.append(cums[k])
                if k in lmap and not math.isnan(f_star):
                    lg.append(lmap[k] - f_star)
        mean_cs = float(np.mean(cs))
        rows.append((k, float(np.mean(gb)), float(np.mean(sg)), mean_cs,
                     mean_cs / N, float(np.mean(lg)) if lg else math.nan, len(gb)))
    return rows


# ---------------------------------------------------------------------------
# performance profiles
# ---------------------------------------------------------------------------

@dataclass
class ProfileTable:
    methods: list
    problems: list
    ratios: dict  # (method, problem) -> ratio in [1, inf]

    def rho(self, method: str, theta: float) -> float:
        vals = [self.ratios[(method, p)] for p in self.problems]
        return sum(1 for v in vals if v <= theta) / len(self.problems)

    def breakpoints(self):
        pts = sorted({v for v in self.ratios.values() if math.isfinite(v)})
        return pts or [1.0]

    def rows(self):
        out = []
        for m in self.methods:
            for theta in self.breakpoints():
                out.append((m, theta, self.rho(m, theta)))
        return out


def performance_profile(costs: dict) -> ProfileTable:
    """costs: (method, problem) -> tau (math.inf for unsolved)."""
    methods = sorted({m for m, _ in costs})
    problems = sorted({p for _, p in costs})
    if not methods or not problems:
        raise ValueError("need at least one method and one problem")
    ratios = {}
    for prob in problems:
        vals = {m: costs.get((m, prob), math.inf) for m in methods}
        best = min(vals.values())
        for m in methods:
            if not math.isfinite(best) or not math.isfinite(vals[m]):
                ratios[(m, prob)] = math.inf
            else:
                ratios[(m, prob)] = vals[m] / best
    return ProfileTable(methods=methods, problems=problems, ratios=ratios)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return "nan" if math.isnan(f) else repr(f)


def emit(records, aggregate, profile, out_dir, plots: bool = False,
         dataset_size: int | None = None) -> list:
    """Write trace.csv / aggregate.csv / profile.csv (+ optional SVG plots)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []

        trace = out / "trace.csv"
        with open(trace, "w", encoding="utf-8") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for rec in records:
                rec.write_csv(fh, header=False)
        written.append(trace)

        agg = out / "aggregate.csv"
        with open(agg, "w", encoding="utf-8") as fh:
            fh.write(",".join(AGGREGATE_COLUMNS) + "\n")
            for row in aggregate or []:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        written.append(agg)

        prof = out / "profile.csv"
        with open(prof, "w", encoding="utf-8") as fh:
            fh.write("method,theta,rho\n")
            if profile is not None:
                for m, theta, rho in profile.rows():
                    fh.write(f"{m},{_fmt(theta)},{_fmt(rho)}\n")
        written.append(prof)

        if plots and records:
            written.extend(_emit_plots(records, aggregate, out))
        return written
    except OSError as exc:
        raise OSError(f"emit failed for {out}: {exc}") from exc


def _emit_plots(records, aggregate, out: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    if aggregate:
        ks = [r[0] for r in aggregate]
        fig, ax = plt.subplots(figsize=(6, 4))
        gaps = [(k, r[5]) for k, r in zip(ks, aggregate) if not math.isnan(r[5])]
        epochs = {k: r[4] for k, r in zip(ks, aggregate)}
        if gaps:
            ax.semilogy([epochs[k] for k, _ in gaps], [max(g, 1e-16) for _, g in gaps],
                        marker=".")
        ax.set_xlabel("epochs")
        ax.set_ylabel("loss gap")
        fig.tight_layout()
        p = out / "loss_vs_epoch.svg"
        fig.savefig(p)
        plt.close(fig)
        paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    for rec in records:
        ax.plot([r.k for r in rec.rows], [r.b_g + r.b_h for r in rec.rows], alpha=0.6)
    ax.set_xlabel("iteration")
    ax.set_ylabel("samples drawn")
    fig.tight_layout()
    p = out / "samples_vs_iteration.svg"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# derivative verification oracles (also backing the check-grad CLI)
# ---------------------------------------------------------------------------

def fd_gradient(value_fn, x, h: float = 1e-5) -> np.ndarray:
    g = np.empty_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * h)
    return g


def fd_hvp(grad_fn, x, v, h: float = 1e-5) -> np.ndarray:
    return (grad_fn(x + h * v) - grad_fn(x - h * v)) / (2.0 * h)


def check_gradients(problem, points: int = 100, seed: int = 0, h: float = 1e-5,
                    radius: float = 1.0):
    """Max relative FD errors of the analytic gradient and HVP at random points."""
    rng = np.random.default_rng(seed)
    worst_g, worst_h = 0.0, 0.0
    for _ in range(points):
        x = rng.standard_normal(problem.n) * radius
        g = problem.exact_gradient(x, counted=False)
        g_fd = fd_gradient(lambda z: problem.value(z), x, h)
        worst_g = max(worst_g, float(np.linalg.norm(g - g_fd) / max(1e-12, np.linalg.norm(g))))
        v = rng.standard_normal(problem.n)
        v /= np.linalg.norm(v)
        Hv = problem.exact_hessian_operator(x, counted=False)(v)
        Hv_fd = fd_hvp(lambda z: problem.exact_gradient(z, counted=False), x, v, h)
        worst_h = max(worst_h, float(np.linalg.norm(Hv - Hv_fd) / max(1e-12, np.linalg.norm(Hv))))
    return worst_g, worst_h
