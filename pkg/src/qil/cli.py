"""Command-line front end: ``qil fit|sample|simulate|select|bench --config PATH``.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when an
optimizer fails to converge (the best iterate is still written).

Every command writes ``report.json`` (deterministic for a fixed config and
seed) and a ``timing.json`` sidecar holding wall-clock times.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .errors import NoConvergence, QILError

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("qil")

COMMANDS = ("fit", "sample", "simulate", "select", "bench")
MODEL_FORMATS = {
    "logit": "regression",
    "erg": "network",
    "skew-normal": "multivariate",
    "wallenius": "choice",
    "hierarchical-wallenius": "choice",
}
SIMULATE_DESIGNS = ("basic", "g-and-h", "g-and-k", "logit", "skew-normal", "wallenius")


# ------------------------------------------------------------------ output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


class Run:
    """Output directory plus the timing sidecar."""

    def __init__(self, cfg: RunConfig, out: Path, trace: bool):
        self.cfg = cfg
        self.out = out
        self.trace = trace
        self.timing: dict = {}
        out.mkdir(parents=True, exist_ok=True)

    def report(self, doc: dict) -> None:
        doc = dict(doc)
        doc.setdefault("command", self.cfg.command)
        doc["config"] = self.cfg.to_dict()
        _write_json(self.out / "report.json", doc)
        _write_json(self.out / "timing.json", self.timing)


# ------------------------------------------------------------------ data

def _format(cfg: RunConfig) -> str:
    if "format" in cfg.data:
        return cfg.data["format"]
    if cfg.data.get("fixture") == "florentine":
        return "network"
    if cfg.data.get("fixture") == "activities":
        return "digits"
    return MODEL_FORMATS.get(cfg.model_name, "univariate")


def _read_table(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return header, np.array(rows)


def _regression_data(cfg: RunConfig):
    from .glm import RegressionData

    header, tab = _read_table(cfg.data_path())
    resp = cfg.data.get("response", "y")
    if resp not in header:
        raise ConfigError(f"response column {resp!r} not in {cfg.data_path()}")
    j = header.index(resp)
    cols = [k for k in range(len(header)) if k != j]
    X = tab[:, cols]
    names = [header[k] for k in cols]
    if cfg.data.get("intercept", True):
        X = np.column_stack((np.ones(X.shape[0]), X))
        names = ["intercept"] + names
    return RegressionData(X, tab[:, j], tuple(names))


def _network_data(cfg: RunConfig):
    from .network import erg_change_statistics, florentine, read_edge_list

    graph = florentine() if cfg.data.get("fixture") == "florentine" else read_edge_list(cfg.data_path())
    return erg_change_statistics(graph, quadratic=bool(cfg.model.get("quadratic", False)))


def _choice_data(cfg: RunConfig):
    from .designs import WALLENIUS_M
    from .wallenius import activities, read_choice_csv, read_digit_table

    if cfg.data.get("fixture") == "activities":
        return activities()
    if _format(cfg) == "digits":
        return read_digit_table(cfg.data_path())
    return read_choice_csv(cfg.data_path(), cfg.model.get("m", WALLENIUS_M))


def _univariate_model(cfg: RunConfig):
    from .models import get_model

    try:
        model = get_model(cfg.model_name)
    except KeyError as err:
        raise ConfigError(str(err.args[0])) from None
    box = cfg.model.get("box")
    if box is not None:
        if len(box) != model.param_dim:
            raise ConfigError(f"model.box needs {model.param_dim} intervals for {model.name}")
        box = tuple((-math.inf if a is None else a, math.inf if b is None else b) for a, b in box)
        model = dataclasses.replace(model, param_box=box)
    return model


def _univariate_starts(cfg: RunConfig, model, data):
    from .models import gq_plugin_start

    if cfg.starts:
        return [np.asarray(s, dtype=float) for s in cfg.starts]
    if model.name in ("g-and-h", "g-and-k"):
        return [gq_plugin_start(data.values, model.name[-1])]
    return [model.start(data)]


def _lasso_prior(cfg: RunConfig, data, intercept: bool):
    from .glm import LassoPrior

    if cfg.prior.get("type", "default") == "flat":
        raise ConfigError("binary regression uses the LASSO prior; prior.type 'flat' is not available")
    return LassoPrior.for_design(data.p0, intercept, cfg.prior.get("lambda", 0.5))


def _intercept(cfg: RunConfig, fmt: str) -> bool:
    return fmt == "regression" and bool(cfg.data.get("intercept", True))


# ------------------------------------------------------------------ fit

def _estimate_doc(res, names) -> dict:
    cov = res.covariance
    return {
        "theta": {n: float(v) for n, v in zip(names, res.theta)},
        "covariance": None if cov is None else np.asarray(cov).tolist(),
        "covariance_available": cov is not None,
        "value": res.value,
        "converged": res.converged,
        "n_evals": res.n_evals,
    }


def run_fit(run: Run) -> int:
    cfg = run.cfg
    fmt = _format(cfg)
    t0 = time.perf_counter()
    if fmt == "univariate":
        from .objectives import iid_objective
        from .optimize import plm_estimate, pls_estimate
        from .quantiles import read_dataset_csv

        model = _univariate_model(cfg)
        data = read_dataset_csv(cfg.data_path(), cfg.data.get("column"))
        obj = iid_objective(model, data, cfg.epsilon, use_prior=cfg.prior.get("type") != "flat")
        starts = _univariate_starts(cfg, model, data)
        run.timing["setup"] = time.perf_counter() - t0
        est = pls_estimate if cfg.algorithm == "pls" else plm_estimate
        base = {"model": model.name, "algorithm": cfg.algorithm, "n": data.n, "d": obj.grid.d,
                "gap": obj.grid.gap, "epsilon": cfg.epsilon}
        names = model.param_names
        fn = lambda: est(obj, starts)  # noqa: E731
    elif fmt in ("regression", "network"):
        from .glm import binreg_map

        if cfg.algorithm != "plm":
            raise ConfigError("binary regression fits use algorithm 'plm'")
        data = _regression_data(cfg) if fmt == "regression" else _network_data(cfg)
        prior = _lasso_prior(cfg, data, _intercept(cfg, fmt))
        starts = [np.asarray(s, dtype=float) for s in cfg.starts] if cfg.starts else None
        base = {"model": cfg.model_name, "algorithm": "plm", "n": data.n, "d": 1, "gap": None,
                "p0": data.p0}
        names = data.names or [f"beta{j}" for j in range(data.p0)]
        fn = lambda: binreg_map(data, prior, starts=starts,  # noqa: E731
                                profile=cfg.prior.get("profile_lambda", True))
    elif fmt in ("choice", "digits"):
        from .optimize import plm_estimate
        from .wallenius import wallenius_objective

        if cfg.algorithm != "plm":
            raise ConfigError("Wallenius fits use algorithm 'plm'")
        design = _choice_data(cfg)
        obj = wallenius_objective(design)
        starts = cfg.starts or [np.full(design.c - 1, 1.0 / design.c)]
        base = {"model": "wallenius", "algorithm": "plm", "n": int(design.y.shape[0]), "d": 1, "gap": 0.0}
        names = obj.names()
        fn = lambda: plm_estimate(obj, starts)  # noqa: E731
    else:
        raise ConfigError(f"command 'fit' is not available for {fmt} data; use 'sample' with 'vis'")
    t1 = time.perf_counter()
    try:
        res = fn()
    except NoConvergence as err:
        run.timing["fit"] = time.perf_counter() - t1
        best = None if err.best is None else {n: float(v) for n, v in zip(names, err.best)}
        run.report(dict(base, status="no_convergence", message=str(err), best=best,
                        best_value=getattr(err, "best_value", None)))
        print(f"qil: {err}", file=sys.stderr)
        return 3
    run.timing["fit"] = time.perf_counter() - t1
    doc = dict(base, status="ok", **_estimate_doc(res, names))
    if "lambda" in res.diagnostics:
        doc["lambda"] = res.diagnostics["lambda"]
    if fmt in ("choice", "digits"):
        doc["theta"][f"theta{design.c}"] = float(1.0 - np.sum(res.theta))
    run.report(doc)
    return 0


# ------------------------------------------------------------------ sample

def _uniform_box_sampler(model):
    lo, hi = model.lower, model.upper
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ConfigError(f"{model.name}: vis and abc draw from a uniform prior on the box; "
                          "set a finite model.box")

    def sampler(rng, size):
        return lo + (hi - lo) * rng.random((size, lo.size))
    return sampler


def _sample_univariate(cfg, model, data):
    from .objectives import iid_objective
    from .optimize import ObjectiveSpec
    from .sampling import abc_rejection, adaptive_metropolis, metropolis, vanilla_importance

    S, seed = cfg.iterations, cfg.seed
    if cfg.algorithm == "abc":
        return abc_rejection(model, _uniform_box_sampler(model), data, cfg.abc.get("summaries", "octiles"),
                             S, cfg.abc.get("keep", max(1, S // 100)), seed), None
    obj = iid_objective(model, data, cfg.epsilon, use_prior=cfg.prior.get("type") != "flat")
    if cfg.algorithm == "vis":
        # uniform proposal: the weight carries the prior as well
        target = ObjectiveSpec(obj.log_target, obj.param_dim, obj.box, param_names=obj.param_names,
                               name=obj.name)
        return vanilla_importance(target, _uniform_box_sampler(model), S, seed), obj.grid
    theta0 = np.asarray(cfg.theta0, dtype=float) if cfg.theta0 else _univariate_starts(cfg, model, data)[0]
    if cfg.algorithm == "am":
        return adaptive_metropolis(obj, theta0, S, seed, cfg.burn_in), obj.grid
    pv = cfg.proposal_var or 0.01
    return metropolis(obj, theta0, S, pv * np.eye(model.param_dim), seed, cfg.burn_in), obj.grid


def _sample_multivariate(cfg):
    from .depth import log_qil_multivariate_batch, partial_correlations, partial_variances, sample_wishart
    from .optimize import ObjectiveSpec
    from .quantiles import standardize
    from .sampling import vanilla_importance

    if cfg.algorithm != "vis":
        raise ConfigError("skew-normal precision inference uses algorithm 'vis'")
    _, x = _read_table(cfg.data_path())
    x = standardize(x)
    n, p = x.shape
    iu = np.triu_indices(p)

    def prior(rng, size):
        oms = sample_wishart(np.eye(p) / (p - 1), p - 1, seed=rng, size=size)
        return oms[:, iu[0], iu[1]]

    def unpack(flat):
        om = np.zeros((flat.shape[0], p, p))
        om[:, iu[0], iu[1]] = flat
        om[:, iu[1], iu[0]] = flat
        return om

    # all n depth values, as d(0) = n for this model
    d = None
    names = [f"omega{i + 1}_{j + 1}" for i, j in zip(*iu)]
    obj = ObjectiveSpec(lambda v: float(log_qil_multivariate_batch(x, unpack(np.atleast_2d(v)), d)[0]),
                        len(names), [(-math.inf, math.inf)] * len(names), param_names=names,
                        batch_log_lik=lambda th: log_qil_multivariate_batch(x, unpack(th), d),
                        name="skew-normal")
    draws = vanilla_importance(obj, prior, cfg.iterations, cfg.seed)
    su = np.triu_indices(p, 1)
    functionals = {}
    for a, b in zip(*su):
        functionals[f"rho{a + 1}_{b + 1}"] = lambda s, a=a, b=b: partial_correlations(unpack(s))[:, a, b]
    for a in range(p):
        functionals[f"partial_var{a + 1}"] = lambda s, a=a: partial_variances(unpack(s))[:, a]
    return draws, functionals, n, n


def run_sample(run: Run) -> int:
    from .summary import summarize, thin_trace

    cfg = run.cfg
    fmt = _format(cfg)
    t0 = time.perf_counter()
    functionals = None
    if fmt == "univariate":
        from .quantiles import read_dataset_csv

        model = _univariate_model(cfg)
        data = read_dataset_csv(cfg.data_path(), cfg.data.get("column"))
        draws, grid = _sample_univariate(cfg, model, data)
        base = {"model": model.name, "n": data.n, "d": None if grid is None else grid.d,
                "gap": None if grid is None else grid.gap}
        if cfg.algorithm in ("vis", "abc"):
            base["prior"] = "uniform on model.box"
    elif fmt in ("regression", "network"):
        from .glm import binreg_lasso_am

        if cfg.algorithm != "am":
            raise ConfigError("binary regression sampling uses algorithm 'am'")
        data = _regression_data(cfg) if fmt == "regression" else _network_data(cfg)
        prior = _lasso_prior(cfg, data, _intercept(cfg, fmt))
        beta0 = np.asarray(cfg.theta0, dtype=float) if cfg.theta0 else None
        draws = binreg_lasso_am(data, prior, cfg.iterations, cfg.seed, beta0=beta0,
                                lam0=cfg.prior.get("lambda", 0.5), burn_in=cfg.burn_in)
        base = {"model": cfg.model_name, "n": data.n, "d": 1, "p0": data.p0}
    elif fmt == "multivariate":
        draws, functionals, n, d = _sample_multivariate(cfg)
        base = {"model": "skew-normal", "n": n, "d": d}
    else:
        from .sampling import adaptive_metropolis
        from .wallenius import hierarchical_sampler, wallenius_objective

        design = _choice_data(cfg)
        base = {"model": cfg.model_name, "n": int(design.y.shape[0]), "d": 1}
        if cfg.model_name == "hierarchical-wallenius":
            if cfg.algorithm != "metropolis":
                raise ConfigError("the hierarchical Wallenius model uses algorithm 'metropolis'")
            draws = hierarchical_sampler(design, cfg.iterations, cfg.seed,
                                         proposal_var=cfg.proposal_var or 0.176, burn_in=cfg.burn_in)
        else:
            if cfg.algorithm != "am":
                raise ConfigError("the Wallenius model uses algorithm 'am'")
            obj = wallenius_objective(design)
            theta0 = cfg.theta0 or np.full(design.c - 1, 1.0 / design.c)
            draws = adaptive_metropolis(obj, theta0, cfg.iterations, cfg.seed, cfg.burn_in)
            functionals = {f"theta{design.c}": lambda s: 1.0 - s.sum(axis=1)}
    run.timing["sample"] = time.perf_counter() - t0
    doc = dict(base, status="ok", algorithm=cfg.algorithm, summary=summarize(draws, functionals))
    doc["diagnostics"] = draws.diagnostics
    if run.trace:
        tr = thin_trace(draws.samples)
        _write_rows(run.out / "trace.csv", draws.names(), tr)
        doc["trace"] = "trace.csv"
    run.report(doc)
    return 0


# ------------------------------------------------------------------ simulate

def run_simulate(run: Run) -> int:
    from .designs import (LOGIT_BETA, LOGIT_BETA_100, WALLENIUS_M, WALLENIUS_THETA, logit_design,
                          skewnormal_design_data, sparse_precision_design)
    from .models import BASIC_MODEL_NAMES, get_model
    from .quantiles import write_dataset_csv
    from .wallenius import WalleniusDesign, activities, wallenius_simulate, write_choice_csv

    cfg = run.cfg
    sim = cfg.simulate
    designs = sim.get("designs", list(SIMULATE_DESIGNS))
    unknown = [d for d in designs if d not in SIMULATE_DESIGNS]
    if unknown:
        raise ConfigError(f"unknown simulate designs: {', '.join(unknown)}")
    # one child seed per design in the fixed catalog order, so adding a design
    # to the list never changes the others
    kids = np.random.SeedSequence(cfg.seed).spawn(len(SIMULATE_DESIGNS))
    seeds = {name: int(k.generate_state(1)[0]) for name, k in zip(SIMULATE_DESIGNS, kids)}
    files = []
    t0 = time.perf_counter()
    n = sim.get("n", 2000)
    for design in designs:
        s = seeds[design]
        if design == "basic":
            sub = np.random.SeedSequence(s).spawn(len(BASIC_MODEL_NAMES))
            for name, k in zip(BASIC_MODEL_NAMES, sub):
                model = get_model(name)
                ks = int(k.generate_state(1)[0])
                path = f"basic_{name}.csv"
                write_dataset_csv(run.out / path, model.simulate(n=n, seed=ks).values)
                files.append({"design": "basic", "model": name, "path": path, "seed": ks, "n": n,
                              "truth": dict(zip(model.param_names, model.truth))})
        elif design in ("g-and-h", "g-and-k"):
            model = get_model(design)
            path = f"{design.replace('-', '_')}.csv"
            write_dataset_csv(run.out / path, model.simulate(n=n, seed=s).values)
            files.append({"design": design, "path": path, "seed": s, "n": n,
                          "truth": dict(zip(model.param_names, model.truth))})
        elif design == "logit":
            p = sim.get("logit_p", 8)
            beta = LOGIT_BETA if p == 8 else LOGIT_BETA_100
            ln = sim.get("logit_n", 30000)
            data = logit_design(ln, beta, seed=s)
            header = ["y"] + [f"x{j}" for j in range(1, data.p0)]
            _write_rows(run.out / "logit.csv", header, np.column_stack((data.y, data.X[:, 1:])).tolist())
            files.append({"design": "logit", "path": "logit.csv", "seed": s, "n": ln, "p0": p,
                          "truth": dict(zip(data.names, beta)), "covariate_correlation": 0.5})
        elif design == "skew-normal":
            sn = sim.get("skew_normal_n", 40)
            ss = np.random.SeedSequence(s).generate_state(2)
            omega, sigma, pairs = sparse_precision_design(seed=int(ss[0]))
            x = skewnormal_design_data(sn, sigma, seed=int(ss[1]), standardize=False)
            p = x.shape[1]
            _write_rows(run.out / "skew_normal.csv", [f"y{j + 1}" for j in range(p)], x.tolist())
            _write_rows(run.out / "skew_normal_precision.csv", [f"c{j + 1}" for j in range(p)], omega.tolist())
            files.append({"design": "skew-normal", "path": "skew_normal.csv",
                          "precision_path": "skew_normal_precision.csv", "seed": s, "n": sn,
                          "nonzero_pairs": pairs})
        else:
            draws = activities().draws
            y = wallenius_simulate(WALLENIUS_THETA, WALLENIUS_M, draws, seed=s)
            write_choice_csv(run.out / "wallenius.csv", WalleniusDesign(WALLENIUS_M, y))
            files.append({"design": "wallenius", "path": "wallenius.csv", "seed": s, "n": int(y.shape[0]),
                          "m": WALLENIUS_M, "truth": WALLENIUS_THETA})
    run.timing["simulate"] = time.perf_counter() - t0
    _write_json(run.out / "manifest.json", {"seed": cfg.seed, "files": files})
    run.report({"status": "ok", "designs": designs, "manifest": "manifest.json", "files": [f["path"] for f in files]})
    return 0


# ------------------------------------------------------------------ select

def run_select(run: Run) -> int:
    from .depth import depth_coreset
    from .quantiles import read_dataset_csv, select_d

    cfg = run.cfg
    fmt = _format(cfg)
    t0 = time.perf_counter()
    if fmt == "univariate":
        data = read_dataset_csv(cfg.data_path(), cfg.data.get("column"))
        grid = select_d(data, cfg.epsilon)
        _write_rows(run.out / "grid.csv", ["lambda", "quantile"], zip(grid.lambdas, grid.qhat))
        doc = {"mode": "quantile-grid", "n": data.n, "d": grid.d, "gap": grid.gap, "output": "grid.csv"}
    elif fmt in ("multivariate", "regression"):
        header, tab = _read_table(cfg.data_path())
        res = depth_coreset(tab, cfg.epsilon)
        _write_rows(run.out / "indices.csv", ["row"], ([int(i)] for i in res.indices))
        doc = {"mode": "depth-coreset", "n": int(tab.shape[0]), "d": res.d, "gap": res.gap,
               "output": "indices.csv"}
    else:
        raise ConfigError(f"command 'select' is not available for {fmt} data")
    run.timing["select"] = time.perf_counter() - t0
    doc.update(status="ok", epsilon=cfg.epsilon)
    print(f"d = {doc['d']}, Kolmogorov gap = {doc['gap']:.6g} (epsilon = {cfg.epsilon})")
    run.report(doc)
    return 0


# ------------------------------------------------------------------ bench

def run_bench(run: Run) -> int:
    from .bench import run_study

    cfg = run.cfg
    b = cfg.bench
    t0 = time.perf_counter()
    rep = run_study(b["study"], models=b.get("models"), n=b.get("n"), p=b.get("p", 8),
                    replications=b.get("replications", 5), seed=cfg.seed, epsilon=cfg.epsilon,
                    iterations=cfg.iterations, include_mle=b.get("include_mle", True))
    run.timing["bench"] = time.perf_counter() - t0
    run.timing["rows"] = [{"model": r["model"], "elapsed": r.pop("elapsed")} for r in rep.rows]
    for w in rep.warnings:
        print(f"qil: warning: {w}", file=sys.stderr)
    rep.write_raw_csv(run.out / "raw.csv")
    run.report(dict(rep.to_dict(), status="ok", raw="raw.csv"))
    return 0


_RUNNERS = {"fit": run_fit, "sample": run_sample, "simulate": run_simulate, "select": run_select,
            "bench": run_bench}


# ------------------------------------------------------------------ entry

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qil", description="Quantile implied likelihood estimation.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory (default: config 'output' or '.')")
    p.add_argument("--trace", action="store_true", help="write a thinned trace.csv for samplers")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(command: str, config, seed: Optional[int] = None, out=None, trace: bool = False) -> int:
    """Programmatic entry point with the same exit codes as the CLI."""
    try:
        cfg = load_config(config, command=command)
        if seed is not None:
            if seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = seed
        out_dir = Path(out) if out is not None else (cfg.base_dir / cfg.output if cfg.output else Path.cwd())
        return _RUNNERS[command](Run(cfg, out_dir, trace))
    except ConfigError as err:
        print(f"qil: {err}", file=sys.stderr)
        return 2
    except NoConvergence as err:
        print(f"qil: {err}", file=sys.stderr)
        return 3
    except (QILError, OSError) as err:
        print(f"qil: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.command, args.config, args.seed, args.out, args.trace)


if __name__ == "__main__":
    sys.exit(main())
