"""Simulation studies: RMSE, ESS and timing tables at desk scale.

Replication seeds follow one rule for every study: the condition seed ``s``
feeds ``numpy.random.SeedSequence(s).spawn(R)``, and child ``r`` yields two
32-bit integers via ``generate_state(2)``, the first for data simulation and
the second for the estimator.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import QILError
from .summary import rmse

__all__ = ["BenchReport", "replication_seeds", "run_study", "STUDIES"]

log = logging.getLogger(__name__)

STUDIES = ("basic", "g-and-h", "g-and-k", "logit", "skew-normal", "wallenius")
_FAILURES = (QILError, ArithmeticError, np.linalg.LinAlgError, ValueError)


@dataclass
class BenchReport:
    """Aggregated rows (one per condition) plus raw per-replication records."""

    study: str
    rows: list = field(default_factory=list)
    raw: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"study": self.study, "rows": self.rows, "warnings": self.warnings}

    def write_raw_csv(self, path) -> None:
        keys = ["study", "model", "replication", "data_seed", "algo_seed", "status", "parameter",
                "truth", "estimate", "mle"]
        with open(Path(path), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
            w.writeheader()
            for rec in self.raw:
                w.writerow(rec)


def replication_seeds(seed: int, replications: int) -> list[tuple[int, int]]:
    """``(data_seed, algo_seed)`` per replication, by the module-level rule."""
    kids = np.random.SeedSequence(int(seed)).spawn(int(replications))
    return [tuple(int(v) for v in k.generate_state(2)) for k in kids]


def _raw_records(study, model, r, seeds, names, truth, est, mle=None, status="ok"):
    out = []
    for j, name in enumerate(names):
        out.append({"study": study, "model": model, "replication": r, "data_seed": seeds[0],
                    "algo_seed": seeds[1], "status": status, "parameter": name,
                    "truth": float(truth[j]),
                    "estimate": "" if est is None else float(est[j]),
                    "mle": "" if mle is None else float(mle[j])})
    return out


def _fail_record(study, model, r, seeds, err):
    log.warning("%s/%s replication %d failed: %s", study, model, r, err)
    return {"study": study, "model": model, "replication": r, "data_seed": seeds[0],
            "algo_seed": seeds[1], "status": f"failed: {type(err).__name__}"}


def _row(model, algorithm, n, p0, d, reps, failures, rmse_value, elapsed, **extra):
    row = {"model": model, "algorithm": algorithm, "n": int(n), "p0": int(p0),
           "d": None if d is None else float(d), "replications": int(reps), "failures": int(failures),
           "rmse": None if rmse_value is None else float(rmse_value), "elapsed": float(elapsed)}
    row.update(extra)
    return row


# ---------------------------------------------------------------- studies

def _univariate_study(report, models, n, reps, seed, epsilon, include_mle, algorithm="pls"):
    from .models import get_model, gq_plugin_start
    from .objectives import iid_objective
    from .optimize import pls_estimate

    all_err, all_mle, all_d = [], [], []
    for name in models:
        model = get_model(name)
        truth = np.asarray(model.truth, dtype=float)
        errs, mle_errs, ds, fails = [], [], [], 0
        t0 = time.perf_counter()
        for r, seeds in enumerate(replication_seeds(seed, reps)):
            try:
                data = model.simulate(truth, n, seeds[0])
                obj = iid_objective(model, data, epsilon)
                if name in ("g-and-h", "g-and-k"):
                    start = gq_plugin_start(data.values, name[-1])
                else:
                    start = model.start(data)
                est = pls_estimate(obj, [start]).theta
                mle = model.mle(data) if include_mle and model.mle_fn is not None else None
            except _FAILURES as err:
                fails += 1
                report.raw.append(_fail_record(report.study, name, r, seeds, err))
                continue
            errs.append(est - truth)
            ds.append(obj.grid.d)
            if mle is not None:
                mle_errs.append(mle - truth)
            report.raw += _raw_records(report.study, name, r, seeds, model.param_names, truth, est, mle)
        elapsed = time.perf_counter() - t0
        extra = {}
        if mle_errs:
            extra["rmse_mle"] = rmse(np.concatenate(mle_errs), 0.0)
            all_mle += mle_errs
        report.rows.append(_row(name, algorithm, n, 0, np.median(ds) if ds else None, reps, fails,
                                rmse(np.concatenate(errs), 0.0) if errs else None, elapsed, **extra))
        all_err += errs
        all_d += ds
    if len(models) > 1:
        extra = {"rmse_mle": rmse(np.concatenate(all_mle), 0.0)} if all_mle else {}
        report.rows.append(_row("all", algorithm, n, 0, np.median(all_d) if all_d else None, reps,
                                sum(r["failures"] for r in report.rows),
                                rmse(np.concatenate(all_err), 0.0) if all_err else None,
                                sum(r["elapsed"] for r in report.rows), **extra))


def _logit_study(report, n, p, reps, seed):
    from .designs import LOGIT_BETA, LOGIT_BETA_100, logit_design
    from .glm import LassoPrior, binreg_map, logistic_irls

    beta = LOGIT_BETA if p == 8 else LOGIT_BETA_100
    errs, gaps, fails = [], [], 0
    t0 = time.perf_counter()
    names = [f"beta{j}" for j in range(beta.size)]
    for r, seeds in enumerate(replication_seeds(seed, reps)):
        try:
            data = logit_design(n, beta, seed=seeds[0])
            mle = logistic_irls(data.X, data.y, ridge=1e-8)
            est = binreg_map(data, LassoPrior.for_design(data.p0, True)).theta
        except _FAILURES as err:
            fails += 1
            report.raw.append(_fail_record(report.study, "logit", r, seeds, err))
            continue
        errs.append(est - beta)
        gaps.append(np.max(np.abs(est - mle)))
        report.raw += _raw_records(report.study, "logit", r, seeds, names, beta, est, mle)
    report.rows.append(_row("logit", "plm", n, p, 1, reps, fails,
                            rmse(np.concatenate(errs), 0.0) if errs else None, time.perf_counter() - t0,
                            max_abs_diff_mle=float(max(gaps)) if gaps else None))


def _skewnormal_study(report, n, reps, seed, S):
    from .depth import log_qil_multivariate_batch, partial_correlations, sample_wishart
    from .designs import skewnormal_design_data, sparse_precision_design
    from .sampling import effective_sample_size, normalize_log_weights

    p = 10
    rz, rnz, rdiag, ess, fails = [], [], [], [], 0
    t0 = time.perf_counter()
    iu = np.triu_indices(p, 1)
    for r, seeds in enumerate(replication_seeds(seed, reps)):
        try:
            ss = np.random.SeedSequence(seeds[0]).generate_state(2)
            omega, sigma, _ = sparse_precision_design(p, seed=int(ss[0]))
            x = skewnormal_design_data(n, sigma, seed=int(ss[1]))
            oms = sample_wishart(np.eye(p) / (p - 1), p - 1, seed=seeds[1], size=S)
            w = normalize_log_weights(log_qil_multivariate_batch(x, oms))
        except _FAILURES as err:
            fails += 1
            report.raw.append(_fail_record(report.study, "skew-normal", r, seeds, err))
            continue
        pc = partial_correlations(oms)[:, iu[0], iu[1]]
        true_pc = partial_correlations(omega)[iu]
        sq = w @ (pc - true_pc) ** 2
        zero = true_pc == 0
        rz.append(np.sqrt(np.mean(sq[zero])))
        rnz.append(np.sqrt(np.mean(sq[~zero])))
        diag = np.diagonal(oms, axis1=1, axis2=2)
        rdiag.append(np.sqrt(np.mean(w @ (diag - np.diag(omega)) ** 2)))
        ess.append(effective_sample_size(w))
        post_pc = w @ pc
        report.raw += _raw_records(report.study, "skew-normal", r, seeds,
                                   [f"rho{i + 1}_{j + 1}" for i, j in zip(*iu)], true_pc, post_pc)

    def ms(v):
        return (float(np.mean(v)), float(np.std(v))) if v else (None, None)

    report.rows.append(_row("skew-normal", "vis", n, 0, n, reps, fails, None, time.perf_counter() - t0,
                            S=int(S), rmse_zero=ms(rz), rmse_nonzero=ms(rnz), rmse_diagonal=ms(rdiag),
                            ess=ms(ess), ess_fraction=ms([e / S for e in ess])))


def _wallenius_study(report, reps, seed, S):
    from .designs import WALLENIUS_M, WALLENIUS_THETA
    from .sampling import adaptive_metropolis
    from .wallenius import WalleniusDesign, activities, wallenius_objective, wallenius_simulate

    draws = activities().draws
    errs, mean_errs, fails = [], [], 0
    t0 = time.perf_counter()
    c = WALLENIUS_THETA.size
    names = [f"theta{j + 1}" for j in range(c)]
    for r, seeds in enumerate(replication_seeds(seed, reps)):
        try:
            y = wallenius_simulate(WALLENIUS_THETA, WALLENIUS_M, draws, seed=seeds[0])
            obj = wallenius_objective(WalleniusDesign(WALLENIUS_M, y))
            post = adaptive_metropolis(obj, np.full(c - 1, 1.0 / c), S, seed=seeds[1])
        except _FAILURES as err:
            fails += 1
            report.raw.append(_fail_record(report.study, "wallenius", r, seeds, err))
            continue
        full = np.column_stack((post.samples, 1.0 - post.samples.sum(axis=1)))
        errs.append(full - WALLENIUS_THETA)
        pm = full.mean(axis=0)
        mean_errs.append(pm - WALLENIUS_THETA)
        report.raw += _raw_records(report.study, "wallenius", r, seeds, names, WALLENIUS_THETA, pm)
    report.rows.append(_row("wallenius", "am", draws.size, 0, draws.size, reps, fails,
                            rmse(np.concatenate(errs), 0.0) if errs else None, time.perf_counter() - t0,
                            S=int(S), rmse_posterior_mean=rmse(np.concatenate(mean_errs), 0.0) if mean_errs else None))


def run_study(study: str, *, models: Optional[Sequence[str]] = None, n: Optional[int] = None,
              p: int = 8, replications: int = 5, seed: int = 0, epsilon: float = 0.01,
              iterations: int = 10000, include_mle: bool = True) -> BenchReport:
    """Run one simulation study and aggregate its RMSE table.

    RMSE is the square root of the mean squared difference between the
    data-generating parameter and the estimates (or MC draws), pooled over
    parameters and replications.  Failed replications are excluded and
    counted in the ``failures`` column.
    """
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}")
    report = BenchReport(study)
    if replications == 0:
        msg = "zero replications requested; the report is empty"
        log.warning(msg)
        report.warnings.append(msg)
        return report
    if study == "basic":
        from .models import BASIC_MODEL_NAMES
        _univariate_study(report, list(models or BASIC_MODEL_NAMES), n or 2000, replications, seed,
                          epsilon, include_mle)
    elif study in ("g-and-h", "g-and-k"):
        _univariate_study(report, [study], n or 20000, replications, seed, epsilon, False)
    elif study == "logit":
        _logit_study(report, n or 30000, p, replications, seed)
    elif study == "skew-normal":
        _skewnormal_study(report, n or 40, replications, seed, iterations)
    else:
        _wallenius_study(report, replications, seed, iterations)
    return report
