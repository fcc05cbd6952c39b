"""Command-line entry point and the study orchestration it drives.

Four commands share one flag set: ``weights`` (full weight report on a CSV),
``sim`` (synthetic replication studies), ``aggregate`` (resampled
weighted-prediction comparison), and ``ozone`` (the bundled ozone pipeline:
weights on the full data plus the aggregation study). Every run writes its
resolved configuration next to its outputs and removes partial output on
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import shutil
import sys
from dataclasses import dataclass, asdict
from importlib import resources

import numpy as np

from . import baselines as bl
from .data import DataError, Dataset, load_csv, split
from .engine import KlEstimate, WeightReport, kl_estimate, make_report
from .hyper import average_kl_over_trace, optimize_eb, sample_mcmc
from .kernel import fit_reference
from .models import enumerate_subsets, fit_candidate
from .predict import (PredictionSet, aggregate, effective_models, predict_linear,
                      predict_reference, rmse, select_top)
from .simulate import (CURVATURE_GAMMA_MAX, SimScenario, run_replications,
                       summarize)

__all__ = ["RunConfig", "cmd_weights", "cmd_sim", "cmd_aggregate", "cmd_ozone",
           "main", "weight_study", "split_study", "ozone_dataset"]

COMMANDS = ("weights", "sim", "aggregate", "ozone")
SCENARIOS = ("curvature", "case1", "case2", "case3", "case4")
CURVATURE_GRID_POINTS = 20


@dataclass
class RunConfig:
    """Resolved run options; every field is validated before any compute."""

    command: str
    data: str | None = None
    response: str | None = None
    estimator: str = "both"
    prior: str = "flat"
    g: str | None = None
    hyper: str = "eb"
    restarts: int = 10
    mcmc_draws: int = 1000
    burn_in: int = 500
    seed: int = 0
    train_frac: float = 0.5
    reps: int = 100
    threads: int = 1
    out: str = "."
    scenario: str = "curvature"
    n: int = 100

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.estimator not in ("kl1", "kl2", "both"):
            raise ValueError(f"estimator must be kl1, kl2 or both, got {self.estimator!r}")
        if self.prior not in ("flat", "gprior"):
            raise ValueError(f"prior must be flat or gprior, got {self.prior!r}")
        if self.g is not None and self.prior == "flat":
            raise ValueError("--g is only meaningful with --prior gprior")
        if self.prior == "gprior":
            if self.g is None:
                raise ValueError("--prior gprior requires --g")
            if self.g not in ("n", "hyper"):
                raise ValueError(f"--g must be 'n' or 'hyper', got {self.g!r}")
            if self.g == "hyper":
                raise ValueError(
                    "--g hyper: divergence candidates need a fixed prior precision; "
                    "hyper-g appears among the baseline Bayes probabilities instead")
        if self.hyper not in ("eb", "mcmc"):
            raise ValueError(f"--hyper must be eb or mcmc, got {self.hyper!r}")
        if self.command in ("weights", "aggregate"):
            if not self.data or not self.response:
                raise ValueError(f"--command {self.command} requires --data and --response")
        if self.command in ("sim", "ozone") and self.data:
            raise ValueError(f"--command {self.command} does not take --data")
        if self.command == "sim" and self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError("--train-frac must lie in (0, 1)")
        for name in ("restarts", "mcmc_draws", "reps", "threads", "n"):
            if getattr(self, name) < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be >= 1")
        if self.burn_in < 0:
            raise ValueError("--burn-in must be >= 0")


def ozone_dataset() -> Dataset:
    """The bundled daily ozone fixture (330 rows, 8 covariates, response O3)."""
    path = resources.files("dprob").joinpath("datafiles/ozone.csv")
    with resources.as_file(path) as p:
        return load_csv(p, "O3")


def _candidate_g(cfg: RunConfig, n: int) -> tuple[str, float | None]:
    if cfg.prior == "flat":
        return "flat", None
    return "gprior", float(n)


def weight_study(ds: Dataset, cfg: RunConfig):
    """Fit the reference, score every subset, and collect all weight tables.

    Returns ``(report, baseline_dict, hyper_result)`` where ``hyper_result``
    is the EBResult or McmcTrace actually used.
    """
    n = ds.n
    prior, g = _candidate_g(cfg, n)
    models = enumerate_subsets(ds.p, prior=prior, g=g)

    if cfg.hyper == "eb":
        eb = optimize_eb(ds.X, ds.y, restarts=cfg.restarts, seed=cfg.seed)
        ref = fit_reference(ds.X, ds.y, eb.cfg)
        fits = [fit_candidate(ds, m, ref) for m in models]
        kls = [kl_estimate(f, ref.trH, ref.logdet_IplusH, ref.rss0, n) for f in fits]
        hyper_result = eb
        sigma0_sq = ref.rss0 / (n - 2)
    else:
        trace = sample_mcmc(ds.X, ds.y, J=cfg.mcmc_draws, burn_in=cfg.burn_in,
                            seed=cfg.seed)
        kls = _mcmc_kl_estimates(ds, models, trace)
        ref = fit_reference(ds.X, ds.y, trace.draws[-1])
        hyper_result = trace
        sigma0_sq = ref.rss0 / (n - 2)

    report = make_report(models, kls, ds.names, n)
    baseline = {
        "unit_info": bl.gprior_weight_scores(ds, models, "unit_info"),
        "hyper_g": bl.gprior_weight_scores(ds, models, "hyper_g"),
        "bic": bl.bic_weight_scores(ds, models),
        "ew": bl.exponential_weights(ds, models, sigma0_sq),
    }
    return report, baseline, hyper_result


def _mcmc_kl_estimates(ds: Dataset, models, trace) -> list[KlEstimate]:
    """Average both divergence estimators over the hyperparameter draws.

    The penalties are draw-independent, so only goodness-of-fit terms vary;
    per-draw reference fits are shared across models.
    """
    n = ds.n
    per_draw = {}

    def ref_for(cfg):
        key = id(cfg)
        if key not in per_draw:
            per_draw[key] = fit_reference(ds.X, ds.y, cfg)
        return per_draw[key]

    estimates = []
    for m in models:
        def kl1_eval(cfg, m=m):
            ref = ref_for(cfg)
            f = fit_candidate(ds, m, ref)
            k = kl_estimate(f, ref.trH, ref.logdet_IplusH, ref.rss0, n)
            return k.kl1

        def kl2_eval(cfg, m=m):
            ref = ref_for(cfg)
            f = fit_candidate(ds, m, ref)
            k = kl_estimate(f, ref.trH, ref.logdet_IplusH, ref.rss0, n)
            return k.kl2

        avg1 = average_kl_over_trace(trace, kl1_eval)
        avg2 = average_kl_over_trace(trace, kl2_eval)
        ref0 = ref_for(trace.draws[0])
        fit0 = fit_candidate(ds, m, ref0)
        p1 = 0.5 * fit0.trHj
        p2 = 0.5 * fit0.logdet_IplusHj
        estimates.append(KlEstimate(kl1=avg1, kl2=avg2,
                                    g1=n * avg1 - p1, p1=p1,
                                    g2=n * avg2 - p2, p2=p2))
    return estimates


def split_study(ds: Dataset, reps: int, train_frac: float, seed: int,
                restarts: int = 3, n_jobs: int = 1, max_evals: int = 2000):
    """Resampled out-of-sample study over random train/test splits.

    Per split: re-optimized reference hyperparameters, reference RMSE,
    per-method top-model RMSE, aggregated-prediction RMSE, top-model
    probability and effective number of models for the divergence weights
    (both estimators) and exponential weighting, plus the g-prior baselines'
    top-model summaries.
    """

    def one(rep):
        plan = split(ds, train_frac, seed + rep)
        train = ds.subset_rows(plan.train_indices)
        test = ds.subset_rows(plan.test_indices)
        n = train.n
        models = enumerate_subsets(train.p)
        eb = optimize_eb(train.X, train.y, restarts=restarts, seed=seed + rep,
                         max_evals=max_evals)
        ref = fit_reference(train.X, train.y, eb.cfg)
        fits = [fit_candidate(train, m, ref) for m in models]
        kls = [kl_estimate(f, ref.trH, ref.logdet_IplusH, ref.rss0, n) for f in fits]
        report = make_report(models, kls, train.names, n)
        ew = bl.exponential_weights(train, models, ref.rss0 / (n - 2))
        ui = bl.gprior_weight_scores(train, models, "unit_info")
        hg = bl.gprior_weight_scores(train, models, "hyper_g")

        ps = PredictionSet(
            model_predictions=np.vstack([predict_linear(train, m, test.X)
                                         for m in models]),
            reference_predictions=predict_reference(train, eb.cfg, test.X),
            weights={"d1": report.cond_1, "d2": report.cond_2,
                     "ew": ew.probabilities, "unit_info": ui.probabilities,
                     "hyper_g": hg.probabilities},
        )
        row = {"rep": rep, "seed": seed + rep,
               "gp_rmse": rmse(ps.reference_predictions, test.y)}
        for tag, weights in ps.weights.items():
            top = select_top(weights, models)
            row[f"top_rmse_{tag}"] = rmse(ps.model_predictions[top], test.y)
            row[f"top_prob_{tag}"] = float(weights[top])
            row[f"agg_rmse_{tag}"] = rmse(aggregate(ps.model_predictions, weights),
                                          test.y)
            row[f"enm_{tag}"] = effective_models(weights)
        return row

    if n_jobs == 1:
        return [one(rep) for rep in range(reps)]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(one)(rep) for rep in range(reps))


class _OutputDir:
    """Tracks written paths so a failed run leaves no partial output."""

    def __init__(self, path):
        self.path = path
        self.created_dir = not os.path.isdir(path)
        if self.created_dir:
            os.makedirs(path)
        self.written = []

    def file(self, name):
        full = os.path.join(self.path, name)
        self.written.append(full)
        return full

    def cleanup(self):
        for f in self.written:
            if os.path.isfile(f):
                os.remove(f)
        if self.created_dir and os.path.isdir(self.path) and not os.listdir(self.path):
            shutil.rmtree(self.path)


def _write_run_config(out: _OutputDir, cfg: RunConfig):
    with open(out.file("run_config.json"), "w") as fh:
        json.dump({"run_config": asdict(cfg)}, fh, indent=2)


def _print_top_models(report: WeightReport, baseline: dict, estimator: str):
    print(f"{'Method':<12} {'Variables in the model':<50} Probability")
    methods = []
    if estimator in ("kl1", "both"):
        methods.append(("pi_1|M", report.top_models(1)))
    if estimator in ("kl2", "both"):
        methods.append(("pi_2|M", report.top_models(2)))
    for name, weights in baseline.items():
        methods.append((name, weights.top_models()))
    for name, top in methods:
        for label, prob in top:
            print(f"{name:<12} {label:<50} {prob:.3f}")
        print()


def cmd_weights(cfg: RunConfig, ds: Dataset | None = None) -> None:
    out = _OutputDir(cfg.out)
    try:
        if ds is None:
            ds = load_csv(cfg.data, cfg.response)
        report, baseline, hyper_result = weight_study(ds, cfg)
        report.write_csv(out.file("report.csv"))
        with open(out.file("report.json"), "w") as fh:
            fh.write(report.to_json())
        report.write_inclusion_csv(out.file("inclusion.csv"))
        with open(out.file("baselines.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "model", "log_score", "probability"])
            for method, weights in baseline.items():
                for label, score, prob in zip(weights.labels, weights.log_scores,
                                              weights.probabilities):
                    writer.writerow([method, label, float(score), float(prob)])
        with open(out.file("hyper.json"), "w") as fh:
            fh.write(hyper_result.to_json())
        _write_run_config(out, cfg)
        _print_top_models(report, baseline, cfg.estimator)
    except BaseException:
        out.cleanup()
        raise


def _sim_summary_rows(gamma, rows):
    total = summarize(rows)
    flat = {}
    for (method, metric), value in total.items():
        flat[f"{method}:{metric}"] = value
    flat["gamma"] = gamma
    return flat


def _write_long_csv(path, rows, extra=None):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["rep", "method", "metric", "value"]
        if extra:
            header = [extra[0]] + header
        writer.writerow(header)
        for row in rows:
            record = [row["rep"], row["method"], row["metric"], row["value"]]
            if extra:
                record = [row[extra[0]]] + record
            writer.writerow(record)


def _line_chart(path, x, series, xlabel, ylabel):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, values in series.items():
        ax.plot(x, values, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_sim(cfg: RunConfig) -> None:
    out = _OutputDir(cfg.out)
    try:
        methods = ("d1", "d2", "unit_info", "hyper_g")
        if cfg.scenario == "curvature":
            gammas = np.linspace(0.0, CURVATURE_GAMMA_MAX, CURVATURE_GRID_POINTS)
            all_rows, summaries = [], []
            for gamma in gammas:
                scn = SimScenario("curvature", gamma=float(gamma), n=cfg.n)
                rows = run_replications(scn, methods, reps=cfg.reps, seed=cfg.seed,
                                        restarts=cfg.restarts, n_jobs=cfg.threads)
                for row in rows:
                    row["gamma"] = float(gamma)
                all_rows.extend(rows)
                summaries.append(_sim_summary_rows(float(gamma), rows))
            _write_long_csv(out.file("replications.csv"), all_rows, extra=("gamma",))
            keys = sorted({k for s in summaries for k in s if k != "gamma"})
            with open(out.file("summary.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["gamma"] + keys)
                for s in summaries:
                    writer.writerow([s["gamma"]] + [s.get(k, "") for k in keys])
            full = "x"
            _line_chart(out.file("probability.svg"), gammas, {
                "pi_1|M": [s.get(f"d1:cond[{full}]") for s in summaries],
                "pi_2|M": [s.get(f"d2:cond[{full}]") for s in summaries],
                "unit_info": [s.get(f"unit_info:prob[{full}]") for s in summaries],
                "hyper_g": [s.get(f"hyper_g:prob[{full}]") for s in summaries],
            }, "gamma", "probability of the full model")
            _line_chart(out.file("inclusion.svg"), gammas, {
                m: [s.get(f"{m}:inclusion[x]") for s in summaries]
                for m in methods
            }, "gamma", "inclusion probability of x")
            rmse_series = {m: [s.get(f"{m}:top_rmse") for s in summaries]
                           for m in methods}
            rmse_series["reference"] = [s.get("reference:rmse") for s in summaries]
            _line_chart(out.file("rmse.svg"), gammas, rmse_series,
                        "gamma", "out-of-sample RMSE")
        else:
            scn = SimScenario(cfg.scenario, n=cfg.n)
            rows = run_replications(scn, methods, reps=cfg.reps, seed=cfg.seed,
                                    restarts=cfg.restarts, n_jobs=cfg.threads)
            _write_long_csv(out.file("replications.csv"), rows)
            summary = summarize(rows)
            with open(out.file("summary.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["method", "metric", "mean"])
                for (method, metric), value in sorted(summary.items()):
                    writer.writerow([method, metric, value])
        _write_run_config(out, cfg)
    except BaseException:
        out.cleanup()
        raise


def cmd_aggregate(cfg: RunConfig, ds: Dataset | None = None) -> None:
    out = _OutputDir(cfg.out)
    try:
        if ds is None:
            ds = load_csv(cfg.data, cfg.response)
        rows = split_study(ds, reps=cfg.reps, train_frac=cfg.train_frac,
                           seed=cfg.seed, restarts=cfg.restarts, n_jobs=cfg.threads)
        with open(out.file("rmse.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "method", "rmse"])
            for row in rows:
                writer.writerow([row["seed"], "reference", row["gp_rmse"]])
                for tag in ("d1", "d2", "ew", "unit_info", "hyper_g"):
                    writer.writerow([row["seed"], f"agg_{tag}", row[f"agg_rmse_{tag}"]])
                    writer.writerow([row["seed"], f"top_{tag}", row[f"top_rmse_{tag}"]])
        summary = {
            "reps": cfg.reps,
            "mean_gp_rmse": float(np.mean([r["gp_rmse"] for r in rows])),
        }
        for tag in ("d1", "d2", "ew", "unit_info", "hyper_g"):
            agg = np.array([r[f"agg_rmse_{tag}"] for r in rows])
            summary[f"mean_agg_rmse_{tag}"] = float(agg.mean())
            summary[f"se_agg_rmse_{tag}"] = float(agg.std(ddof=1) / math.sqrt(len(agg)))
            summary[f"mean_top_rmse_{tag}"] = float(
                np.mean([r[f"top_rmse_{tag}"] for r in rows]))
            summary[f"mean_enm_{tag}"] = float(np.mean([r[f"enm_{tag}"] for r in rows]))
        ew = np.array([r["agg_rmse_ew"] for r in rows])
        diffs = {tag: np.array([r[f"agg_rmse_{tag}"] for r in rows]) - ew
                 for tag in ("d1", "d2")}
        summary["mean_diff_vs_ew_d1"] = float(diffs["d1"].mean())
        summary["mean_diff_vs_ew_d2"] = float(diffs["d2"].mean())
        with open(out.file("summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2)
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(4, 3.5))
        ax.boxplot([diffs["d1"], diffs["d2"]], tick_labels=["D1 - EW", "D2 - EW"])
        ax.axhline(0.0, linewidth=0.8)
        ax.set_ylabel("aggregated RMSE difference")
        fig.tight_layout()
        fig.savefig(out.file("rmse_diff.svg"), format="svg")
        plt.close(fig)
        _write_run_config(out, cfg)
    except BaseException:
        out.cleanup()
        raise


def cmd_ozone(cfg: RunConfig) -> None:
    ds = ozone_dataset()
    created_parent = not os.path.isdir(cfg.out)
    try:
        weights_cfg = RunConfig(**{**asdict(cfg), "command": "weights",
                                   "out": os.path.join(cfg.out, "weights"),
                                   "data": "<bundled>", "response": "O3"})
        cmd_weights(weights_cfg, ds=ds)
        agg_cfg = RunConfig(**{**asdict(cfg), "command": "aggregate",
                               "out": os.path.join(cfg.out, "aggregate"),
                               "data": "<bundled>", "response": "O3"})
        cmd_aggregate(agg_cfg, ds=ds)
    except BaseException:
        if created_parent and os.path.isdir(cfg.out):
            shutil.rmtree(cfg.out)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dprob",
        description="Divergence-based model weights against a Gaussian-process reference")
    parser.add_argument("--command", required=True, choices=COMMANDS)
    parser.add_argument("--data", help="input CSV path (weights/aggregate)")
    parser.add_argument("--response", help="response column name")
    parser.add_argument("--estimator", default="both", choices=("kl1", "kl2", "both"))
    parser.add_argument("--prior", default="flat", choices=("flat", "gprior"))
    parser.add_argument("--g", default=None, choices=("n", "hyper"))
    parser.add_argument("--hyper", default="eb", choices=("eb", "mcmc"))
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--mcmc-draws", type=int, default=1000, dest="mcmc_draws")
    parser.add_argument("--burn-in", type=int, default=500, dest="burn_in")
    parser.add_argument("--seed", type=int, required=True,
                        help="seed is mandatory; no wall-clock seeding")
    parser.add_argument("--train-frac", type=float, default=0.5, dest="train_frac")
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out", required=True)
    parser.add_argument("--scenario", default="curvature", choices=SCENARIOS,
                        help="sim command only")
    parser.add_argument("--n", type=int, default=100,
                        help="sim train size (test size is fixed at 100)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"dprob: invalid options: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.command == "weights":
            cmd_weights(cfg)
        elif cfg.command == "sim":
            cmd_sim(cfg)
        elif cfg.command == "aggregate":
            cmd_aggregate(cfg)
        else:
            cmd_ozone(cfg)
    except DataError as exc:
        print(f"dprob {cfg.command}: data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"dprob {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
