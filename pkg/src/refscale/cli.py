"""Command-line pipeline: ingest -> verify -> score -> fit -> theory ->
citetail -> report.

Every artifact is stamped with the config hash and seed, outputs are written
atomically, and a rerun with identical (dataset, fixtures, config, seed)
produces byte-identical files.

Exit codes: 0 success, 1 usage, 2 data error, 3 fixture/network error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import citetail as citetail_mod
from . import theory as theory_mod
from .citations import load_stopwords
from .dataset import Dataset, IngestError, cells_to_csv, ingest_dataset, model_quality
from .openalex import FixtureMiss, OpenAlexClient
from .pipeline import FixtureMissBatch, parse_corpus, score_corpus, verify_corpus
from .stats import (
    CellRefs,
    SigmoidFit,
    fit_ols,
    fit_sigmoid,
    incremental_f,
    partial_weight_sweep,
    sigmoid,
    spearman,
)
from .verification import FieldVerdict, Status, VerificationResult
from .zipflaw import (
    bootstrap_alpha_ci,
    fit_zipf_mle,
    fit_zipf_ols,
    rank_frequencies,
    rolling_window_alpha,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FIXTURE = 3


@dataclass
class RunConfig:
    dataset: str
    fixtures: str
    output_dir: str
    offline: bool = True
    partial_weight: float = 0.50
    contradiction_penalty: float = -1.0
    seed: int = 0
    moe_convention: str = "total"  # "total" or "active" for MoE P axis
    overlap_threshold: float = 0.5
    rate_limit: float = 5.0
    mailto: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.partial_weight <= 1.0:
            raise IngestError("partial_weight must be in [0, 1]")
        if self.moe_convention not in ("total", "active"):
            raise IngestError("moe_convention must be 'total' or 'active'")

    def hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}


def load_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(json.loads(Path(args.config).read_text()))
    for key in (
        "dataset", "fixtures", "output_dir", "offline", "partial_weight",
        "contradiction_penalty", "seed", "moe_convention", "overlap_threshold",
        "rate_limit", "mailto",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if values.get("mailto") is None:
        values["mailto"] = os.environ.get("REFSCALE_MAILTO")
    missing = [k for k in ("dataset", "fixtures", "output_dir") if not values.get(k)]
    if missing:
        raise UsageError(f"missing required config value(s): {', '.join(missing)}")
    return RunConfig(**values)


class UsageError(Exception):
    pass


# -- atomic, stamped output helpers -------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path, payload: dict, config: RunConfig) -> None:
    payload = dict(payload)
    payload["meta"] = config.stamp()
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_csv(path: Path, header: List[str], rows, config: RunConfig) -> None:
    import io

    buf = io.StringIO()
    buf.write(f"# config={config.hash()} seed={config.seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _fmt(x: float, digits: int = 10) -> str:
    return f"{x:.{digits}g}"


# -- persistence of intermediate artifacts -------------------------------------

def _results_path(config: RunConfig) -> Path:
    return Path(config.output_dir) / "verification.jsonl"


def save_results(results, corpus, config: RunConfig) -> None:
    lines = []
    for key in sorted(results):
        model, topic, index = key
        rec = {"model": model, "topic": topic, "index": index,
               "title": corpus.refs[key].title}
        rec.update(results[key].to_dict())
        lines.append(json.dumps(rec, sort_keys=True))
    _atomic_write(_results_path(config), "\n".join(lines) + ("\n" if lines else ""))


def load_results(config: RunConfig):
    path = _results_path(config)
    if not path.exists():
        raise UpstreamMissing([str(path)])
    results = {}
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        key = (rec["model"], rec["topic"], rec["index"])
        results[key] = VerificationResult(
            verdicts={k: FieldVerdict(v) for k, v in rec["verdicts"].items()},
            authenticity=rec["authenticity"],
            status=Status(rec["status"]),
            matched_candidate=rec["matched_candidate"],
        )
    return results


class UpstreamMissing(Exception):
    def __init__(self, paths: List[str]):
        super().__init__("missing upstream artifact(s): " + ", ".join(paths))
        self.paths = paths


def make_client(config: RunConfig) -> OpenAlexClient:
    return OpenAlexClient(
        fixtures=Path(config.fixtures),
        offline=config.offline,
        rate_limit=config.rate_limit,
        mailto=config.mailto,
    )


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(config: RunConfig) -> int:
    dataset = ingest_dataset(config.dataset)
    counts = dataset.cell_counts()
    write_json(
        Path(config.output_dir) / "ingest_report.json",
        {
            "n_models": len(dataset.models),
            "n_topics": len(dataset.topics),
            "n_generations": len(dataset.generations),
            "n_cells": len(counts),
            "n_relevance_labels": len(dataset.relevance_labels),
        },
        config,
    )
    print(f"ingested {len(dataset.models)} models, {len(dataset.topics)} topics, "
          f"{len(counts)} populated cells")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    dataset = ingest_dataset(config.dataset)
    corpus = parse_corpus(dataset)
    stopwords = load_stopwords()
    client = make_client(config)
    results = verify_corpus(
        corpus, client, stopwords,
        overlap_threshold=config.overlap_threshold,
        contradiction_penalty=config.contradiction_penalty,
    )
    save_results(results, corpus, config)
    acct = corpus.accounting
    write_json(
        Path(config.output_dir) / "accounting.json",
        {"accounting": acct.as_dict(),
         "status_counts": _status_counts(results)},
        config,
    )
    failures = "\n".join(json.dumps(f, sort_keys=True) for f in corpus.failures)
    _atomic_write(Path(config.output_dir) / "parse_failures.jsonl",
                  failures + ("\n" if failures else ""))
    print(f"accounting: requested {acct.requested} / produced {acct.produced} "
          f"/ analysed {acct.analysed}")
    return EXIT_OK


def _status_counts(results) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for res in results.values():
        counts[res.status.value] = counts.get(res.status.value, 0) + 1
    return dict(sorted(counts.items()))


def cmd_score(config: RunConfig) -> int:
    dataset = ingest_dataset(config.dataset)
    corpus = parse_corpus(dataset)
    results = load_results(config)
    cells, omitted = score_corpus(dataset, corpus, results, config.partial_weight)
    out = Path(config.output_dir)
    cells_to_csv(cells, dataset, out / "observations.csv", config.moe_convention)
    mq = model_quality(cells)
    write_csv(out / "model_quality.csv", ["model", "quality"],
              [(m, _fmt(q)) for m, q in mq.items()], config)
    if omitted:
        write_json(out / "omitted_cells.json",
                   {"omitted": [list(c) for c in omitted]}, config)
    print(f"scored {len(cells)} cells ({len(omitted)} omitted)")
    return EXIT_OK


def _load_cells(config: RunConfig):
    path = Path(config.output_dir) / "observations.csv"
    if not path.exists():
        raise UpstreamMissing([str(path)])
    rows = list(csv.DictReader(path.open()))
    missing_s = sorted({r["topic"] for r in rows if not r["log10_works"]})
    if missing_s:
        raise IngestError(
            "cells missing works count for topic(s): " + ", ".join(missing_s)
        )
    return rows


def cmd_fit(config: RunConfig) -> int:
    rows = _load_cells(config)
    fitted = [r for r in rows if r["log10_params"]]
    triples = [
        (float(r["log10_params"]), float(r["log10_works"]), float(r["quality"]))
        for r in fitted
    ]
    sig = fit_sigmoid(triples)
    arr = np.asarray(triples)
    two = fit_ols(arr[:, :2], arr[:, 2])
    one = fit_ols(arr[:, 0], arr[:, 2])
    f_stat, dof = incremental_f(two, one)

    # Model-level log-linear fit (one point per model)
    by_model: Dict[str, List[Tuple[float, float]]] = {}
    for r in fitted:
        by_model.setdefault(r["model"], []).append(
            (float(r["log10_params"]), float(r["quality"]))
        )
    pts = [(v[0][0], float(np.mean([q for _, q in v])))
           for v in (by_model[m] for m in sorted(by_model))]
    model_fit = None
    if len(pts) >= 3:
        model_fit = fit_ols([p for p, _ in pts], [q for _, q in pts])

    report = {
        "sigmoid": _sigmoid_dict(sig),
        "ols_cells_two_predictor": _ols_dict(two),
        "ols_cells_size_only": _ols_dict(one),
        "incremental_f": {"f": f_stat, "dof": list(dof)},
        "ols_model_level_size_only": _ols_dict(model_fit) if model_fit else None,
        "n_cells_fit": len(triples),
        "n_cells_total": len(rows),
    }
    out = Path(config.output_dir)
    write_json(out / "fit_report.json", report, config)

    # Per-model rank correlation of quality with content representation.
    per_model = []
    for model in sorted({r["model"] for r in rows}):
        sub = [r for r in rows if r["model"] == model]
        if len(sub) < 3:
            continue
        s_vals = [float(r["log10_works"]) for r in sub]
        q_vals = [float(r["quality"]) for r in sub]
        if np.ptp(s_vals) == 0 or np.ptp(q_vals) == 0:
            continue
        rho, p = spearman(s_vals, q_vals)
        per_model.append((model, _fmt(rho, 6), _fmt(p, 6)))
    write_csv(out / "per_model_spearman.csv",
              ["model", "rho_quality_vs_log10_works", "p_two_sided"],
              per_model, config)

    # Regime classification per cell under the fitted parameters.
    regimes = []
    for r in fitted:
        z = (sig.alpha * float(r["log10_params"])
             + sig.beta * float(r["log10_works"]) + sig.gamma)
        regimes.append((r["model"], r["topic"], _fmt(z, 6),
                        theory_mod.classify_regime(z)))
    write_csv(out / "regimes.csv", ["model", "topic", "z", "regime"],
              regimes, config)

    # Fitted-curve samples for external plotting.
    zs = np.linspace(-8, 8, 161)
    write_csv(out / "sigmoid_curve.csv", ["z", "quality"],
              [(_fmt(z, 6), _fmt(float(sigmoid(z)), 8)) for z in zs], config)

    # Relevance-weight robustness sweep (needs per-reference scores).
    sweep_rows = _sweep(config)
    if sweep_rows is not None:
        write_csv(out / "partial_weight_sweep.csv",
                  ["partial_weight", "sigmoid_r2", "loglinear_r2",
                   "rank_rho_vs_baseline"],
                  [(_fmt(r["partial_weight"], 4), _fmt(r["sigmoid_r2"], 8),
                    _fmt(r["loglinear_r2"], 8), _fmt(r["rank_rho_vs_baseline"], 8))
                   for r in sweep_rows],
                  config)
    print(f"sigmoid fit: alpha={sig.alpha:.3f} beta={sig.beta:.3f} "
          f"gamma={sig.gamma:.3f} r2={sig.r2:.3f} (n={sig.n})")
    return EXIT_OK


def _sweep(config: RunConfig):
    dataset = ingest_dataset(config.dataset)
    results = load_results(config)
    if not dataset.relevance_labels:
        return None
    by_cell: Dict[Tuple[str, str], CellRefs] = {}
    for key, res in results.items():
        model, topic, _ = key
        label = dataset.relevance_labels.get(key)
        if label is None:
            return None
        spec = dataset.models[model]
        params = spec.fit_params(config.moe_convention)
        works = dataset.topics[topic].works_count
        if params is None or works <= 0:
            continue
        cell = by_cell.setdefault(
            (model, topic),
            CellRefs(model=model, log10_p=math.log10(params),
                     log10_s=math.log10(works), refs=[]),
        )
        cell.refs.append((res.authenticity, label))
    cells = [by_cell[k] for k in sorted(by_cell)]
    if len(cells) < 4:
        return None
    return partial_weight_sweep(cells, baseline=config.partial_weight)


def _sigmoid_dict(fit: SigmoidFit) -> dict:
    return {
        "alpha": fit.alpha, "beta": fit.beta, "gamma": fit.gamma,
        "se_alpha": fit.se_alpha, "se_beta": fit.se_beta, "se_gamma": fit.se_gamma,
        "r2": fit.r2, "n": fit.n, "converged": fit.converged,
        "iterations": fit.iterations, "rss": fit.rss,
    }


def _ols_dict(fit) -> dict:
    return {
        "coefficients": list(map(float, fit.coefficients)),
        "standard_errors": list(map(float, fit.standard_errors)),
        "r2": fit.r2, "rss": fit.rss, "n": fit.n,
    }


def cmd_zipf(config: RunConfig, counts_path: str, window: int) -> int:
    rows = list(csv.reader(open(counts_path)))
    counts = [float(r[1]) for r in rows if r and not r[0].startswith("#")
              and r[1].replace(".", "", 1).isdigit()]
    if not counts:
        raise IngestError(f"{counts_path}: no (concept, count) rows found")
    rf = rank_frequencies(counts)
    alpha_ols, se, r2 = fit_zipf_ols(rf)
    x_min = float(min(rf.frequencies))
    alpha_mle = fit_zipf_mle(rf.frequencies, x_min)
    ci = bootstrap_alpha_ci(rf.frequencies, x_min, resamples=1000, seed=config.seed)
    out = Path(config.output_dir)
    write_json(out / "zipf_report.json", {
        "alpha_ols": alpha_ols, "alpha_ols_se": se, "ols_r2": r2,
        "alpha_mle": alpha_mle, "x_min": x_min,
        "bootstrap_ci": [ci.lower, ci.upper], "resamples": ci.resamples,
        "n": len(rf),
    }, config)
    if 3 <= window <= len(rf):
        profile = rolling_window_alpha(rf, window)
        write_csv(out / "zipf_rolling.csv", ["center_rank", "alpha_local"],
                  [(_fmt(c, 8), _fmt(a, 8)) for c, a in profile], config)
    print(f"zipf: OLS alpha={alpha_ols:.3f} (r2={r2:.3f}), MLE alpha={alpha_mle:.3f}")
    return EXIT_OK


def cmd_theory(config: RunConfig) -> int:
    out = Path(config.output_dir)
    fit = _load_fit(config)
    lin = theory_mod.linearize(fit)
    slope_table = []
    for alpha_z in (1.00, 1.23, 1.24):
        m_max = theory_mod.reference_slope(alpha_z)
        slope_table.append({
            "alpha_z": alpha_z,
            "m_max": round(m_max, 3),
            "efficiency_at_m": round(
                theory_mod.efficiency(lin.m, round(m_max, 3)), 4),
        })
    report = {
        "fit": _sigmoid_dict(fit),
        "linearized": {"m": lin.m, "n": lin.n, "c": lin.c,
                       "m_ceiling": lin.m_ceiling, "n_ceiling": lin.n_ceiling},
        "reference_slopes": slope_table,
        "required_params_q90_s32_billions": theory_mod.required_params(0.90, 32, fit),
        "recall_threshold_log10_s_at_405b": theory_mod.required_content(405, fit),
    }
    write_json(out / "theory_report.json", report, config)

    # Simulator sweep for plotting: recall fraction and linked quality.
    exps = theory_mod.TheoryExponents(alpha_z=1.23).calibrated(100_000)
    link = theory_mod.QualityLink(a=1.0, b=0.0)
    rows = []
    for log_p in np.linspace(0, 4, 17):
        for log_s in (2.0, 4.0, 6.0):
            cfg_sim = theory_mod.SimConfig(
                m=100_000, p=10 ** log_p, s=10 ** log_s, exponents=exps)
            _, q_frac = theory_mod.simulate_recall(cfg_sim)
            quality = (theory_mod.quality_from_Q(q_frac, link)
                       if q_frac > 0 else 0.0)
            rows.append((_fmt(log_p, 6), _fmt(log_s, 6),
                         _fmt(q_frac, 8), _fmt(quality, 8)))
    write_csv(out / "sim_sweep.csv",
              ["log10_P", "log10_S", "Q", "quality"], rows, config)
    print(f"theory: m={lin.m:.3f} n={lin.n:.3f} c={lin.c:.4f}")
    return EXIT_OK


def _load_fit(config: RunConfig) -> SigmoidFit:
    path = Path(config.output_dir) / "fit_report.json"
    if not path.exists():
        raise UpstreamMissing([str(path)])
    d = json.loads(path.read_text())["sigmoid"]
    return SigmoidFit(
        alpha=d["alpha"], beta=d["beta"], gamma=d["gamma"],
        se_alpha=d["se_alpha"], se_beta=d["se_beta"], se_gamma=d["se_gamma"],
        r2=d["r2"], n=d["n"], converged=d["converged"],
        iterations=d["iterations"], rss=d["rss"],
    )


def cmd_citetail(config: RunConfig, min_n: int, resamples: int) -> int:
    dataset = ingest_dataset(config.dataset)
    corpus = parse_corpus(dataset)
    results = load_results(config)
    stopwords = load_stopwords()
    client = make_client(config)
    samples = citetail_mod.build_citation_samples(
        corpus.refs, results, client, stopwords, config.overlap_threshold)
    params = {name: spec.fit_params(config.moe_convention)
              for name, spec in dataset.models.items()}
    report = citetail_mod.citation_gradient(
        samples, params, min_n=min_n, resamples=resamples, seed=config.seed)
    out = Path(config.output_dir)
    rows = []
    for model in report.included_models:
        ci = report.medians[model]
        n_matched = len(next(s for s in samples if s.model == model).matched)
        rows.append((model, _fmt(float(params[model]), 8), n_matched,
                     _fmt(ci.point, 8), _fmt(ci.lower, 8), _fmt(ci.upper, 8)))
    write_csv(out / "citation_gradient.csv",
              ["model", "params_billions", "n_matched", "median",
               "ci_low", "ci_high"], rows, config)
    write_json(out / "citetail_report.json", {
        "weighted_fit": _ols_dict(report.fit),
        "spearman_rho": report.spearman_rho,
        "spearman_p": report.spearman_p,
        "included_models": report.included_models,
        "excluded_models": report.excluded_models,
        "min_n": min_n,
        "accounting": {
            s.model: {"n_matched": len(s.matched), "n_unmatched": s.n_unmatched,
                      "n_excluded_status": s.n_excluded_status,
                      "n_errors": s.n_errors}
            for s in samples
        },
    }, config)
    print(f"citetail: slope={report.fit.slopes[0]:.3f} "
          f"rho={report.spearman_rho:.3f} over {len(report.included_models)} models")
    return EXIT_OK


def cmd_report(config: RunConfig, min_n: int, resamples: int) -> int:
    out = Path(config.output_dir)
    missing = [str(out / name) for name in ("verification.jsonl",)
               if not (out / name).exists()]
    if missing:
        raise UpstreamMissing(missing)
    cmd_score(config)
    cmd_fit(config)
    cmd_theory(config)
    try:
        cmd_citetail(config, min_n=min_n, resamples=resamples)
    except ValueError as err:
        write_json(out / "citetail_report.json",
                   {"skipped": str(err)}, config)

    # Model x topic quality matrix.
    rows = _load_cells(config)
    models = sorted({r["model"] for r in rows})
    topics = sorted({r["topic"] for r in rows},
                    key=lambda t: -float(next(r["log10_works"] for r in rows
                                              if r["topic"] == t)))
    matrix = []
    for model in models:
        by_topic = {r["topic"]: r["quality"] for r in rows if r["model"] == model}
        matrix.append([model] + [by_topic.get(t, "") for t in topics])
    write_csv(out / "quality_matrix.csv", ["model"] + topics, matrix, config)

    summary = [
        f"run config hash: {config.hash()}  seed: {config.seed}",
        f"artifacts in: {out}",
    ]
    fit = json.loads((out / "fit_report.json").read_text())
    sig = fit["sigmoid"]
    summary.append(
        "sigmoid: alpha={alpha:.3f} beta={beta:.3f} gamma={gamma:.3f} "
        "r2={r2:.3f} n={n}".format(**sig))
    _atomic_write(out / "summary.txt", "\n".join(summary) + "\n")
    print("\n".join(summary))
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="refscale",
                     description="Scholarly-reference recall measurement pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override")
        p.add_argument("--dataset")
        p.add_argument("--fixtures")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--offline", dest="offline", action="store_true",
                       default=None)
        p.add_argument("--live", dest="offline", action="store_false")
        p.add_argument("--partial-weight", dest="partial_weight", type=float)
        p.add_argument("--contradiction-penalty", dest="contradiction_penalty",
                       type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--moe-convention", dest="moe_convention",
                       choices=("total", "active"))
        p.add_argument("--overlap-threshold", dest="overlap_threshold", type=float)
        p.add_argument("--rate-limit", dest="rate_limit", type=float)
        p.add_argument("--mailto")

    for name in ("ingest", "verify", "score", "fit", "theory"):
        common(sub.add_parser(name))
    p_zipf = sub.add_parser("zipf")
    common(p_zipf)
    p_zipf.add_argument("--counts", required=True,
                        help="CSV of (concept, count) rows")
    p_zipf.add_argument("--window", type=int, default=0)
    for name in ("citetail", "report"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--min-n", dest="min_n", type=int, default=50)
        p.add_argument("--resamples", type=int, default=10000)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "verify":
            return cmd_verify(config)
        if args.command == "score":
            return cmd_score(config)
        if args.command == "fit":
            return cmd_fit(config)
        if args.command == "zipf":
            return cmd_zipf(config, args.counts, args.window)
        if args.command == "theory":
            return cmd_theory(config)
        if args.command == "citetail":
            return cmd_citetail(config, args.min_n, args.resamples)
        if args.command == "report":
            return cmd_report(config, args.min_n, args.resamples)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (FixtureMissBatch, FixtureMiss, IOError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FIXTURE
    except (IngestError, UpstreamMissing, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
