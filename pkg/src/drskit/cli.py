"""Command-line pipeline driver.

Every command echoes its resolved invocation to
``<out dir>/<command>.run_config.json``; ``drskit replay`` re-runs any
echo and reproduces the outputs byte for byte.  Exit codes: 0 success,
2 input/schema error, 3 computation infeasibility, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__, io
from .avc.features import extract_gop_features
from .drs import bd_rate, gain_distribution, simulate, trace_rd_points
from .errors import InputError, ToolkitError
from .ladder import (
    LadderProblem,
    QualityLog,
    best_resolution_probability,
    cumulative_probability,
    optimize_ladder_exhaustive,
    optimize_ladder_greedy,
    weights_from_bandwidth,
)
from .protocol import CvConfig, cross_validate, greedy_feature_selection
from .rcql import build_report
from .rdmodel import RDCurve, find_crossover, fit_logistic
from .vqm import (
    DEFAULT_BASE_FEATURES,
    Hyperparams,
    feature_importance,
    model_to_dict,
    predict_batch,
    train,
)

__all__ = ["main"]


def _echo_config(out_dir: Path, command: str, argv: list[str], args=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"tool": "drskit", "version": __version__, "command": command, "argv": argv}
    if args is not None:
        params = {k: v for k, v in vars(args).items() if k != "func"}
        doc["params"] = {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()}
    io.write_json(out_dir / f"{command}.run_config.json", doc)


def _parse_pair(text: str) -> tuple[tuple[int, int], tuple[int, int]]:
    parts = text.split(":")
    if len(parts) != 2:
        raise InputError(f"pair {text!r} is not WxH:WxH")
    a = io.parse_resolution(parts[0])
    b = io.parse_resolution(parts[1])
    lo, hi = sorted((a, b), key=lambda r: r[0] * r[1])
    return lo, hi


def _parse_feature_subsample(text: str):
    if text in ("sqrt", "all"):
        return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise InputError(f"feature subsample {text!r} must be sqrt, all, an int or a float") from None


def _hyperparams(args) -> Hyperparams:
    return Hyperparams(
        n_trees=args.trees,
        max_depth=None if args.max_depth == 0 else args.max_depth,
        min_leaf=args.min_leaf,
        feature_subsample=_parse_feature_subsample(args.feature_subsample),
        bootstrap=not args.no_bootstrap,
    )


def _base_features(args) -> tuple[str, ...]:
    if args.base_features is None:
        return DEFAULT_BASE_FEATURES
    return tuple(n.strip() for n in args.base_features.split(",") if n.strip())


def _add_hyperparam_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100, help="number of residual trees")
    p.add_argument("--max-depth", type=int, default=12, help="tree depth limit (0 = unlimited)")
    p.add_argument("--min-leaf", type=int, default=4, help="minimum samples per leaf")
    p.add_argument("--feature-subsample", default="sqrt", help="per-split feature pool: sqrt, all, int or fraction")
    p.add_argument("--no-bootstrap", action="store_true", help="disable bootstrap resampling")
    p.add_argument("--base-features", default=None, help="comma-separated base-model feature names")
    p.add_argument("--threads", type=int, default=1, help="worker thread bound")


def _mean_rd_curves(args) -> dict[str, dict[tuple[int, int], RDCurve]]:
    """Per (content, resolution) RD curves from either input kind."""
    curves: dict[str, dict[tuple[int, int], RDCurve]] = defaultdict(dict)
    if args.quality_log:
        log = io.load_quality_log(args.quality_log, args.units)
        contents = sorted({c for c, _ in log.gop_ids})
        for content in contents:
            rows = [i for i, (c, _) in enumerate(log.gop_ids) if c == content]
            for k, res in enumerate(log.resolutions):
                samples = []
                for j, b in enumerate(log.rungs):
                    col = log.scores[rows, j, k]
                    if np.isnan(col).all():
                        continue
                    samples.append((b, float(np.nanmean(col))))
                if len(samples) >= 2:
                    curves[content][res] = RDCurve.from_samples(res, samples)
    else:
        points = io.load_scored_points(args.scored_points, args.units)
        column = args.column
        grouped: dict[tuple[str, tuple[int, int]], list] = defaultdict(list)
        for p in points:
            grouped[(p.content_id, p.resolution)].append((p.bitrate_kbps, getattr(p, column)))
        for (content, res), samples in sorted(grouped.items()):
            curves[content][res] = RDCurve.from_samples(res, samples)
    return curves


def _add_curve_source_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--quality-log", help="quality-log CSV (per-rung mean scores are fitted)")
    src.add_argument("--scored-points", help="scored-points CSV")
    p.add_argument(
        "--column",
        choices=("subjective_jod", "objective_score"),
        default="subjective_jod",
        help="scored-points column to fit",
    )


def cmd_extract_features(args, argv) -> int:
    data = Path(args.input).read_bytes()
    content_id = args.content_id or Path(args.input).stem
    rows, diag = extract_gop_features(data, fps=args.fps, gop_seconds=args.gop_seconds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_feature_log(out, content_id, rows)
    _echo_config(out.parent, "extract-features", argv, args)
    print(f"wrote {len(rows)} GOP rows to {out}")
    if diag.leading_garbage_bytes or diag.forbidden_bit_violations or diag.truncated_final:
        print(
            f"diagnostics: leading_garbage={diag.leading_garbage_bytes} "
            f"forbidden_bit={diag.forbidden_bit_violations} truncated_final={diag.truncated_final}"
        )
    return 0


def cmd_fit(args, argv) -> int:
    curves = _mean_rd_curves(args)
    fits = []
    for content in sorted(curves):
        for res in sorted(curves[content], key=lambda r: r[0] * r[1]):
            curve = curves[content][res]
            if len(curve.points) < 4:
                continue
            params = fit_logistic(curve)
            fits.append(
                {
                    "content_id": content,
                    "resolution": list(res),
                    "n_points": len(curve.points),
                    "beta1": params.beta1,
                    "beta2": params.beta2,
                    "beta3": params.beta3,
                    "beta4": params.beta4,
                    "rss": params.rss,
                }
            )
    if not fits:
        raise InputError("no (content, resolution) group has the 4+ points needed for a fit")
    out = Path(args.out)
    io.write_json(out / "fits.json", {"fits": fits})
    _echo_config(out, "fit", argv, args)
    print(f"wrote {len(fits)} fits to {out / 'fits.json'}")
    return 0


def cmd_crossover(args, argv) -> int:
    curves = _mean_rd_curves(args)
    results = []
    for content in sorted(curves):
        res_list = sorted(curves[content], key=lambda r: r[0] * r[1])
        pairs = [_parse_pair(p) for p in args.pair.split(",")] if args.pair else list(zip(res_list, res_list[1:]))
        for lo_res, hi_res in pairs:
            if lo_res not in curves[content] or hi_res not in curves[content]:
                continue
            lo_curve = curves[content][lo_res]
            hi_curve = curves[content][hi_res]
            if len(lo_curve.points) < 4 or len(hi_curve.points) < 4:
                continue
            if args.range:
                rng = (args.range[0], args.range[1])
            else:
                rng = (
                    max(lo_curve.r_min, hi_curve.r_min),
                    min(lo_curve.bitrates[-1], hi_curve.bitrates[-1]),
                )
            xover = find_crossover(
                fit_logistic(lo_curve),
                fit_logistic(hi_curve),
                rng,
                io.format_resolution(lo_res),
                io.format_resolution(hi_res),
            )
            results.append(
                {
                    "content_id": content,
                    "lower_curve": xover.lower_curve,
                    "higher_curve": xover.higher_curve,
                    "status": xover.status,
                    "bitrate_kbps": xover.bitrate_kbps,
                    "range_lo": xover.range_lo,
                    "range_hi": xover.range_hi,
                    "n_crossings": xover.n_crossings,
                }
            )
    if not results:
        raise InputError("no resolution pair had two fittable curves")
    out = Path(args.out)
    io.write_json(out / "crossovers.json", {"crossovers": results})
    _echo_config(out, "crossover", argv, args)
    print(f"wrote {len(results)} cross-over results to {out / 'crossovers.json'}")
    return 0


def cmd_bench_rcql(args, argv) -> int:
    points = io.load_scored_points(args.scored_points, args.units)
    pairs = [_parse_pair(p) for p in args.pairs.split(",")] if args.pairs else None
    report = build_report(points, pairs=pairs, tie_eps=args.tie_eps)
    out = Path(args.out)
    io.write_json(out / "rcql_report.json", report.to_dict())
    io.write_rcql_csv(out / "rcql_rows.csv", out / "rcql_pairs.csv", report)
    _echo_config(out, "bench-rcql", argv, args)
    print(f"srocc={report.srocc:.4f} plcc={report.plcc:.4f} rows={len(report.rows)} skipped={len(report.skipped)}")
    return 0


def cmd_analyze_gops(args, argv) -> int:
    log = io.load_quality_log(args.log, args.units)
    table = best_resolution_probability(log)
    cum = cumulative_probability(table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_probability_csv(out / "probability.csv", table)
    io.write_probability_csv(out / "cumulative.csv", cum)
    io.write_json(
        out / "probability.json",
        {
            "rungs": [float(b) for b in table.rungs],
            "resolutions": [list(r) for r in table.resolutions],
            "probability": table.probabilities.tolist(),
            "cumulative": cum.probabilities.tolist(),
        },
    )
    _echo_config(out, "analyze-gops", argv, args)
    print(f"analyzed {log.n_gops} GOPs x {len(log.rungs)} rungs x {len(log.resolutions)} resolutions")
    return 0


def cmd_select_ladder(args, argv) -> int:
    log = io.load_quality_log(args.log, args.units)
    candidates = None
    if args.candidates:
        candidates = io.ladder_entries(io.load_ladder(args.candidates, args.units))
    if args.bandwidth_samples:
        weights = weights_from_bandwidth(io.load_bandwidth_samples(args.bandwidth_samples, args.units), log.rungs)
    elif args.weights:
        weights = io.load_weights(args.weights, args.units)
    else:
        weights = None
    problem = LadderProblem.build(log, k_max=args.k, weights=weights, candidates=candidates)
    solver = optimize_ladder_exhaustive if args.solver == "exhaustive" else optimize_ladder_greedy
    solution = solver(problem)
    out = Path(args.out)
    io.write_json(out / "ladder_solution.json", io.solution_to_dict(solution))
    io.save_ladder(out / "ladder.json", io.solution_from_dict(io.solution_to_dict(solution)))
    _echo_config(out, "select-ladder", argv, args)
    print(f"selected {len(solution.selected)} representations, objective {solution.objective:.6f}")
    return 0


def _write_trace_outputs(out: Path, name: str, trace) -> None:
    io.write_json(out / f"{name}.json", io.trace_to_dict(trace))
    io.write_trace_csv(out / f"{name}.csv", trace)


def cmd_simulate(args, argv) -> int:
    log = io.load_quality_log(args.log, args.units)
    ladder = io.load_ladder_or_solution(args.ladder, args.units)
    trace = simulate(log, ladder, granularity_gops=args.granularity)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_trace_outputs(out, "trace", trace)
    drs_curve = trace_rd_points(trace)
    with open(out / "rd_points.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("bitrate_kbps,mean_quality\n")
        for p in drs_curve.points:
            fh.write(f"{p.bitrate_kbps!r},{p.quality!r}\n")
    # Per-rung mean points feed the BD computation directly (PCHIP); a
    # logistic fit of the same points is emitted alongside for plotting.
    if len(drs_curve.points) >= 4:
        fitted = fit_logistic(drs_curve)
        io.write_json(
            out / "rd_fit.json",
            {
                "beta1": fitted.beta1,
                "beta2": fitted.beta2,
                "beta3": fitted.beta3,
                "beta4": fitted.beta4,
                "rss": fitted.rss,
            },
        )

    if args.baseline:
        baseline_ladder = io.load_ladder_or_solution(args.baseline, args.units)
        baseline_trace = simulate(log, baseline_ladder, granularity_gops=args.granularity)
        _write_trace_outputs(out, "baseline_trace", baseline_trace)
        _write_bd_and_gains(out, baseline_trace, trace)
    _echo_config(out, "simulate", argv, args)
    print(f"simulated {log.n_gops} GOPs x {len(log.rungs)} rungs (granularity {args.granularity})")
    return 0


def _write_bd_and_gains(out: Path, baseline_trace, drs_trace) -> None:
    bd = bd_rate(trace_rd_points(baseline_trace), trace_rd_points(drs_trace))
    io.write_json(
        out / "bd_report.json",
        {
            "bd_rate_percent": bd.bd_rate_percent,
            "bd_quality": bd.bd_quality,
            "quality_overlap": list(bd.quality_overlap),
            "log_rate_overlap": list(bd.log_rate_overlap),
        },
    )
    gains_summary = {}
    for b in baseline_trace.rungs:
        stats = gain_distribution(baseline_trace, drs_trace, b)
        left, right, counts = stats.histogram()
        io.write_histogram_csv(out / f"gain_hist_{int(b)}.csv", left, right, counts)
        gains_summary[str(b)] = {
            "mean": stats.mean,
            "median": stats.median,
            "percentiles": {str(k): v for k, v in stats.percentiles.items()},
        }
    io.write_json(out / "gains_summary.json", gains_summary)


def _trace_from_json(path) -> "object":
    from .drs import DrsTrace

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rungs = tuple(float(b) for b in doc["rungs"])
    resolutions = tuple((int(r[0]), int(r[1])) for r in doc["resolutions"])
    n = int(doc["n_gops"])
    gop_ids = []
    chosen_res = np.zeros((n, len(rungs)), dtype=np.int64)
    chosen_score = np.zeros((n, len(rungs)))
    sel = doc["selections"]
    if len(sel) != n * len(rungs):
        raise InputError(f"trace file {path} has {len(sel)} selections, expected {n * len(rungs)}")
    for i in range(n):
        block = sel[i * len(rungs) : (i + 1) * len(rungs)]
        gop_ids.append((block[0]["content_id"], int(block[0]["gop_index"])))
        for j, entry in enumerate(block):
            chosen_res[i, j] = resolutions.index(tuple(entry["resolution"]))
            chosen_score[i, j] = float(entry["score"])
    return DrsTrace(
        rungs=rungs,
        resolutions=resolutions,
        gop_ids=tuple(gop_ids),
        granularity_gops=int(doc["granularity_gops"]),
        chosen_res=chosen_res,
        chosen_score=chosen_score,
        per_rung_mean=chosen_score.mean(axis=0),
        flips=np.asarray(doc["flips"], dtype=np.int64),
    )


def cmd_report(args, argv) -> int:
    baseline_trace = _trace_from_json(args.baseline_trace)
    drs_trace = _trace_from_json(args.drs_trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_bd_and_gains(out, baseline_trace, drs_trace)
    _echo_config(out, "report", argv, args)
    print(f"wrote BD report and gain histograms to {out}")
    return 0


def cmd_train(args, argv) -> int:
    records, schema = io.load_feature_log(args.features, args.units)
    model = train(
        records,
        schema,
        hyperparams=_hyperparams(args),
        seed=args.seed,
        base_features=_base_features(args),
        threads=args.threads,
    )
    labeled = [r for r in records if r.label_jod is not None]
    X = np.array([r.features for r in labeled], dtype=float)
    y = np.array([r.label_jod for r in labeled], dtype=float)
    train_rmse = float(np.sqrt(np.mean((predict_batch(model, X) - y) ** 2)))
    out = Path(args.out)
    io.write_json(out / "model.json", model_to_dict(model))
    io.write_json(
        out / "training_summary.json",
        {
            "n_records": len(labeled),
            "train_rmse": train_rmse,
            "feature_importance": feature_importance(model),
            "seed": args.seed,
        },
    )
    _echo_config(out, "train", argv, args)
    print(f"trained on {len(labeled)} records, train rmse {train_rmse:.6f}")
    return 0


def cmd_cv(args, argv) -> int:
    records, schema = io.load_feature_log(args.features, args.units)
    cv = CvConfig(folds=args.folds, runs=args.runs, seed=args.seed)
    result = cross_validate(
        records,
        schema,
        cv,
        hyperparams=_hyperparams(args),
        base_features=_base_features(args),
        threads=args.threads,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_cv_rows_csv(out / "cv_rows.csv", result)
    io.write_json(
        out / "cv_summary.json",
        {
            "folds": args.folds,
            "runs": args.runs,
            "seed": args.seed,
            "aggregate": result.aggregate,
            "per_content": result.per_content,
        },
    )
    _echo_config(out, "cv", argv, args)
    print(f"cv aggregate: srocc={result.aggregate['srocc']:.4f} rmse={result.aggregate['rmse']:.6f}")
    return 0


def cmd_gfs(args, argv) -> int:
    records, schema = io.load_feature_log(args.features, args.units)
    cv = CvConfig(folds=args.folds, runs=args.runs, seed=args.seed)
    result = greedy_feature_selection(
        records,
        schema,
        cv,
        objective=args.objective,
        epsilon=args.epsilon,
        max_features=args.max_features,
        hyperparams=_hyperparams(args),
        base_features=_base_features(args),
        threads=args.threads,
    )
    out = Path(args.out)
    io.write_json(
        out / "gfs_result.json",
        {
            "objective": result.objective,
            "selected": list(result.selected),
            "steps": [
                {"feature": s.feature, "score": s.score, "candidate_scores": s.candidate_scores}
                for s in result.steps
            ],
        },
    )
    _echo_config(out, "gfs", argv, args)
    print(f"selected {len(result.selected)} features: {', '.join(result.selected) or '(none)'}")
    return 0


def cmd_replay(args, argv) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("tool") != "drskit":
        raise InputError(f"{args.config} is not a drskit run config")
    return main(doc["argv"])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drskit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"drskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-features", help="parse an Annex-B .264 file into a per-GOP feature log")
    p.add_argument("input", help="Annex-B elementary stream (.264/.h264)")
    p.add_argument("--fps", type=float, required=True, help="frames per second of the stream")
    p.add_argument("--gop-seconds", type=float, default=1.0, help="nominal GOP duration")
    p.add_argument("--content-id", default=None, help="content id for the CSV (default: file stem)")
    p.add_argument("--out", required=True, help="output feature-log CSV path")
    p.set_defaults(func=cmd_extract_features)

    p = sub.add_parser("fit", help="fit constrained logistic curves per (content, resolution)")
    _add_curve_source_args(p)
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("crossover", help="locate resolution cross-over bitrates")
    _add_curve_source_args(p)
    p.add_argument("--pair", default=None, help="WxH:WxH[,WxH:WxH...] (default: adjacent resolutions)")
    p.add_argument("--range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("bench-rcql", help="benchmark an objective metric against subjective cross-overs")
    p.add_argument("--scored-points", required=True)
    p.add_argument("--pairs", default=None, help="WxH:WxH[,WxH:WxH...] (default: adjacent resolutions)")
    p.add_argument("--tie-eps", type=float, default=1e-9)
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_rcql)

    p = sub.add_parser("analyze-gops", help="per-rung best-resolution probability tables")
    p.add_argument("--log", required=True, help="quality-log CSV")
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_gops)

    p = sub.add_parser("select-ladder", help="optimize the augmented-ladder representation set")
    p.add_argument("--log", required=True, help="quality-log CSV")
    p.add_argument("--k", type=int, required=True, help="max total representations")
    p.add_argument("--candidates", default=None, help="candidate ladder JSON (default: all log pairs)")
    p.add_argument("--bandwidth-samples", default=None, help="file with one session bandwidth per line")
    p.add_argument("--weights", default=None, help="JSON {bitrate: weight}")
    p.add_argument("--solver", choices=("greedy", "exhaustive"), default="greedy")
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select_ladder)

    p = sub.add_parser("simulate", help="replay switching decisions over a quality log")
    p.add_argument("--log", required=True, help="quality-log CSV")
    p.add_argument("--ladder", required=True, help="ladder or solution JSON")
    p.add_argument("--baseline", default=None, help="baseline ladder JSON for BD/gain reporting")
    p.add_argument("--granularity", type=int, default=1, help="decision window in GOPs")
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the quality model on a labeled feature log")
    p.add_argument("--features", required=True, help="feature-log CSV with a label_jod column")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    _add_hyperparam_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="content-split repeated cross-validation")
    p.add_argument("--features", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    _add_hyperparam_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("gfs", help="greedy forward feature selection")
    p.add_argument("--features", required=True)
    p.add_argument("--objective", choices=("srocc", "rmse"), default="srocc")
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-features", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", choices=("kbps", "mbps"), default="kbps")
    _add_hyperparam_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gfs)

    p = sub.add_parser("report", help="BD deltas and gain histograms from two traces")
    p.add_argument("--baseline-trace", required=True, help="baseline trace JSON")
    p.add_argument("--drs-trace", required=True, help="switching trace JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-run a command from its run_config echo")
    p.add_argument("config", help="path to a <command>.run_config.json echo")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except ToolkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: FileError: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal bug: report and exit 4
        traceback.print_exc()
        print(f"error: InternalError: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
