"""Command-line interface.

    goosc simulate   --out DIR [--config FILE] [--seed N]
    goosc calibrate  --out DIR [--config FILE] [--seed N] [--stream CSV]
    goosc indicators --out DIR --baseline JSON [--stream CSV] [--config FILE]
    goosc detect     --out DIR --indicators CSV --sidecar JSON
    goosc experiment NAME --out DIR [--config FILE] [--seed N] [--no-plots]

Exit codes: 0 success, 1 experiment assertion failure, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detector import evaluate, fit_probe, score
from .estimator import EstimatorConfig, chain_estimates
from .exceptions import ConfigError, ExperimentFailure, GooscError
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    default_system,
    run_experiment,
)
from .indicators import calibrate_baseline, indicator_series
from .io import (
    baseline_from_json_dict,
    baseline_to_json_dict,
    indicators_to_csv,
    params_from_json_dict,
    params_to_json_dict,
    read_stream_csv,
    report_to_json_dict,
    scores_to_csv,
    write_csv,
    write_json,
)
from .kalman import smooth
from .lab import DegradationScenario, generate
from .model import split_into_windows

USAGE_EXIT = 2
NUMERICAL_EXIT = 3
ASSERTION_EXIT = 1


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None


def _scenario_from_config(cfg: dict, seed: int) -> tuple[DegradationScenario, int, int]:
    base = (params_from_json_dict(cfg["base_params"])
            if "base_params" in cfg else default_system())
    total = int(cfg.get("total_samples", 65536))
    window_len = int(cfg.get("window_len", 512))
    scen_cfg = cfg.get("scenario", {})
    scenario = DegradationScenario(
        kind=scen_cfg.get("kind", "phase_jitter"),
        onset_sample=int(scen_cfg.get("onset_sample", total // 2)),
        strength=float(scen_cfg.get("strength", 0.0)),
        base_params=base,
        slip_period=scen_cfg.get("slip_period"),
    )
    return scenario, total, window_len


def _estimator_from_config(cfg: dict, seed: int) -> EstimatorConfig:
    est = cfg.get("estimator", {})
    return EstimatorConfig(
        K=int(est.get("K", cfg.get("K", 2))),
        lam=float(est.get("lam", 0.0)),
        max_iters=int(est.get("max_iters", 300)),
        grad_tol=float(est.get("grad_tol", 1e-5)),
        n_restarts=int(est.get("n_restarts", 2)),
        seed=seed,
        delta_min=float(est.get("delta_min", 0.05)),
    )


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    scenario, total, window_len = _scenario_from_config(cfg, seed)
    nuisance = None
    if "nuisance" in cfg:
        nui = cfg["nuisance"]
        nuisance = DegradationScenario(
            kind=nui.get("kind", "amplitude_shock"),
            onset_sample=int(nui.get("onset_sample", 0)),
            strength=float(nui.get("strength", 0.0)),
            base_params=scenario.base_params,
        )
    stream = generate(scenario, total, window_len, seed, nuisance=nuisance)
    from .io import stream_to_files

    stream_to_files(outdir / "stream.csv", outdir / "stream.json", stream)
    write_json(outdir / "params.json", params_to_json_dict(scenario.base_params))
    print(f"wrote {outdir / 'stream.csv'} ({total} samples, "
          f"{len(stream.window_labels)} windows)")
    return 0


def _windows_from_args(args, cfg, seed):
    window_len = int(cfg.get("window_len", 512))
    if args.stream is not None:
        obs = read_stream_csv(args.stream)
        return split_into_windows(obs, window_len), None
    scenario, total, window_len = _scenario_from_config(cfg, seed)
    stream = generate(scenario, total, window_len, seed)
    return stream.windows(), stream


def _cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    windows, _ = _windows_from_args(args, cfg, seed)
    est_cfg = _estimator_from_config(cfg, seed)
    estimates = chain_estimates(windows, est_cfg)
    baseline = calibrate_baseline(estimates)
    write_json(outdir / "baseline.json", baseline_to_json_dict(baseline))
    rows = []
    for i, e in enumerate(estimates):
        rows.append([i, e.loss, e.loglik, int(e.converged),
                     *e.params.omegas, *e.params.rhos])
    K = est_cfg.K
    header = ["window_id", "loss", "loglik", "converged"]
    header += [f"omega_{k + 1}" for k in range(K)] + [f"rho_{k + 1}" for k in range(K)]
    write_csv(outdir / "calibration.csv", header, rows)
    print(f"wrote {outdir / 'baseline.json'} from {len(estimates)} windows")
    return 0


def _cmd_indicators(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    baseline = baseline_from_json_dict(json.loads(Path(args.baseline).read_text()))
    windows, _ = _windows_from_args(args, cfg, seed)
    est_cfg = _estimator_from_config(cfg, seed)
    estimates = chain_estimates(windows, est_cfg)
    trajectories = [smooth(e.params, w, want_covariances=False)
                    for e, w in zip(estimates, windows)]
    vectors = indicator_series(estimates, trajectories, baseline)
    indicators_to_csv(outdir / "indicators.csv", vectors)
    print(f"wrote {outdir / 'indicators.csv'} ({len(vectors)} windows)")
    return 0


def _cmd_detect(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    table = np.loadtxt(args.indicators, delimiter=",", skiprows=1, ndmin=2)
    feats = table[:, 1:7]
    sidecar = json.loads(Path(args.sidecar).read_text())
    labels = np.asarray(sidecar["window_labels"], dtype=bool)[: len(feats)]
    if labels.all() or not labels.any():
        raise ConfigError("detect needs both healthy and degraded windows")
    probe = fit_probe(feats[~labels], feats[labels])
    scores = score(probe, feats)
    report = evaluate(scores, labels)
    write_json(outdir / "report.json", report_to_json_dict(report))
    scores_to_csv(outdir / "scores.csv", scores, labels)
    print(f"AUROC {report.auroc:.4f} over {len(labels)} windows "
          f"-> {outdir / 'report.json'}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    cfg["experiment"] = args.name
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.no_plots:
        cfg["make_plots"] = False
    config = ExperimentConfig.from_dict(cfg)
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    result = run_experiment(config)
    for a in result.assertions:
        print(f"[{'PASS' if a.passed else 'FAIL'}] {a.name} = {a.value:.6g}")
    print(f"experiment {result.name}: {'PASS' if result.passed else 'FAIL'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goosc",
        description="Oscillatory state-space monitoring: simulation, "
                    "gauge-fixed estimation, phase-geometry indicators, "
                    "and detection experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled synthetic stream")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="fit healthy windows and write a baseline")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stream", default=None, help="stream CSV (else simulate)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("indicators", help="indicator series of a stream")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stream", default=None)
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_indicators)

    p = sub.add_parser("detect", help="fit the optimal linear probe and score")
    p.add_argument("--indicators", required=True)
    p.add_argument("--sidecar", required=True, help="stream JSON with labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("experiment", help="run a named experiment end to end")
    p.add_argument("name", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ExperimentFailure as exc:
        result = exc.assertions
        if result is not None:
            for a in result.assertions:
                print(f"[{'PASS' if a.passed else 'FAIL'}] {a.name} = {a.value:.6g}")
        print(f"error: {exc}", file=sys.stderr)
        return ASSERTION_EXIT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except GooscError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
