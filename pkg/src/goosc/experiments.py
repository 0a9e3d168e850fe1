"""The five end-to-end experiments: motivation, geometry, ablation,
efficiency, and stress.

Each experiment is deterministic given (config, seed), writes delimited
results plus a manifest with machine-checked assertions, and renders its
figures next to the data files.  Assertions are the contract; plots are
conveniences.

Two analysis modes are used.  Monitoring mode freezes a healthy estimate
from a calibration stream and scores every window against it: this is the
local-alternative regime where per-window refitting would simply track
the degradation and null the standardized-loss response.  Refit mode runs
the per-window estimation chain and is used where the estimates
themselves are the subject (the canonicalization ablation and the
label-efficiency comparison).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .detector import auroc, evaluate, fit_probe, score
from .energy import energy_matrix
from .estimator import (
    EstimatorConfig,
    WindowEstimate,
    chain_estimates,
    estimate_window_free,
    loss_from_trajectory,
)
from .exceptions import ConfigError, EvaluationError, ExperimentFailure
from .gauge import RawParams
from .indicators import INDICATOR_FIELDS, calibrate_baseline, indicator_series
from .io import (
    indicators_to_csv,
    report_to_json_dict,
    stream_to_files,
    write_csv,
    write_json,
)
from .kalman import smooth, smooth_matrices
from .lab import DegradationScenario, LabeledStream, generate, latent_portrait
from .model import CanonicalParams, ModeParams, Window

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "EXPERIMENTS",
    "run_experiment",
    "default_system",
    "geometry_system",
]

EXPERIMENT_NAMES = ("motivation", "geometry", "ablation", "efficiency", "stress")


def default_system() -> CanonicalParams:
    """The desk-scale two-mode system used by the detection experiments."""
    modes = (ModeParams(0.7, 0.96), ModeParams(1.9, 0.93))
    C = np.array([[1.0, 0.0, 1.0, 0.0]])
    Q = np.diag([0.0784, 0.0784, 0.1081, 0.1081])  # unit / 0.8 mode variances
    R = np.array([[0.018]])
    return CanonicalParams(modes, C, Q, R)


def geometry_system() -> CanonicalParams:
    """A single high-coherence mode whose latent plane draws a tight
    circle; used by the portrait experiment."""
    rho = 0.999999
    modes = (ModeParams(0.9, rho),)
    return CanonicalParams(
        modes, np.array([[1.0, 0.0]]), (1.0 - rho**2) * np.eye(2),
        np.array([[1e-3]]),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration shared by all experiments; unknown names rejected."""

    experiment: str
    seed: int = 0
    n_seeds: int = 10
    window_len: int = 512
    total_samples: int = 65536
    output_dir: str = "."
    strength: float | None = None       # scenario strength override
    onset_fraction: float = 0.5
    nuisance_strength: float | None = None
    budgets: tuple = (5, 10, 20, 40, 80, 160, 320)
    band: tuple = (1.75, 2.05)
    lam: float = 0.0
    max_iters: int = 300
    n_restarts: int = 2
    grad_tol: float = 1e-5
    make_plots: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"expected one of {EXPERIMENT_NAMES}"
            )
        if self.total_samples < 2 * self.window_len:
            raise ConfigError("total_samples must be >= 2 * window_len")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("budgets", "band"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "n_seeds": self.n_seeds,
            "window_len": self.window_len,
            "total_samples": self.total_samples,
            "output_dir": str(self.output_dir),
            "strength": self.strength,
            "onset_fraction": self.onset_fraction,
            "nuisance_strength": self.nuisance_strength,
            "budgets": list(self.budgets),
            "band": list(self.band),
            "lam": self.lam,
            "max_iters": self.max_iters,
            "n_restarts": self.n_restarts,
            "grad_tol": self.grad_tol,
            "make_plots": self.make_plots,
        }


@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    value: float
    detail: str


@dataclass
class ExperimentResult:
    name: str
    passed: bool
    assertions: list[Assertion]
    outputs: dict[str, str] = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


def _sub_seed(seed: int, tag: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(tag),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _estimator_config(config: ExperimentConfig, K: int, **overrides) -> EstimatorConfig:
    kw = dict(
        K=K, lam=config.lam, max_iters=config.max_iters,
        grad_tol=config.grad_tol, n_restarts=config.n_restarts,
        seed=config.seed,
    )
    kw.update(overrides)
    return EstimatorConfig(**kw)


def _onset(config: ExperimentConfig) -> int:
    return int(config.onset_fraction * config.total_samples)


def monitor_stream(stream: LabeledStream, params: CanonicalParams):
    """Score every window of a stream against one frozen estimate.

    Returns per-window (estimates, trajectories) where each estimate
    carries the frozen parameters with that window's geometric loss and
    log-likelihood.
    """
    ests, trajs = [], []
    for w in stream.windows():
        traj = smooth(params, w, want_covariances=False)
        loss = loss_from_trajectory(traj, w, params, 0.0, None)
        ests.append(WindowEstimate(params, loss, traj.loglik, True, 0))
        trajs.append(traj)
    return ests, trajs


def _frozen_baseline(config: ExperimentConfig, base: CanonicalParams,
                     est_cfg: EstimatorConfig, tag: int):
    """Calibrate monitoring mode: estimate the healthy stream, freeze the
    median-loss estimate, and standardize losses against it."""
    cal = generate(
        DegradationScenario("phase_jitter", 0, 0.0, base),
        config.total_samples, config.window_len, _sub_seed(config.seed, tag),
    )
    cal_ests = chain_estimates(cal.windows(), est_cfg)
    ordered = sorted(cal_ests, key=lambda e: (e.loss, id(e)))
    frozen = ordered[len(ordered) // 2].params
    mon_ests, _ = monitor_stream(cal, frozen)
    baseline = calibrate_baseline(mon_ests)
    return frozen, baseline


def _refit_baseline(config: ExperimentConfig, base: CanonicalParams,
                    est_cfg: EstimatorConfig, tag: int):
    """Calibrate refit mode: the baseline moments of per-window estimates."""
    cal = generate(
        DegradationScenario("phase_jitter", 0, 0.0, base),
        config.total_samples, config.window_len, _sub_seed(config.seed, tag),
    )
    ests = chain_estimates(cal.windows(), est_cfg)
    return calibrate_baseline(ests)


def _assert_record(records: list[Assertion], name: str, passed: bool,
                   value: float, detail: str) -> None:
    records.append(Assertion(name=name, passed=bool(passed),
                             value=float(value), detail=detail))


def _finish(config: ExperimentConfig, name: str, assertions: list[Assertion],
            outputs: dict, metrics: dict) -> ExperimentResult:
    outdir = Path(config.output_dir)
    passed = all(a.passed for a in assertions)
    manifest = {
        "experiment": name,
        "version": __version__,
        "config": config.to_dict(),
        "assertions": [
            {"name": a.name, "passed": a.passed, "value": a.value,
             "detail": a.detail}
            for a in assertions
        ],
        "passed": passed,
    }
    outputs["manifest"] = str(write_json(outdir / "manifest.json", manifest))
    result = ExperimentResult(
        name=name, passed=passed, assertions=assertions,
        outputs=outputs, metrics=metrics,
    )
    if not passed:
        failing = "; ".join(
            f"{a.name}={a.value:.6g} ({a.detail})" for a in assertions if not a.passed
        )
        raise ExperimentFailure(
            f"experiment {name!r} failed: {failing}", assertions=result,
        )
    return result


# ---------------------------------------------------------------------------
# motivation: energy stays flat, the standardized loss responds
# ---------------------------------------------------------------------------

def run_motivation(config: ExperimentConfig) -> ExperimentResult:
    """Phase jitter starts mid-stream at constant amplitude; the window
    RMS stays within its healthy scatter while the standardized geometric
    loss of a frozen healthy model jumps by several baseline deviations."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = default_system()
    est_cfg = _estimator_config(config, K=2)
    strength = 0.3 if config.strength is None else config.strength
    frozen, baseline = _frozen_baseline(config, base, est_cfg, tag=1001)

    scen = DegradationScenario("phase_jitter", _onset(config), strength, base)
    stream = generate(scen, config.total_samples, config.window_len,
                      _sub_seed(config.seed, 1))
    ests, trajs = monitor_stream(stream, frozen)
    vectors = indicator_series(ests, trajs, baseline)
    labels = stream.window_labels
    energies = energy_matrix(stream.windows())
    gsi = np.array([v.gsi for v in vectors])
    pcc = np.array([v.pcc for v in vectors])
    rms = energies[:, 0]

    gsi_gap = float(gsi[labels].mean() - gsi[~labels].mean())
    rms_gap_std = float(
        abs(rms[labels].mean() - rms[~labels].mean()) / rms[~labels].std(ddof=1)
    )
    assertions: list[Assertion] = []
    if strength > 0:
        _assert_record(assertions, "gsi_post_minus_pre_ge_3sigma", gsi_gap >= 3.0,
                       gsi_gap, "post-onset mean GSI excess in sigma0 units; >= 3")
    else:
        _assert_record(assertions, "gsi_null_gap_lt_1sigma", abs(gsi_gap) < 1.0,
                       gsi_gap, "null run: |GSI gap| < 1 sigma0")
    _assert_record(assertions, "rms_gap_lt_1std", rms_gap_std < 1.0, rms_gap_std,
                   "post/pre RMS mean gap in healthy-RMS std units; < 1")

    rows = [
        [i, stream.window_len * i, bool(labels[i]), rms[i], gsi[i], pcc[i]]
        for i in range(len(vectors))
    ]
    outputs = {
        "results": str(write_csv(outdir / "results.csv",
                                 ["window_id", "start_index", "label", "rms",
                                  "gsi", "pcc"], rows)),
        "indicators": str(indicators_to_csv(outdir / "indicators.csv", vectors)),
    }
    stream_to_files(outdir / "stream.csv", outdir / "stream.json", stream)
    outputs["stream"] = str(outdir / "stream.csv")
    if config.make_plots:
        from .plots import plot_motivation

        outputs["figure"] = str(plot_motivation(
            outdir / "motivation.svg", stream.observations[:, 0],
            scen.onset_sample, config.window_len, rms, gsi, pcc,
        ))
    metrics = {"gsi_gap_sigma": gsi_gap, "rms_gap_std": rms_gap_std}
    return _finish(config, "motivation", assertions, outputs, metrics)


# ---------------------------------------------------------------------------
# geometry: the latent portrait spreads in angle at similar radius
# ---------------------------------------------------------------------------

def _angular_increment_std(points: np.ndarray) -> float:
    z1, z2 = points[:, 0], points[:, 1]
    re = z1[1:] * z1[:-1] + z2[1:] * z2[:-1]
    im = z1[1:] * z2[:-1] - z2[1:] * z1[:-1]
    return float(np.arctan2(im, re).std())


def run_geometry(config: ExperimentConfig) -> ExperimentResult:
    """Latent-plane portraits before and after jitter onset, averaged
    over seeds: the radius is preserved while the angular increments
    spread severalfold."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = geometry_system()
    strength = 0.3 if config.strength is None else config.strength
    onset = _onset(config)
    seg_len = min(8192, onset, config.total_samples - onset)

    rows = []
    radii_pre, radii_post, stds_pre, stds_post = [], [], [], []
    first_portraits = None
    for s in range(config.n_seeds):
        scen = DegradationScenario("phase_jitter", onset, strength, base)
        stream = generate(scen, config.total_samples, config.window_len,
                          _sub_seed(config.seed, 2000 + s))
        pre = latent_portrait(stream, 0, (onset - seg_len, onset))
        post = latent_portrait(stream, 0, (onset, onset + seg_len))
        if first_portraits is None:
            first_portraits = (pre, post)
        r_pre = float(np.hypot(pre[:, 0], pre[:, 1]).mean())
        r_post = float(np.hypot(post[:, 0], post[:, 1]).mean())
        s_pre = _angular_increment_std(pre)
        s_post = _angular_increment_std(post)
        radii_pre.append(r_pre)
        radii_post.append(r_post)
        stds_pre.append(s_pre)
        stds_post.append(s_post)
        rows.append([s, r_pre, r_post, s_pre, s_post])

    radius_diff = float(abs(np.mean(radii_post) / np.mean(radii_pre) - 1.0))
    std_ratio = float(np.mean(stds_post) / np.mean(stds_pre))
    assertions: list[Assertion] = []
    _assert_record(assertions, "mean_radius_rel_diff_lt_5pct", radius_diff < 0.05,
                   radius_diff, "post/pre mean portrait radius relative difference; < 0.05")
    if strength > 0:
        _assert_record(assertions, "angular_std_ratio_gt_3", std_ratio > 3.0,
                       std_ratio, "post/pre angular-increment std ratio; > 3")
    else:
        _assert_record(assertions, "angular_std_ratio_null",
                       0.8 <= std_ratio <= 1.25, std_ratio,
                       "null run: ratio within [0.8, 1.25]")

    outputs = {
        "results": str(write_csv(outdir / "results.csv",
                                 ["seed_index", "radius_pre", "radius_post",
                                  "angstd_pre", "angstd_post"], rows)),
    }
    pre, post = first_portraits
    portrait_rows = [[0, p[0], p[1]] for p in pre] + [[1, p[0], p[1]] for p in post]
    outputs["portraits"] = str(write_csv(outdir / "portraits.csv",
                                         ["post_onset", "z1", "z2"], portrait_rows))
    if config.make_plots:
        from .plots import plot_geometry

        outputs["figure"] = str(plot_geometry(outdir / "geometry.svg", pre, post))
    metrics = {"radius_rel_diff": radius_diff, "angular_std_ratio": std_ratio}
    return _finish(config, "geometry", assertions, outputs, metrics)


# ---------------------------------------------------------------------------
# ablation: canonical vs unconstrained coordinates vs RMS
# ---------------------------------------------------------------------------

def _free_estimate_inputs(raw: RawParams, window: Window):
    """Indicator inputs of the no-gauge arm: frequencies and damping from
    the eigenvalues (sorted by frequency only), loss and trajectory in the
    raw optimizer coordinates.

    Degenerate fits (real eigenvalue pairs) are represented with
    near-zero synthetic frequencies; instability of this arm is part of
    what the comparison measures."""
    K = raw.state_dim // 2
    evals = np.linalg.eigvals(raw.A)
    pos = evals[evals.imag > 1e-12]
    om = list(np.arctan2(pos.imag, pos.real))
    rh = list(np.abs(pos))
    reals = np.sort(np.abs(evals[np.abs(evals.imag) <= 1e-12]))[::-1]
    j = 0
    while len(om) < K:
        pair = reals[2 * j : 2 * j + 2]
        rho = float(np.mean(pair)) if len(pair) else 0.5
        om.append(1e-6 * (j + 1))
        rh.append(min(max(rho, 1e-6), 1.0 - 1e-9))
        j += 1
    order = np.argsort(om)
    om = np.maximum(np.asarray(om)[order], 1e-9)
    rh = np.minimum(np.asarray(rh)[order], 1.0 - 1e-9)
    # break exact frequency ties so the record stays constructible
    for i in range(1, len(om)):
        if om[i] <= om[i - 1]:
            om[i] = om[i - 1] + 1e-12
    modes = tuple(ModeParams(float(w), float(r)) for w, r in zip(om, rh))
    traj = smooth_matrices(raw.A, raw.C, raw.Q, raw.R, window,
                           want_covariances=False)
    resid = window.samples - traj.fitted_obs
    loss = float(np.mean(np.sum(resid * resid, axis=1)))
    Q = 0.5 * (raw.Q + raw.Q.T) + 1e-12 * np.eye(raw.Q.shape[0])
    pseudo = CanonicalParams(modes, raw.C, Q, raw.R)
    est = WindowEstimate(pseudo, loss, traj.loglik, True, 0)
    return est, traj


def _free_chain(windows, est_cfg: EstimatorConfig, baseline):
    ests, trajs = [], []
    for w in windows:
        raw = estimate_window_free(w, est_cfg)
        e, t = _free_estimate_inputs(raw, w)
        ests.append(e)
        trajs.append(t)
    return indicator_series(ests, trajs, baseline)


def _total_variation(values) -> float:
    return float(np.abs(np.diff(np.asarray(values, dtype=float))).sum())


def run_ablation(config: ExperimentConfig) -> ExperimentResult:
    """Three arms on identical streams: per-window estimates in the
    canonical gauge, the same estimation in unconstrained coordinates, and
    window RMS.  Detection quality comes from a linear probe fit on the
    even-indexed windows and evaluated on the odd; stability is the total
    variation of each indicator over a stationary healthy stream."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = default_system()
    # equal budget for both arms: exactly one optimization per window.
    # The canonical arm is anchored by its identifiable spectral
    # initialization; the unconstrained arm has no such anchor.
    est_cfg = _estimator_config(config, K=2, n_restarts=1)
    strength = 0.3 if config.strength is None else config.strength
    baseline = _refit_baseline(config, base, est_cfg, tag=1002)
    onset = _onset(config)

    n_pairs = max(1, min(config.n_seeds, 2))
    deg_streams = [
        generate(DegradationScenario("phase_jitter", onset, strength, base),
                 config.total_samples, config.window_len,
                 _sub_seed(config.seed, 10 + i))
        for i in range(n_pairs)
    ]
    healthy = generate(DegradationScenario("phase_jitter", 0, 0.0, base),
                       config.total_samples, config.window_len,
                       _sub_seed(config.seed, 11))

    arms: dict[str, dict] = {}
    deg_feats, deg_labels = {"canonical": [], "free": []}, []
    for st in deg_streams:
        wins = st.windows()
        ce = chain_estimates(wins, est_cfg)
        ct = [smooth(e.params, w, want_covariances=False) for e, w in zip(ce, wins)]
        deg_feats["canonical"].append(
            np.stack([v.as_array() for v in indicator_series(ce, ct, baseline)])
        )
        deg_feats["free"].append(
            np.stack([v.as_array() for v in _free_chain(wins, est_cfg, baseline)])
        )
        deg_labels.append(st.window_labels)
    labels = np.concatenate(deg_labels)
    rms_all = np.concatenate(
        [energy_matrix(st.windows())[:, 0] for st in deg_streams]
    )

    assertions: list[Assertion] = []
    two_class = strength > 0 and labels.any() and not labels.all()
    even = np.arange(len(labels)) % 2 == 0
    for arm in ("canonical", "free"):
        feats = np.vstack(deg_feats[arm])
        if two_class:
            probe = fit_probe(feats[even & ~labels], feats[even & labels])
            sc = score(probe, feats[~even])
            arm_auroc = auroc(sc, labels[~even])
        else:
            arm_auroc = np.nan
        arms[arm] = {"auroc": arm_auroc, "features": feats}
    rms_auroc = auroc(rms_all[~even], labels[~even]) if two_class else np.nan

    # stability on the stationary healthy stream
    h_wins = healthy.windows()
    he = chain_estimates(h_wins, est_cfg)
    ht = [smooth(e.params, w, want_covariances=False) for e, w in zip(he, h_wins)]
    canon_h = indicator_series(he, ht, baseline)
    free_h = _free_chain(h_wins, est_cfg, baseline)
    tv = {}
    for name in ("gsi", "pcc"):
        tv[name] = {
            "canonical": _total_variation([getattr(v, name) for v in canon_h]),
            "free": _total_variation([getattr(v, name) for v in free_h]),
        }

    if two_class:
        _assert_record(assertions, "auroc_canonical_ge_0.9",
                       arms["canonical"]["auroc"] >= 0.9,
                       arms["canonical"]["auroc"], "canonical-arm AUROC; >= 0.9")
        _assert_record(assertions, "auroc_free_ge_0.9",
                       arms["free"]["auroc"] >= 0.9,
                       arms["free"]["auroc"], "unconstrained-arm AUROC; >= 0.9")
        _assert_record(assertions, "auroc_rms_chance",
                       0.4 <= rms_auroc <= 0.6, rms_auroc,
                       "RMS AUROC within [0.4, 0.6]")
    for name in ("gsi", "pcc"):
        ratio = tv[name]["canonical"] / tv[name]["free"]
        _assert_record(assertions, f"tv_{name}_canonical_le_half_free",
                       ratio <= 0.5, ratio,
                       f"TV({name}) canonical / free; <= 0.5")

    rows = []
    for arm in ("canonical", "free"):
        feats = np.vstack(deg_feats[arm])
        for i in range(len(labels)):
            rows.append([arm, i, bool(labels[i]), *feats[i]])
    outputs = {
        "results": str(write_csv(outdir / "results.csv",
                                 ["arm", "window_id", "label", *INDICATOR_FIELDS],
                                 rows)),
        "stability": str(write_csv(
            outdir / "stability.csv",
            ["indicator", "tv_canonical", "tv_free"],
            [[n, tv[n]["canonical"], tv[n]["free"]] for n in ("gsi", "pcc")],
        )),
    }
    if two_class:
        report = evaluate(
            score(fit_probe(
                np.vstack(deg_feats["canonical"])[even & ~labels],
                np.vstack(deg_feats["canonical"])[even & labels],
            ), np.vstack(deg_feats["canonical"])[~even]),
            labels[~even],
        )
        outputs["report"] = str(write_json(outdir / "report.json",
                                           report_to_json_dict(report)))
    if config.make_plots:
        from .plots import plot_ablation

        aurocs = {
            "canonical": arms["canonical"]["auroc"],
            "unconstrained": arms["free"]["auroc"],
            "rms": rms_auroc,
        }
        outputs["figure"] = str(plot_ablation(outdir / "ablation.svg", aurocs, tv))
    metrics = {
        "auroc": {a: float(arms[a]["auroc"]) for a in arms} | {"rms": float(rms_auroc)},
        "tv": tv,
    }
    return _finish(config, "ablation", assertions, outputs, metrics)


# ---------------------------------------------------------------------------
# efficiency: labels needed by indicator vs energy probes
# ---------------------------------------------------------------------------

def run_efficiency(config: ExperimentConfig) -> ExperimentResult:
    """AUROC against labeled-window budget for probes over the indicator
    vector versus the energy features, averaged over seeds."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = default_system()
    est_cfg = _estimator_config(config, K=2, max_iters=min(config.max_iters, 120))
    strength = 0.3 if config.strength is None else config.strength
    budgets = tuple(int(b) for b in config.budgets)
    max_budget = max(budgets)

    # stream plan per seed: enough training windows for the largest budget
    stream_windows = max(16, (config.total_samples // 2) // config.window_len)
    stream_samples = stream_windows * config.window_len
    per_class_needed = max(b - b // 2 for b in budgets)
    n_train_streams = max(1, int(np.ceil(per_class_needed / stream_windows)))
    baseline = _refit_baseline(config, base, est_cfg, tag=1003)

    def stream_features(kind_strength, seed):
        scen = DegradationScenario("phase_jitter", 0, kind_strength, base)
        st = generate(scen, stream_samples, config.window_len, seed)
        wins = st.windows()
        ests = chain_estimates(wins, est_cfg)
        trajs = [smooth(e.params, w, want_covariances=False)
                 for e, w in zip(ests, wins)]
        ind = np.stack([v.as_array() for v in indicator_series(ests, trajs, baseline)])
        en = energy_matrix(wins, band=config.band)
        return ind, en

    ind_curve = np.zeros((config.n_seeds, len(budgets)))
    en_curve = np.zeros((config.n_seeds, len(budgets)))
    last_report = None
    for s in range(config.n_seeds):
        tr_ind_d, tr_en_d, tr_ind_h, tr_en_h = [], [], [], []
        for j in range(n_train_streams):
            i, e = stream_features(strength, _sub_seed(config.seed, 3000 + 97 * s + j))
            tr_ind_d.append(i)
            tr_en_d.append(e)
            i, e = stream_features(0.0, _sub_seed(config.seed, 4000 + 97 * s + j))
            tr_ind_h.append(i)
            tr_en_h.append(e)
        tr_ind_d = np.vstack(tr_ind_d)
        tr_en_d = np.vstack(tr_en_d)
        tr_ind_h = np.vstack(tr_ind_h)
        tr_en_h = np.vstack(tr_en_h)
        ev_ind_d, ev_en_d = stream_features(strength, _sub_seed(config.seed, 5000 + s))
        ev_ind_h, ev_en_h = stream_features(0.0, _sub_seed(config.seed, 6000 + s))
        X_eval = np.vstack([ev_ind_d, ev_ind_h])
        E_eval = np.vstack([ev_en_d, ev_en_h])
        y_eval = np.concatenate([
            np.ones(len(ev_ind_d), dtype=bool), np.zeros(len(ev_ind_h), dtype=bool)
        ])
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(7000, s))
        )
        for bi, b in enumerate(budgets):
            nd = max(2, b // 2)
            nh = max(2, b - nd)
            di = rng.choice(len(tr_ind_d), min(nd, len(tr_ind_d)), replace=False)
            hi = rng.choice(len(tr_ind_h), min(nh, len(tr_ind_h)), replace=False)
            probe_i = fit_probe(tr_ind_h[hi], tr_ind_d[di])
            probe_e = fit_probe(tr_en_h[hi], tr_en_d[di])
            ind_curve[s, bi] = auroc(score(probe_i, X_eval), y_eval)
            en_curve[s, bi] = auroc(score(probe_e, E_eval), y_eval)
            if s == 0 and b == max_budget:
                last_report = evaluate(score(probe_i, X_eval), y_eval)

    ind_mean = ind_curve.mean(axis=0)
    en_mean = en_curve.mean(axis=0)
    energy_ref = float(en_mean[budgets.index(max_budget)])
    reaching = [b for b, a in zip(budgets, ind_mean) if a >= energy_ref]
    ratio = (max_budget / min(reaching)) if reaching else 1.0

    assertions: list[Assertion] = []
    _assert_record(assertions, "label_efficiency_ratio_ge_4", ratio >= 4.0,
                   ratio, f"largest budget {max_budget} over smallest indicator "
                          f"budget reaching the energy reference {energy_ref:.3f}; >= 4")
    big = [i for i, b in enumerate(budgets) if b >= 20]
    ordering = all(ind_mean[i] >= en_mean[i] for i in big)
    worst_gap = float(min(ind_mean[i] - en_mean[i] for i in big))
    _assert_record(assertions, "indicator_ge_energy_from_20", ordering, worst_gap,
                   "min indicator-energy mean AUROC gap over budgets >= 20; >= 0")

    rows = [
        [b, ind_mean[i], ind_curve[:, i].std(ddof=1) if config.n_seeds > 1 else 0.0,
         en_mean[i], en_curve[:, i].std(ddof=1) if config.n_seeds > 1 else 0.0]
        for i, b in enumerate(budgets)
    ]
    outputs = {
        "results": str(write_csv(
            outdir / "results.csv",
            ["budget", "indicator_auroc_mean", "indicator_auroc_std",
             "energy_auroc_mean", "energy_auroc_std"], rows,
        )),
    }
    if last_report is not None:
        outputs["report"] = str(write_json(outdir / "report.json",
                                           report_to_json_dict(last_report)))
    if config.make_plots:
        from .plots import plot_efficiency

        outputs["figure"] = str(plot_efficiency(
            outdir / "efficiency.svg", budgets,
            ind_mean, ind_curve.std(axis=0), en_mean, en_curve.std(axis=0),
        ))
    metrics = {
        "ratio": float(ratio),
        "paper_reference_ratio": 16.0,
        "energy_reference_auroc": energy_ref,
    }
    return _finish(config, "efficiency", assertions, outputs, metrics)


# ---------------------------------------------------------------------------
# stress: amplitude-shock nuisance fools RMS, not phase coherence
# ---------------------------------------------------------------------------

def run_stress(config: ExperimentConfig) -> ExperimentResult:
    """Phase-jitter degradation plus label-independent amplitude shocks:
    the phase-coherence indicator keeps ranking degraded windows first
    while RMS drops to chance."""
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = default_system()
    est_cfg = _estimator_config(config, K=2)
    strength = 0.8 if config.strength is None else config.strength
    nuisance_strength = (1.0 if config.nuisance_strength is None
                         else config.nuisance_strength)
    frozen, baseline = _frozen_baseline(config, base, est_cfg, tag=1004)
    onset = _onset(config)

    all_pcc, all_rms, all_labels, rows = [], [], [], []
    first_series = None
    for s in range(config.n_seeds):
        scen = DegradationScenario("phase_jitter", onset, strength, base)
        nuisance = DegradationScenario("amplitude_shock", 0, nuisance_strength, base)
        stream = generate(scen, config.total_samples, config.window_len,
                          _sub_seed(config.seed, 8000 + s), nuisance=nuisance)
        ests, trajs = monitor_stream(stream, frozen)
        vectors = indicator_series(ests, trajs, baseline)
        pcc = np.array([v.pcc for v in vectors])
        rms = energy_matrix(stream.windows())[:, 0]
        labels = stream.window_labels
        if first_series is None:
            first_series = (rms, pcc, labels)
        all_pcc.append(pcc)
        all_rms.append(rms)
        all_labels.append(labels)
        for i in range(len(pcc)):
            rows.append([s, i, bool(labels[i]), rms[i], pcc[i]])

    pcc_all = np.concatenate(all_pcc)
    rms_all = np.concatenate(all_rms)
    labels_all = np.concatenate(all_labels)
    pcc_auroc = auroc(pcc_all, labels_all)
    rms_auroc = auroc(rms_all, labels_all)

    assertions: list[Assertion] = []
    _assert_record(assertions, "pcc_auroc_ge_0.95", pcc_auroc >= 0.95, pcc_auroc,
                   "phase-coherence AUROC under nuisance shocks; >= 0.95")
    _assert_record(assertions, "rms_auroc_chance", 0.4 <= rms_auroc <= 0.65,
                   rms_auroc, "RMS AUROC within [0.4, 0.65]")

    outputs = {
        "results": str(write_csv(outdir / "results.csv",
                                 ["seed_index", "window_id", "label", "rms", "pcc"],
                                 rows)),
        "report": str(write_json(
            outdir / "report.json",
            report_to_json_dict(evaluate(pcc_all, labels_all)),
        )),
    }
    if config.make_plots:
        from .plots import plot_stress

        rms0, pcc0, labels0 = first_series
        outputs["figure"] = str(plot_stress(
            outdir / "stress.svg", rms0, pcc0, labels0,
            {"pcc": pcc_auroc, "rms": rms_auroc},
        ))
    metrics = {"pcc_auroc": float(pcc_auroc), "rms_auroc": float(rms_auroc)}
    return _finish(config, "stress", assertions, outputs, metrics)


EXPERIMENTS = {
    "motivation": run_motivation,
    "geometry": run_geometry,
    "ablation": run_ablation,
    "efficiency": run_efficiency,
    "stress": run_stress,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch a named experiment."""
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    return EXPERIMENTS[config.experiment](config)
