"""Deterministic CSV/JSON serialization of streams, parameters,
indicators, and detection reports.

All floats are written with 17 significant digits so a rerun with the
same seed produces byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .detector import DetectionReport
from .energy import ENERGY_FIELDS
from .indicators import INDICATOR_FIELDS, Baseline
from .model import CanonicalParams, ModeParams

__all__ = [
    "write_csv",
    "write_json",
    "trajectory_to_csv",
    "params_to_json_dict",
    "params_from_json_dict",
    "stream_to_files",
    "read_stream_csv",
    "indicators_to_csv",
    "energy_to_csv",
    "scores_to_csv",
    "report_to_json_dict",
    "baseline_to_json_dict",
    "baseline_from_json_dict",
]

_FMT = "%.17g"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _FMT % float(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def trajectory_to_csv(path, data: np.ndarray, kind: str = "x") -> Path:
    """Write a trajectory with header t, z_1..z_2K or t, x_1..x_p.

    ``data`` is (dim, n) as returned by the simulator or (n, dim)
    row-per-sample; rows are written one sample at a time.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError("trajectory must be 2-D")
    if arr.shape[0] < arr.shape[1]:
        arr = arr.T
    header = ["t"] + [f"{kind}_{i + 1}" for i in range(arr.shape[1])]
    rows = ([t] + list(arr[t]) for t in range(arr.shape[0]))
    return write_csv(path, header, rows)


def params_to_json_dict(params: CanonicalParams) -> dict:
    return {
        "modes": [{"omega": m.omega, "rho": m.rho} for m in params.modes],
        "obs_matrix": params.obs_matrix.tolist(),
        "state_noise": params.state_noise.tolist(),
        "obs_noise": params.obs_noise.tolist(),
    }


def params_from_json_dict(d: dict) -> CanonicalParams:
    modes = tuple(ModeParams(float(m["omega"]), float(m["rho"])) for m in d["modes"])
    return CanonicalParams(
        modes,
        np.asarray(d["obs_matrix"], dtype=float),
        np.asarray(d["state_noise"], dtype=float),
        np.asarray(d["obs_noise"], dtype=float),
    )


def stream_to_files(csv_path, sidecar_path, stream) -> None:
    """Stream observations as (t, x_1..x_p) CSV plus a JSON sidecar with
    the scenario record, labels, and seed."""
    trajectory_to_csv(csv_path, stream.observations, kind="x")
    scen = stream.scenario
    sidecar = {
        "seed": stream.seed,
        "window_len": stream.window_len,
        "clipped": stream.clipped,
        "window_labels": [bool(b) for b in stream.window_labels],
        "scenario": {
            "kind": scen.kind,
            "onset_sample": scen.onset_sample,
            "strength": scen.strength,
            "slip_period": scen.slip_period,
            "base_params": params_to_json_dict(scen.base_params),
        },
    }
    if stream.nuisance is not None:
        sidecar["nuisance"] = {
            "kind": stream.nuisance.kind,
            "onset_sample": stream.nuisance.onset_sample,
            "strength": stream.nuisance.strength,
        }
    write_json(sidecar_path, sidecar)


def read_stream_csv(path) -> np.ndarray:
    """Read a (t, x_1..x_p) CSV back into a T x p array."""
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return raw[:, 1:]


def indicators_to_csv(path, vectors) -> Path:
    header = ["window_id", *INDICATOR_FIELDS, "pcc_reliable"]
    rows = (
        [v.window_id, v.gsi, v.pcc, v.ddi, v.fwr, v.mll, v.lqf, v.pcc_reliable]
        for v in vectors
    )
    return write_csv(path, header, rows)


def energy_to_csv(path, features) -> Path:
    header = ["window_id", *ENERGY_FIELDS]
    rows = ([i, f.rms, f.variance, f.band_power, f.kurtosis]
            for i, f in enumerate(features))
    return write_csv(path, header, rows)


def scores_to_csv(path, scores, labels) -> Path:
    header = ["window_id", "score", "label"]
    rows = ([i, s, bool(l)] for i, (s, l) in enumerate(zip(scores, labels)))
    return write_csv(path, header, rows)


def report_to_json_dict(report: DetectionReport) -> dict:
    return {
        "scores": [float(s) for s in report.scores],
        "labels": [bool(b) for b in report.labels],
        "auroc": float(report.auroc),
        "n_positive": report.n_positive,
        "n_negative": report.n_negative,
    }


def baseline_to_json_dict(baseline: Baseline) -> dict:
    return {
        "mu0": baseline.mu0,
        "sigma0": baseline.sigma0,
        "d0": baseline.d0,
        "n_windows": baseline.n_windows,
    }


def baseline_from_json_dict(d: dict) -> Baseline:
    return Baseline(
        mu0=float(d["mu0"]), sigma0=float(d["sigma0"]),
        d0=float(d["d0"]), n_windows=int(d["n_windows"]),
    )
