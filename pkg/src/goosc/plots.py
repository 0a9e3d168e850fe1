"""Static figures rendered next to each experiment's delimited output.

All figures are drawn on the Agg backend and saved as SVG; the numeric
assertions live in the manifests, these files are for eyes only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_motivation",
    "plot_geometry",
    "plot_ablation",
    "plot_efficiency",
    "plot_stress",
]

_HEALTHY = "#3b6ea5"
_DEGRADED = "#d2691e"


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg")
    plt.close(fig)
    return path


def plot_motivation(path, signal, onset, window_len, rms, gsi, pcc) -> Path:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    t = np.arange(len(signal))
    axes[0].plot(t[:: max(1, len(t) // 4000)], signal[:: max(1, len(t) // 4000)],
                 lw=0.4, color="0.4")
    axes[0].axvline(onset, color="k", ls="--", lw=1)
    axes[0].set_title("signal (constant amplitude)")
    axes[0].set_xlabel("sample")

    centers = (np.arange(len(rms)) + 0.5) * window_len
    axes[1].plot(centers, rms, color=_HEALTHY)
    axes[1].axvline(onset, color="k", ls="--", lw=1)
    axes[1].set_title("window RMS")
    axes[1].set_xlabel("sample")

    axes[2].plot(centers, gsi, color=_DEGRADED, label="gsi")
    ax2 = axes[2].twinx()
    ax2.plot(centers, pcc, color=_HEALTHY, alpha=0.7, label="pcc")
    axes[2].axvline(onset, color="k", ls="--", lw=1)
    axes[2].set_title("geometric indicators")
    axes[2].set_xlabel("sample")
    axes[2].set_ylabel("gsi")
    ax2.set_ylabel("pcc")
    return _save(fig, path)


def plot_geometry(path, pre_points, post_points) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(8, 4), sharex=True, sharey=True)
    for ax, pts, title, color in (
        (axes[0], pre_points, "healthy", _HEALTHY),
        (axes[1], post_points, "phase-jittered", _DEGRADED),
    ):
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.0, alpha=0.4, color=color)
        ax.set_title(title)
        ax.set_xlabel("z1")
        ax.set_aspect("equal")
    axes[0].set_ylabel("z2")
    return _save(fig, path)


def plot_ablation(path, aurocs: dict, tv: dict) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    names = list(aurocs)
    vals = [aurocs[n] for n in names]
    axes[0].bar(names, vals, color=[_DEGRADED, "#8c6bb1", _HEALTHY])
    axes[0].axhline(0.5, color="k", ls=":", lw=1)
    axes[0].set_ylim(0, 1.05)
    axes[0].set_ylabel("AUROC")
    axes[0].set_title("detection quality")

    inds = list(tv)
    x = np.arange(len(inds))
    width = 0.35
    axes[1].bar(x - width / 2, [tv[i]["canonical"] for i in inds], width,
                label="canonical", color=_DEGRADED)
    axes[1].bar(x + width / 2, [tv[i]["free"] for i in inds], width,
                label="unconstrained", color="#8c6bb1")
    axes[1].set_xticks(x, inds)
    axes[1].set_yscale("log")
    axes[1].set_ylabel("total variation (healthy stream)")
    axes[1].set_title("stability")
    axes[1].legend()
    return _save(fig, path)


def plot_efficiency(path, budgets, ind_mean, ind_std, en_mean, en_std) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    b = np.asarray(budgets, dtype=float)
    ax.plot(b, ind_mean, "o-", color=_HEALTHY, label="geometric indicators")
    ax.fill_between(b, ind_mean - ind_std, ind_mean + ind_std,
                    alpha=0.2, color=_HEALTHY)
    ax.plot(b, en_mean, "s-", color=_DEGRADED, label="energy features")
    ax.fill_between(b, en_mean - en_std, en_mean + en_std,
                    alpha=0.2, color=_DEGRADED)
    ax.set_xscale("log")
    ax.set_xlabel("labeled training windows")
    ax.set_ylabel("AUROC")
    ax.axhline(0.5, color="k", ls=":", lw=1)
    ax.legend()
    ax.set_title("label efficiency")
    return _save(fig, path)


def plot_stress(path, rms, pcc, labels, aurocs: dict) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    w = np.arange(len(rms))
    onset = int(np.argmax(labels)) if labels.any() else len(rms)
    axes[0].plot(w, rms / rms.mean(), color=_HEALTHY, label="rms (normalized)")
    axes[0].plot(w, pcc / max(pcc.mean(), 1e-12), color=_DEGRADED,
                 label="pcc (normalized)")
    axes[0].axvline(onset, color="k", ls="--", lw=1)
    axes[0].set_xlabel("window")
    axes[0].legend()
    axes[0].set_title("nuisance shocks vs phase coherence")

    axes[1].bar(["pcc", "rms"], [aurocs["pcc"], aurocs["rms"]],
                color=[_DEGRADED, _HEALTHY])
    axes[1].axhline(0.5, color="k", ls=":", lw=1)
    axes[1].set_ylim(0, 1.05)
    axes[1].set_ylabel("AUROC")
    axes[1].set_title("detection under nuisance")
    return _save(fig, path)
