"""goosc: gauge-fixed oscillatory state-space models with phase-geometry
probes for early, phase-only degradation detection.

The pipeline: simulate or ingest an oscillatory stream, estimate canonical
model parameters per non-overlapping window, compute six gauge-invariant
indicators, and aggregate them with an optimal linear probe.  A synthetic
degradation lab and five scripted experiments exercise the whole path.
"""

__version__ = "0.1.0"

from .model import (
    CanonicalParams,
    ModeParams,
    Window,
    autocovariance,
    build_transition,
    simulate,
    spectral_density,
    split_into_windows,
    stationary_covariance,
)
from .kalman import (
    SmoothedTrajectory,
    kalman_filter,
    mode_phases,
    phase_increments,
    smooth,
)
from .gauge import RawParams, apply_sign_flip, canonicalize, gauge_distance
from .estimator import (
    EstimatorConfig,
    WindowEstimate,
    chain_estimates,
    estimate_window,
    estimate_window_free,
    geometric_loss,
    initialize,
)
from .indicators import (
    Baseline,
    IndicatorVector,
    calibrate_baseline,
    compute_indicators,
    indicator_series,
)
from .detector import (
    DetectionReport,
    LinearProbe,
    auroc,
    first_order_response,
    fit_probe,
    score,
)
from .energy import EnergyFeatures, energy_features
from .lab import DegradationScenario, LabeledStream, generate, latent_portrait
from .experiments import ExperimentConfig, run_experiment

__all__ = [
    "__version__",
    "ModeParams", "CanonicalParams", "Window", "build_transition",
    "stationary_covariance", "simulate", "spectral_density", "autocovariance",
    "split_into_windows",
    "SmoothedTrajectory", "kalman_filter", "smooth", "mode_phases",
    "phase_increments",
    "RawParams", "canonicalize", "apply_sign_flip", "gauge_distance",
    "EstimatorConfig", "WindowEstimate", "geometric_loss", "initialize",
    "estimate_window", "estimate_window_free", "chain_estimates",
    "Baseline", "IndicatorVector", "calibrate_baseline", "compute_indicators",
    "indicator_series",
    "LinearProbe", "DetectionReport", "fit_probe", "score", "auroc",
    "first_order_response",
    "EnergyFeatures", "energy_features",
    "DegradationScenario", "LabeledStream", "generate", "latent_portrait",
    "ExperimentConfig", "run_experiment",
]
