"""Energy-only window statistics: RMS, variance, band power, kurtosis.

These are the classical diagnostics that depend solely on marginal
energy.  Under variance-preserving phase perturbations they stay flat,
which is exactly the failure mode the geometric indicators exist to fix;
they are computed here as the comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import kurtosis as _kurtosis

from .exceptions import InvalidParameterError
from .model import Window

__all__ = ["EnergyFeatures", "energy_features", "energy_matrix", "ENERGY_FIELDS"]

ENERGY_FIELDS = ("rms", "variance", "band_power", "kurtosis")


@dataclass(frozen=True)
class EnergyFeatures:
    """Energy statistics of one window (channel 0)."""

    rms: float
    variance: float
    band_power: float
    kurtosis: float
    kurtosis_defined: bool = True

    def as_array(self) -> np.ndarray:
        return np.array([self.rms, self.variance, self.band_power, self.kurtosis])


def energy_features(window: Window, band=(0.0, np.pi)) -> EnergyFeatures:
    """Energy statistics of channel 0 over one window.

    variance uses the population convention so rms^2 = variance + mean^2
    holds exactly; band_power sums one-sided periodogram ordinates inside
    ``band`` (radians), normalized so the full band recovers the variance;
    kurtosis is the excess kurtosis, reported as 0 with a flag on a
    constant window.
    """
    lo, hi = float(band[0]), float(band[1])
    if not (0.0 <= lo < hi <= np.pi):
        raise InvalidParameterError("band must be a sub-interval of [0, pi]")
    x = window.samples[:, 0]
    N = len(x)
    if N < 8:
        raise InvalidParameterError("energy features need at least 8 samples")
    rms = float(np.sqrt(np.mean(x * x)))
    variance = float(np.var(x))
    xc = x - x.mean()
    spec = np.abs(np.fft.rfft(xc)) ** 2 / N**2
    freqs = 2.0 * np.pi * np.arange(len(spec)) / N
    onesided = 2.0 * spec
    onesided[0] = spec[0]
    if N % 2 == 0:
        onesided[-1] = spec[-1]
    mask = (freqs >= lo) & (freqs <= hi)
    band_power = float(onesided[mask].sum())
    if variance == 0.0:
        return EnergyFeatures(rms, variance, band_power, 0.0, kurtosis_defined=False)
    return EnergyFeatures(rms, variance, band_power, float(_kurtosis(x)))


def energy_matrix(windows, band=(0.0, np.pi)) -> np.ndarray:
    """Stack energy feature rows for a window list."""
    return np.stack([energy_features(w, band).as_array() for w in windows])
