from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ForecastNoise:
    """Additive white Gaussian forecast error set by its SNR in dB.

    ``day_slots`` is the averaging window the SNR is nominally defined over;
    the signal power is taken over whichever series the noise is applied to.
    """

    fsnr_db: float
    seed: int = 0
    day_slots: int = 48

    def __post_init__(self):
        if self.day_slots < 1:
            raise ValueError("day_slots must be >= 1")
        if math.isnan(self.fsnr_db):
            raise ValueError("fsnr_db must not be NaN")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.fsnr_db) and self.fsnr_db > 0


def noise_sigma(load_kw: np.ndarray, fsnr_db: float) -> float:
    power = float(np.mean(np.square(load_kw)))
    return math.sqrt(power * 10.0 ** (-fsnr_db / 10.0))


def apply_forecast_noise(load_kw: np.ndarray, noise: ForecastNoise) -> np.ndarray:
    load = np.asarray(load_kw, dtype=float)
    if noise.noiseless:
        return load.copy()
    sigma = noise_sigma(load, noise.fsnr_db)
    z = np.random.default_rng(noise.seed).normal(0.0, sigma, size=load.shape)
    return np.maximum(load + z, 0.0)
