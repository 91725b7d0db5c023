"""Synthetic non-EV demand and ambient temperature series."""

from __future__ import annotations

import numpy as np

PEAK_FRACTION = 0.9  # peak non-EV load of a full district, per-unit of nominal
FULL_DISTRICT = 30  # households served at nominal power
NOISE_CLIP = 0.09


def _circular_gap(hours, centre):
    d = np.abs(np.asarray(hours) - centre) % 24.0
    return np.minimum(d, 24.0 - d)


def household_shape(hours) -> np.ndarray:
    """Two-bump daily load shape, unit peak near 19:30."""
    evening = np.exp(-0.5 * (_circular_gap(hours, 19.5) / 1.6) ** 2)
    morning = 0.45 * np.exp(-0.5 * (_circular_gap(hours, 8.0) / 1.5) ** 2)
    raw = 0.35 + morning + evening
    grid = np.linspace(0.0, 24.0, 24 * 60, endpoint=False)
    peak = np.max(0.35 + 0.45 * np.exp(-0.5 * (_circular_gap(grid, 8.0) / 1.5) ** 2)
                  + np.exp(-0.5 * (_circular_gap(grid, 19.5) / 1.6) ** 2))
    return raw / peak


def slot_hours(slots: int, delta_h: float, start_hour: float) -> np.ndarray:
    """Clock hour at the middle of each slot."""
    return (start_hour + delta_h * (np.arange(slots) + 0.5)) % 24.0


def synth_demand(profile: str = "evening_peak", households: int = FULL_DISTRICT, seed: int = 0,
                 slots: int = 30, delta_h: float = 0.5, start_hour: float = 17.0,
                 nominal_kw: float = 90.0) -> tuple[np.ndarray, np.ndarray]:
    """Non-EV demand (kW) and ambient temperature (C) over the horizon.

    ``evening_peak`` scales so that a full district of 30 households peaks at
    0.9 per-unit; a small seeded multiplicative jitter is added. ``flat`` is a
    constant load at the same daily mean with constant 20 C ambient.
    """
    hours = slot_hours(slots, delta_h, start_hour)
    scale = PEAK_FRACTION * nominal_kw * households / FULL_DISTRICT
    if profile == "flat":
        grid = np.linspace(0.0, 24.0, 48, endpoint=False)
        level = scale * float(np.mean(household_shape(grid)))
        return np.full(slots, level), np.full(slots, 20.0)
    if profile != "evening_peak":
        raise ValueError(f"unknown demand profile {profile!r}")
    rng = np.random.default_rng(seed)
    jitter = np.clip(0.03 * rng.standard_normal(slots), -NOISE_CLIP, NOISE_CLIP)
    demand = scale * household_shape(hours) * (1.0 + jitter)
    ambient = 10.0 + 4.0 * np.cos(2.0 * np.pi * (hours - 15.0) / 24.0) + 0.3 * rng.standard_normal(slots)
    return demand, ambient
