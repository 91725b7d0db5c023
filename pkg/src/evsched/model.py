"""Transformer hot-spot dynamics, ageing and Joule losses.

Loads entering this module are per-unit of the transformer nominal active
power. Callers holding kW series normalize before calling in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError

# Linearized Arrhenius slope (IEEE loading guide, 15000 K) around a 98 C hot spot.
DEFAULT_ALPHA = 15000.0 / (98.0 + 273.0) ** 2
DEFAULT_BETA = -DEFAULT_ALPHA * 98.0


@dataclass(frozen=True)
class ThermalParams:
    a: float = 0.83
    b1: float = 30.91
    b2: float = -19.09
    amb_gain: float = 0.17
    amb_offset: float = 8.47
    x0: float = 98.0
    u0: float = 1.0
    x_max: float = 150.0
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if self.b1 < 0.0:
            raise ValueError(f"b1 must be >= 0, got {self.b1}")
        if self.b2 > 0.0:
            raise ValueError(f"b2 must be <= 0, got {self.b2}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta > 0.0:
            raise ValueError(f"beta must be <= 0, got {self.beta}")
        if self.x0 < 0.0:
            raise ValueError(f"x0 must be >= 0, got {self.x0}")
        if self.x_max <= 0.0:
            raise ValueError(f"x_max must be > 0, got {self.x_max}")

    @property
    def convexity_margin(self) -> float:
        return self.a * self.b1 + self.b2

    def ambient_drive(self, ambient: np.ndarray) -> np.ndarray:
        """Additive term c_t of the recursion from ambient temperature in C."""
        return self.amb_gain * (self.amb_offset + np.asarray(ambient, dtype=float))


@dataclass(frozen=True)
class StateTrace:
    temps: np.ndarray
    faa: np.ndarray
    joule: np.ndarray

    def __post_init__(self):
        if not (len(self.temps) == len(self.faa) == len(self.joule)):
            raise DimensionError("trace components differ in length")

    @property
    def peak_temp(self) -> float:
        return float(np.max(self.temps)) if len(self.temps) else float("nan")


def step_temperature(x_prev: float, u_t: float, u_prev: float, c_t: float,
                     p: ThermalParams) -> float:
    return p.a * x_prev + p.b1 * u_t ** 2 + p.b2 * u_prev ** 2 + c_t


def _check_lengths(loads, ambient):
    loads = np.asarray(loads, dtype=float)
    ambient = np.asarray(ambient, dtype=float)
    if loads.ndim != 1 or ambient.ndim != 1 or loads.shape != ambient.shape:
        raise DimensionError(
            f"load and ambient series must be 1-D of equal length, "
            f"got {loads.shape} and {ambient.shape}")
    return loads, ambient


def temperatures(loads: np.ndarray, ambient: np.ndarray, p: ThermalParams) -> np.ndarray:
    """Iterate the hot-spot recursion from (x0, u0) over per-unit loads."""
    loads, ambient = _check_lengths(loads, ambient)
    c = p.ambient_drive(ambient)
    temps = np.empty_like(loads)
    x_prev, u_prev = p.x0, p.u0
    for t in range(len(loads)):
        x_prev = step_temperature(x_prev, loads[t], u_prev, c[t], p)
        u_prev = loads[t]
        temps[t] = x_prev
    return temps


def faa(x, p: ThermalParams, fold_beta: bool = False):
    """Factor of accelerated ageing exp(alpha*x + beta).

    With ``fold_beta`` the intercept is dropped, for costs whose memoryless
    part already absorbs the exp(-beta) scaling.
    """
    beta = 0.0 if fold_beta else p.beta
    return np.exp(p.alpha * np.asarray(x, dtype=float) + beta)


def simulate_trace(loads: np.ndarray, ambient: np.ndarray, p: ThermalParams,
                   joule: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> StateTrace:
    """Hot-spot temperatures, ageing factors and Joule losses per slot.

    ``joule`` maps the per-unit load series to kWh per slot; without it the
    loss column is zero.
    """
    temps = temperatures(loads, ambient, p)
    loads = np.asarray(loads, dtype=float)
    losses = np.zeros_like(temps) if joule is None else np.asarray(joule(loads), dtype=float)
    return StateTrace(temps=temps, faa=faa(temps, p), joule=losses)


def unroll_state(t: int, loads: Sequence[float], ambient: Sequence[float],
                 p: ThermalParams) -> float:
    """Closed-form hot-spot temperature at slot ``t`` (1-based).

    Written as explicit sums over past loads rather than by recursion so it
    can serve as a cross-check of :func:`temperatures`.
    """
    loads, ambient = _check_lengths(loads, ambient)
    T = len(loads)
    if not 1 <= t <= T:
        raise IndexError(f"slot {t} outside 1..{T}")
    u = lambda k: loads[k - 1]  # noqa: E731
    c = p.ambient_drive(ambient)
    a = p.a
    g = a ** t * p.x0 + p.b1 * u(t) ** 2 + p.b2 * a ** (t - 1) * p.u0 ** 2
    g += (a * p.b1 + p.b2) * sum(a ** (k - 1) * u(t - k) ** 2 for k in range(1, t))
    g += sum(a ** (t - k) * c[k - 1] for k in range(1, t + 1))
    return float(g)


def lifetime_years(faa_values: Sequence[float], design_life: float = 40.0) -> float:
    """Transformer lifetime implied by a sequence of ageing factors."""
    values = np.asarray(faa_values, dtype=float)
    if values.size == 0:
        raise ValueError("lifetime needs at least one ageing factor")
    if np.any(~(values > 0.0)):
        raise ValueError("ageing factors must be strictly positive")
    return design_life * values.size / float(np.sum(values))


def nominal_offset(p: ThermalParams) -> float:
    """Hot-spot temperature at which the ageing factor equals one."""
    return -p.beta / p.alpha


def doubling_offset(p: ThermalParams) -> float:
    return math.log(2.0) / p.alpha
