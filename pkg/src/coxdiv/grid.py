"""Discrete state space for the solver.

Surplus lives on x_n = n * step with step = premium * delta (delta is the
length of the hold window); intensity lives on lambda_m = lambda_floor +
m * delta_lambda.  Grid indices are the canonical state everywhere
downstream; real x and lambda only appear at ingestion and output.  x_n is
always computed as n * step (never accumulated) so grid points are
bit-exact reproducible.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import ModelParams

__all__ = ["SurplusGrid", "IntensityGrid", "StateGrid", "decay_crossings", "decay_segments"]


@dataclass(frozen=True)
class SurplusGrid:
    step: float
    n_max: int

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    def x(self, n):
        return n * self.step

    def values(self) -> np.ndarray:
        return np.arange(self.n_max + 1) * self.step

    def rho(self, x: float) -> int:
        """Largest n with n*step <= x (floor projection).

        May exceed n_max; callers treat n > n_max as overflow and apply the
        linear extension above the top of the grid.
        """
        if x < 0:
            raise ValueError("rho requires x >= 0 (ruin is handled before projection)")
        n = int(math.floor(x / self.step))
        # fix up float-division rounding against the exact n*step definition
        while (n + 1) * self.step <= x:
            n += 1
        while n > 0 and n * self.step > x:
            n -= 1
        return n


@dataclass(frozen=True)
class IntensityGrid:
    lambda_floor: float
    delta_lambda: float
    m_max: int

    def __post_init__(self):
        if self.delta_lambda <= 0:
            raise ValueError("delta_lambda must be > 0")
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")
        if self.lambda_floor < 0:
            raise ValueError("lambda_floor must be >= 0")

    def value(self, m):
        return self.lambda_floor + m * self.delta_lambda

    def values(self) -> np.ndarray:
        return self.lambda_floor + np.arange(self.m_max + 1) * self.delta_lambda

    def sigma(self, lam: float) -> int:
        """Smallest m with lambda_m >= lam (ceiling projection).

        May exceed m_max; callers substitute the take-the-money value for
        overflow targets.
        """
        if lam < self.lambda_floor:
            raise ValueError("sigma requires lam >= lambda_floor")
        m = int(math.ceil((lam - self.lambda_floor) / self.delta_lambda))
        if m < 0:
            m = 0
        while self.value(m) < lam:
            m += 1
        while m > 0 and self.value(m - 1) >= lam:
            m -= 1
        return m


@dataclass(frozen=True)
class StateGrid:
    """Product grid with the hold-window length that generated it."""

    surplus: SurplusGrid
    intensity: IntensityGrid
    delta: float

    @classmethod
    def for_model(cls, params: ModelParams, delta, delta_lambda, m_max: int) -> "StateGrid":
        """Build the finite solver grid: step = premium * delta and the
        surplus grid reaches the payout threshold premium/discount."""
        p = params.premium
        step = p * delta
        # smallest n with n*p*delta >= p/q, i.e. ceil(1/(q*delta))
        ratio = _exact_ratio(1, params.discount * delta)
        n_max = int(math.ceil(ratio))
        if n_max * float(step) < float(p) / float(params.discount) - 1e-12:
            n_max += 1
        return cls(
            surplus=SurplusGrid(step=float(step), n_max=n_max),
            intensity=IntensityGrid(
                lambda_floor=float(params.lambda_floor),
                delta_lambda=float(delta_lambda),
                m_max=int(m_max),
            ),
            delta=float(delta),
        )

    @property
    def shape(self):
        return (self.surplus.n_max + 1, self.intensity.m_max + 1)


def _exact_ratio(num, den):
    if isinstance(den, numbers.Rational):
        return Fraction(num) / Fraction(den)
    return num / float(den)


def decay_crossings(h: IntensityGrid, m_start: int, decay: float, horizon: float):
    """Times in (0, horizon] at which the pure decay from lambda_{m_start}
    crosses the grid levels below, paired with the index active after each
    crossing.

    The decay lambda^c_t = lambda_floor + e^{-decay t} (lambda_{m_start} -
    lambda_floor) reaches lambda_{m_start-j} at t_j = log(m_start /
    (m_start-j)) / decay; between crossings the ceiling projection of
    lambda^c is constant.
    """
    if not 0 <= m_start <= h.m_max:
        raise ValueError("m_start out of range")
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    out = []
    for j in range(1, m_start + 1):
        if m_start - j == 0:
            break  # the floor level is only reached asymptotically
        t = math.log(m_start / (m_start - j)) / decay
        if t > horizon:
            break
        out.append((t, m_start - j))
    return out


def decay_segments(h: IntensityGrid, m_start: int, decay: float, horizon: float):
    """Partition [0, horizon] into maximal intervals of constant ceiling
    projection of the decay path: list of (t_lo, t_hi, index)."""
    crossings = decay_crossings(h, m_start, decay, horizon)
    out = []
    t_lo, idx = 0.0, m_start
    for t, m in crossings:
        if t > t_lo:
            out.append((t_lo, t, idx))
        t_lo, idx = t, m
    if horizon > t_lo:
        out.append((t_lo, horizon, idx))
    return out
