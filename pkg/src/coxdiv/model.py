"""Risk-model primitives for the shot-noise Cox surplus process.

The surplus grows at the premium rate and drops by i.i.d. claim sizes
arriving as a Cox process whose intensity is a shot-noise process: a base
level `lambda_floor` plus exponentially decaying upward jumps (sizes from
`jump_law`) arriving at Poisson rate `beta`, decay rate `decay`.

The premium is never user-supplied: it is always derived from the
expected-value principle against the stationary mean intensity,
p = (1 + loading) * E(U) * lambda_av.  When the inputs are Fractions the
derived quantities stay exact.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

from .distributions import Distribution

__all__ = ["ModelParams"]


@dataclass(frozen=True)
class ModelParams:
    lambda_floor: numbers.Real
    beta: numbers.Real
    decay: numbers.Real
    discount: numbers.Real
    loading: numbers.Real
    claim_law: Distribution
    jump_law: Distribution

    def __post_init__(self):
        if self.lambda_floor < 0:
            raise ValueError("lambda_floor must be >= 0")
        # beta = 0 is the degenerate constant-intensity configuration used
        # by the classical baseline; loading <= 0 arises there when a fixed
        # premium is imposed at a larger constant intensity.
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.decay <= 0:
            raise ValueError("decay must be > 0")
        if self.discount <= 0:
            raise ValueError("discount must be > 0")
        if self.loading <= -1:
            raise ValueError("loading must exceed -1 (premium must stay positive)")

    @property
    def lambda_av(self):
        """Stationary mean intensity: lambda_floor + beta E(Y) / decay."""
        return self.lambda_floor + self.beta * self.jump_law.mean() / self.decay

    @property
    def premium(self):
        """Expected-value-principle premium rate (1 + loading) E(U) lambda_av."""
        return (1 + self.loading) * self.claim_law.mean() * self.lambda_av

    def mean_intensity(self, lambda0, t: float) -> float:
        """E(lambda_t) from initial intensity lambda0."""
        self._check_state(lambda0, t)
        d = float(self.decay)
        w = math.exp(-d * float(t))
        shot = (1.0 - w) * float(self.beta) * float(self.jump_law.mean()) / d
        return float(self.lambda_floor) * (1.0 - w) + float(lambda0) * w + shot

    def mean_cumulative_intensity(self, lambda0, t: float) -> float:
        """E(integral of lambda_s over [0, t]) from initial intensity lambda0."""
        self._check_state(lambda0, t)
        d = float(self.decay)
        lf = float(self.lambda_floor)
        t = float(t)
        w = math.exp(-d * t)
        shot = (w - 1.0 + d * t) * float(self.beta) * float(self.jump_law.mean()) / d**2
        return lf * t - lf * (1.0 - w) / d + (1.0 - w) * float(lambda0) / d + shot

    def _check_state(self, lambda0, t):
        if t < 0:
            raise ValueError("t must be >= 0")
        if lambda0 < self.lambda_floor:
            raise ValueError("lambda0 must be >= lambda_floor")
