"""Positive size laws for claims and intensity jumps.

Three families are supported: exponential, Erlang (integer shape) and
deterministic.  The solver only ever consumes three functionals of a law:
the cdf, the mean and the partial expectation E[Z 1{a < Z <= b}], all of
which have closed forms here.  Parameters may be `fractions.Fraction`
(or int), in which case `mean()` stays exact; the cdf and partial
expectation always evaluate in floats and accept numpy arrays.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Exponential",
    "Erlang",
    "Deterministic",
    "Distribution",
    "distribution_from_dict",
]


def _check_nonneg(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("distribution argument must be >= 0")
    return arr


def _match(x, arr):
    # return a scalar when the input was a scalar
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class Exponential:
    """Exponential law with the given rate (mean 1/rate)."""

    rate: numbers.Real

    kind = "exponential"

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be > 0")

    def mean(self):
        return 1 / self.rate

    def cdf(self, x):
        arr = _check_nonneg(x)
        return _match(x, -np.expm1(-float(self.rate) * arr))

    def partial_expectation(self, a, b=math.inf):
        """E[Z 1{a < Z <= b}] for 0 <= a <= b."""
        a, b = _pe_check(a, b)
        return _match(a, self._pe0(np.asarray(b, float)) - self._pe0(np.asarray(a, float)))

    def _pe0(self, z):
        # E[Z 1{Z <= z}] = 1/r - (z + 1/r) e^{-rz}
        r = float(self.rate)
        out = np.where(np.isinf(z), 1.0 / r, 1.0 / r - (z + 1.0 / r) * np.exp(-r * np.where(np.isinf(z), 0.0, z)))
        return out

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / float(self.rate), size=size)

    def engine_code(self):
        return 0, 1.0 / float(self.rate), 0.0

    def to_dict(self):
        return {"kind": self.kind, "rate": _num_str(self.rate)}


@dataclass(frozen=True)
class Erlang:
    """Erlang law: sum of `shape` independent exponentials of the given rate."""

    shape: int
    rate: numbers.Real

    kind = "erlang"

    def __post_init__(self):
        if not isinstance(self.shape, numbers.Integral) or self.shape < 1:
            raise ValueError("shape must be an integer >= 1")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")

    def mean(self):
        return self.shape / self.rate

    def cdf(self, x):
        arr = _check_nonneg(x)
        return _match(x, self._cdf_k(arr, int(self.shape)))

    def _cdf_k(self, arr, k):
        # 1 - e^{-rx} sum_{j<k} (rx)^j / j!  (standard finite sum)
        rx = float(self.rate) * arr
        s = np.ones_like(rx)
        term = np.ones_like(rx)
        for j in range(1, k):
            term = term * rx / j
            s = s + term
        return 1.0 - np.exp(-rx) * s

    def partial_expectation(self, a, b=math.inf):
        """E[Z 1{a < Z <= b}] via the Erlang(shape+1) cdf identity."""
        a, b = _pe_check(a, b)
        return _match(a, self._pe0(np.asarray(b, float)) - self._pe0(np.asarray(a, float)))

    def _pe0(self, z):
        # z f_k(z) = (k/r) f_{k+1}(z), hence E[Z 1{Z<=z}] = (k/r) F_{k+1}(z)
        mean = float(self.shape) / float(self.rate)
        finite = np.where(np.isinf(z), 0.0, z)
        return np.where(np.isinf(z), mean, mean * self._cdf_k(np.asarray(finite, float), int(self.shape) + 1))

    def sample(self, rng, size=None):
        return rng.gamma(float(self.shape), 1.0 / float(self.rate), size=size)

    def engine_code(self):
        return 1, float(self.shape), 1.0 / float(self.rate)

    def to_dict(self):
        return {"kind": self.kind, "shape": int(self.shape), "rate": _num_str(self.rate)}


@dataclass(frozen=True)
class Deterministic:
    """Point mass at `value`; the cdf is right-continuous (cdf(value) = 1)."""

    value: numbers.Real

    kind = "deterministic"

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("value must be > 0")

    def mean(self):
        return self.value

    def cdf(self, x):
        arr = _check_nonneg(x)
        return _match(x, (arr >= float(self.value)).astype(float))

    def partial_expectation(self, a, b=math.inf):
        a, b = _pe_check(a, b)
        c = float(self.value)
        a_arr = np.asarray(a, float)
        b_arr = np.asarray(b, float)
        return _match(a, np.where((a_arr < c) & (c <= b_arr), c, 0.0))

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def engine_code(self):
        return 2, float(self.value), 0.0

    def to_dict(self):
        return {"kind": self.kind, "value": _num_str(self.value)}


Distribution = Exponential | Erlang | Deterministic


def _pe_check(a, b):
    a_arr = _check_nonneg(a)
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < a_arr):
        raise ValueError("partial_expectation requires a <= b")
    return a, b


def _num_str(v):
    # exact round-trip for Fractions, plain repr otherwise
    return str(v) if isinstance(v, numbers.Rational) and not isinstance(v, numbers.Integral) else v


def distribution_from_dict(d: dict) -> Distribution:
    """Build a law from a config mapping like {"kind": "erlang", "shape": 2, "rate": 1}."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError("distribution spec must be a mapping with a 'kind' key")
    kind = d["kind"]
    if kind == "exponential":
        return Exponential(rate=d["rate"])
    if kind == "erlang":
        return Erlang(shape=int(d["shape"]), rate=d["rate"])
    if kind == "deterministic":
        return Deterministic(value=d["value"])
    raise ValueError(f"unknown distribution kind {kind!r}")
