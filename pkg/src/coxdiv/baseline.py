"""Classical constant-intensity dividend problem as a degenerate solve.

The comparison curves need the optimal value function of the classical
compound-Poisson model (no intensity jumps).  That is exactly the main
solver with beta = 0, a single intensity row and the constant intensity
as the floor, so no second implementation exists to drift.

Two premium conventions appear in the comparisons and both are explicit:

* 'reloaded': the same relative safety loading is applied at the constant
  intensity, so the premium differs from the shot-noise one;
* 'same_p': the shot-noise premium is imposed, implemented by deriving
  the loading that reproduces it exactly (the premium stays a derived
  quantity, and with Fraction inputs the match is exact so the two
  surplus grids coincide bit for bit).
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from .grid import StateGrid
from .hjb import SolveResult, label_bands, solve
from .model import ModelParams

__all__ = ["CLConfig", "CLResult", "GridMismatchError", "solve_cl", "compare_surfaces", "ComparisonTable"]

PREMIUM_MODES = ("same_p", "reloaded")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CLConfig:
    base: ModelParams
    lambda_const: numbers.Real
    premium_mode: str
    delta: numbers.Real

    def __post_init__(self):
        if self.premium_mode not in PREMIUM_MODES:
            raise ValueError(f"premium_mode must be one of {PREMIUM_MODES}")
        if self.lambda_const <= 0:
            raise ValueError("lambda_const must be > 0")

    def params(self) -> ModelParams:
        if self.premium_mode == "reloaded":
            loading = self.base.loading
        else:
            # loading that reproduces the shot-noise premium at the
            # constant intensity; exact under Fraction arithmetic
            loading = self.base.premium / (self.base.claim_law.mean() * self.lambda_const) - 1
        return ModelParams(
            lambda_floor=self.lambda_const,
            beta=0,
            decay=self.base.decay,
            discount=self.base.discount,
            loading=loading,
            claim_law=self.base.claim_law,
            jump_law=self.base.jump_law,
        )


@dataclass
class CLResult:
    config: CLConfig
    params: ModelParams
    grid: StateGrid
    result: SolveResult

    @property
    def values(self) -> np.ndarray:
        return self.result.values[:, 0]

    @property
    def labels(self) -> np.ndarray:
        return self.result.labels[:, 0]

    def action_bands(self):
        return label_bands(self.labels)

    def barrier_index(self):
        bands = self.action_bands()
        if len(bands) == 1 and bands[0][1] == self.grid.surplus.n_max:
            return bands[0][0]
        return None

    def evaluate(self, x):
        """Value at arbitrary surplus, with the floor projection below the
        top of the grid and the linear rule above (vectorized)."""
        xs = np.asarray(x, dtype=float)
        if np.any(xs < 0):
            raise ValueError("x must be >= 0")
        sg = self.grid.surplus
        vals = self.values
        out = np.empty(xs.shape)
        flat_x = np.atleast_1d(xs)
        flat_out = np.atleast_1d(out)
        for i, xi in enumerate(flat_x):
            if xi >= sg.x(sg.n_max):
                flat_out[i] = vals[sg.n_max] + (xi - sg.x(sg.n_max))
            else:
                n = sg.rho(xi)
                flat_out[i] = vals[n] + (xi - sg.x(n))
        return float(out) if np.isscalar(x) else out


def solve_cl(cfg: CLConfig, tol: float = 1e-8, max_iter: int = 200_000, quad_order: int = 16) -> CLResult:
    params = cfg.params()
    grid = StateGrid.for_model(params, cfg.delta, delta_lambda=1.0, m_max=0)
    result = solve(params, grid, tol=tol, max_iter=max_iter, quad_order=quad_order)
    return CLResult(config=cfg, params=params, grid=grid, result=result)


@dataclass
class ComparisonTable:
    mode: str
    xs: np.ndarray
    values: np.ndarray
    values_cl: np.ndarray
    expected: str  # 'shot_above' | 'cl_above'
    slack: float = 1e-9

    @property
    def difference(self) -> np.ndarray:
        return self.values - self.values_cl

    @property
    def violations(self) -> int:
        d = self.difference
        bad = d < -self.slack if self.expected == "shot_above" else d > self.slack
        return int(np.count_nonzero(bad))


def compare_surfaces(result: SolveResult, cl: CLResult, mode: str, m_probe: int = 0) -> ComparisonTable:
    """Per-surplus comparison of the shot-noise surface against a
    classical solve.

    mode 'floor'   : column at the base intensity vs the reloaded
                     classical value (the expected ordering is shot above);
    mode 'average' : column at m_probe (the grid row for the stationary
                     mean intensity) vs the same-premium classical value
                     (shot above);
    mode 'bound'   : every column vs the same-premium classical value at
                     the floor intensity (classical above); requires the
                     two solves to share the surplus grid exactly.
    """
    grid = result.surface.grid
    xs = grid.surplus.values()
    if mode in ("floor", "average"):
        want = {"floor": "reloaded", "average": "same_p"}[mode]
        if cl.config.premium_mode != want:
            raise ValueError(f"mode {mode!r} expects a {want!r} classical solve")
        col = 0 if mode == "floor" else m_probe
        v = result.values[:, col].copy()
        v_cl = cl.evaluate(xs)
        return ComparisonTable(mode=mode, xs=xs, values=v, values_cl=v_cl, expected="shot_above")
    if mode == "bound":
        if cl.config.premium_mode != "same_p":
            raise ValueError("mode 'bound' expects a 'same_p' classical solve")
        if abs(cl.grid.surplus.step - grid.surplus.step) > 0:
            raise GridMismatchError("bound comparison requires identical surplus grids")
        n_shared = min(grid.surplus.n_max, cl.grid.surplus.n_max)
        v = result.values[: n_shared + 1, :].max(axis=1)  # worst column per x
        v_cl = cl.values[: n_shared + 1].copy()
        return ComparisonTable(mode=mode, xs=xs[: n_shared + 1], values=v, values_cl=v_cl, expected="cl_above")
    raise ValueError(f"unknown comparison mode {mode!r}")
