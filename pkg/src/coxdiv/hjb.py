"""Fixed-point solver for the discrete dividend control problem.

Iterates W <- max{hold, pay, finish} on the finite grid from the
all-cash start W(n, m) = x_n.  The iteration is monotone from below, so
every sweep is asserted non-decreasing; it stops once the sup-norm change
drops below tol AND the argmax partition is unchanged between sweeps.
Ties are labelled pay over hold over finish, matching the order in which
the action sets are carved out of the grid.

Boundary rules of the returned surface: linear continuation in x above
the top of the grid (excess surplus above premium/discount is paid out
immediately) and value x beyond the top intensity row (take the money
and run).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import StateGrid
from .kernel import WindowKernel, build_kernels, hold_column
from .model import ModelParams

__all__ = [
    "HOLD",
    "PAY",
    "FINISH",
    "ACTION_NAMES",
    "SolverError",
    "ValueSurface",
    "PolicyPartition",
    "SolveResult",
    "solve",
    "sweep",
    "op_pay",
    "op_finish",
    "op_hold",
    "fixed_point_residual",
    "refine_check",
    "RefineReport",
]

HOLD, PAY, FINISH = 0, 1, 2
ACTION_NAMES = {HOLD: "hold", PAY: "pay", FINISH: "finish"}


class SolverError(RuntimeError):
    def __init__(self, message, last_sup_change=None):
        super().__init__(message)
        self.last_sup_change = last_sup_change


@dataclass
class ValueSurface:
    grid: StateGrid
    values: np.ndarray  # shape (n_max+1, m_max+1)

    def evaluate(self, x: float, lam: float) -> float:
        """Value at an arbitrary state: floor-project the surplus (paying
        the projection difference immediately), ceiling-project the
        intensity, linear rule above the surplus top, x beyond the
        intensity top."""
        sg, ig = self.grid.surplus, self.grid.intensity
        if x < 0:
            raise ValueError("x must be >= 0")
        if lam < ig.lambda_floor:
            raise ValueError("lam must be >= lambda_floor")
        if lam > ig.value(ig.m_max):
            return x
        m = ig.sigma(lam)
        x_top = sg.x(sg.n_max)
        if x >= x_top:
            return float(self.values[sg.n_max, m]) + (x - x_top)
        n = sg.rho(x)
        return float(self.values[n, m]) + (x - sg.x(n))


@dataclass
class PolicyPartition:
    grid: StateGrid
    labels: np.ndarray  # int8, shape (n_max+1, m_max+1)

    def action_bands(self, m: int) -> list[tuple[int, int]]:
        """Maximal runs of pay-labelled surplus indices in row m."""
        return label_bands(self.labels[:, m])

    def barrier_index(self, m: int):
        """Surplus index of the single pay threshold in row m, when the
        action set is upward-closed: pay everywhere in [b, n_max], hold
        below.  None when the row is not a barrier row."""
        bands = self.action_bands(m)
        if len(bands) == 1 and bands[0][1] == self.grid.surplus.n_max:
            return bands[0][0]
        return None

    def is_all_pay(self, m: int) -> bool:
        return self.barrier_index(m) == 1


def label_bands(row: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(row == PAY)
    if idx.size == 0:
        return []
    splits = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[0], splits + 1])
    ends = np.concatenate([splits, [idx.size - 1]])
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


@dataclass
class SolveResult:
    surface: ValueSurface
    partition: PolicyPartition
    iterations: int
    sup_change: float
    converged: bool
    sup_change_history: list = field(repr=False, default_factory=list)
    kernels: list = field(repr=False, default=None)

    @property
    def values(self) -> np.ndarray:
        return self.surface.values

    @property
    def labels(self) -> np.ndarray:
        return self.partition.labels


def op_pay(W: np.ndarray, step: float, n: int, m: int) -> float:
    if n < 1:
        raise ValueError("pay is not available at zero surplus")
    return float(W[n - 1, m]) + step


def op_finish(step: float, n: int) -> float:
    return n * step


def op_hold(ker: WindowKernel, W: np.ndarray, x_cells: np.ndarray, step: float, n: int) -> float:
    return float(hold_column(ker, W, x_cells, step)[n])


def sweep(kernels: list[WindowKernel], W: np.ndarray, x_cells: np.ndarray, step: float):
    """One application of max{hold, pay, finish} plus the argmax labels."""
    m_count = W.shape[1]
    hold = np.empty_like(W)
    for m in range(m_count):
        hold[:, m] = hold_column(kernels[m], W, x_cells, step)
    pay = np.empty_like(W)
    pay[0, :] = -np.inf
    pay[1:, :] = W[:-1, :] + step
    finish = np.broadcast_to(x_cells[:, None], W.shape)
    new_w = np.maximum(hold, np.maximum(pay, finish))
    labels = np.full(W.shape, HOLD, dtype=np.int8)
    labels[finish > hold] = FINISH
    labels[pay >= np.maximum(hold, finish)] = PAY
    return new_w, labels


def solve(
    params: ModelParams,
    grid: StateGrid,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    quad_order: int = 16,
    kernels: list[WindowKernel] | None = None,
) -> SolveResult:
    """Value iteration from W = x until the surface and the partition are
    both stable.  Raises SolverError (carrying the last sup-change) if the
    cap is hit first."""
    step = grid.surplus.step
    if abs(step - float(params.premium) * grid.delta) > 1e-9 * step:
        raise ValueError("grid step is inconsistent with premium * delta")
    x_cells = grid.surplus.values()
    if kernels is None:
        kernels = build_kernels(params, grid, quad_order)
    W = np.repeat(x_cells[:, None], grid.intensity.m_max + 1, axis=1)
    labels = np.full(W.shape, FINISH, dtype=np.int8)
    history = []
    sup_change = np.inf
    for it in range(1, max_iter + 1):
        new_w, new_labels = sweep(kernels, W, x_cells, step)
        dip = float((new_w - W).min())
        if dip < -1e-9 * max(1.0, float(np.abs(W).max())):
            raise SolverError(f"monotonicity violated by {dip:.3e} at sweep {it}", last_sup_change=sup_change)
        sup_change = float(np.abs(new_w - W).max())
        stable = bool((new_labels == labels).all())
        W, labels = new_w, new_labels
        history.append(sup_change)
        if sup_change < tol and stable:
            return SolveResult(
                surface=ValueSurface(grid, W),
                partition=PolicyPartition(grid, labels),
                iterations=it,
                sup_change=sup_change,
                converged=True,
                sup_change_history=history,
                kernels=kernels,
            )
    raise SolverError(
        f"no convergence within {max_iter} sweeps (last sup-change {sup_change:.3e})",
        last_sup_change=sup_change,
    )


def fixed_point_residual(result: SolveResult, params: ModelParams, grid: StateGrid, quad_order: int = 16) -> float:
    """max |max{hold, pay, finish} - W| over the grid, recomputed from
    scratch against the converged surface."""
    kernels = result.kernels or build_kernels(params, grid, quad_order)
    new_w, _ = sweep(kernels, result.values, grid.surplus.values(), grid.surplus.step)
    return float(np.abs(new_w - result.values).max())


@dataclass
class RefineReport:
    base: SolveResult
    fine: SolveResult
    enlarged: SolveResult
    sup_diff_grid: float
    refine_monotone: bool
    sup_diff_m_top: float
    partition_stable_m_top: bool
    tol: float
    tol_m_top: float
    passes: bool


def refine_check(
    params: ModelParams,
    delta,
    delta_lambda,
    m_max: int,
    tol: float,
    tol_m_top: float | None = None,
    solver_tol: float = 1e-8,
    max_iter: int = 200_000,
    quad_order: int = 16,
) -> RefineReport:
    """Solve at (delta, delta_lambda) and at the halved grid (with doubled
    intensity rows, covering the same lambda range), plus a doubled-m_max
    solve on the base grid; report sup-norm differences on shared cells.

    The halved grid embeds the base one (x_n = x_{2n} halved, lambda_m =
    lambda_{2m} halved), so the fine solve must dominate the base solve.
    """
    if tol_m_top is None:
        tol_m_top = tol

    def run(d, dl, mm):
        g = StateGrid.for_model(params, d, dl, mm)
        return solve(params, g, tol=solver_tol, max_iter=max_iter, quad_order=quad_order)

    base = run(delta, delta_lambda, m_max)
    fine = run(delta / 2, delta_lambda / 2, 2 * m_max)
    enlarged = run(delta, delta_lambda, 2 * m_max)

    n_shared = min(base.surface.grid.surplus.n_max, fine.surface.grid.surplus.n_max // 2)
    m_shared = min(base.surface.grid.intensity.m_max, fine.surface.grid.intensity.m_max // 2)
    w_base = base.values[: n_shared + 1, : m_shared + 1]
    w_fine = fine.values[: 2 * n_shared + 1 : 2, : 2 * m_shared + 1 : 2]
    gaps = w_fine - w_base
    sup_diff_grid = float(np.abs(gaps).max())
    refine_monotone = bool(gaps.min() >= -1e-9)

    m_top = base.surface.grid.intensity.m_max
    diff_m = enlarged.values[:, : m_top + 1] - base.values
    sup_diff_m_top = float(np.abs(diff_m).max())
    partition_stable_m_top = bool((enlarged.labels[:, : m_top + 1] == base.labels).all())

    return RefineReport(
        base=base,
        fine=fine,
        enlarged=enlarged,
        sup_diff_grid=sup_diff_grid,
        refine_monotone=refine_monotone,
        sup_diff_m_top=sup_diff_m_top,
        partition_stable_m_top=partition_stable_m_top,
        tol=tol,
        tol_m_top=tol_m_top,
        passes=bool(sup_diff_grid <= tol and refine_monotone and sup_diff_m_top <= tol_m_top),
    )
