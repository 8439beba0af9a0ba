"""One-step transition kernels for the hold action on the discrete grid.

Holding from (x_n, lambda_m) opens a window of length delta that ends at
the first of: window expiry, a claim, a catastrophe.  During the window
the claim-arrival intensity is the ceiling projection of the pure decay
from lambda_m, i.e. piecewise constant between the decay-crossing times,
so the survival factor is an exact exponential per segment and only a
smooth 1-D time integral is left for Gauss-Legendre quadrature.

Intensity readouts at the end of the step (window expiry, claim time,
post-catastrophe level) use stochastic interpolation between the two grid
rows bracketing the exact intensity, with the linear-interpolation
weights.  Pure ceiling rounding is not usable here: one window of decay
leaves the intensity inside its own grid cell for every level below
1/(1 - e^{-decay*delta}), so ceiling rounding would freeze the intensity
on all those rows and the decay relief that drives the optimal strategy
would be lost at practical grid sizes.  Randomized rounding removes that
trap while keeping the operator affine and monotone with nonnegative
weights, and the path engine samples the same rounding, so the simulated
law is exactly the law being priced.

The value of the hold action is affine in the value surface W:

    hold(n, m) = sum of weights * W(target cells) + dividend constant,

and the kernel stores that decomposition.  Claim-size expectations are
evaluated exactly as cdf-difference sums plus partial expectations over
the surplus cells (the integrand is piecewise linear in the claim size
with breakpoints at the grid points); jump-size expectations likewise
over the intensity cells, where the partial expectation also yields the
exact conditional rounding weight.  Nothing here depends on W, so
kernels are built once per grid and reused across sweeps.

Key reduction: the weight a claim at window-time t sends onto the cell
n - i depends only on the cell distance i (through x_i + p t), not on n.
Each sweep therefore evaluates the claim part for a whole lambda-column
with one truncated convolution per decay segment and rounding side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Deterministic
from .grid import StateGrid, decay_segments
from .model import ModelParams

__all__ = ["ClaimBlock", "WindowKernel", "build_window_kernel", "build_kernels", "hold_column"]

_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(order: int):
    if order not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _LEGGAUSS_CACHE[order]


@dataclass
class ClaimBlock:
    """Discounted claim weights onto one intensity row.

    weights[i] is the weight sent onto surplus cell n - i (valid for any
    row n >= i).
    """

    m_target: int
    weights: np.ndarray


@dataclass
class WindowKernel:
    """Affine decomposition of the hold-action value at intensity index m."""

    m: int
    surv_weight_hi: float
    surv_m_hi: int
    surv_weight_lo: float
    surv_m_lo: int
    claims: list[ClaimBlock]
    claim_div_prefix: np.ndarray  # expected discounted claim-overflow dividend, by row
    cat_weights: np.ndarray
    cat_overflow: float
    cat_dividend: float
    ruin_weights: np.ndarray = field(repr=False)

    def total_weight(self, n: int) -> float:
        """Discounted mass reaching any value-bearing state from row n
        (excludes ruin, includes the lambda-overflow mass)."""
        tot = self.surv_weight_hi + self.surv_weight_lo
        tot += float(np.sum(self.cat_weights)) + self.cat_overflow
        for blk in self.claims:
            tot += float(np.sum(blk.weights[: n + 1]))
        return tot


def _claim_kinks(law, step: float, p: float, delta: float, n_top: int):
    """Window times where a deterministic claim size crosses a surplus grid
    point; at most one interior kink exists because consecutive cells are
    exactly one window apart in time."""
    if not isinstance(law, Deterministic):
        return []
    c = float(law.value)
    i0 = int(math.floor(c / step))
    if i0 > n_top:
        return []
    t = (c - i0 * step) / p
    return [t] if 0.0 < t < delta else []


def _jump_kinks(law, lam_excess0: float, decay: float, delta: float, lam_floor: float, lam_grid: np.ndarray):
    """Window times where the decaying intensity plus a deterministic jump
    crosses an intensity grid level."""
    if not isinstance(law, Deterministic) or lam_excess0 <= 0.0:
        return []
    c = float(law.value)
    excess_end = lam_excess0 * math.exp(-decay * delta)
    out = []
    for lam_k in lam_grid:
        v = lam_k - c - lam_floor
        if excess_end < v < lam_excess0:
            out.append(math.log(lam_excess0 / v) / decay)
    return out


def build_window_kernel(params: ModelParams, grid: StateGrid, m: int, quad_order: int = 16) -> WindowKernel:
    sg, ig = grid.surplus, grid.intensity
    delta = grid.delta
    p = float(params.premium)
    q = float(params.discount)
    beta = float(params.beta)
    decay = float(params.decay)
    lam_floor = ig.lambda_floor
    dlam = ig.delta_lambda
    n_top, m_top = sg.n_max, ig.m_max
    step = sg.step
    excess0 = m * dlam
    lam_grid = ig.values()
    x_cells = np.arange(n_top + 1) * step
    nodes, gl_w = _leggauss(quad_order)

    claim_law, jump_law = params.claim_law, params.jump_law
    u_kinks = _claim_kinks(claim_law, step, p, delta, n_top)
    y_kinks = _jump_kinks(jump_law, excess0, decay, delta, lam_floor, lam_grid) if beta > 0 else []

    claims: list[ClaimBlock] = []
    claim_div = np.zeros(n_top + 1)
    ruin = np.zeros(n_top + 1)
    cat_w = np.zeros(m_top + 1)
    cat_ov = 0.0
    cat_div = 0.0

    hbase = 0.0
    for a, b, m_seg in decay_segments(ig, m, decay, delta):
        rate = ig.value(m_seg)
        cuts = sorted({a, b, *(t for t in u_kinks + y_kinks if a < t < b)})
        cw_lo = np.zeros(n_top + 1)
        cw_hi = np.zeros(n_top + 1)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes
            w = 0.5 * (hi - lo) * gl_w
            expo = np.exp(-(q + beta) * t - (hbase + rate * (t - a)))
            dens_claim = rate * w * expo
            # rounding-down weight of the value readout at the claim time:
            # (lambda_{m_seg} - lambda^c_t) / dlam, zero on the floor row
            round_lo = np.clip(m_seg - m * np.exp(-decay * t), 0.0, 1.0) if m_seg > 0 else np.zeros_like(t)

            edges = x_cells[None, :] + p * t[:, None]
            cdf_u = claim_law.cdf(edges)
            pe_u = claim_law.partial_expectation(np.zeros_like(edges), edges)
            cw2d = np.concatenate([cdf_u[:, :1], np.diff(cdf_u, axis=1)], axis=1)
            pe2d = np.concatenate([pe_u[:, :1], np.diff(pe_u, axis=1)], axis=1)
            cw_lo += (dens_claim * round_lo) @ cw2d
            cw_hi += (dens_claim * (1.0 - round_lo)) @ cw2d
            claim_div += dens_claim @ (edges * cw2d - pe2d)
            ruin += dens_claim @ (1.0 - cdf_u)

            if beta > 0:
                dens_cat = beta * w * expo
                lam_c = lam_floor + np.exp(-decay * t) * excess0
                y_edges = np.maximum(lam_grid[None, :] - lam_c[:, None], 0.0)
                cdf_y = jump_law.cdf(y_edges)
                pe_y = jump_law.partial_expectation(np.zeros_like(y_edges), y_edges)
                kw2d = np.concatenate([cdf_y[:, :1], np.diff(cdf_y, axis=1)], axis=1)
                ped2d = np.concatenate([pe_y[:, :1], np.diff(pe_y, axis=1)], axis=1)
                # conditional rounding-down mass per bin:
                # E[(lambda_k - lambda_c - Y)/dlam ; Y in bin k]
                low2d = (y_edges * kw2d - ped2d) / dlam
                hi2d = kw2d - low2d
                cat_w += dens_cat @ hi2d
                cat_w[:-1] += dens_cat @ low2d[:, 1:]
                cat_ov += float(dens_cat @ (1.0 - cdf_y[:, -1]))
                cat_div += float(dens_cat @ (p * t))
        hbase += rate * (b - a)
        if m_seg > 0 and cw_lo.any():
            claims.append(ClaimBlock(m_target=m_seg - 1, weights=cw_lo))
        claims.append(ClaimBlock(m_target=m_seg, weights=cw_hi))

    surv_weight = math.exp(-(q + beta) * delta - hbase)
    if m == 0:
        surv_m_hi, round_lo_end = 0, 0.0
    else:
        lam_end = lam_floor + math.exp(-decay * delta) * excess0
        surv_m_hi = ig.sigma(min(lam_end, ig.value(m)))
        round_lo_end = min(max(surv_m_hi - m * math.exp(-decay * delta), 0.0), 1.0) if surv_m_hi > 0 else 0.0
    return WindowKernel(
        m=m,
        surv_weight_hi=surv_weight * (1.0 - round_lo_end),
        surv_m_hi=surv_m_hi,
        surv_weight_lo=surv_weight * round_lo_end,
        surv_m_lo=max(surv_m_hi - 1, 0),
        claims=claims,
        claim_div_prefix=np.cumsum(claim_div),
        cat_weights=cat_w,
        cat_overflow=cat_ov,
        cat_dividend=cat_div,
        ruin_weights=ruin,
    )


def build_kernels(params: ModelParams, grid: StateGrid, quad_order: int = 16) -> list[WindowKernel]:
    return [build_window_kernel(params, grid, m, quad_order) for m in range(grid.intensity.m_max + 1)]


def hold_column(ker: WindowKernel, W: np.ndarray, x_cells: np.ndarray, step: float) -> np.ndarray:
    """Hold-action value for every surplus row at the kernel's intensity
    index, against the surface W of shape (n_max+1, m_max+1).

    Survival from the top row follows the linear extension
    W(n_max + 1, .) = W(n_max, .) + step; intensity-overflow jump targets
    are worth the current surplus.
    """
    n_top = W.shape[0] - 1
    w_up = np.empty(n_top + 1)
    w_up[:n_top] = W[1:, ker.surv_m_hi]
    w_up[n_top] = W[n_top, ker.surv_m_hi] + step
    out = ker.surv_weight_hi * w_up
    if ker.surv_weight_lo > 0.0:
        w_up[:n_top] = W[1:, ker.surv_m_lo]
        w_up[n_top] = W[n_top, ker.surv_m_lo] + step
        out += ker.surv_weight_lo * w_up
    for blk in ker.claims:
        out += np.convolve(blk.weights, W[:, blk.m_target])[: n_top + 1]
    out += ker.claim_div_prefix
    out += W @ ker.cat_weights
    out += ker.cat_overflow * x_cells + ker.cat_dividend
    return out
