"""Exact path simulation and Monte-Carlo validation.

Two process flavours live here:

* the exact shot-noise model (continuous intensity), used to validate the
  closed-form moments: catastrophe times are homogeneous Poisson, claim
  times come from thinning with the segment-start intensity as the bound
  (valid because the intensity decays between catastrophes);

* the hat model the solver prices (intensity ceiling-projected onto the
  grid, decay restarted from the grid level at every decision epoch),
  executed by the jitted engine in `_engine` for policy evaluation and by
  a vectorized one-window rollout that serves as the independent oracle
  for the quadrature kernels.

Estimates are reproducible: every path owns a counter-based stream
derived from the master seed, so batch size and execution order do not
change the numbers.  Horizon truncation is reported on the estimate,
never silently absorbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .grid import StateGrid, decay_segments
from .hjb import PAY, PolicyPartition
from .model import ModelParams

__all__ = [
    "IntensityPath",
    "MCEstimate",
    "PathResult",
    "simulate_intensity",
    "simulate_claims",
    "moment_mc",
    "run_policy",
    "evaluate_policy_mc",
    "mc_one_step_hold",
    "default_horizon",
    "window_tables",
]


@dataclass(frozen=True)
class IntensityPath:
    """One realization of the shot-noise intensity on [0, horizon]."""

    lambda0: float
    lambda_floor: float
    decay: float
    horizon: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray

    def value(self, t):
        """lambda_t (vectorized); right-continuous with upward jumps."""
        t_arr = np.asarray(t, dtype=float)
        excess = (self.lambda0 - self.lambda_floor) * np.exp(-self.decay * t_arr)
        if self.jump_times.size:
            lag = t_arr[..., None] - self.jump_times
            excess = excess + np.sum(np.where(lag >= 0, self.jump_sizes * np.exp(-self.decay * np.maximum(lag, 0.0)), 0.0), axis=-1)
        out = self.lambda_floor + excess
        return float(out) if np.isscalar(t) else out

    def integral(self, a: float, b: float) -> float:
        """Closed-form integral of lambda_s over [a, b]."""
        if not 0 <= a <= b:
            raise ValueError("need 0 <= a <= b")
        d = self.decay
        total = self.lambda_floor * (b - a)
        total += (self.lambda0 - self.lambda_floor) * (math.exp(-d * a) - math.exp(-d * b)) / d
        for tk, yk in zip(self.jump_times, self.jump_sizes):
            if tk >= b:
                break
            lo = max(a, tk)
            total += yk * (math.exp(-d * (lo - tk)) - math.exp(-d * (b - tk))) / d
        return total


def simulate_intensity(params: ModelParams, lambda0: float, horizon: float, rng: np.random.Generator) -> IntensityPath:
    """Exact shot-noise path: Poisson(beta) catastrophe times on
    [0, horizon] with jump sizes from the jump law."""
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if lambda0 < params.lambda_floor:
        raise ValueError("lambda0 must be >= lambda_floor")
    beta = float(params.beta)
    count = rng.poisson(beta * horizon) if beta > 0 else 0
    times = np.sort(rng.uniform(0.0, horizon, size=count))
    sizes = np.asarray(params.jump_law.sample(rng, size=count), dtype=float)
    return IntensityPath(
        lambda0=float(lambda0),
        lambda_floor=float(params.lambda_floor),
        decay=float(params.decay),
        horizon=float(horizon),
        jump_times=times,
        jump_sizes=sizes,
    )


def simulate_claims(path: IntensityPath, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Claim times of the Cox process conditional on the intensity path,
    by thinning.  The intensity is non-increasing between catastrophes, so
    the segment-start value is a valid bound on each segment."""
    if horizon > path.horizon:
        raise ValueError("horizon exceeds the simulated path")
    bounds = [0.0] + [float(t) for t in path.jump_times if t < horizon] + [horizon]
    claims = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        bound = path.value(lo)
        if bound <= 0.0:
            continue
        t = lo
        while True:
            t += rng.exponential(1.0 / bound)
            if t >= hi:
                break
            if rng.random() * bound <= path.value(t):
                claims.append(t)
    return np.asarray(claims)


def moment_mc(params: ModelParams, lambda0: float, ts, n_paths: int, seed: int, chunk: int = 100_000):
    """MC means and standard errors of lambda_t and of its running
    integral at the requested times, under the exact model.

    Returns (mean_lam, se_lam, mean_cum, se_cum) as arrays over ts.
    Vectorized over paths with a padded jump matrix per chunk.
    """
    ts = np.asarray(ts, dtype=float)
    t_max = float(ts.max())
    beta = float(params.beta)
    d = float(params.decay)
    lf = float(params.lambda_floor)
    rng = np.random.Generator(np.random.Philox(seed))
    sums = np.zeros((2, ts.size))
    sumsq = np.zeros((2, ts.size))
    done = 0
    while done < n_paths:
        size = min(chunk, n_paths - done)
        counts = rng.poisson(beta * t_max, size=size) if beta > 0 else np.zeros(size, dtype=int)
        k_max = int(counts.max()) if size else 0
        lam_vals = np.empty((size, ts.size))
        cum_vals = np.empty((size, ts.size))
        if k_max > 0:
            jump_t = rng.uniform(0.0, t_max, size=(size, k_max))
            jump_y = np.asarray(params.jump_law.sample(rng, size=(size, k_max)), dtype=float)
            alive = np.arange(k_max)[None, :] < counts[:, None]
        for j, t in enumerate(ts):
            w = math.exp(-d * t)
            lam_t = np.full(size, lf + (lambda0 - lf) * w)
            cum_t = np.full(size, lf * t + (lambda0 - lf) * (1.0 - w) / d)
            if k_max > 0:
                lag = t - jump_t
                act = alive & (lag >= 0)
                lam_t += np.sum(np.where(act, jump_y * np.exp(-d * np.maximum(lag, 0.0)), 0.0), axis=1)
                cum_t += np.sum(np.where(act, jump_y * (1.0 - np.exp(-d * np.maximum(lag, 0.0))) / d, 0.0), axis=1)
            lam_vals[:, j] = lam_t
            cum_vals[:, j] = cum_t
        sums[0] += lam_vals.sum(axis=0)
        sums[1] += cum_vals.sum(axis=0)
        sumsq[0] += (lam_vals**2).sum(axis=0)
        sumsq[1] += (cum_vals**2).sum(axis=0)
        done += size
    mean = sums / n_paths
    var = np.maximum(sumsq / n_paths - mean**2, 0.0) * n_paths / max(n_paths - 1, 1)
    se = np.sqrt(var / n_paths)
    return mean[0], se[0], mean[1], se[1]


# ---------------------------------------------------------------------------
# hat-model execution


def window_tables(params: ModelParams, grid: StateGrid):
    """Per-intensity-row tables describing the hold window: segment
    boundaries, the constant hat intensity and the cumulative hazard on
    each segment, and the post-window intensity index."""
    ig = grid.intensity
    d = float(params.decay)
    delta = grid.delta
    m_count = ig.m_max + 1
    segs = [decay_segments(ig, m, d, delta) for m in range(m_count)]
    s_max = max(len(s) for s in segs)
    seg_bounds = np.zeros((m_count, s_max + 1))
    seg_rate = np.zeros((m_count, s_max))
    seg_haz = np.zeros((m_count, s_max))
    seg_count = np.zeros(m_count, dtype=np.int64)
    m_after = np.zeros(m_count, dtype=np.int64)
    for m, seg in enumerate(segs):
        seg_count[m] = len(seg)
        haz = 0.0
        for k, (lo, hi, idx) in enumerate(seg):
            seg_bounds[m, k] = lo
            seg_bounds[m, k + 1] = hi
            seg_rate[m, k] = ig.value(idx)
            seg_haz[m, k] = haz
            haz += ig.value(idx) * (hi - lo)
        lam_end = ig.lambda_floor + math.exp(-d * delta) * (m * ig.delta_lambda)
        m_after[m] = ig.sigma(min(lam_end, ig.value(m)))
    return seg_bounds, seg_rate, seg_haz, seg_count, m_after


@dataclass
class PathResult:
    discounted_dividends: float
    status: str  # 'ruin' | 'finished' | 'truncated'
    t_end: float
    log: dict | None = None


@dataclass
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncation_bound: float
    horizon: float
    n_ruined: int
    n_finished: int
    n_truncated: int


_STATUS = {_engine.RUIN: "ruin", _engine.FINISHED: "finished", _engine.TRUNCATED: "truncated"}


def _engine_args(params: ModelParams, partition: PolicyPartition, grid: StateGrid):
    labels = np.ascontiguousarray(partition.labels, dtype=np.int8)
    if (labels[0, :] == PAY).any():
        raise ValueError("pay is not a valid action at zero surplus")
    seg_bounds, seg_rate, seg_haz, seg_count, m_after = window_tables(params, grid)
    u_kind, u_a, u_b = params.claim_law.engine_code()
    y_kind, y_a, y_b = params.jump_law.engine_code()
    return dict(
        labels=labels,
        step=grid.surplus.step,
        p=float(params.premium),
        q=float(params.discount),
        beta=float(params.beta),
        delta=grid.delta,
        decay=float(params.decay),
        lam_floor=grid.intensity.lambda_floor,
        dlam=grid.intensity.delta_lambda,
        n_max=grid.surplus.n_max,
        m_max=grid.intensity.m_max,
        seg_bounds=seg_bounds,
        seg_rate=seg_rate,
        seg_haz=seg_haz,
        seg_count=seg_count,
        m_after=m_after,
        u_kind=u_kind,
        u_a=u_a,
        u_b=u_b,
        y_kind=y_kind,
        y_a=y_a,
        y_b=y_b,
    )


def run_policy(
    params: ModelParams,
    partition: PolicyPartition,
    grid: StateGrid,
    x0_index: int,
    m0_index: int,
    horizon: float,
    seed: int,
    stream: int = 0,
    log_capacity: int = 0,
) -> PathResult:
    """Discounted dividends of one path under the stationary grid policy,
    on the path's own counter-based stream (seed, stream)."""
    if not 0 <= x0_index <= grid.surplus.n_max:
        raise ValueError("x0_index out of range")
    if not 0 <= m0_index <= grid.intensity.m_max:
        raise ValueError("m0_index out of range")
    args = _engine_args(params, partition, grid)
    cap = max(int(log_capacity), 0)
    log_t = np.empty(cap)
    log_kind = np.empty(cap, dtype=np.int64)
    log_n = np.empty(cap, dtype=np.int64)
    log_m = np.empty(cap, dtype=np.int64)
    log_val = np.empty(cap)
    divs, status, t_end, nlog = _engine._simulate_path(
        np.uint64(seed & _MASK64),
        np.uint64(stream),
        args["labels"],
        x0_index,
        m0_index,
        args["step"],
        args["p"],
        args["q"],
        args["beta"],
        args["delta"],
        args["decay"],
        args["lam_floor"],
        args["dlam"],
        args["n_max"],
        args["m_max"],
        args["seg_bounds"],
        args["seg_rate"],
        args["seg_haz"],
        args["seg_count"],
        args["m_after"],
        args["u_kind"],
        args["u_a"],
        args["u_b"],
        args["y_kind"],
        args["y_a"],
        args["y_b"],
        float(horizon),
        log_t,
        log_kind,
        log_n,
        log_m,
        log_val,
    )
    log = None
    if cap:
        log = {
            "t": log_t[:nlog].copy(),
            "kind": log_kind[:nlog].copy(),
            "n": log_n[:nlog].copy(),
            "m": log_m[:nlog].copy(),
            "value": log_val[:nlog].copy(),
        }
    return PathResult(discounted_dividends=float(divs), status=_STATUS[status], t_end=float(t_end), log=log)


_MASK64 = (1 << 64) - 1


def truncation_bound(params: ModelParams, grid: StateGrid, horizon: float) -> float:
    """Discounting bound on the dividends ignored beyond the horizon:
    e^{-q T} (largest reachable surplus + premium/discount)."""
    p = float(params.premium)
    q = float(params.discount)
    x_bound = grid.surplus.x(grid.surplus.n_max + 1)
    return math.exp(-q * horizon) * (x_bound + p / q)


def default_horizon(params: ModelParams, grid: StateGrid, probe_value: float, rel_tail: float = 1e-3) -> float:
    """Smallest horizon whose truncation bound is below rel_tail of the
    probe value."""
    p = float(params.premium)
    q = float(params.discount)
    x_bound = grid.surplus.x(grid.surplus.n_max + 1)
    return math.log((x_bound + p / q) / (rel_tail * probe_value)) / q


def evaluate_policy_mc(
    params: ModelParams,
    partition: PolicyPartition,
    grid: StateGrid,
    cell: tuple[int, int],
    n_paths: int,
    horizon: float,
    seed: int,
) -> MCEstimate:
    """Mean and standard error of run_policy over n_paths independent
    streams (streams 0..n_paths-1 of the master seed); deterministic for a
    fixed seed and independent of threading."""
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    n0, m0 = cell
    if not 0 <= n0 <= grid.surplus.n_max:
        raise ValueError("probe surplus index out of range")
    if not 0 <= m0 <= grid.intensity.m_max:
        raise ValueError("probe intensity index out of range")
    args = _engine_args(params, partition, grid)
    out_divs = np.empty(n_paths)
    out_status = np.empty(n_paths, dtype=np.int64)
    out_t = np.empty(n_paths)
    _engine._run_batch(
        np.uint64(seed & _MASK64),
        0,
        n_paths,
        args["labels"],
        n0,
        m0,
        args["step"],
        args["p"],
        args["q"],
        args["beta"],
        args["delta"],
        args["decay"],
        args["lam_floor"],
        args["dlam"],
        args["n_max"],
        args["m_max"],
        args["seg_bounds"],
        args["seg_rate"],
        args["seg_haz"],
        args["seg_count"],
        args["m_after"],
        args["u_kind"],
        args["u_a"],
        args["u_b"],
        args["y_kind"],
        args["y_a"],
        args["y_b"],
        float(horizon),
        out_divs,
        out_status,
        out_t,
    )
    mean = float(out_divs.mean())
    sd = float(out_divs.std(ddof=1))
    return MCEstimate(
        mean=mean,
        std_error=sd / math.sqrt(n_paths),
        n_paths=n_paths,
        truncation_bound=truncation_bound(params, grid, horizon),
        horizon=float(horizon),
        n_ruined=int((out_status == _engine.RUIN).sum()),
        n_finished=int((out_status == _engine.FINISHED).sum()),
        n_truncated=int((out_status == _engine.TRUNCATED).sum()),
    )


# ---------------------------------------------------------------------------
# one-step oracle for the quadrature kernels


def mc_one_step_hold(
    params: ModelParams,
    grid: StateGrid,
    W: np.ndarray,
    n: int,
    m: int,
    n_samples: int,
    seed: int,
):
    """MC estimate of the hold-action value at cell (n, m) against the
    surface W: sample one window (expiry / claim / catastrophe), read the
    payoff off W with the same boundary rules the solver uses.

    Independent of the quadrature kernel and of the jitted engine (numpy
    Philox randomness); this is the primary correctness gate for
    build_window_kernel.  Returns (mean, standard error).
    """
    sg, ig = grid.surplus, grid.intensity
    delta = grid.delta
    step = sg.step
    p = float(params.premium)
    q = float(params.discount)
    beta = float(params.beta)
    d = float(params.decay)
    lf = ig.lambda_floor
    n_top, m_top = sg.n_max, ig.m_max

    segs = decay_segments(ig, m, d, delta)
    seg_lo = np.array([s[0] for s in segs])
    seg_rate = np.array([ig.value(s[2]) for s in segs])
    seg_idx = np.array([s[2] for s in segs])
    seg_len = np.array([s[1] - s[0] for s in segs])
    haz_start = np.concatenate([[0.0], np.cumsum(seg_rate * seg_len)])[:-1]
    haz_end = haz_start + seg_rate * seg_len
    lam_end = lf + math.exp(-d * delta) * (m * ig.delta_lambda)
    m_after = ig.sigma(min(lam_end, ig.value(m)))

    rng = np.random.Generator(np.random.Philox(seed))
    target = rng.exponential(size=n_samples)
    k = np.searchsorted(haz_end, target, side="right")
    inside = k < len(segs)
    k_in = np.minimum(k, len(segs) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(
            inside & (seg_rate[k_in] > 0),
            seg_lo[k_in] + (target - haz_start[k_in]) / np.maximum(seg_rate[k_in], 1e-300),
            np.inf,
        )
    t_cat = rng.exponential(1.0 / beta, size=n_samples) if beta > 0 else np.full(n_samples, np.inf)

    payoff = np.empty(n_samples)

    survive = (delta <= tau) & (delta <= t_cat)
    if n + 1 <= n_top:
        w_up = W[n + 1, m_after]
    else:
        w_up = W[n_top, m_after] + step
    payoff[survive] = math.exp(-q * delta) * w_up

    claim = ~survive & (tau <= t_cat)
    if claim.any():
        tau_c = tau[claim]
        u = np.asarray(params.claim_law.sample(rng, size=int(claim.sum())), dtype=float)
        z = n * step + p * tau_c - u
        ruined = z < 0
        n2 = np.floor(np.maximum(z, 0.0) / step).astype(np.int64)
        n2 += (n2 + 1) * step <= np.maximum(z, 0.0)
        n2 -= (n2 > 0) & (n2 * step > np.maximum(z, 0.0))
        m_tau = seg_idx[np.minimum(k[claim], len(segs) - 1)]
        vals = np.exp(-q * tau_c) * (W[n2, m_tau] + (z - n2 * step))
        payoff[claim] = np.where(ruined, 0.0, vals)

    cat = ~survive & ~claim
    if cat.any():
        t_c = t_cat[cat]
        lam_c = lf + np.exp(-d * t_c) * (m * ig.delta_lambda)
        y = np.asarray(params.jump_law.sample(rng, size=int(cat.sum())), dtype=float)
        lam_new = lam_c + y
        m2 = np.ceil((lam_new - lf) / ig.delta_lambda).astype(np.int64)
        m2 = np.maximum(m2, 0)
        m2 += lf + m2 * ig.delta_lambda < lam_new
        m2 -= (m2 > 0) & (lf + (m2 - 1) * ig.delta_lambda >= lam_new)
        over = m2 > m_top
        cont = W[n, np.minimum(m2, m_top)]
        vals = np.exp(-q * t_c) * (p * t_c + np.where(over, n * step, cont))
        payoff[cat] = vals

    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1)) / math.sqrt(n_samples)
    return mean, se
