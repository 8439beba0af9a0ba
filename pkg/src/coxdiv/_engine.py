"""Jitted path engine executing a stationary grid policy.

The engine replays exactly the Markov chain the solver prices: at each
decision epoch it reads the cell label; pay steps the surplus down one
cell (lump step), finish collects the surplus and stops, hold opens a
window of length delta in which the claim intensity is the piecewise
constant ceiling projection of the decay from the current grid level.
Claim times are sampled exactly by inverting the piecewise-linear hazard;
all discounting uses exact event times.  Intensity readouts at the end of
a step (window expiry, claim time, post-catastrophe level) sample the
same randomized rounding onto the two bracketing grid rows that the
kernels integrate, so the simulated law matches the priced one.  An
intensity jump beyond the top grid row triggers the take-the-money
finish, mirroring the solver's truncation value.

Randomness comes from the counter-based streams of `streams` (one stream
per path), duplicated here under numba; `streams` is the reference
implementation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64

_GAMMA = U64(0x9E3779B97F4A7C15)
_SALT = U64(0x632BE59BD9B4E019)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)

RUIN, FINISHED, TRUNCATED = 0, 1, 2

# event codes for the optional path log
EV_PAY, EV_FINISH, EV_CLAIM, EV_CAT, EV_RUIN, EV_WINDOW = 0, 1, 2, 3, 4, 5

_PAY_LABEL = 1
_FINISH_LABEL = 2


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _stream_state(seed, stream):
    return _mix64(_mix64(seed) ^ _mix64(stream * _GAMMA + _SALT))


@njit(cache=True, inline="always")
def _next_u01(s):
    s = s + _GAMMA
    z = _mix64(s)
    return s, (float(z >> U64(11)) + 1.0) * (2.0**-53)


@njit(cache=True, inline="always")
def _draw_size(s, kind, a, b):
    if kind == 0:  # exponential, a = scale
        s, u = _next_u01(s)
        return s, -math.log(u) * a
    elif kind == 1:  # erlang, a = shape, b = scale
        tot = 0.0
        for _ in range(int(a)):
            s, u = _next_u01(s)
            tot -= math.log(u)
        return s, tot * b
    else:  # deterministic, a = value
        return s, a


@njit(cache=True)
def _simulate_path(
    seed,
    stream,
    labels,
    n0,
    m0,
    step,
    p,
    q,
    beta,
    delta,
    decay,
    lam_floor,
    dlam,
    n_max,
    m_max,
    seg_bounds,
    seg_rate,
    seg_haz,
    seg_count,
    m_end_hi,
    w_end_lo,
    u_kind,
    u_a,
    u_b,
    y_kind,
    y_a,
    y_b,
    horizon,
    log_t,
    log_kind,
    log_n,
    log_m,
    log_val,
):
    s = _stream_state(U64(seed), U64(stream))
    log_cap = log_t.shape[0]
    nlog = 0
    n = n0
    m = m0
    t = 0.0
    divs = 0.0
    while True:
        if t >= horizon:
            return divs, TRUNCATED, t, nlog
        lab = labels[n, m]
        while lab == _PAY_LABEL:
            amt = step * math.exp(-q * t)
            divs += amt
            n -= 1
            if nlog < log_cap:
                log_t[nlog] = t
                log_kind[nlog] = EV_PAY
                log_n[nlog] = n
                log_m[nlog] = m
                log_val[nlog] = amt
                nlog += 1
            lab = labels[n, m]
        if lab == _FINISH_LABEL:
            amt = (n * step) * math.exp(-q * t)
            divs += amt
            if nlog < log_cap:
                log_t[nlog] = t
                log_kind[nlog] = EV_FINISH
                log_n[nlog] = n
                log_m[nlog] = m
                log_val[nlog] = amt
                nlog += 1
            return divs, FINISHED, t, nlog

        # hold window: first of expiry, claim, catastrophe
        s, u = _next_u01(s)
        target = -math.log(u)
        tau = math.inf
        seg_at_tau = 0
        for k in range(seg_count[m]):
            lo = seg_bounds[m, k]
            hi = seg_bounds[m, k + 1]
            rate = seg_rate[m, k]
            h0 = seg_haz[m, k]
            if rate > 0.0 and target < h0 + rate * (hi - lo):
                tau = lo + (target - h0) / rate
                seg_at_tau = k
                break
        if beta > 0.0:
            s, u = _next_u01(s)
            t_cat = -math.log(u) / beta
        else:
            t_cat = math.inf

        if delta <= tau and delta <= t_cat:
            t += delta
            n += 1
            m = m_after[m]
            if nlog < log_cap:
                log_t[nlog] = t
                log_kind[nlog] = EV_WINDOW
                log_n[nlog] = n
                log_m[nlog] = m
                log_val[nlog] = 0.0
                nlog += 1
            if n > n_max:
                amt = (n - n_max) * step * math.exp(-q * t)
                divs += amt
                n = n_max
                if nlog < log_cap:
                    log_t[nlog] = t
                    log_kind[nlog] = EV_PAY
                    log_n[nlog] = n
                    log_m[nlog] = m
                    log_val[nlog] = amt
                    nlog += 1
        elif tau <= t_cat:
            t += tau
            s, u_size = _draw_size(s, u_kind, u_a, u_b)
            z = n * step + p * tau - u_size
            if z < 0.0:
                if nlog < log_cap:
                    log_t[nlog] = t
                    log_kind[nlog] = EV_RUIN
                    log_n[nlog] = n
                    log_m[nlog] = m - seg_at_tau
                    log_val[nlog] = z
                    nlog += 1
                return divs, RUIN, t, nlog
            n2 = int(z / step)
            while (n2 + 1) * step <= z:
                n2 += 1
            while n2 > 0 and n2 * step > z:
                n2 -= 1
            amt = (z - n2 * step) * math.exp(-q * t)
            divs += amt
            n = n2
            m = m - seg_at_tau
            if nlog < log_cap:
                log_t[nlog] = t
                log_kind[nlog] = EV_CLAIM
                log_n[nlog] = n
                log_m[nlog] = m
                log_val[nlog] = amt
                nlog += 1
        else:
            t += t_cat
            amt = p * t_cat * math.exp(-q * t)
            divs += amt
            lam_c = lam_floor + math.exp(-decay * t_cat) * (m * dlam)
            s, y_size = _draw_size(s, y_kind, y_a, y_b)
            lam_new = lam_c + y_size
            m2 = int(math.ceil((lam_new - lam_floor) / dlam))
            if m2 < 0:
                m2 = 0
            while lam_floor + m2 * dlam < lam_new:
                m2 += 1
            while m2 > 0 and lam_floor + (m2 - 1) * dlam >= lam_new:
                m2 -= 1
            if nlog < log_cap:
                log_t[nlog] = t
                log_kind[nlog] = EV_CAT
                log_n[nlog] = n
                log_m[nlog] = m2
                log_val[nlog] = amt
                nlog += 1
            if m2 > m_max:
                amt = (n * step) * math.exp(-q * t)
                divs += amt
                if nlog < log_cap:
                    log_t[nlog] = t
                    log_kind[nlog] = EV_FINISH
                    log_n[nlog] = n
                    log_m[nlog] = m2
                    log_val[nlog] = amt
                    nlog += 1
                return divs, FINISHED, t, nlog
            m = m2


@njit(cache=True, parallel=True)
def _run_batch(
    seed,
    stream0,
    n_paths,
    labels,
    n0,
    m0,
    step,
    p,
    q,
    beta,
    delta,
    decay,
    lam_floor,
    dlam,
    n_max,
    m_max,
    seg_bounds,
    seg_rate,
    seg_haz,
    seg_count,
    m_after,
    u_kind,
    u_a,
    u_b,
    y_kind,
    y_a,
    y_b,
    horizon,
    out_divs,
    out_status,
    out_t,
):
    empty_f = np.empty(0, dtype=np.float64)
    empty_i = np.empty(0, dtype=np.int64)
    for i in prange(n_paths):
        divs, status, t_end, _ = _simulate_path(
            seed,
            stream0 + i,
            labels,
            n0,
            m0,
            step,
            p,
            q,
            beta,
            delta,
            decay,
            lam_floor,
            dlam,
            n_max,
            m_max,
            seg_bounds,
            seg_rate,
            seg_haz,
            seg_count,
            m_after,
            u_kind,
            u_a,
            u_b,
            y_kind,
            y_a,
            y_b,
            horizon,
            empty_f,
            empty_i,
            empty_i,
            empty_i,
            empty_f,
        )
        out_divs[i] = divs
        out_status[i] = status
        out_t[i] = t_end
