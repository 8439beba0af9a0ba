"""Counter-based random streams for reproducible parallel Monte-Carlo.

Each path gets its own stream addressed by (master seed, stream index);
draw j of a stream is a bijective 64-bit hash of a counter, so results do
not depend on execution order or batch size and serial and parallel runs
agree bit for bit.  This is the splitmix64 update with per-stream start
states derived by double hashing.

The pure-Python functions here are the reference; the simulation engine
carries an identical jitted copy and the test suite pins the two against
each other.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
STREAM_SALT = 0x632BE59BD9B4E019


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_state(seed: int, stream: int) -> int:
    return mix64(mix64(seed) ^ mix64((stream * GAMMA + STREAM_SALT) & MASK64))


def next_u01(state: int) -> tuple[int, float]:
    """Advance one step; returns the new state and a uniform in (0, 1]."""
    state = (state + GAMMA) & MASK64
    z = mix64(state)
    return state, ((z >> 11) + 1) * 2.0**-53


def next_exponential(state: int, scale: float = 1.0) -> tuple[int, float]:
    state, u = next_u01(state)
    return state, -math.log(u) * scale
