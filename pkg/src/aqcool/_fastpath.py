"""Compiled O(1)-per-step kernels for the two-level cooling walk.

The two-level state is carried as its ground population ``g``.  A cooling
outcome (probability ``(g*c0 + (1-g)*c1) / 2``) multiplies the ground and
excited weights by ``c0 = 1 - sin(phi_0)`` and ``c1 = 1 - sin(phi_1)``; a
heating outcome uses ``h0 = 1 + sin(phi_0)``, ``h1 = 1 + sin(phi_1)``.
Kernels consume caller-supplied uniform variates so that random streams stay
under the caller's control, and return early when a stopping rule fires.
"""

from __future__ import annotations

import numba
import numpy as np

RUNNING, ABSORBED, BOUND = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def cool_probability(g, c0, c1):
    return 0.5 * (g * c0 + (1.0 - g) * c1)


@numba.njit(cache=True, nogil=True)
def update(g, outcome, c0, c1, h0, h1):
    if outcome == 0:
        w = g * c0
        return w / (w + (1.0 - g) * c1)
    w = g * h0
    return w / (w + (1.0 - g) * h1)


@numba.njit(cache=True, nogil=True)
def bounded_walk(u, g, x, n, g_init, c0, c1, h0, h1, c_abs, c_bound, reflect):
    """Advance the reflect/absorb/bound walk over the uniforms in ``u``.

    Returns ``(status, g, x, n)``; status is RUNNING when ``u`` ran out.
    """
    for i in range(u.shape[0]):
        if u[i] < cool_probability(g, c0, c1):
            g = update(g, 0, c0, c1, h0, h1)
            x += 1
        else:
            g = update(g, 1, c0, c1, h0, h1)
            x -= 1
        n += 1
        if x <= reflect:
            g = g_init
            x = 0
        if x >= c_abs:
            return ABSORBED, g, x, n
        if n >= c_bound:
            return BOUND, g, x, n
    return RUNNING, g, x, n


@numba.njit(cache=True, nogil=True)
def refresh_walk(u, g, n, g_init, c0, c1, h0, h1, target, max_steps):
    """Reset to ``g_init`` whenever ``g`` drops below it; stop once ``g >= target``."""
    for i in range(u.shape[0]):
        if u[i] < cool_probability(g, c0, c1):
            g = update(g, 0, c0, c1, h0, h1)
        else:
            g = update(g, 1, c0, c1, h0, h1)
        n += 1
        if g < g_init:
            g = g_init
        if g >= target:
            return ABSORBED, g, n
        if n >= max_steps:
            return BOUND, g, n
    return RUNNING, g, n


@numba.njit(cache=True, nogil=True)
def free_walk(u, g, c0, c1, h0, h1):
    """No feedback: apply ``len(u)`` modules, return (#zeros, final g)."""
    zeros = 0
    for i in range(u.shape[0]):
        if u[i] < cool_probability(g, c0, c1):
            g = update(g, 0, c0, c1, h0, h1)
            zeros += 1
        else:
            g = update(g, 1, c0, c1, h0, h1)
    return zeros, g


def uniform_blocks(rng: np.random.Generator, first: int = 1024, largest: int = 1 << 16):
    """Endless uniform blocks of doubling size; the consumed prefix is block-size independent."""
    size = first
    while True:
        yield rng.random(size)
        size = min(size * 2, largest)
