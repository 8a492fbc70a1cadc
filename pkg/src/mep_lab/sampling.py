"""Seeded random trigonometric polynomials.

The coefficients depend only on the generator and the bandwidth, never on
the grid, so the same draw can be sampled on several resolutions for
refinement studies.
"""

from __future__ import annotations

import itertools

import numpy as np

from .spectral import Grid


def _half_lattice(dimension: int, kmax: int):
    """Wavevectors with |k_i| <= kmax, one from each +-k pair, zero excluded."""
    for k in itertools.product(range(-kmax, kmax + 1), repeat=dimension):
        if any(k) and k > tuple(-x for x in k):
            yield k


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    kmax: int,
    amplitude: float = 1.0,
    decay: float = 0.0,
    mean: float = 0.0,
) -> np.ndarray:
    """mean + sum_k a_k cos(k.x) + b_k sin(k.x) with a_k, b_k ~ N(0, 1) e^{-decay |k|}.

    The fluctuation is rescaled to root-mean-square ``amplitude`` using the
    coefficients, not the samples, so the result is grid independent.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    coords = grid.coordinates()
    out = np.zeros(grid.shape)
    power = 0.0
    for k in _half_lattice(grid.dimension, kmax):
        a, b = rng.standard_normal(2) * np.exp(-decay * np.sqrt(sum(x * x for x in k)))
        phase = sum(ki * xi for ki, xi in zip(k, coords))
        out += a * np.cos(phase) + b * np.sin(phase)
        power += 0.5 * (a * a + b * b)
    if power > 0:
        out *= amplitude / np.sqrt(power)
    return out + mean
