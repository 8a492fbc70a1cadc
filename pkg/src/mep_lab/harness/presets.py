"""Initial data presets."""

from __future__ import annotations

import numpy as np

from ..eulerian import State
from ..spectral import Grid

DEFAULT_AMPLITUDES = {
    "steady": (0.0, 0.0),
    "analytic": (0.2, 0.1),
    "gaussian": (0.2, 0.1),
    "large": (5.0, 0.1),
}


def make_state(name: str, grid: Grid, amplitude_n=None, amplitude_v=None) -> State:
    """Build a preset state.

    steady    n = 1, v = 0
    analytic  n = 1 + a_n cos x, v = a_v sin x (tensor products in 2-D)
    gaussian  n = 1 + a_n exp(cos x - 1), v = a_v sin x exp(cos x - 1)
    large     the analytic shape with a_n = 5, for blow-up demonstrations
    """
    if name not in DEFAULT_AMPLITUDES:
        raise ValueError(f"unknown preset {name!r}")
    dn, dv = DEFAULT_AMPLITUDES[name]
    a_n = dn if amplitude_n in (None, "auto") else float(amplitude_n)
    a_v = dv if amplitude_v in (None, "auto") else float(amplitude_v)
    coords = grid.coordinates()
    if name == "steady":
        return State(grid, np.ones(grid.shape), np.zeros((grid.dimension,) + grid.shape))
    if grid.dimension == 1:
        x = coords[0]
        if name in ("analytic", "large"):
            return State(grid, 1.0 + a_n * np.cos(x), a_v * np.sin(x))
        bump = np.exp(np.cos(x) - 1.0)
        return State(grid, 1.0 + a_n * bump, a_v * np.sin(x) * bump)
    x, y = coords
    if name in ("analytic", "large"):
        return State(grid, 1.0 + a_n * np.cos(x) * np.cos(y), np.stack([a_v * np.sin(x), a_v * np.sin(y)]))
    bump = np.exp(np.cos(x) + np.cos(y) - 2.0)
    return State(grid, 1.0 + a_n * bump, np.stack([a_v * np.sin(x) * bump, a_v * np.sin(y) * bump]))
