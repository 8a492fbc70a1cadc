"""Flow-map form of mEP in one dimension.

The flow gamma(t, x) = x + p(t, x) is stored through its periodic part p.
Lagrangian density zeta = n o gamma and velocity eta = v o gamma evolve by

    dp/dt    = eta
    dzeta/dt = -((zeta o gamma^{-1}) * d/dx (eta o gamma^{-1})) o gamma
    deta/dt  = -(d/dx Lambda^{-2} (zeta o gamma^{-1})) o gamma

and (n, v) are recovered by composing with gamma^{-1}. Composition evaluates
the truncated Fourier series at the displaced nodes directly (O(N^2)).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .eulerian import (
    BlowupEvent,
    NonFiniteStateError,
    SolverBreakdown,
    SolverConfig,
    State,
    Trajectory,
    evolve,
    rk4,
    step_schedule,
)
from .spectral import TWO_PI, Grid, NonFiniteError, check_finite

INVERSION_GUARD = 0.1
INVERSION_TOL = 1e-12


class DiffeomorphismBreakdown(SolverBreakdown):
    """gamma stopped being (safely) monotone: the flow map is lost."""

    reason = "diffeo_breakdown"


class InversionError(SolverBreakdown):
    reason = "inversion"


def _require_1d(grid: Grid) -> None:
    if grid.dimension != 1:
        raise ValueError("the flow-map solver is one-dimensional")


def series_coefficients(grid: Grid, f: np.ndarray) -> tuple[float, np.ndarray]:
    """(a0, c) with f(y) = a0 + Re sum_{k=1}^{N/2} c_k e^{iky} interpolating the samples.

    Positive modes are doubled; the Nyquist coefficient is real for real data
    and enters once, as c_{N/2} cos(N y / 2).
    """
    fh = np.fft.fft(f) / grid.n
    half = grid.n // 2
    c = 2.0 * fh[1 : half + 1]
    c[-1] = np.real(fh[half])
    return float(np.real(fh[0])), np.ascontiguousarray(c)


def eval_at(grid: Grid, f: np.ndarray, points: np.ndarray) -> np.ndarray:
    a0, c = series_coefficients(grid, f)
    return kernels.eval_series(a0, c, np.ascontiguousarray(points, dtype=float))


def compose(grid: Grid, f: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Samples of f o gamma at the nodes, gamma = id + p."""
    _require_1d(grid)
    return eval_at(grid, f, grid.x + p)


def jacobian(grid: Grid, p: np.ndarray) -> np.ndarray:
    """gamma' = 1 + p' at the nodes."""
    return 1.0 + grid.deriv(p)


def _node_brackets(x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Consecutive nodes whose images under gamma enclose each target node.

    Valid because gamma is increasing; the node images are extended by one
    period on each side to cover the wrap-around.
    """
    nodes = np.concatenate([x - TWO_PI, x, x + TWO_PI])
    images = nodes + np.tile(p, 3)
    i = np.searchsorted(images, x, side="right") - 1
    return nodes[i], nodes[i + 1]


def invert_flow(grid: Grid, p: np.ndarray, guard: float = INVERSION_GUARD, tol: float = INVERSION_TOL) -> np.ndarray:
    """Periodic part q of gamma^{-1} = id + q.

    Node-by-node safeguarded Newton on y + p(y) = x_j, started at x_j - p(x_j)
    and bracketed by the consecutive nodes whose images enclose x_j.
    """
    _require_1d(grid)
    jac = jacobian(grid, p)
    low = float(jac.min())
    if not low > guard:
        raise DiffeomorphismBreakdown(
            f"min gamma' = {low:.4g} <= guard {guard:g}", value=low
        )
    a0, c = series_coefficients(grid, p)
    x = grid.x
    lo, hi = _node_brackets(x, p)
    y, worst, _ = kernels.invert_shift(a0, c, x, lo, hi, 0.25 * tol, 100)
    if not worst <= tol:
        raise InversionError(f"flow inversion residual {worst:.3e} exceeds {tol:g}", value=worst)
    return y - x


@dataclass(frozen=True)
class FlowState:
    grid: Grid
    p: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        _require_1d(self.grid)
        for name in ("p", "zeta", "eta"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {a.shape}, grid expects {self.grid.shape}")
            check_finite(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def from_eulerian(cls, s: State) -> "FlowState":
        return cls(s.grid, np.zeros(s.grid.shape), s.n, s.v1, s.t)

    def min_jacobian(self) -> float:
        return float(jacobian(self.grid, self.p).min())


def to_eulerian(F: FlowState) -> State:
    q = invert_flow(F.grid, F.p)
    return State(F.grid, compose(F.grid, F.zeta, q), compose(F.grid, F.eta, q), F.t)


def lagrangian_rhs(F: FlowState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = F.grid
    q = invert_flow(g, F.p)
    n = compose(g, F.zeta, q)
    v = compose(g, F.eta, q)
    dn_lag = -g.product(n, g.deriv(v))
    dv_lag = -g.deriv(g.inv_helmholtz(n))
    return F.eta.copy(), compose(g, dn_lag, F.p), compose(g, dv_lag, F.p)


def rk4_flow_step(F: FlowState, dt: float) -> FlowState:
    def f(y):
        return lagrangian_rhs(FlowState(F.grid, y[0], y[1], y[2], F.t))

    try:
        p, z, e = rk4((F.p, F.zeta, F.eta), dt, f)
        return FlowState(F.grid, p, z, e, F.t + dt)
    except NonFiniteError as exc:
        raise NonFiniteStateError(f"non-finite sample at {exc.index}", F.t, float("inf")) from None


def evolve_lagrangian(
    F0: FlowState, cfg: SolverConfig, hooks=(), guard: float = INVERSION_GUARD, start_step: int = 0
) -> Trajectory:
    """RK4 march of (p, zeta, eta); stops with a breakdown event once min gamma' <= guard."""
    if cfg.model != "mep":
        raise ValueError("the flow-map solver implements the mEP model only")
    hooks = list(hooks)
    states = []

    def emit(F, step):
        states.append(F)
        for h in hooks:
            h(F, step)

    emit(F0, start_step)
    F = F0
    event = None
    schedule = step_schedule(F0.t, cfg.t_end, cfg.dt)
    taken = 0
    for i, h in enumerate(schedule, start=1):
        step = start_step + i
        try:
            nxt = rk4_flow_step(F, h)
        except SolverBreakdown as exc:
            event = BlowupEvent(F.t, exc.reason, exc.value, step)
            break
        if i == len(schedule):
            nxt = replace(nxt, t=cfg.t_end)
        low = nxt.min_jacobian()
        if low <= guard:
            event = BlowupEvent(nxt.t, DiffeomorphismBreakdown.reason, low, step)
            break
        F = nxt
        taken = i
        if i % cfg.stride == 0 or i == len(schedule):
            emit(F, step)
    if event is not None and states[-1] is not F:
        emit(F, start_step + taken)
    return Trajectory(states, F, event, taken)


@dataclass
class CrossValidationReport:
    times: np.ndarray
    max_dn: np.ndarray
    max_dv: np.ndarray
    eulerian_event: BlowupEvent | None
    lagrangian_event: BlowupEvent | None

    @property
    def discrepancy(self) -> np.ndarray:
        return np.maximum(self.max_dn, self.max_dv)

    @property
    def final(self) -> float:
        return float(self.discrepancy[-1]) if len(self.times) else float("nan")

    @property
    def ok(self) -> bool:
        return self.eulerian_event is None and self.lagrangian_event is None


def cross_validate(s0: State, cfg: SolverConfig) -> CrossValidationReport:
    """Run both solvers from s0 and compare (n, v) in max norm at shared output times."""
    _require_1d(s0.grid)
    eul = evolve(s0, cfg)
    lag = evolve_lagrangian(FlowState.from_eulerian(s0), cfg)
    count = min(len(eul.states), len(lag.states))
    times, dn, dv = [], [], []
    for se, fl in zip(eul.states[:count], lag.states[:count]):
        if abs(se.t - fl.t) > 1e-12 * max(1.0, abs(se.t)):
            raise RuntimeError(f"output times diverged: eulerian {se.t} vs lagrangian {fl.t}")
        sl = to_eulerian(fl)
        times.append(se.t)
        dn.append(float(np.max(np.abs(se.n - sl.n))))
        dv.append(float(np.max(np.abs(se.v - sl.v))))
    return CrossValidationReport(np.array(times), np.array(dn), np.array(dv), eul.event, lag.event)


def wrap_residual(residual: np.ndarray) -> np.ndarray:
    """Distance on the circle for position residuals."""
    return np.abs((residual + np.pi) % TWO_PI - np.pi)
