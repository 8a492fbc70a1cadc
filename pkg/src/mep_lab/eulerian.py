"""Eulerian solvers: nonlocal mEP, its local (potential) form, and Euler-Poisson.

State layout: ``n`` has the grid shape; ``v`` always carries a leading
component axis of length ``m`` (so ``v.shape == (1, N)`` in one dimension).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .spectral import Grid, NonFiniteError, check_finite

logger = logging.getLogger(__name__)

Tendency = tuple[np.ndarray, np.ndarray]


class SolverBreakdown(RuntimeError):
    """Base for failures that end a time march (reported as events, not crashes)."""

    reason = "breakdown"

    def __init__(self, message: str, t: float = float("nan"), value: float = float("nan")):
        super().__init__(message)
        self.t = t
        self.value = value


class BlowupError(SolverBreakdown):
    reason = "blowup"


class NonFiniteStateError(BlowupError):
    reason = "nonfinite"


class PositivityError(SolverBreakdown, ValueError):
    reason = "positivity"


class NewtonConvergenceError(SolverBreakdown):
    reason = "newton"


@dataclass(frozen=True)
class State:
    grid: Grid
    n: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = np.array(self.n, dtype=float)
        v = np.array(self.v, dtype=float)
        if v.shape == self.grid.shape and self.grid.dimension == 1:
            v = v[np.newaxis]
        if n.shape != self.grid.shape:
            raise ValueError(f"n has shape {n.shape}, grid expects {self.grid.shape}")
        if v.shape != (self.grid.dimension,) + self.grid.shape:
            raise ValueError(f"v has shape {v.shape}, expected {(self.grid.dimension,) + self.grid.shape}")
        check_finite(n)
        check_finite(v)
        n.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "v", v)

    @property
    def v1(self) -> np.ndarray:
        """Velocity as a scalar array (one dimension only)."""
        if self.grid.dimension != 1:
            raise ValueError("v1 is only defined for m = 1")
        return self.v[0]

    def with_fields(self, n, v, t=None) -> "State":
        return State(self.grid, n, v, self.t if t is None else t)

    def require_positive_density(self) -> None:
        low = float(np.min(self.n))
        if not low > 0:
            raise PositivityError(f"density must be positive, min n = {low:.6g}", self.t, low)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    model: Literal["mep", "euler_poisson"] = "mep"
    blowup_threshold: float = 1e6
    tail_fraction: float = 0.1
    sigma: int = 2
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not np.isfinite(self.t_end):
            raise ValueError("t_end must be finite")
        if self.model not in ("mep", "euler_poisson"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.stride < 1:
            raise ValueError("output stride must be >= 1")


# -- right-hand sides ------------------------------------------------------------


def _advection(grid: Grid, v: np.ndarray) -> np.ndarray:
    """(v . grad) v, dealiased, componentwise."""
    out = np.zeros_like(v)
    for i in range(grid.dimension):
        vh = grid.fft(v[i])
        for j in range(grid.dimension):
            out[i] += grid.product(v[j], grid.ifft(grid.deriv_symbol(j) * vh))
    return out


def _continuity(grid: Grid, n: np.ndarray, v: np.ndarray) -> np.ndarray:
    flux = np.stack([grid.product(n, v[j]) for j in range(grid.dimension)])
    return -grid.div(flux)


def _check_tendency(s: State, dn: np.ndarray, dv: np.ndarray) -> None:
    for name, a in (("dn", dn), ("dv", dv)):
        if not np.all(np.isfinite(a)):
            raise BlowupError(f"non-finite {name} at t={s.t:.6g}", s.t, float("inf"))


def mep_rhs(s: State) -> Tendency:
    """dn = -div(n v), dv = -(v.grad)v - grad Lambda^{-2} n."""
    g = s.grid
    dn = _continuity(g, s.n, s.v)
    dv = -_advection(g, s.v) - g.grad(g.inv_helmholtz(s.n))
    _check_tendency(s, dn, dv)
    return dn, dv


def local_potential_solve(grid: Grid, n: np.ndarray, rtol: float = 1e-11) -> np.ndarray:
    """Solve Laplacian(phi) - phi + n = 0, i.e. phi = Lambda^{-2} n.

    The residual is checked spectrally so the local and nonlocal forms are
    the same equation to round-off.
    """
    phi = grid.inv_helmholtz(n)
    resid = grid.laplacian(phi) - phi + n
    scale = grid.sobolev_norm(n, 0)
    r = grid.sobolev_norm(resid, 0)
    if r > rtol * max(scale, np.finfo(float).tiny):
        raise AssertionError(f"local potential residual {r:.3e} exceeds {rtol:g} * {scale:.3e}")
    return phi


@dataclass
class NewtonReport:
    iterations: int = 0
    residual: float = float("nan")
    inner_iterations: list = field(default_factory=list)


def ep_potential_solve(
    grid: Grid,
    n: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 50,
    phi0: np.ndarray | None = None,
    report: NewtonReport | None = None,
) -> np.ndarray:
    """Newton solve of Laplacian(phi) - exp(phi) + n = 0.

    Each Newton correction solves (Laplacian - exp(phi)) d = -G by a defect
    correction loop preconditioned with the constant-coefficient operator
    (Laplacian - c), c = mean(exp(phi)), inverted spectrally. The inner loop
    stops once its residual is below 0.1 of the current nonlinear residual.
    """
    low = float(np.min(n))
    if not low > 0:
        raise PositivityError(f"Euler-Poisson potential needs n > 0, min n = {low:.6g}", value=low)
    scale = max(grid.sobolev_norm(n, 0), np.finfo(float).tiny)
    phi = np.full(grid.shape, np.log(np.mean(n))) if phi0 is None else np.array(phi0, dtype=float)
    lap = sum(grid.deriv_symbol(a) ** 2 for a in range(grid.dimension))

    def residual(p):
        return grid.laplacian(p) - np.exp(p) + n

    G = residual(phi)
    gnorm = grid.sobolev_norm(G, 0)
    it = 0
    inner_counts = []
    while gnorm > tol * scale:
        if it >= max_iter:
            raise NewtonConvergenceError(
                f"Newton did not converge in {max_iter} iterations, residual {gnorm:.3e}", value=gnorm
            )
        ephi = np.exp(phi)
        c = float(np.mean(ephi))
        precond = 1.0 / (lap - c)
        d = np.zeros_like(phi)
        r = -G
        inner = 0
        while grid.sobolev_norm(r, 0) > 0.1 * gnorm:
            if inner >= 200:
                raise NewtonConvergenceError(
                    f"linear defect correction stalled, residual {grid.sobolev_norm(r, 0):.3e}", value=gnorm
                )
            d = d + grid.ifft(precond * grid.fft(r))
            r = -G - (grid.laplacian(d) - ephi * d)
            inner += 1
        inner_counts.append(inner)
        phi = phi + d
        G = residual(phi)
        gnorm = grid.sobolev_norm(G, 0)
        it += 1
        if not np.isfinite(gnorm):
            raise NewtonConvergenceError("Newton iterate became non-finite", value=gnorm)
    if report is not None:
        report.iterations = it
        report.residual = gnorm
        report.inner_iterations = inner_counts
    return phi


def ep_rhs(s: State, tol: float = 1e-12, max_iter: int = 50) -> Tendency:
    """Euler-Poisson tendency: dv = -(v.grad)v - grad phi with phi from the Newton solve."""
    g = s.grid
    s.require_positive_density()
    try:
        phi = ep_potential_solve(g, s.n, tol=tol, max_iter=max_iter)
    except SolverBreakdown as exc:
        exc.t = s.t
        raise
    dn = _continuity(g, s.n, s.v)
    dv = -_advection(g, s.v) - g.grad(phi)
    _check_tendency(s, dn, dv)
    return dn, dv


# -- time stepping ------------------------------------------------------------


def rk4(y: Sequence[np.ndarray], dt: float, f: Callable) -> tuple:
    """Classical RK4 on a tuple of arrays; f maps the tuple to a tuple of tendencies."""
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(
        a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


def rk4_step(s: State, dt: float, rhs: Callable[[State], Tendency] = mep_rhs) -> State:
    if dt == 0:
        raise ValueError("dt must be non-zero")

    def f(y):
        return rhs(State(s.grid, y[0], y[1], s.t))

    try:
        n, v = rk4((s.n, s.v), dt, f)
        return State(s.grid, n, v, s.t + dt)
    except NonFiniteError as exc:
        raise NonFiniteStateError(f"non-finite sample at {exc.index}", s.t, float("inf")) from None


# -- blow-up detection ---------------------------------------------------------


@dataclass(frozen=True)
class BlowupEvent:
    t: float
    reason: str
    value: float
    step: int = -1

    def describe(self) -> str:
        return f"{self.reason}@t={self.t:.6g}:value={self.value:.6g}"


def _tail_energies(grid: Grid, u: np.ndarray) -> tuple[float, float]:
    """(tail, total) fluctuation energy (k != 0); the tail is the top third of the retained band.

    The retained band is |k| <= N//3, so the top third is 2K/3 < |k| <= K.
    """
    uh = grid.fft(u)
    kabs = np.sqrt(grid.ksq)
    e = np.abs(uh) ** 2
    if e.ndim > grid.dimension:
        e = e.sum(axis=0)
    K = grid.kmax_dealias
    return float(np.sum(e[kabs > 2.0 * K / 3.0])), float(np.sum(e[kabs > 0]))


def tail_energy_fraction(grid: Grid, *fields: np.ndarray) -> float:
    """Share of the combined fluctuation energy of ``fields`` held in the top third of the band.

    Pooling n and v keeps the ratio well conditioned when one field passes
    through zero (a small-amplitude wave moves its energy between n and v).
    """
    tail = total = 0.0
    for u in fields:
        a, b = _tail_energies(grid, u)
        tail += a
        total += b
    return tail / total if total > 0 else 0.0


def blowup_detect(s: State, threshold: float = 1e6, sigma: int = 2, tail: float = 0.1) -> BlowupEvent | None:
    for name, a in (("n", s.n), ("v", s.v)):
        if not np.all(np.isfinite(a)):
            return BlowupEvent(s.t, f"nonfinite_{name}", float("inf"))
    g = s.grid
    norm_v = g.sobolev_norm(s.v, sigma)
    if norm_v > threshold:
        return BlowupEvent(s.t, "norm_v", norm_v)
    norm_n = g.sobolev_norm(s.n, sigma - 1)
    if norm_n > threshold:
        return BlowupEvent(s.t, "norm_n", norm_n)
    frac = tail_energy_fraction(g, s.n, s.v)
    if frac > tail:
        return BlowupEvent(s.t, "tail_energy", frac)
    return None


# -- driver ------------------------------------------------------------------


@dataclass
class Trajectory:
    states: list
    final: object
    event: BlowupEvent | None = None
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def step_schedule(t0: float, t_end: float, dt: float) -> list[float]:
    """Signed step sizes from t0 to t_end; the last step absorbs any remainder."""
    span = t_end - t0
    if span == 0:
        return []
    sign = 1.0 if span > 0 else -1.0
    count = int(round(abs(span) / dt))
    if count == 0 or abs(count * dt - abs(span)) > 1e-9 * max(1.0, abs(span)):
        count = int(np.ceil(abs(span) / dt))
        steps = [sign * dt] * (count - 1)
        steps.append(span - sum(steps))
        return steps
    return [sign * dt] * count


def model_rhs(cfg: SolverConfig) -> Callable[[State], Tendency]:
    if cfg.model == "mep":
        return mep_rhs
    return lambda s: ep_rhs(s, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter)


def evolve(
    s0: State,
    cfg: SolverConfig,
    hooks: Iterable[Callable[[State, int], None]] = (),
    start_step: int = 0,
) -> Trajectory:
    """Fixed-step RK4 march from s0.t to cfg.t_end (backwards if t_end < s0.t).

    Hooks are called as ``hook(state, step)`` on the initial state and every
    ``cfg.stride`` steps after it, plus on the final state. A blow-up or
    solver breakdown stops the march and is returned as ``trajectory.event``.
    """
    hooks = list(hooks)
    rhs = model_rhs(cfg)
    if cfg.model == "euler_poisson":
        s0.require_positive_density()
    check_finite(s0.n)
    check_finite(s0.v)

    def emit(state, step):
        states.append(state)
        for h in hooks:
            h(state, step)

    states: list[State] = []
    emit(s0, start_step)
    s = s0
    event = None
    schedule = step_schedule(s0.t, cfg.t_end, cfg.dt)
    taken = 0
    for i, h in enumerate(schedule, start=1):
        step = start_step + i
        try:
            nxt = rk4_step(s, h, rhs)
        except SolverBreakdown as exc:
            t_fail = s.t if np.isnan(exc.t) else exc.t
            event = BlowupEvent(t_fail, exc.reason, exc.value, step)
            break
        if i == len(schedule):
            nxt = replace(nxt, t=cfg.t_end)
        event = blowup_detect(nxt, cfg.blowup_threshold, cfg.sigma, cfg.tail_fraction)
        if event is not None:
            event = replace(event, step=step)
            break
        s = nxt
        taken = i
        if i % cfg.stride == 0 or i == len(schedule):
            emit(s, step)
    if event is not None:
        logger.info("evolve stopped: %s", event.describe())
        if states[-1] is not s:
            emit(s, start_step + taken)
    return Trajectory(states, s, event, taken)
