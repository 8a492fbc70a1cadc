"""Experiment runners shared by the CLI and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .. import gevrey, hamiltonian
from ..eulerian import SolverConfig, State, ep_rhs, evolve, mep_rhs
from ..hamiltonian import Covector
from ..lagrangian import compose, cross_validate, invert_flow
from ..sampling import random_field
from ..spectral import TWO_PI, Grid
from .presets import make_state

# -- dispersion ------------------------------------------------------------------------


def predicted_frequency(k: float) -> float:
    """Linear frequency about (n, v) = (1, 0): n_tt = d^2 Lambda^{-2} n gives w^2 = k^2 / (1 + k^2)."""
    return k / math.sqrt(1.0 + k * k)


@dataclass(frozen=True)
class DispersionResult:
    k: int
    amplitude: float
    omega: float
    predicted: float
    periods: int
    fit_ok: bool
    fit_residual: float

    @property
    def error(self) -> float:
        return abs(self.omega - self.predicted)


def _sinusoid(t, omega, a, b, c):
    return a * np.cos(omega * t) + b * np.sin(omega * t) + c


def measure_frequency(times: np.ndarray, signal: np.ndarray) -> tuple[float, int, bool, float]:
    """Fit a sinusoid over a whole number of periods.

    The period is first estimated from upward zero crossings of the
    de-meaned signal; the fit window is then cut to an integer number of
    those periods and refined with nonlinear least squares.
    """
    y = signal - np.mean(signal)
    up = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    if up.size < 3:
        return float("nan"), 0, False, float("inf")
    # linear interpolation of the crossing instants
    tc = times[up] - y[up] * (times[up + 1] - times[up]) / (y[up + 1] - y[up])
    period = float(np.mean(np.diff(tc)))
    periods = int((times[-1] - times[0]) // period)
    if periods < 2:
        return float("nan"), periods, False, float("inf")
    keep = times <= times[0] + periods * period
    t, yy = times[keep], signal[keep]
    w0 = TWO_PI / period
    guess = [w0, yy[0] - np.mean(yy), 0.0, float(np.mean(yy))]
    try:
        popt, _ = curve_fit(_sinusoid, t, yy, p0=guess, maxfev=10000)
    except (RuntimeError, ValueError):
        return w0, periods, False, float("inf")
    resid = float(np.max(np.abs(_sinusoid(t, *popt) - yy)) / max(np.max(np.abs(yy - popt[3])), 1e-300))
    return abs(float(popt[0])), periods, resid < 1e-2, resid


def dispersion_run(k: int, amplitude: float = 1e-4, n: int = 64, dt: float = 0.05, t_end: float = 40 * math.pi) -> DispersionResult:
    """Evolve n = 1 + a cos kx, v = 0 and measure the frequency of mode k of n."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    if k > n // 3:
        raise ValueError(f"k = {k} is not resolved on N = {n}")
    g = Grid(1, n)
    s0 = State(g, 1.0 + amplitude * np.cos(k * g.x), np.zeros(n))
    times, coef = [], []

    def record(s, step):
        times.append(s.t)
        coef.append(g.fft(s.n)[k].real)

    tr = evolve(s0, SolverConfig(dt=dt, t_end=t_end), hooks=[record])
    if tr.event is not None:
        return DispersionResult(k, amplitude, float("nan"), predicted_frequency(k), 0, False, float("inf"))
    omega, periods, ok, resid = measure_frequency(np.array(times), np.array(coef))
    return DispersionResult(k, amplitude, omega, predicted_frequency(k), periods, ok, resid)


def ep_mep_gap(amplitudes=(1e-1, 5e-2, 2.5e-2, 1.25e-2), n: int = 64) -> tuple[np.ndarray, float]:
    """Max-norm gap between Euler-Poisson and mEP tendencies at n = 1 + a cos x, v = 0.

    mEP is applied to the fluctuation n - 1. Returns the gaps and the slope of
    log(gap) against log(a).
    """
    g = Grid(1, n)
    gaps = []
    for a in amplitudes:
        s_ep = State(g, 1.0 + a * np.cos(g.x), np.zeros(n))
        s_mep = State(g, a * np.cos(g.x), np.zeros(n))
        dn_e, dv_e = ep_rhs(s_ep)
        dn_m, dv_m = mep_rhs(s_mep)
        gaps.append(max(float(np.max(np.abs(dn_e - dn_m))), float(np.max(np.abs(dv_e - dv_m)))))
    gaps = np.array(gaps)
    slope = float(np.polyfit(np.log(amplitudes), np.log(gaps), 1)[0])
    return gaps, slope


# -- convergence -------------------------------------------------------------------


@dataclass
class ConvergenceResult:
    mode: str
    parameters: list
    errors: list
    orders: list = field(default_factory=list)

    @property
    def order(self) -> float:
        return float(self.orders[-1]) if self.orders else float("nan")


def _final(s0: State, dt: float, t_end: float, model: str = "mep") -> State:
    tr = evolve(s0, SolverConfig(dt=dt, t_end=t_end, model=model, stride=10**9))
    if tr.event is not None:
        raise RuntimeError(f"convergence run stopped: {tr.event.describe()}")
    return tr.final


def _max_diff(a: State, b: State) -> float:
    return max(float(np.max(np.abs(a.n - b.n))), float(np.max(np.abs(a.v - b.v))))


def temporal_convergence(
    preset: str = "analytic", n: int = 256, t_end: float = 1.0, dts=(0.1, 0.05, 0.025), model: str = "mep", **amps
) -> ConvergenceResult:
    """Errors against a dt_min/16 reference; orders are log2 of successive error ratios."""
    g = Grid(1, n)
    s0 = make_state(preset, g, **amps)
    ref = _final(s0, min(dts) / 16.0, t_end, model)
    errors = [_max_diff(_final(s0, dt, t_end, model), ref) for dt in dts]
    orders = [math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1])
              for i in range(len(dts) - 1) if errors[i + 1] > 0 and errors[i] > 0]
    return ConvergenceResult("temporal", list(dts), errors, orders)


def drift_order(
    preset: str = "analytic", n: int = 256, t_end: float = 1.0, dts=(0.04, 0.02, 0.01), tag: str = "H1", **amps
) -> ConvergenceResult:
    """Max relative drift of one functional along RK4 runs at each dt; orders as in temporal_convergence.

    The step sizes must be coarse enough that the drift sits well above
    round-off (about 1e-15 relative) at the smallest dt.
    """
    s0 = make_state(preset, Grid(1, n), **amps)
    errors = []
    for dt in dts:
        tr = evolve(s0, SolverConfig(dt=dt, t_end=t_end, stride=1))
        if tr.event is not None:
            raise RuntimeError(f"drift run stopped: {tr.event.describe()}")
        errors.append(hamiltonian.conservation_audit(tr.states)[tag])
    orders = [math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1])
              for i in range(len(dts) - 1) if errors[i + 1] > 0 and errors[i] > 0]
    return ConvergenceResult("drift", list(dts), errors, orders)


def spatial_convergence(
    preset: str = "analytic", ns=(32, 64, 128), t_end: float = 0.25, dt: float = 1e-3, dimension: int = 1,
    model: str = "mep", **amps
) -> ConvergenceResult:
    """Errors on the coarse nodes against a run at twice the finest resolution.

    The grids nest, so the reference is compared at every r-th node. The
    reported "orders" are the decay factors err(N) / err(2N).
    """
    nref = 2 * max(ns)
    ref = _final(make_state(preset, Grid(dimension, nref), **amps), dt, t_end, model)
    errors = []
    for n in ns:
        r = nref // n
        sl = (slice(None, None, r),) * dimension
        s = _final(make_state(preset, Grid(dimension, n), **amps), dt, t_end, model)
        errors.append(max(float(np.max(np.abs(s.n - ref.n[sl]))), float(np.max(np.abs(s.v - ref.v[(slice(None),) + sl])))))
    ratios = [errors[i] / errors[i + 1] if errors[i + 1] > 0 else float("inf") for i in range(len(ns) - 1)]
    return ConvergenceResult("spatial", list(ns), errors, ratios)


def cross_validation_refinement(
    schedule=((16, 0.1), (32, 0.05), (64, 0.025)), t_end: float = 0.5, preset: str = "analytic"
) -> list[float]:
    """Final Eulerian/Lagrangian discrepancy along a joint (N, dt) refinement."""
    out = []
    for n, dt in schedule:
        s0 = make_state(preset, Grid(1, n))
        rep = cross_validate(s0, SolverConfig(dt=dt, t_end=t_end, stride=10**9))
        out.append(rep.final if rep.ok else float("inf"))
    return out


# -- continuous dependence ---------------------------------------------------------------


@dataclass(frozen=True)
class DependenceResult:
    deltas: tuple
    amplification: tuple

    @property
    def spread(self) -> float:
        return max(self.amplification) / min(self.amplification)


def continuous_dependence(
    deltas=(1e-2, 1e-3, 1e-4), preset: str = "analytic", n: int = 128, dt: float = 1e-3, t_end: float = 0.5
) -> DependenceResult:
    """Max-norm separation at t_end over the initial separation, for perturbations delta (cos 2x, sin 3x)."""
    g = Grid(1, n)
    s0 = make_state(preset, g)
    base = _final(s0, dt, t_end)
    amp = []
    for d in deltas:
        pert = State(g, s0.n + d * np.cos(2 * g.x), s0.v + d * np.sin(3 * g.x))
        amp.append(_max_diff(_final(pert, dt, t_end), base) / _max_diff(pert, s0))
    return DependenceResult(tuple(deltas), tuple(amp))


# -- check suites ------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    note: str = ""


def _prop(name, residual, tolerance, note="", passed=None) -> PropertyResult:
    ok = bool(residual <= tolerance) if passed is None else bool(passed)
    return PropertyResult(name, float(residual), float(tolerance), ok, note)


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def spectral_suite(seed: int = 0, n: int = 64) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    out = []
    for m in (1, 2):
        g = Grid(m, n)
        kb = max(1, g.n // 6)
        f = random_field(g, rng, kb, decay=0.2, mean=0.3)
        h = random_field(g, rng, kb, decay=0.2)
        tag = f"m{m}"
        out.append(_prop(f"{tag}.roundtrip", _rel(g.ifft(g.fft(f)), f), 1e-13))
        quad = float(np.sum(f * f) * g.cell_volume)
        out.append(_prop(f"{tag}.parseval", abs(g.sobolev_norm(f, 0) ** 2 - quad) / quad, 1e-12))
        out.append(_prop(f"{tag}.bessel_inverse", _rel(g.bessel(g.bessel(f, -2), 2), f), 1e-12))
        lhs = g.sobolev_norm(g.inv_helmholtz(f), 3.0)
        out.append(_prop(f"{tag}.bessel_smoothing", abs(lhs - g.sobolev_norm(f, 1.0)) / lhs, 1e-12))
        out.append(_prop(f"{tag}.div_grad", _rel(g.div(g.grad(f)), g.laplacian(f)), 1e-12))
        for a in range(m):
            skew = abs(g.inner(g.deriv(f, a), h) + g.inner(f, g.deriv(h, a)))
            scale = math.sqrt(g.inner(f, f) * g.inner(h, h)) * g.n
            out.append(_prop(f"{tag}.deriv_skew_axis{a}", skew / scale, 1e-12))
        fb = random_field(g, rng, g.n // 6)
        hb = random_field(g, rng, g.n // 6)
        out.append(_prop(f"{tag}.dealiased_product_exact", _rel(g.product(fb, hb), fb * hb), 1e-12))
    return out


def _hamiltonian_state(g: Grid, rng, positive: bool = False) -> State:
    kb = g.n // 6
    n = random_field(g, rng, kb, amplitude=0.2, decay=0.3, mean=1.0 if positive else 0.0)
    v = random_field(g, rng, kb, amplitude=0.3, decay=0.3)
    return State(g, n, v)


def _covector(g: Grid, rng, kmax: int) -> Covector:
    return Covector(random_field(g, rng, kmax, decay=0.3), random_field(g, rng, kmax, decay=0.3))


def jacobi_refinement(seed: int = 1, ns=(64, 128, 256), kind: str = "D2", lam: float = 1.0, triples: int = 4,
                      kmax: int = 6) -> list[float]:
    """jacobi_residual on the same trigonometric state and covectors sampled at each N."""
    out = []
    for n in ns:
        g = Grid(1, n)
        rng = np.random.default_rng(seed)
        s = State(g, random_field(g, rng, kmax, 0.2, 0.3, 1.0), random_field(g, rng, kmax, 0.3, 0.3))
        trip = [tuple(_covector(g, rng, kmax) for _ in range(3)) for _ in range(triples)]
        out.append(hamiltonian.jacobi_residual(s, trip, kind=kind, lam=lam))
    return out


def strictly_decreasing(values, margin: float = 1e-10) -> bool:
    """Each value below its predecessor by more than a round-off margin."""
    return all(b < a - margin * max(1.0, abs(a)) for a, b in zip(values, values[1:]))


def hamiltonian_suite(seed: int = 1, n: int = 128) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    g = Grid(1, n)
    out = []
    worst = 0.0
    for _ in range(20):
        s = _hamiltonian_state(g, rng)
        rep = hamiltonian.rhs_consistency(s)
        worst = max(worst, rep.worst / rep.scale)
    out.append(_prop("rhs_consistency", worst, 1e-10))

    skew = {"D1": 0.0, "D2": 0.0}
    for _ in range(50):
        s = _hamiltonian_state(g, rng)
        phi, theta = _covector(g, rng, n // 6), _covector(g, rng, n // 6)
        skew["D1"] = max(skew["D1"], hamiltonian.skew_residual(g, lambda c: hamiltonian.apply_D1(g, c), phi, theta))
        skew["D2"] = max(skew["D2"], hamiltonian.skew_residual(g, lambda c, s=s: hamiltonian.apply_D2(s, c), phi, theta))
    for k, v in skew.items():
        out.append(_prop(f"skew_adjoint_{k}", v, 1e-12))

    gsmall = Grid(1, 32)
    grad_worst = 0.0
    for _ in range(10):
        s = _hamiltonian_state(gsmall, rng)
        for tag in hamiltonian.FUNCTIONALS:
            a = hamiltonian.var_deriv(tag, s).as_array()
            b = hamiltonian.fd_var_deriv(tag, s).as_array()
            grad_worst = max(grad_worst, float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300)))
    out.append(_prop("gradient_check", grad_worst, 1e-6))

    s_lp = make_state("analytic", Grid(1, 256))
    tests = [(random_field(s_lp.grid, rng, 20, decay=0.2), random_field(s_lp.grid, rng, 20, decay=0.2)) for _ in range(16)]
    out.append(_prop("weak_lie_poisson", hamiltonian.weak_lie_poisson_residual(s_lp, tests), 1e-8))

    j1 = jacobi_refinement(seed, kind="D1")
    out.append(_prop("jacobi_D1_zero", max(j1), 1e-12))
    for kind in ("D2", "pencil"):
        res = jacobi_refinement(seed, kind=kind)
        # tolerance: each residual must fall below the one at the previous N
        out.append(_prop(f"jacobi_{kind}_refinement_decreasing", res[-1], res[-2],
                         note="residuals " + " ".join(f"{r:.6g}" for r in res), passed=strictly_decreasing(res)))
    return out


def gevrey_suite(seed: int = 0, n: int = 128) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    g = Grid(1, n)
    out = []
    pairs = [(s, s * f) for s, f in zip(rng.uniform(0.05, 0.95, 50), rng.uniform(0.05, 0.95, 50))]
    bad = sum(1 for s, sp in pairs for k in range(201) if not gevrey.alg_inequality_check(k, s, sp))
    out.append(_prop("alg_inequality_sweep", bad, 0))

    hom = tri = mono = p3 = 0.0
    for _ in range(50):
        u = random_field(g, rng, 20, decay=0.3)
        w = random_field(g, rng, 20, decay=0.3)
        p = gevrey.ScaleParams(float(rng.uniform(0.1, 0.9)))
        nu = gevrey.es_norm(g, u, p).value
        c = float(rng.uniform(-3, 3))
        hom = max(hom, abs(gevrey.es_norm(g, c * u, p).value - abs(c) * nu) / (abs(c) * nu))
        tri = max(tri, (gevrey.es_norm(g, u + w, p).value - nu - gevrey.es_norm(g, w, p).value) / nu)
        lower = p.at(p.s * float(rng.uniform(0.1, 0.99)))
        mono = max(mono, (gevrey.es_norm(g, u, lower).value - nu) / nu)
        p3 = max(p3, gevrey.operator_bound_check(g, "P3", u, p.s).ratio)
    out.append(_prop("es_norm_homogeneity", hom, 1e-12))
    out.append(_prop("es_norm_triangle", tri, 1e-12))
    out.append(_prop("es_norm_s_monotone", mono, 1e-12))
    out.append(_prop("P3_ratio_at_most_one", p3, 1.0 + 1e-12))

    gr = Grid(1, 512)
    err = max(abs(gevrey.analyticity_radius(gr, gevrey.synthetic_decay_field(gr, s0)).sigma_fit - s0) for s0 in (0.2, 0.5, 1.0))
    out.append(_prop("radius_recovery", err, 1e-3))

    ratios = []
    for sv in (0.3, 0.5, 0.7):
        for _ in range(10):
            u = random_field(g, rng, 10, decay=0.3)
            w = random_field(g, rng, 10, decay=0.3)
            ratios.append(gevrey.product_lemma_check(g, u, w, gevrey.ScaleParams(sv)))
    cmax = max(ratios)
    out.append(_prop("product_lemma_constant_finite", cmax, float("inf"), note=f"empirical c = {cmax:.6g}",
                     passed=math.isfinite(cmax)))
    return out


SUITES = {"spectral": spectral_suite, "hamiltonian": hamiltonian_suite, "gevrey": gevrey_suite}


def run_suite(name: str, seed: int, n: int) -> list[PropertyResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    return SUITES[name](seed=seed, n=n)


# -- lagrangian self-consistency (used by tests and the compare report) --------------------


def composition_roundtrip(grid: Grid, f: np.ndarray, p: np.ndarray) -> float:
    """max |compose(compose(f, gamma), gamma^{-1}) - f|."""
    q = invert_flow(grid, p)
    return float(np.max(np.abs(compose(grid, compose(grid, f, p), q) - f)))
