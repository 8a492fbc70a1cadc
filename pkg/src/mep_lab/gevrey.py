"""Analytic-class norms and analyticity-radius estimates.

The scale of norms is

    |||u|||_s = sup_j ||d^j u||_{H^sigma} s^j (j+1)^2 / j!

over zero-mean u, truncated at j <= j_max and evaluated in log space.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lgamma, log
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .spectral import TWO_PI, Grid


@dataclass(frozen=True)
class ScaleParams:
    s: float = 0.5
    sigma: int = 2
    j_max: int = 24

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if int(self.sigma) != self.sigma or self.sigma < 2:
            raise ValueError(f"sigma must be an integer >= 2, got {self.sigma}")
        if self.j_max < 1:
            raise ValueError("j_max must be >= 1")

    def at(self, s: float) -> "ScaleParams":
        return ScaleParams(s, self.sigma, self.j_max)


@dataclass(frozen=True)
class EsNorm:
    value: float
    argmax_j: int
    j_max: int
    mean_removed: float

    @property
    def attained_below_cap(self) -> bool:
        return self.argmax_j < self.j_max


# Coefficients below this fraction of the largest one are transform round-off;
# high derivative orders would otherwise amplify them by k^j near Nyquist.
NOISE_FLOOR = 1e-14


def _log_deriv_norms(grid: Grid, uh: np.ndarray, sigma: int, j_max: int) -> np.ndarray:
    """ln ||d^j u||_{H^sigma} for j = 0..j_max (-inf where the norm vanishes)."""
    ksq = grid.ksq
    kabs = np.sqrt(ksq)
    nyq = np.zeros(grid.shape, dtype=bool)
    for a in range(grid.dimension):
        nyq |= np.abs(grid.wavenumbers(a)) == grid.n // 2
    amp = np.abs(uh)
    amp = np.where(amp > NOISE_FLOOR * amp.max(initial=0.0), amp, 0.0)
    base = np.where(amp > 0, 2.0 * np.log(np.where(amp > 0, amp, 1.0)), -np.inf) + sigma * np.log1p(ksq)
    out = np.empty(j_max + 1)
    with np.errstate(divide="ignore"):
        logk = np.log(kabs)
    for j in range(j_max + 1):
        if j == 0:
            terms = base
        else:
            # derivatives zero the Nyquist mode, as in the spectral multipliers
            terms = np.where((kabs > 0) & ~nyq, base + 2.0 * j * logk, -np.inf)
        out[j] = 0.5 * (log(TWO_PI**grid.dimension) + logsumexp(terms.ravel()))
    return out


def es_log_norm(grid: Grid, u: np.ndarray, p: ScaleParams) -> tuple[float, int, float]:
    if grid.dimension != 1:
        raise ValueError("the analytic-class norm is implemented for m = 1")
    mean = float(np.mean(u))
    uh = grid.fft(u - mean)
    logs = _log_deriv_norms(grid, uh, p.sigma, p.j_max)
    j = np.arange(p.j_max + 1)
    weights = j * log(p.s) + 2.0 * np.log(j + 1.0) - np.array([lgamma(i + 1.0) for i in j])
    total = logs + weights
    best = int(np.argmax(total))
    return float(total[best]), best, mean


def es_norm(grid: Grid, u: np.ndarray, p: ScaleParams) -> EsNorm:
    """|||u - mean(u)|||_s with the subtracted mean and argmax j reported."""
    lv, best, mean = es_log_norm(grid, u, p)
    return EsNorm(float(np.exp(lv)) if np.isfinite(lv) else 0.0, best, p.j_max, mean)


def product_lemma_check(grid: Grid, u: np.ndarray, v: np.ndarray, p: ScaleParams) -> float:
    """|||uv|||_s / (|||u|||_s |||v|||_s) with inputs and product re-centered."""
    u0 = u - np.mean(u)
    v0 = v - np.mean(v)
    nu = es_norm(grid, u0, p).value
    nv = es_norm(grid, v0, p).value
    if nu == 0 or nv == 0:
        raise ValueError("product check needs non-zero inputs")
    return es_norm(grid, u0 * v0, p).value / (nu * nv)


@dataclass(frozen=True)
class OperatorBound:
    op: str
    lhs: float
    rhs_structure: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_structure


def operator_bound_check(
    grid: Grid,
    op: Literal["P1", "P2", "P3", "P4"],
    u: np.ndarray,
    s: float,
    s_prime: float | None = None,
    v: np.ndarray | None = None,
    sigma: int = 2,
    j_max: int = 24,
) -> OperatorBound:
    """Left side over the right-side structure of the operator bounds.

    P1 = -grad, P2 = -div:  |||P u|||_{s'} vs |||u|||_s / (s - s')
    P3 = Lambda^{-2}:       |||P3 u|||_s  vs |||u|||_s
    P4(u)v = -(Du) v:       |||P4(u) v|||_{s'} vs |||v|||_{s'} |||u|||_s / (s - s')
    For P3 the ratio itself is the bound (no constant).
    """
    p = ScaleParams(s, sigma, j_max)
    u = u - np.mean(u)
    norm = lambda f, sc: es_norm(grid, f - np.mean(f), p.at(sc)).value  # noqa: E731
    if op == "P3":
        den = norm(u, s)
        if den == 0:
            raise ValueError("degenerate input: zero norm")
        return OperatorBound(op, norm(grid.inv_helmholtz(u), s), den)
    if s_prime is None or not 0 < s_prime < s:
        raise ValueError("need 0 < s' < s for P1, P2, P4")
    gap = s - s_prime
    if op in ("P1", "P2"):
        den = norm(u, s) / gap
        if den == 0:
            raise ValueError("degenerate input: zero norm")
        return OperatorBound(op, norm(-grid.deriv(u), s_prime), den)
    if op == "P4":
        if v is None:
            raise ValueError("P4 needs a second field v")
        v = v - np.mean(v)
        den = norm(v, s_prime) * norm(u, s) / gap
        if den == 0:
            raise ValueError("degenerate input: zero norm")
        return OperatorBound(op, norm(-grid.deriv(u) * v, s_prime), den)
    raise ValueError(f"unknown operator {op!r}")


def alg_inequality_sides(k: int, s: float, s_prime: float) -> tuple[Fraction, Fraction]:
    """Exact rational (lhs, rhs) of s'^k/s^(k+1) ((k+1)/(k+2))^2 (k+1) <= 1/(s - s')."""
    if k < 0:
        raise ValueError("k must be non-negative")
    S, Sp = Fraction(s), Fraction(s_prime)
    if not 0 < Sp < S < 1:
        raise ValueError("need 0 < s' < s < 1")
    lhs = Sp**k / S ** (k + 1) * Fraction(k + 1, k + 2) ** 2 * (k + 1)
    return lhs, 1 / (S - Sp)


def alg_inequality_check(k: int, s: float, s_prime: float) -> bool:
    lhs, rhs = alg_inequality_sides(k, s, s_prime)
    return lhs <= rhs


# -- analyticity radius -------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticityEstimate:
    sigma_fit: float
    band: tuple[int, int]
    fit_quality: float
    modes_used: int
    inconclusive: bool = False


MIN_MODES = 8
FIT_START = 2


def mode_amplitudes(grid: Grid, u: np.ndarray) -> np.ndarray:
    """|u_k| for k = 0..N/2 (shell maxima over |k| in two dimensions)."""
    uh = np.abs(grid.fft(u))
    if uh.ndim > grid.dimension:
        uh = np.sqrt(np.sum(uh**2, axis=0))
    if grid.dimension == 1:
        return uh[: grid.n // 2 + 1]
    shells = np.rint(np.sqrt(grid.ksq)).astype(int)
    out = np.zeros(grid.n // 2 + 1)
    inside = shells <= grid.n // 2
    np.maximum.at(out, shells[inside], uh[inside])
    return out


def analyticity_radius(grid: Grid, u: np.ndarray, floor: float = 1e-13) -> AnalyticityEstimate:
    """Exponential decay rate of |u_k| from a least-squares fit of ln|u_k| against k.

    The band runs from k = 2 up to the last mode before the amplitudes first
    drop to the floor. With fewer than 8 usable modes the result is flagged
    inconclusive and sigma_fit is the lower bound ln(A / floor) / (K + 1), where
    A is the largest non-mean amplitude and K the last mode above the floor
    (infinite for a constant field).
    """
    amp = mode_amplitudes(grid, u)
    above = amp > floor
    end = FIT_START
    while end < amp.size and above[end]:
        end += 1
    ks = np.arange(FIT_START, end)
    if ks.size < MIN_MODES:
        fluct = amp[1:]
        big = float(fluct.max(initial=0.0))
        if big <= floor:
            return AnalyticityEstimate(float("inf"), (FIT_START, end), float("nan"), int(ks.size), True)
        last = int(np.nonzero(amp > floor)[0].max())
        bound = log(big / floor) / (last + 1)
        return AnalyticityEstimate(bound, (FIT_START, end), float("nan"), int(ks.size), True)
    y = np.log(amp[ks])
    slope, intercept = np.polyfit(ks, y, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return AnalyticityEstimate(max(0.0, -float(slope)), (FIT_START, end - 1), r2, int(ks.size))


@dataclass(frozen=True)
class RadiusSample:
    t: float
    n: AnalyticityEstimate
    v: AnalyticityEstimate


def radius_track(states, floor: float = 1e-13) -> list[RadiusSample]:
    out = []
    for s in states:
        out.append(RadiusSample(s.t, analyticity_radius(s.grid, s.n, floor), analyticity_radius(s.grid, s.v, floor)))
    return out


def synthetic_decay_field(grid: Grid, rate: float) -> np.ndarray:
    """Real field with u_k = exp(-rate |k|) for |k| < N/2 (zero Nyquist)."""
    if grid.dimension != 1:
        raise ValueError("synthetic field is one-dimensional")
    k = np.abs(grid.wavenumbers(0))
    coef = np.where(k < grid.n // 2, np.exp(-rate * k), 0.0)
    return grid.ifft(coef.astype(complex))
