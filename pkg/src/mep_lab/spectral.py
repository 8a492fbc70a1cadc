"""Periodic fields on [0, 2*pi)^m and the Fourier machinery around them.

Convention: u(x) = sum_k u_k exp(i k.x), so ``coefficients = fftn(u) / N**m``.
Norms and integrals carry the (2*pi)^m measure so they agree with the
corresponding integrals over the torus.

The :class:`Grid` methods work on plain ndarrays and are what the solvers
use internally. :class:`RealField`, :class:`SpectralField` and the free
functions below are the validated public surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

TWO_PI = 2.0 * np.pi


class NonFiniteError(ValueError):
    """Raised when a field contains NaN or inf samples."""

    def __init__(self, index: tuple[int, ...]):
        self.index = index
        super().__init__(f"non-finite sample at index {index}")


def check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise NonFiniteError(tuple(int(i) for i in bad))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis in ``dimension`` axes."""

    dimension: int
    n: int
    _k: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n)
        # fftfreq puts the Nyquist index at -N/2; the contract uses -N/2 < k <= N/2
        k1[self.n // 2] = self.n // 2
        ks = []
        for axis in range(self.dimension):
            shape = [1] * self.dimension
            shape[axis] = self.n
            ks.append(_frozen(k1.reshape(shape).copy()))
        object.__setattr__(self, "_k", tuple(ks))

    # -- geometry ---------------------------------------------------------
    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dimension), indexing="ij"))

    @property
    def x(self) -> np.ndarray:
        """1-D node coordinates (first axis)."""
        return np.arange(self.n) * self.spacing

    def wavenumbers(self, axis: int = 0) -> np.ndarray:
        return self._k[axis]

    @property
    def ksq(self) -> np.ndarray:
        return sum(k**2 for k in self._k)

    @property
    def kmax_dealias(self) -> int:
        return self.n // 3

    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.shape, dtype=bool)
        for k in self._k:
            keep = keep & (np.abs(k) <= self.kmax_dealias)
        return keep

    # -- transforms -------------------------------------------------------
    def _axes(self, a: np.ndarray) -> tuple[int, ...]:
        return tuple(range(a.ndim - self.dimension, a.ndim))

    def fft(self, u: np.ndarray) -> np.ndarray:
        return np.fft.fftn(u, axes=self._axes(u)) / self.n**self.dimension

    def ifft(self, uh: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifftn(uh, axes=self._axes(uh))) * self.n**self.dimension

    # -- multipliers on arrays ---------------------------------------------
    def deriv_symbol(self, axis: int) -> np.ndarray:
        k = self._k[axis].astype(complex)
        sym = 1j * k
        # derivatives zero the Nyquist mode
        return np.where(np.abs(self._k[axis]) == self.n // 2, 0.0, sym)

    def bessel_symbol(self, power: float) -> np.ndarray:
        return (1.0 + self.ksq) ** (power / 2.0)

    def deriv(self, u: np.ndarray, axis: int = 0, order: int = 1) -> np.ndarray:
        return self.ifft(self.deriv_symbol(axis) ** order * self.fft(u))

    def bessel(self, u: np.ndarray, power: float) -> np.ndarray:
        return self.ifft(self.bessel_symbol(power) * self.fft(u))

    def inv_helmholtz(self, u: np.ndarray) -> np.ndarray:
        """Lambda^{-2} u = (I - Laplacian)^{-1} u."""
        return self.bessel(u, -2.0)

    def grad(self, u: np.ndarray) -> np.ndarray:
        uh = self.fft(u)
        return np.stack([self.ifft(self.deriv_symbol(a) * uh) for a in range(self.dimension)])

    def div(self, v: np.ndarray) -> np.ndarray:
        if v.shape[0] != self.dimension:
            raise ValueError(f"expected {self.dimension} vector components, got {v.shape[0]}")
        total = sum(self.deriv_symbol(a) * self.fft(v[a]) for a in range(self.dimension))
        return self.ifft(total)

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        sym = sum(self.deriv_symbol(a) ** 2 for a in range(self.dimension))
        return self.ifft(sym * self.fft(u))

    def truncate(self, u: np.ndarray) -> np.ndarray:
        return self.ifft(np.where(self.dealias_mask(), self.fft(u), 0.0))

    def product(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """2/3-rule dealiased product: inputs and output truncated to |k_axis| <= N//3."""
        mask = self.dealias_mask()
        ft = self.ifft(np.where(mask, self.fft(f), 0.0))
        gt = self.ifft(np.where(mask, self.fft(g), 0.0))
        return self.ifft(np.where(mask, self.fft(ft * gt), 0.0))

    # -- quadrature and norms --------------------------------------------
    def integrate(self, u: np.ndarray) -> float:
        """Trapezoidal rule, exact for trigonometric polynomials of degree < N."""
        total = np.sum(u, axis=self._axes(u)) * self.cell_volume
        return float(total) if np.ndim(total) == 0 else total

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(f * g) * self.cell_volume)

    def sobolev_norm(self, u: np.ndarray, sigma: float) -> float:
        """H^sigma norm; a leading component axis is summed in quadrature."""
        uh = self.fft(u)
        weight = (1.0 + self.ksq) ** sigma
        total = np.sum(weight * np.abs(uh) ** 2)
        return float(np.sqrt(TWO_PI**self.dimension * total))


# -- validated field types -----------------------------------------------------


@dataclass(frozen=True)
class RealField:
    """Sampled field. ``samples`` has shape grid.shape (scalar) or (m,)+grid.shape (vector)."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        a = np.array(self.samples, dtype=float)
        if a.shape == self.grid.shape:
            pass
        elif a.shape == (self.grid.dimension,) + self.grid.shape:
            pass
        else:
            raise ValueError(f"samples shape {a.shape} does not match grid {self.grid}")
        check_finite(a)
        object.__setattr__(self, "samples", _frozen(a))

    @property
    def components(self) -> int:
        return 1 if self.samples.shape == self.grid.shape else self.grid.dimension

    @property
    def is_vector(self) -> bool:
        return self.samples.ndim > self.grid.dimension


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients in numpy FFT ordering, one array per component."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.shape[-self.grid.dimension:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid}")
        object.__setattr__(self, "coefficients", _frozen(c))

    def coefficient(self, *k: int) -> complex:
        idx = tuple(int(ki) % self.grid.n for ki in k)
        return complex(self.coefficients[(...,) + idx])


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier: ``derivative`` (i k_axis), ``laplacian`` (-|k|^2),
    or ``bessel_power`` ((1+|k|^2)^(p/2))."""

    kind: Literal["derivative", "laplacian", "bessel_power"]
    axis: int = 0
    power: float = 0.0

    @classmethod
    def derivative(cls, axis: int = 0) -> "MultiplierSymbol":
        return cls("derivative", axis=axis)

    @classmethod
    def laplacian(cls) -> "MultiplierSymbol":
        return cls("laplacian")

    @classmethod
    def bessel_power(cls, p: float) -> "MultiplierSymbol":
        return cls("bessel_power", power=float(p))

    def values(self, grid: Grid) -> np.ndarray:
        if self.kind == "derivative":
            if not 0 <= self.axis < grid.dimension:
                raise ValueError(f"axis {self.axis} out of range for dimension {grid.dimension}")
            return grid.deriv_symbol(self.axis)
        if self.kind == "laplacian":
            return sum(grid.deriv_symbol(a) ** 2 for a in range(grid.dimension))
        if self.kind == "bessel_power":
            if not np.isfinite(self.power):
                raise ValueError("bessel power must be finite")
            return grid.bessel_symbol(self.power)
        raise ValueError(f"unknown multiplier kind {self.kind!r}")


def to_spectral(f: RealField) -> SpectralField:
    check_finite(f.samples)
    return SpectralField(f.grid, f.grid.fft(f.samples))


def to_grid(F: SpectralField) -> RealField:
    return RealField(F.grid, F.grid.ifft(F.coefficients))


def apply_multiplier(F: SpectralField, symbol: MultiplierSymbol) -> SpectralField:
    return SpectralField(F.grid, symbol.values(F.grid) * F.coefficients)


def gradient(f: RealField) -> RealField:
    if f.is_vector:
        raise ValueError("gradient expects a scalar field")
    return RealField(f.grid, f.grid.grad(f.samples))


def divergence(v: RealField) -> RealField:
    if not v.is_vector:
        raise ValueError("divergence expects a vector field")
    return RealField(v.grid, v.grid.div(v.samples))


def laplacian(f: RealField) -> RealField:
    return RealField(f.grid, f.grid.laplacian(f.samples))


def dealiased_product(f: RealField, g: RealField) -> RealField:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return RealField(f.grid, f.grid.product(f.samples, g.samples))


def sobolev_norm(f: RealField, sigma: float) -> float:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return f.grid.sobolev_norm(f.samples, sigma)
