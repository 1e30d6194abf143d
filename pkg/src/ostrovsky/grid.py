"""Periodic grid on [-L, L) with spectral differentiation, norms and dealiasing.

Transform convention: ``numpy.fft.rfft`` forward (unnormalized), ``irfft``
inverse (carries 1/N). Spectral arrays therefore hold ``N // 2 + 1``
coefficients for non-negative indices j, with wavenumber k_j = pi j / L.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``N`` points on ``[-L, L)``."""

    L: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and not isinstance(self.N, bool)):
            raise ValueError(f"N must be an integer, got {self.N!r}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return _readonly(-self.L + self.dx * np.arange(self.N))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Full wavenumber table in FFT order; the Nyquist entry is -k_max."""
        return _readonly(np.fft.fftfreq(self.N, d=self.dx) * 2.0 * np.pi)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers of the rfft layout, j = 0 .. N/2."""
        return _readonly(np.pi * np.arange(self.N // 2 + 1) / self.L)

    @cached_property
    def k_odd(self) -> np.ndarray:
        """``k`` with the Nyquist entry zeroed, used for odd-order derivatives."""
        k = self.k.copy()
        k[-1] = 0.0
        return _readonly(k)

    @property
    def k_max(self) -> float:
        return np.pi * (self.N // 2) / self.L

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return _readonly(dealias_mask(self.N))


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(L, N)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of one scalar function on a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.N,):
            raise ValueError(
                f"field has shape {values.shape}, grid expects ({self.grid.N},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> Field:
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field:
        return cls(grid, np.zeros(grid.N))

    def spectral(self) -> np.ndarray:
        return np.fft.rfft(self.values)

    def _coerce(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Field(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __len__(self):
        return self.grid.N


def from_spectral(coeffs: np.ndarray, grid: GridSpec) -> Field:
    return Field(grid, np.fft.irfft(coeffs, n=grid.N))


def spectral_derivative(coeffs: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    """Multiply rfft coefficients by (ik)^order; odd orders drop the Nyquist mode."""
    k = grid.k_odd if order % 2 else grid.k
    return coeffs * (1j * k) ** order


def derivative(field: Field, order: int = 1) -> Field:
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be 1..4, got {order}")
    coeffs = spectral_derivative(field.spectral(), field.grid, order)
    return from_spectral(coeffs, field.grid)


def _check_same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise GridMismatch(f"grid mismatch: {a.grid} vs {b.grid}")


def mean(field: Field) -> float:
    # (1/2L) * dx * sum == sum / N
    return float(np.sum(field.values) / field.grid.N)


def l2_norm(field: Field) -> float:
    return float(np.sqrt(field.grid.dx * np.dot(field.values, field.values)))


def linf_norm(field: Field) -> float:
    return float(np.max(np.abs(field.values)))


def inner_product(a: Field, b: Field) -> float:
    _check_same_grid(a, b)
    return float(a.grid.dx * np.dot(a.values, b.values))


def dealias_mask(N: int) -> np.ndarray:
    """Boolean rfft mask keeping modes with |k_j| <= (2/3) k_max."""
    j = np.arange(N // 2 + 1)
    return 3 * j <= N


def dealias(coeffs: np.ndarray, N: int | None = None) -> np.ndarray:
    """Two-thirds rule on rfft coefficients.

    ``N`` defaults to ``2 * (len(coeffs) - 1)``, i.e. an even grid.
    """
    coeffs = np.asarray(coeffs)
    if N is None:
        N = 2 * (coeffs.shape[-1] - 1)
    return np.where(dealias_mask(N), coeffs, 0)


def spectral_energy(coeffs: np.ndarray, grid: GridSpec) -> float:
    """dx * sum(values**2) computed from rfft coefficients (Parseval)."""
    w = np.full(coeffs.shape[-1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return float(grid.dx / grid.N * np.sum(w * np.abs(coeffs) ** 2))


def tail_fraction(coeffs: np.ndarray, grid: GridSpec) -> float:
    """Share of the L2 energy held by modes above two thirds of k_max."""
    w = np.full(coeffs.shape[-1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    e = w * np.abs(coeffs) ** 2
    total = e.sum()
    if total == 0.0:
        return 0.0
    return float(e[~grid.dealias_mask].sum() / total)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a
