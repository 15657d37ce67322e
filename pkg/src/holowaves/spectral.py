"""Periodic grid, discrete Fourier transforms and Fourier multipliers.

Fields live on the uniform grid ``alpha_j = 2*pi*j/n`` of ``[0, 2*pi)``.
Coefficients use the normalization ``c_k = (1/n) sum_j f(alpha_j) exp(-i k alpha_j)``
and are stored in numpy FFT order; ``grid.k`` holds the matching integer modes.

Holomorphic fields are those with Fourier support in ``k <= 0``.  The
projection ``P = (I - iH)/2`` uses ``sgn(0) = 0``, so ``P(1) = 1/2``.  This
half-mean convention is what keeps the mean of ``W`` purely imaginary and the
mean of ``Q`` real under the water wave flow.

Most operations come in two flavours: grid methods acting on point-value
arrays (used in the inner loops), and module-level functions acting on
:class:`SpectralField` values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "ConfigurationError",
    "HolomorphyError",
    "MeanModeError",
    "PeriodicGrid",
    "SpectralField",
    "HoloField",
    "MultiplierSymbol",
    "make_grid",
    "transform",
    "inverse_transform",
    "dalpha_symbol",
    "absd_symbol",
    "bracket_symbol",
    "apply_multiplier",
    "hilbert",
    "project_P",
    "project_Pbar",
    "holo_residual",
    "invert_dalpha",
    "dealias",
    "TAU_HOLO",
]

TAU_HOLO = 1e-10


class ConfigurationError(ValueError):
    """Invalid grid or solver configuration."""


class HolomorphyError(ValueError):
    """A field expected to be holomorphic carries positive modes."""


class MeanModeError(ValueError):
    """An operator singular at ``k = 0`` was applied to a field with a mean."""


class PeriodicGrid:
    """Uniform grid on the circle with ``n`` nodes (``n`` a power of two, ``n >= 8``)."""

    def __init__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 8, got {n!r}")
        self.n = int(n)
        self.length = 2 * np.pi
        self.k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        self.k[self.n // 2] = -(self.n // 2)
        self.absk = np.abs(self.k)
        nyq = self.k == -(self.n // 2)
        # The Nyquist mode is its own conjugate partner; it is treated like
        # k = 0 so that conjugation symmetry (real b, a, M) is exact.
        self.ik = np.where(nyq, 0.0, 1j * self.k)
        # P multiplier: 1 on k < 0, 1/2 on k = 0, 0 on k > 0.
        self.p_symbol = np.where(self.k < 0, 1.0, np.where(self.k == 0, 0.5, 0.0))
        self.p_symbol[nyq] = 0.5
        self.pbar_symbol = 1.0 - self.p_symbol
        self.sgn = np.where(nyq, 0.0, np.sign(self.k)).astype(float)
        self.dealias_mask = (3 * self.absk <= self.n).astype(float)
        inv = np.zeros(self.n, dtype=complex)
        nz = self.ik != 0
        inv[nz] = 1.0 / self.ik[nz]
        self.inv_ik = inv

    def __repr__(self) -> str:
        return f"PeriodicGrid(n={self.n})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PeriodicGrid) and other.n == self.n

    def __hash__(self) -> int:
        return hash(("PeriodicGrid", self.n))

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer modes in natural order ``-n/2, ..., n/2 - 1``."""
        return np.arange(-self.n // 2, self.n // 2)

    @cached_property
    def nodes(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n

    @property
    def dalpha(self) -> float:
        return 2 * np.pi / self.n

    # -- transforms on arrays -------------------------------------------------

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fft(values, axis=-1) / self.n

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifft(coeffs, axis=-1) * self.n

    def multiply(self, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        return np.fft.ifft(np.fft.fft(values, axis=-1) * symbol, axis=-1)

    # -- point-value operators --------------------------------------------------

    def d(self, v: np.ndarray) -> np.ndarray:
        """``d/dalpha`` of point values."""
        return self.multiply(v, self.ik)

    def P(self, v: np.ndarray) -> np.ndarray:
        return self.multiply(v, self.p_symbol)

    def Pbar(self, v: np.ndarray) -> np.ndarray:
        return self.multiply(v, self.pbar_symbol)

    def H(self, v: np.ndarray) -> np.ndarray:
        return self.multiply(v, -1j * self.sgn)

    def holo(self, v: np.ndarray) -> np.ndarray:
        """Drop the positive modes, keeping the mean intact."""
        return self.multiply(v, (self.k <= 0).astype(float))

    def absd(self, v: np.ndarray, s: float) -> np.ndarray:
        return self.multiply(v, absd_weights(self, s))

    def dealias(self, v: np.ndarray) -> np.ndarray:
        return self.multiply(v, self.dealias_mask)

    def inv_d(self, v: np.ndarray) -> np.ndarray:
        """Zero-mean antiderivative; the mean of ``v`` is ignored."""
        return self.multiply(v, self.inv_ik)

    def mean(self, v: np.ndarray) -> complex:
        return np.mean(v, axis=-1)

    def integrate(self, v: np.ndarray) -> complex:
        """Trapezoid quadrature over one period (spectrally exact)."""
        return 2 * np.pi * np.mean(v, axis=-1)


def make_grid(n: int) -> PeriodicGrid:
    """Build a :class:`PeriodicGrid`, rejecting bad sizes with :class:`ConfigurationError`."""
    return PeriodicGrid(n)


def absd_weights(grid: PeriodicGrid, s: float) -> np.ndarray:
    w = np.zeros(grid.n)
    nz = grid.k != 0
    w[nz] = grid.absk[nz].astype(float) ** s
    return w


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A field on a periodic grid, held by its Fourier coefficients (FFT order)."""

    grid: PeriodicGrid
    coeffs: np.ndarray
    dealiased: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.dealiased and np.any(c[self.grid.dealias_mask == 0] != 0):
            raise ValueError("dealiased field carries modes with |k| > n/3")

    @classmethod
    def from_values(cls, grid: PeriodicGrid, values) -> "SpectralField":
        return cls(grid, transform(grid, values))

    @cached_property
    def values(self) -> np.ndarray:
        v = inverse_transform(self.grid, self.coeffs)
        v.setflags(write=False)
        return v

    def coeff(self, mode: int) -> complex:
        """Coefficient of a single integer mode."""
        return complex(self.coeffs[mode % self.grid.n])

    def mean(self) -> complex:
        return complex(self.coeffs[0])

    def _wrap(self, coeffs) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def __add__(self, other):
        return self._wrap(self.coeffs + _coeffs_of(other, self.grid))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.coeffs - _coeffs_of(other, self.grid))

    def __rsub__(self, other):
        return self._wrap(_coeffs_of(other, self.grid) - self.coeffs)

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, SpectralField):
            _check_grid(self, other)
            return SpectralField.from_values(self.grid, self.values * other.values)
        return self._wrap(self.coeffs * other)

    __rmul__ = __mul__

    def conj(self) -> "SpectralField":
        return SpectralField.from_values(self.grid, np.conj(self.values))


def _check_grid(f: SpectralField, g: SpectralField) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def _coeffs_of(other, grid: PeriodicGrid) -> np.ndarray:
    if isinstance(other, SpectralField):
        if other.grid != grid:
            raise ValueError(f"grid mismatch: {grid} vs {other.grid}")
        return other.coeffs
    c = np.zeros(grid.n, dtype=complex)
    c[0] = other
    return c


class HoloField(SpectralField):
    """A :class:`SpectralField` whose positive modes are negligible.

    The relative ell^2 mass on ``k > 0`` must stay below ``tol`` (the zero field
    is exempt).
    """

    def __init__(self, grid: PeriodicGrid, coeffs, tol: float = TAU_HOLO):
        super().__init__(grid, coeffs)
        object.__setattr__(self, "tol", tol)
        res = _holo_residual_coeffs(grid, self.coeffs)
        if res > tol:
            raise HolomorphyError(f"positive-mode mass {res:.3e} exceeds tolerance {tol:.1e}")

    @classmethod
    def from_values(cls, grid, values, tol: float = TAU_HOLO) -> "HoloField":
        return cls(grid, transform(grid, values), tol=tol)

    @classmethod
    def of(cls, f: SpectralField, tol: float = TAU_HOLO) -> "HoloField":
        return cls(f.grid, f.coeffs, tol=tol)


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier ``c_k -> symbol[k] * c_k`` (symbol in FFT order).

    ``singular_at_zero`` marks symbols such as ``|D|^s`` with ``s < 0`` whose
    zero-mode value is a placeholder; applying them to a field with a nonzero
    mean is an error.
    """

    grid: PeriodicGrid
    symbol: np.ndarray
    name: str = "multiplier"
    singular_at_zero: bool = False

    def __post_init__(self):
        s = np.asarray(self.symbol, dtype=complex)
        if s.shape != (self.grid.n,):
            raise ValueError("symbol must be defined on every grid mode")
        object.__setattr__(self, "symbol", s)


def dalpha_symbol(grid: PeriodicGrid) -> MultiplierSymbol:
    return MultiplierSymbol(grid, grid.ik, "d_alpha")


def absd_symbol(grid: PeriodicGrid, s: float) -> MultiplierSymbol:
    """``|D|^s`` with the zero mode mapped to 0."""
    return MultiplierSymbol(grid, absd_weights(grid, s), f"|D|^{s:g}", singular_at_zero=s < 0)


def bracket_symbol(grid: PeriodicGrid, s: float) -> MultiplierSymbol:
    """``<D>^s = (1 + k^2)^(s/2)``."""
    return MultiplierSymbol(grid, (1.0 + grid.k.astype(float) ** 2) ** (s / 2), f"<D>^{s:g}")


def transform(grid: PeriodicGrid, values) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    if v.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} point values, got shape {v.shape}")
    return grid.fft(v)


def inverse_transform(grid: PeriodicGrid, coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} coefficients, got shape {c.shape}")
    return grid.ifft(c)


def _mean_is_zero(f: SpectralField, rtol: float = 1e-12) -> bool:
    norm = np.linalg.norm(f.coeffs)
    return norm == 0 or abs(f.coeffs[0]) <= rtol * norm


def apply_multiplier(f: SpectralField, m: MultiplierSymbol) -> SpectralField:
    if f.grid != m.grid:
        raise ValueError("field and multiplier live on different grids")
    if m.singular_at_zero and not _mean_is_zero(f):
        raise MeanModeError(f"{m.name} is singular at k = 0 but the field has mean {f.mean():.3e}")
    return SpectralField(f.grid, f.coeffs * m.symbol)


def hilbert(f: SpectralField) -> SpectralField:
    """Hilbert transform, symbol ``-i sgn(k)`` with ``sgn(0) = 0``."""
    return SpectralField(f.grid, -1j * f.grid.sgn * f.coeffs)


def project_P(f: SpectralField) -> HoloField:
    return HoloField(f.grid, f.coeffs * f.grid.p_symbol)


def project_Pbar(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.pbar_symbol)


def _holo_residual_coeffs(grid: PeriodicGrid, c: np.ndarray) -> float:
    total = np.linalg.norm(c)
    if total == 0:
        return 0.0
    return float(np.linalg.norm(c[grid.k > 0]) / total)


def holo_residual(f) -> float:
    """Relative ell^2 mass of the positive modes (0 for the zero field)."""
    return _holo_residual_coeffs(f.grid, f.coeffs)


def invert_dalpha(f: SpectralField) -> SpectralField:
    """Zero-mean solution ``u`` of ``d_alpha u = f``."""
    if not _mean_is_zero(f):
        raise MeanModeError(f"cannot invert d_alpha on a field with mean {f.mean():.3e}")
    return SpectralField(f.grid, f.coeffs * f.grid.inv_ik)


def dealias(f: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with ``|k| > n/3``."""
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask, dealiased=True)
