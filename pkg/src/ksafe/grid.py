"""Fourier grids on the flat torus ``[0, 2*pi)^n`` and spectral fields.

Spectra are stored in FFT index order with the convention

    u(x) = sum_xi  u_hat(xi) * exp(i xi . x),

so the constant function 1 has ``u_hat(0) = 1``.  The retained wavenumbers per
axis are ``-N/2 + 1, ..., N/2``; the Nyquist index carries ``+N/2``.  All
pointwise products happen on a zero-padded grid of ``M = padding * N`` points
per axis, which is alias-free for products of two fields in the retained set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class TorusGrid:
    n: int
    N: int
    padding: float = 1.5

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"only n = 1 or 2 is supported, got {self.n}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.padding < 1.5:
            raise ValueError(f"padding must be >= 3/2, got {self.padding}")
        if float(self.N * self.padding) % 2:
            raise ValueError("padded size must be an even integer")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def M(self) -> int:
        return int(self.N * self.padding)

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return (self.M,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)
        k[self.N // 2] = self.N // 2
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavevectors, shape ``(n, N, ..., N)``."""
        return np.array(np.meshgrid(*([self.wavenumbers] * self.n), indexing="ij"))

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return np.sum(self.xi.astype(float) ** 2, axis=0)

    def sobolev_weight(self, s: float) -> np.ndarray:
        return (1.0 + self.xi_sq) ** s

    def derivative_symbol(self, index) -> np.ndarray:
        """Multiplier ``(i xi)^index`` of the derivative ``d^index``."""
        out = np.ones(self.shape, dtype=complex)
        for c, e in enumerate(index):
            if e:
                out = out * (1j * self.xi[c]) ** e
        return out

    @cached_property
    def _pad_index(self):
        idx = self.wavenumbers % self.M
        return np.ix_(*([idx] * self.n))

    @cached_property
    def _neg_index(self):
        """Index of ``-xi`` per axis, and a mask of modes whose negative is kept."""
        k = self.wavenumbers
        idx = (-k) % self.N
        has_partner = k != self.N // 2
        return idx, has_partner

    def points(self, padded: bool = False) -> np.ndarray:
        """Physical grid points, shape ``(n, m, ..., m)``."""
        m = self.M if padded else self.N
        x = 2 * np.pi * np.arange(m) / m
        return np.array(np.meshgrid(*([x] * self.n), indexing="ij"))

    def to_physical(self, spec: np.ndarray, padded: bool = True) -> np.ndarray:
        """Evaluate spectra on the (padded) grid; leading axes are batch axes."""
        lead = spec.shape[: spec.ndim - self.n]
        if not padded:
            return np.fft.ifftn(spec, axes=self._axes(spec)) * self.size
        big = np.zeros(lead + self.padded_shape, dtype=complex)
        big[(...,) + self._pad_index] = spec
        return np.fft.ifftn(big, axes=self._axes(big)) * self.M**self.n

    def from_physical(self, values: np.ndarray, padded: bool = True) -> np.ndarray:
        """Spectra of grid values, truncated to the retained wavenumbers."""
        if not padded:
            return np.fft.fftn(values, axes=self._axes(values)) / self.size
        full = np.fft.fftn(values, axes=self._axes(values)) / self.M**self.n
        return full[(...,) + self._pad_index]

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Dealiased truncated product of two spectra of matching shape."""
        return self.from_physical(self.to_physical(a) * self.to_physical(b))

    def conj_reflect(self, spec: np.ndarray) -> np.ndarray:
        """``conj(spec(-xi))``, with zero where ``-xi`` is not retained."""
        idx, has_partner = self._neg_index
        out = np.conj(spec[(...,) + np.ix_(*([idx] * self.n))])
        mask = np.ones(self.shape, dtype=bool)
        for c in range(self.n):
            shape = [1] * self.n
            shape[c] = self.N
            mask = mask & has_partner.reshape(shape)
        return np.where(mask, out, 0.0)

    def lowpass_mask(self, band: int) -> np.ndarray:
        """Modes with ``max_c |xi_c| <= band``."""
        return np.max(np.abs(self.xi), axis=0) <= band

    def _axes(self, arr: np.ndarray) -> tuple[int, ...]:
        return tuple(range(arr.ndim - self.n, arr.ndim))


class SpectralField:
    """A rank-q field on a :class:`TorusGrid`, stored as Fourier coefficients.

    ``data`` has shape ``(q, N, ..., N)``.  With ``real=True`` the spectrum must
    be Hermitian symmetric, which for the retained set also forces the Nyquist
    modes to vanish.
    """

    def __init__(self, grid: TorusGrid, data: np.ndarray, real: bool = False, check: bool = True):
        data = np.asarray(data, dtype=complex)
        if data.shape == grid.shape:
            data = data[None]
        if data.shape[1:] != grid.shape:
            raise ValueError(f"spectrum shape {data.shape} does not fit grid {grid.shape}")
        self.grid = grid
        self.data = data
        self.real = real
        if real and check and not self.is_hermitian():
            raise ValueError("field flagged real but its spectrum is not Hermitian")

    @property
    def q(self) -> int:
        return self.data.shape[0]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.data))))
        return bool(np.max(np.abs(self.data - self.grid.conj_reflect(self.data))) <= tol * scale)

    @classmethod
    def from_values(cls, grid: TorusGrid, values: np.ndarray, real: bool | None = None) -> "SpectralField":
        """Field from values on the unpadded grid (Nyquist content discarded)."""
        values = np.asarray(values)
        if values.shape == grid.shape:
            values = values[None]
        spec = grid.from_physical(values, padded=False)
        spec = _drop_nyquist(grid, spec)
        if real is None:
            real = not np.iscomplexobj(values)
        if real:
            spec = 0.5 * (spec + grid.conj_reflect(spec))
        return cls(grid, spec, real=real, check=False)

    def values(self, padded: bool = False) -> np.ndarray:
        out = self.grid.to_physical(self.data, padded=padded)
        return out.real if self.real else out

    def sobolev_norm(self, s: float) -> float:
        return sobolev_norm(self, s)

    def _combine(self, other, op):
        if isinstance(other, SpectralField):
            if other.grid != self.grid or other.q != self.q:
                raise ValueError("incompatible fields")
            return SpectralField(self.grid, op(self.data, other.data), self.real and other.real, check=False)
        return SpectralField(self.grid, op(self.data, other), self.real and np.isrealobj(other), check=False)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return self._combine(scalar, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.data, self.real, check=False)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, N={self.grid.N}, q={self.q}, real={self.real})"


def sobolev_norm(u: SpectralField, s: float) -> float:
    """``sqrt(sum_xi (1 + |xi|^2)^s |u_hat(xi)|^2)`` summed over components."""
    if s < 0:
        raise ValueError("negative Sobolev orders are not supported")
    w = u.grid.sobolev_weight(s)
    return float(np.sqrt(np.sum(w * np.abs(u.data) ** 2)))


def _drop_nyquist(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    spec = spec.copy()
    h = grid.N // 2
    for c in range(grid.n):
        sl = [slice(None)] * spec.ndim
        sl[spec.ndim - grid.n + c] = h
        spec[tuple(sl)] = 0.0
    return spec


def random_field(
    grid: TorusGrid,
    rng: np.random.Generator,
    q: int = 1,
    band: int | None = None,
    decay: float = 0.0,
    real: bool = True,
) -> SpectralField:
    """Random bandlimited field with spectrum scaled by ``(1+|xi|^2)^(-decay/2)``.

    ``band`` defaults to ``N // 4`` so that order-s operators stay resolved.
    """
    band = grid.N // 4 if band is None else band
    shape = (q,) + grid.shape
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    spec = spec * grid.lowpass_mask(band) * grid.sobolev_weight(-decay / 2)
    spec = _drop_nyquist(grid, spec)
    if real:
        spec = 0.5 * (spec + grid.conj_reflect(spec))
    return SpectralField(grid, spec, real=real, check=False)
