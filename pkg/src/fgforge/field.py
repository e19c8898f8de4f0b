"""Periodic fields on the flat torus [0, 2pi)^3 with spectral derivatives.

All field-valued arrays in the package keep the three grid axes last, so a
scalar field has shape ``(n, n, n)``, a symmetric form ``(6, n, n, n)`` and a
4x4 tensor ``(4, 4, n, n, n)``.  Products are taken pointwise in physical
space; derivatives are exact for band-limited input.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import NotPositiveDefinite

# Upper-triangle storage order of symmetric forms.
SYM_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_LABELS = ("11", "12", "13", "22", "23", "33")


def fft_workers() -> int:
    """Thread cap for FFTs, read from FGFORGE_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("FGFORGE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``n_points`` samples per axis on [0, 2pi)^3."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_points,) * 3

    @cached_property
    def axis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_points) / self.n_points

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """rfft wavenumbers with the Nyquist mode zeroed (odd derivatives)."""
        k = np.arange(self.n_points // 2 + 1, dtype=float)
        k[-1] = 0.0
        return k

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.shape)

    def ones(self) -> np.ndarray:
        return np.ones(self.shape)


def spectral_derivative(values: np.ndarray, axis: int) -> np.ndarray:
    """d/dx_axis (axis in 1..3) of an array whose last three axes are the grid."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    values = np.asarray(values)
    ax = axis - 4
    n = values.shape[ax]
    k = np.arange(n // 2 + 1, dtype=float)
    k[-1] = 0.0
    shape = [1] * values.ndim
    shape[ax] = k.size
    workers = fft_workers()
    if np.iscomplexobj(values):
        kc = np.fft.fftfreq(n, 1.0 / n)
        kc[n // 2] = 0.0
        shape[ax] = n
        spec = scipy.fft.fft(values, axis=ax, workers=workers)
        return scipy.fft.ifft(1j * kc.reshape(shape) * spec, axis=ax, workers=workers)
    spec = scipy.fft.rfft(values, axis=ax, workers=workers)
    spec *= 1j * k.reshape(shape)
    return scipy.fft.irfft(spec, n=n, axis=ax, workers=workers)


def resample(values: np.ndarray, n_new: int) -> np.ndarray:
    """Fourier interpolation (or truncation) of grid data to ``n_new`` points."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n_new == n:
        return values.copy()
    spec = np.fft.fftn(values, axes=(-3, -2, -1))
    out = np.zeros(values.shape[:-3] + (n_new,) * 3, dtype=complex)
    m = min(n, n_new) // 2
    idx = np.r_[0:m, -m + 1:0] if m > 0 else np.r_[0:1]
    ix = np.ix_(idx, idx, idx)
    out[(..., *ix)] = spec[(..., *ix)]
    out *= (n_new / n) ** 3
    return np.fft.ifftn(out, axes=(-3, -2, -1)).real


def sup_norm(values) -> float:
    """Largest absolute value over grid points and components."""
    arr = np.asarray(values)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> ScalarField:
        return cls(grid, np.broadcast_to(fn(*grid.coords()), grid.shape))

    def derivative(self, axis: int) -> ScalarField:
        return ScalarField(self.grid, spectral_derivative(self.values, axis))

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def sup_norm(self) -> float:
        return sup_norm(self.values)


def _vals(x):
    return x.values if isinstance(x, ScalarField) else x


@dataclass(frozen=True)
class SymForm:
    """Symmetric bilinear form on T^3; only the upper triangle is stored."""

    grid: GridSpec
    comps: np.ndarray  # shape (6, n, n, n) in SYM_INDEX order

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=float)
        if c.shape != (6,) + self.grid.shape:
            raise ValueError(f"expected shape {(6,) + self.grid.shape}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("symmetric form has non-finite values")
        c.setflags(write=False)
        object.__setattr__(self, "comps", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> SymForm:
        return cls(grid, grid.zeros(6))

    @classmethod
    def identity(cls, grid: GridSpec) -> SymForm:
        return cls.constant(grid, np.eye(3))

    @classmethod
    def constant(cls, grid: GridSpec, matrix) -> SymForm:
        m = np.asarray(matrix, dtype=float)
        comps = np.stack([np.full(grid.shape, m[i, j]) for i, j in SYM_INDEX])
        return cls(grid, comps)

    @classmethod
    def from_full(cls, grid: GridSpec, full: np.ndarray) -> SymForm:
        full = np.asarray(full, dtype=float)
        return cls(grid, pack_sym(0.5 * (full + np.swapaxes(full, 0, 1))))

    def full(self) -> np.ndarray:
        return unpack_sym(self.comps)

    def component(self, label: str) -> ScalarField:
        return ScalarField(self.grid, self.comps[SYM_LABELS.index(label)])

    def __add__(self, other: SymForm) -> SymForm:
        return SymForm(self.grid, self.comps + other.comps)

    def __sub__(self, other: SymForm) -> SymForm:
        return SymForm(self.grid, self.comps - other.comps)

    def __mul__(self, c) -> SymForm:
        return SymForm(self.grid, self.comps * _vals(c))

    __rmul__ = __mul__

    def __neg__(self) -> SymForm:
        return SymForm(self.grid, -self.comps)

    def sup_norm(self) -> float:
        return sup_norm(self.comps)

    def check_positive_definite(self, min_eig: float = 0.0) -> None:
        """Raise NotPositiveDefinite naming the worst grid point."""
        eig = np.linalg.eigvalsh(np.moveaxis(self.full(), (0, 1), (-2, -1)))[..., 0]
        idx = np.unravel_index(np.argmin(eig), eig.shape)
        if eig[idx] <= min_eig:
            raise NotPositiveDefinite(
                f"metric not positive definite at grid point {tuple(int(i) for i in idx)}"
                f" (smallest eigenvalue {eig[idx]:.3e})",
                worst_point=tuple(int(i) for i in idx), value=float(eig[idx]))


def pack_sym(full: np.ndarray) -> np.ndarray:
    return np.stack([full[i, j] for i, j in SYM_INDEX])


def unpack_sym(comps: np.ndarray) -> np.ndarray:
    out = np.empty((3, 3) + comps.shape[1:], dtype=comps.dtype)
    for c, (i, j) in enumerate(SYM_INDEX):
        out[i, j] = comps[c]
        out[j, i] = comps[c]
    return out


def fourier_field(grid: GridSpec, constant: float = 0.0, modes=()) -> np.ndarray:
    """Evaluate ``constant + sum a cos(k.x) + b sin(k.x)`` on the grid.

    ``modes`` is an iterable of ``(wavevector, amplitude_cos, amplitude_sin)``.
    """
    x = grid.coords()
    out = np.full(grid.shape, float(constant))
    for k, a, b in modes:
        phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2]
        if a:
            out += a * np.cos(phase)
        if b:
            out += b * np.sin(phase)
    return out


def leading_modes(values: np.ndarray, count: int = 4, tol: float = 1e-14):
    """Largest Fourier modes of a real field, as (wavevector, cos, sin) triples."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    spec = np.fft.fftn(values) / n**3
    freqs = np.fft.fftfreq(n, 1.0 / n).astype(int)
    mags = np.abs(spec)
    order = np.argsort(-mags, axis=None, kind="stable")
    seen = set()
    out = []
    for flat in order:
        idx = np.unravel_index(flat, spec.shape)
        if mags[idx] <= tol or len(out) >= count:
            break
        k = tuple(int(freqs[i]) for i in idx)
        neg = tuple(-c for c in k)
        if neg in seen:
            continue
        seen.add(k)
        c = spec[idx]
        if k == (0, 0, 0):
            out.append({"wavevector": list(k), "amplitude_cos": float(c.real),
                        "amplitude_sin": 0.0})
        else:
            out.append({"wavevector": list(k), "amplitude_cos": float(2 * c.real),
                        "amplitude_sin": float(-2 * c.imag)})
    return out
