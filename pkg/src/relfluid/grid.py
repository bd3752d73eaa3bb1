"""Uniform periodic grids and the discrete operators defined on them.

Fields are plain float64 arrays sampled at cell nodes, shape ``(nx, ny)``
or ``(nx, ny, nz)`` with axis 0 <-> x, C order. Vector fields stack
components along a new leading axis. Two derivative families are
available per grid: ``spectral`` (default, Fourier collocation) and
``fd2`` (second-order centered differences with periodic wrap). The
Poisson inversion is always spectral.

Quadrature is the trapezoid rule, which on a periodic uniform grid is the
plain cell sum. The reduction goes through ``np.sum`` on the C-ordered
array, whose pairwise accumulation is deterministic for a fixed shape, so
repeated runs produce bit-identical integrals.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import GammaBelowOne, NonZeroMean

Array = np.ndarray

_JACOBIAN_SCHEMES = ("arakawa", "spectral")
_DERIV_FAMILIES = ("spectral", "fd2")


def _validate_extent(n: int, name: str) -> list[str]:
    problems = []
    if n < 8:
        problems.append(f"{name} must be at least 8, got {n}")
    if n % 2 != 0:
        problems.append(f"{name} must be even, got {n}")
    return problems


class _GridBase:
    """Operators shared by the 2D and 3D grids."""

    # --- transforms -----------------------------------------------------

    def fft(self, f: Array) -> Array:
        return np.fft.rfftn(f)

    def ifft(self, fh: Array) -> Array:
        return np.fft.irfftn(fh, s=self.shape, axes=tuple(range(len(self.shape))))

    @cached_property
    def _wavenumbers(self) -> list[Array]:
        """Angular wavenumbers, one broadcastable array per axis (rfft layout)."""
        ndim = len(self.shape)
        out = []
        for ax, (n, length) in enumerate(zip(self.shape, self.lengths)):
            if ax == ndim - 1:
                k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
            else:
                k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
            shape = [1] * ndim
            shape[ax] = k.size
            out.append(k.reshape(shape))
        return out

    @cached_property
    def _wavenumbers_deriv(self) -> list[Array]:
        """First-derivative multipliers: as above with the Nyquist slot zeroed.

        The Nyquist cosine mode has no well-defined odd derivative on the
        grid; zeroing it keeps d/dx skew-symmetric and real.
        """
        out = []
        for ax, (k, n) in enumerate(zip(self._wavenumbers, self.shape)):
            kd = k.copy()
            flat = kd.reshape(-1)
            if ax == len(self.shape) - 1:
                flat[-1] = 0.0
            else:
                flat[n // 2] = 0.0
            out.append(kd)
        return out

    @cached_property
    def _k_squared(self) -> Array:
        """|k|^2 built from the derivative multipliers.

        Using the same (Nyquist-zeroed) wavenumbers as gradient/divergence
        makes the spectral laplacian exactly div(grad(.)) mode by mode, and
        poisson_solve its exact inverse on the resolvable modes. A full-|k|^2
        symbol would under-correct mixed Nyquist/regular modes in every
        solve built on top (Leray projection, coefficient inversions),
        leaving slowly-decaying residuals there.
        """
        total = np.zeros([k.size for k in self._wavenumbers], dtype=np.float64)
        for k in self._wavenumbers_deriv:
            total = total + k * k
        return total

    @cached_property
    def _dealias_keep(self) -> Array:
        """Boolean 2/3-rule mask: keep integer mode index <= n//3 per axis."""
        ndim = len(self.shape)
        keep = np.ones([k.size for k in self._wavenumbers], dtype=bool)
        for ax, n in enumerate(self.shape):
            if ax == ndim - 1:
                idx = np.fft.rfftfreq(n, d=1.0 / n)
            else:
                idx = np.fft.fftfreq(n, d=1.0 / n)
            shape = [1] * ndim
            shape[ax] = idx.size
            keep = keep & (np.abs(idx.reshape(shape)) <= n // 3)
        return keep

    # --- derivative operators -------------------------------------------

    def deriv(self, f: Array, axis: int) -> Array:
        """First derivative of a scalar field along one axis."""
        if self.deriv_family == "spectral":
            fh = self.fft(f)
            return self.ifft(1j * self._wavenumbers_deriv[axis] * fh)
        h = self.spacings[axis]
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)

    def gradient(self, f: Array) -> Array:
        """Gradient as a stacked (ndim, ...) array."""
        if self.deriv_family == "spectral":
            fh = self.fft(f)
            return np.stack(
                [self.ifft(1j * kd * fh) for kd in self._wavenumbers_deriv]
            )
        return np.stack([self.deriv(f, ax) for ax in range(len(self.shape))])

    def divergence(self, w: Array) -> Array:
        """Divergence of a stacked vector field."""
        if self.deriv_family == "spectral":
            acc = None
            for ax, kd in enumerate(self._wavenumbers_deriv):
                term = 1j * kd * self.fft(w[ax])
                acc = term if acc is None else acc + term
            return self.ifft(acc)
        out = np.zeros(self.shape, dtype=np.float64)
        for ax in range(len(self.shape)):
            out += self.deriv(w[ax], ax)
        return out

    def laplacian(self, f: Array) -> Array:
        """Scalar Laplacian; spectrally this is the exact inverse of poisson_solve."""
        if self.deriv_family == "spectral":
            return self.ifft(-self._k_squared * self.fft(f))
        out = np.zeros(self.shape, dtype=np.float64)
        for ax, h in enumerate(self.spacings):
            out += (
                np.roll(f, -1, axis=ax) - 2.0 * f + np.roll(f, 1, axis=ax)
            ) / (h * h)
        return out

    def gamma_laplacian(self, psi: Array, gamma: Array) -> Array:
        """Coefficient Laplacian div(gamma grad(psi)).

        ``gamma`` is a Lorentz-factor field and must not dip below one.
        """
        if np.min(gamma) < 1.0:
            raise GammaBelowOne(f"min gamma = {np.min(gamma):.17g}")
        return self.divergence(gamma * self.gradient(psi))

    # --- integral operators ----------------------------------------------

    @property
    def volume(self) -> float:
        total = 1.0
        for length in self.lengths:
            total *= length
        return total

    def integrate(self, f: Array) -> float:
        """Volume integral (periodic trapezoid rule, deterministic reduction)."""
        return float(np.sum(f)) * self.cell_volume

    @cached_property
    def _poisson_symbol(self) -> tuple[Array, Array]:
        """(safe -1/|k|^2 multiplier, boolean mask of invertible modes)."""
        k2 = self._k_squared
        invertible = k2 > 0.0
        mult = np.where(invertible, -1.0 / np.where(invertible, k2, 1.0), 0.0)
        return mult, invertible

    def poisson_solve(self, rhs: Array) -> Array:
        """Zero-mean solution of laplacian(phi) = resolvable part of rhs.

        Exact inverse of the spectral laplacian on the modes where its
        symbol is nonzero; the complement (the mean plus pure-Nyquist
        checkerboard modes, which no spectral derivative can see) is
        dropped from the solution. The source must be solvable up to
        rounding in its mean: |mean(rhs)| <= 1e-12 * max|rhs|.
        """
        scale = float(np.max(np.abs(rhs)))
        mean = float(np.mean(rhs))
        if abs(mean) > 1e-12 * scale:
            raise NonZeroMean(f"mean(rhs) = {mean:.6g} with max|rhs| = {scale:.6g}")
        mult, _ = self._poisson_symbol
        return self.ifft(mult * self.fft(rhs))

    def resolvable_source(self, f: Array) -> Array:
        """Projection of a source onto the range of the spectral laplacian.

        Zeroes the modes whose derivative symbol vanishes identically (the
        mean and the pure-Nyquist checkerboards). Such content drives no
        flow and no coefficient-Laplacian solve can reproduce it, so
        inversion residuals are measured against this projection.
        """
        _, invertible = self._poisson_symbol
        return self.ifft(np.where(invertible, self.fft(f), 0.0))

    def dealias(self, f: Array) -> Array:
        """Zero every mode above 2/3 of Nyquist on each axis."""
        return self.ifft(np.where(self._dealias_keep, self.fft(f), 0.0))

    # --- norms ------------------------------------------------------------

    def norm_max(self, f: Array) -> float:
        return float(np.max(np.abs(f)))

    def norm_l2(self, f: Array) -> float:
        """L2 norm sqrt(integral of f^2) (or of |w|^2 for stacked fields)."""
        return float(np.sqrt(np.sum(f * f) * self.cell_volume))


@dataclasses.dataclass(frozen=True)
class Grid2D(_GridBase):
    nx: int
    ny: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi
    deriv_family: str = "spectral"

    def __post_init__(self):
        problems = _validate_extent(self.nx, "nx") + _validate_extent(self.ny, "ny")
        if not (self.lx > 0.0 and self.ly > 0.0):
            problems.append("box lengths must be positive")
        if self.deriv_family not in _DERIV_FAMILIES:
            problems.append(f"deriv_family must be one of {_DERIV_FAMILIES}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def lengths(self) -> tuple[float, float]:
        return (self.lx, self.ly)

    @property
    def spacings(self) -> tuple[float, float]:
        return (self.lx / self.nx, self.ly / self.ny)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def h_min(self) -> float:
        return min(self.spacings)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @cached_property
    def coords(self) -> tuple[Array, Array]:
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return tuple(np.meshgrid(x, y, indexing="ij"))

    def jacobian_bracket(self, f: Array, g: Array, scheme: str = "arakawa") -> Array:
        """[f, g] = f_x g_y - f_y g_x.

        'arakawa' is the nine-point conserving stencil (discrete sums of
        J, f J and g J vanish to rounding); 'spectral' differentiates in
        Fourier space and dealiases the pointwise product.
        """
        if scheme == "arakawa":
            return _kernels.arakawa_jacobian(
                np.ascontiguousarray(f), np.ascontiguousarray(g), self.dx, self.dy
            )
        if scheme == "spectral":
            fx, fy = self.gradient(f)
            gx, gy = self.gradient(g)
            return self.dealias(fx * gy - fy * gx)
        raise ValueError(f"scheme must be one of {_JACOBIAN_SCHEMES}")

    def perp_gradient(self, psi: Array) -> Array:
        """Velocity grad(psi) x z_hat = (psi_y, -psi_x) of a stream function."""
        gx, gy = self.gradient(psi)
        return np.stack([gy, -gx])


@dataclasses.dataclass(frozen=True)
class Grid3D(_GridBase):
    nx: int
    ny: int
    nz: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi
    lz: float = 2.0 * np.pi
    deriv_family: str = "spectral"

    def __post_init__(self):
        problems = (
            _validate_extent(self.nx, "nx")
            + _validate_extent(self.ny, "ny")
            + _validate_extent(self.nz, "nz")
        )
        if not (self.lx > 0.0 and self.ly > 0.0 and self.lz > 0.0):
            problems.append("box lengths must be positive")
        if self.deriv_family not in _DERIV_FAMILIES:
            problems.append(f"deriv_family must be one of {_DERIV_FAMILIES}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.lx, self.ly, self.lz)

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def h_min(self) -> float:
        return min(self.spacings)

    @property
    def cell_volume(self) -> float:
        sp = self.spacings
        return sp[0] * sp[1] * sp[2]

    @cached_property
    def coords(self) -> tuple[Array, Array, Array]:
        axes = [np.arange(n) * h for n, h in zip(self.shape, self.spacings)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def curl(self, w: Array) -> Array:
        """Curl of a stacked vector field."""
        if self.deriv_family == "spectral":
            wh = [self.fft(w[ax]) for ax in range(3)]
            kd = self._wavenumbers_deriv
            cx = self.ifft(1j * (kd[1] * wh[2] - kd[2] * wh[1]))
            cy = self.ifft(1j * (kd[2] * wh[0] - kd[0] * wh[2]))
            cz = self.ifft(1j * (kd[0] * wh[1] - kd[1] * wh[0]))
            return np.stack([cx, cy, cz])
        d = self.deriv
        return np.stack(
            [
                d(w[2], 1) - d(w[1], 2),
                d(w[0], 2) - d(w[2], 0),
                d(w[1], 0) - d(w[0], 1),
            ]
        )
