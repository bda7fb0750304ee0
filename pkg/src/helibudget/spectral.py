"""Periodic cubic grid and exact spectral operators.

Fields are plain float64 numpy arrays: scalars have shape ``(n, n, n)``
indexed ``[x, y, z]``, vectors have shape ``(3, n, n, n)``. Transforms are
real-to-complex along the last axis (``scipy.fft.rfftn``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "make_grid",
    "gradient",
    "divergence",
    "curl",
    "volume_integral",
    "dealias",
    "inverse_laplacian_zero_mean",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic lattice on ``[0, L)^3`` with ``n`` points per axis."""

    n: int
    L: float = 2 * np.pi
    workers: int = 1
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")
        n = self.n
        # integer mode indices {0..n/2-1, -n/2..-1}
        m = np.fft.fftfreq(n, d=1.0 / n)
        mz = np.arange(n // 2 + 1, dtype=float)
        scale = 2 * np.pi / self.L
        kx = (m * scale)[:, None, None]
        ky = (m * scale)[None, :, None]
        kz = (mz * scale)[None, None, :]
        # first derivatives drop the Nyquist mode so outputs stay real
        nyq = n // 2
        dkx = np.where(np.abs(m) == nyq, 0.0, m * scale)[:, None, None]
        dky = np.where(np.abs(m) == nyq, 0.0, m * scale)[None, :, None]
        dkz = np.where(mz == nyq, 0.0, mz * scale)[None, None, :]
        k2 = kx**2 + ky**2 + kz**2
        cut = n / 3.0
        mask = (
            (np.abs(m)[:, None, None] < cut)
            & (np.abs(m)[None, :, None] < cut)
            & (mz[None, None, :] < cut)
        )
        # Hermitian weights of the half spectrum for Parseval sums
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self._tables.update(
            mode=m,
            k=(kx, ky, kz),
            dk=(dkx, dky, dkz),
            k2=k2,
            mask=mask,
            weight=w[None, None, :],
        )

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def volume(self) -> float:
        return self.L**3

    @property
    def wavenumbers(self) -> np.ndarray:
        """Full-length wavenumber axis ``(2 pi / L) * {0, 1, ..., -1}``."""
        return self._tables["mode"] * (2 * np.pi / self.L)

    @property
    def k2(self) -> np.ndarray:
        return self._tables["k2"]

    @property
    def dealias_mask(self) -> np.ndarray:
        return self._tables["mask"]

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays ``x, y, z``."""
        x = np.arange(self.n) * self.dx
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = self.coords()
        return tuple(np.broadcast_to(c, self.shape).copy() for c in (x, y, z))

    # transforms -------------------------------------------------------
    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfftn(f, axes=(-3, -2, -1), workers=self.workers)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(fh, s=self.shape, axes=(-3, -2, -1), workers=self.workers)

    # operators ---------------------------------------------------------
    def grad(self, s: np.ndarray) -> np.ndarray:
        sh = self.fft(s)
        return np.stack([self.ifft(1j * k * sh) for k in self._tables["dk"]])

    def div(self, v: np.ndarray) -> np.ndarray:
        vh = self.fft(v)
        dk = self._tables["dk"]
        return self.ifft(1j * (dk[0] * vh[0] + dk[1] * vh[1] + dk[2] * vh[2]))

    def curl(self, v: np.ndarray) -> np.ndarray:
        vh = self.fft(v)
        kx, ky, kz = self._tables["dk"]
        return np.stack(
            [
                self.ifft(1j * (ky * vh[2] - kz * vh[1])),
                self.ifft(1j * (kz * vh[0] - kx * vh[2])),
                self.ifft(1j * (kx * vh[1] - ky * vh[0])),
            ]
        )

    def partial(self, s: np.ndarray, axis: int) -> np.ndarray:
        return self.ifft(1j * self._tables["dk"][axis] * self.fft(s))

    def laplacian(self, s: np.ndarray) -> np.ndarray:
        return self.ifft(-self.k2 * self.fft(s))

    def integrate(self, s: np.ndarray) -> float:
        return float(np.sum(s) * self.dx**3)

    def dealias_hat(self, fh: np.ndarray) -> np.ndarray:
        return fh * self.dealias_mask

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Apply the 2/3 rule to a physical-space field (scalar or vector)."""
        return self.ifft(self.fft(f) * self.dealias_mask)

    def mul(self, *factors: np.ndarray) -> np.ndarray:
        """Pointwise product followed by dealiasing."""
        out = factors[0]
        for f in factors[1:]:
            out = out * f
        return self.dealias(out)

    def dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.dealias(np.sum(a * b, axis=0))

    def cross(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.dealias(np.cross(a, b, axis=0))

    def inv_laplacian(self, s: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        mean = np.mean(s)
        if abs(mean) > tol * max(np.max(np.abs(s)), np.finfo(float).tiny):
            raise ValueError(f"inverse Laplacian needs a zero-mean source (mean={mean:.3e})")
        sh = self.fft(s)
        k2 = self.k2.copy()
        k2[0, 0, 0] = 1.0
        out = -sh / k2
        out[0, 0, 0] = 0.0
        return self.ifft(out)

    def spectral_energy(self, fh: np.ndarray) -> float:
        """``integral f^2 dV`` evaluated from half-spectrum coefficients."""
        n3 = float(self.n) ** 3
        return float(np.sum(self._tables["weight"] * np.abs(fh) ** 2) * self.volume / n3**2)


def make_grid(n: int, L: float = 2 * np.pi, workers: int = 1) -> Grid:
    return Grid(n=n, L=L, workers=workers)


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains non-finite values")


def gradient(grid: Grid, s: np.ndarray) -> np.ndarray:
    _check_finite(s)
    return grid.grad(s)


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    _check_finite(v)
    return grid.div(v)


def curl(grid: Grid, v: np.ndarray) -> np.ndarray:
    _check_finite(v)
    return grid.curl(v)


def volume_integral(grid: Grid, s: np.ndarray) -> float:
    return grid.integrate(s)


def dealias(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Zero every spectral coefficient with some ``|k_j| >= n/3``."""
    return grid.dealias_hat(fh)


def inverse_laplacian_zero_mean(grid: Grid, s: np.ndarray) -> np.ndarray:
    return grid.inv_laplacian(s)
