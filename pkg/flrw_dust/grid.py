"""Periodic T³ = [−π, π)³ grid with Fourier pseudo-spectral calculus.

Fields are plain ``float64`` arrays whose last three axes are the grid axes;
any leading axes (tensor indices, batches) are carried through every transform.
Spatial axes are numbered 0, 1, 2 for x¹, x², x³.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from scipy import fft as sfft

__all__ = ["Grid3", "multi_indices"]

_AXES = (-3, -2, -1)


def multi_indices(order: int) -> list[tuple[int, int, int]]:
    """All multi-indices α = (α1, α2, α3) with |α| ≤ order, lowest order first."""
    out = []
    for total in range(order + 1):
        for a1 in range(total, -1, -1):
            for a2 in range(total - a1, -1, -1):
                out.append((a1, a2, total - a1 - a2))
    return out


class Grid3:
    """n³ uniform periodic grid, n a power of two and at least 8."""

    def __init__(self, n: int, max_order: int = 4):
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        self.n = int(n)
        self.dx = 2.0 * np.pi / self.n
        self.max_order = int(max_order)
        self.cutoff = self.n // 3
        self.shape = (self.n, self.n, self.n)

        k = sfft.fftfreq(self.n, 1.0 / self.n)
        kr = sfft.rfftfreq(self.n, 1.0 / self.n)
        self.wavenumbers = (k[:, None, None], k[None, :, None], kr[None, None, :])

        # first-derivative multipliers drop the unpaired Nyquist mode
        nyq = self.n // 2
        self._ik = tuple(
            1j * np.where(np.abs(kk) == nyq, 0.0, kk) for kk in self.wavenumbers
        )
        self.dealias_mask = (
            (np.abs(self.wavenumbers[0]) <= self.cutoff)
            & (np.abs(self.wavenumbers[1]) <= self.cutoff)
            & (np.abs(self.wavenumbers[2]) <= self.cutoff)
        )
        # rfft stores each interior k3 column once for the pair (k3, -k3)
        fold = np.full(kr.shape, 2.0)
        fold[0] = 1.0
        fold[-1] = 1.0
        self._fold = fold[None, None, :]
        self._weights: dict[int, NDArray[np.float64]] = {}

    def __repr__(self) -> str:
        return f"Grid3(n={self.n})"

    # ─── coordinates ──────────────────────────────────────────────────────

    @cached_property
    def coords(self) -> NDArray[np.float64]:
        """Coordinates x^i as a (3, n, n, n) array."""
        x = -np.pi + self.dx * np.arange(self.n)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    def zeros(self, *lead: int) -> NDArray[np.float64]:
        return np.zeros((*lead, *self.shape))

    # ─── transforms ───────────────────────────────────────────────────────

    def to_spectral(self, f: NDArray) -> NDArray[np.complex128]:
        return sfft.rfftn(f, axes=_AXES)

    def to_physical(self, fh: NDArray) -> NDArray[np.float64]:
        return sfft.irfftn(fh, s=self.shape, axes=_AXES)

    # ─── derivatives ──────────────────────────────────────────────────────

    def ddx(self, f: NDArray, axis: int) -> NDArray[np.float64]:
        """Spectral ∂_axis f."""
        return self.to_physical(self._ik[axis] * self.to_spectral(f))

    def gradient(self, f: NDArray) -> NDArray[np.float64]:
        """(∂_0 f, ∂_1 f, ∂_2 f) stacked on a new leading axis."""
        fh = self.to_spectral(f)
        return np.stack([self.to_physical(ik * fh) for ik in self._ik])

    def hessian(self, f: NDArray) -> NDArray[np.float64]:
        """∂_a∂_b f as a (3, 3, ...) array.

        Each unordered pair is transformed once and shared, so the result is
        symmetric bitwise.
        """
        fh = self.to_spectral(f)
        out = np.empty((3, 3, *f.shape))
        for a in range(3):
            for b in range(a, 3):
                d = self.to_physical(self._ik[a] * self._ik[b] * fh)
                out[a, b] = d
                out[b, a] = d
        return out

    def partial(self, f: NDArray, alpha: tuple[int, int, int]) -> NDArray[np.float64]:
        """∂^α f for a spatial multi-index α."""
        if not any(alpha):
            return np.array(f, dtype=float, copy=True)
        return self.to_physical(self._multiplier(alpha) * self.to_spectral(f))

    def _multiplier(self, alpha: tuple[int, int, int]) -> NDArray[np.complex128]:
        m = np.ones((1, 1, 1), dtype=complex)
        for ik, p in zip(self._ik, alpha):
            if p:
                m = m * ik**p
        return m

    # ─── filtering ────────────────────────────────────────────────────────

    def dealias(self, f: NDArray) -> NDArray[np.float64]:
        """Zero every mode outside the 2/3-rule band |k_i| ≤ n // 3."""
        return self.to_physical(self.dealias_mask * self.to_spectral(f))

    # ─── quadrature and norms ─────────────────────────────────────────────

    def integrate(self, f: NDArray) -> NDArray[np.float64] | float:
        """∫_{T³} f dx over the trailing grid axes."""
        return np.sum(f, axis=_AXES) * self.cell_volume

    def l2_norm(self, f: NDArray) -> NDArray[np.float64] | float:
        return np.sqrt(np.sum(np.square(f), axis=_AXES) * self.cell_volume)

    def _sobolev_weight(self, order: int) -> NDArray[np.float64]:
        cache = self._weights
        if order not in cache:
            k1, k2, k3 = (np.asarray(kk, dtype=float) for kk in self.wavenumbers)
            w = np.zeros(np.broadcast_shapes(k1.shape, k2.shape, k3.shape))
            for a1, a2, a3 in multi_indices(order):
                w = w + k1 ** (2 * a1) * k2 ** (2 * a2) * k3 ** (2 * a3)
            cache[order] = w * self._fold
        return cache[order]

    def sobolev_norm(self, f: NDArray, order: int) -> NDArray[np.float64] | float:
        """(Σ_{|α|≤order} ‖∂_α f‖²_{L²})^{1/2} through Fourier multipliers.

        Uses the coordinate-derivative definition Σ Π k_i^{2α_i}, not the
        isotropic (1+|k|²)^s weight.
        """
        if not 0 <= order <= self.max_order:
            raise ValueError(f"sobolev order must be in [0, {self.max_order}], got {order}")
        fh = self.to_spectral(f)
        total = np.sum(np.abs(fh) ** 2 * self._sobolev_weight(order), axis=_AXES)
        return np.sqrt(total * self.cell_volume / self.n**3)

    def mode(self, wavevector, phase: float = 0.0) -> NDArray[np.float64]:
        """cos(k·x + phase) sampled on the grid."""
        k = np.asarray(wavevector, dtype=float).reshape(3, 1, 1, 1)
        return np.cos(np.sum(k * self.coords, axis=0) + phase)

