"""Axis-aligned momentum-space boxes and their slab partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError

MIN_POINTS = 8
#: Target node count per slab.  Depends only on grid shape, never on thread count,
#: so the reduction tree in :func:`wavekin.quadrature.integrate` is fixed.
SLAB_NODES = 1 << 16


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor-product grid on ``[kmin, kmax]`` with ``n`` nodes per axis (endpoints included)."""

    kmin: tuple[float, float, float]
    kmax: tuple[float, float, float]
    n: tuple[int, int, int]

    def __post_init__(self):
        kmin = tuple(float(v) for v in self.kmin)
        kmax = tuple(float(v) for v in self.kmax)
        n = tuple(int(v) for v in np.broadcast_to(self.n, 3))
        if len(kmin) != 3 or len(kmax) != 3:
            raise DomainError("grid corners must be 3-vectors")
        if not all(np.isfinite(kmin + kmax)):
            raise DomainError("grid corners must be finite")
        if not all(b > a for a, b in zip(kmin, kmax)):
            raise DomainError(f"grid needs kmax > kmin on every axis, got {kmin} .. {kmax}")
        if any(v < MIN_POINTS for v in n):
            raise DomainError(f"grid needs at least {MIN_POINTS} points per axis, got {n}")
        object.__setattr__(self, "kmin", kmin)
        object.__setattr__(self, "kmax", kmax)
        object.__setattr__(self, "n", n)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n

    @property
    def size(self) -> int:
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.kmax) - np.array(self.kmin)) / (np.array(self.n) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, m) for a, b, m in zip(self.kmin, self.kmax, self.n)]

    def refined(self) -> "GridSpec":
        """Node-nested refinement: every old node stays a node, ``n -> 2n - 1``."""
        return GridSpec(self.kmin, self.kmax, tuple(2 * m - 1 for m in self.n))

    def with_points(self, n) -> "GridSpec":
        return GridSpec(self.kmin, self.kmax, n)

    def node_index(self, k, atol_frac: float = 1e-9) -> tuple[int, int, int]:
        """Integer index of the node at ``k``; raises if ``k`` is not on the grid."""
        k = np.asarray(k, dtype=float)
        pos = (k - np.array(self.kmin)) / self.spacing
        idx = np.rint(pos)
        if np.any(np.abs(pos - idx) > atol_frac) or np.any(idx < 0) or np.any(idx > np.array(self.n) - 1):
            raise UsageError(f"k = {k.tolist()} is not a node of the grid")
        return tuple(int(i) for i in idx)

    def slabs(self) -> list["Slab"]:
        """Partition into contiguous x-slabs of about ``SLAB_NODES`` nodes each."""
        ax, ay, az = self.axes()
        nx, ny, nz = self.n
        per = max(1, SLAB_NODES // (ny * nz))
        ky = ay[None, :, None]
        kz = az[None, None, :]
        return [
            Slab(slice(i, min(i + per, nx)), ax[i : i + per, None, None], ky, kz)
            for i in range(0, nx, per)
        ]

    def to_dict(self) -> dict:
        return {"kmin": list(self.kmin), "kmax": list(self.kmax), "n": list(self.n)}


@dataclass(frozen=True)
class Slab:
    """A block of consecutive x-planes; coordinates are broadcastable 3D arrays."""

    ix: slice
    kx: np.ndarray
    ky: np.ndarray
    kz: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.kx.shape[0], self.ky.shape[1], self.kz.shape[2])

    def vectors(self) -> np.ndarray:
        """Node wavevectors stacked on a leading axis, shape ``(3, nx, ny, nz)``."""
        return np.stack(np.broadcast_arrays(self.kx, self.ky, self.kz))
