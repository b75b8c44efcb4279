"""Scalar wavefunctions in momentum space under free evolution.

A field is stored at ``t = 0``.  Free propagation only attaches the phase
``exp(-i omega t)`` to every Fourier amplitude, so evaluation at any time is
exact and there is no time stepper.  The inner-product weight of the
underlying wave equation is assumed absorbed into the amplitude: for a real
positive weight ``g(omega)``, replacing ``psi`` with ``psi * sqrt(g)`` leaves
the real parts of all centroid integrals unchanged.

Two representations are supported:

* :class:`GaussianSuperposition` of L2-normalized :class:`GaussianComponent`
  packets, evaluated in closed form.
* :class:`GridField`, samples on a :class:`~wavekin.grid.GridSpec`, with
  gradients from 4th-order central differences.

Grid files
----------
JSON (``*.json``)::

    {"format": "wavekin-grid", "version": 1,
     "kmin": [x, y, z], "kmax": [x, y, z], "n": [nx, ny, nz],
     "re": [...], "im": [...]}

``re``/``im`` hold ``nx*ny*nz`` floats in row-major order: x index slowest,
z index fastest (flat index ``(i*ny + j)*nz + l``).

Binary (any other extension), all little-endian::

    offset  size  content
    0       8     magic b"WKGRID01"
    8       48    kmin[3], kmax[3] as float64
    56      24    nx, ny, nz as uint64
    80      16*N  complex128 samples (re, im float64 pairs), same order as JSON
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .dispersion import DispersionRelation
from .errors import DomainError, UsageError
from .grid import GridSpec, Slab

#: GridField samples on the box faces must stay below this fraction of the peak magnitude.
BOUNDARY_DECAY = 1e-8
GRID_MAGIC = b"WKGRID01"
_HEADER = struct.Struct("<8s6d3Q")


def _vec3(v, name) -> tuple[float, float, float]:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be a finite 3-vector, got {v!r}")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class GaussianComponent:
    """``A (pi delta^2)^(-3/4) exp(-(k-k0)^2 / (2 delta^2)) exp(-i k.r0)``; integrates to ``|A|^2``."""

    amplitude: complex
    k0: tuple[float, float, float]
    delta: float
    r0: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        a = complex(self.amplitude)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise DomainError(f"amplitude must be finite, got {self.amplitude!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"width delta must be positive, got {self.delta!r}")
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "k0", _vec3(self.k0, "k0"))
        object.__setattr__(self, "r0", _vec3(self.r0, "r0"))

    @property
    def weight(self) -> float:
        return abs(self.amplitude) ** 2

    @property
    def peak(self) -> complex:
        """Value at ``k = k0`` (phase from ``r0`` excluded)."""
        return self.amplitude * (math.pi * self.delta**2) ** -0.75

    def evaluate(self, kx, ky, kz):
        """Amplitude and its k-gradient at broadcastable coordinate arrays."""
        inv = 1.0 / self.delta**2
        x0, y0, z0 = self.k0
        rx, ry, rz = self.r0
        dx, dy, dz = kx - x0, ky - y0, kz - z0
        # separable factors keep the transcendental work on the 1D axes
        fx = np.exp(-0.5 * inv * dx * dx - 1j * rx * kx)
        fy = np.exp(-0.5 * inv * dy * dy - 1j * ry * ky)
        fz = np.exp(-0.5 * inv * dz * dz - 1j * rz * kz)
        psi = self.peak * fx * fy * fz
        grad = (
            (-inv * dx - 1j * rx) * psi,
            (-inv * dy - 1j * ry) * psi,
            (-inv * dz - 1j * rz) * psi,
        )
        return psi, grad

    def to_dict(self) -> dict:
        return {
            "A": [self.amplitude.real, self.amplitude.imag],
            "k0": list(self.k0),
            "delta": self.delta,
            "r0": list(self.r0),
        }


class SpectralField:
    """Momentum-space amplitude at ``t = 0``; see module docstring."""

    def sample_static(self, slab: Slab):
        """``(psi, grad)`` at ``t = 0`` on a slab; ``grad`` has a leading axis of length 3."""
        raise NotImplementedError

    def amplitude_at(self, disp: DispersionRelation, k, t: float = 0.0) -> complex:
        psi0, _ = self._point(k, gradient=False)
        return psi0 * np.exp(-1j * float(disp.omega(k)) * t)

    def spectral_gradient(self, disp: DispersionRelation, k, t: float = 0.0) -> np.ndarray:
        """``grad_k [psi exp(-i omega t)] = exp(-i omega t) (grad psi - i t grad(omega) psi)``."""
        psi0, grad0 = self._point(k, gradient=True)
        k = np.asarray(k, dtype=float)
        phase = np.exp(-1j * float(disp.omega(k)) * t)
        if t == 0:
            return phase * grad0
        vg = disp.group_velocity(k)
        return phase * (grad0 - 1j * t * vg * psi0)

    def _point(self, k, gradient: bool):
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianSuperposition(SpectralField):
    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("a Gaussian superposition needs at least one component")
        object.__setattr__(self, "components", comps)

    def sample_static(self, slab: Slab):
        return self._evaluate(slab.kx, slab.ky, slab.kz)

    def _evaluate(self, kx, ky, kz):
        shape = np.broadcast_shapes(np.shape(kx), np.shape(ky), np.shape(kz))
        psi = np.zeros(shape, dtype=complex)
        grad = np.zeros((3,) + shape, dtype=complex)
        for comp in self.components:
            p, g = comp.evaluate(kx, ky, kz)
            psi += p
            for a in range(3):
                grad[a] += g[a]
        return psi, grad

    def _point(self, k, gradient):
        k = np.asarray(k, dtype=float)
        if k.shape != (3,) or not np.all(np.isfinite(k)):
            raise DomainError(f"k must be a finite 3-vector, got {k!r}")
        psi, grad = self._evaluate(k[0], k[1], k[2])
        return complex(psi), grad

    def to_dict(self) -> dict:
        return {"type": "gaussians", "components": [c.to_dict() for c in self.components]}


@dataclass(frozen=True, eq=False)
class GridField(SpectralField):
    """Samples of ``psi`` at ``t = 0`` on every node of ``spec`` (array shape ``spec.n``).

    Gradients use the 4th-order central stencil.  For whole-grid integration
    the field is continued by zero outside the box, which is consistent with
    the boundary-decay requirement; point queries refuse nodes closer than two
    steps to a face.
    """

    spec: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != self.spec.n:
            if s.size != self.spec.size:
                raise DomainError(f"grid field needs {self.spec.size} samples, got {s.size}")
            s = s.reshape(self.spec.n)
        if not np.all(np.isfinite(s)):
            raise DomainError("grid field samples must be finite")
        mag = np.abs(s)
        peak = mag.max()
        if not peak > 0:
            raise DomainError("grid field is identically zero")
        faces = max(
            mag[[0, -1], :, :].max(), mag[:, [0, -1], :].max(), mag[:, :, [0, -1]].max()
        )
        if faces >= BOUNDARY_DECAY * peak:
            raise DomainError(
                f"grid field not contained in its box: boundary magnitude {faces / peak:.3g} of peak "
                f"(limit {BOUNDARY_DECAY:g})"
            )
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @cached_property
    def gradient(self) -> np.ndarray:
        """4th-order central differences of the samples, zero-extended outside the box."""
        h = self.spec.spacing
        padded = np.pad(self.samples, 2)
        nx, ny, nz = self.spec.n
        core = (slice(2, nx + 2), slice(2, ny + 2), slice(2, nz + 2))
        out = np.empty((3,) + self.spec.n, dtype=complex)
        for a in range(3):

            def shifted(d, a=a):
                idx = list(core)
                idx[a] = slice(2 + d, self.spec.n[a] + 2 + d)
                return padded[tuple(idx)]

            out[a] = (shifted(-2) - 8 * shifted(-1) + 8 * shifted(1) - shifted(2)) / (12 * h[a])
        out.setflags(write=False)
        return out

    def sample_static(self, slab: Slab):
        return self.samples[slab.ix], self.gradient[:, slab.ix]

    def _point(self, k, gradient):
        k = np.asarray(k, dtype=float)
        if k.shape != (3,) or not np.all(np.isfinite(k)):
            raise DomainError(f"k must be a finite 3-vector, got {k!r}")
        idx = self.spec.node_index(k)
        if not gradient:
            return complex(self.samples[idx]), None
        if any(i < 2 or i > m - 3 for i, m in zip(idx, self.spec.n)):
            raise UsageError(f"node {idx} is too close to the boundary for the 5-point stencil")
        return complex(self.samples[idx]), self.gradient[(slice(None),) + idx].copy()

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "GridField":
        """Sample ``fn(kx, ky, kz)`` on broadcastable node arrays."""
        ax, ay, az = spec.axes()
        values = fn(ax[:, None, None], ay[None, :, None], az[None, None, :])
        return cls(spec, np.broadcast_to(values, spec.n))

    def save(self, path) -> None:
        path = Path(path)
        flat = np.ascontiguousarray(self.samples).reshape(-1)
        if path.suffix == ".json":
            doc = {"format": "wavekin-grid", "version": 1, **self.spec.to_dict(),
                   "re": flat.real.tolist(), "im": flat.imag.tolist()}
            path.write_text(json.dumps(doc))
            return
        header = _HEADER.pack(GRID_MAGIC, *self.spec.kmin, *self.spec.kmax, *self.spec.n)
        path.write_bytes(header + flat.astype("<c16").tobytes())

    @classmethod
    def load(cls, path) -> "GridField":
        path = Path(path)
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            if doc.get("format") != "wavekin-grid" or doc.get("version") != 1:
                raise DomainError(f"{path}: not a version-1 wavekin grid file")
            spec = GridSpec(doc["kmin"], doc["kmax"], doc["n"])
            samples = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
            return cls(spec, samples)
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise DomainError(f"{path}: truncated grid header")
        magic, *vals = _HEADER.unpack_from(raw)
        if magic != GRID_MAGIC:
            raise DomainError(f"{path}: bad magic {magic!r}")
        spec = GridSpec(vals[0:3], vals[3:6], vals[6:9])
        body = raw[_HEADER.size :]
        if len(body) != 16 * spec.size:
            raise DomainError(f"{path}: expected {16 * spec.size} sample bytes, found {len(body)}")
        return cls(spec, np.frombuffer(body, dtype="<c16").astype(complex))


def evolve(psi0, grad0, omega, vg, t: float):
    """Attach the free-evolution phase to static samples.

    ``vg`` is the group velocity with the same leading axis as ``grad0``.
    """
    if t == 0:
        return psi0, grad0
    phase = np.exp(-1j * t * omega)
    psi = psi0 * phase
    grad = (grad0 - 1j * t * vg * psi0) * phase
    return psi, grad


def amplitude_at(field: SpectralField, disp: DispersionRelation, k, t: float = 0.0) -> complex:
    """``psi(k) exp(-i omega(k) t)``."""
    return field.amplitude_at(disp, k, t)


def spectral_gradient(field: SpectralField, disp: DispersionRelation, k, t: float = 0.0) -> np.ndarray:
    """k-gradient of the evolved amplitude at ``k``."""
    return field.spectral_gradient(disp, k, t)
