"""Deterministic trapezoidal quadrature over 3D momentum-space boxes.

Integrands are evaluated slab by slab (see :meth:`GridSpec.slabs`), possibly
on several threads, and reduced with a fixed-shape pairwise tree.  The
slab partition depends only on the grid, so the result is bit-identical for
any thread count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import DomainError, UsageError
from .grid import GridSpec, Slab

log = logging.getLogger(__name__)

DEFAULT_POINTS = 96
DEFAULT_MARGIN = 6.0
MIN_MARGIN = 4.0
DEFAULT_MAX_N = 257


def pairwise_sum(x, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` by repeatedly adding the two halves of the array.

    The tree shape depends only on the length of the axis.
    """
    x = np.moveaxis(np.asarray(x), axis, -1)
    n = x.shape[-1]
    if n == 0:
        return np.zeros(x.shape[:-1], dtype=x.dtype)
    while n > 1:
        half = n // 2
        head = x[..., :half] + x[..., half : 2 * half]
        if n % 2:
            head = np.concatenate([head, x[..., 2 * half :]], axis=-1)
        x = head
        n = x.shape[-1]
    return x[..., 0]


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def integrate(spec: GridSpec, integrand: Callable[[Slab], Any], *, threads: int = 1):
    """Tensor-product trapezoidal integral of ``integrand`` over ``spec``.

    ``integrand(slab)`` returns values on the slab nodes with shape
    ``(..., nx_slab, ny, nz)``; any leading axes (vector components) are kept.
    Scalars come back as Python/NumPy scalars, vectors as arrays.
    """
    wx, wy, wz = (trapezoid_weights(m) for m in spec.n)
    wyz = wy[:, None] * wz[None, :]

    def work(slab: Slab):
        vals = np.asarray(integrand(slab))
        if vals.shape[-3:] != slab.shape:
            lead = vals.shape[:-3] if vals.ndim >= 3 else ()
            vals = np.broadcast_to(vals, lead + slab.shape)
        bad = ~np.isfinite(vals)
        if bad.any():
            where = tuple(int(i) for i in np.argwhere(bad)[0])
            i, j, l = where[-3:]
            i += slab.ix.start
            k = (float(slab.kx[i - slab.ix.start, 0, 0]), float(slab.ky[0, j, 0]), float(slab.kz[0, 0, l]))
            raise DomainError(
                f"non-finite integrand at node ({i}, {j}, {l}), k = {k}, component {where[:-3]}"
            )
        weighted = vals * (wx[slab.ix][:, None, None] * wyz)
        return pairwise_sum(weighted.reshape(vals.shape[:-3] + (-1,)), axis=-1)

    slabs = spec.slabs()
    if threads > 1 and len(slabs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, slabs))
    else:
        parts = [work(s) for s in slabs]
    total = pairwise_sum(np.stack(parts, axis=-1), axis=-1)
    return total * float(np.prod(spec.spacing))


def auto_grid(field, margin: float = DEFAULT_MARGIN, points_per_axis: int = DEFAULT_POINTS) -> GridSpec:
    """Bounding box of all packet centers widened by ``margin * delta_j`` per component."""
    from .field import GaussianSuperposition

    if not isinstance(field, GaussianSuperposition):
        raise UsageError("auto_grid needs a Gaussian superposition; grid fields carry their own grid")
    if not margin >= MIN_MARGIN:
        raise UsageError(f"margin must be at least {MIN_MARGIN:g} widths, got {margin}")
    centers = np.array([c.k0 for c in field.components])
    widths = np.array([c.delta for c in field.components])[:, None]
    lo = (centers - margin * widths).min(axis=0)
    hi = (centers + margin * widths).max(axis=0)
    return GridSpec(tuple(lo), tuple(hi), (points_per_axis,) * 3)


@dataclass
class ConvergenceReport:
    """Value at the finest level plus the max-norm change from the previous level."""

    observable: str
    value: Any
    error_estimate: float
    levels: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0

    def differences(self) -> list[float]:
        """Max-norm change between successive levels."""
        vals = [np.asarray(v, dtype=float) for _, v in self.levels]
        return [float(np.max(np.abs(b - a))) for a, b in zip(vals, vals[1:])]

    def to_dict(self) -> dict:
        def plain(v):
            v = np.asarray(v, dtype=float)
            return v.tolist() if v.ndim else float(v)

        return {
            "observable": self.observable,
            "value": plain(self.value),
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "tol": self.tol,
            "levels": [{"grid": g.to_dict(), "value": plain(v)} for g, v in self.levels],
        }


def converge(
    field,
    disp,
    observable: str | Callable,
    t: float = 0.0,
    tol: float = 1e-8,
    *,
    points_per_axis: int = DEFAULT_POINTS,
    margin: float = DEFAULT_MARGIN,
    max_n: int = DEFAULT_MAX_N,
    spec: GridSpec | None = None,
    threads: int = 1,
) -> ConvergenceReport:
    """Refine ``n -> 2n - 1`` until successive values differ by less than ``tol``.

    ``observable`` is a :class:`~wavekin.observables.KinematicState` field name
    or a callable ``f(field, disp, spec, t) -> value``.  Hitting ``max_n``
    returns an unconverged report instead of raising.
    """
    from dataclasses import fields

    from .observables import KinematicState, _assert_state, _state_from_moments, check_moments, moments

    if not tol > 0:
        raise UsageError(f"tol must be positive, got {tol}")
    last = {}
    if callable(observable):
        name = getattr(observable, "__name__", "custom")
        evaluate = observable
    else:
        name = observable
        known = [f.name for f in fields(KinematicState) if f.name != "t"]
        if name not in known:
            raise UsageError(f"unknown observable {name!r}; choose from {', '.join(known)}")

        def evaluate(f, d, s, tt):
            # coarse levels are allowed to fail the consistency checks; only
            # the level that is finally reported gets asserted
            m = moments(f, d, s, tt, threads=threads)
            last["m"] = m
            last["state"] = _state_from_moments(m, d, checked=False)
            return getattr(last["state"], name)

    if spec is None:
        spec = auto_grid(field, margin, points_per_axis)
    if max(spec.n) > max_n:
        raise UsageError(f"starting grid {spec.n} already exceeds the cap {max_n}")

    report = ConvergenceReport(name, None, math.inf, tol=tol)
    while True:
        value = evaluate(field, disp, spec, t)
        report.levels.append((spec, value))
        report.value = value
        if len(report.levels) > 1:
            report.error_estimate = report.differences()[-1]
            log.debug("converge %s at n=%s: change %.3g", name, spec.n, report.error_estimate)
            if report.error_estimate < tol:
                report.converged = True
                if last:
                    check_moments(last["m"])
                    _assert_state(last["state"], disp)
                return report
        nxt = spec.refined()
        if max(nxt.n) > max_n:
            return report
        spec = nxt
