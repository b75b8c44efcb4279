"""Closed-form expectation values for well-separated narrow packets.

When every packet is many widths away from the others and from ``k = 0``,
interference terms drop out and an expectation value of any function of
``k`` becomes a weighted average of its values at the packet centers, with
weights ``|A_j|^2``.  The weights are divided by their sum, so amplitudes
need not be normalized.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionRelation
from .errors import DomainError

#: Below this, either validity metric marks the approximation as untrusted.
TRUST_THRESHOLD = 5.0


class ApproximationWarning(UserWarning):
    """Packets overlap or sit too close to the origin for the separated-packet formulas."""


@dataclass(frozen=True)
class SeparatedPacketSummary:
    weights: np.ndarray
    centers: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        k = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        d = np.asarray(self.deltas, dtype=float).reshape(-1)
        if len(w) == 0:
            raise DomainError("separated-packet summary needs at least one packet")
        if not (len(w) == len(k) == len(d)):
            raise DomainError("weights, centers and deltas must have matching lengths")
        if np.any(w < 0) or not w.sum() > 0:
            raise DomainError("weights must be non-negative with a positive sum")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", k)
        object.__setattr__(self, "deltas", d)

    @classmethod
    def from_field(cls, field) -> "SeparatedPacketSummary":
        comps = field.components
        return cls(
            [c.weight for c in comps], [c.k0 for c in comps], [c.delta for c in comps]
        )

    @property
    def separation(self) -> float:
        """Smallest ``|k_i - k_j| / max(delta_i, delta_j)``; ``inf`` for a single packet."""
        best = math.inf
        for i, j in itertools.combinations(range(len(self.weights)), 2):
            gap = np.linalg.norm(self.centers[i] - self.centers[j])
            best = min(best, gap / max(self.deltas[i], self.deltas[j]))
        return best

    @property
    def origin_distance(self) -> float:
        """Smallest ``|k_j| / delta_j``."""
        return float(np.min(np.linalg.norm(self.centers, axis=1) / self.deltas))

    @property
    def trusted(self) -> bool:
        return self.separation > TRUST_THRESHOLD and self.origin_distance > TRUST_THRESHOLD

    def frequencies(self, disp: DispersionRelation) -> np.ndarray:
        return disp.omega(self.centers)


def _warn_untrusted(summary: SeparatedPacketSummary) -> None:
    if not summary.trusted:
        warnings.warn(
            f"separated-packet approximation untrusted: separation {summary.separation:.3g}, "
            f"origin distance {summary.origin_distance:.3g} (need > {TRUST_THRESHOLD:g})",
            ApproximationWarning,
            stacklevel=3,
        )


def separated_expectation(summary: SeparatedPacketSummary, Q):
    """``sum_j w_j Q(k_j) / sum_j w_j`` for a function ``Q`` of one wavevector."""
    _warn_untrusted(summary)
    values = np.array([np.asarray(Q(k), dtype=float) for k in summary.centers])
    w = summary.weights
    out = np.tensordot(w, values, axes=1) / w.sum()
    return float(out) if out.ndim == 0 else out


def two_packet_velocities(summary: SeparatedPacketSummary, disp: DispersionRelation):
    """``(v_prob, v_energy)`` for any number of packets.

    Relativistic kinds use ``c^2 sum w k / omega / sum w`` and
    ``c^2 sum w k / sum w omega``; other kinds the general
    ``<grad omega>`` and ``<omega grad omega> / <omega>`` at the centers.
    """
    _warn_untrusted(summary)
    w = summary.weights
    k = summary.centers
    omega = summary.frequencies(disp)
    if disp.relativistic:
        c2 = disp.c**2
        v_prob = c2 * (w[:, None] * k / omega[:, None]).sum(axis=0) / w.sum()
        v_energy = c2 * (w[:, None] * k).sum(axis=0) / (w * omega).sum()
        return v_prob, v_energy
    vg = disp.group_velocity(k)
    v_prob = (w[:, None] * vg).sum(axis=0) / w.sum()
    v_energy = (w[:, None] * omega[:, None] * vg).sum(axis=0) / (w * omega).sum()
    return v_prob, v_energy
