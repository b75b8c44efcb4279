"""Isotropic dispersion relations ``omega(|k|)`` and their group velocities.

Units have hbar = 1, so a wavevector is a momentum and a frequency is an
energy.  Every relation carries a light speed ``c``; for the non-relativistic
kinds it only enters the boost-momentum formula.

All evaluation methods are vectorized: wavevectors are arrays whose last
axis has length 3, radial arguments are arrays of ``|k|``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, SingularityError

#: Relative steps tried by the 5-point stencil that validates custom derivatives;
#: the best one is kept so neither truncation nor rounding dominates.
FD_REL_STEPS = (1e-2, 1e-3, 1e-4)
#: Accepted relative mismatch between a custom derivative and its finite difference.
CUSTOM_DERIVATIVE_RTOL = 1e-6
#: Number of log-spaced radii used to validate custom derivatives.
CUSTOM_CHECK_POINTS = 100


class OriginWarning(UserWarning):
    """Group velocity requested at k = 0 where it is undefined; the zero vector was used."""


def _as_vec3(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.shape[-1:] != (3,):
        raise DomainError(f"wavevector must have a trailing axis of length 3, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise DomainError(f"wavevector has non-finite components: {k}")
    return k


class DispersionRelation:
    """Base class.  Subclasses provide :meth:`radial` and :meth:`radial_derivative`."""

    kind: str = "abstract"
    c: float = 1.0
    #: True when omega * grad(omega) == c^2 k holds pointwise.
    relativistic: bool = False

    def radial(self, kappa):
        raise NotImplementedError

    def radial_derivative(self, kappa):
        raise NotImplementedError

    def _speed_over_kappa(self, kappa):
        """``omega'(kappa) / kappa``; NaN where singular."""
        kappa = np.asarray(kappa, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.radial_derivative(kappa)) / kappa

    def omega(self, k):
        """Frequency at wavevector(s) ``k``."""
        k = _as_vec3(k)
        return self.radial(np.linalg.norm(k, axis=-1))

    def group_velocity(self, k, *, origin: str = "raise"):
        """``grad_k omega = omega'(|k|) k / |k|``.

        ``origin`` controls what happens where the direction is undefined
        (``|k| = 0`` with a non-vanishing radial derivative): ``"raise"``
        raises :class:`SingularityError`, ``"zero"`` substitutes the zero
        vector and emits an :class:`OriginWarning`.
        """
        k = _as_vec3(k)
        kappa = np.linalg.norm(k, axis=-1)
        s = np.asarray(self._speed_over_kappa(kappa), dtype=float)
        bad = ~np.isfinite(s)
        if np.any(bad):
            if origin == "raise":
                raise SingularityError(
                    f"group velocity of {self.kind} dispersion is undefined at k = 0"
                )
            warnings.warn(
                f"{int(np.count_nonzero(bad))} node(s) at k = 0: {self.kind} group velocity set to zero",
                OriginWarning,
                stacklevel=2,
            )
            s = np.where(bad, 0.0, s)
        return k * s[..., None]

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Quadratic(DispersionRelation):
    """``omega = k^2 / 2m``."""

    m: float
    c: float = 1.0
    kind = "quadratic"

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 0):
            raise DomainError(f"quadratic dispersion needs m > 0, got {self.m}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"light speed must be positive, got {self.c}")

    def radial(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        return kappa * kappa / (2.0 * self.m)

    def radial_derivative(self, kappa):
        return np.asarray(kappa, dtype=float) / self.m

    def _speed_over_kappa(self, kappa):
        return np.full(np.shape(kappa), 1.0 / self.m)

    def to_dict(self):
        return {"kind": "quadratic", "m": self.m, "c": self.c}


@dataclass(frozen=True)
class RelativisticMassive(DispersionRelation):
    """``omega = sqrt(k^2 c^2 + m^2 c^4)``; ``m = 0`` reduces to :class:`Massless`."""

    m: float
    c: float = 1.0
    kind = "massive"
    relativistic = True

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0):
            raise DomainError(f"relativistic dispersion needs m >= 0, got {self.m}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"light speed must be positive, got {self.c}")

    def radial(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        c = self.c
        return np.sqrt(kappa * kappa * c * c + (self.m * c * c) ** 2)

    def radial_derivative(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.c * self.c * kappa / self.radial(kappa)
        return np.where(kappa == 0, 0.0 if self.m > 0 else self.c, d)

    def _speed_over_kappa(self, kappa):
        with np.errstate(divide="ignore"):
            return self.c * self.c / self.radial(kappa)

    def to_dict(self):
        return {"kind": "massive", "m": self.m, "c": self.c}


@dataclass(frozen=True)
class Massless(DispersionRelation):
    """``omega = |k| c``."""

    c: float = 1.0
    kind = "massless"
    relativistic = True

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"light speed must be positive, got {self.c}")

    @property
    def m(self) -> float:
        return 0.0

    def radial(self, kappa):
        return np.asarray(kappa, dtype=float) * self.c

    def radial_derivative(self, kappa):
        return np.full(np.shape(kappa), self.c)

    def _speed_over_kappa(self, kappa):
        with np.errstate(divide="ignore"):
            return self.c / np.asarray(kappa, dtype=float)

    def to_dict(self):
        return {"kind": "massless", "c": self.c}


@dataclass(frozen=True)
class CustomIsotropic(DispersionRelation):
    """User-supplied radial law ``omega(kappa)`` with its derivative.

    Both callables must accept and return numpy arrays.  The derivative is
    checked against central finite differences of ``omega`` at
    ``CUSTOM_CHECK_POINTS`` log-spaced radii in ``check_range`` when the
    object is built.
    """

    omega_fn: Callable
    domega_fn: Callable
    c: float = 1.0
    check_range: tuple[float, float] = (1e-3, 1e3)
    table: tuple | None = field(default=None, compare=False)
    kind = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"light speed must be positive, got {self.c}")
        lo, hi = self.check_range
        if not (0 < lo < hi):
            raise DomainError(f"check_range must satisfy 0 < lo < hi, got {self.check_range}")
        kappa = np.geomspace(lo, hi, CUSTOM_CHECK_POINTS)
        err = derivative_mismatch(self.omega_fn, self.domega_fn, kappa)
        worst = int(np.argmax(err))
        if not err[worst] < CUSTOM_DERIVATIVE_RTOL:
            raise DomainError(
                f"custom derivative disagrees with finite differences at kappa={kappa[worst]:.6g} "
                f"(relative error {err[worst]:.3g})"
            )
        w = np.asarray(self.omega_fn(kappa))
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("custom omega must be finite and positive for kappa > 0")

    @classmethod
    def from_table(cls, table, c: float = 1.0) -> "CustomIsotropic":
        """Cubic-spline dispersion through ``[[kappa, omega], ...]`` samples (kappa increasing)."""
        from scipy.interpolate import CubicSpline

        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
            raise DomainError("dispersion table must be a list of at least four [kappa, omega] pairs")
        kappa, w = arr[:, 0], arr[:, 1]
        if not (np.all(np.isfinite(arr)) and np.all(np.diff(kappa) > 0) and kappa[0] >= 0):
            raise DomainError("dispersion table needs finite values and strictly increasing kappa >= 0")
        spline = CubicSpline(kappa, w)
        dspline = spline.derivative()
        kmax = kappa[-1]

        def _checked(fn):
            def wrapped(x):
                x = np.asarray(x, dtype=float)
                if np.any(x > kmax * (1 + 1e-12)):
                    raise DomainError(f"|k| = {float(np.max(x)):.6g} beyond dispersion table (max {kmax:.6g})")
                return fn(x)

            return wrapped

        lo = kappa[1] if kappa[0] == 0 else kappa[0]
        hi = kmax / (1 + 2.5 * max(FD_REL_STEPS))
        return cls(
            _checked(spline), _checked(dspline), c=c, check_range=(lo, hi),
            table=tuple(map(tuple, arr.tolist())),
        )

    def radial(self, kappa):
        return np.asarray(self.omega_fn(np.asarray(kappa, dtype=float)), dtype=float)

    def radial_derivative(self, kappa):
        return np.asarray(self.domega_fn(np.asarray(kappa, dtype=float)), dtype=float)

    def _speed_over_kappa(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        d = self.radial_derivative(kappa)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = d / kappa
        # omega'(0) = 0 means a regular minimum: the velocity vanishes at the origin
        return np.where((kappa == 0) & (d == 0), 0.0, s)

    def to_dict(self):
        if self.table is None:
            raise DomainError("only table-backed custom dispersions are serializable")
        return {"kind": "custom", "c": self.c, "table": [list(r) for r in self.table]}


def derivative_mismatch(omega_fn, domega_fn, kappa) -> np.ndarray:
    """Relative error of ``domega_fn`` against 5-point central differences of ``omega_fn``."""
    kappa = np.asarray(kappa, dtype=float)
    d = np.asarray(domega_fn(kappa), dtype=float)
    best = np.full(kappa.shape, np.inf)
    for rel in FD_REL_STEPS:
        h = rel * kappa
        f = [np.asarray(omega_fn(kappa + j * h), dtype=float) for j in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        best = np.minimum(best, np.abs(d - fd))
    return best / np.maximum(np.abs(d), 1e-12)


def omega(disp: DispersionRelation, k) -> np.ndarray | float:
    """Frequency ``omega(|k|)``; returns a float for a single wavevector."""
    w = disp.omega(k)
    return float(w) if np.ndim(w) == 0 else w


def group_velocity(disp: DispersionRelation, k) -> np.ndarray:
    """Group velocity ``grad_k omega``; raises at the massless origin."""
    return disp.group_velocity(k)
