"""Expectation values and centroid kinematics of a free wavepacket.

Every quantity is a ratio of trapezoidal integrals over the momentum grid.
One pass (:func:`moments`) integrates all densities at a given time; the
public functions pick out what they need.

Conventions
-----------
* Position operator ``i grad_k``; angular momentum ``-i k x grad_k``.
* The energy centroid is ``Re <psi| omega i grad_k |psi> / (norm <omega>)``.
  ``i grad_k`` is not symmetric under the ``omega``-weighted measure, so the
  raw integral carries an imaginary part equal to ``-norm <grad omega> / 2``;
  taking the real part is the symmetrized ordering ``(E r + r E) / 2``.
* Velocities come from their own integrals, never from differencing centroids.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .dispersion import DispersionRelation, OriginWarning
from .errors import DegenerateFieldError, NumericalConsistencyError
from .field import SpectralField, evolve
from .grid import GridSpec, Slab
from .quadrature import integrate

log = logging.getLogger(__name__)

#: Norms below this are treated as an empty field.
MIN_NORM = 1e-300
#: Normalized imaginary residue allowed in centroid and angular-momentum integrals.
IMAG_TOL = 1e-8
#: Relative size allowed for the k x grad(omega) term (vanishes for isotropic dispersion).
ISOTROPY_TOL = 1e-12
#: Relative slack on |v| <= c for rounding.
SUBLUMINAL_SLACK = 1e-12

# layout of the density stack integrated in one pass
_NORM, _E, _KV = 0, 1, 2
_P, _VG, _WVG, _R, _RE, _L, _KXV = (slice(3 + 3 * i, 6 + 3 * i) for i in range(7))
_NCOMP = 24


@dataclass(frozen=True)
class Moments:
    """Unnormalized integrals at one time."""

    t: float
    norm: float
    p: np.ndarray
    energy: float
    vg: np.ndarray
    omega_vg: np.ndarray
    r: np.ndarray  # complex
    r_energy: np.ndarray  # complex
    L: np.ndarray  # complex
    k_cross_vg: np.ndarray
    k_times_vg: float
    spec: GridSpec


def _densities(field: SpectralField, disp: DispersionRelation, t: float):
    def integrand(slab: Slab):
        K = slab.vectors()
        kappa = np.sqrt(K[0] ** 2 + K[1] ** 2 + K[2] ** 2)
        omega = disp.radial(kappa)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OriginWarning)
            vg = disp.group_velocity(np.moveaxis(K, 0, -1), origin="zero")
        vg = np.moveaxis(vg, -1, 0)
        psi0, grad0 = field.sample_static(slab)
        psi, grad = evolve(psi0, grad0, omega, vg, t)
        rho = (psi.real**2 + psi.imag**2)
        pos = 1j * np.conj(psi) * grad
        kxg = np.cross(K, grad, axis=0)
        out = np.empty((_NCOMP,) + slab.shape, dtype=complex)
        out[_NORM] = rho
        out[_P] = K * rho
        out[_E] = omega * rho
        out[_VG] = vg * rho
        out[_WVG] = omega * vg * rho
        out[_R] = pos
        out[_RE] = omega * pos
        out[_L] = -1j * np.conj(psi) * kxg
        out[_KXV] = np.cross(K, vg, axis=0) * rho
        out[_KV] = kappa * np.sqrt(vg[0] ** 2 + vg[1] ** 2 + vg[2] ** 2) * rho
        return out

    return integrand


def _singular_origin(spec: GridSpec, disp: DispersionRelation) -> bool:
    if not all(np.any(ax == 0.0) for ax in spec.axes()):
        return False
    return not np.isfinite(disp._speed_over_kappa(np.zeros(1)))[0]


def moments(field: SpectralField, disp: DispersionRelation, spec: GridSpec, t: float = 0.0,
            *, threads: int = 1) -> Moments:
    """Integrate every density needed by the observables at time ``t``."""
    if _singular_origin(spec, disp):
        warnings.warn("grid contains k = 0; group velocity there taken as zero", OriginWarning, stacklevel=2)
    raw = integrate(spec, _densities(field, disp, float(t)), threads=threads)
    norm = float(raw[_NORM].real)
    if not (np.isfinite(norm) and norm > MIN_NORM):
        raise DegenerateFieldError(f"field norm {norm:.3g} is too small to normalize")
    return Moments(
        t=float(t),
        norm=norm,
        p=raw[_P].real.copy(),
        energy=float(raw[_E].real),
        vg=raw[_VG].real.copy(),
        omega_vg=raw[_WVG].real.copy(),
        r=raw[_R].copy(),
        r_energy=raw[_RE].copy(),
        L=raw[_L].copy(),
        k_cross_vg=raw[_KXV].real.copy(),
        k_times_vg=float(raw[_KV].real),
        spec=spec,
    )


def _imag_residuals(m: Moments) -> dict[str, float]:
    """Normalized imaginary parts that vanish on an adequate grid."""
    return {
        "probability-centroid-imaginary": float(np.abs(m.r.imag).max() / m.norm),
        "energy-centroid-imaginary": float(np.abs(m.r_energy.imag + 0.5 * m.vg).max() / abs(m.energy)),
        "angular-momentum-imaginary": float(np.abs(m.L.imag).max() / m.norm),
    }


def _check_position_imag(m: Moments) -> None:
    imag = np.abs(m.r.imag) / m.norm
    if imag.max() >= IMAG_TOL:
        raise NumericalConsistencyError(
            "probability-centroid-imaginary",
            f"Im <r> = {imag.max():.3g} exceeds {IMAG_TOL:g}; enlarge or refine the grid",
        )


def _check_energy_imag(m: Moments) -> None:
    # Im part of <omega i grad> is -<grad omega>/2 by integration by parts; a
    # mismatch only means the real part is less accurate, so it is logged
    resid = _imag_residuals(m)["energy-centroid-imaginary"]
    if resid >= IMAG_TOL:
        log.warning("Im <r_E> deviates from -<v_g>/(2<E>) by %.3g; the energy centroid may be under-resolved", resid)


def _check_angular(m: Moments) -> None:
    imag = np.abs(m.L.imag).max() / m.norm
    if imag >= IMAG_TOL:
        raise NumericalConsistencyError(
            "angular-momentum-imaginary", f"Im <L> = {imag:.3g} exceeds {IMAG_TOL:g}"
        )
    iso = np.abs(m.k_cross_vg).max() / m.k_times_vg if m.k_times_vg > 0 else 0.0
    if iso > ISOTROPY_TOL:
        raise NumericalConsistencyError(
            "angular-momentum-time-independence", f"<k x grad omega> = {iso:.3g} relative, expected 0"
        )


def _energy_mean(m: Moments) -> float:
    if not m.energy > 0:
        raise DegenerateFieldError(f"<E> = {m.energy:.3g}; the energy centroid needs positive mean energy")
    return m.energy / m.norm


def scalar_moments(field, disp, spec, *, t: float = 0.0, threads: int = 1):
    """``(norm, <p>, <E>)``; all conserved, ``t`` only selects where they are sampled."""
    m = moments(field, disp, spec, t, threads=threads)
    return m.norm, m.p / m.norm, m.energy / m.norm


def probability_centroid(field, disp, spec, t: float = 0.0, *, threads: int = 1) -> np.ndarray:
    m = moments(field, disp, spec, t, threads=threads)
    _check_position_imag(m)
    return m.r.real / m.norm


def mean_group_velocity(field, disp, spec, *, threads: int = 1) -> np.ndarray:
    """``<grad omega>``, the rate of change of the probability centroid."""
    m = moments(field, disp, spec, 0.0, threads=threads)
    return m.vg / m.norm


def energy_centroid(field, disp, spec, t: float = 0.0, *, threads: int = 1) -> np.ndarray:
    m = moments(field, disp, spec, t, threads=threads)
    _check_energy_imag(m)
    return m.r_energy.real / m.norm / _energy_mean(m)


def energy_centroid_velocity(field, disp, spec, *, threads: int = 1) -> np.ndarray:
    """``<omega grad omega> / <omega>``; equals ``c^2 <p>/<E>`` for relativistic dispersion."""
    m = moments(field, disp, spec, 0.0, threads=threads)
    return m.omega_vg / m.norm / _energy_mean(m)


def boost_momentum(field, disp, spec, t: float = 0.0, *, threads: int = 1) -> np.ndarray:
    """``t <p> c - <r_E> <E> / c`` with the dispersion's light speed."""
    return kinematic_state(field, disp, spec, t, threads=threads).N_boost


def orbital_angular_momentum(field, disp, spec, t: float = 0.0, *, threads: int = 1) -> np.ndarray:
    m = moments(field, disp, spec, t, threads=threads)
    _check_angular(m)
    return m.L.real / m.norm


def decompose_angular_momentum(field, disp, spec, t: float = 0.0, centroid_kind: str = "energy",
                               *, threads: int = 1):
    """``(L_ext, L_int)`` about the probability or the energy centroid."""
    state = kinematic_state(field, disp, spec, t, threads=threads)
    if centroid_kind == "probability":
        return state.L_ext_prob, state.L_int_prob
    if centroid_kind == "energy":
        return state.L_ext_energy, state.L_int_energy
    raise ValueError(f"centroid_kind must be 'probability' or 'energy', got {centroid_kind!r}")


@dataclass(frozen=True)
class KinematicState:
    t: float
    norm: float
    p_mean: np.ndarray
    E_mean: float
    r_prob: np.ndarray
    r_energy: np.ndarray
    v_group: np.ndarray
    v_energy: np.ndarray
    L_total: np.ndarray
    N_boost: np.ndarray
    L_ext_prob: np.ndarray
    L_int_prob: np.ndarray
    L_ext_energy: np.ndarray
    L_int_energy: np.ndarray
    #: largest normalized imaginary residue of the <r> and <L> integrals;
    #: a grid-adequacy diagnostic, zero in exact arithmetic
    consistency: float = 0.0

    def as_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def check_moments(m: Moments) -> None:
    """Raise :class:`NumericalConsistencyError` if the grid is visibly inadequate."""
    _check_position_imag(m)
    _check_energy_imag(m)
    _check_angular(m)


def _state_from_moments(m: Moments, disp: DispersionRelation, checked: bool = True) -> KinematicState:
    if checked:
        check_moments(m)
    norm = m.norm
    E = _energy_mean(m)
    p = m.p / norm
    r = m.r.real / norm
    rE = m.r_energy.real / norm / E
    vg = m.vg / norm
    vE = m.omega_vg / norm / E
    L = m.L.real / norm
    c = disp.c
    N = m.t * p * c - rE * E / c
    Lx_p = np.cross(r, p)
    Lx_e = np.cross(rE, p)
    state = KinematicState(
        t=m.t, norm=norm, p_mean=p, E_mean=E, r_prob=r, r_energy=rE, v_group=vg, v_energy=vE,
        L_total=L, N_boost=N, L_ext_prob=Lx_p, L_int_prob=L - Lx_p, L_ext_energy=Lx_e,
        L_int_energy=L - Lx_e,
        consistency=max(v for k, v in _imag_residuals(m).items() if not k.startswith("energy")),
    )
    if checked:
        _assert_state(state, disp)
    return state


def _assert_state(s: KinematicState, disp: DispersionRelation) -> None:
    scale = max(np.abs(s.L_total).max(), np.abs(s.L_ext_prob).max(), np.abs(s.L_ext_energy).max(), 1e-300)
    for kind, ext, inn in (("probability", s.L_ext_prob, s.L_int_prob), ("energy", s.L_ext_energy, s.L_int_energy)):
        if np.abs(ext + inn - s.L_total).max() > 4 * np.finfo(float).eps * scale:
            raise NumericalConsistencyError(f"am-split-{kind}", "L_ext + L_int != L_total")
    if disp.relativistic:
        c = disp.c
        for name, v in (("v_group", s.v_group), ("v_energy", s.v_energy)):
            speed = float(np.linalg.norm(v))
            if speed > c * (1 + SUBLUMINAL_SLACK):
                raise NumericalConsistencyError("subluminality", f"|{name}| = {speed!r} exceeds c = {c!r}")


def kinematic_state(field, disp, spec, t: float = 0.0, *, threads: int = 1, checked: bool = True) -> KinematicState:
    """All observables at time ``t`` from a single quadrature pass.

    ``checked=False`` skips the consistency assertions; useful on coarse
    grids whose only purpose is a convergence estimate.
    """
    return _state_from_moments(moments(field, disp, spec, t, threads=threads), disp, checked)


def trajectory(field, disp, spec, t0: float, t1: float, steps: int, *, threads: int = 1) -> list[KinematicState]:
    """States at ``steps`` equally spaced times from ``t0`` to ``t1`` inclusive."""
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got {t0}, {t1}")
    if steps < 2:
        raise ValueError(f"need at least 2 steps, got {steps}")
    return [kinematic_state(field, disp, spec, float(t), threads=threads) for t in np.linspace(t0, t1, steps)]


def angle_between(a, b) -> float:
    """Angle in radians between two vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # atan2 form stays accurate for nearly parallel vectors
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))
