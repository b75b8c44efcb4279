"""Named invariant suite run by ``wavekin check``.

Each check reports a residual and the tolerance it was held to.  Status is
one of ``pass``, ``fail``, ``expected-violation`` (the identity is not
supposed to hold for this dispersion and indeed does not) or ``n/a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import IMAG_TOL, KinematicState, angle_between

TOLERANCES = {
    "ehrenfest-quadratic": 1e-10,
    "relativistic-energy-centroid": 1e-12,
    "boost-conservation": 1e-8,
    "am-ext-energy-conservation": 1e-10,
    "am-ext-probability-rate": 1e-10,
    "subluminality": 0.0,
    "centroid-linearity": 1e-9,
    "centroid-velocity": 1e-10,
    "free-evolution-conservation": 1e-10,
    "quadrature-consistency": IMAG_TOL,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    residual: float
    tol: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def _status(residual: float, tol: float, must_hold: bool) -> str:
    if residual <= tol:
        return "pass"
    return "fail" if must_hold else "expected-violation"


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def line_fit_residual(ts, ys) -> float:
    """Max absolute residual of a per-component least-squares line through ``ys(ts)``."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float).reshape(len(ts), -1)
    design = np.stack([np.ones_like(ts), ts], axis=1)
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(np.max(np.abs(design @ coef - ys)))


def run_checks(states: list[KinematicState], disp, tol: float | None = None) -> list[CheckResult]:
    """Evaluate every invariant on a trajectory.  ``tol`` overrides all tolerances."""
    tols = {k: (v if tol is None else tol) for k, v in TOLERANCES.items()}
    s0, s1 = states[0], states[-1]
    ts = [s.t for s in states]
    rel = disp.relativistic
    out = []

    name = "ehrenfest-quadratic"
    if disp.kind == "quadratic":
        r = max(_rel(s.v_group, s.p_mean / disp.m) for s in states)
        out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name], "|<v_g> - <p>/m| / |<p>/m|"))
    else:
        r = angle_between(s0.v_group, s0.p_mean)
        out.append(CheckResult(name, _status(r, tols[name], False), r, tols[name],
                               "angle(<v_g>, <p>) in rad; collinearity only guaranteed for quadratic"))

    name = "relativistic-energy-centroid"
    c2 = disp.c**2
    r = max(_rel(s.v_energy, c2 * s.p_mean / s.E_mean) for s in states)
    out.append(CheckResult(name, _status(r, tols[name], rel), r, tols[name], "|v_E - c^2<p>/<E>| / |c^2<p>/<E>|"))

    name = "boost-conservation"
    r = max(float(np.max(np.abs(s.N_boost - s0.N_boost))) for s in states)
    out.append(CheckResult(name, _status(r, tols[name], rel), r, tols[name], "max_t |N(t) - N(t0)|"))

    name = "am-ext-energy-conservation"
    r = max(float(np.max(np.abs(s.L_ext_energy - s0.L_ext_energy))) for s in states)
    out.append(CheckResult(name, _status(r, tols[name], rel), r, tols[name], "max_t |L_ext'(t) - L_ext'(t0)|"))

    name = "am-ext-probability-rate"
    rate = (s1.L_ext_prob - s0.L_ext_prob) / (s1.t - s0.t)
    r = float(np.max(np.abs(rate)))
    predicted = np.cross(s0.v_group, s0.p_mean)
    must = disp.kind == "quadratic"
    out.append(CheckResult(name, _status(r, tols[name], must), r, tols[name],
                           f"dL_ext/dt = {np.round(rate, 6).tolist()}, v_g x <p> = {np.round(predicted, 6).tolist()}"))

    name = "subluminality"
    speed = max(max(np.linalg.norm(s.v_group), np.linalg.norm(s.v_energy)) for s in states)
    if rel:
        r = max(0.0, float(speed - disp.c))
        out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name], f"max speed {speed:.12g}, c = {disp.c:g}"))
    else:
        out.append(CheckResult(name, "n/a", 0.0, tols[name], f"max speed {speed:.12g} (no light-cone bound)"))

    name = "centroid-linearity"
    r = max(line_fit_residual(ts, [s.r_prob for s in states]),
            line_fit_residual(ts, [s.r_energy for s in states]))
    out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name], "max line-fit residual of <r>, <r_E>"))

    name = "centroid-velocity"
    r = max(
        max(float(np.max(np.abs(s.r_prob - s0.r_prob - (s.t - s0.t) * s0.v_group))),
            float(np.max(np.abs(s.r_energy - s0.r_energy - (s.t - s0.t) * s0.v_energy))))
        for s in states
    )
    out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name], "centroid displacement vs t * velocity"))

    name = "free-evolution-conservation"
    r = 0.0
    for s in states:
        for a, b in ((s.norm, s0.norm), (s.p_mean, s0.p_mean), (s.E_mean, s0.E_mean), (s.L_total, s0.L_total)):
            scale = max(float(np.linalg.norm(b)), 1.0)
            r = max(r, float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / scale)
    out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name], "norm, <p>, <E>, <L> drift"))

    name = "quadrature-consistency"
    r = max(s.consistency for s in states)
    out.append(CheckResult(name, _status(r, tols[name], True), r, tols[name],
                           "normalized Im parts of <r> and <L>; shrinks with resolution"))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'invariant':<{width}}  {'status':<18}  {'residual':>10}  {'tol':>8}  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.status:<18}  {r.residual:>10.3e}  {r.tol:>8.1e}  {r.detail}")
    return "\n".join(lines)
