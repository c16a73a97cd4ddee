"""Falsifiable numerical checks of sign, convexity and comparison statements.

Every checker returns a :class:`CheckReport`. Violations are measured in
units of the local size of the quantity being tested (for instance ``u'`` is
compared with ``|u|/r + |u'|``), so profiles that grow like negative powers of
``r`` near the origin are judged on the same footing as bounded ones.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .mesh import RadialProfile
from .operator import (
    ProblemParams,
    RadialJet,
    _check_sign,
    eval_pk,
)

__all__ = [
    "CheckReport",
    "check_sign_lemma",
    "check_comparison",
    "check_convexity_structure",
    "check_profile_consistency",
    "run_suite",
    "NEIGHBORHOOD_NOTE",
]

DEFAULT_TOL = 1e-8
NEIGHBORHOOD_NOTE = (
    "neighborhood of the origin taken as (r_min, 10 r_min]; this radius is a convention"
)


@dataclass
class CheckReport:
    """Outcome of one check.

    ``passed`` is true exactly when ``worst_violation <= tolerance``. When the
    hypotheses of the underlying statement do not hold, ``applicable`` is
    false, the check counts as passed and ``note`` says why.
    """

    name: str
    passed: bool
    worst_violation: float
    location_r: float
    tolerance: float
    applicable: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("worst_violation", "location_r", "tolerance"):
            value = out[key]
            out[key] = None if value is None or not math.isfinite(value) else float(value)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _report(name, violation, r, tolerance, note="") -> CheckReport:
    violation = np.asarray(violation, dtype=float)
    if violation.size == 0:
        return CheckReport(name, True, 0.0, math.nan, tolerance, True, note or "empty profile")
    i = int(np.argmax(violation))
    worst = max(float(violation[i]), 0.0)
    return CheckReport(name, worst <= tolerance, worst, float(r[i]), tolerance, True, note)


def _inapplicable(name, tolerance, note) -> CheckReport:
    return CheckReport(name, True, 0.0, math.nan, tolerance, False, note)


def _require_derivatives(profile: RadialProfile):
    if not profile.has_derivatives:
        raise ValueError("this check needs a profile with du and d2u")


def _jet(profile: RadialProfile) -> RadialJet:
    return RadialJet(profile.r, profile.u, profile.du, profile.d2u)


def _slope_scale(profile):
    return np.abs(profile.u) / profile.r + np.abs(profile.du)


def _curvature_scale(profile):
    r = profile.r
    return np.abs(profile.u) / r**2 + np.abs(profile.du) / r + np.abs(profile.d2u)


def _safe_div(num, den):
    return num / np.where(den > 0, den, 1.0)


def check_sign_lemma(
    profile: RadialProfile,
    params: ProblemParams,
    sign: str,
    context: str,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Monotonicity forced by a one-sided bound on ``P_k^±(D^2 u)``.

    ``context="supersolution"`` means ``P_k^±(D^2u) <= 0``; ``"subsolution"``
    means ``>= 0``. For ``P_k^+`` supersolutions (and, by the duality
    ``P_k^+(-X) = -P_k^-(X)``, ``P_k^-`` subsolutions) the conclusion
    ``u' <= 0`` (resp. ``>= 0``) is global. In the other two cases it only
    holds near the origin, unless the inequality is strict everywhere; for
    ``k = 1`` only a constant sign of ``u'`` near the origin is asserted.
    """
    _require_derivatives(profile)
    sign = _check_sign(sign)
    if context not in ("supersolution", "subsolution"):
        raise ValueError("context must be 'supersolution' or 'subsolution'")
    name = f"sign_lemma[{sign},{context}]"
    jet = _jet(profile)
    op = np.asarray(eval_pk(params, jet, sign), dtype=float)
    scale2 = _curvature_scale(profile)
    rel_op = _safe_div(op, scale2)
    direction = -1.0 if context == "supersolution" else 1.0
    # hypothesis: direction * P <= 0 within tol
    if np.any(-direction * rel_op > tol):
        i = int(np.argmax(-direction * rel_op))
        return _inapplicable(
            name, tol, f"differential inequality fails at r={profile.r[i]:.6g}"
        )

    # u' must have sign `direction`: violation is the wrong-signed part
    rel_slope = _safe_div(profile.du, _slope_scale(profile))
    wrong = -direction * rel_slope
    global_case = (sign == "plus") == (context == "supersolution")
    if global_case:
        return _report(name, wrong, profile.r, tol)

    strict = np.all(-direction * rel_op < -tol)
    if strict and params.k >= 2:
        return _report(name, wrong, profile.r, tol, "strict inequality: global conclusion")
    near = profile.r <= 10.0 * profile.r[0]
    if params.k >= 2:
        return _report(name, wrong[near], profile.r[near], tol, NEIGHBORHOOD_NOTE)
    # k = 1: u' must not change sign near the origin
    s = rel_slope[near]
    positive = np.clip(s, 0, None)
    negative = np.clip(-s, 0, None)
    violation = np.full(s.shape, min(positive.max(initial=0.0), negative.max(initial=0.0)))
    return _report(name, violation, profile.r[near], tol, NEIGHBORHOOD_NOTE)


def check_convexity_structure(profile: RadialProfile, tol: float = DEFAULT_TOL) -> CheckReport:
    """``u' <= 0`` and ``u'' - u'/r >= 0`` at every node."""
    _require_derivatives(profile)
    r = profile.r
    slope = _safe_div(profile.du, _slope_scale(profile))
    branch = _safe_div(-(profile.d2u - profile.du / r), _curvature_scale(profile))
    violation = np.maximum(slope, branch)
    return _report("convexity_structure", violation, r, tol)


def check_profile_consistency(profile: RadialProfile, tol: float = 1e-6) -> CheckReport:
    """Stored values agree with the stored derivatives between nodes.

    Each increment ``u_{i+1} - u_i`` is compared with the two-point Hermite
    quadrature of ``u'``, which is fourth-order accurate, relative to the
    local magnitude of ``u``.
    """
    if profile.du is None:
        raise ValueError("consistency needs at least du")
    r, u, du = profile.r, profile.u, profile.du
    h = np.diff(r)
    increment = 0.5 * h * (du[:-1] + du[1:])
    if profile.d2u is not None:
        increment += h * h / 12.0 * (profile.d2u[:-1] - profile.d2u[1:])
    mismatch = np.abs(np.diff(u) - increment)
    scale = np.maximum(np.abs(u[:-1]), np.abs(u[1:]))
    return _report("profile_consistency", _safe_div(mismatch, scale), r[1:], tol)


def check_comparison(
    u: RadialProfile,
    v: RadialProfile,
    params: ProblemParams,
    r0: float,
    c1: float,
    c2: float,
    sign: str = "plus",
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Ordering of a subsolution below a supersolution on ``(0, r0]``.

    ``u`` must satisfy ``P(u) + mu u/r^2 - u^p >= 0`` and ``v`` the reverse
    inequality (to relative accuracy ``tol``), both must obey
    ``u, v <= c2 r^(-2/(p-1))`` and ``v >= c1 r^(-2/(p-1))``, and
    ``u(r0) <= v(r0)``. If so, the conclusion ``u <= v`` is tested on every
    common node below ``r0``; otherwise the check is reported inapplicable.
    """
    from .operator import relative_residual_superlinear, residual_superlinear

    params.require("mu", "p")
    sign = _check_sign(sign)
    name = "comparison"
    _require_derivatives(u)
    _require_derivatives(v)
    if u.r.shape != v.r.shape or not np.allclose(u.r, v.r, rtol=1e-14, atol=0):
        raise ValueError("profiles must share their radii")
    below = u.r <= r0 * (1 + 1e-12)
    if not np.any(below):
        raise ValueError("no nodes at or below r0")
    r = u.r[below]
    uu, vv = u.restrict(r_hi=r[-1]), v.restrict(r_hi=r[-1])
    ju, jv = _jet(uu), _jet(vv)

    if np.any(uu.u <= 0) or np.any(vv.u <= 0):
        return _inapplicable(name, tol, "profiles must be positive")
    res_u = np.asarray(residual_superlinear(params, ju, sign))
    res_v = np.asarray(residual_superlinear(params, jv, sign))
    rel_u = np.asarray(relative_residual_superlinear(params, ju, sign))
    rel_v = np.asarray(relative_residual_superlinear(params, jv, sign))
    if np.any((res_u < 0) & (rel_u > tol)):
        return _inapplicable(name, tol, "u is not a subsolution")
    if np.any((res_v > 0) & (rel_v > tol)):
        return _inapplicable(name, tol, "v is not a supersolution")
    power = r ** (-2.0 / (params.p - 1.0))
    if np.any(vv.u < c1 * power * (1 - tol)):
        return _inapplicable(name, tol, "lower growth bound on v fails")
    if np.any(uu.u > c2 * power * (1 + tol)) or np.any(vv.u > c2 * power * (1 + tol)):
        return _inapplicable(name, tol, "upper growth bound fails")
    if uu.u[-1] > vv.u[-1] * (1 + tol):
        return _inapplicable(name, tol, "boundary data are not ordered at r0")

    excess = _safe_div(uu.u - vv.u, np.maximum(uu.u, vv.u))
    return _report(name, excess, r, tol)


def run_suite(
    profile: RadialProfile,
    params: Optional[ProblemParams] = None,
    sign: Optional[str] = None,
    checks: Optional[List[str]] = None,
    tol: float = DEFAULT_TOL,
    consistency_tol: float = 1e-6,
) -> List[CheckReport]:
    """Run the applicable checkers on a single profile.

    ``checks`` selects from ``consistency``, ``convexity`` and ``sign``; the
    sign lemma needs ``params`` and ``sign`` and treats the profile as a
    supersolution of ``P_k^±(D^2u) <= 0``.
    """
    checks = checks or ["consistency", "convexity"] + (["sign"] if params and sign else [])
    reports = []
    for check in checks:
        if check == "consistency":
            reports.append(check_profile_consistency(profile, consistency_tol))
        elif check == "convexity":
            reports.append(check_convexity_structure(profile, tol))
        elif check == "sign":
            if params is None or sign is None:
                raise ValueError("the sign check needs params and an operator sign")
            reports.append(check_sign_lemma(profile, params, sign, "supersolution", tol))
        else:
            raise ValueError(f"unknown check {check!r}")
    return reports
