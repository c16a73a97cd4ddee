"""Singular solutions of ``P_k^±(D^2u) + mu u/r^2 = u^p`` near the puncture.

Contents: the exponent algebra of the linearised ``P_k^+`` problem, the
explicit solution families, a branch-aware integrator for ``P_k^+`` and a
classifier for the behaviour of a sampled profile as ``r -> 0``.

The integrator works with ``phi(s) = r^(2/(p-1)) u(r)``, ``s = ln r``. In
these variables the semilinear equation

    u'' + (k-1) u'/r + mu u/r^2 = u^p

becomes the autonomous ODE

    phi'' + (k-2-2 sigma) phi' + (sigma^2 - (k-2) sigma + mu) phi = phi^p,

with ``sigma = 2/(p-1)``, so the scaling solution is the equilibrium
``phi = K`` and can be followed to high relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .closed_forms import (
    FAMILIES,
    PKM_FAMILIES,
    ClosedFormSolution,
    NoExtensionError,
    eval_closed_form,
    pkm_closed_form,
    pkm_family,
    pkm_limit_constant,
    pkm_decreasing_radius,
    pkm_solution_from_data,
    representable_radius,
    sample_closed_form,
)
from .mesh import RadialProfile, log_grid
from .operator import ProblemParams

__all__ = [
    "ExponentData",
    "compute_exponents",
    "ClosedFormSolution",
    "NoExtensionError",
    "FAMILIES",
    "PKM_FAMILIES",
    "pkm_family",
    "pkm_closed_form",
    "pkm_solution_from_data",
    "pkm_limit_constant",
    "pkm_decreasing_radius",
    "eval_closed_form",
    "sample_closed_form",
    "representable_radius",
    "pkp_scaling_solution",
    "RECIPES",
    "data_recipe",
    "stable_manifold_slope",
    "integrate_pkp_superlinear",
    "AsymptoticClass",
    "classify_asymptotics",
    "CLASSIFY_MIN_PER_DECADE",
]

CRITICAL_RTOL = 1e-12
RECIPES = ("scaling", "tau_minus", "tau_plus")
CLASSIFY_MIN_PER_DECADE = 30


@dataclass(frozen=True)
class ExponentData:
    """Exponents of the linearised ``P_k^+`` operator and critical powers.

    ``tau_minus <= tau_plus`` are the roots of ``x^2 - (k-2) x + mu``. ``K``
    is set only when ``p < p_star`` or ``p > p_star_star`` and ``K_bar`` only
    when ``p = p_star_star``.
    """

    tau_minus: float
    tau_plus: float
    p_star: float
    p_star_star: float
    scaling: Optional[float] = None
    K: Optional[float] = None
    K_bar: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "tau_minus": self.tau_minus,
            "tau_plus": self.tau_plus,
            "p_star": self.p_star,
            "p_star_star": self.p_star_star,
            "scaling": self.scaling,
            "K": self.K,
            "K_bar": self.K_bar,
        }


def compute_exponents(params: ProblemParams) -> ExponentData:
    """Exponents ``tau^±``, critical powers and, when defined, ``K`` and ``K_bar``.

    Raises
    ------
    ValueError
        Unless ``k >= 3`` and ``0 < mu < ((k-2)/2)^2``.
    """
    params.require("mu")
    k, mu = params.k, params.mu
    if k < 3:
        raise ValueError("the exponents tau^± need k >= 3")
    half = 0.5 * (k - 2)
    disc = half * half - mu
    if not disc > 0:
        raise ValueError(f"need 0 < mu < ((k-2)/2)^2 = {half * half}")
    root = math.sqrt(disc)
    tau_minus, tau_plus = half - root, half + root
    p_star = 1.0 + 2.0 / tau_plus
    p_star_star = 1.0 + 2.0 / tau_minus
    if params.p is None:
        return ExponentData(tau_minus, tau_plus, p_star, p_star_star)
    p = params.p
    sigma = 2.0 / (p - 1.0)
    K = K_bar = None
    if abs(p - p_star_star) <= CRITICAL_RTOL * p_star_star:
        K_bar = (tau_minus * root) ** (tau_minus / 2.0)
    elif p < p_star or p > p_star_star:
        K = ((sigma - tau_plus) * (sigma - tau_minus)) ** (1.0 / (p - 1.0))
    return ExponentData(tau_minus, tau_plus, p_star, p_star_star, sigma, K, K_bar)


def pkp_scaling_solution(params: ProblemParams) -> ClosedFormSolution:
    """The exact solution ``K r^(-2/(p-1))`` of the ``P_k^+`` problem.

    Its branch indicator ``u'' - u'/r = sigma (sigma+2) u / r^2`` is positive,
    so ``P_k^+`` acts as ``u'' + (k-1) u'/r`` on it.
    """
    params.require("mu", "p")
    params.require_degenerate()
    ex = compute_exponents(params)
    if ex.K is None:
        raise ValueError("K is real and positive only for p < p* or p > p**")
    return ClosedFormSolution("pkp_scaling", params, ex.K, 1.0, "domain")


# -- integration ------------------------------------------------------------


def _coefficients(params):
    k, mu, p = params.k, params.mu, params.p
    sigma = 2.0 / (p - 1.0)
    return sigma, k - 2.0 - 2.0 * sigma, sigma * sigma - (k - 2.0) * sigma + mu


def _to_scaled(params, r0, u0, du0):
    sigma = 2.0 / (params.p - 1.0)
    phi = r0**sigma * u0
    return phi, r0**sigma * (r0 * du0 + sigma * u0)


def _from_scaled(params, s, phi, dphi):
    """``(r, u, u', u'')`` from the scaled state; ``u''`` from the semilinear law."""
    k, mu, p = params.k, params.mu, params.p
    sigma = 2.0 / (p - 1.0)
    r = np.exp(s)
    scale = r ** (-sigma)
    u = scale * phi
    du = scale * (dphi - sigma * phi) / r
    # u^p = r^(-sigma-2) phi^p: combine in scaled form so no term overflows alone
    inner = np.abs(phi) ** p * np.sign(phi) - mu * phi - (k - 1.0) * (dphi - sigma * phi)
    d2u = scale / r**2 * inner
    return r, u, du, d2u


def _unstable_projection(params, K, phi, dphi):
    """Coefficient of the mode that grows toward the origin, linearised at ``K``."""
    sigma, b, a = _coefficients(params)
    c0 = (1.0 - params.p) * a  # linearised zeroth-order coefficient, < 0
    disc = math.sqrt(b * b - 4.0 * c0)
    rho_decay, rho_grow = (-b + disc) / 2.0, (-b - disc) / 2.0
    eta = phi - K
    return (dphi - rho_decay * eta) / (rho_grow - rho_decay)


def _integrate_scaled(params, s0, s1, y0, t_eval=None, rtol=1e-10, atol=1e-12,
                      blowup=1e10, dense=False):
    sigma, b, a = _coefficients(params)
    p = params.p

    def rhs(s, y):
        phi, dphi = y
        return [dphi, abs(phi) ** p * math.copysign(1.0, phi) - b * dphi - a * phi]

    def u_zero(s, y):
        return y[0]

    u_zero.terminal = True

    def too_large(s, y):
        return y[0] - blowup

    too_large.terminal = True

    def branch(s, y):
        phi, dphi = y
        d2phi = abs(phi) ** p * math.copysign(1.0, phi) - b * dphi - a * phi
        return d2phi - (2.0 * sigma + 2.0) * dphi + sigma * (sigma + 2.0) * phi

    return solve_ivp(rhs, (s0, s1), y0, method="DOP853", rtol=rtol, atol=atol,
                     t_eval=t_eval, events=[branch, u_zero, too_large], dense_output=dense)


def integrate_pkp_superlinear(
    params: ProblemParams,
    r0: float,
    u0: float,
    du0: float,
    r_end: float,
    per_decade: int = 50,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    blowup: float = 1e10,
) -> RadialProfile:
    """Integrate ``P_k^+(D^2u) + mu u/r^2 = u^p`` from ``r0`` to ``r_end``.

    The solution is followed on the branch ``u'' >= u'/r``, where ``P_k^+``
    reduces to the semilinear operator. The branch indicator is monitored at
    every step; if it changes sign the first crossing is logged in
    ``meta["events"]`` and integration continues with the semilinear law
    (past that radius the profile no longer solves the ``P_k^+`` problem).

    ``atol`` is taken relative to ``min(1, r0^(2/(p-1)) u0)``.

    The integration stops early, returning the partial profile, when ``u``
    reaches 0, when ``r^(2/(p-1)) u`` exceeds ``blowup``, or when the step
    size collapses. ``meta["status"]`` is ``"completed"``, ``"u_zero"``,
    ``"blowup"`` or ``"solver_failure"``.
    """
    params.require("mu", "p")
    params.require_degenerate()
    compute_exponents(params)  # validates k >= 3 and mu
    if not u0 > 0:
        raise ValueError("u0 must be positive")
    if not (r0 > 0 and r_end > 0 and r0 != r_end):
        raise ValueError("need positive, distinct r0 and r_end")
    s0, s1 = math.log(r0), math.log(r_end)
    lo, hi = sorted((r0, r_end))
    radii = log_grid(lo, hi, per_decade)
    if s1 < s0:
        radii = radii[::-1]
    grid = np.log(radii)
    grid[0], grid[-1] = s0, s1
    y0 = list(_to_scaled(params, r0, u0, du0))
    # absolute tolerance in units of the scaled datum, so small data keep
    # their relative accuracy
    atol_eff = atol * min(1.0, abs(y0[0]))
    sol = _integrate_scaled(params, s0, s1, y0, t_eval=grid, rtol=rtol, atol=atol_eff,
                            blowup=blowup * max(1.0, abs(y0[0])))

    events = []
    crossing = sol.t_events[0]
    if crossing.size:
        events.append({"event": "branch_crossing", "r": float(math.exp(crossing[0]))})
    status = "completed"
    if sol.t_events[1].size:
        status = "u_zero"
        events.append({"event": "u_zero", "r": float(math.exp(sol.t_events[1][0]))})
    elif sol.t_events[2].size:
        status = "blowup"
        events.append({"event": "blowup", "r": float(math.exp(sol.t_events[2][0]))})
    elif sol.status == -1:
        status = "solver_failure"
        events.append({"event": "solver_failure", "r": float(math.exp(sol.t[-1])) if sol.t.size
                       else float(r0), "message": sol.message})

    s, phi, dphi = sol.t, sol.y[0], sol.y[1]
    keep = phi > 0
    s, phi, dphi = s[keep], phi[keep], dphi[keep]
    r, u, du, d2u = _from_scaled(params, s, phi, dphi)
    r = radii[: sol.t.size][keep]  # exact grid radii rather than exp(log(r))
    order = np.argsort(r)
    meta = {
        "source": "integrate_pkp",
        "status": status,
        "events": events,
        "r0": r0,
        "u0": u0,
        "du0": du0,
        "r_end": r_end,
    }
    return RadialProfile(r[order], u[order], du[order], d2u[order], meta)


def stable_manifold_slope(params: ProblemParams, r0: float, u0: float, r_end: float = 1e-4,
                          span: float = 20.0) -> float:
    """``u'(r0)`` putting ``(r0, u0)`` on the solution asymptotic to the scaling one.

    Linearised at ``phi = K`` the scaled ODE has one mode decaying and one
    growing toward the origin. The slope is found by Brent's method on the
    coefficient of the growing mode at ``r_end`` (trajectories that reach
    zero or blow up first are assigned the matching sign).
    """
    ex = compute_exponents(params)
    if ex.K is None:
        raise ValueError("the scaling solution exists only for p < p* or p > p**")
    K = ex.K
    sigma = ex.scaling
    phi0 = r0**sigma * u0
    s0, s1 = math.log(r0), math.log(r_end)

    def grow_coefficient(dphi0):
        sol = _integrate_scaled(params, s0, s1, [phi0, dphi0], blowup=1e6 * max(K, phi0))
        if sol.t_events[1].size:
            return -1e3 * K
        if sol.t_events[2].size:
            return 1e3 * K
        return _unstable_projection(params, K, sol.y[0, -1], sol.y[1, -1])

    scale = max(K, phi0)
    lo, hi = -span * scale, span * scale
    f_lo, f_hi = grow_coefficient(lo), grow_coefficient(hi)
    if f_lo * f_hi > 0:
        raise ValueError("could not bracket the stable-manifold slope")
    dphi0 = brentq(grow_coefficient, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps,
                   maxiter=400)
    return (dphi0 / r0**sigma - sigma * u0) / r0


def data_recipe(
    params: ProblemParams,
    recipe: str,
    r0: float,
    u0: Optional[float] = None,
    amplitude: Optional[float] = None,
    r_end: float = 1e-4,
) -> Tuple[float, float]:
    """Initial data ``(u0, du0)`` at ``r0`` aimed at a chosen behaviour.

    ``scaling``
        The exact scaling datum, or, if ``u0`` is given, the slope that puts
        ``u0`` on the solution asymptotic to ``K r^(-2/(p-1))``.
    ``tau_minus`` / ``tau_plus``
        A small multiple of the linear mode ``r^(-tau^∓)``:
        ``du0 = -tau u0 / r0`` with ``u0 = amplitude r0^(-2/(p-1))`` unless
        ``u0`` is given. The default amplitude makes ``u^(p-1) r^2``, the
        size of the nonlinear term relative to the linear ones, equal to
        ``1e-8`` at ``r0``.

    The recipes are heuristics: which behaviour is realised depends on ``p``
    and is reported by the classifier, not guaranteed here.
    """
    if recipe not in RECIPES:
        raise ValueError(f"recipe must be one of {RECIPES}")
    params.require("mu", "p")
    ex = compute_exponents(params)
    sigma = ex.scaling
    if recipe == "scaling":
        if ex.K is None:
            raise ValueError("the scaling recipe needs p < p* or p > p**")
        if u0 is None:
            u0 = ex.K * r0 ** (-sigma)
            return u0, -sigma * u0 / r0
        return u0, stable_manifold_slope(params, r0, u0, r_end)
    tau = ex.tau_minus if recipe == "tau_minus" else ex.tau_plus
    if u0 is None:
        if amplitude is None:
            amplitude = 1e-8 ** (1.0 / (params.p - 1.0))
        u0 = amplitude * r0 ** (-sigma)
    return u0, -tau * u0 / r0


# -- classification -----------------------------------------------------------


@dataclass
class AsymptoticClass:
    """Behaviour ``u(r) ~ C r^(-exponent) (-ln r)^(-log_power)`` as ``r -> 0``.

    ``tag`` is one of ``exp_tau_minus``, ``exp_tau_plus``, ``exp_scaling``,
    ``exp_mu_over_k`` or ``log_corrected``; ``snapped`` tells whether
    ``(exponent, log_power)`` were snapped to an admissible pair or are the
    raw fit. ``fitted_exponent`` is the exponent measured in the window once
    the factor ``(-ln r)^(-log_power)`` is divided out; it differs from a
    snapped ``exponent`` by ``drift``. A classification is accepted when
    ``fit_r2 >= 0.999``.
    """

    tag: str
    exponent: float
    log_power: float
    leading_constant: float
    fit_r2: float
    window: Tuple[float, float]
    snapped: bool = True
    drift: float = 0.0
    candidates: dict = field(default_factory=dict)
    fitted_exponent: float = math.nan

    R2_ACCEPT = 0.999

    @property
    def accepted(self) -> bool:
        return self.fit_r2 >= self.R2_ACCEPT

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "exponent": float(self.exponent),
            "log_power": float(self.log_power),
            "leading_constant": float(self.leading_constant),
            "fit_r2": float(self.fit_r2),
            "window": [float(self.window[0]), float(self.window[1])],
            "snapped": bool(self.snapped),
            "fitted_exponent": float(self.fitted_exponent),
        }


def _candidates(params: ProblemParams, sign: Optional[str]):
    """Admissible ``(tag, exponent, log_power)`` triples for these parameters."""
    out = []
    taus = None
    if params.mu is not None and params.k >= 3:
        try:
            taus = compute_exponents(params.replace(p=None))
        except ValueError:
            taus = None
    plus_ok = sign in (None, "plus", "+")
    minus_ok = sign in (None, "minus", "-")
    if taus is not None and plus_ok:
        out.append(("exp_tau_minus", taus.tau_minus, 0.0))
        out.append(("exp_tau_plus", taus.tau_plus, 0.0))
        out.append(("log_corrected", taus.tau_minus, taus.tau_minus / 2.0))
    if params.p is not None:
        sigma = 2.0 / (params.p - 1.0)
        out.append(("exp_scaling", sigma, 0.0))
        if minus_ok:
            out.append(("log_corrected", sigma, 1.0 / (params.p - 1.0)))
    if params.mu is not None and minus_ok:
        out.append(("exp_mu_over_k", params.mu / params.k, 0.0))
    return out


def _slope(x, y):
    xm = x - x.mean()
    return float(xm @ (y - y.mean()) / (xm @ xm))


def _aitken(values):
    a, b, c = values
    den = (c - b) - (b - a)
    if den == 0 or not math.isfinite(den):
        return c
    est = c - (c - b) ** 2 / den
    # accept only a modest correction of the last value
    if abs(est - c) > abs(c - a) or est <= 0:
        return c
    return est


def classify_asymptotics(
    profile: RadialProfile,
    params: ProblemParams,
    sign: Optional[str] = None,
    snap_tol: float = 0.02,
    decades: float = 2.0,
    skip_decades: float = 0.5,
) -> AsymptoticClass:
    """Identify the behaviour of ``u`` near the origin.

    The window is the last ``decades`` decades of the profile minus the
    final ``skip_decades``. For each admissible pair ``(alpha, beta)`` the
    drift of ``ln(u r^alpha (-ln r)^beta)`` against ``ln r`` is measured; the
    pair with the smallest drift is accepted if that drift is at most
    ``snap_tol * alpha``. Otherwise the raw least-squares fit is returned
    with tag ``log_corrected``: ``alpha`` from ``ln u`` against ``ln r``,
    then ``beta`` from ``ln(u r^alpha)`` against ``ln(-ln r)``.

    ``sign`` restricts the candidates to those of ``P_k^+`` or ``P_k^-``.

    Raises
    ------
    ValueError
        If the profile does not reach ``r <= 1e-4``, is sampled more coarsely
        than 30 points per decade, or is not positive in the window.
    """
    r, u = profile.r, profile.u
    if r.size < 3 or r[0] > 1e-4 * (1 + 1e-9):
        raise ValueError("profile must be sampled down to r <= 1e-4")
    r_lo = r[0] * 10.0**skip_decades
    r_hi = min(r[0] * 10.0**decades, 0.5)
    window = (r >= r_lo * (1 - 1e-12)) & (r <= r_hi * (1 + 1e-12))
    n_win = int(window.sum())
    span = math.log10(r_hi / r_lo)
    if span <= 0 or n_win < 3 or n_win < CLASSIFY_MIN_PER_DECADE * span:
        raise ValueError("classification needs at least 30 points per decade in the window")
    rw, uw = r[window], u[window]
    if np.any(uw <= 0):
        raise ValueError("profile must be positive in the classification window")
    x = np.log(rw)
    ell = -x
    log_u = np.log(uw)
    var_u = float(np.var(log_u))

    scores = {}
    best = None
    for tag, alpha, beta in _candidates(params, sign):
        log_s = log_u + alpha * x + beta * np.log(ell)
        drift = abs(_slope(x, log_s))
        rel = drift / alpha if alpha > 0 else math.inf
        scores[f"{tag}({alpha:.6g},{beta:.6g})"] = rel
        if best is None or rel < best[0]:
            best = (rel, tag, alpha, beta, log_s, drift)

    if best is not None and best[0] <= snap_tol:
        rel, tag, alpha, beta, log_s, drift = best
        snapped = True
    else:
        alpha = -_slope(x, log_u)
        beta = _slope(np.log(ell), log_u + alpha * x)
        if abs(beta) < 1e-3:
            beta = 0.0
        tag = "log_corrected"
        log_s = log_u + alpha * x + beta * np.log(ell)
        drift = abs(_slope(x, log_s))
        snapped = False
    fitted = alpha - _slope(x, log_s)

    s_vals = np.exp(log_s)
    if beta == 0.0:
        # three points a decade apart, ending at the bottom of the window
        picks = [np.log(rw[0]) + math.log(10.0) * j for j in (min(int(span), 2), 1, 0)]
        vals = np.interp(picks, x, log_s)
        constant = _aitken(np.exp(vals)) if span >= 2 else float(s_vals[0])
    else:
        # S^(-1/beta) is affine in 1/(-ln r) for the log-corrected laws
        y = s_vals ** (-1.0 / beta)
        z = 1.0 / ell
        slope = _slope(z, y)
        intercept = float(y.mean() - slope * z.mean())
        constant = intercept ** (-beta) if intercept > 0 else float(s_vals[0])
    r2 = 1.0 - float(np.var(log_s)) / var_u if var_u > 0 else 1.0
    return AsymptoticClass(tag, float(alpha), float(beta), float(constant), r2,
                           (float(rw[0]), float(rw[-1])), snapped, float(drift), scores,
                           float(fitted))
