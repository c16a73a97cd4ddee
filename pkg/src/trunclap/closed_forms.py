"""Explicit radial solutions: members of the known closed-form families.

Families
--------
pkm_case1, pkm_case2, pkm_case3
    Solutions of ``P_k^-(D^2u) + mu u/r^2 = u^p`` near the origin. Each is
    written through ``w = u^(1-p)``, which is elementary in every case:

    * case 1 (``mu/k < 2/(p-1)``): ``w = c r^beta - r^2 / (2k/(p-1) - mu)``
    * case 2 (``mu/k = 2/(p-1)``): ``w = r^2 (c + (p-1)/k * (-ln r))``
    * case 3 (``mu/k > 2/(p-1)``): ``w = c r^beta + r^2 / (mu - 2k/(p-1))``

    with ``beta = mu (p-1) / k``.
pkp_scaling
    ``K r^(-2/(p-1))`` for ``P_k^+`` whenever ``K`` is real and positive.
eigen_gamma2
    ``-ln r / r^((k-2)/2)``, the Hardy-type eigenfunction for ``gamma = 2``.
pkm_supersolution
    Positive solutions of ``P_k^-(D^2v) + mu v r^-gamma = 0`` for any ``mu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import RadialProfile, log_grid
from .operator import ProblemParams, RadialJet

__all__ = [
    "FAMILIES",
    "PKM_FAMILIES",
    "ClosedFormSolution",
    "NoExtensionError",
    "pkm_family",
    "pkm_closed_form",
    "pkm_solution_from_data",
    "pkm_limit_constant",
    "pkm_decreasing_radius",
    "eval_closed_form",
    "sample_closed_form",
    "representable_radius",
]

FAMILIES = (
    "pkm_case1",
    "pkm_case2",
    "pkm_case3",
    "pkp_scaling",
    "eigen_gamma2",
    "pkm_supersolution",
)
PKM_FAMILIES = FAMILIES[:3]

# relative tolerance for deciding mu/k == 2/(p-1)
CRITICAL_RTOL = 1e-12


class NoExtensionError(ValueError):
    """No member of the family through the given datum reaches the origin."""


@dataclass(frozen=True)
class ClosedFormSolution:
    """A tagged closed-form solution with its free constant ``c``.

    ``valid_radius`` bounds the interval ``(0, valid_radius)`` on which the
    formula is positive and, for the ``P_k^-`` families, on which the branch
    condition ``u'' >= u'/r`` holds. ``edge`` records what limits it:
    ``"domain"`` (the unit ball or a datum radius) or ``"singular"``.
    """

    family: str
    params: ProblemParams
    c: float
    valid_radius: float
    edge: str = "domain"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params.to_dict(),
            "c": self.c,
            "valid_radius": self.valid_radius,
            "edge": self.edge,
        }


# -- P_k^- families ------------------------------------------------------------


def _pkm_constants(params: ProblemParams):
    params.require("mu", "p")
    k, mu, p = params.k, params.mu, params.p
    q = 1.0 / (p - 1.0)
    sigma = 2.0 * q
    beta = mu * (p - 1.0) / k
    return k, mu, p, q, sigma, beta


def pkm_family(params: ProblemParams) -> str:
    """Select the family from the sign of ``2/(p-1) - mu/k``."""
    k, mu, p, q, sigma, beta = _pkm_constants(params)
    gap = sigma - mu / k
    if abs(gap) <= CRITICAL_RTOL * sigma:
        return "pkm_case2"
    return "pkm_case1" if gap > 0 else "pkm_case3"


def _pkm_w(family: str, params: ProblemParams, c: float, r):
    """``w = u^(1-p)`` with its first two derivatives."""
    k, mu, p, q, sigma, beta = _pkm_constants(params)
    r = np.asarray(r, dtype=float)
    if family == "pkm_case1":
        d1 = 2.0 * k / (p - 1.0) - mu
        w = c * r**beta - r**2 / d1
        dw = c * beta * r ** (beta - 1.0) - 2.0 * r / d1
        d2w = c * beta * (beta - 1.0) * r ** (beta - 2.0) - 2.0 / d1
    elif family == "pkm_case2":
        a = (p - 1.0) / k
        bracket = c - a * np.log(r)
        w = r**2 * bracket
        dw = r * (2.0 * bracket - a)
        d2w = 2.0 * bracket - 3.0 * a
    elif family == "pkm_case3":
        d3 = mu - 2.0 * k / (p - 1.0)
        w = c * r**beta + r**2 / d3
        dw = c * beta * r ** (beta - 1.0) + 2.0 * r / d3
        d2w = c * beta * (beta - 1.0) * r ** (beta - 2.0) + 2.0 / d3
    else:  # pragma: no cover - guarded by callers
        raise ValueError(family)
    return w, dw, d2w


def _pkm_valid_radius(family: str, params: ProblemParams, c: float):
    """Largest ``rho <= 1`` with positivity and ``u'' >= u'/r`` on ``(0, rho)``."""
    k, mu, p, q, sigma, beta = _pkm_constants(params)
    if family == "pkm_case1":
        if not c > 0:
            raise NoExtensionError("case 1 needs c > 0 for positivity near the origin")
        d1 = 2.0 * k / (p - 1.0) - mu
        # w > 0  <=>  r^(2-beta) < c d1; the branch condition holds wherever w > 0
        rho = (c * d1) ** (1.0 / (2.0 - beta))
    elif family == "pkm_case2":
        a = (p - 1.0) / k
        rho = math.exp(c / a) if c / a < 700 else math.inf
    else:
        d3 = mu - 2.0 * k / (p - 1.0)
        if c < 0:
            rho = (1.0 / (-c * d3)) ** (1.0 / (beta - 2.0))
        elif c == 0:
            rho = math.inf
        else:
            # (u'' - u'/r) has the sign of Q(x), x = r^(beta-2), Q quadratic
            qa = c * c * beta * (q * beta + 2.0)
            qb = c * beta * (4.0 * q + 6.0 - beta) / d3
            qc = 4.0 * (q + 1.0) / d3**2
            disc = qb * qb - 4.0 * qa * qc
            rho = math.inf
            if qb < 0 and disc >= 0:
                root = (-qb - math.sqrt(disc)) / (2.0 * qa)
                rho = root ** (1.0 / (beta - 2.0))
    if rho > 1.0:
        return 1.0, "domain"
    return rho, "singular"


def pkm_decreasing_radius(sol: ClosedFormSolution) -> float:
    """Largest ``r <= valid_radius`` with ``u' <= 0`` on ``(0, r]``.

    ``u = w^(-q)`` decreases exactly where ``w' >= 0``. This can end before
    the validity radius, e.g. case 1 turns at ``(beta/2)^(1/(2-beta))`` times
    the radius where ``w`` vanishes.
    """
    if sol.family not in PKM_FAMILIES:
        raise ValueError("defined for the P_k^- families only")
    k, mu, p, q, sigma, beta = _pkm_constants(sol.params)
    c = sol.c
    if sol.family == "pkm_case1":
        d1 = 2.0 * k / (p - 1.0) - mu
        turn = (0.5 * c * beta * d1) ** (1.0 / (2.0 - beta))
    elif sol.family == "pkm_case2":
        # bracket c - a ln r >= a/2
        a = (p - 1.0) / k
        x = c / a - 0.5
        turn = math.exp(x) if x < 700 else math.inf
    elif c >= 0:
        turn = math.inf
    else:
        d3 = mu - 2.0 * k / (p - 1.0)
        turn = (2.0 / (-c * beta * d3)) ** (1.0 / (beta - 2.0))
    return min(turn, sol.valid_radius)


def pkm_closed_form(params: ProblemParams, c: float, family: Optional[str] = None) -> ClosedFormSolution:
    """The ``P_k^-`` solution with free constant ``c`` (family from the params)."""
    params.require_degenerate()
    if params.k < 2:
        raise ValueError("the P_k^- classification needs k >= 2")
    selected = pkm_family(params)
    if family is not None and family != selected:
        raise ValueError(f"parameters select {selected}, not {family}")
    rho, edge = _pkm_valid_radius(selected, params, float(c))
    return ClosedFormSolution(selected, params, float(c), rho, edge)


def pkm_solution_from_data(params: ProblemParams, r0: float, u0: float) -> ClosedFormSolution:
    """The ``P_k^-`` closed form through ``(r0, u0)``.

    The constant ``c`` follows from ``w(r0) = u0^(1-p)``; in case 1 this is the
    expression ``c = r0^(2-beta)/(2k/(p-1)-mu) + (u0 r0^(mu/k))^(1-p)``.
    The validity radius is capped at ``r0``.
    """
    if not (0 < r0 < 1):
        raise ValueError("r0 must lie in (0, 1)")
    if not u0 > 0:
        raise ValueError("u0 must be positive")
    k, mu, p, q, sigma, beta = _pkm_constants(params)
    family = pkm_family(params)
    w0 = u0 ** (1.0 - p)
    if family == "pkm_case1":
        d1 = 2.0 * k / (p - 1.0) - mu
        c = r0 ** (2.0 - beta) / d1 + (u0 * r0 ** (mu / k)) ** (1.0 - p)
    elif family == "pkm_case2":
        c = (p - 1.0) / k * math.log(r0) + 1.0 / (u0 ** (p - 1.0) * r0**2)
    else:
        d3 = mu - 2.0 * k / (p - 1.0)
        c = (w0 - r0**2 / d3) / r0**beta
    sol = pkm_closed_form(params, c)
    if sol.valid_radius <= 0:
        raise NoExtensionError("no solution through this datum extends to 0")
    if sol.valid_radius >= r0:
        return ClosedFormSolution(sol.family, params, c, r0, "domain")
    return sol


def pkm_limit_constant(sol: ClosedFormSolution):
    """Analytic limit data ``(exponent, log_power, constant)`` of a ``P_k^-`` family.

    The convention is ``u(r) r^exponent (-ln r)^log_power -> constant``.
    """
    if sol.family not in PKM_FAMILIES:
        raise ValueError("limit data is defined for the P_k^- families only")
    k, mu, p, q, sigma, beta = _pkm_constants(sol.params)
    if sol.family == "pkm_case1":
        # u r^(mu/k) = (c - r^(2-beta)/d1)^(-q)
        return mu / k, 0.0, sol.c ** (-q)
    if sol.family == "pkm_case2":
        return sigma, q, (k / (p - 1.0)) ** q
    return sigma, 0.0, (mu - 2.0 * k / (p - 1.0)) ** q


# -- evaluation ----------------------------------------------------------------


def eval_closed_form(sol: ClosedFormSolution, r, check_domain: bool = True) -> RadialJet:
    """Value, first and second derivative of a closed form at ``r``."""
    r = np.asarray(r, dtype=float)
    if check_domain and (np.any(r <= 0) or np.any(r > sol.valid_radius * (1 + 1e-12))):
        raise ValueError(f"r outside the validity interval (0, {sol.valid_radius}]")
    params = sol.params
    family = sol.family
    if family in PKM_FAMILIES:
        q = 1.0 / (params.p - 1.0)
        w, dw, d2w = _pkm_w(family, params, sol.c, r)
        if np.any(w <= 0):
            raise ValueError("closed form is not positive at the requested radii")
        u = w ** (-q)
        g = dw / w
        du = -q * u * g
        d2u = u * (q * (q + 1.0) * g * g - q * d2w / w)
    elif family == "pkp_scaling":
        sigma = 2.0 / (params.p - 1.0)
        u = sol.c * r ** (-sigma)
        du = -sigma * u / r
        d2u = sigma * (sigma + 1.0) * u / r**2
    elif family == "eigen_gamma2":
        a = 0.5 * (params.k - 2)
        ell = -np.log(r)
        u = ell * r ** (-a)
        du = -(r ** (-a - 1.0)) * (1.0 + a * ell)
        d2u = r ** (-a - 2.0) * ((a + 1.0) * (1.0 + a * ell) + a)
        u, du, d2u = sol.c * u, sol.c * du, sol.c * d2u
    elif family == "pkm_supersolution":
        k, gamma, mu = params.k, params.gamma, params.mu
        m = mu / k
        if gamma == 2.0:
            u = sol.c * r ** (-m)
            du = -m * u / r
            d2u = m * (m + 1.0) * u / r**2
        else:
            u = sol.c * np.exp(-m / (2.0 - gamma) * r ** (2.0 - gamma))
            du = -m * r ** (1.0 - gamma) * u
            d2u = (-m * (1.0 - gamma) * r ** (-gamma) + m * m * r ** (2.0 - 2.0 * gamma)) * u
    else:  # pragma: no cover
        raise ValueError(family)
    return RadialJet(r, u, du, d2u)


def representable_radius(sol: ClosedFormSolution, log_max: float = 650.0) -> float:
    """Smallest radius at which the closed form stays below ``exp(log_max)``.

    Only the exponential supersolution with ``gamma > 2`` overflows at
    moderate radii; every other family returns 0.
    """
    if sol.family == "pkm_supersolution" and sol.params.gamma > 2.0:
        k, gamma, mu = sol.params.k, sol.params.gamma, sol.params.mu
        coeff = mu / (k * (gamma - 2.0))
        return (log_max / coeff) ** (-1.0 / (gamma - 2.0))
    return 0.0


def sample_closed_form(
    sol: ClosedFormSolution, r_lo: float = 1e-6, r_hi: Optional[float] = None, per_decade: int = 50
) -> RadialProfile:
    """Sample a closed form on a log-spaced grid, with exact derivatives."""
    if r_hi is None:
        r_hi = sol.valid_radius if sol.edge == "domain" else 0.99 * sol.valid_radius
    r = log_grid(r_lo, r_hi, per_decade)
    jet = eval_closed_form(sol, r)
    meta = {"source": "closed_form"}
    meta.update(sol.to_dict())
    return RadialProfile(r, jet.u, jet.du, jet.d2u, meta)
