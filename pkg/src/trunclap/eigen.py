"""Principal eigenvalues of ``P_k^+`` with a singular weight ``r^-gamma``.

On radial functions with ``u'' >= u'/r`` the operator reduces to
``u'' + (k-1) u'/r``, so the principal eigenvalue is that of the weighted
Sturm-Liouville problem

    -(r^(k-1) u')' = lam r^(k-1-gamma) u   on (0, 1),   u(1) = 0.

Four routes are provided: a conforming finite element discretisation of the
Rayleigh quotient (an upper bound on each mesh), shooting from a Frobenius
series at the origin, the monotone fixed-point iteration for the forced
problem, and the explicit Hardy-type pair for ``gamma = 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .closed_forms import ClosedFormSolution, eval_closed_form, sample_closed_form
from .mesh import GradedMesh, RadialProfile, build_mesh, power_integral, weighted_element_integrals
from .operator import ProblemParams, RadialJet, eval_pk_minus
from .verify import CheckReport, _inapplicable, _report, _safe_div

__all__ = [
    "EigenResult",
    "PicardResult",
    "EigenConvergenceError",
    "ShootingBracketError",
    "DEFAULT_R_MIN",
    "DEFAULT_N_ELEMS",
    "DEFAULT_GRADING",
    "default_mesh",
    "assemble_fem",
    "sturm_count",
    "solve_eigen_fem",
    "solve_eigen_shooting",
    "frobenius_coefficients",
    "picard_solve",
    "closed_form_eigen_gamma2",
    "pkm_supersolution",
    "parse_growth_certificate",
    "check_max_principle_pkm",
]

DEFAULT_R_MIN = 1e-8
DEFAULT_N_ELEMS = 4000
DEFAULT_GRADING = 0.87

R_START = 1e-6
ODE_TOL = 1e-10


class EigenConvergenceError(RuntimeError):
    """Inverse iteration did not settle within the iteration budget."""


class ShootingBracketError(ValueError):
    """The shooting bracket does not isolate the principal eigenvalue."""


@dataclass
class EigenResult:
    """An approximate principal eigenpair.

    The eigenfunction is positive on the sampled radii below 1, vanishes at
    ``r = 1`` and has maximum 1 (the explicit ``gamma = 2`` eigenfunction is
    unbounded and is reported with unit coefficient instead).
    """

    lam: float
    eigenfunction: RadialProfile
    method: str
    residual_sup: float
    iterations: int
    converged: bool
    params: Optional[ProblemParams] = None
    meta: dict = field(default_factory=dict)

    def to_dict(self, inline_profile: bool = True, profile_uri: Optional[str] = None) -> dict:
        out = {
            "lambda": float(self.lam),
            "method": self.method,
            "residual_sup": float(self.residual_sup),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if self.params is not None:
            out["params"] = self.params.to_dict()
        if self.meta:
            out["meta"] = self.meta
        if profile_uri is not None:
            out["profile"] = profile_uri
        elif inline_profile:
            out["profile"] = self.eigenfunction.to_csv()
        return out


def _check_eigen_params(params: ProblemParams, allow_degenerate: bool):
    params.require_degenerate()
    if params.gamma >= 2.0 and not allow_degenerate:
        raise ValueError(
            "gamma >= 2 has no positive principal eigenvalue on the punctured ball; "
            "pass allow_degenerate=True to study the truncated problem"
        )
    if params.gamma == 2.0 and params.k == 2:
        raise ValueError("gamma = 2 is only supported for k >= 3")


def default_mesh(r_min: float = DEFAULT_R_MIN, n_elems: int = DEFAULT_N_ELEMS,
                 grading: float = DEFAULT_GRADING) -> GradedMesh:
    return build_mesh(r_min, n_elems, grading)


# -- finite elements -----------------------------------------------------------


def assemble_fem(params: ProblemParams, mesh: GradedMesh):
    """Tridiagonal stiffness and mass matrices with ``u(1) = 0`` imposed.

    Returns ``(k_diag, k_off, m_diag, m_off)`` for the free nodes
    ``r_0 .. r_{n-1}``; ``r_min`` carries the natural boundary condition.
    When ``k > gamma`` the trial functions are continued by their constant
    value on ``(0, r_min)``; this adds ``r_min^(k-gamma)/(k-gamma)`` to the
    first mass entry and nothing to the stiffness, so the space stays
    conforming for the problem on the whole punctured ball.
    """
    h = mesh.widths
    stiff = weighted_element_integrals(mesh, params.k - 1.0).m0 / h**2
    mass = weighted_element_integrals(mesh, params.k - 1.0 - params.gamma)
    n = mesh.n_elems
    k_diag = np.zeros(n + 1)
    m_diag = np.zeros(n + 1)
    k_diag[:-1] += stiff
    k_diag[1:] += stiff
    m_diag[:-1] += mass.m_aa
    m_diag[1:] += mass.m_bb
    k_off = -stiff
    m_off = mass.m_ab
    if params.k > params.gamma:
        m_diag[0] += mesh.r_min ** (params.k - params.gamma) / (params.k - params.gamma)
    # drop the Dirichlet node r = 1
    return k_diag[:-1], k_off[:-1], m_diag[:-1], m_off[:-1]


def sturm_count(diag: np.ndarray, off: np.ndarray) -> int:
    """Number of negative eigenvalues of a symmetric tridiagonal matrix.

    Counts the negative pivots of its LDL^T factorisation (Sylvester's law of
    inertia); an exactly zero pivot is nudged to a tiny negative value.
    """
    count = 0
    pivot = 1.0
    tiny = np.finfo(float).tiny
    off_sq = np.concatenate([[0.0], np.asarray(off, float) ** 2])
    for d, e2 in zip(np.asarray(diag, float), off_sq):
        pivot = d - e2 / pivot if e2 else d
        if pivot == 0.0:
            pivot = -tiny
        if pivot < 0:
            count += 1
    return count


def _banded(diag, off):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def _tri_matvec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def _inverse_iteration(a_d, a_o, b_d, b_o, x, shift_policy, rayleigh, max_iter, rtol):
    """Inverse iteration on ``A x = lam B x``; returns ``(lam, x, iterations, converged)``."""
    lam_old = math.inf
    lam = math.nan
    for it in range(1, max_iter + 1):
        shift = shift_policy(it, lam)
        rhs = _tri_matvec(b_d, b_o, x)
        y = solve_banded((1, 1), _banded(a_d - shift * b_d, a_o - shift * b_o), rhs,
                         check_finite=False)
        y /= np.max(np.abs(y))
        x = y
        lam = rayleigh(x)
        if abs(lam - lam_old) <= rtol * abs(lam):
            return lam, x, it, True
        lam_old = lam
    return lam, x, max_iter, False


def _recover_derivatives(params, r, u, lam):
    """Nodal ``u'`` and ``u''`` from the integrated eigen-equation.

    ``r^(k-1) u'(r) = -lam I(r)`` with ``I(r) = int_0^r u t^(k-1-gamma) dt``,
    where ``u`` is taken constant on ``(0, r_min)`` when that integral
    converges.
    """
    k, gamma = params.k, params.gamma
    s = k - 1.0 - gamma
    mom = weighted_element_integrals(r, s)
    pieces = u[:-1] * mom.m_a + u[1:] * mom.m_b
    core = u[0] * r[0] ** (k - gamma) / (k - gamma) if k > gamma else 0.0
    integral = core + np.concatenate([[0.0], np.cumsum(pieces)])
    du = -lam * r ** (1.0 - k) * integral
    weight = r ** (-gamma)
    # u'' - u'/r written to keep its sign structure: lam r^-gamma (k r^(gamma-k) I - u)
    gap = lam * weight * (k * r ** (gamma - k) * integral - u)
    d2u = gap + du / r
    return du, d2u


def solve_eigen_fem(
    params: ProblemParams,
    mesh: Optional[GradedMesh] = None,
    max_iter: int = 500,
    rtol: float = 1e-12,
    allow_degenerate: bool = False,
) -> EigenResult:
    """Principal eigenvalue from piecewise-linear elements on a graded mesh.

    The stiffness and mass entries are exact integrals of the power weights,
    so the returned ``lam`` is the Rayleigh-Ritz value on this mesh: an upper
    bound for the variational eigenvalue of the problem truncated at
    ``r_min`` (natural condition there, ``u(1) = 0``).

    Parameters
    ----------
    params : ProblemParams
        ``k`` and ``gamma`` are used.
    mesh : GradedMesh, optional
        Defaults to ``r_min = 1e-8`` with 4000 elements, grading 0.87.
    allow_degenerate : bool
        Permit ``gamma >= 2``, where the eigenvalue of the truncated problem
        tends to 0 as ``r_min`` shrinks.
    """
    _check_eigen_params(params, allow_degenerate)
    mesh = mesh or default_mesh()
    k_d, k_o, m_d, m_o = assemble_fem(params, mesh)
    if np.any(m_d <= 0) or sturm_count(m_d, m_o) > 0:
        raise ValueError("mass matrix is not positive definite")

    scale = 1.0 / np.sqrt(m_d)
    a_d, a_o = k_d * scale**2, k_o * scale[:-1] * scale[1:]
    b_d, b_o = np.ones_like(m_d), m_o * scale[:-1] * scale[1:]

    def rayleigh_after_three(it, lam):
        return 0.0 if it <= 3 else lam

    # element form of the quotient: the assembled matvec loses digits to
    # cancellation on the tiny elements near r_min
    stiff_e = weighted_element_integrals(mesh, params.k - 1.0).m0 / mesh.widths**2
    mass_e = weighted_element_integrals(mesh, params.k - 1.0 - params.gamma)
    core_mass = m_d[0] - mass_e.m_aa[0]

    def rayleigh(x):
        v = np.concatenate([x * scale, [0.0]])
        va, vb = v[:-1], v[1:]
        num = np.sum(stiff_e * (vb - va) ** 2)
        den = np.sum(mass_e.m_aa * va * va + 2.0 * mass_e.m_ab * va * vb + mass_e.m_bb * vb * vb)
        den += core_mass * v[0] ** 2
        return float(num / den)

    x0 = np.ones_like(m_d)
    lam, x, iters, converged = _inverse_iteration(
        a_d, a_o, b_d, b_o, x0, rayleigh_after_three, rayleigh, max_iter, rtol
    )
    sturm_checked = converged and sturm_count(a_d - lam * (1 - 1e-9) * b_d,
                                              a_o - lam * (1 - 1e-9) * b_o) == 0
    if converged and not sturm_checked:
        # the Rayleigh shift locked onto a higher eigenvalue: isolate the lowest
        lo, hi = 0.0, lam
        while hi - lo > 1e-8 * hi:
            mid = 0.5 * (lo + hi)
            if sturm_count(a_d - mid * b_d, a_o - mid * b_o) == 0:
                lo = mid
            else:
                hi = mid
        lam, x, extra, converged = _inverse_iteration(
            a_d, a_o, b_d, b_o, x0, lambda it, _: lo, rayleigh, max_iter, rtol
        )
        iters += extra
    if not converged:
        raise EigenConvergenceError(
            f"inverse iteration did not converge in {max_iter} iterations (last lam={lam!r})"
        )

    v = x * scale
    v = v if v[np.argmax(np.abs(v))] > 0 else -v
    v /= v.max()
    # stiffness action in difference form, again to avoid cancellation
    w = np.concatenate([v, [0.0]])
    flux = stiff_e * np.diff(w)
    kv = -np.diff(np.concatenate([[0.0], flux]))[:v.size]
    mv = _tri_matvec(m_d, m_o, v)
    residual = float(np.max(np.abs(kv - lam * mv)) / (abs(lam) * np.max(np.abs(mv))))

    r = mesh.nodes
    u = np.concatenate([v, [0.0]])
    du, d2u = _recover_derivatives(params, r, u, lam)
    meta = {"r_min": float(mesh.r_min), "n_elems": mesh.n_elems, "grading": mesh.grading}
    profile = RadialProfile(r, u, du, d2u, dict(meta, source="fem"))
    return EigenResult(lam, profile, "fem", residual, iters, True, params, meta)


# -- shooting ------------------------------------------------------------------


def frobenius_coefficients(params: ProblemParams, lam: float, terms: int = 30) -> np.ndarray:
    """Coefficients ``a_n`` of the regular solution ``sum a_n r^(n(2-gamma))``.

    ``a_0 = 1`` and ``a_n = -lam a_(n-1) / (m (m + k - 2))`` with
    ``m = n (2 - gamma)``; the first correction is
    ``-lam / ((2-gamma)(k-gamma))``.
    """
    e = 2.0 - params.gamma
    coef = np.empty(terms)
    coef[0] = 1.0
    for n in range(1, terms):
        m = n * e
        coef[n] = -lam * coef[n - 1] / (m * (m + params.k - 2.0))
    return coef


def _frobenius_start(params, lam, r0):
    coef = frobenius_coefficients(params, lam)
    e = 2.0 - params.gamma
    powers = np.arange(coef.size) * e
    terms = coef * r0**powers
    u = float(np.sum(terms))
    du = float(np.sum(terms[1:] * powers[1:]) / r0)
    return u, du


def _shoot(params, lam, r_start, dense=False, t_eval=None):
    """Integrate the regular solution to ``r = 1``."""
    k, gamma = params.k, params.gamma
    u0, du0 = _frobenius_start(params, lam, r_start)
    if k >= 2:
        # s = ln r, state (u, r u')
        def rhs(s, y):
            return [y[1], -(k - 2.0) * y[1] - lam * math.exp((2.0 - gamma) * s) * y[0]]

        span = (math.log(r_start), 0.0)
        y0 = [u0, r_start * du0]
        ev = None if t_eval is None else np.log(t_eval)
    else:
        def rhs(r, y):
            return [y[1], -lam * r ** (-gamma) * y[0]]

        span = (r_start, 1.0)
        y0 = [u0, du0]
        ev = t_eval
    if ev is not None:
        ev = np.clip(ev, span[0], span[1])
    sol = solve_ivp(rhs, span, y0, method="DOP853", rtol=ODE_TOL, atol=ODE_TOL,
                    dense_output=dense, t_eval=ev)
    if not sol.success:  # pragma: no cover - DOP853 on a smooth linear ODE
        raise RuntimeError(sol.message)
    return sol


def _shoot_end(params, lam, r_start):
    return float(_shoot(params, lam, r_start).y[0, -1])


def solve_eigen_shooting(
    params: ProblemParams,
    lambda_bracket: Optional[Tuple[float, float]] = None,
    r_start: float = R_START,
    per_decade: int = 50,
) -> EigenResult:
    """Principal eigenvalue by shooting from the origin.

    The regular solution is started from its Frobenius series at
    ``r_start``, integrated with DOP853 (in ``ln r`` for ``k >= 2``, where the
    equation is autonomous in the leading order) and ``lam`` is found by
    Brent's method on the sign of ``u(1; lam)``.

    A bracket holding several eigenvalues is first narrowed by bisection on
    the number of zeros of ``u(.; lam)``, so the principal one is returned.

    Raises
    ------
    ShootingBracketError
        If the bracket lies entirely below the principal eigenvalue, or its
        lower end already lies above it.
    """
    _check_eigen_params(params, allow_degenerate=False)
    if params.k == 1 and params.gamma >= 1.0:
        raise ValueError("for k = 1 the regular series requires gamma < 1")
    if lambda_bracket is None:
        coarse = solve_eigen_fem(params, build_mesh(1e-6, 400, 0.8)).lam
        lambda_bracket = (0.8 * coarse, 1.2 * coarse)
    lo, hi = map(float, lambda_bracket)
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    calls = [0]
    grid = np.logspace(math.log10(r_start), 0.0, int(round(per_decade * -math.log10(r_start))) + 1)

    def zeros(lam):
        # sign changes of u on (r_start, 1]; by Sturm oscillation this counts
        # the eigenvalues below lam
        calls[0] += 1
        u = _shoot(params, lam, r_start, t_eval=grid).y[0]
        return int(np.count_nonzero(np.diff(np.sign(u)) != 0) + (u[-1] == 0.0))

    def end_value(lam):
        calls[0] += 1
        return _shoot_end(params, lam, r_start)

    z_lo, z_hi = zeros(lo), zeros(hi)
    if z_lo > 0:
        raise ShootingBracketError(
            f"u(r; {lo}) already has an interior zero: the bracket lies above the "
            "principal eigenvalue"
        )
    if z_hi == 0:
        raise ShootingBracketError(f"u(1; lam) has no sign change on [{lo}, {hi}]")
    # shrink until exactly one eigenvalue lies inside, then refine on u(1)
    while z_hi > 1:
        mid = 0.5 * (lo + hi)
        z_mid = zeros(mid)
        if z_mid == 0:
            lo = mid
        else:
            hi, z_hi = mid, z_mid
    lam = brentq(end_value, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)

    r = np.unique(np.concatenate([
        np.logspace(math.log10(r_start), 0.0,
                    int(round(per_decade * -math.log10(r_start))) + 1), [1.0]]))
    sol = _shoot(params, lam, r_start, t_eval=r)
    u = sol.y[0]
    deriv = sol.y[1] / r if params.k >= 2 else sol.y[1]
    if np.any(u[:-1] <= 0):
        first = r[np.argmax(u[:-1] <= 0)]
        raise ShootingBracketError(
            f"eigenfunction vanishes at r={first:.4g} < 1: the bracket is too wide"
        )
    peak = np.max(u)
    end = u[-1]
    u, deriv = u / peak, deriv / peak
    d2u = -lam * r ** (-params.gamma) * u - (params.k - 1.0) * deriv / r
    u[-1] = 0.0
    profile = RadialProfile(r, u, deriv, d2u, {"source": "shooting", "r_start": r_start})
    return EigenResult(lam, profile, "shooting", abs(end) / peak, calls[0], True, params,
                       {"bracket": [lo, hi], "r_start": r_start})


# -- fixed-point iteration -----------------------------------------------------


@dataclass
class PicardResult:
    """Outcome of the fixed-point iteration.

    ``status`` is ``"converged"``, ``"diverged"`` (iterates exceeded the
    blow-up threshold or stopped contracting) or ``"max_iter"``. ``profile``
    is the last iterate, with the exact derivatives of that iterate.
    """

    profile: RadialProfile
    status: str
    iterations: int
    increment: float
    sup_norm: float
    threshold: float
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self, inline_profile: bool = True) -> dict:
        out = {
            "status": self.status,
            "iterations": self.iterations,
            "increment": float(self.increment),
            "sup_norm": float(self.sup_norm),
            "threshold": float(self.threshold),
            "message": self.message,
        }
        if inline_profile:
            out["profile"] = self.profile.to_csv()
        return out


def _forcing_values(f, r):
    if isinstance(f, RadialProfile):
        return np.interp(r, f.r, f.u)
    if callable(f):
        return np.asarray(f(r), dtype=float) * np.ones_like(r)
    return np.full_like(r, float(f))


class _DoubleIntegral:
    """``T g (r) = -int_r^1 s^(1-k) int_0^s g t^(k-1-gamma) dt ds`` for nodal ``g``.

    ``g`` is linear on each element and constant below ``r_min``; all
    integrals of the resulting piecewise power functions are evaluated in
    closed form.
    """

    def __init__(self, params, r):
        k, gamma = params.k, params.gamma
        self.k, self.gamma, self.r = k, gamma, r
        a, b = r[:-1], r[1:]
        self.a, self.b, self.h = a, b, b - a
        e = k - gamma  # exponent of the inner antiderivative, > 0 here
        self.e = e
        self.inner0 = power_integral(a, b, e - 1.0)
        self.inner1 = power_integral(a, b, e)
        self.outer = [power_integral(a, b, 1.0 - k), power_integral(a, b, 1.0 - gamma),
                      power_integral(a, b, 2.0 - gamma)]

    def inner(self, g):
        """Nodal ``G(r) = int_0^r g t^(k-1-gamma) dt`` and the element slopes."""
        a, b, h = self.a, self.b, self.h
        slope = (g[1:] - g[:-1]) / h
        offset = g[:-1] - slope * a
        pieces = offset * self.inner0 + slope * self.inner1
        core = g[0] * self.r[0] ** self.e / self.e
        G = core + np.concatenate([[0.0], np.cumsum(pieces)])
        return G, offset, slope

    def apply(self, g):
        e = self.e
        G, offset, slope = self.inner(g)
        a = self.a
        # on [a, b]: G(s) = C + offset s^e / e + slope s^(e+1) / (e+1)
        const = G[:-1] - offset * a**e / e - slope * a ** (e + 1.0) / (e + 1.0)
        pieces = (const * self.outer[0] + offset / e * self.outer[1]
                  + slope / (e + 1.0) * self.outer[2])
        tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        return -tail, G


def picard_solve(
    params: ProblemParams,
    mu: float,
    f: Union[RadialProfile, Callable, float] = -1.0,
    b: float = 0.0,
    mesh: Optional[GradedMesh] = None,
    max_iter: int = 2000,
    tol: float = 1e-8,
    blowup_factor: float = 1e8,
    stall_window: int = 500,
) -> PicardResult:
    """Monotone fixed-point iteration for ``P_k^+(D^2u) + mu u r^-gamma = f r^-gamma``.

    Starting from ``u_0 = 0``, iterates

        u_n(r) = b - int_r^1 s^(1-k) int_0^s (f - mu u_(n-1)) t^(k-1-gamma) dt ds

    with every integral exact for the piecewise-linear integrand. The
    iteration converges for ``mu`` below the principal eigenvalue and its
    iterates grow without bound above it.

    Returns
    -------
    PicardResult
        ``status="diverged"`` when ``sup|u_n|`` passes
        ``blowup_factor * (|b| + sup|f| + 1)`` or the increments fail to reach
        a new minimum for ``stall_window`` iterations.
    """
    params.require_degenerate()
    if params.k < 2:
        raise ValueError("the fixed-point iteration is set up for k >= 2")
    if not params.gamma < 2:
        raise ValueError("the fixed-point iteration needs gamma < 2")
    if not mu >= 0:
        raise ValueError("mu must be nonnegative")
    if not b >= 0:
        raise ValueError("boundary value b must be nonnegative")
    mesh = mesh or default_mesh()
    r = mesh.nodes
    fv = _forcing_values(f, r)
    if np.any(fv >= 0):
        raise ValueError("forcing f must be negative")
    if np.any(np.diff(fv) < -1e-12 * np.max(np.abs(fv))):
        raise ValueError("forcing f must be nondecreasing in r")

    op = _DoubleIntegral(params, r)
    threshold = blowup_factor * (abs(b) + float(np.max(np.abs(fv))) + 1.0)
    u_prev = np.zeros_like(r)
    best = math.inf
    since_best = 0
    status, message = "max_iter", f"no convergence within {max_iter} iterations"
    increment = math.inf
    for n in range(1, max_iter + 1):
        g = fv - mu * u_prev
        tail, G = op.apply(g)
        u = b + tail
        increment = float(np.max(np.abs(u - u_prev)))
        sup = float(np.max(np.abs(u)))
        if not math.isfinite(sup) or sup > threshold:
            status, message = "diverged", f"sup norm {sup:.3e} exceeded {threshold:.3e}"
            break
        if increment < best:
            best, since_best = increment, 0
        else:
            since_best += 1
            if since_best >= stall_window:
                status, message = "diverged", f"no Cauchy decrease for {stall_window} iterations"
                break
        if increment < tol:
            status, message = "converged", ""
            u_prev = u
            break
        u_prev = u

    # (u, G, g) all belong to the last iterate n
    k, gamma = params.k, params.gamma
    du = r ** (1.0 - k) * G
    d2u = (1.0 - k) * du / r + g * r ** (-gamma)
    profile = RadialProfile(r, u, du, d2u, {
        "source": "picard", "status": status, "mu": mu, "b": b,
        "r_min": float(mesh.r_min), "n_elems": mesh.n_elems,
    })
    return PicardResult(profile, status, n, increment, float(np.max(np.abs(u))), threshold,
                        message)


# -- closed forms --------------------------------------------------------------


def closed_form_eigen_gamma2(k: int, r_lo: float = 1e-6, per_decade: int = 50) -> EigenResult:
    """``lam = (k-2)^2/4`` with eigenfunction ``-ln r / r^((k-2)/2)``.

    The eigenfunction is unbounded at the origin, so it is returned with
    unit coefficient rather than max-normalised. ``meta["solution"]`` holds
    the :class:`ClosedFormSolution` for exact evaluation anywhere in (0, 1].
    """
    if int(k) != k or k < 3:
        raise ValueError("the gamma = 2 eigenpair needs an integer k >= 3")
    params = ProblemParams(k=int(k), gamma=2.0)
    lam = (k - 2) ** 2 / 4.0
    sol = ClosedFormSolution("eigen_gamma2", params, 1.0, 1.0)
    profile = sample_closed_form(sol, r_lo, 1.0, per_decade)
    jet = RadialJet(profile.r, profile.u, profile.du, profile.d2u)
    from .operator import relative_residual_eigen

    residual = float(np.max(relative_residual_eigen(params, jet, lam, "plus")))
    return EigenResult(lam, profile, "closed_form", residual, 0, True, params,
                       {"solution": sol})


def pkm_supersolution(params: ProblemParams, mu: float) -> ClosedFormSolution:
    """Positive radial solution of ``P_k^-(D^2v) + mu v r^-gamma = 0``.

    ``v = exp(-mu r^(2-gamma) / (k (2-gamma)))`` for ``gamma != 2`` and
    ``v = r^(-mu/k)`` for ``gamma = 2``. In both cases ``v'' >= v'/r``, so
    ``P_k^-`` acts through ``k v'/r``; such a ``v`` exists for every ``mu``.
    """
    params.require_degenerate()
    if not (mu > 0 and math.isfinite(mu)):
        raise ValueError("mu must be a finite positive real")
    return ClosedFormSolution("pkm_supersolution", params.replace(mu=float(mu)), 1.0, 1.0)


def parse_growth_certificate(cert) -> Tuple[str, Optional[float]]:
    """Accept ``"bounded"``, ``("power", tau)``, ``"power(0.5)"``, ``("exp", c)``."""
    if isinstance(cert, str):
        text = cert.strip().lower().replace(" ", "")
        if text == "bounded":
            return "bounded", None
        for kind in ("power", "exp"):
            if text.startswith(kind + "(") and text.endswith(")"):
                return kind, float(text[len(kind) + 1:-1])
        raise ValueError(f"unrecognised growth certificate {cert!r}")
    kind, value = cert
    if kind not in ("power", "exp"):
        raise ValueError(f"unrecognised growth certificate {cert!r}")
    return kind, float(value)


def check_max_principle_pkm(
    params: ProblemParams,
    mu: float,
    profile: RadialProfile,
    growth_cert="bounded",
    tol: float = 1e-8,
) -> CheckReport:
    """Falsification harness for the maximum principle of ``P_k^- + mu r^-gamma``.

    Hypotheses: ``P_k^-(D^2u) + mu u r^-gamma >= -tol`` (relative to the local
    size of the terms), ``u(1) <= tol``, and a growth certificate matching
    ``gamma``: ``bounded`` (``gamma < 2``, ``k >= 2``), ``power(tau)``
    (``gamma = 2``, ``u r^tau`` bounded) or ``exp(c)`` (``gamma > 2``,
    ``u exp(-c r^(2-gamma))`` bounded). The conclusion ``u <= tol`` is tested
    at every node. Boundedness itself can only be observed on the sampled
    radii; the supremum of the certified quantity is reported in the note.

    Raises
    ------
    ValueError
        If the certificate does not match the ``gamma`` case.
    """
    params.require_degenerate()
    kind, value = parse_growth_certificate(growth_cert)
    gamma = params.gamma
    if kind == "bounded" and not (gamma < 2 and params.k >= 2):
        raise ValueError("a boundedness certificate needs gamma < 2 and k >= 2")
    if kind == "power" and gamma != 2:
        raise ValueError("a power certificate applies to gamma = 2 only")
    if kind == "exp" and not gamma > 2:
        raise ValueError("an exponential certificate applies to gamma > 2 only")
    if value is not None and not value > 0:
        raise ValueError("the certificate constant must be positive")
    if not profile.has_derivatives:
        raise ValueError("this check needs a profile with du and d2u")

    name = "max_principle_pkm"
    r, u = profile.r, profile.u
    jet = RadialJet(r, u, profile.du, profile.d2u)
    op = np.asarray(eval_pk_minus(params, jet), dtype=float)
    potential = mu * u * r ** (-gamma)
    scale = (np.abs(profile.d2u) + params.k * np.abs(profile.du) / r + np.abs(potential)
             + np.abs(u) / r**2)
    lhs = _safe_div(op + potential, scale)
    if np.any(lhs < -tol):
        i = int(np.argmin(lhs))
        return _inapplicable(name, tol, f"subsolution inequality fails at r={r[i]:.6g}")
    if r[-1] < 1.0 - 1e-12:
        return _inapplicable(name, tol, "profile does not reach r = 1")
    if u[-1] > tol:
        return _inapplicable(name, tol, "boundary value u(1) is positive")

    if kind == "bounded":
        weighted = np.abs(u)
    elif kind == "power":
        weighted = np.abs(u) * r**value
    else:
        weighted = np.abs(u) * np.exp(-value * r ** (2.0 - gamma))
    note = f"sup of certified quantity on the sample: {float(np.max(weighted)):.6g}"
    peak = max(float(np.max(np.abs(u))), 1.0)
    return _report(name, u / peak, r, tol, note)
