"""Shared oracles and the acceptance summary printer."""
import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import jv

ACCEPTANCE_LINES = []


def bessel_first_zero(nu: float) -> float:
    """First positive zero of J_nu (nu > -1) by scanning and bisection."""
    step = 0.05
    z = step
    f_prev = jv(nu, z)
    while True:
        z_next = z + step
        f_next = jv(nu, z_next)
        if f_prev * f_next < 0:
            return brentq(lambda t: jv(nu, t), z, z_next, xtol=1e-15, rtol=1e-15)
        z, f_prev = z_next, f_next


def bessel_eigenvalue(k: int, gamma: float) -> float:
    """Principal eigenvalue of -(r^(k-1) u')' = lam r^(k-1-gamma) u, u(1) = 0.

    The regular solution is r^((2-k)/2) J_nu(2 sqrt(lam) r^((2-gamma)/2) / (2-gamma))
    with nu = (k-2)/(2-gamma), so lam = ((2-gamma) j_(nu,1) / 2)^2.
    """
    nu = (k - 2.0) / (2.0 - gamma)
    return ((2.0 - gamma) * bessel_first_zero(nu) / 2.0) ** 2


def hessian_truncated_sum(N, k, r, du, d2u, sign):
    """Oracle: sum of the k largest/smallest eigenvalues of a dense radial Hessian."""
    rng = np.random.default_rng(0)
    x = rng.normal(size=N)
    x *= r / np.linalg.norm(x)
    xhat = x / r
    proj = np.outer(xhat, xhat)
    hess = d2u * proj + (du / r) * (np.eye(N) - proj)
    eig = np.sort(np.linalg.eigvalsh(hess))
    return float(eig[-k:].sum() if sign == "plus" else eig[:k].sum())


def record_acceptance(number: int, title: str, passed: bool, detail: str):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number:2d}: {title} | {detail}"))


@pytest.fixture
def acceptance_record():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def random_pkm_case(rng, family):
    """Random admissible (params, c) for one P_k^- family.

    Exponents are kept apart (|2 - beta| >= 0.5 off the critical line) and
    the validity radius is at least 0.05, so the near-origin window is inside
    the domain.
    """
    from trunclap.closed_forms import pkm_closed_form
    from trunclap.operator import ProblemParams

    while True:
        k = int(rng.integers(2, 7))
        p = float(rng.uniform(1.5, 5.0))
        if family == "pkm_case1":
            beta = float(rng.uniform(0.5, 1.5))
            c = float(rng.uniform(0.3, 3.0))
        elif family == "pkm_case2":
            beta = 2.0
            c = float(rng.uniform(-0.3, 1.0)) * (p - 1.0) / k
        else:
            beta = float(rng.uniform(2.5, 5.0))
            c = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.0))
        mu = beta * k / (p - 1.0)
        params = ProblemParams(k=k, N=k + 1, mu=mu, p=p)
        if family == "pkm_case2":
            params = ProblemParams(k=k, N=k + 1, mu=2.0 * k / (p - 1.0), p=p)
        sol = pkm_closed_form(params, c)
        if sol.family == family and sol.valid_radius >= 0.05:
            return params, c, sol
