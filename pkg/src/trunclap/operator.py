"""Truncated Laplacians evaluated on radial C^2 data.

For a radial ``u`` the Hessian has eigenvalue ``u''`` once and ``u'/r`` with
multiplicity ``N-1``. For ``k < N`` the sum of the ``k`` largest (``P_k^+``) or
``k`` smallest (``P_k^-``) eigenvalues is therefore one of

    u'' + (k-1) u'/r      or      k u'/r

depending on the sign of ``u'' - u'/r``. All routines here broadcast over
numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "ProblemParams",
    "RadialJet",
    "TIE_RTOL",
    "hessian_eigen_branches",
    "branch_indicator",
    "eval_pk",
    "eval_pk_plus",
    "eval_pk_minus",
    "residual_eigen",
    "residual_superlinear",
    "relative_residual_eigen",
    "relative_residual_superlinear",
]

TIE_RTOL = 1e-14

PLUS = "plus"
MINUS = "minus"


def _check_sign(sign: str) -> str:
    if sign in ("+", PLUS):
        return PLUS
    if sign in ("-", MINUS):
        return MINUS
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, truncation index and exponents of a problem instance.

    ``mu`` and ``p`` are optional because the eigenvalue problems do not use
    them. ``N`` defaults to ``k + 1``, the smallest dimension in which the
    operators are genuinely degenerate.
    """

    k: int
    N: Optional[int] = None
    gamma: float = 0.0
    mu: Optional[float] = None
    p: Optional[float] = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))
        if self.N is None:
            object.__setattr__(self, "N", self.k + 1)
        if int(self.N) != self.N or not (1 <= self.k <= self.N):
            raise ValueError("need integers 1 <= k <= N")
        object.__setattr__(self, "N", int(self.N))
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError("gamma must be a finite real >= 0")
        if self.mu is not None and not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError("mu must be a finite real > 0")
        if self.p is not None and not (self.p > 1 and math.isfinite(self.p)):
            raise ValueError("p must be a finite real > 1")

    def require_degenerate(self):
        if self.k > self.N - 1:
            raise ValueError(
                f"the radial formulas need k <= N-1 (got k={self.k}, N={self.N})"
            )

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ValueError(f"parameter {name!r} is required here")

    def replace(self, **changes) -> "ProblemParams":
        data = dict(k=self.k, N=self.N, gamma=self.gamma, mu=self.mu, p=self.p)
        data.update(changes)
        return ProblemParams(**data)

    def to_dict(self) -> dict:
        return {"N": self.N, "k": self.k, "gamma": self.gamma, "mu": self.mu, "p": self.p}


@dataclass(frozen=True)
class RadialJet:
    """Value and first two derivatives of a radial function at radius ``r``.

    Fields may be scalars or equally shaped arrays.
    """

    r: object
    u: object
    du: object
    d2u: object

    def __post_init__(self):
        if np.any(np.asarray(self.r) <= 0):
            raise ValueError("r must be strictly positive (punctured ball)")

    def __neg__(self) -> "RadialJet":
        return RadialJet(self.r, -np.asarray(self.u), -np.asarray(self.du), -np.asarray(self.d2u))

    def __add__(self, other: "RadialJet") -> "RadialJet":
        if not np.allclose(self.r, other.r, rtol=0, atol=0):
            raise ValueError("jets must share the radius")
        return RadialJet(
            self.r,
            np.asarray(self.u) + other.u,
            np.asarray(self.du) + other.du,
            np.asarray(self.d2u) + other.d2u,
        )


def hessian_eigen_branches(jet: RadialJet):
    """Return ``(u'', u'/r)``: the radial and the tangential Hessian eigenvalue."""
    r = np.asarray(jet.r, dtype=float)
    return _scalarize(np.asarray(jet.d2u, dtype=float)), _scalarize(np.asarray(jet.du, dtype=float) / r)


def branch_indicator(jet: RadialJet):
    """``u'' - u'/r``; its sign decides which radial formula applies."""
    radial, tangential = hessian_eigen_branches(jet)
    return radial - tangential


def _scalarize(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _pk(k: int, jet: RadialJet, sign: str):
    radial, tangential = (np.asarray(x, dtype=float) for x in hessian_eigen_branches(jet))
    laplacian_like = radial + (k - 1) * tangential
    first_order = k * tangential
    gap = radial - tangential
    tie = np.abs(gap) <= TIE_RTOL * np.maximum(np.abs(radial), np.abs(tangential))
    if sign == PLUS:
        value = np.where(gap >= 0, laplacian_like, first_order)
    else:
        value = np.where(gap <= 0, laplacian_like, first_order)
    value = np.where(tie, first_order, value)
    return _scalarize(value), tie


def eval_pk(params: ProblemParams, jet: RadialJet, sign: str, return_tie: bool = False):
    """Evaluate ``P_k^+`` or ``P_k^-`` on a radial jet.

    At a branch tie (``u'' = u'/r`` to 1e-14 relative) both formulas agree and
    the common value ``k u'/r`` is returned; with ``return_tie=True`` the tie
    mask is returned as well.
    """
    sign = _check_sign(sign)
    params.require_degenerate()
    value, tie = _pk(params.k, jet, sign)
    if return_tie:
        return value, _scalarize(tie)
    return value


def eval_pk_plus(params: ProblemParams, jet: RadialJet):
    """Sum of the ``k`` largest Hessian eigenvalues of a radial function."""
    return eval_pk(params, jet, PLUS)


def eval_pk_minus(params: ProblemParams, jet: RadialJet):
    """Sum of the ``k`` smallest Hessian eigenvalues of a radial function."""
    return eval_pk(params, jet, MINUS)


def residual_eigen(params: ProblemParams, jet: RadialJet, lam: float, sign: str):
    """``P_k^±(D^2 u) + lam * u * r**(-gamma)``."""
    r = np.asarray(jet.r, dtype=float)
    return _scalarize(eval_pk(params, jet, sign) + lam * np.asarray(jet.u) * r ** (-params.gamma))


def relative_residual_eigen(params: ProblemParams, jet: RadialJet, lam: float, sign: str):
    """Eigen-equation residual divided by the magnitude of its largest term.

    Closed-form solutions span many orders of magnitude near the origin, so
    this is the meaningful scale for machine-precision checks.
    """
    r = np.asarray(jet.r, dtype=float)
    op = np.asarray(eval_pk(params, jet, sign))
    potential = lam * np.asarray(jet.u) * r ** (-params.gamma)
    radial, tangential = (np.abs(np.asarray(x)) for x in hessian_eigen_branches(jet))
    scale = np.maximum.reduce([radial, params.k * tangential, np.abs(potential)])
    return _scalarize(np.abs(op + potential) / np.where(scale > 0, scale, 1.0))


def residual_superlinear(params: ProblemParams, jet: RadialJet, sign: str):
    """``P_k^±(D^2 u) + mu u / r**2 - u**p`` for a positive jet."""
    params.require("mu", "p")
    u = np.asarray(jet.u, dtype=float)
    if np.any(u < 0):
        raise ValueError("superlinear residual is defined for positive u only")
    r = np.asarray(jet.r, dtype=float)
    return _scalarize(eval_pk(params, jet, sign) + params.mu * u / r**2 - u**params.p)


def relative_residual_superlinear(params: ProblemParams, jet: RadialJet, sign: str):
    """Superlinear residual scaled by the largest of its terms."""
    params.require("mu", "p")
    u = np.asarray(jet.u, dtype=float)
    if np.any(u < 0):
        raise ValueError("superlinear residual is defined for positive u only")
    r = np.asarray(jet.r, dtype=float)
    res = np.asarray(residual_superlinear(params, jet, sign))
    radial, tangential = (np.abs(np.asarray(x)) for x in hessian_eigen_branches(jet))
    scale = np.maximum.reduce(
        [radial, params.k * tangential, params.mu * u / r**2, u**params.p]
    )
    return _scalarize(np.abs(res) / np.where(scale > 0, scale, 1.0))
