"""Graded radial meshes, exact power-law element moments and radial profiles.

The meshes live on ``[r_min, 1]``. Near the puncture the nodes form a
geometric progression so that functions behaving like powers of ``r`` are
resolved uniformly in ``log r``; above a crossover radius the spacing is
uniform.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

__all__ = [
    "GradedMesh",
    "ElementMoments",
    "RadialProfile",
    "build_mesh",
    "weighted_element_integrals",
    "power_integral",
    "log_grid",
]

# Binomial series is used when the element half-width relative to its centre
# is below this value; the direct antiderivative is used otherwise.
_SERIES_MAX_DELTA = 0.3
_SERIES_TERMS = 48


@dataclass(frozen=True)
class GradedMesh:
    """Strictly increasing nodes ``r_min = r_0 < ... < r_n = 1``."""

    nodes: np.ndarray
    grading: float
    r_min: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        if nodes[0] <= 0:
            raise ValueError("r_min must be positive: the origin is excluded")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elems(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refine(self) -> "GradedMesh":
        """Bisect every element; the result contains all current nodes."""
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        nodes = np.empty(2 * self.nodes.size - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mid
        return GradedMesh(nodes, self.grading, self.r_min)


def build_mesh(r_min: float, n_elems: int, grading: float) -> GradedMesh:
    """Build a graded mesh of ``n_elems`` elements on ``[r_min, 1]``.

    Successive node ratios ``r_{i-1}/r_i`` equal ``grading`` from ``r_min`` up
    to a crossover radius; past it the mesh is uniform, with a spacing no
    smaller than the last geometric element. ``grading=1`` yields a uniform
    mesh.
    """
    if not (r_min > 0):
        raise ValueError("r_min must be positive: the singularity sits at r=0")
    if not (r_min < 1):
        raise ValueError("r_min must be smaller than 1")
    if int(n_elems) != n_elems or n_elems < 2:
        raise ValueError("n_elems must be an integer >= 2")
    if not (0 < grading <= 1):
        raise ValueError("grading must lie in (0, 1]")
    n = int(n_elems)

    if grading == 1.0:
        nodes = np.linspace(r_min, 1.0, n + 1)
        return GradedMesh(nodes, 1.0, r_min)

    growth = 1.0 / grading
    # largest geometric part whose uniform continuation is not finer
    m = 0
    for j in range(n):
        rho = r_min * growth**j
        if (1.0 - rho) / (n - j) >= rho * (1.0 - grading):
            m = j
        else:
            break
    geometric = r_min * growth ** np.arange(m + 1)
    uniform = np.linspace(geometric[-1], 1.0, n - m + 1)[1:]
    nodes = np.concatenate([geometric, uniform])
    return GradedMesh(nodes, grading, r_min)


def log_grid(r_lo: float, r_hi: float, per_decade: int = 50) -> np.ndarray:
    """Log-spaced radii from ``r_lo`` to ``r_hi`` inclusive."""
    if not (0 < r_lo < r_hi):
        raise ValueError("need 0 < r_lo < r_hi")
    decades = math.log10(r_hi / r_lo)
    count = max(2, int(math.ceil(decades * per_decade)) + 1)
    grid = np.geomspace(r_lo, r_hi, count)
    grid[0], grid[-1] = r_lo, r_hi
    return grid


def _expm1_over(x: np.ndarray, length: np.ndarray) -> np.ndarray:
    """``(exp(x*L) - 1)/x`` evaluated stably, including ``x -> 0``."""
    x = np.asarray(x, dtype=float)
    length = np.asarray(length, dtype=float)
    xl = x * length
    small = np.abs(xl) < 1e-8
    safe_x = np.where(small, 1.0, x)
    out = np.where(small, length * (1.0 + 0.5 * xl), np.expm1(xl) / safe_x)
    return out


def power_integral(a, b, s) -> np.ndarray:
    """Exact ``int_a^b r**s dr`` for ``0 < a < b``, any real ``s``.

    The ``s = -1`` logarithm appears as the continuous limit of the general
    antiderivative, so no special case is visible to callers.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)
    log_ratio = np.log(b / a)
    return a ** (s + 1.0) * _expm1_over(s + 1.0, log_ratio)


def _t_moments(count: int) -> np.ndarray:
    """``int_{-1}^{1} t**n dt`` for ``n = 0 .. count-1``."""
    n = np.arange(count)
    return np.where(n % 2 == 0, 2.0 / (n + 1.0), 0.0)


@dataclass(frozen=True)
class ElementMoments:
    """Per-element integrals of ``r**s`` against the linear hat functions.

    ``phi_a`` is the hat that equals 1 at the left node ``a``, ``phi_b`` the one
    equal to 1 at ``b``. Each attribute is an array with one entry per element.
    """

    s: float
    m0: np.ndarray
    m_a: np.ndarray
    m_b: np.ndarray
    m_aa: np.ndarray
    m_ab: np.ndarray
    m_bb: np.ndarray


def _moments_direct(a, b, s):
    h = b - a
    p0 = power_integral(a, b, s)
    p1 = power_integral(a, b, s + 1.0)
    p2 = power_integral(a, b, s + 2.0)
    m_a = (b * p0 - p1) / h
    m_b = (p1 - a * p0) / h
    m_aa = (b * b * p0 - 2 * b * p1 + p2) / (h * h)
    m_bb = (p2 - 2 * a * p1 + a * a * p0) / (h * h)
    m_ab = (-p2 + (a + b) * p1 - a * b * p0) / (h * h)
    return p0, m_a, m_b, m_aa, m_ab, m_bb


def _moments_series(a, b, s):
    # r = c (1 + delta t), t in [-1, 1]; expand (1 + delta t)**s binomially.
    c = 0.5 * (a + b)
    delta = 0.5 * (b - a) / c
    count = _SERIES_TERMS + 3
    tm = _t_moments(count)
    n = np.arange(_SERIES_TERMS)
    coef = np.empty(_SERIES_TERMS)
    coef[0] = 1.0
    for j in range(1, _SERIES_TERMS):
        coef[j] = coef[j - 1] * (s - (j - 1)) / j
    # weights[i, j] = binom(s, j) * delta_i**j
    weights = coef[None, :] * delta[:, None] ** n[None, :]
    t0, t1, t2 = tm[n], tm[n + 1], tm[n + 2]
    g_1 = t0
    g_a = 0.5 * (t0 - t1)
    g_b = 0.5 * (t0 + t1)
    g_aa = 0.25 * (t0 - 2 * t1 + t2)
    g_ab = 0.25 * (t0 - t2)
    g_bb = 0.25 * (t0 + 2 * t1 + t2)
    scale = c ** (s + 1.0) * delta
    return tuple(scale * (weights @ g) for g in (g_1, g_a, g_b, g_aa, g_ab, g_bb))


def _element_moments(a, b, s):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    delta = 0.5 * (b - a) / (0.5 * (a + b))
    use_series = delta <= _SERIES_MAX_DELTA
    out = [np.empty_like(a) for _ in range(6)]
    if np.any(use_series):
        vals = _moments_series(a[use_series], b[use_series], s)
        for o, v in zip(out, vals):
            o[use_series] = v
    if np.any(~use_series):
        vals = _moments_direct(a[~use_series], b[~use_series], s)
        for o, v in zip(out, vals):
            o[~use_series] = v
    return out


def weighted_element_integrals(mesh: Union[GradedMesh, np.ndarray], s: float) -> ElementMoments:
    """Exact moments of ``r**s`` times products of linear hats, per element.

    Short elements (relative to their distance from the origin) go through the
    binomial expansion of ``r**s`` about the element centre, which avoids the
    cancellation the raw antiderivative suffers there.
    """
    nodes = mesh.nodes if isinstance(mesh, GradedMesh) else np.asarray(mesh, float)
    a, b = nodes[:-1], nodes[1:]
    m0, m_a, m_b, m_aa, m_ab, m_bb = _element_moments(a, b, float(s))
    return ElementMoments(float(s), m0, m_a, m_b, m_aa, m_ab, m_bb)


@dataclass
class RadialProfile:
    """A radial function sampled at increasing radii, optionally with derivatives."""

    r: np.ndarray
    u: np.ndarray
    du: Optional[np.ndarray] = None
    d2u: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.r.ndim != 1 or self.r.shape != self.u.shape:
            raise ValueError("r and u must be 1-d arrays of equal length")
        if self.r.size and self.r[0] <= 0:
            raise ValueError("profile radii must be positive")
        if not np.all(np.diff(self.r) > 0):
            raise ValueError("profile radii must be strictly increasing")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("profile values must be finite")
        for name in ("du", "d2u"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if value.shape != self.r.shape:
                    raise ValueError(f"{name} length does not match the radii")
                setattr(self, name, value)

    def __len__(self):
        return self.r.size

    @property
    def has_derivatives(self) -> bool:
        return self.du is not None and self.d2u is not None

    def copy(self) -> "RadialProfile":
        return RadialProfile(
            self.r.copy(),
            self.u.copy(),
            None if self.du is None else self.du.copy(),
            None if self.d2u is None else self.d2u.copy(),
            dict(self.meta),
        )

    def restrict(self, r_lo: float = 0.0, r_hi: float = math.inf) -> "RadialProfile":
        keep = (self.r >= r_lo) & (self.r <= r_hi)
        return RadialProfile(
            self.r[keep],
            self.u[keep],
            None if self.du is None else self.du[keep],
            None if self.d2u is None else self.d2u[keep],
            dict(self.meta),
        )

    # -- serialisation -------------------------------------------------------

    def _columns(self):
        cols = [("r", self.r), ("u", self.u)]
        if self.du is not None:
            cols.append(("du", self.du))
        if self.d2u is not None:
            cols.append(("d2u", self.d2u))
        return cols

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        """Write CSV with header ``r,u[,du,d2u]``; floats use shortest repr."""
        cols = self._columns()
        buf = io.StringIO()
        buf.write(",".join(name for name, _ in cols) + "\n")
        for row in zip(*(values for _, values in cols)):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: Union[str, Path]) -> "RadialProfile":
        """Read a profile from a CSV path or CSV text."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text()
        else:
            text = source
        reader = csv.reader(io.StringIO(text))
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["r", "u"]:
            raise ValueError(f"unexpected profile header {header!r}")
        rows = [[float(x) for x in row] for row in reader if row]
        data = np.array(rows, dtype=float).reshape(-1, len(header))
        cols = {name: data[:, i] for i, name in enumerate(header)}
        return cls(cols["r"], cols["u"], cols.get("du"), cols.get("d2u"))

    def to_dict(self) -> dict:
        out = {name: [float(x) for x in values] for name, values in self._columns()}
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RadialProfile":
        return cls(
            data["r"], data["u"], data.get("du"), data.get("d2u"), dict(data.get("meta", {}))
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RadialProfile":
        return cls.from_dict(json.loads(text))
