"""Weyl m-functions, Weyl circles, limit-point values and finite-volume Green kernels.

Solutions are propagated with the splitting scheme in scaled form (mantissa
plus log-scale per node), so no quantity here overflows for small
``Im z`` or long intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolver import BoundaryCondition, box_indices
from .errors import ConfigurationError, DegenerateError, InsufficientHorizonError, NumericalError
from .noise import NoisePath
from .shooting import propagate_scaled

CIRCLE_BETAS = (0.0, math.pi / 3, 2 * math.pi / 3)


@dataclass(frozen=True)
class WeylPoint:
    z: complex
    b: float
    beta: float
    m: complex


@dataclass(frozen=True)
class WeylCircle:
    """Circle of ``m_z(b, beta)`` over ``beta``.

    ``center`` and ``radius`` come from the three-point fit; ``radius_formula``
    is ``1 / (2 |Im z| int_0^b |y^D|^2)``. When the three points coincide to
    working precision (``resolved`` false) the fitted radius is meaningless
    and ``radius`` holds the formula value.
    """

    z: complex
    b: float
    center: complex
    radius: float
    radius_formula: float
    resolved: bool = True

    def contains(self, other: "WeylCircle", slack: float = 0.01) -> bool:
        return abs(other.center - self.center) + other.radius <= self.radius * (1 + slack)


@dataclass(frozen=True)
class LimitPoint:
    value: complex
    error_bound: float
    b_max: float


def _check_z(z):
    z = complex(z)
    if z.imag == 0.0:
        raise ConfigurationError("z must have a nonzero imaginary part")
    return z


def _fundamental(path: NoisePath, z: complex, b: float):
    """Scaled Neumann and Dirichlet solutions on ``[0, b]``."""
    if not b > 0:
        raise ConfigurationError("b must be positive")
    g = path.grid
    if not g.contains(0.0, b):
        raise ConfigurationError(f"[0, {b}] is not inside the path grid")
    i0, i1 = g.index_of(0.0), g.index_of(b)
    N = propagate_scaled(path, z, 1.0, 0.0, i0, i1)
    D = propagate_scaled(path, z, 0.0, 1.0, i0, i1)
    return N, D


def _m_from_end(N, D, beta):
    yN, dN, lN = N[0][-1], N[1][-1], N[2][-1]
    yD, dD, lD = D[0][-1], D[1][-1], D[2][-1]
    num = yN * math.cos(beta) - dN * math.sin(beta)
    den = yD * math.cos(beta) - dD * math.sin(beta)
    if abs(den) < 1e-30 * math.hypot(abs(yD), abs(dD)):
        raise DegenerateError("the Dirichlet solution satisfies the boundary condition at b", beta=beta)
    return -(num / den) * math.exp(lN - lD)


def m_function(path: NoisePath, z: complex, b: float, beta: float) -> WeylPoint:
    """The ``m`` for which ``y^N + m y^D`` is parallel to ``(sin beta, cos beta)`` at ``b``."""
    z = _check_z(z)
    N, D = _fundamental(path, z, b)
    return WeylPoint(z, float(b), float(beta), complex(_m_from_end(N, D, beta)))


def m_sweep(path: NoisePath, z: complex, b: float, betas) -> np.ndarray:
    z = _check_z(z)
    N, D = _fundamental(path, z, b)
    return np.array([_m_from_end(N, D, beta) for beta in betas])


def circumcircle(p1: complex, p2: complex, p3: complex) -> tuple[complex, float]:
    """Centre and radius of the circle through three points."""
    a, b = p2 - p1, p3 - p1
    d = 2.0 * (a.real * b.imag - a.imag * b.real)
    scale = max(abs(a), abs(b)) ** 2
    if scale == 0.0 or abs(d) < 1e-14 * scale:
        raise DegenerateError("collinear or coincident points")
    ux = (b.imag * abs(a) ** 2 - a.imag * abs(b) ** 2) / d
    uy = (a.real * abs(b) ** 2 - b.real * abs(a) ** 2) / d
    c = complex(ux, uy)
    return p1 + c, abs(c)


def dirichlet_l2(path: NoisePath, z: complex, b: float, D=None) -> tuple[float, float]:
    """``int_0^b |y^D|^2`` by the trapezoid rule, as ``(mantissa, log_scale)``."""
    if D is None:
        D = propagate_scaled(path, z, 0.0, 1.0, path.grid.index_of(0.0), path.grid.index_of(b))
    y, _, ls = D
    lw = np.log(np.maximum(np.abs(y), 1e-300)) * 2 + 2 * ls
    top = lw.max()
    w = np.exp(lw - top)
    return float(np.trapezoid(w, dx=path.grid.h)), float(top)


def weyl_circle(path: NoisePath, z: complex, b: float, rel_check: float = 0.01) -> WeylCircle:
    """Circle through ``m`` at three boundary angles, checked against the radius formula."""
    z = _check_z(z)
    N, D = _fundamental(path, z, b)
    pts = [_m_from_end(N, D, beta) for beta in CIRCLE_BETAS]
    mant, top = dirichlet_l2(path, z, b, D)
    r_formula = math.exp(-top) / (2.0 * abs(z.imag) * mant)
    spread = max(abs(pts[1] - pts[0]), abs(pts[2] - pts[0]))
    size = max(abs(p) for p in pts)
    if spread < 1e-9 * size:
        # the three values agree to about 7 digits: the fit is not resolvable
        return WeylCircle(z, float(b), complex(np.mean(pts)), r_formula, r_formula, False)
    center, radius = circumcircle(*pts)
    if abs(radius - r_formula) > rel_check * r_formula:
        raise NumericalError(f"fitted radius {radius:.6g} disagrees with {r_formula:.6g}",
                             radius=radius, formula=r_formula)
    return WeylCircle(z, float(b), complex(center), float(radius), r_formula, True)


def m_infinity(path: NoisePath, z: complex, b_max: float, tol: float | None = None) -> LimitPoint:
    """Centre of the circle at ``b_max``; its radius bounds the distance to the limit point."""
    c = weyl_circle(path, z, b_max)
    bound = c.radius_formula
    if tol is not None and bound > tol:
        raise InsufficientHorizonError(f"circle radius {bound:.3g} at b={b_max} exceeds {tol:.3g}",
                                       bound=bound, b_max=b_max)
    return LimitPoint(c.center, bound, float(b_max))


def _box_solutions(path: NoisePath, z: complex, L: float, bc: BoundaryCondition):
    i0, i1 = box_indices(path, L)
    sa, ca = math.sin(bc.alpha), math.cos(bc.alpha)
    A = propagate_scaled(path, z, sa, ca, i0, i1)
    B = propagate_scaled(path, z, sa, ca, i0, i1, backward=True)
    return i0, i1, A, B


def _wronskian_scaled(A, B, j):
    """``W(y^b, y^a)`` at local node ``j`` as ``(mantissa, log_scale)``."""
    ya, da, la = A[0][j], A[1][j], A[2][j]
    yb, db, lb = B[0][j], B[1][j], B[2][j]
    w = yb * da - db * ya
    if abs(w) < 1e-13 * math.hypot(abs(ya), abs(da)) * math.hypot(abs(yb), abs(db)):
        raise DegenerateError("Wronskian vanishes to working precision: z is too close to the spectrum")
    return w, la + lb


def green_row(path: NoisePath, z: complex, L: float, bc: BoundaryCondition, s: float) -> tuple[np.ndarray, np.ndarray]:
    """``(t, G(z, s, t))`` for every node ``t`` of the box."""
    z = _check_z(z)
    i0, i1, A, B = _box_solutions(path, z, L, bc)
    js = path.grid.index_of(s) - i0
    if not 0 <= js <= i1 - i0:
        raise ConfigurationError("s must lie in the box")
    w, lw = _wronskian_scaled(A, B, js)
    ya, la = A[0], A[2]
    yb, lb = B[0], B[2]
    n = i1 - i0 + 1
    j = np.arange(n)
    G = np.empty(n, dtype=complex)
    left = j <= js
    # t <= s: y^a(t) y^b(s);  t > s: y^a(s) y^b(t)
    G[left] = ya[left] * yb[js] * np.exp(la[left] + lb[js] - lw) / w
    G[~left] = ya[js] * yb[~left] * np.exp(la[js] + lb[~left] - lw) / w
    return path.grid.nodes[i0:i1 + 1], G


def green_kernel(path: NoisePath, z: complex, L: float, bc: BoundaryCondition, s: float, t: float) -> complex:
    """Resolvent kernel ``y^a(min) y^b(max) / W(y^b, y^a)``.

    ``y^a`` satisfies the boundary condition at ``-L/2`` and ``y^b`` at
    ``L/2``. With this orientation of the Wronskian ``Im G(z, s, s) > 0``
    for ``Im z > 0``.
    """
    z = _check_z(z)
    i0, i1, A, B = _box_solutions(path, z, L, bc)
    g = path.grid
    for x in (s, t):
        if not -L / 2 - 1e-12 <= x <= L / 2 + 1e-12:
            raise ConfigurationError("s and t must lie in the box")
    jlo = g.index_of(min(s, t)) - i0
    jhi = g.index_of(max(s, t)) - i0
    w, lw = _wronskian_scaled(A, B, jlo)
    return complex(A[0][jlo] * B[0][jhi] * np.exp(A[2][jlo] + B[2][jhi] - lw) / w)


def green_matrix(path: NoisePath, z: complex, L: float, bc: BoundaryCondition, stride: int = 1):
    """``G(z, t_i, t_j)`` on every ``stride``-th node of the box (dense; keep the box small)."""
    z = _check_z(z)
    i0, i1, A, B = _box_solutions(path, z, L, bc)
    sel = np.arange(0, i1 - i0 + 1, stride)
    ya = A[0][sel]
    la = A[2][sel]
    yb = B[0][sel]
    lb = B[2][sel]
    # the Wronskian is constant; evaluate it where both factors are moderate
    jm = len(sel) // 2
    w, lw = _wronskian_scaled(A, B, sel[jm])
    lo = np.minimum.outer(np.arange(sel.size), np.arange(sel.size))
    hi = np.maximum.outer(np.arange(sel.size), np.arange(sel.size))
    G = ya[lo] * yb[hi] * np.exp(la[lo] + lb[hi] - lw) / w
    return path.grid.nodes[i0:i1 + 1][sel], G


def weyl_tail(z: complex, lam_cut: float) -> complex:
    """``(1/2 pi) int_cut^inf dlam / (sqrt(lam) (lam - z))``: eigen-expansion tail of ``G(z, 0, 0)`` by the free Weyl law."""
    q = np.sqrt(complex(z))
    u = math.sqrt(lam_cut)
    return complex(np.log((u + q) / (u - q)) / (2 * math.pi * q))
