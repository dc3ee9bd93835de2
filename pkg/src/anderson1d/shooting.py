"""Pathwise integration of ``-y'' + xi y = z y`` along a noise path.

Two representations are offered:

* the linear first-order system for ``(y, p)`` with ``p = y' - B y``,
  valid for complex ``z`` (:func:`propagate_transfer`);
* the phase/log-modulus pair ``(theta, rho)`` with ``y = e^{rho/2} sin theta``,
  ``y' = e^{rho/2} cos theta`` for real ``lam``, which never overflows
  (:func:`propagate_prufer`).

Two discretizations of the transfer system are available. ``"midpoint"`` is
the explicit midpoint rule with ``B`` linear on each cell. ``"split"``
replaces the noise on each cell by a point kick of weight ``dB`` at the
cell centre and solves the free equation exactly in between; it has
determinant one, conserves Wronskians to rounding and is exact when
``B = 0``, which is why the spectral modules build on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError, MagnitudeOverflowError, ResolutionError
from .noise import Grid, NoisePath

MAGNITUDE_CAP = 1e300
_LOG2_STEP = 500


@dataclass(frozen=True)
class TransferState:
    """``(y, p)`` at a node where ``B`` takes the value ``B``; ``y' = p + B y``."""

    y: complex
    p: complex
    B: float = 0.0

    @property
    def yp(self) -> complex:
        return self.p + self.B * self.y

    @classmethod
    def from_derivative(cls, y: complex, yp: complex, B: float = 0.0) -> "TransferState":
        return cls(y, yp - B * y, B)

    @classmethod
    def from_angle(cls, alpha: float, B: float = 0.0) -> "TransferState":
        """State ``e_alpha = (sin alpha, cos alpha)`` for ``(y, y')``."""
        return cls.from_derivative(math.sin(alpha), math.cos(alpha), B)

    def scaled(self, c: complex) -> "TransferState":
        return TransferState(c * self.y, c * self.p, self.B)


NEUMANN = TransferState(1.0, 0.0)
DIRICHLET = TransferState(0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TransferTrajectory:
    """Nodes ``grid`` with ``y``, ``y'`` and ``B`` sampled at each of them.

    ``grid`` is ``None`` for a zero-length interval (a single node).
    """

    grid: Grid | None
    y: np.ndarray
    yp: np.ndarray
    B: np.ndarray
    z: complex

    @property
    def p(self) -> np.ndarray:
        return self.yp - self.B * self.y

    def state(self, i: int) -> TransferState:
        return TransferState.from_derivative(complex(self.y[i]), complex(self.yp[i]), float(self.B[i]))

    def to_rows(self):
        t = self.grid.nodes
        return [(t[i], self.y[i].real, self.y[i].imag, self.yp[i].real, self.yp[i].imag) for i in range(len(t))]


@dataclass(frozen=True, eq=False)
class PruferTrajectory:
    """Unwrapped phase ``theta`` and ``rho = ln r^2`` at the nodes of ``grid`` (``None`` for one node)."""

    grid: Grid | None
    theta: np.ndarray
    rho: np.ndarray
    lam: float

    @property
    def y(self) -> np.ndarray:
        return np.exp(0.5 * self.rho) * np.sin(self.theta)

    @property
    def yp(self) -> np.ndarray:
        return np.exp(0.5 * self.rho) * np.cos(self.theta)

    def to_rows(self):
        t = self.grid.nodes
        return [(t[i], self.theta[i], self.rho[i]) for i in range(len(t))]


def _cells(path: NoisePath, interval) -> tuple[int, int]:
    if interval is None:
        return 0, path.grid.n_points - 1
    t0, t1 = interval
    if not path.grid.contains(t0, t1):
        raise ConfigurationError(f"interval [{t0}, {t1}] is not inside the path grid")
    i0, i1 = path.grid.index_of(t0), path.grid.index_of(t1)
    if i1 < i0:
        raise ConfigurationError("interval must satisfy t0 <= t1")
    return i0, i1


def propagate_transfer(path: NoisePath, z: complex, init: TransferState, interval=None, *,
                       backward: bool = False, scheme: str = "midpoint",
                       cap: float = MAGNITUDE_CAP) -> TransferTrajectory:
    """Solve the ``(y, p)`` system on ``interval = (t0, t1)``.

    ``init`` fixes ``(y, y')`` at ``t0`` (or at ``t1`` when ``backward``);
    the returned ``p`` uses the path's ``B`` at every node. Raises
    :class:`MagnitudeOverflowError` as soon as ``|y|`` or ``|y'|`` exceeds
    ``cap``; switch to :func:`propagate_prufer` in that case.
    """
    if init.y == 0 and init.p == 0:
        raise ConfigurationError("initial state must be nonzero")
    i0, i1 = _cells(path, interval)
    grid = path.grid.sub(i0, i1) if i1 > i0 else None
    Bn = path.cumulative[i0:i1 + 1]
    y0 = complex(init.y)
    yp0 = complex(init.yp)
    if i1 == i0:
        return TransferTrajectory(None, np.array([y0]), np.array([yp0]), Bn.copy(), complex(z))
    dB = np.ascontiguousarray(path.kicks[i0:i1])
    h = path.grid.h
    z = complex(z)
    if scheme == "midpoint":
        ys, yps, bad = K.midpoint_transfer(dB, h, z, y0, yp0, backward, cap)
        if bad >= 0:
            raise MagnitudeOverflowError(
                f"|y| exceeded {cap:g} at t={grid.nodes[bad]:.6g}; use the phase representation",
                t=float(grid.nodes[bad]), cap=cap)
    elif scheme == "split":
        ys, yps, ex = K.split_transfer(dB, h, z, y0, yp0, backward)
        if np.any(ex != 0):
            lg = np.log(np.maximum(np.abs(ys), np.abs(yps))) + _LOG2_STEP * math.log(2.0) * ex
            over = np.nonzero(lg > math.log(cap))[0]
            if over.size:
                k = over[-1] if backward else over[0]
                raise MagnitudeOverflowError(
                    f"|y| exceeded {cap:g} at t={grid.nodes[k]:.6g}; use the phase representation",
                    t=float(grid.nodes[k]), cap=cap)
            scale = np.exp2(_LOG2_STEP * ex.astype(float))
            ys = ys * scale
            yps = yps * scale
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    return TransferTrajectory(grid, ys, yps, Bn.copy(), z)


def propagate_scaled(path: NoisePath, z: complex, y0: complex, yp0: complex, i0: int, i1: int,
                     backward: bool = False):
    """Splitting scheme on nodes ``i0..i1`` returning ``(y, y', log_scale)``.

    The solution is ``(y, y') * exp(log_scale)`` node by node; no overflow is
    possible. ``(y0, y0')`` is imposed at ``i1`` when ``backward``.
    """
    dB = np.ascontiguousarray(path.kicks[i0:i1])
    ys, yps, ex = K.split_transfer(dB, path.grid.h, complex(z), complex(y0), complex(yp0), backward)
    return ys, yps, ex * (_LOG2_STEP * math.log(2.0))


def propagator(path: NoisePath, z: complex, t: float | None = None, t0: float | None = None,
               scheme: str = "midpoint") -> np.ndarray:
    """``U(t)`` with columns ``(y^N, y^N')`` and ``(y^D, y^D')``, identity at ``t0``."""
    t0 = path.grid.t_start if t0 is None else t0
    t = path.grid.t_end if t is None else t
    a = propagate_transfer(path, z, NEUMANN, (t0, t), scheme=scheme)
    b = propagate_transfer(path, z, DIRICHLET, (t0, t), scheme=scheme)
    return np.array([[a.y[-1], b.y[-1]], [a.yp[-1], b.yp[-1]]])


def propagate_prufer(path: NoisePath, lam: float, theta0: float, rho0: float = 0.0, interval=None, *,
                     method: str = "em", clamp: bool = True) -> PruferTrajectory:
    """Phase and log-modulus along the path for real ``lam``.

    ``method="em"`` is Euler-Maruyama on the Ito equations, with downward
    lattice crossings projected back when ``clamp`` is set. ``"pathwise"``
    runs the splitting scheme in polar form; it agrees with
    :func:`propagate_transfer` with ``scheme="split"`` to rounding and its
    phase is exactly monotone across the lattice.
    """
    if not 0.0 <= theta0 < math.pi:
        raise ConfigurationError(f"theta0 must lie in [0, pi), got {theta0}")
    if isinstance(lam, complex) or not math.isfinite(lam):
        raise ConfigurationError("the phase representation needs a finite real lam")
    i0, i1 = _cells(path, interval)
    if i1 == i0:
        return PruferTrajectory(None, np.array([theta0]), np.array([rho0]), float(lam))
    dB = np.ascontiguousarray(path.kicks[i0:i1])
    if method == "em":
        th, rh = K.em_prufer(dB, path.grid.h, float(lam), float(theta0), float(rho0), clamp)
    elif method == "pathwise":
        check_phase_step(lam, path.grid.h)
        th, rh = K.split_prufer(dB, path.grid.h, float(lam), float(theta0), float(rho0), True)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    return PruferTrajectory(path.grid.sub(i0, i1), th, rh, float(lam))


def phase_at_end(path: NoisePath, lam: float, theta0: float, i0: int, i1: int) -> tuple[float, float]:
    """``(theta, rho)`` at node ``i1`` of the pathwise scheme started at node ``i0``."""
    check_phase_step(lam, path.grid.h)
    dB = np.ascontiguousarray(path.kicks[i0:i1])
    th, rh = K.split_prufer(dB, path.grid.h, float(lam), float(theta0), 0.0, False)
    return float(th[0]), float(rh[0])


def check_phase_step(lam: float, h: float) -> None:
    """The lattice counting of the splitting scheme needs ``sqrt(lam) h / 2 < pi / 2``."""
    if lam > 0 and math.sqrt(lam) * h >= math.pi:
        raise ResolutionError(f"step h={h} is too coarse for lam={lam}; need h < pi/sqrt(lam)")


def lattice_index(theta) -> np.ndarray:
    """``floor(theta/pi)`` with a tolerance of ``1e-9`` for values landing on the lattice."""
    return np.floor(np.asarray(theta) / math.pi + 1e-9).astype(np.int64)


def oscillation_count(traj: PruferTrajectory) -> int:
    """Number of completed half-turns of the phase over the trajectory."""
    return int(lattice_index(traj.theta[-1]) - lattice_index(traj.theta[0]))


def wronskian(s1, s2) -> complex:
    """``y1 y2' - y1' y2`` for two states (``TransferState`` or ``(y, y')`` pairs) at one node."""
    y1, d1 = (s1.y, s1.yp) if isinstance(s1, TransferState) else s1
    y2, d2 = (s2.y, s2.yp) if isinstance(s2, TransferState) else s2
    return y1 * d2 - d1 * y2


def wronskian_along(a: TransferTrajectory, b: TransferTrajectory) -> np.ndarray:
    return a.y * b.yp - a.yp * b.y
