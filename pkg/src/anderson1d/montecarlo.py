"""Monte Carlo estimates of the Lyapunov exponent, the invariant phase density and the decaying angle.

All long runs use the pathwise splitting scheme, streaming the Brownian
increments in chunks so memory stays flat in the horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import _kernels as K
from ._parallel import ordered_map
from .errors import ConfigurationError, UsageError
from .noise import PURPOSE_PATH, PURPOSE_PHASE, NoisePath, increment_chunks
from .shooting import PruferTrajectory, check_phase_step

DEFAULT_H = 1e-3
CHUNK = 1 << 18


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    replicas: int
    horizon: float
    seed: int
    samples: tuple = ()


@dataclass(frozen=True, eq=False)
class PhaseHistogram:
    """Occupation counts of ``theta mod pi`` on ``bins`` equal bins of ``[0, pi)``."""

    bins: int
    counts: np.ndarray
    total_time: float
    burn_in: float
    lam: float
    h: float = DEFAULT_H

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def density(self) -> np.ndarray:
        return self.probabilities * (self.bins / math.pi)

    def tv_distance(self, other: "PhaseHistogram") -> float:
        if other.bins != self.bins:
            raise UsageError("histograms must share their binning")
        return 0.5 * float(np.abs(self.probabilities - other.probabilities).sum())


def _steps(T: float, h: float) -> int:
    n = round(T / h)
    if n < 1 or abs(n * h - T) > 1e-6 * T:
        raise ConfigurationError(f"horizon {T} is not a multiple of h={h}")
    return n


def _rho_end(args) -> float:
    seed, r, lam, n, h = args
    state = np.array([1.0, 0.0, 0.0, 0.0])  # theta0 = pi/2
    dummy = np.zeros(1, dtype=np.int64)
    for dB in increment_chunks(seed, h, n, CHUNK, PURPOSE_PATH, r):
        K.split_phase_hist(dB, h, lam, state, n + 1, dummy)
    return float(state[2] + math.log(state[0] ** 2 + state[1] ** 2))


def gamma_mc(lam: float, T: float, replicas: int, seed: int, h: float = DEFAULT_H, jobs: int = 1) -> Estimate:
    """Mean and standard error of ``rho(T) / (2T)`` over independent paths, ``theta0 = pi/2``.

    Replica ``r`` uses the same increments as ``sample_brownian(seed, grid, replica=r)``.
    """
    if replicas < 2:
        raise ConfigurationError("need at least two replicas")
    n = _steps(T, h)
    check_phase_step(lam, h)
    rho = ordered_map(_rho_end, [(seed, r, float(lam), n, h) for r in range(replicas)], jobs)
    g = np.asarray(rho) / (2.0 * T)
    return Estimate(float(g.mean()), float(g.std(ddof=1) / math.sqrt(replicas)), replicas, float(T), int(seed),
                    tuple(g.tolist()))


def invariant_density(lam: float, T: float, burn_in: float = 50.0, bins: int = 128, seed: int = 0,
                      h: float = DEFAULT_H, replica: int = 0) -> PhaseHistogram:
    """Occupation histogram of ``theta mod pi`` over ``[burn_in, T]`` along one long path."""
    if burn_in < 10 or T < 100 * burn_in:
        raise ConfigurationError("need burn_in >= 10 and T >= 100 * burn_in")
    n = _steps(T, h)
    check_phase_step(lam, h)
    skip = round(burn_in / h)
    counts = np.zeros(int(bins), dtype=np.int64)
    state = np.array([1.0, 0.0, 0.0, 0.0])
    for dB in increment_chunks(seed, h, n, CHUNK, PURPOSE_PHASE, replica):
        K.split_phase_hist(dB, h, float(lam), state, skip, counts)
    return PhaseHistogram(int(bins), counts, float(T), float(burn_in), float(lam), h)


def furstenberg_functional(lam: float, probabilities) -> float:
    """``(1/2) sum_bins p_b * avg_b(f)`` with ``f`` the drift of ``rho``, averaged exactly over each bin."""
    p = np.asarray(probabilities, dtype=float)
    e = np.linspace(0.0, math.pi, p.size + 1)
    a, b = e[:-1], e[1:]
    int_sin2t = (np.cos(2 * a) - np.cos(2 * b)) / 2.0
    int_sin2t_sq = (b - a) / 2.0 - (np.sin(4 * b) - np.sin(4 * a)) / 8.0
    int_sin_sq = (b - a) / 2.0 - (np.sin(2 * b) - np.sin(2 * a)) / 4.0
    f_avg = (-(lam - 1.0) * int_sin2t - 0.5 * int_sin2t_sq + int_sin_sq) / (b - a)
    return 0.5 * float(np.dot(f_avg, p))


def gamma_furstenberg(lam: float, hist: PhaseHistogram) -> float:
    """Average of the ``rho`` drift against the empirical phase density."""
    if float(lam) != hist.lam:
        raise UsageError(f"histogram was sampled at lam={hist.lam}, not {lam}")
    return furstenberg_functional(lam, hist.probabilities)


def _backward_polar(path: NoisePath, lam: float, i0: int, i1: int, alpha_end: float):
    """Run the splitting scheme from node ``i1`` down to ``i0``; returns phase and rho in forward orientation.

    Reversing the axis maps ``y' -> -y'``, i.e. an angle ``a`` to ``pi - a``.
    """
    check_phase_step(lam, path.grid.h)
    dB = np.ascontiguousarray(path.kicks[i0:i1][::-1])
    a = (math.pi - alpha_end) % math.pi
    th, rh = K.split_prufer(dB, path.grid.h, float(lam), a, 0.0, True)
    return th[::-1], rh[::-1]


def oseledec_angle(path: NoisePath, lam: float, T: float | None = None, terminal_angle: float = 1.0) -> float:
    """Angle at ``t_start`` of the solution decaying towards ``t_start + T``.

    Obtained by running the flow backward from ``t_start + T`` with a
    generic terminal vector: the backward dynamics contracts every direction
    onto the forward-decaying one.
    """
    g = path.grid
    T = g.length if T is None else T
    if T < 50:
        raise ConfigurationError("need T >= 50")
    i1 = g.index_of(g.t_start + T)
    th, _ = _backward_polar(path, lam, 0, i1, terminal_angle)
    return float((math.pi - th[0]) % math.pi)


def decaying_trajectory(path: NoisePath, lam: float, T: float | None = None,
                        terminal_angle: float = 1.0) -> PruferTrajectory:
    """Solution through the decaying angle on ``[t_start, t_start + T]``, normalized to ``rho = 0`` at the start.

    A forward integration from a rounded angle picks up the growing
    direction after a time of order ``18/gamma``; the backward run has no
    such instability, so its values are reported directly.
    """
    g = path.grid
    T = g.length if T is None else T
    i1 = g.index_of(g.t_start + T)
    th, rh = _backward_polar(path, lam, 0, i1, terminal_angle)
    theta = math.pi - th
    base = math.floor(theta[0] / math.pi) * math.pi
    return PruferTrajectory(g.sub(0, i1), theta - base, rh - rh[0], float(lam))
