"""Finite-volume spectra of ``-d^2/dt^2 + xi`` on ``[-L/2, L/2]`` with boundary angle ``alpha`` at both ends.

A state satisfies the boundary condition when ``(y, y')`` is parallel to
``e_alpha = (sin alpha, cos alpha)``; ``alpha = 0`` is Dirichlet. Everything
rests on the phase of the solution started at ``-L/2`` with angle
``alpha``: its end value is continuous and strictly increasing in ``lam``,
and it passes ``alpha + k pi`` exactly at the eigenvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DegenerateError, FitQualityError, NumericalError, PhaseMismatchError
from .noise import NoisePath
from .shooting import check_phase_step, lattice_index, phase_at_end
from . import _kernels as K

PI = math.pi


@dataclass(frozen=True)
class BoundaryCondition:
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < PI:
            raise ConfigurationError(f"boundary angle must lie in [0, pi), got {self.alpha}")

    @property
    def vector(self) -> tuple[float, float]:
        return math.sin(self.alpha), math.cos(self.alpha)


DIRICHLET = BoundaryCondition(0.0)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """Normalized eigenfunction samples on the box nodes ``t``.

    ``log_amp`` is ``ln sqrt(phi^2 + phi'^2)`` computed from the phase
    representation, so it stays accurate where ``phi`` itself underflows.
    """

    k: int
    lam: float
    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    phi0: float
    dphi0: float
    l2_norm_check: float
    log_amp: np.ndarray | None = field(default=None, repr=False)
    alpha: float = 0.0
    theta: np.ndarray | None = field(default=None, repr=False)

    @property
    def sign_changes(self) -> int:
        """Interior zeros; read off the phase when available since ``phi`` may underflow in the tails."""
        if self.theta is not None:
            return interior_sign_changes(np.sin(self.theta), rel=1e-9)
        return interior_sign_changes(self.phi)


@dataclass(frozen=True)
class Atom:
    lam: float
    w_xi: float
    w_zeta: float
    w_eta: float

    @property
    def sigma(self) -> float:
        return self.w_xi + self.w_zeta


@dataclass(frozen=True)
class SpectralAtoms:
    atoms: tuple

    def sums(self, idx=None) -> tuple[float, float, float]:
        sel = self.atoms if idx is None else [self.atoms[i] for i in idx]
        return (sum(a.w_xi for a in sel), sum(a.w_zeta for a in sel), sum(a.w_eta for a in sel))

    @property
    def lams(self) -> np.ndarray:
        return np.array([a.lam for a in self.atoms])


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay rates on both sides of the localization centre.

    A side shorter than the minimal window length reports ``nan``.
    ``decaying`` is false when neither side loses at least one e-fold over its window.
    """

    left: float
    right: float
    center: float
    decaying: bool

    def __iter__(self):
        return iter((self.left, self.right))


def interior_sign_changes(phi, rel: float = 1e-12) -> int:
    """Sign changes of ``phi`` ignoring values below ``rel * max|phi|`` (boundary zeros)."""
    phi = np.asarray(phi)
    s = np.sign(np.where(np.abs(phi) > rel * np.abs(phi).max(), phi, 0.0))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def box_indices(path: NoisePath, L: float) -> tuple[int, int]:
    if not L > 0:
        raise ConfigurationError(f"L must be positive, got {L}")
    g = path.grid
    if not g.contains(-L / 2, L / 2):
        raise ConfigurationError(f"[-{L / 2}, {L / 2}] is not inside the path grid [{g.t_start}, {g.t_end}]")
    return g.index_of(-L / 2), g.index_of(L / 2)


def end_phase(path: NoisePath, L: float, bc: BoundaryCondition, lam: float) -> float:
    """Phase at ``L/2`` of the solution leaving ``-L/2`` with angle ``alpha``."""
    i0, i1 = box_indices(path, L)
    return phase_at_end(path, lam, bc.alpha, i0, i1)[0]


def _count_from_phase(theta: float, alpha: float) -> int:
    if alpha == 0.0:
        return max(0, int(math.ceil(theta / PI - 1e-12)) - 1)
    return max(0, int(math.ceil((theta - alpha) / PI - 1e-12)))


def eigenvalue_count(path: NoisePath, L: float, bc: BoundaryCondition, lam: float) -> int:
    """Number of eigenvalues strictly below ``lam``."""
    return _count_from_phase(end_phase(path, L, bc, lam), bc.alpha)


def _target_phase(k: int, alpha: float) -> float:
    return k * PI if alpha == 0.0 else alpha + (k - 1) * PI


def eigen_bracket(path, L, bc, k, lo=-10.0, hi=None, max_doublings=60) -> tuple[float, float]:
    """``[lo, hi]`` with ``count(lo) < k <= count(hi)``; the lower end is pushed down until no eigenvalue is left below it."""
    hi = lo + 20.0 if hi is None else hi
    n = 0
    while eigenvalue_count(path, L, bc, lo) > 0:
        lo = 2.0 * lo if lo < 0 else lo - 10.0
        n += 1
        if n > max_doublings:
            raise NumericalError("lower bracket expansion exhausted", lo=lo)
    n = 0
    while eigenvalue_count(path, L, bc, hi) < k:
        hi = lo + 2.0 * (hi - lo)
        n += 1
        if n > max_doublings:
            raise NumericalError("upper bracket expansion exhausted", hi=hi)
    return lo, hi


def kth_eigenvalue(path: NoisePath, L: float, bc: BoundaryCondition, k: int, lam_tol: float = 1e-10,
                   bracket: tuple[float, float] | None = None) -> float:
    """``k``-th eigenvalue (``k >= 1``) to absolute accuracy ``lam_tol``.

    The count is bisected until the bracket isolates eigenvalue ``k``; the
    continuous end phase is then solved for its target with Brent's method.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if not lam_tol > 0:
        raise ConfigurationError("lam_tol must be positive")
    i0, i1 = box_indices(path, L)
    lo, hi = eigen_bracket(path, L, bc, k) if bracket is None else bracket

    def phase(lam):
        return phase_at_end(path, lam, bc.alpha, i0, i1)[0]

    while True:
        c_lo = _count_from_phase(phase(lo), bc.alpha)
        c_hi = _count_from_phase(phase(hi), bc.alpha)
        if not c_lo < k <= c_hi:
            raise NumericalError("bracket does not enclose the requested eigenvalue", k=k, lo=lo, hi=hi)
        if c_lo == k - 1 and c_hi == k:
            break
        mid = 0.5 * (lo + hi)
        if _count_from_phase(phase(mid), bc.alpha) >= k:
            hi = mid
        else:
            lo = mid
        if hi - lo < lam_tol:
            raise DegenerateError("eigenvalues closer than lam_tol", k=k, lo=lo, hi=hi)
    target = _target_phase(k, bc.alpha)
    lam = brentq(lambda x: phase(x) - target, lo, hi, xtol=min(lam_tol, 1e-12) / 4, rtol=4 * np.finfo(float).eps,
                 maxiter=200)
    return float(lam)


def eigenvalues_in_window(path: NoisePath, L: float, bc: BoundaryCondition, lo: float, hi: float,
                          lam_tol: float = 1e-10) -> list[tuple[int, float]]:
    """All ``(k, lam_k)`` with ``lo <= lam_k < hi``."""
    k0 = eigenvalue_count(path, L, bc, lo)
    k1 = eigenvalue_count(path, L, bc, hi)
    out = []
    left = lo
    for k in range(k0 + 1, k1 + 1):
        lam = kth_eigenvalue(path, L, bc, k, lam_tol, bracket=(left, hi))
        out.append((k, lam))
        left = lam
    return out


def _side_phases(path: NoisePath, lam: float, alpha: float, i0: int, i1: int):
    """Phase and rho of the solutions from the left end (forward) and from the right end (backward)."""
    h = path.grid.h
    dB = np.ascontiguousarray(path.kicks[i0:i1])
    check_phase_step(lam, h)
    thL, rhL = K.split_prufer(dB, h, lam, alpha, 0.0, True)
    # the reflected axis sends y' to -y' and an angle a to pi - a
    thS, rhS = K.split_prufer(np.ascontiguousarray(dB[::-1]), h, lam, (PI - alpha) % PI, 0.0, True)
    thR = PI - thS[::-1]
    rhR = rhS[::-1]
    return thL, rhL, thR, rhR


def eigenfunction(path: NoisePath, L: float, bc: BoundaryCondition, lam: float, k: int | None = None,
                  match_tol: float = 1e-6) -> Eigenpair:
    """Eigenfunction for an accurately computed eigenvalue ``lam`` by two-sided shooting.

    The two solutions are joined where the sum of their log-moduli peaks,
    i.e. at the localization centre, where each of them has only grown since
    leaving its own end and is therefore accurate. They are scaled to agree
    there and normalized in ``L^2``. The sign makes
    ``phi`` positive at its first node with ``|phi| > 1e-3``. ``phi0`` and
    ``dphi0`` are nan when ``t = 0`` is not a grid node.
    """
    i0, i1 = box_indices(path, L)
    t = path.grid.nodes[i0:i1 + 1]
    thL, rhL, thR, rhR = _side_phases(path, float(lam), bc.alpha, i0, i1)
    m = int(np.argmax(rhL + rhR))
    mismatch = math.sin(thL[m] - thR[m])
    if abs(mismatch) > match_tol:
        raise PhaseMismatchError(f"phase mismatch {mismatch:.3g} at t={t[m]:.6g}; refine the eigenvalue",
                                 mismatch=mismatch, t=float(t[m]))
    sgn = 1.0 if math.cos(thL[m] - thR[m]) > 0 else -1.0
    rho = np.empty_like(rhL)
    theta = np.empty_like(thL)
    rho[:m + 1] = rhL[:m + 1] - rhL[m]
    rho[m + 1:] = rhR[m + 1:] - rhR[m]
    theta[:m + 1] = thL[:m + 1]
    theta[m + 1:] = thR[m + 1:] + (0.0 if sgn > 0 else PI)
    amp = np.exp(0.5 * rho)
    phi = amp * np.sin(theta)
    dphi = amp * np.cos(theta)
    h = path.grid.h
    norm2 = np.trapezoid(phi * phi, dx=h)
    c = 1.0 / math.sqrt(norm2)
    first = np.nonzero(np.abs(phi * c) > 1e-3)[0]
    if first.size and phi[first[0]] < 0:
        c = -c
    phi *= c
    dphi *= c
    log_amp = 0.5 * rho + math.log(abs(c))
    try:
        j0 = path.grid.index_of(0.0) - i0
    except ConfigurationError:
        j0 = None  # 0 is not a node: phi0 and dphi0 are reported as nan
    if c < 0:
        theta = theta + PI
    if k is None:
        k = interior_sign_changes(np.sin(theta), rel=1e-9) + 1
    return Eigenpair(int(k), float(lam), t, phi, dphi, float(phi[j0]) if j0 is not None else math.nan,
                    float(dphi[j0]) if j0 is not None else math.nan,
                     float(np.trapezoid(phi * phi, dx=h)), log_amp, bc.alpha, theta)


def eigenpairs(path: NoisePath, L: float, bc: BoundaryCondition, ks, lam_tol: float = 1e-10) -> list[Eigenpair]:
    out = []
    for k in ks:
        lam = kth_eigenvalue(path, L, bc, k, lam_tol)
        out.append(eigenfunction(path, L, bc, lam, k))
    return out


def spectral_measure_atoms(pairs) -> SpectralAtoms:
    """Atoms ``(lam_k, phi(0)^2, phi'(0)^2, phi(0) phi'(0))``."""
    return SpectralAtoms(tuple(Atom(p.lam, p.phi0 ** 2, p.dphi0 ** 2, p.phi0 * p.dphi0) for p in pairs))


def empirical_ids(path: NoisePath, L: float, lams, bc: BoundaryCondition = DIRICHLET) -> np.ndarray:
    """Eigenvalue counts divided by ``L`` at each ``lam``."""
    return np.array([eigenvalue_count(path, L, bc, x) for x in lams], dtype=float) / L


def operator_residual(pair: Eigenpair, path: NoisePath) -> float:
    """``||(H - lam) phi|| / ||phi||`` with a three-point Laplacian and the potential averaged over the two cells at each node."""
    h = path.grid.h
    i0 = path.grid.index_of(pair.t[0])
    dB = path.kicks[i0:i0 + pair.t.size - 1]
    phi = pair.phi
    lap = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / (h * h)
    pot = 0.5 * (dB[:-1] + dB[1:]) / h
    r = -lap + pot * phi[1:-1] - pair.lam * phi[1:-1]
    return float(math.sqrt(np.sum(r * r) * h / (np.sum(phi * phi) * h)))


MIN_FIT_LENGTH = 20.0


def decay_rate_fit(pair: Eigenpair, center: float | None = None, window: tuple[float, float] | None = None,
                   center_gap: float | None = None) -> DecayFit:
    """Slopes of ``-ln sqrt(phi^2 + phi'^2)`` against ``|t - center|`` on each side of the centre.

    The default window drops 2.5% of the box at each wall; ``center_gap``
    (default 2.5% of the box) is excluded on each side of the centre, which
    is the maximum of ``phi^2 + phi'^2`` unless given.
    """
    t = pair.t
    L = t[-1] - t[0]
    la = pair.log_amp if pair.log_amp is not None else 0.5 * np.log(pair.phi ** 2 + pair.dphi ** 2)
    if center is None:
        center = float(t[np.argmax(la)])
    if window is None:
        window = (t[0] + 0.025 * L, t[-1] - 0.025 * L)
    gap = 0.025 * L if center_gap is None else center_gap
    rates = []
    efolds = []
    for side in (-1, 1):
        if side < 0:
            sel = (t >= window[0]) & (t <= center - gap)
        else:
            sel = (t <= window[1]) & (t >= center + gap)
        if not sel.any() or np.ptp(t[sel]) < MIN_FIT_LENGTH:
            rates.append(float("nan"))
            continue
        d = np.abs(t[sel] - center)
        slope = np.polyfit(d, la[sel], 1)[0]
        rates.append(float(-slope))
        efolds.append(abs(slope) * np.ptp(d))
    if all(math.isnan(r) for r in rates):
        raise FitQualityError("both fit windows are shorter than the minimal length", min_length=MIN_FIT_LENGTH)
    decaying = any(e >= 1.0 for e in efolds) and all(r > 0 for r in rates if not math.isnan(r))
    return DecayFit(rates[0], rates[1], float(center), bool(decaying))


def localized_sample(path: NoisePath, L: float, targets, lo: float = -1.0, hi: float = 1.0,
                     bc: BoundaryCondition = DIRICHLET, central: float = 0.25) -> list:
    """Decay-rate fits of the eigenpairs nearest each target eigenvalue.

    Only eigenpairs with ``lo <= lam <= hi`` whose centre lies within
    ``central * L`` of the middle of the box are eligible, so both sides
    leave a long fit window; each eigenpair is used once. Returns rows
    ``(k, lam, center, rate_left, rate_right)``.
    """
    pool = []
    for k, lam in eigenvalues_in_window(path, L, bc, lo, hi):
        pair = eigenfunction(path, L, bc, lam, k)
        c = float(pair.t[np.argmax(pair.log_amp)])
        mid = 0.5 * (pair.t[0] + pair.t[-1])
        if abs(c - mid) <= central * L:
            pool.append((k, lam, c, pair))
    rows = []
    for target in targets:
        if not pool:
            break
        k, lam, c, pair = min(pool, key=lambda x: abs(x[1] - target))
        pool = [x for x in pool if x[0] != k]
        fit = decay_rate_fit(pair, center=c)
        rows.append((k, lam, c, fit.left, fit.right))
    return rows
