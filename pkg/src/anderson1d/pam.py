"""Parabolic Anderson model ``u_t = u_xx - xi u`` on a Dirichlet box.

Space is cell-centred: the unknowns live at the midpoints of the noise
path's cells and the walls sit on the outer cell faces, so the PDE and the
spectral solver see the very same point masses ``dB_i`` at the very same
places. The white-noise potential on cell ``i`` is ``dB_i / dx``.

Time stepping is Strang splitting: an exact half step of ``-xi u``, a
Crank-Nicolson step of the Laplacian (one tridiagonal solve with a
prefactored matrix), and another half step of the potential. A few
implicit-Euler substeps damp the stiff modes excited by a Dirac initial
condition; half of them run at the start and half at the end, which keeps
the discrete propagator symmetric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._parallel import ordered_map
from .errors import ConfigurationError, NumericalError
from .noise import Grid, NoisePath, coarsen, sample_brownian


@dataclass(frozen=True, eq=False)
class DiscretePotential:
    """Per-cell potential on ``n`` cells of width ``dx`` filling ``[left, right]``."""

    values: np.ndarray
    left: float
    right: float
    kind: str = "white"

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.right - self.left) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.left + self.dx * (np.arange(self.n) + 0.5)

    @property
    def grid(self) -> Grid:
        return Grid.from_points(self.left + 0.5 * self.dx, self.right - 0.5 * self.dx, self.n)

    def node_of(self, x: float) -> int:
        j = (x - self.left) / self.dx - 0.5
        i = round(j)
        if abs(j - i) > 1e-6 or not 0 <= i < self.n:
            raise ConfigurationError(f"x={x} is not a cell centre of the box")
        return int(i)

    @classmethod
    def from_path(cls, path: NoisePath, box: tuple[float, float] | None = None) -> "DiscretePotential":
        """``dB_i / dx`` (white) or the mollified potential averaged over each cell."""
        g = path.grid
        if box is None:
            i0, i1 = 0, g.n_points - 1
        else:
            i0, i1 = g.index_of(box[0]), g.index_of(box[1])
        vals = path.kicks[i0:i1] / g.h
        return cls(np.ascontiguousarray(vals), float(g.nodes[i0]), float(g.nodes[i1]), path.kind)

    @classmethod
    def constant(cls, c: float, left: float, right: float, n: int) -> "DiscretePotential":
        return cls(np.full(n, float(c)), float(left), float(right), "constant")


@dataclass(frozen=True, eq=False)
class Field:
    """Values at the cell centres of ``pot`` at ``time``."""

    x: np.ndarray
    values: np.ndarray
    time: float
    dx: float

    def at(self, x: float) -> float:
        j = int(np.argmin(np.abs(self.x - x)))
        if abs(self.x[j] - x) > 1e-6 * self.dx:
            raise ConfigurationError(f"x={x} is not a node")
        return float(self.values[j])

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.dx)


def dirac(pot: DiscretePotential, y: float) -> Field:
    u = np.zeros(pot.n)
    u[pot.node_of(y)] = 1.0 / pot.dx
    return Field(pot.x, u, 0.0, pot.dx)


def _factor(n: int, r: float, theta: float):
    a = np.full(n, -theta * r)
    b = np.full(n, 1.0 + 2.0 * theta * r)
    c = np.full(n, -theta * r)
    # antisymmetric ghosts: u_{-1} = -u_0, u_n = -u_{n-1}
    b[0] += theta * r
    b[-1] += theta * r
    cp, den = K.tridiag_factor(a, b, c)
    return a, cp, den


def default_dt(dx: float) -> float:
    return 0.5 * dx * dx


def pam_solve(pot: DiscretePotential, u0: Field, t_end: float, dt: float | None = None, *,
              scheme: str = "strang", startup: int = 4) -> Field:
    """Evolve ``u0`` to ``t_end``.

    ``scheme="strang"`` (default) is unconditionally stable; ``"explicit"``
    is forward Euler and requires ``dt <= dx^2/2``. ``startup`` implicit
    Euler half steps replace Crank-Nicolson steps, half at each end.
    """
    if t_end < 0:
        raise ConfigurationError("t_end must be nonnegative")
    if u0.values.size != pot.n:
        raise ConfigurationError("initial field and potential disagree in size")
    dx = pot.dx
    dt = default_dt(dx) if dt is None else float(dt)
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    u = np.array(u0.values, dtype=float)
    if t_end == 0:
        return Field(pot.x, u, float(u0.time), dx)
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nsteps
    r = dt / (dx * dx)
    tmp = np.empty_like(u)
    xi = np.ascontiguousarray(pot.values, dtype=float)
    if scheme == "explicit":
        if r > 0.5 * (1 + 1e-12):
            raise ConfigurationError(f"explicit scheme needs dt <= dx^2/2, got dt={dt:.3g}, dx={dx:.3g}")
        K.pam_explicit(u, xi, r, dt, nsteps, tmp)
        return Field(pot.x, u, float(u0.time + t_end), dx)
    if scheme != "strang":
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    worst = float(-xi.min()) * dt
    if worst > 600:
        raise NumericalError(f"dt={dt:.3g} too large for the potential minimum {xi.min():.3g}",
                             xi_min=float(xi.min()), dt=dt)
    # implicit-Euler half steps, split evenly between both ends so the
    # discrete propagator stays a symmetric matrix
    n_ie = min(nsteps, (startup + 1) // 2)
    if n_ie:
        ie = _factor(pot.n, 0.5 * r, 1.0)
        ie_half = np.exp(-0.25 * dt * xi)
        K.pam_steps(u, ie_half, 0.5 * r, 1.0, *ie, n_ie, tmp)
    if nsteps > n_ie:
        a, cp, den = _factor(pot.n, r, 0.5)
        K.pam_steps(u, np.exp(-0.5 * dt * xi), r, 0.5, a, cp, den, nsteps - n_ie, tmp)
    if n_ie:
        K.pam_steps(u, ie_half, 0.5 * r, 1.0, *ie, n_ie, tmp)
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite values in the solution")
    return Field(pot.x, u, float(u0.time + t_end), dx)


def pam_kernel(pot: DiscretePotential, y: float, t: float, dt: float | None = None) -> Field:
    """``x -> e^{-tH}(y, x)``: the solution started from the discrete Dirac mass at ``y``."""
    return pam_solve(pot, dirac(pot, y), t, dt)


def heat_kernel_box(t: float, y, x, left: float, right: float, terms: int = 50):
    """Dirichlet heat kernel of ``[left, right]`` by the method of images."""
    x = np.asarray(x, dtype=float)
    Lb = right - left
    out = np.zeros_like(x)
    c = 1.0 / math.sqrt(4 * math.pi * t)
    for n in range(-terms, terms + 1):
        shift = 2 * n * Lb
        out += np.exp(-(x - y - shift) ** 2 / (4 * t))
        out -= np.exp(-(x + y - 2 * left - shift) ** 2 / (4 * t))
    return c * out


@dataclass
class SpectralComparison:
    t: float
    y: float
    max_rel_error: float
    terms: int
    x: np.ndarray = field(repr=False)
    pde: np.ndarray = field(repr=False)
    spectral: np.ndarray = field(repr=False)


def _values_at_centres(path: NoisePath, pair, i0: int) -> np.ndarray:
    """Eigenfunction at the cell midpoints: free flow over half a cell from the left node (the kick sits at the midpoint)."""
    h = path.grid.h
    lam = pair.lam
    s = 0.5 * h
    if lam > 0:
        q = math.sqrt(lam)
        C, S = math.cos(q * s), math.sin(q * s) / q
    elif lam < 0:
        q = math.sqrt(-lam)
        C, S = math.cosh(q * s), math.sinh(q * s) / q
    else:
        C, S = 1.0, s
    return C * pair.phi[:-1] + S * pair.dphi[:-1]


def kernel_vs_spectral(path: NoisePath, L: float, t: float, y: float = 0.0, window: float | None = None,
                       dt: float | None = None, cutoff: float = 1e-8) -> SpectralComparison:
    """Compare the PDE kernel with ``sum_k e^{-t lam_k} phi_k(y) phi_k(x)`` on one realization.

    Eigenpairs are taken until ``e^{-t lam_K} < cutoff e^{-t lam_1}``. The
    error is the sup over ``|x| <= window`` (default ``L/4``) of the
    difference, relative to the sup of the spectral side there.
    """
    from .eigensolver import DIRICHLET, box_indices, eigenfunction, kth_eigenvalue

    i0, i1 = box_indices(path, L)
    pot = DiscretePotential.from_path(path, (-L / 2, L / 2))
    u = pam_kernel(pot, y, t, dt)
    jy = pot.node_of(y)
    lam1 = kth_eigenvalue(path, L, DIRICHLET, 1)
    lam_stop = lam1 - math.log(cutoff) / t
    spec = np.zeros(pot.n)
    k = 1
    lam = lam1
    while True:
        pair = eigenfunction(path, L, DIRICHLET, lam, k)
        phi = _values_at_centres(path, pair, i0)
        spec += math.exp(-t * lam) * phi[jy] * phi
        k += 1
        lam = kth_eigenvalue(path, L, DIRICHLET, k)
        if lam > lam_stop:
            break
    w = L / 4 if window is None else window
    sel = np.abs(pot.x) <= w
    err = float(np.max(np.abs(u.values[sel] - spec[sel])) / np.max(np.abs(spec[sel])))
    return SpectralComparison(float(t), float(y), err, k - 1, pot.x, u.values, spec)


@dataclass
class MomentReport:
    t: float
    mc_mean: float
    mc_stderr: float
    quadrature: float
    margin: float
    replicas: int
    seed: int
    passed: bool
    box: float
    dx: float
    fine_mean: float
    refinement_gap: float
    refinement_gap_stderr: float
    free_error: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def box_cells(box: float, dx: float) -> int:
    """Odd cell count closest to ``box/dx`` so that a cell is centred at 0."""
    n = int(round(box / dx))
    return n if n % 2 else n + 1


def _centre_values(args):
    seed, r, t, box, n, refine, dt_c, dt_f = args
    half = box / 2
    fine_grid = Grid.from_points(-half, half, n * refine + 1)
    fine = sample_brownian(seed, fine_grid, replica=r)
    coarse = coarsen(fine, refine)
    pc = DiscretePotential.from_path(coarse)
    pf = DiscretePotential.from_path(fine)
    uc = pam_kernel(pc, 0.0, t, dt_c).at(0.0)
    uf = pam_kernel(pf, 0.0, t, dt_f).at(0.0)
    return uc, uf


def moment_identity_check(t: float, replicas: int, box: float = 40.0, seed: int = 0, dx: float = 0.05,
                          refine: int = 3, jobs: int = 1) -> MomentReport:
    """Monte Carlo mean of ``u^(0)(t, 0)`` against ``int e^{-lam t} n(lam) dlam``.

    Each replica is solved on its own path at ``dx`` and, for the margin, on
    the ``refine``-times finer path of the same realization. The margin is
    the Richardson-extrapolated refinement gap (rate ``dx^{1/2}``, the
    slowest plausible one) plus three of its standard errors plus the error
    of the noise-free control ``1/sqrt(4 pi t)`` at ``dx``.
    """
    from .formulas import dos_laplace_transform

    if replicas < 2:
        raise ConfigurationError("need at least two replicas")
    if refine % 2 == 0:
        raise ConfigurationError("refine must be odd to keep a cell centred at 0")
    n = box_cells(box, dx)
    dx = box / n
    dt_c = default_dt(dx)
    dt_f = default_dt(dx / refine)
    rows = ordered_map(_centre_values, [(seed, r, t, box, n, refine, dt_c, dt_f) for r in range(replicas)], jobs)
    uc = np.array([a for a, _ in rows])
    uf = np.array([b for _, b in rows])
    mean = float(uc.mean())
    se = float(uc.std(ddof=1) / math.sqrt(replicas))
    diff = uf - uc
    gap = float(diff.mean())
    gap_se = float(diff.std(ddof=1) / math.sqrt(replicas))
    zero = DiscretePotential.constant(0.0, -box / 2, box / 2, n)
    free_err = abs(pam_kernel(zero, 0.0, t, dt_c).at(0.0) - 1.0 / math.sqrt(4 * math.pi * t))
    rich = 1.0 / (1.0 - refine ** -0.5)
    margin = rich * (abs(gap) + 3 * gap_se) + free_err
    quad, _ = dos_laplace_transform(t)
    passed = abs(mean - quad) <= 3 * se + margin
    return MomentReport(float(t), mean, se, float(quad), float(margin), int(replicas), int(seed), bool(passed),
                        float(box), float(dx), float(uf.mean()), gap, gap_se, float(free_err))
