import math

import numpy as np
import pytest
from scipy.integrate import quad

from anderson1d.eigensolver import DIRICHLET, eigenfunction, kth_eigenvalue
from anderson1d.errors import ConfigurationError, NumericalError
from anderson1d.noise import Grid, coarsen, sample_brownian, zero_path
from anderson1d.pam import (DiscretePotential, Field, box_cells, dirac, heat_kernel_box, kernel_vs_spectral,
                            pam_kernel, pam_solve)


def _box_path(seed, L=20.0, dx=0.05, replica=0):
    n = box_cells(L, dx)
    return sample_brownian(seed, Grid.from_points(-L / 2, L / 2, n + 1), replica=replica)


def test_free_heat_kernel():
    n = box_cells(20.0, 0.025)
    u = pam_kernel(DiscretePotential.constant(0.0, -10.0, 10.0, n), 0.0, 0.1)
    exact = heat_kernel_box(0.1, 0.0, u.x, -10.0, 10.0)
    assert np.max(np.abs(u.values - exact)) <= 1e-3


def test_constant_potential_factorizes():
    n = box_cells(20.0, 0.05)
    free = pam_kernel(DiscretePotential.constant(0.0, -10.0, 10.0, n), 0.0, 0.7)
    shifted = pam_kernel(DiscretePotential.constant(1.3, -10.0, 10.0, n), 0.0, 0.7)
    sel = free.values > 1e-6 * free.values.max()
    assert np.max(np.abs(shifted.values[sel] / (math.exp(-1.3 * 0.7) * free.values[sel]) - 1)) <= 1e-8


def test_white_potential_variance():
    p = _box_path(1, L=2000.0, dx=0.05)
    pot = DiscretePotential.from_path(p)
    assert np.var(pot.values) * pot.dx == pytest.approx(1.0, abs=4 * math.sqrt(2 / pot.n))


def test_self_convergence():
    """``u(1, 0)`` on frozen increments: halving ``(dx, dt)`` shrinks the change by >= 1.5.

    Under halving 0 stays a cell face, so the Dirac mass is split over the
    two cells meeting there and ``u(1, 0)`` is their average. Single paths
    give erratic ratios; the RMS increment over eight realizations is used.
    """
    n = 200
    d = np.zeros(2)
    for seed in range(8):
        fine = sample_brownian(seed, Grid.from_points(-10.0, 10.0, 4 * n + 1))
        vals = []
        for j, f in enumerate((4, 2, 1)):
            pot = DiscretePotential.from_path(coarsen(fine, f) if f > 1 else fine)
            m = pot.n // 2
            u0 = np.zeros(pot.n)
            u0[m - 1] = u0[m] = 0.5 / pot.dx
            u = pam_solve(pot, Field(pot.x, u0, 0.0, pot.dx), 1.0, dt=0.005 / 2 ** j)
            vals.append(0.5 * (u.values[m - 1] + u.values[m]))
        d += np.diff(vals) ** 2
    d = np.sqrt(d / 8)
    print("RMS increments", d)
    assert d[0] >= 1.5 * d[1]


def test_positivity():
    pot = DiscretePotential.from_path(_box_path(2))
    u = pam_kernel(pot, 0.0, 1.0)
    assert u.values.min() >= -1e-6 * u.values.max()
    assert np.all(np.isfinite(u.values))


def test_kernel_symmetry():
    pot = DiscretePotential.from_path(_box_path(3))
    y = float(pot.x[np.argmin(np.abs(pot.x - 1.0))])
    a = pam_kernel(pot, 0.0, 0.5).at(y)
    b = pam_kernel(pot, y, 0.5).at(0.0)
    assert abs(a - b) <= 1e-3 * abs(a)


def test_semigroup_convolution():
    pot = DiscretePotential.from_path(_box_path(4))
    half = pam_kernel(pot, 0.0, 0.5)
    # K_1(0, 0) = sum_z K_half(0, z) K_half(z, 0) dx, and K_half(z, 0) = K_half(0, z)
    conv = float(np.sum(half.values ** 2) * half.dx)
    full = pam_kernel(pot, 0.0, 1.0).at(0.0)
    assert abs(conv - full) <= 1e-3 * full
    # restarting the solver from the t = 1/2 field
    again = pam_solve(pot, half, 0.5)
    assert np.max(np.abs(again.values - pam_kernel(pot, 0.0, 1.0).values)) <= 1e-3 * full


def test_mass_sandwich():
    for seed in range(3):
        pot = DiscretePotential.from_path(_box_path(5, replica=seed))
        t = 0.5
        free_mass = pam_kernel(DiscretePotential.constant(0.0, pot.left, pot.right, pot.n), 0.0, t).mass
        m = pam_kernel(pot, 0.0, t).mass
        assert math.exp(-t * pot.values.max()) * free_mass <= m <= math.exp(-t * pot.values.min()) * free_mass


def test_box_robustness():
    wide = sample_brownian(6, Grid.from_points(-40.0, 40.0, 1601 + 1))
    # the 40-box is the central 801 cells of the 80-box
    pw = DiscretePotential.from_path(wide)
    i0 = 400
    pn = DiscretePotential(pw.values[i0:i0 + 801].copy(), pw.x[i0] - pw.dx / 2, pw.x[i0 + 800] + pw.dx / 2)
    for t in (1.0, 2.0):
        a = pam_kernel(pw, 0.0, t).at(0.0)
        b = pam_kernel(pn, 0.0, t).at(0.0)
        assert abs(a - b) <= 1e-6 * a


def test_explicit_matches_default():
    pot = DiscretePotential.from_path(_box_path(7, L=10.0, dx=0.05))
    dt = 0.2 * pot.dx ** 2
    a = pam_kernel(pot, 0.0, 0.5, dt)
    b = pam_solve(pot, dirac(pot, 0.0), 0.5, dt, scheme="explicit")
    assert np.max(np.abs(a.values - b.values)) <= 2e-3 * a.values.max()
    with pytest.raises(ConfigurationError):
        pam_solve(pot, dirac(pot, 0.0), 0.5, pot.dx ** 2, scheme="explicit")


def test_solver_errors():
    pot = DiscretePotential.from_path(_box_path(8))
    deep = DiscretePotential.constant(-2000.0, -10.0, 10.0, 401)
    with pytest.raises(NumericalError):
        pam_kernel(deep, 0.0, 1.0, dt=0.5)
    with pytest.raises(ConfigurationError):
        pot.node_of(0.01)
    with pytest.raises(ConfigurationError):
        pam_solve(pot, Field(np.zeros(3), np.zeros(3), 0.0, 1.0), 1.0)


def test_kernel_vs_spectral_L20():
    r = kernel_vs_spectral(_box_path(9), 20.0, 1.0)
    print("max rel error", r.max_rel_error, "terms", r.terms)
    assert r.max_rel_error <= 0.02


def test_kernel_vs_spectral_large_time():
    p = _box_path(10)
    lam1 = kth_eigenvalue(p, 20.0, DIRICHLET, 1)
    phi = eigenfunction(p, 20.0, DIRICHLET, lam1, 1)
    pot = DiscretePotential.from_path(p)
    peak = float(pot.x[np.argmin(np.abs(pot.x - phi.t[np.argmax(np.abs(phi.phi))]))])
    r = kernel_vs_spectral(p, 20.0, 5.0, y=peak)
    j = int(np.argmin(np.abs(r.x - peak)))
    assert r.pde[j] / r.spectral[j] == pytest.approx(1.0, abs=0.01)


def test_kernel_vs_spectral_free():
    n = box_cells(20.0, 0.05)
    p = zero_path(Grid.from_points(-10.0, 10.0, n + 1))
    r = kernel_vs_spectral(p, 20.0, 1.0)
    exact = heat_kernel_box(1.0, 0.0, r.x, -10.0, 10.0)
    assert np.max(np.abs(r.pde - exact)) <= 1e-3
    assert np.max(np.abs(r.spectral - exact)) <= 1e-3


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_free_moment_control(t):
    # both sides of the identity in closed form for xi = 0
    weyl = quad(lambda lam: math.exp(-lam * t) / (2 * math.pi * math.sqrt(lam)), 0, np.inf)[0]
    assert weyl == pytest.approx(1 / math.sqrt(4 * math.pi * t), rel=1e-8)
    n = box_cells(40.0, 0.05)
    u = pam_kernel(DiscretePotential.constant(0.0, -20.0, 20.0, n), 0.0, t).at(0.0)
    assert u == pytest.approx(1 / math.sqrt(4 * math.pi * t), rel=1e-3)
