import math

import numpy as np
import pytest

from anderson1d.errors import AccuracyError, ConfigurationError
from anderson1d.formulas import (QuadratureConfig, dos_laplace_transform, dos_N_exact, dos_n_exact, dos_table,
                                 gamma_exact, gamma_exact_with_error, log_dos_N, moment_integrals)
from anderson1d.quadrature import gk15, integrate

from conftest import GOLDEN, golden_value

LAMS = [float(k) for k in GOLDEN["lambda"]]


@pytest.mark.parametrize("lam", LAMS)
def test_gamma_matches_golden(lam):
    assert gamma_exact(lam) == pytest.approx(golden_value("gamma", lam), rel=1e-9)


@pytest.mark.parametrize("lam", LAMS)
def test_log_N_matches_golden(lam):
    assert log_dos_N(lam) == pytest.approx(golden_value("log_N", lam), rel=1e-10, abs=1e-9)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_laplace_matches_golden(t):
    val, err = dos_laplace_transform(t)
    assert val == pytest.approx(GOLDEN["laplace"][repr(t)]["value"], rel=1e-8)
    assert err < 1e-8 * val


def test_gamma_asymptotics():
    assert gamma_exact(100.0) == pytest.approx(1 / 800, rel=0.05)
    assert gamma_exact(-25.0) == pytest.approx(5.0, rel=0.10)
    assert dos_N_exact(400.0) == pytest.approx(math.sqrt(400) / math.pi, rel=0.02)


def test_N_lifshitz_tail():
    assert dos_N_exact(-40.0) < dos_N_exact(-20.0) < 1e-3 * dos_N_exact(0.0)


def test_N_monotone_and_positive():
    lams = np.linspace(-10, 10, 100)
    N = np.array([dos_N_exact(x) for x in lams])
    assert np.all(np.diff(N) > 0)
    for lam in np.linspace(-50, 50, 41):
        assert gamma_exact(lam) > 0
        assert log_dos_N(lam) > -1e5 and math.isfinite(log_dos_N(lam))
        assert dos_n_exact(lam) >= 0


@pytest.mark.parametrize("lam", [0.0, 5.0])
def test_n_identity_vs_finite_difference(lam):
    d = 1e-4
    fd = (dos_N_exact(lam + d) - dos_N_exact(lam - d)) / (2 * d)
    assert dos_n_exact(lam) == pytest.approx(fd, rel=1e-6)


def test_tolerance_halving_stable():
    for lam in (-12.0, -3.0, 0.0, 4.0, 50.0):
        g1, e1 = gamma_exact_with_error(lam, QuadratureConfig(rel_tol=1e-10))
        g2, _ = gamma_exact_with_error(lam, QuadratureConfig(rel_tol=5e-11))
        assert abs(g1 - g2) <= max(e1, 1e-15 * g1)


def test_cutoff_doubling_stable():
    a = dos_laplace_transform(1.0)[0]
    b = dos_laplace_transform(1.0, QuadratureConfig(exponent_cutoff=-120.0))[0]
    assert a == pytest.approx(b, rel=1e-9)


def test_saddle_branch_continuous():
    # both sides of the switch to the shifted variable
    a, b = gamma_exact(-10.0 + 1e-9), gamma_exact(-10.0 - 1e-9)
    assert a == pytest.approx(b, rel=1e-7)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        QuadratureConfig(rel_tol=1e-3)
    with pytest.raises(ConfigurationError):
        QuadratureConfig(exponent_cutoff=-10.0)
    with pytest.raises(ConfigurationError):
        gamma_exact(float("nan"))


def test_accuracy_error_on_budget():
    with pytest.raises(AccuracyError) as e:
        moment_integrals(0.0, QuadratureConfig(rel_tol=1e-14, abs_tol=1e-16, max_panels=2))
    assert "achieved" in str(e.value) or e.value.payload


def test_gk15_exact_polynomials():
    for deg in range(0, 24):
        v, _ = gk15(lambda x: x ** deg, 0.0, 1.0)
        assert v == pytest.approx(1 / (deg + 1), rel=1e-13)


def test_integrate_singular_and_stacked():
    (a, b), _ = integrate(lambda x: np.stack([np.sqrt(x), np.exp(-x)]), [0.0, 1.0], rel_tol=1e-12)
    assert a == pytest.approx(2 / 3, rel=1e-11)
    assert b == pytest.approx(1 - math.exp(-1), rel=1e-12)


def test_dos_table_columns():
    rows = dos_table([-1.0, 0.0, 1.0])
    for lam, g, N, n in rows:
        assert n == pytest.approx(4 * g * N, rel=1e-14)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_laplace_cutoff_doubling(t):
    a = dos_laplace_transform(t)[0]
    b = dos_laplace_transform(t, QuadratureConfig(exponent_cutoff=-120.0))[0]
    assert abs(a - b) <= 1e-12 * a
