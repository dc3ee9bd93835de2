import math

import numpy as np
import pytest

from anderson1d.errors import ConfigurationError, ResolutionError
from anderson1d.noise import (Grid, bump, bump_l2, coarsen, increment_chunks, mollify, path_from_increments,
                              quadratic_envelope_constant, read_path_csv, refine_pair, sample_brownian,
                              write_path_csv)


def test_grid_invariants():
    g = Grid.from_step(-1.0, 1.0, 1e-3)
    assert g.n_points == 2001
    assert abs((g.t_end - g.t_start) - g.h * (g.n_points - 1)) <= 4 * np.finfo(float).eps
    assert g.index_of(0.0) == 1000
    with pytest.raises(ConfigurationError):
        g.index_of(0.0005)
    with pytest.raises(ConfigurationError):
        Grid.from_points(0.0, 1.0, 1)
    with pytest.raises(ConfigurationError):
        Grid.from_step(0.0, 1.0, -0.1)


def test_sample_brownian_deterministic():
    g = Grid.from_step(0.0, 10.0, 1e-3)
    a, b = sample_brownian(1, g), sample_brownian(1, g)
    assert np.array_equal(a.cumulative, b.cumulative)
    assert a.cumulative[0] == 0.0
    assert np.allclose(np.diff(a.cumulative), a.increments, rtol=0, atol=1e-12)
    assert not np.array_equal(a.increments, sample_brownian(2, g).increments)


def test_increment_moments():
    h = 1e-3
    g = Grid.from_points(0.0, 1e6 * h, 10**6 + 1)
    dB = sample_brownian(3, g).increments
    assert abs(dB.mean()) <= 4 * math.sqrt(h / 1e6)
    assert abs(dB.var() / h - 1) <= 0.01


def test_distinct_seeds_uncorrelated():
    g = Grid.from_points(0.0, 100.0, 10**5 + 1)
    a, b = sample_brownian(10, g).increments, sample_brownian(11, g).increments
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(a.size)


def test_chunks_match_path():
    g = Grid.from_points(0.0, 5.0, 5001)
    p = sample_brownian(4, g, replica=2)
    streamed = np.concatenate(list(increment_chunks(4, g.h, 5000, chunk=777, replica=2)))
    assert np.array_equal(streamed, p.increments)


def test_refine_pair_consistent():
    fine, coarse = refine_pair(5, Grid.from_points(0.0, 1.0, 11), factor=4)
    assert np.allclose(fine.cumulative[::4], coarse.cumulative, atol=1e-14)
    with pytest.raises(ConfigurationError):
        coarsen(fine, 3)


def test_bump_unit_mass():
    eps = 0.3
    s = np.linspace(-eps / 2, eps / 2, 20001)
    assert abs(np.trapezoid(bump(s, eps), s) - 1) < 1e-8
    assert abs(np.trapezoid(bump(s, eps) ** 2, s) - bump_l2(eps)) < 1e-6 * bump_l2(eps)


def test_mollify_constant_slope():
    g = Grid.from_step(0.0, 10.0, 1e-2)
    p = mollify(path_from_increments(g, np.full(g.n_points - 1, 2.5 * g.h)), 0.2)
    interior = (g.nodes > 0.5) & (g.nodes < 9.5)
    assert np.allclose(p.potential[interior], 2.5, rtol=1e-12)
    assert p.kind == "mollified" and p.eps == 0.2


def test_mollify_resolution_error():
    p = sample_brownian(0, Grid.from_step(0.0, 1.0, 1e-2))
    with pytest.raises(ResolutionError):
        mollify(p, 0.015)


def test_mollify_large_eps_averages_out():
    p = sample_brownian(0, Grid.from_step(0.0, 400.0, 1e-2))
    small = np.abs(mollify(p, 0.1).potential[15000:25000]).mean()
    large = np.abs(mollify(p, 50.0).potential[15000:25000]).mean()
    assert large < 0.05 * small


def test_mollify_variance_scaling():
    # Var(xi_eps) = int bump^2 ~ 1/eps: doubling eps halves the variance
    h = 1e-2
    g = Grid.from_step(0.0, 2.0, h)
    mid = g.index_of(1.0)
    v = {}
    for eps in (0.2, 0.4):
        vals = [mollify(sample_brownian(7, g, replica=r), eps).potential[mid] for r in range(10**4)]
        v[eps] = np.var(vals)
    assert abs(v[0.2] / v[0.4] - 2) <= 0.1
    assert abs(v[0.2] / bump_l2(0.2) - 1) < 0.05


def test_quadratic_envelope():
    p = mollify(sample_brownian(8, Grid.from_step(-20.0, 20.0, 1e-2)), 0.1)
    C = quadratic_envelope_constant(p)
    t = p.grid.nodes
    assert np.all(p.potential >= -C * (1 + t * t) - 1e-12)


def test_csv_roundtrip(tmp_path):
    p = sample_brownian(9, Grid.from_step(0.0, 1.0, 0.01))
    f = write_path_csv(p, tmp_path / "p.csv")
    q = read_path_csv(f)
    assert np.array_equal(p.increments, q.increments)
    assert q.seed == 9
    m = mollify(p, 0.05)
    q = read_path_csv(write_path_csv(m, tmp_path / "m.csv"))
    assert np.array_equal(m.potential, q.potential) and q.kind == "mollified"
