import numpy as np
import pytest

import oracles

from treejacobi import (
    AndersonConfig,
    NumericalError,
    build_theta,
    derivative_identity_check,
    estimate_half_thouless,
    parse_distribution,
    population_run,
    solve_m,
)
from treejacobi.anderson import constant, discrete, uniform, validate_config


def test_parse_const():
    d = parse_distribution("const,0.5")
    assert d.is_constant and d.bounds() == (0.5, 0.5)
    assert np.all(d.sample(np.random.default_rng(0), 4) == 0.5)


def test_parse_uniform():
    d = parse_distribution("uniform,-0.5,0.5")
    assert d.bounds() == (-0.5, 0.5)
    x = d.sample(np.random.default_rng(0), 1000)
    assert x.min() >= -0.5 and x.max() <= 0.5
    assert not d.is_constant


def test_parse_discrete():
    d = parse_distribution("discrete,-1:1,1:3")
    assert d.bounds() == (-1.0, 1.0)
    x = d.sample(np.random.default_rng(0), 20000)
    assert set(np.unique(x)) == {-1.0, 1.0}
    assert np.mean(x == 1.0) == pytest.approx(0.75, abs=0.02)


@pytest.mark.parametrize("text", ["uniform,1", "gauss,0,1", "discrete,a:b",
                                  "const", "uniform,2,1", "discrete,1:-1"])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_distribution(text)


def test_config_rejects_coupling_touching_zero():
    with pytest.raises(ValueError):
        validate_config(AndersonConfig(3, constant(0.0), uniform(0.0, 1.0)))
    with pytest.raises(ValueError):
        validate_config(AndersonConfig(1, constant(0.0), constant(1.0)))


def test_pool_collapses_to_line_m_function():
    cfg = AndersonConfig(2, constant(0.0), constant(1.0),
                         pool_size=500, sweeps=100, seed=1)
    state = population_run(cfg, 1j)
    ref = oracles.regular_tree_m(1j, 2)
    assert np.abs(state.pool - ref).max() < 1e-12
    assert state.stationary


def test_degeneration_matches_periodic_solver():
    g, params = build_theta(3, 1.0, 0.0)
    for z in (1j, 0.3 + 0.7j):
        sol = solve_m(g, params, z)
        cfg = AndersonConfig(3, constant(0.0), constant(1.0),
                             pool_size=200, sweeps=200, seed=2)
        state = population_run(cfg, z)
        assert np.abs(state.pool - sol.m[0]).max() < 1e-8


def test_rejects_real_axis():
    cfg = AndersonConfig(3, constant(0.0), constant(1.0),
                         pool_size=100, sweeps=10, seed=0)
    with pytest.raises(NumericalError):
        population_run(cfg, 2.0)
    with pytest.raises(NumericalError):
        population_run(cfg, 1.0 - 0.5j)


def test_half_thouless_constant_case_off_spectrum():
    # d=2, z -> -3: F approaches -log((3 - sqrt 5)/2)
    cfg = AndersonConfig(2, constant(0.0), constant(1.0),
                         pool_size=200, sweeps=100, seed=3)
    est = estimate_half_thouless(cfg, -3.0 + 1e-4j)
    ref = oracles.anderson_constant_F(-3.0 + 1e-4j, 2)
    assert abs(est.F - ref) < 1e-6
    assert est.stderr < 1e-8


def test_asymptotic_normalization():
    cfg = AndersonConfig(3, uniform(-0.5, 0.5), constant(1.0),
                         pool_size=10_000, sweeps=200, seed=4)
    y = 1e3
    est = estimate_half_thouless(cfg, 1j * y)
    ref = complex(np.log(y), -np.pi / 2)  # log(-i y), principal branch
    assert abs(est.F - ref) < 1e-3


def test_estimates_are_bit_deterministic():
    cfg = AndersonConfig(3, uniform(-0.5, 0.5), constant(1.0),
                         pool_size=1000, sweeps=60, seed=5)
    a = estimate_half_thouless(cfg, 1j)
    b = estimate_half_thouless(cfg, 1j)
    assert a.F == b.F and a.stderr == b.stderr and a.E_G == b.E_G


def test_seed_changes_the_estimate_noise():
    base = AndersonConfig(3, uniform(-0.5, 0.5), constant(1.0),
                          pool_size=1000, sweeps=60, seed=6)
    other = AndersonConfig(3, uniform(-0.5, 0.5), constant(1.0),
                           pool_size=1000, sweeps=60, seed=7)
    a = estimate_half_thouless(base, 1j)
    b = estimate_half_thouless(other, 1j)
    assert a.F != b.F
    assert abs(a.F - b.F) < 10 * (a.stderr + b.stderr)


def test_derivative_identity_disordered():
    cfg = AndersonConfig(3, uniform(-0.5, 0.5), constant(1.0),
                         pool_size=4000, sweeps=100, seed=8)
    rep = derivative_identity_check(cfg, 1j, 1e-3)
    assert rep.passed
    assert rep.difference <= rep.threshold


def test_derivative_check_rejects_huge_step():
    cfg = AndersonConfig(3, constant(0.0), constant(1.0),
                         pool_size=100, sweeps=10, seed=9)
    with pytest.raises(NumericalError):
        derivative_identity_check(cfg, 1j, 2.0)


def test_discrete_potential_runs_herglotz():
    cfg = AndersonConfig(3, discrete([-1.0, 1.0], [0.5, 0.5]), constant(1.0),
                         pool_size=2000, sweeps=80, seed=10)
    state = population_run(cfg, 0.5j)
    assert np.all(state.pool.imag > 0)


def test_heavy_disorder_keeps_running():
    cfg = AndersonConfig(3, uniform(-4.0, 4.0), uniform(0.5, 1.5),
                         pool_size=2000, sweeps=100, seed=11)
    est = estimate_half_thouless(cfg, 0.3j)
    assert np.isfinite(est.F.real) and np.isfinite(est.F.imag)
    assert est.stderr > 0
