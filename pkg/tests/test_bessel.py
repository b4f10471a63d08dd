import numpy as np
import pytest
from lqg_mc.bessel import (
    bessel_via_exponentiation,
    bridge_grid,
    sample_bessel,
    sample_bessel_bridges,
    sample_bessel_excursion,
    sample_besq_batch,
    sample_excursion_lifetimes,
)
from lqg_mc.errors import DomainError
from lqg_mc.stats import binomial_check


def test_besq_mean(dimension=3.0, y0=1.0, size=20000, seed=0):
    # E[Q_t] = y0 + delta t
    values, absorbed = sample_besq_batch(dimension, y0, [0.0, 0.5, 1.0], seed, size=size)
    assert values.shape == (size, 3)
    assert np.all(absorbed == -1)
    print(f"mean Q_1: {values[:, -1].mean():.4f}")
    assert abs(values[:, -1].mean() - (y0 + dimension)) < 0.1


def test_killed_absorption(size=20000, seed=1):
    # delta = 1 from y = 1 over dt = 1: P[absorbed] = P[chi2_1 >= 1]
    _, absorbed = sample_besq_batch(1.0, 1.0, [0.0, 1.0], seed, "absorbing", size)
    check = binomial_check(int((absorbed == 1).sum()), size, 0.3173, n_sigma=4)
    print(f"absorbed fraction: {check.p_hat:.4f}")
    assert check.passed


def test_absorbing_paths(seed=2):
    times, values = sample_bessel(1.0, 0.1, 10.0, 200, seed, "absorbing", size=500)
    assert values.shape == (500, 201)
    assert np.mean(values[:, -1] == 0) > 0.9
    # absorbed paths stay at 0
    dead = np.argmax(values[:, 1:] == 0, axis=1) + 1
    for row, i in zip(values, dead):
        if row[i] == 0:
            assert np.all(row[i:] == 0)
    path = sample_bessel(3.0, 1.0, 1.0, 100, seed)
    assert path.n_points == 101 and np.all(path.values >= 0)


def test_bessel_domain():
    with pytest.raises(DomainError):
        sample_bessel(1.0, 0.0, 1.0, 10, boundary="absorbing")
    with pytest.raises(DomainError):
        sample_besq_batch(-1.0, 1.0, [0.0, 1.0])
    with pytest.raises(DomainError):
        sample_besq_batch(1.0, 1.0, [0.0, 1.0], boundary="sticky")
    with pytest.raises(DomainError):
        sample_bessel_excursion(2.5, duration=1.0)
    with pytest.raises(DomainError):
        sample_bessel_excursion(1.0)
    with pytest.raises(DomainError):
        sample_bessel_excursion(1.0, duration=1.0, min_max=1.0)
    with pytest.raises(DomainError):
        bridge_grid(1.0, 7, "log")


def test_bridge_grid(duration=2.0, n_steps=64):
    grid = bridge_grid(duration, n_steps, "log", log_depth=10.0)
    assert len(grid) == n_steps + 1
    assert grid[0] == 0.0 and grid[-1] == duration
    assert np.all(np.diff(grid) > 0)
    # mirrored around the midpoint
    assert np.allclose(grid + grid[::-1], duration)
    assert np.isclose(grid[1], duration * np.exp(-10.0))


def test_bridge_midpoint(dimension=3.0, duration=2.0, size=20000, seed=3):
    # E[R_u^2] = delta u (T - u) / T for a BES^delta bridge 0 -> 0
    times, values = sample_bessel_bridges(dimension, duration, 64, size, seed)
    assert np.all(values[:, 0] == 0) and np.all(values[:, -1] == 0)
    second = (values[:, 32] ** 2).mean()
    target = dimension * times[32] * (duration - times[32]) / duration
    print(f"E[R^2] at midpoint: {second:.4f}, target {target:.4f}")
    assert abs(second / target - 1.0) < 0.05


def test_excursions(seed=4):
    exc = sample_bessel_excursion(1.0, duration=0.5, n_steps=256, seed=seed).check()
    assert exc.bridge_dimension == 3.0
    assert np.isclose(exc.path.times[-1], 0.5)
    for i in range(5):
        exc = sample_bessel_excursion(
            1.0, min_max=2.0, n_steps=256, seed=seed + i, grid="log", log_depth=12.0
        ).check()
        assert exc.maximum >= 2.0 * (1 - 1e-12)
        assert exc.metadata["truncation"] == "min_max"


def test_lifetime_tail(size=20000, seed=5):
    # density ~ t^(delta/2 - 2), survival slope delta/2 - 1
    from lqg_mc.stats import fit_tail_exponent

    lifetimes = sample_excursion_lifetimes(1.0, 1.0, size, seed, n_steps=128)
    assert len(lifetimes) == size and np.all(lifetimes > 0)
    fit = fit_tail_exponent(lifetimes, (20.0, 2000.0), kind="survival", min_samples=500)
    print(f"survival slope: {fit.slope:.3f}")
    assert fit.within(-0.5, 0.1)


def test_exponentiation(seed=6):
    path = bessel_via_exponentiation(0.5, 1.0, 64, seed)
    assert path.metadata["dimension"] == 3.0
    assert path.times[0] == 0.0 and np.isclose(path.values[0], 1.0)
    assert np.all(path.values > 0)
