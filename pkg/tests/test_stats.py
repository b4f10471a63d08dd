import numpy as np
import pytest
from lqg_mc.errors import DomainError
from lqg_mc.rng import get_rng
from lqg_mc.stats import (
    binomial_check,
    dyadic_convergence_study,
    fit_tail_exponent,
    is_nonincreasing,
    loglog_slope,
    two_sample_ks,
)


def _pareto(a, size, seed):
    # density a x^(-a-1) on [1, inf)
    return get_rng(seed).pareto(a, size) + 1.0


def test_tail_fit(size=200000, seed=0):
    samples = _pareto(1.5, size, seed)
    fit = fit_tail_exponent(samples, (2.0, 50.0), n_bootstrap=20)
    print(f"density slope: {fit.slope:.4f} +- {fit.stderr:.4f}")
    assert fit.within(-2.5, 0.05)
    assert fit.stderr > 0 and fit.n_points >= 3
    fit = fit_tail_exponent(samples, (2.0, 50.0), kind="survival", n_bootstrap=20)
    assert fit.within(-1.5, 0.05)


def test_tail_fit_domain():
    samples = _pareto(1.5, 1000, 1)
    with pytest.raises(DomainError):
        fit_tail_exponent(samples, (5.0, 2.0))
    with pytest.raises(DomainError):
        fit_tail_exponent(samples, (100.0, 1000.0))
    with pytest.raises(DomainError):
        fit_tail_exponent(samples, (2.0, 20.0), kind="hazard", min_samples=10)


def test_two_sample_ks(n=2000, seed=2):
    rng = get_rng(seed)
    same = two_sample_ks(rng.standard_normal(n), rng.standard_normal(n))
    assert same.p_value > 1e-3
    shifted = two_sample_ks(rng.standard_normal(n), rng.standard_normal(n) + 0.5)
    assert shifted.p_value < 1e-3
    with pytest.raises(DomainError):
        two_sample_ks(np.zeros(10), np.zeros(100))
    with pytest.raises(DomainError):
        two_sample_ks(np.full(100, np.nan), np.zeros(100))


def test_binomial_check(n=10000, seed=3):
    hits = int((get_rng(seed).uniform(size=n) < 0.2).sum())
    assert binomial_check(hits, n, 0.2, n_sigma=4).passed
    assert not binomial_check(hits, n, 0.3).passed


def test_monotone_and_slope():
    assert is_nonincreasing([3.0, 2.0, 2.05], [0.1, 0.1, 0.1])
    assert not is_nonincreasing([1.0, 2.0, 3.0])
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = loglog_slope(x, x**-2)
    assert abs(fit.slope + 2.0) < 1e-12
    with pytest.raises(DomainError):
        loglog_slope([0.0, 1.0], [1.0, 1.0])


def _shifted_normals(rung, n, rng):
    return rng.standard_normal(n) + rung


def test_convergence_study(n_samples=4000):
    ladder = [0.4, 0.2, 0.1, 0.05]
    table = dyadic_convergence_study(_shifted_normals, ladder, n_samples)
    table.print_report()
    assert table.to_finest[-1] == 0.0
    assert table.to_previous[0] == 0.0
    assert table.monotone
    assert table.to_table().shape == (4, 3)
    with pytest.raises(DomainError):
        dyadic_convergence_study(_shifted_normals, [0.2, 0.1], n_samples)
