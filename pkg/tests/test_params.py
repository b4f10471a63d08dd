import numpy as np
import pytest
from lqg_mc.errors import DomainError, RetryLimitError, UnsupportedParameterError
from lqg_mc.params import (
    GAMMA_SQRT_8_3,
    BesselDimensions,
    ScalingAction,
    apply_scaling,
    is_sqrt_8_3,
    make_params,
    shift_for_area,
    shift_for_boundary,
    sphere_area_exponent,
)
from lqg_mc.rng import MODULE_ID, child_seed, get_rng, resolve_threads, run_tasks


def test_make_params(gamma=GAMMA_SQRT_8_3):
    params = make_params(gamma)
    assert np.isclose(params.kappa, 8.0 / 3.0)
    assert np.isclose(params.kappa_prime, 6.0)
    assert np.isclose(params.q_charge, 2.0 / gamma + gamma / 2.0)
    # -cos(2 pi / 3)
    assert np.isclose(params.bm_correlation, 0.5)
    assert abs(make_params(np.sqrt(2.0)).bm_correlation) < 1e-12
    assert is_sqrt_8_3(params)
    assert not is_sqrt_8_3(make_params(1.5))


def test_make_params_domain():
    for gamma in (0.0, 2.0, -1.0, np.nan, np.inf):
        with pytest.raises(DomainError):
            make_params(gamma)


def test_bessel_dimensions():
    params = make_params(GAMMA_SQRT_8_3)
    dims = BesselDimensions(params)
    assert np.isclose(dims.sphere_dim, 1.0)
    assert np.isclose(dims.disk_dim, 1.5)
    assert np.isclose(dims.excursion_dim(dims.sphere_dim), 3.0)
    cone = dims.cone_dim(params.gamma)
    assert np.isclose(cone, 2.0 + (4.0 / params.gamma) * (params.q_charge - params.gamma))
    assert np.isclose(sphere_area_exponent(params), -1.5)


def test_scaling(shift_c=0.7):
    params = make_params(GAMMA_SQRT_8_3)
    act = ScalingAction(shift_c)
    area = apply_scaling(act, 2.0, "area", params)
    assert np.isclose(area, 2.0 * np.exp(params.gamma * shift_c))
    assert np.isclose(
        apply_scaling(act, 2.0, "boundary", params), 2.0 * np.exp(params.gamma * shift_c / 2.0)
    )
    assert np.isclose(
        apply_scaling(act, 1.0, "natural_time", params), act.boundary_factor(params) ** 1.5
    )
    # composition adds the shifts
    other = ScalingAction(-0.2)
    assert np.isclose(
        act.compose(other).area_factor(params),
        act.area_factor(params) * other.area_factor(params),
    )
    with pytest.raises(DomainError):
        apply_scaling(act, 1.0, "volume", params)
    with pytest.raises(UnsupportedParameterError):
        apply_scaling(act, 1.0, "natural_time", make_params(np.sqrt(2.0)))


def test_unit_shifts():
    params = make_params(1.2)
    for area in (1e-3, 1.0, 42.0):
        c = shift_for_area(area, params)
        assert np.isclose(area * ScalingAction(c).area_factor(params), 1.0)
    for length in (0.1, 3.0):
        c = shift_for_boundary(length, params, target=2.0)
        assert np.isclose(length * ScalingAction(c).boundary_factor(params), 2.0)


def test_retry_limit_error():
    err = RetryLimitError("budget", n_tries=200, n_accepted=5)
    assert np.isclose(err.acceptance_rate, 0.025)
    assert "tries: 200" in str(err)
    assert RetryLimitError("budget").acceptance_rate == 0.0


def _draw(rng, index, size):
    return rng.uniform(size=size)


def test_rng_streams(seed=11):
    a = get_rng(seed, "stable", 3).uniform(size=5)
    b = get_rng(seed, "stable", 3).uniform(size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, get_rng(seed, "stable", 4).uniform(size=5))
    assert not np.array_equal(a, get_rng(seed, "bessel", 3).uniform(size=5))
    rng = get_rng(seed)
    assert get_rng(rng) is rng
    assert 0 <= child_seed(rng) < 2**63
    assert resolve_threads(0) >= 1
    assert resolve_threads(3) == 3


def test_module_streams_distinct(seed=0, n_tasks=8):
    # every module keys its own streams, so task i of one never replays another
    assert len(set(MODULE_ID.values())) == len(MODULE_ID)
    crossval = [get_rng(seed, "crossval", i).uniform() for i in range(n_tasks)]
    verify = [get_rng(seed, "verify", i).uniform() for i in range(2 * n_tasks)]
    assert not set(crossval) & set(verify)


def test_run_tasks_order(seed=5, n_tasks=6):
    out = run_tasks(_draw, n_tasks, seed, "core", 1, size=3)
    assert len(out) == n_tasks
    for i, vals in enumerate(out):
        assert np.array_equal(vals, get_rng(seed, "core", i).uniform(size=3))
