import os
import numpy as np
import pytest
from lqg_mc.errors import DomainError, UnsupportedParameterError
from lqg_mc.field import CylinderField, compute_area_measure, theta_grid
from lqg_mc.params import GAMMA_SQRT_8_3, make_params
from lqg_mc.rng import get_rng
from lqg_mc.sphere import (
    DiskAreaLaw,
    SphereSample,
    area_exceedance_table,
    assemble_levy_sphere,
    bottleneck_acceptance_rates,
    bottleneck_hitting_times,
    h2_circle_variance,
    reweight_areas,
    sample_quantum_cone_field,
    sample_quantum_disk,
    sample_sphere_bessel,
    sample_sphere_bottleneck,
    sphere_marked_point_weight,
    sphere_observable,
    truncation_leakage,
    window_min_max,
)
from lqg_mc.stats import is_nonincreasing

SMALL_GRID = {"n_theta": 16, "n_modes": 4}


def _flat_sphere(params, n_x=33, n_theta=32):
    dx = 2.0 * np.pi / n_theta
    field = CylinderField(
        dx * np.arange(n_x), theta_grid(n_theta), np.zeros(n_x), metadata={"gamma": params.gamma}
    )
    measure = compute_area_measure(field, 4.0 * dx, params)
    return SphereSample(field, measure.total, measure)


def test_sphere_sample():
    params = make_params(GAMMA_SQRT_8_3)
    sample = _flat_sphere(params)
    dx = sample.field.dx
    # uniform mass over 33 columns
    assert np.isclose(sphere_observable(sample, "iqr_width"), 16.5 * dx)
    assert np.isclose(sphere_observable(sample, "h1_median"), sample.shift_c)
    assert np.isclose(sample.unit_area_cells().sum(), 1.0)
    unit = compute_area_measure(sample.unit_area_field(), 4.0 * dx, params)
    assert np.isclose(unit.total, 1.0, rtol=1e-10)
    with pytest.raises(DomainError):
        sphere_observable(sample, "diameter")


def test_sphere_bessel(seed=0):
    params = make_params(GAMMA_SQRT_8_3)
    sample = sample_sphere_bessel(
        params, area_window=(1e-12, 1e12), n_steps=256, seed=seed, **SMALL_GRID
    )
    assert sample.provenance == "bessel"
    assert 1e-12 <= sample.area <= 1e12
    assert sample.metadata["n_tries"] >= 1
    assert np.isclose(sample.measure.total, sample.area)
    # the huge window clamps the truncation at the height floor
    assert np.isclose(sample.metadata["min_max"], np.exp(-5.0))
    assert sample.metadata["excursion_max"] >= sample.metadata["min_max"]
    with pytest.raises(DomainError):
        sample_sphere_bessel(params, area_window=(2.0, 1.0))


def test_window_min_max():
    params = make_params(GAMMA_SQRT_8_3)
    assert np.isclose(window_min_max(params, 1.0), 0.05)
    assert np.isclose(window_min_max(params, 4.0), 0.1)
    assert np.isclose(window_min_max(params, 4.0, power=1.0), 0.2)
    assert np.isclose(window_min_max(params, 1e-12), np.exp(-5.0))
    # a deeper floor lets the window term win again
    assert np.isclose(window_min_max(params, 1e-6, height_floor=-20.0 / params.gamma), 5e-5)


def test_truncation_leakage(n_draws=400, seed=8):
    params = make_params(GAMMA_SQRT_8_3)
    leak = truncation_leakage(
        params, (1.0, 100.0), n_draws=n_draws, n_steps=256, seed=seed, **SMALL_GRID
    )
    print(f"in window: {leak.n_in_window}, below min_max: {leak.n_below}")
    print("-----------------")
    assert np.isclose(leak.min_max, 0.05)
    assert leak.n_draws == n_draws
    assert leak.n_in_window >= 5
    assert leak.fraction <= 0.05


def test_cone_field(seed=1):
    params = make_params(GAMMA_SQRT_8_3)
    field = sample_quantum_cone_field(params, params.gamma, (-4.0, 8.0), seed=seed, **SMALL_GRID)
    zero = int(np.argmin(np.abs(field.x)))
    assert field.x[zero] == 0.0 and field.h1[zero] == 0.0
    # conditioned to stay positive on the left
    assert np.all(field.h1[:zero] > 0)
    assert len(field.h1) == len(field.x) == field.h2.shape[0]
    with pytest.raises(DomainError):
        sample_quantum_cone_field(params, params.q_charge + 1.0, **SMALL_GRID)


def test_bottleneck_helpers(seed=2):
    params = make_params(GAMMA_SQRT_8_3)
    times = bottleneck_hitting_times(params, [-1.0, -2.0, -4.0], seed, n_theta=16)
    assert times[0] <= times[1] <= times[2]
    assert 0 < h2_circle_variance(2.0, 8) < h2_circle_variance(0.5, 8)
    assert h2_circle_variance(0.5, 8) <= np.sum(1.0 / np.arange(1, 9)) + 1e-12
    with pytest.raises(DomainError):
        sample_sphere_bottleneck(params, r=1.0)



def test_bottleneck_acceptance_monotone(n_proposals=300, seed=9):
    # nested windows: the rate can only drop as epsilon shrinks
    params = make_params(GAMMA_SQRT_8_3)
    rates = bottleneck_acceptance_rates(
        params, [5.0, 0.05, 50.0, 0.5], n_proposals, r=-1.0, seed=seed, **SMALL_GRID
    )
    assert np.array_equal(rates[:, 0], [0.05, 0.5, 5.0, 50.0])
    assert np.all((rates[:, 1] >= 0) & (rates[:, 1] <= 1))
    assert np.all(np.diff(rates[:, 1]) >= 0)
    assert is_nonincreasing(rates[::-1, 1], rates[::-1, 2])
    with pytest.raises(DomainError):
        bottleneck_acceptance_rates(params, [0.0, 1.0], 10)


def test_unit_boundary_disk(seed=3):
    params = make_params(GAMMA_SQRT_8_3)
    disk = sample_quantum_disk(
        params, "unit_boundary", boundary_window=(1e-9, 1e9), n_steps=256, seed=seed, **SMALL_GRID
    )
    assert disk.field.geometry == "strip"
    assert np.isclose(disk.boundary_length, 1.0, rtol=1e-9)
    raw = disk.metadata["raw_area"]
    assert np.isclose(disk.area, raw * np.exp(params.gamma * disk.shift_c))
    assert disk.marked_point[1] in (0.0, np.pi)
    assert disk.field.x[0] <= disk.marked_point[0] <= disk.field.x[-1]

    disk = sample_quantum_disk(
        params, ("boundary_length", 2.5), boundary_window=(1e-9, 1e9), n_steps=256,
        seed=seed, **SMALL_GRID
    )
    assert np.isclose(disk.boundary_length, 2.5, rtol=1e-9)
    with pytest.raises(DomainError):
        sample_quantum_disk(params, ("bogus", 1.0))


def test_unit_area_disk(seed=4):
    params = make_params(GAMMA_SQRT_8_3)
    disk = sample_quantum_disk(
        params, "unit_area", area_window=(1e-12, 1e12), unweight_scale=1e9, n_steps=256,
        seed=seed, **SMALL_GRID
    )
    assert np.isclose(disk.area, 1.0, rtol=1e-9)
    assert disk.metadata["n_capped"] == 1


def test_disk_area_law(tmp_path):
    law = DiskAreaLaw([2.0])
    assert np.allclose(law.sample(np.array([1.0, 3.0]), get_rng(0)), [2.0, 18.0])
    output_file = os.path.join(str(tmp_path), "disk_area_law.npz")
    DiskAreaLaw([1.0, 2.0, 4.0]).save_npz(output_file)
    assert np.array_equal(DiskAreaLaw(input_file=output_file).areas, [1.0, 2.0, 4.0])


def test_levy_sphere(seed=5):
    params = make_params(GAMMA_SQRT_8_3)
    law = DiskAreaLaw([1.0])
    sphere = assemble_levy_sphere(params, ("min_height", 1.0), "none", law, n_steps=128, seed=seed)
    sizes = sphere.excursion.jumps[:, 1]
    # unit-boundary area 1: every jump contributes b^2
    assert np.allclose(sphere.areas, sizes**2)
    threshold = sphere.metadata["jump_threshold"]
    small = sphere.excursion.duration * sphere.metadata["c0"] * 2.0 * np.sqrt(threshold)
    assert np.isclose(sphere.small_jump_area, small)
    assert np.isclose(sphere.total_area, np.sum(sizes**2) + small)
    assert sphere.n_materialized == 0
    assert sphere.to_table().shape == (len(sizes), 6)
    assert {d.orientation for d in sphere.decorations} <= {"cw", "ccw"}

    with pytest.raises(DomainError):
        assemble_levy_sphere(params, ("min_height", 1.0), ("all_above", 0.01), law, n_steps=128)
    with pytest.raises(UnsupportedParameterError):
        assemble_levy_sphere(make_params(np.sqrt(2.0)), area_law=law)


def test_levy_sphere_top_k(seed=6):
    params = make_params(GAMMA_SQRT_8_3)
    disk_kwargs = dict(boundary_window=(1e-9, 1e9), n_steps=256, **SMALL_GRID)
    sphere = assemble_levy_sphere(
        params, ("min_height", 1.0), ("top_k", 1), DiskAreaLaw([1.0]),
        n_steps=128, seed=seed, disk_kwargs=disk_kwargs,
    )
    sizes = sphere.excursion.jumps[:, 1]
    if len(sizes):
        assert sphere.n_materialized == 1
        i = int(np.argmax(sizes))
        disk = sphere.decorations[i].disk
        assert np.isclose(disk.boundary_length, sizes[i], rtol=1e-9)
        assert sphere.areas[i] == disk.area


def test_area_weights():
    assert np.isclose(sphere_marked_point_weight(0)(2.0), 2.0**-3.5)
    with pytest.raises(DomainError):
        sphere_marked_point_weight(-1)
    areas = get_rng(7).uniform(1.0, 10.0, 100)
    w = reweight_areas(areas, 0, 1)
    assert np.isclose(w.sum(), 1.0)
    # one more marked point favours larger areas
    assert w[np.argmax(areas)] > w[np.argmin(areas)]
    table = area_exceedance_table(areas, [1.0, 2.0, 5.0, 9.0])
    assert table.monotone and table.frequency[0] == 1.0
