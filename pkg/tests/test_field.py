import os
import numpy as np
import pytest
from lqg_mc.bessel import sample_bessel_excursion
from lqg_mc.errors import DomainError
from lqg_mc.field import (
    CylinderField,
    ExpToPlaneMap,
    IdentityMap,
    PsiMap,
    TranslationMap,
    assemble_disk_field,
    assemble_sphere_field,
    compute_area_measure,
    compute_boundary_measure,
    coordinate_change_check,
    dirichlet_inner_product,
    distortion_bound_check,
    evaluate_modes,
    fit_distortion_constant,
    h1_quadratic_variation,
    metadata_path,
    sample_field,
    sample_h2_cylinder,
    sample_h2_modes,
    sample_h2_on_grid,
    theta_grid,
)
from lqg_mc.params import GAMMA_SQRT_8_3, make_params


def _constant_field(value=1.5, n_x=33, n_theta=32):
    dx = 2.0 * np.pi / n_theta
    x = dx * np.arange(n_x)
    return CylinderField(x, theta_grid(n_theta), np.full(n_x, value))


def test_mode_variance(n_points=5001, n_modes=3, seed=0):
    # spacing 10 decorrelates the modes: var a_n = var b_n = 1/(2n)
    modes = sample_h2_modes(10.0 * np.arange(n_points), n_modes, seed)
    assert modes.shape == (n_points, n_modes)
    for n in range(1, n_modes + 1):
        target = 1.0 / (2.0 * n)
        assert abs(modes[:, n - 1].real.var() / target - 1.0) < 0.1
        assert abs(modes[:, n - 1].imag.var() / target - 1.0) < 0.1
    strip = sample_h2_modes(np.arange(10.0), 2, seed, "strip")
    assert np.all(strip.imag == 0)


def test_evaluate_modes():
    theta = theta_grid(16)
    modes = np.array([[1.0 + 0.0j]])
    assert np.allclose(evaluate_modes(modes, theta)[0], np.sqrt(2.0) * np.cos(theta))
    assert np.allclose(evaluate_modes(modes, theta, "strip")[0], 2.0 * np.cos(theta))
    with pytest.raises(DomainError):
        sample_h2_on_grid(np.arange(5.0), 32, 16)


def test_constant_area(value=1.5, gamma=1.2):
    params = make_params(gamma)
    field = _constant_field(value)
    eps = 4.0 * field.dx
    measure = compute_area_measure(field, eps, params).check()
    target = eps ** (gamma**2 / 2.0) * np.exp(gamma * value) * field.cell_area * 33 * 32
    assert np.isclose(measure.total, target, rtol=1e-10)
    assert np.isclose(measure.mass_right_of(field.x[16]), target * 17 / 33, rtol=1e-10)
    with pytest.raises(DomainError):
        compute_area_measure(field, field.dx, params)


def test_shift_scaling(shift_c=0.7, seed=1):
    params = make_params(GAMMA_SQRT_8_3)
    gamma = params.gamma
    field = sample_h2_cylinder((0.0, 6.0), 31, 32, 8, seed)
    field.metadata["gamma"] = gamma
    eps = 4.0 * field.dx
    base = compute_area_measure(field, eps, params).total
    moved = compute_area_measure(field.shifted(shift_c), eps, params).total
    assert np.isclose(moved / base, np.exp(gamma * shift_c), rtol=1e-10)
    assert field.shifted(shift_c).metadata["shift_c"] == shift_c

    strip = sample_h2_cylinder((0.0, 3.0), 31, 16, 4, seed, "strip")
    edge = compute_boundary_measure(strip, 0.5, params)
    assert edge.edge_mass.shape == (2, 31)
    moved = compute_boundary_measure(strip.shifted(shift_c), 0.5, params)
    assert np.isclose(moved.total / edge.total, np.exp(gamma * shift_c / 2.0), rtol=1e-10)
    circle = compute_boundary_measure(field, eps, params, circle_x=3.0)
    assert circle.edge_mass.shape == (32,)


def test_h5_round_trip(tmp_path, seed=2):
    field = sample_h2_cylinder((-1.0, 1.0), 11, 16, 4, seed)
    field.metadata["gamma"] = 1.0
    output_file = os.path.join(str(tmp_path), "fields", "field_0000.h5")
    field.save_h5(output_file)
    assert os.path.exists(metadata_path(output_file))
    loaded = CylinderField(input_file=output_file)
    assert loaded.geometry == "cylinder"
    assert loaded.metadata == field.metadata
    for name in ("x", "theta", "h1", "h2", "h2_modes"):
        assert np.array_equal(getattr(loaded, name), getattr(field, name))


def test_sample_field():
    n_theta = 16
    x = np.linspace(0.0, 4.0, 21)
    field = CylinderField(x, theta_grid(n_theta), h1=x)
    # linear in x, constant in theta (wraps past 2 pi)
    vals = sample_field(field, np.array([1.03, 2.5]), np.array([0.3, 7.0]))
    assert np.allclose(vals, [1.03, 2.5])


def test_dirichlet_inner_product():
    n_x, n_theta = 21, 16
    x = np.linspace(0.0, 2.0, n_x)
    theta = theta_grid(n_theta)
    dx, dtheta = x[1] - x[0], 2.0 * np.pi / n_theta
    f = np.repeat(x[:, None], n_theta, axis=1)
    g = np.repeat(np.cos(theta)[None, :], n_x, axis=0)
    assert abs(dirichlet_inner_product(f, g, dx, dtheta)) < 1e-12
    assert np.isclose(dirichlet_inner_product(f, f, dx, dtheta), 2.0)


def test_coordinate_change(seed=3):
    params = make_params(GAMMA_SQRT_8_3)
    field = sample_h2_cylinder((-6.0, 6.0), 61, 32, 8, seed)
    report = coordinate_change_check(field, IdentityMap(), (-1.05, 1.05), params)
    assert report.discrepancy < 1e-10
    assert report.n_source == report.n_target > 0
    shift = 16 * field.dx
    report = coordinate_change_check(field, TranslationMap(shift), (-2.1, -0.1), params)
    assert report.discrepancy < 1e-8
    with pytest.raises(DomainError):
        coordinate_change_check(field, PsiMap(0.0), (-1.0, 1.0), params)
    with pytest.raises(DomainError):
        coordinate_change_check(field, IdentityMap(), (10.0, 11.0), params)
    with pytest.raises(DomainError):
        coordinate_change_check(field, ExpToPlaneMap(), (-1.05, 1.05), params)


def test_psi_map(z=2.0 + 1.0j):
    psi = PsiMap(z)
    w = np.array([-1.0 + 0.5j, 0.5 - 2.0j])
    assert np.allclose(psi.inverse(psi(w)), w)
    h = 1e-6
    numeric = (psi(w + h) - psi(w - h)) / (2 * h)
    assert np.allclose(psi.derivative(w), numeric, rtol=1e-6)
    plane = ExpToPlaneMap()
    assert np.allclose(plane.inverse(plane(w)), w)
    assert np.allclose(plane.derivative(w), plane(w))


def test_distortion_bound():
    probes = np.arange(3.0, 9.0) + 0.5j
    rows = distortion_bound_check(0.0, probes)
    for row in rows:
        assert row.displacement <= row.bound
    _, slope = fit_distortion_constant(rows)
    assert abs(slope + 1.0) < 0.05
    with pytest.raises(DomainError):
        distortion_bound_check(0.0, [0.5])


def test_assemble_sphere_field(seeds=(4, 5, 6)):
    params = make_params(GAMMA_SQRT_8_3)
    qv = []
    for seed in seeds:
        exc = sample_bessel_excursion(
            1.0, min_max=1.0, n_steps=1024, seed=seed, grid="log", log_depth=24.0
        )
        field = assemble_sphere_field(params, exc, "zero", seed)
        assert field.geometry == "cylinder" and np.all(field.h2 == 0)
        assert field.n_x > 10 and field.x[0] < 0 < field.x[-1]
        assert field.metadata["gamma"] == params.gamma
        qv.append(h1_quadratic_variation(field))
    print(f"h1 quadratic variation per unit x: {np.mean(qv):.4f}")
    assert abs(np.mean(qv) - 1.0) < 0.25
    with pytest.raises(DomainError):
        assemble_disk_field(params, exc)
