import math
import warnings

import numpy as np
import pytest

from overdet_lab.discretization import (
    Field,
    TensorGrid,
    boundary_integral,
    boundary_lp_norm,
    differentiate,
    fourier_second_matrix,
    hessian,
    laplacian,
    perimeter,
    radial_weights,
    upsample_periodic,
    volume_integral,
)
from overdet_lab.errors import GridMismatch, InvalidP, NonFiniteField, OrderTooHigh, ResolutionOutOfRange
from overdet_lab.geometry import BoundaryShape, build_domain


@pytest.fixture(scope="module")
def triangle_grid():
    return TensorGrid(build_domain(BoundaryShape.preset("cos3", 0.02)), 24, 48)


def test_boundary_nodes_lie_on_the_curve(oval_geom, oval_grid):
    assert np.max(np.abs(oval_grid.boundary_points - oval_geom.boundary_point(oval_grid.theta))) < 1e-14


def test_radial_nodes_avoid_the_center(disk_grid):
    assert disk_grid.s[0] == 1.0
    assert np.all(disk_grid.s > 0.0)
    assert len(disk_grid.theta) == 32


def test_resolution_validation(disk_geom):
    with pytest.raises(ResolutionOutOfRange):
        TensorGrid(disk_geom, 16, 33)
    with pytest.raises(ResolutionOutOfRange):
        TensorGrid(disk_geom, 4, 32)
    with pytest.raises(ResolutionOutOfRange, match="at least"):
        TensorGrid(build_domain(BoundaryShape.from_terms(0.01, [(5, 1.0, 0.0)])), 16, 16)


def test_second_derivative_of_square(disk_grid):
    f = Field.from_function(disk_grid, lambda x, y: x * x)
    assert np.max(np.abs(differentiate(f, (2, 0)).values - 2.0)) < 1e-9
    assert np.max(np.abs(differentiate(f, (0, 2)).values)) < 1e-9


def test_laplacian_of_quartic(disk_grid):
    f = Field.from_function(disk_grid, lambda x, y: (x * x + y * y) ** 2)
    expected = 16.0 * (disk_grid.x ** 2 + disk_grid.y ** 2)
    assert np.max(np.abs(laplacian(f).values - expected)) < 1e-8


def test_derivative_on_perturbed_domain(oval_grid):
    f = Field.from_function(oval_grid, lambda x, y: np.exp(x))
    df = differentiate(f, (1, 0))
    assert np.max(np.abs(df.values - f.values) / f.values) < 1e-9


def test_mixed_derivatives_commute(triangle_grid):
    f = Field.from_function(triangle_grid, lambda x, y: np.exp(x) * np.sin(2.0 * y))
    xy = differentiate(differentiate(f, (1, 0)), (0, 1))
    yx = differentiate(differentiate(f, (0, 1)), (1, 0))
    assert np.max(np.abs(xy.values - yx.values)) < 1e-9


def test_order_limit(disk_grid):
    f = Field.constant(disk_grid, 1.0)
    with pytest.raises(OrderTooHigh):
        differentiate(f, (3, 2))
    with pytest.raises(ValueError):
        differentiate(f, (-1, 0))


def test_field_rejects_non_finite_and_wrong_shape(disk_grid):
    values = np.zeros(disk_grid.shape)
    values[3, 4] = np.nan
    with pytest.raises(NonFiniteField):
        Field(values, disk_grid)
    with pytest.raises(GridMismatch):
        Field(np.zeros((3, 3)), disk_grid)


def test_fields_on_different_grids_do_not_mix(disk_grid, oval_grid):
    with pytest.raises(GridMismatch):
        Field.constant(disk_grid, 1.0) + Field.constant(oval_grid, 1.0)
    with pytest.raises(GridMismatch):
        volume_integral(Field.constant(disk_grid, 1.0), oval_grid)


def test_volume_integrals(disk_grid, oval_grid):
    assert volume_integral(Field.constant(disk_grid, 1.0)) == pytest.approx(math.pi, abs=1e-12)
    u0 = Field.from_function(disk_grid, lambda x, y: (1.0 - x * x - y * y) ** 2 / 64.0)
    assert volume_integral(u0) == pytest.approx(math.pi / 192.0, rel=1e-12)
    assert volume_integral(Field.constant(oval_grid, 1.0)) == pytest.approx(
        math.pi * (1.0 + 0.05 ** 2 / 2.0), rel=1e-11)


def test_boundary_integrals_on_disk(disk_grid):
    assert boundary_integral(disk_grid, 1.0) == pytest.approx(2.0 * math.pi, rel=1e-14)
    x_dot_nu = np.sum(disk_grid.boundary_points * disk_grid.boundary_normal, axis=1)
    assert boundary_integral(disk_grid, x_dot_nu) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert perimeter(disk_grid) == pytest.approx(2.0 * math.pi, rel=1e-14)


def test_lp_norm_of_constant(oval_grid):
    c = 0.3
    assert boundary_lp_norm(oval_grid, c, 2.0) == pytest.approx(c * math.sqrt(perimeter(oval_grid)), rel=1e-13)
    assert boundary_lp_norm(oval_grid, -c, math.inf) == pytest.approx(c)
    with pytest.raises(InvalidP):
        boundary_lp_norm(oval_grid, c, 0.5)


def test_normalized_lp_norm_is_monotone(oval_grid):
    g = np.cos(oval_grid.theta) + 0.5 * np.sin(3.0 * oval_grid.theta)
    length = perimeter(oval_grid)
    norms = [boundary_lp_norm(oval_grid, g, p) / length ** (1.0 / p) for p in (1.0, 1.5, 2.0, 3.0, 10.0)]
    norms.append(boundary_lp_norm(oval_grid, g, math.inf))
    assert all(a <= b + 1e-14 for a, b in zip(norms, norms[1:]))


def test_divergence_theorem(oval_grid):
    g = oval_grid
    div = Field(3.0 * g.x ** 2 + 2.0 * g.x * g.y, g)
    bx, by = g.x[0], g.y[0]
    flux = bx ** 3 * g.boundary_normal[:, 0] + bx * by ** 2 * g.boundary_normal[:, 1]
    assert volume_integral(div) == pytest.approx(boundary_integral(g, flux), rel=1e-10)


def test_interpolation_at_interior_points(oval_grid):
    f = Field.from_function(oval_grid, lambda x, y: np.exp(x) * np.cos(y))
    points = np.array([[0.0, 0.0], [0.2, -0.4], [-0.7, 0.1], [0.9, 0.0]])
    expected = np.exp(points[:, 0]) * np.cos(points[:, 1])
    assert f.at(points) == pytest.approx(expected, abs=1e-10)


def test_spectral_tail_is_small_for_resolved_field(oval_grid):
    f = Field.from_function(oval_grid, lambda x, y: np.exp(x))
    assert oval_grid.spectral_tail(f.values) < 1e-10


def test_upsample_periodic_is_exact_for_trig_polynomials():
    coarse = np.arange(16) * 2.0 * math.pi / 16
    fine = np.arange(64) * 2.0 * math.pi / 64
    values = np.cos(3.0 * coarse) + 0.25 * np.sin(coarse)
    assert upsample_periodic(values, 64) == pytest.approx(np.cos(3.0 * fine) + 0.25 * np.sin(fine), abs=1e-13)


def test_csv_rows_follow_node_order(disk_grid):
    f = Field.from_function(disk_grid, lambda x, y: x + 2.0 * y)
    rows = f.csv_rows()
    assert len(rows) == disk_grid.size
    s, theta, x, y, value = rows[1]
    assert s == disk_grid.s[0] and theta == disk_grid.theta[1]
    assert value == pytest.approx(x + 2.0 * y)


def test_angular_second_derivative_keeps_the_nyquist_mode():
    count = 16
    theta = np.arange(count) * 2.0 * math.pi / count
    d2 = fourier_second_matrix(count)
    nyquist = (-1.0) ** np.arange(count)
    assert d2 @ nyquist == pytest.approx(-(count / 2) ** 2 * nyquist, abs=1e-10)
    assert d2 @ np.cos(3.0 * theta) == pytest.approx(-9.0 * np.cos(3.0 * theta), abs=1e-11)


def test_laplacian_of_harmonic_nyquist_polynomial(disk_grid):
    # Re (x + iy)^16 = r^16 cos(16 theta) is the highest angular mode on 32 nodes
    f = Field.from_function(disk_grid, lambda x, y: np.real((x + 1j * y) ** 16))
    assert np.max(np.abs(laplacian(f).values)) < 1e-8


def test_hessian_on_perturbed_domain(oval_grid):
    f = Field.from_function(oval_grid, lambda x, y: np.exp(x) * np.cos(y))
    xx, xy, yy = hessian(f)
    g = oval_grid
    assert np.max(np.abs(xx.values - np.exp(g.x) * np.cos(g.y))) < 1e-8
    assert np.max(np.abs(xy.values + np.exp(g.x) * np.sin(g.y))) < 1e-8
    assert np.max(np.abs(yy.values + np.exp(g.x) * np.cos(g.y))) < 1e-8
    assert np.max(np.abs(xx.values + yy.values - laplacian(f).values)) < 1e-10


def test_fourth_order_derivatives_of_quartic(disk_grid):
    f = Field.from_function(disk_grid, lambda x, y: (x * x + y * y) ** 2)
    assert np.max(np.abs(differentiate(f, (4, 0)).values - 24.0)) < 1e-4
    assert np.max(np.abs(differentiate(f, (2, 2)).values - 8.0)) < 1e-4
    assert np.max(np.abs(differentiate(f, (3, 1)).values)) < 1e-4
    assert np.max(np.abs(differentiate(f, (1, 1)).values - 8.0 * disk_grid.x * disk_grid.y)) < 1e-8


def test_grid_construction_is_warning_free(oval_geom):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        weights = radial_weights(np.linspace(0.05, 1.0, 9))
        TensorGrid(oval_geom, 16, 32)
    assert np.sum(weights) == pytest.approx(1.0, rel=1e-12)
