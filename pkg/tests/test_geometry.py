import math

import numpy as np
import pytest

from overdet_lab.discretization import TensorGrid, boundary_integral
from overdet_lab.errors import EmptyShape, FoldedMap, InadmissibleShape, NonStarShaped, NotInterior
from overdet_lab.geometry import (
    BoundaryShape,
    Mode,
    build_domain,
    check_admissible,
    closeness_proxy,
    distance_to_boundary,
    radii_about,
    shape_from_mapping,
)


def test_disk_trace_normal_and_jacobian(disk_geom):
    theta = np.linspace(0.0, 2.0 * math.pi, 17)
    assert np.allclose(disk_geom.shape.radius(theta), 1.0)
    assert np.allclose(disk_geom.normal(theta), np.stack([np.cos(theta), np.sin(theta)], axis=-1))
    assert np.allclose(disk_geom.jacobian(theta), 1.0)
    assert disk_geom.area == pytest.approx(math.pi, rel=1e-14)
    assert disk_geom.perimeter == pytest.approx(2.0 * math.pi, rel=1e-14)


def test_oval_radius_and_area(oval_geom):
    r = oval_geom.shape.radius(np.array([0.0, math.pi / 2.0]))
    assert r == pytest.approx([1.05, 0.95], abs=1e-15)
    assert oval_geom.area == pytest.approx(math.pi * (1.0 + 0.05 ** 2 / 2.0), rel=1e-13)
    assert oval_geom.centroid == pytest.approx((0.0, 0.0), abs=1e-14)


def test_normal_is_unit_and_orthogonal_to_tangent(oval_geom):
    theta = np.linspace(0.0, 2.0 * math.pi, 50, endpoint=False)
    nu = oval_geom.normal(theta)
    tangent = oval_geom.tangent(theta)
    assert np.allclose(np.linalg.norm(nu, axis=1), 1.0)
    assert np.max(np.abs(np.sum(nu * tangent, axis=1))) < 1e-14


def test_non_star_shaped_rejected():
    with pytest.raises(NonStarShaped):
        build_domain(BoundaryShape.preset("cos2", 1.5))


def test_folded_interior_map_rejected():
    # Star-shaped boundary (r >= 0.7) whose map has dR/ds = 1 - 1.8 s^5 < 0 near s = 1
    shape = BoundaryShape.from_terms(0.3, [(5, 1.0, 0.0)])
    assert float(np.min(shape.radius(np.linspace(0.0, 2.0 * math.pi, 100)))) > 0.6
    with pytest.raises(FoldedMap, match="dR/ds"):
        build_domain(shape)
    assert issubclass(FoldedMap, ValueError)


def test_mild_high_mode_is_not_folded():
    geom = build_domain(BoundaryShape.from_terms(0.1, [(5, 1.0, 0.0)]))
    assert geom.area > 0


def test_positive_epsilon_needs_modes():
    with pytest.raises(EmptyShape):
        build_domain(BoundaryShape(0.1))


def test_bad_mode_index():
    with pytest.raises(ValueError):
        Mode(0, 1.0)
    with pytest.raises(ValueError):
        Mode(1.5, 1.0)


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown shape preset"):
        BoundaryShape.preset("cos9", 0.01)


@pytest.mark.parametrize("point, expected", [((0.0, 0.0), 1.0), ((0.3, 0.0), 0.7)])
def test_disk_distance(disk_geom, point, expected):
    assert distance_to_boundary(disk_geom, point) == pytest.approx(expected, abs=1e-12)


def test_oval_distance_from_center(oval_geom):
    assert distance_to_boundary(oval_geom, (0.0, 0.0)) == pytest.approx(0.95, abs=1e-12)


def test_distance_requires_interior_point(disk_geom):
    with pytest.raises(NotInterior):
        distance_to_boundary(disk_geom, (1.0, 0.0))
    with pytest.raises(NotInterior):
        radii_about(disk_geom, (2.0, 0.0))


def test_radii_about_center(disk_geom, oval_geom):
    assert radii_about(disk_geom, (0.0, 0.0)) == pytest.approx((1.0, 1.0), abs=1e-12)
    assert radii_about(oval_geom, (0.0, 0.0)) == pytest.approx((0.95, 1.05), abs=1e-12)


def test_off_center_anchor_widens_gap(oval_geom):
    rho_1, rho_2 = radii_about(oval_geom, (0.1, 0.0))
    assert rho_2 >= 1.05
    assert rho_2 - rho_1 > 0.1

    # Dense scan of the same curve
    theta = np.linspace(0.0, 2.0 * math.pi, 100_000, endpoint=False)
    dist = np.linalg.norm(oval_geom.boundary_point(theta) - np.array([0.1, 0.0]), axis=1)
    assert rho_1 == pytest.approx(dist.min(), abs=1e-8)
    assert rho_2 == pytest.approx(dist.max(), abs=1e-8)


def test_distance_matches_inradius(oval_geom):
    z = (0.05, -0.02)
    rho_1, rho_2 = radii_about(oval_geom, z)
    assert distance_to_boundary(oval_geom, z) == pytest.approx(rho_1, abs=1e-10)
    assert rho_1 <= rho_2


def test_radii_invariant_under_rotation():
    shape = BoundaryShape.from_terms(0.03, [(2, 0.6, 0.2), (3, 0.0, 0.4)])
    alpha = 0.7
    z = np.array([0.08, 0.03])
    rot = np.array([[math.cos(alpha), -math.sin(alpha)], [math.sin(alpha), math.cos(alpha)]])
    original = radii_about(build_domain(shape), z)
    rotated = radii_about(build_domain(shape.rotated(alpha)), rot @ z)
    assert rotated == pytest.approx(original, abs=1e-10)


def test_divergence_of_identity_field(oval_geom):
    grid = TensorGrid(oval_geom, 8, 32)
    x_dot_nu = np.sum(grid.boundary_points * grid.boundary_normal, axis=1)
    assert boundary_integral(grid, x_dot_nu) == pytest.approx(2.0 * oval_geom.area, rel=1e-10)


def test_inverse_map_round_trip(oval_geom):
    s = np.array([0.1, 0.5, 0.9])
    theta = np.array([0.3, 2.0, 4.5])
    s_back, theta_back = oval_geom.inverse_map(oval_geom.map_point(s, theta))
    assert s_back == pytest.approx(s, abs=1e-12)
    assert theta_back == pytest.approx(theta, abs=1e-12)


def test_closeness_proxy():
    assert closeness_proxy(build_domain(BoundaryShape(0.0))) == 0.0
    assert closeness_proxy(build_domain(BoundaryShape.preset("cos2", 0.01))) == pytest.approx(0.16, rel=1e-12)
    high = BoundaryShape.from_terms(0.05, [(5, 1.0, 0.0)])
    assert closeness_proxy(build_domain(high)) == pytest.approx(31.25, rel=1e-12)


def test_admissibility_caps():
    assert check_admissible(BoundaryShape.preset("cos2", 0.04))
    # C4 cap is only flagged
    assert check_admissible(BoundaryShape.from_terms(0.05, [(5, 1.0, 0.0)])) is False
    with pytest.raises(InadmissibleShape):
        check_admissible(BoundaryShape.preset("cos2", 0.06))


def test_shape_from_mapping():
    shape = shape_from_mapping({"epsilon": 0.02, "modes": [{"k": 3, "a": 1.0}]})
    assert shape == BoundaryShape.preset("cos3", 0.02)
    assert shape.to_dict() == {"epsilon": 0.02, "modes": [{"k": 3, "a": 1.0, "b": 0.0}]}
