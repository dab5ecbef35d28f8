import numpy as np
import pytest

from overdet_lab.analysis import (
    auxiliary_q,
    boundary_constant,
    bundle_summary,
    deficit,
    deficit_check,
    derive_fields,
    gap_reconstruction,
    gradient_h_at_z,
    harmonicity_residual,
    mean_value_check,
)
from overdet_lab.config import Tolerances
from overdet_lab.identities import main_identity, pucci_serrin


def test_disk_bundle_constants(disk_bundle):
    assert np.hypot(*disk_bundle.z) < 1e-8
    assert disk_bundle.r2 == pytest.approx(0.5, abs=1e-10)
    assert disk_bundle.c == pytest.approx(1.0 / 8.0, abs=1e-9)
    assert disk_bundle.h.sup() < 1e-9


def test_disk_hessian_of_v_is_isotropic(disk_bundle):
    assert np.max(np.abs(disk_bundle.v_xx.values + 0.5)) < 1e-6
    assert np.max(np.abs(disk_bundle.v_yy.values + 0.5)) < 1e-6
    assert np.max(np.abs(disk_bundle.v_xy.values)) < 1e-6
    assert np.max(np.abs(deficit(disk_bundle).values)) < 1e-10


def test_boundary_constant_choices(disk_bundle, oval_bundle):
    grid = oval_bundle.grid
    trace = oval_bundle.lap_u_boundary
    assert boundary_constant(trace, grid, "c0") == pytest.approx(1.0 / 8.0)
    assert boundary_constant(trace, grid, "midrange") == pytest.approx(0.5 * (trace.max() + trace.min()))
    assert boundary_constant(trace, grid, "mean") == pytest.approx(oval_bundle.c)
    with pytest.raises(ValueError):
        boundary_constant(trace, grid, "median")


def test_oval_anchor_and_smallness(oval_bundle):
    assert np.hypot(*oval_bundle.z) <= 0.02
    # h = 0.75 eps (x^2 - y^2) to first order, largest at (1 + eps, 0)
    assert oval_bundle.h.sup() == pytest.approx(0.75 * 0.05 * 1.05 ** 2, rel=0.15)
    assert gradient_h_at_z(oval_bundle) <= Tolerances().gradient_at_z
    assert oval_bundle.h.at(oval_bundle.z[None, :])[0] == pytest.approx(0.0, abs=1e-12)


def test_v_solves_the_torsion_equation(oval_bundle):
    tol = Tolerances()
    assert harmonicity_residual(oval_bundle, tol.core_distance) <= tol.harmonicity


def test_outer_core_leaves_out_the_pole_rings(oval_bundle):
    core = oval_bundle.core_mask(0.1)
    outer = oval_bundle.outer_core_mask(0.1)
    pole_rows = oval_bundle.grid.s < 0.25
    assert core[pole_rows].all()
    assert not outer[pole_rows].any()
    assert np.array_equal(outer[~pole_rows], core[~pole_rows])


def test_deficit_identity(oval_bundle):
    check = deficit_check(oval_bundle)
    tol = Tolerances()
    assert check.min_deficit >= -tol.positivity
    assert check.algebra_residual <= tol.deficit_identity
    assert check.identity_residual <= tol.deficit_identity
    assert set(check.to_dict()) == {"min_deficit", "identity_residual", "algebra_residual"}


@pytest.mark.parametrize("bundle_name", ["disk_bundle", "triangle_bundle"])
def test_auxiliary_q(request, bundle_name):
    bundle = request.getfixturevalue(bundle_name)
    tol = Tolerances()
    q = auxiliary_q(bundle, tol.core_distance)
    assert q.laplace_residual <= tol.laplace_q
    assert q.bilaplace_residual <= tol.bilaplace_q


def test_gap_reconstruction(oval_bundle):
    gap = gap_reconstruction(oval_bundle)
    assert gap["geometric"] == pytest.approx(0.2, abs=1e-3)
    assert gap["residual"] <= Tolerances().gap_reconstruction


def test_mean_value_property(oval_bundle):
    assert mean_value_check(oval_bundle, count=8, seed=3) <= Tolerances().mean_value


def test_mean_value_is_seeded(oval_bundle):
    assert mean_value_check(oval_bundle, count=3, seed=5) == mean_value_check(oval_bundle, count=3, seed=5)


def test_identities_do_not_depend_on_radius(oval_bundle):
    reanchored = oval_bundle.with_anchor(z=oval_bundle.z, r2=0.5)
    assert reanchored.r2 == 0.5
    assert main_identity(reanchored).rhs == pytest.approx(main_identity(oval_bundle).rhs, rel=1e-12, abs=1e-18)
    assert main_identity(reanchored).lhs == pytest.approx(main_identity(oval_bundle).lhs, rel=1e-12, abs=1e-18)
    assert pucci_serrin(reanchored).rhs == pytest.approx(pucci_serrin(oval_bundle).rhs, rel=1e-14)


def test_with_anchor_rejects_exterior_points(oval_bundle):
    with pytest.raises(ValueError):
        oval_bundle.with_anchor(z=(1.2, 0.0))


def test_bundle_summary(oval_bundle):
    summary = bundle_summary(oval_bundle)
    assert summary["c_choice"] == "mean"
    assert summary["R2"] == oval_bundle.r2
    assert set(summary["q_residuals"]) == {"laplace_residual", "bilaplace_residual"}


def test_derive_fields_with_a_moved_anchor(disk_bundle):
    moved = derive_fields(disk_bundle.u, disk_bundle.psi, c_choice="c0", z=(0.1, 0.0),
                          distance=disk_bundle.distance, base=disk_bundle)
    assert moved.c == pytest.approx(1.0 / 8.0)
    assert moved.r2 == pytest.approx(0.49, abs=1e-9)
    # v = 1/8 - r^2/4 gives h = 0.005 - 0.05 x about (0.1, 0)
    assert np.max(np.abs(moved.h.values - (0.005 - 0.05 * moved.grid.x))) < 1e-8
    assert np.max(np.abs(moved.h_x.values + 0.05)) < 1e-7
