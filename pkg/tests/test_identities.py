import math

import numpy as np
import pytest

from overdet_lab.config import Tolerances
from overdet_lab.identities import (
    energy_balance,
    harmonic_form,
    identity_invariance,
    main_identity,
    make_report,
    pucci_serrin,
    run_identity_suite,
    scale_floor,
    torsion_identity,
    translation_moment,
    zero_flux,
    zero_flux_report,
)

SUITE_NAMES = ["pucci_serrin", "main_identity", "harmonic_form", "zero_flux", "energy_balance",
               "torsion_identity", "main_identity_second_anchor"]


def test_pucci_serrin_on_disk(disk_bundle):
    report = pucci_serrin(disk_bundle)
    assert report.lhs == pytest.approx(math.pi / 32.0, rel=1e-10)
    assert report.rhs == pytest.approx(math.pi / 32.0, rel=1e-8)


def test_pucci_serrin_does_not_depend_on_anchor(disk_bundle):
    moved = pucci_serrin(disk_bundle, z=(0.4, -0.2))
    assert moved.rhs == pytest.approx(math.pi / 32.0, rel=1e-8)


def test_main_identity_vanishes_on_disk(disk_bundle):
    for c in (1.0 / 8.0, 0.0):
        report = main_identity(disk_bundle, c=c)
        assert abs(report.lhs) < 1e-10
        assert abs(report.rhs) < 1e-9


def test_harmonic_form_vanishes_on_disk(disk_bundle):
    report = harmonic_form(disk_bundle)
    assert abs(report.lhs) < 1e-10
    assert abs(report.rhs) < 1e-9


@pytest.mark.parametrize("z", [(0.0, 0.0), (0.3, 0.0)])
def test_zero_flux_on_disk(disk_bundle, z):
    assert abs(zero_flux(disk_bundle, z)) < 1e-9


def test_zero_flux_report_sides(disk_bundle):
    report = zero_flux_report(disk_bundle)
    assert report.lhs == pytest.approx(-math.pi, rel=1e-9)
    assert report.rhs == pytest.approx(-math.pi, rel=1e-12)
    assert report.extra["per_perimeter"] < 1e-9


def test_zero_flux_bound_is_absolute_per_perimeter(oval_bundle):
    report = zero_flux_report(oval_bundle, tolerance=1e-9)
    assert report.tolerance == 0.0
    assert report.absolute_tolerance == pytest.approx(1e-9 * oval_bundle.geom.perimeter, rel=1e-6)
    assert report.passed
    assert report.deciding_bound == (report.abs_residual, report.absolute_tolerance)
    assert abs(zero_flux(oval_bundle)) <= 1e-9


def test_energy_balance_on_disk(disk_bundle):
    report = energy_balance(disk_bundle)
    assert report.lhs == pytest.approx(math.pi / 192.0, rel=1e-9)
    assert report.rhs == pytest.approx(math.pi / 192.0, rel=1e-12)


def test_scale_floor_keeps_zero_cases_finite(disk_bundle):
    report = make_report("zero", 0.0, 0.0, disk_bundle, disk_bundle.z, None, tolerance=1e-6)
    assert report.rel_residual == 0.0
    assert report.passed
    assert scale_floor(disk_bundle) == pytest.approx(1e-12 * 6 * math.pi / 64.0, rel=1e-8)


def test_absolute_tolerance_rescues_tiny_sides(disk_bundle):
    report = make_report("tiny", 3e-13, 0.0, disk_bundle, disk_bundle.z, None,
                         tolerance=1e-6, absolute_tolerance=1e-12)
    assert report.rel_residual > 1e-6
    assert report.passed


def test_inputs_hash_tracks_anchor(disk_bundle):
    a = make_report("x", 1.0, 1.0, disk_bundle, (0.0, 0.0), 0.125)
    b = make_report("x", 1.0, 1.0, disk_bundle, (0.0, 0.0), 0.125)
    c = make_report("x", 1.0, 1.0, disk_bundle, (0.1, 0.0), 0.125)
    assert a.inputs_hash == b.inputs_hash
    assert a.inputs_hash != c.inputs_hash
    assert len(a.inputs_hash) == 16


def test_disk_suite_passes(disk_bundle):
    reports = run_identity_suite(disk_bundle)
    assert [r.name for r in reports] == SUITE_NAMES
    failed = [r.name for r in reports if not r.passed]
    assert failed == []


def test_oval_suite_passes(oval_bundle):
    reports = {r.name: r for r in run_identity_suite(oval_bundle)}
    assert all(r.passed for r in reports.values()), [r.to_dict() for r in reports.values() if not r.passed]
    assert reports["pucci_serrin"].rel_residual <= 1e-7


def test_main_identity_is_small_and_positive(oval_bundle):
    report = main_identity(oval_bundle, tolerance=Tolerances().main_identity)
    # First order in eps: |D^2 h|^2 = 4.5 eps^2 against int u = pi/192
    assert report.lhs == pytest.approx(4.5 * 0.05 ** 2 * math.pi / 192.0, rel=0.25)
    assert report.rhs > 0.0
    assert report.passed


def test_main_identity_lhs_agrees_across_anchors(oval_bundle):
    base = main_identity(oval_bundle)
    other = main_identity(oval_bundle, z=(0.05, 0.02), c=0.0)
    assert other.lhs == base.lhs
    assert other.rhs == pytest.approx(base.rhs, abs=1e-9)


def test_harmonic_form_matches_main_lhs(oval_bundle):
    report = harmonic_form(oval_bundle)
    assert report.extra["lhs_gap"] <= Tolerances().lhs_agreement


def test_invariance_in_z_and_c(oval_bundle):
    spreads = identity_invariance(oval_bundle, count=5, seed=0)
    assert spreads["rhs_z_spread"] <= Tolerances().invariance
    assert spreads["rhs_c_spread"] <= Tolerances().invariance


def test_translation_moment_vanishes(oval_bundle):
    assert np.hypot(*translation_moment(oval_bundle)) <= 1e-9


def test_torsion_identity(oval_bundle):
    report = torsion_identity(oval_bundle, tolerance=Tolerances().torsion_identity,
                              absolute_tolerance=Tolerances().identity_absolute)
    assert report.passed
    assert report.lhs >= 0.0


def test_report_serialization(oval_bundle):
    data = harmonic_form(oval_bundle, tolerance=1e-4).to_dict()
    assert {"name", "lhs", "rhs", "abs_residual", "rel_residual", "scale_floor", "inputs_hash",
            "tolerance", "absolute_tolerance", "passed", "extra"} == set(data)
