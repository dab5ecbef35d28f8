"""
Both sides of the integral identities satisfied by the plate and torsion solutions.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import SolutionBundle, boundary_constant, deficit, hessian_h_norm_sq
from .config import Tolerances
from .constants import SCALE_FLOOR_FACTOR
from .discretization import (
    Field,
    boundary_integral,
    gradient,
    hessian,
    perimeter,
    volume_integral,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentityReport:
    """lhs, rhs and residuals of one identity; `tolerance` bounds rel_residual."""
    name: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    scale_floor: float
    inputs_hash: str
    tolerance: Optional[float] = None
    absolute_tolerance: Optional[float] = None
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return True
        if self.rel_residual <= self.tolerance:
            return True
        return self.absolute_tolerance is not None and self.abs_residual <= self.absolute_tolerance

    @property
    def deciding_bound(self) -> Tuple[float, Optional[float]]:
        """(residual, tolerance) pair behind `passed`: absolute once the relative test fails."""
        if self.absolute_tolerance is not None and (self.tolerance is None or self.rel_residual > self.tolerance):
            return self.abs_residual, self.absolute_tolerance
        return self.rel_residual, self.tolerance

    def to_dict(self) -> Dict:
        data = {
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'abs_residual': self.abs_residual,
            'rel_residual': self.rel_residual,
            'scale_floor': self.scale_floor,
            'inputs_hash': self.inputs_hash,
            'tolerance': self.tolerance,
            'absolute_tolerance': self.absolute_tolerance,
            'passed': self.passed,
        }
        if self.extra:
            data['extra'] = dict(self.extra)
        return data


def scale_floor(bundle: SolutionBundle) -> float:
    """1e-12 (n+4) |Omega| ||u||_inf, so that 0 = 0 cases report a zero relative residual."""
    return SCALE_FLOOR_FACTOR * (bundle.n + 4) * bundle.geom.area * bundle.u.sup()


def inputs_hash(bundle: SolutionBundle, z, c: Optional[float]) -> str:
    payload = {
        'shape': bundle.geom.shape.to_dict(),
        'resolution': [bundle.grid.n_r, bundle.grid.n_theta],
        'z': [repr(float(z[0])), repr(float(z[1]))],
        'c': None if c is None else repr(float(c)),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode('utf-8')).hexdigest()[:16]


def make_report(name: str, lhs: float, rhs: float, bundle: SolutionBundle, z, c: Optional[float],
                tolerance: Optional[float] = None, absolute_tolerance: Optional[float] = None,
                **extra: float) -> IdentityReport:
    floor = scale_floor(bundle)
    abs_residual = abs(lhs - rhs)
    denom = max(abs(lhs), abs(rhs), floor)
    rel = abs_residual / denom if denom > 0 else 0.0
    return IdentityReport(name=name, lhs=float(lhs), rhs=float(rhs), abs_residual=float(abs_residual),
                          rel_residual=float(rel), scale_floor=floor,
                          inputs_hash=inputs_hash(bundle, z, c), tolerance=tolerance,
                          absolute_tolerance=absolute_tolerance, extra=dict(extra))


def _anchor(bundle: SolutionBundle, z) -> np.ndarray:
    if z is None:
        return bundle.z
    return bundle.geom.require_interior(z)


def _offset(bundle: SolutionBundle, z: np.ndarray) -> np.ndarray:
    grid = bundle.grid
    return np.sum((grid.boundary_points - z) * grid.boundary_normal, axis=1)


def pucci_serrin(bundle: SolutionBundle, z=None, tolerance: Optional[float] = None) -> IdentityReport:
    """(n+4) int u = oint (Delta u)^2 (x - z).nu dS."""
    z = _anchor(bundle, z)
    lhs = (bundle.n + 4) * volume_integral(bundle.u)
    rhs = boundary_integral(bundle.grid, bundle.lap_u_boundary ** 2 * _offset(bundle, z))
    return make_report('pucci_serrin', lhs, rhs, bundle, z, None, tolerance)


def main_rhs(bundle: SolutionBundle, z: np.ndarray, c: float) -> float:
    weight = bundle.dv_dnu + _offset(bundle, z) / bundle.n
    return 0.25 * boundary_integral(bundle.grid, (c * c - bundle.lap_u_boundary ** 2) * weight)


def main_identity(bundle: SolutionBundle, z=None, c: Optional[float] = None,
                  tolerance: Optional[float] = None,
                  absolute_tolerance: Optional[float] = None) -> IdentityReport:
    """int u delta(v) = 1/4 oint (c^2 - (Delta u)^2)(dv/dnu + (x - z).nu / n) dS, for any z and c."""
    z = _anchor(bundle, z)
    c = bundle.c if c is None else float(c)
    lhs = volume_integral(bundle.u * deficit(bundle))
    rhs = main_rhs(bundle, z, c)
    return make_report('main_identity', lhs, rhs, bundle, z, c, tolerance, absolute_tolerance)


def harmonic_form(bundle: SolutionBundle, c: Optional[float] = None,
                  tolerance: Optional[float] = None,
                  absolute_tolerance: Optional[float] = None) -> IdentityReport:
    """int u |D^2 h|^2 = 1/4 oint (c^2 - (Delta u)^2) dh/dnu dS; also records the gap to the main lhs."""
    c = bundle.c if c is None else float(c)
    lhs = volume_integral(bundle.u * hessian_h_norm_sq(bundle))
    rhs = 0.25 * boundary_integral(bundle.grid, (c * c - bundle.lap_u_boundary ** 2) * bundle.dh_dnu)
    main_lhs = volume_integral(bundle.u * deficit(bundle))
    return make_report('harmonic_form', lhs, rhs, bundle, bundle.z, c, tolerance, absolute_tolerance,
                       lhs_gap=abs(lhs - main_lhs))


def zero_flux(bundle: SolutionBundle, z=None) -> float:
    """oint (dv/dnu + (x - z).nu / n) dS."""
    z = _anchor(bundle, z)
    return boundary_integral(bundle.grid, bundle.dv_dnu + _offset(bundle, z) / bundle.n)


def zero_flux_report(bundle: SolutionBundle, z=None, tolerance: Optional[float] = None) -> IdentityReport:
    """The zero flux as an identity with nonzero sides: oint dv/dnu = -oint (x - z).nu / n.

    `tolerance` bounds |lhs - rhs| per unit perimeter.
    """
    z = _anchor(bundle, z)
    length = perimeter(bundle.grid)
    lhs = boundary_integral(bundle.grid, bundle.dv_dnu)
    rhs = -boundary_integral(bundle.grid, _offset(bundle, z)) / bundle.n
    relative, absolute = (None, None) if tolerance is None else (0.0, tolerance * length)
    return make_report('zero_flux', lhs, rhs, bundle, z, None, relative, absolute,
                       per_perimeter=abs(lhs - rhs) / length)


def energy_balance(bundle: SolutionBundle, tolerance: Optional[float] = None) -> IdentityReport:
    """int v^2 = int u."""
    lhs = volume_integral(bundle.v * bundle.v)
    rhs = volume_integral(bundle.u)
    return make_report('energy_balance', lhs, rhs, bundle, bundle.z, None, tolerance)


def translation_moment(bundle: SolutionBundle) -> np.ndarray:
    """oint (Delta u)^2 nu dS, zero for every solution."""
    trace = bundle.lap_u_boundary ** 2
    return np.asarray(boundary_integral(bundle.grid, trace[:, None] * bundle.grid.boundary_normal))


def torsion_identity(bundle: SolutionBundle, z=None, c: Optional[float] = None,
                     tolerance: Optional[float] = None,
                     absolute_tolerance: Optional[float] = None) -> IdentityReport:
    """int psi delta(psi) = 1/2 oint (c^2 - |grad psi|^2)(dpsi/dnu + (x - z).nu / n) dS."""
    z = _anchor(bundle, z)
    grid = bundle.grid
    n = bundle.n
    psi_x, psi_y = gradient(bundle.psi)
    psi_xx, psi_xy, psi_yy = hessian(bundle.psi)
    hess_sq = psi_xx.values ** 2 + 2.0 * psi_xy.values ** 2 + psi_yy.values ** 2
    lap = psi_xx.values + psi_yy.values
    delta = Field(hess_sq - lap ** 2 / n, grid)

    nu = grid.boundary_normal
    grad_sq = psi_x.boundary() ** 2 + psi_y.boundary() ** 2
    dpsi_dnu = nu[:, 0] * psi_x.boundary() + nu[:, 1] * psi_y.boundary()
    if c is None:
        c = boundary_integral(grid, np.sqrt(grad_sq)) / perimeter(grid)
    lhs = volume_integral(bundle.psi * delta)
    rhs = 0.5 * boundary_integral(grid, (c * c - grad_sq) * (dpsi_dnu + _offset(bundle, z) / n))
    return make_report('torsion_identity', lhs, rhs, bundle, z, c, tolerance, absolute_tolerance)


def random_interior_points(bundle: SolutionBundle, count: int, seed: int, radius: float = 0.5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    a = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)


def identity_invariance(bundle: SolutionBundle, count: int = 5, seed: int = 0) -> Dict[str, float]:
    """Spread of the main identity's rhs over random z and over c in {0, mean, c0}."""
    zs = random_interior_points(bundle, count, seed)
    rhs_z = [main_rhs(bundle, z, bundle.c) for z in zs]
    cs = [0.0, boundary_constant(bundle.lap_u_boundary, bundle.grid, 'mean', bundle.n),
          boundary_constant(bundle.lap_u_boundary, bundle.grid, 'c0', bundle.n)]
    rhs_c = [main_rhs(bundle, bundle.z, c) for c in cs]
    return {
        'rhs_z_spread': float(max(rhs_z) - min(rhs_z)),
        'rhs_c_spread': float(max(rhs_c) - min(rhs_c)),
    }


def run_identity_suite(bundle: SolutionBundle, tolerances: Optional[Tolerances] = None,
                       second_anchor: Optional[Sequence[float]] = None) -> List[IdentityReport]:
    """Every identity at the bundle's anchor, plus the main identity at a second (z, c) pair."""
    tol = tolerances or Tolerances()
    absolute = tol.identity_absolute
    reports = [
        pucci_serrin(bundle, tolerance=tol.pucci_serrin),
        main_identity(bundle, tolerance=tol.main_identity, absolute_tolerance=absolute),
        harmonic_form(bundle, tolerance=tol.harmonic_form, absolute_tolerance=absolute),
        zero_flux_report(bundle, tolerance=tol.zero_flux),
        energy_balance(bundle, tolerance=tol.energy_balance),
        torsion_identity(bundle, tolerance=tol.torsion_identity, absolute_tolerance=absolute),
    ]
    z2 = np.asarray(bundle.geom.centroid if second_anchor is None else second_anchor, dtype=float)
    c2 = 1.0 / (bundle.n * (bundle.n + 2))
    second = main_identity(bundle, z=z2, c=c2, tolerance=tol.main_identity, absolute_tolerance=absolute)
    reports.append(IdentityReport(**{**second.__dict__, 'name': 'main_identity_second_anchor'}))
    for report in reports:
        logger.info("%-28s lhs=%.12e rhs=%.12e rel=%.3e %s", report.name, report.lhs, report.rhs,
                    report.rel_residual, "ok" if report.passed else "FAIL")
    return reports
