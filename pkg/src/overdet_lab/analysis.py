"""
Derived fields of a solved plate: v = -Delta u, its derivatives, the anchor z,
the quadratic Q, the harmonic difference h = v - Q and the auxiliary q.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .config import Tolerances
from .constants import (
    DENSE_TRACE_POINTS,
    MEAN_VALUE_ANGULAR_NODES,
    MEAN_VALUE_DISKS,
    MEAN_VALUE_RADIAL_NODES,
    PLANE_DIMENSION,
    POLE_EXCLUSION_RADIUS,
    TWO_PI,
    Z_GRADIENT_TOLERANCE,
    Z_NEWTON_STEPS,
    ErrorMessages,
)
from .discretization import (
    Field,
    TensorGrid,
    boundary_integral,
    check_same_grid,
    gradient,
    hessian,
    laplacian,
    perimeter,
    upsample_periodic,
)
from .errors import MaxOnBoundary
from .geometry import DomainGeometry, distance_to_boundary, distances_to_boundary, radii_about
from .solver import SolveReport, solve_clamped_biharmonic, solve_torsion

logger = logging.getLogger(__name__)

C_CHOICES = ('mean', 'c0', 'midrange')


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    """u, psi and every field derived from them, anchored at z with constants R^2 and c."""
    grid: TensorGrid
    u: Field
    psi: Field
    v: Field
    v_x: Field
    v_y: Field
    v_xx: Field
    v_xy: Field
    v_yy: Field
    h: Field
    h_x: Field
    h_y: Field
    distance: Field
    z: np.ndarray
    r2: float
    c: float
    c_choice: str
    n: int = PLANE_DIMENSION
    u_report: Optional[SolveReport] = None
    psi_report: Optional[SolveReport] = None

    @property
    def geom(self) -> DomainGeometry:
        return self.grid.geom

    # Boundary traces at the s = 1 nodes

    @property
    def lap_u_boundary(self) -> np.ndarray:
        return -self.v.boundary()

    @property
    def normal_offset(self) -> np.ndarray:
        """(x - z).nu at the boundary nodes."""
        return np.sum((self.grid.boundary_points - self.z) * self.grid.boundary_normal, axis=1)

    @property
    def dv_dnu(self) -> np.ndarray:
        nu = self.grid.boundary_normal
        return nu[:, 0] * self.v_x.boundary() + nu[:, 1] * self.v_y.boundary()

    @property
    def dh_dnu(self) -> np.ndarray:
        return self.dv_dnu + self.normal_offset / self.n

    # Hessian of h = D^2 v + I/n

    @property
    def h_hessian(self) -> Tuple[Field, Field, Field]:
        return self.v_xx + 1.0 / self.n, self.v_xy, self.v_yy + 1.0 / self.n

    def core_mask(self, core_distance: float) -> np.ndarray:
        return self.distance.values >= core_distance

    def outer_core_mask(self, core_distance: float) -> np.ndarray:
        """Core nodes outside the rings clustered around the pole."""
        return self.core_mask(core_distance) & (self.grid.s >= POLE_EXCLUSION_RADIUS)[:, None]

    def with_anchor(self, z=None, c: Optional[float] = None, r2: Optional[float] = None) -> "SolutionBundle":
        """Same solution re-anchored at another z, c or R^2."""
        return derive_fields(self.u, self.psi, c_choice=self.c_choice, z=z, c=c, r2=r2,
                             u_report=self.u_report, psi_report=self.psi_report,
                             distance=self.distance, base=self)


def _hessian_norm_sq(xx: Field, xy: Field, yy: Field) -> np.ndarray:
    return xx.values ** 2 + 2.0 * xy.values ** 2 + yy.values ** 2


def locate_maximum(v: Field, v_x: Field, v_y: Field, v_xx: Field, v_xy: Field, v_yy: Field) -> np.ndarray:
    """Node argmax of v (ties to the smallest |x|), refined by Newton on the interpolant."""
    grid = v.grid
    values = v.values
    top = float(np.max(values))
    ties = np.argwhere(values >= top - 1e-14 * max(abs(top), 1.0))
    radii = grid.x[ties[:, 0], ties[:, 1]] ** 2 + grid.y[ties[:, 0], ties[:, 1]] ** 2
    i, l = ties[int(np.argmin(radii))]
    node = np.array([grid.x[i, l], grid.y[i, l]])
    if i == 0:
        raise MaxOnBoundary(ErrorMessages.MAX_ON_BOUNDARY.format(x=node[0], y=node[1]))

    z = node.copy()
    for _ in range(Z_NEWTON_STEPS):
        grad = np.array([v_x.at(z)[0], v_y.at(z)[0]])
        if np.linalg.norm(grad) <= Z_GRADIENT_TOLERANCE:
            break
        hess = np.array([[v_xx.at(z)[0], v_xy.at(z)[0]],
                         [v_xy.at(z)[0], v_yy.at(z)[0]]])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            logger.warning("Singular Hessian while refining argmax of v; keeping %s", z)
            break
        candidate = z - step
        if not grid.geom.contains(candidate)[0]:
            logger.warning("Newton step for argmax of v left the domain; keeping %s", z)
            break
        z = candidate
    return z


def boundary_constant(lap_u_boundary: np.ndarray, grid: TensorGrid, choice: str, n: int = PLANE_DIMENSION) -> float:
    """c from the boundary trace of Delta u: surface mean, the disk value c0, or the midrange."""
    if choice == 'mean':
        return boundary_integral(grid, lap_u_boundary) / perimeter(grid)
    if choice == 'c0':
        return 1.0 / (n * (n + 2))
    if choice == 'midrange':
        return 0.5 * (float(np.max(lap_u_boundary)) + float(np.min(lap_u_boundary)))
    raise ValueError(f"c_choice must be one of {C_CHOICES}, got '{choice}'")


def derive_fields(u: Field, psi: Field, c_choice: str = 'mean', z=None, c: Optional[float] = None,
                  r2: Optional[float] = None, u_report: Optional[SolveReport] = None,
                  psi_report: Optional[SolveReport] = None, distance: Optional[Field] = None,
                  base: Optional[SolutionBundle] = None) -> SolutionBundle:
    """Build the SolutionBundle. z defaults to argmax v, R^2 to 2n v(z), c to `c_choice`."""
    grid = check_same_grid(u, psi)
    n = PLANE_DIMENSION
    if base is not None:
        v, v_x, v_y = base.v, base.v_x, base.v_y
        v_xx, v_xy, v_yy = base.v_xx, base.v_xy, base.v_yy
    else:
        v = -laplacian(u)
        v_x, v_y = gradient(v)
        v_xx, v_xy, v_yy = hessian(v)

    if z is None:
        z = locate_maximum(v, v_x, v_y, v_xx, v_xy, v_yy)
    else:
        z = grid.geom.require_interior(z)
    if r2 is None:
        r2 = 2.0 * n * float(v.at(z)[0])

    dx, dy = grid.x - z[0], grid.y - z[1]
    quadratic = (r2 - dx * dx - dy * dy) / (2.0 * n)
    h = v - quadratic
    h_x = v_x + dx / n
    h_y = v_y + dy / n

    if c is None:
        c = boundary_constant(-v.boundary(), grid, c_choice, n)
    if distance is None:
        distance = Field(distances_to_boundary(grid.geom, grid.points).reshape(grid.shape), grid)

    bundle = SolutionBundle(grid=grid, u=u, psi=psi, v=v, v_x=v_x, v_y=v_y,
                            v_xx=v_xx, v_xy=v_xy, v_yy=v_yy, h=h, h_x=h_x, h_y=h_y,
                            distance=distance, z=np.asarray(z, dtype=float), r2=float(r2),
                            c=float(c), c_choice=c_choice, n=n,
                            u_report=u_report, psi_report=psi_report)
    logger.debug("Bundle: z=(%.6g, %.6g) R2=%.12g c=%.12g", z[0], z[1], r2, c)
    return bundle


def build_bundle(geom: DomainGeometry, grid: TensorGrid, c_choice: str = 'mean',
                 tolerances: Optional[Tolerances] = None, strict: bool = False) -> SolutionBundle:
    """Solve both problems on `grid` and derive the bundle."""
    u_report = solve_clamped_biharmonic(geom, grid, 1.0, tolerances=tolerances, strict=strict)
    psi_report = solve_torsion(geom, grid, tolerances=tolerances, strict=strict)
    return derive_fields(u_report.solution, psi_report.solution, c_choice=c_choice,
                         u_report=u_report, psi_report=psi_report)


def deficit(bundle: SolutionBundle) -> Field:
    """delta(v) = |D^2 v|^2 - (Delta v)^2 / n."""
    lap_v = bundle.v_xx.values + bundle.v_yy.values
    values = _hessian_norm_sq(bundle.v_xx, bundle.v_xy, bundle.v_yy) - lap_v ** 2 / bundle.n
    return Field(values, bundle.grid)


def hessian_h_norm_sq(bundle: SolutionBundle) -> Field:
    return Field(_hessian_norm_sq(*bundle.h_hessian), bundle.grid)


@dataclass(frozen=True)
class DeficitCheck:
    min_deficit: float
    identity_residual: float
    algebra_residual: float

    def to_dict(self) -> Dict[str, float]:
        return {'min_deficit': self.min_deficit, 'identity_residual': self.identity_residual,
                'algebra_residual': self.algebra_residual}


def deficit_check(bundle: SolutionBundle, core_distance: float = Tolerances().core_distance) -> DeficitCheck:
    """Sign of delta(v) and the identity delta(v) = |D^2 h|^2.

    The identity holds once Delta v = -1, so it is measured on the core; the
    exact relation delta(v) - |D^2 h|^2 = -(Delta v + 1)^2 / n is checked everywhere.
    """
    delta = deficit(bundle).values
    dh = hessian_h_norm_sq(bundle).values
    lap_v = bundle.v_xx.values + bundle.v_yy.values
    core = bundle.core_mask(core_distance)
    return DeficitCheck(
        min_deficit=float(np.min(delta)),
        identity_residual=float(np.max(np.abs(delta - dh)[core])),
        algebra_residual=float(np.max(np.abs(delta - dh + (lap_v + 1.0) ** 2 / bundle.n))),
    )


@dataclass(frozen=True)
class AuxiliaryQ:
    q: Field
    laplace_residual: float
    bilaplace_residual: float

    def to_dict(self) -> Dict[str, float]:
        return {'laplace_residual': self.laplace_residual, 'bilaplace_residual': self.bilaplace_residual}


def auxiliary_q(bundle: SolutionBundle, core_distance: float = Tolerances().core_distance) -> AuxiliaryQ:
    """q = v^2/4 - ((n+2)/(2n)) u with Delta q = |grad v|^2/2 + v/n and Delta^2 q = |D^2 v|^2 - 1/n.

    Both residuals are taken on the core away from the pole rings.
    """
    n = bundle.n
    grid = bundle.grid
    v = bundle.v.values
    q = v * v / 4.0 - (n + 2.0) / (2.0 * n) * bundle.u.values
    lap_q = grid.laplacian(q)
    bilap_q = grid.laplacian(lap_q)
    grad_sq = bundle.v_x.values ** 2 + bundle.v_y.values ** 2
    hess_sq = _hessian_norm_sq(bundle.v_xx, bundle.v_xy, bundle.v_yy)
    outer = bundle.outer_core_mask(core_distance)
    return AuxiliaryQ(
        q=Field(q, grid),
        laplace_residual=float(np.max(np.abs(lap_q - (grad_sq / 2.0 + v / n))[outer])),
        bilaplace_residual=float(np.max(np.abs(bilap_q - (hess_sq - 1.0 / n))[outer])),
    )


def harmonicity_residual(bundle: SolutionBundle, core_distance: float = Tolerances().core_distance) -> float:
    """sup |Delta h| on the core away from the pole rings (Delta h = Delta v + 1)."""
    lap_h = bundle.v_xx.values + bundle.v_yy.values + 1.0
    return float(np.max(np.abs(lap_h)[bundle.outer_core_mask(core_distance)]))


def gradient_h_at_z(bundle: SolutionBundle) -> float:
    z = bundle.z
    return float(math.hypot(bundle.h_x.at(z)[0], bundle.h_y.at(z)[0]))


def dense_trace(values: np.ndarray) -> np.ndarray:
    return upsample_periodic(values, DENSE_TRACE_POINTS)


def gap_reconstruction(bundle: SolutionBundle) -> Dict[str, float]:
    """rho_2^2 - rho_1^2 from geometry against the spread of 2n(h + Delta u) + R^2 on the boundary."""
    rho_1, rho_2 = radii_about(bundle.geom, bundle.z)
    trace = 2.0 * bundle.n * (bundle.h.boundary() + bundle.lap_u_boundary) + bundle.r2
    dense = dense_trace(trace)
    geometric = rho_2 ** 2 - rho_1 ** 2
    reconstructed = float(np.max(dense) - np.min(dense))
    return {'geometric': geometric, 'reconstructed': reconstructed,
            'residual': abs(geometric - reconstructed)}


def mean_value_check(bundle: SolutionBundle, count: int = MEAN_VALUE_DISKS, seed: int = 0) -> float:
    """Largest |disk average of h - h(center)| over random disks inside the domain."""
    rng = np.random.default_rng(seed)
    nodes, weights = np.polynomial.legendre.leggauss(MEAN_VALUE_RADIAL_NODES)
    angles = np.arange(MEAN_VALUE_ANGULAR_NODES) * TWO_PI / MEAN_VALUE_ANGULAR_NODES
    worst = 0.0
    for _ in range(count):
        radius_frac = math.sqrt(rng.uniform(0.0, 1.0)) * 0.5
        angle = rng.uniform(0.0, TWO_PI)
        center = np.array([radius_frac * math.cos(angle), radius_frac * math.sin(angle)])
        disk_radius = rng.uniform(0.2, 0.8) * distance_to_boundary(bundle.geom, center)

        rho = 0.5 * disk_radius * (nodes + 1.0)
        rr, aa = np.meshgrid(rho, angles, indexing='ij')
        pts = center + np.stack([rr.ravel() * np.cos(aa.ravel()), rr.ravel() * np.sin(aa.ravel())], axis=-1)
        vals = bundle.h.at(pts).reshape(rr.shape)
        radial_w = 0.5 * disk_radius * weights * rho
        integral = float(np.sum(radial_w[:, None] * vals)) * (TWO_PI / MEAN_VALUE_ANGULAR_NODES)
        average = integral / (math.pi * disk_radius ** 2)
        worst = max(worst, abs(average - float(bundle.h.at(center)[0])))
    return worst


def bundle_summary(bundle: SolutionBundle, tolerances: Optional[Tolerances] = None) -> Dict:
    tol = tolerances or Tolerances()
    check = deficit_check(bundle, tol.core_distance)
    q = auxiliary_q(bundle, tol.core_distance)
    return {
        'z': [float(bundle.z[0]), float(bundle.z[1])],
        'R2': bundle.r2,
        'c': bundle.c,
        'c_choice': bundle.c_choice,
        'sup_h': bundle.h.sup(),
        'sup_grad_h': float(np.max(np.hypot(bundle.h_x.values, bundle.h_y.values))),
        'min_deficit': check.min_deficit,
        'q_residuals': q.to_dict(),
    }
