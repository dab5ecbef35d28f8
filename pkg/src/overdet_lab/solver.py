"""
Collocation solvers for the clamped plate and the torsion problem.

Boundary conditions are imposed by bordering: the outermost radial row
carries u = 0 and, for the plate, the next row carries du/dnu = 0 at the
same boundary angle. Residuals are always recomputed from the returned field.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .config import Tolerances
from .constants import SINGULAR_RCOND, ErrorMessages
from .discretization import Field, TensorGrid
from .errors import GridMismatch, SingularSystem, Unconverged
from .geometry import DomainGeometry

logger = logging.getLogger(__name__)

Rhs = Union[float, Field, np.ndarray]


@dataclass
class SolveReport:
    """Solution plus residual certification for one solve."""
    problem: str
    solution: Field
    interior_residual: float
    boundary_residuals: Dict[str, float]
    condition_estimate: float
    resolution: Tuple[int, int]
    converged: bool
    tolerances: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'problem': self.problem,
            'interior_residual': self.interior_residual,
            'boundary_residuals': dict(self.boundary_residuals),
            'condition_estimate': self.condition_estimate,
            'resolution': list(self.resolution),
            'converged': self.converged,
            'tolerances': dict(self.tolerances),
            'max_value': float(np.max(self.solution.values)),
            'min_value': float(np.min(self.solution.values)),
        }


class CollocationSystem:
    """Assembled and LU-factored collocation matrix for one problem on one grid."""

    __slots__ = ('grid', 'problem', '_lu', '_piv', '_row_scale', 'condition_estimate')

    def __init__(self, grid: TensorGrid, problem: str):
        if problem not in ('clamped', 'torsion'):
            raise ValueError(f"unknown problem '{problem}'")
        self.grid = grid
        self.problem = problem
        matrix = self._assemble()
        self._row_scale = np.max(np.abs(matrix), axis=1)
        matrix = matrix / self._row_scale[:, None]
        anorm = float(np.linalg.norm(matrix, 1))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            self._lu, self._piv = lu_factor(matrix, check_finite=False)
        if np.any(np.diag(self._lu) == 0.0):
            raise SingularSystem(ErrorMessages.SINGULAR_SYSTEM.format(rcond=0.0))
        rcond, _ = dgecon(self._lu, anorm, norm='1')
        if not rcond >= SINGULAR_RCOND:
            raise SingularSystem(ErrorMessages.SINGULAR_SYSTEM.format(rcond=float(rcond)))
        self.condition_estimate = float(1.0 / rcond)
        logger.debug("Factored %s system of size %d, condition ~ %.3g",
                     problem, grid.size, self.condition_estimate)

    def _assemble(self) -> np.ndarray:
        grid = self.grid
        n_theta, size = grid.n_theta, grid.size
        lap = grid.operator_matrix(grid.laplacian)
        if self.problem == 'torsion':
            matrix = -lap
            matrix[:n_theta] = np.eye(n_theta, size)
            return matrix

        matrix = grid.laplacian(lap.reshape(grid.n_r, n_theta, size)).reshape(size, size)
        # Boundary rows of d/dx and d/dy: row 0 of each operator applied to every basis field
        basis = np.eye(size).reshape(grid.n_r, n_theta, size)
        normal = grid.boundary_normal
        flux = normal[:, 0, None] * grid.dx(basis)[0] + normal[:, 1, None] * grid.dy(basis)[0]
        matrix[:n_theta] = np.eye(n_theta, size)
        matrix[n_theta:2 * n_theta] = flux
        return matrix

    def rhs_vector(self, rhs: Rhs) -> np.ndarray:
        grid = self.grid
        values = _rhs_values(grid, rhs).copy()
        values[0] = 0.0
        if self.problem == 'clamped':
            values[1] = 0.0
        return values.ravel()

    def solve(self, rhs: Rhs) -> np.ndarray:
        b = self.rhs_vector(rhs) / self._row_scale
        u = lu_solve((self._lu, self._piv), b, check_finite=False)
        if not np.all(np.isfinite(u)):
            raise SingularSystem(ErrorMessages.SINGULAR_SYSTEM.format(
                rcond=1.0 / self.condition_estimate))
        return u.reshape(self.grid.shape)


def _rhs_values(grid: TensorGrid, rhs: Rhs) -> np.ndarray:
    if isinstance(rhs, Field):
        if rhs.grid is not grid and rhs.grid.key != grid.key:
            raise GridMismatch(ErrorMessages.GRID_MISMATCH)
        return np.array(rhs.values)
    return np.array(np.broadcast_to(np.asarray(rhs, dtype=float), grid.shape))


def _check_grid(geom: DomainGeometry, grid: TensorGrid) -> None:
    if grid.geom.shape != geom.shape:
        raise GridMismatch(ErrorMessages.GRID_MISMATCH)


def clamped_residuals(u: np.ndarray, grid: TensorGrid, rhs: Rhs) -> Tuple[float, Dict[str, float]]:
    """Sup-norm residuals of Delta^2 u = rhs (rows i >= 2), u = 0 and du/dnu = 0 (row 0)."""
    f = _rhs_values(grid, rhs)
    bilap = grid.laplacian(grid.laplacian(u))
    interior = float(np.max(np.abs(bilap - f)[2:]))
    normal = grid.boundary_normal
    flux = normal[:, 0] * grid.dx(u)[0] + normal[:, 1] * grid.dy(u)[0]
    return interior, {'value': float(np.max(np.abs(u[0]))),
                      'normal_derivative': float(np.max(np.abs(flux)))}


def torsion_residuals(psi: np.ndarray, grid: TensorGrid) -> Tuple[float, Dict[str, float]]:
    interior = float(np.max(np.abs(-grid.laplacian(psi) - 1.0)[1:]))
    return interior, {'value': float(np.max(np.abs(psi[0])))}


def _report(problem: str, system: CollocationSystem, values: np.ndarray,
            interior: float, boundary: Dict[str, float], limits: Dict[str, float],
            strict: bool) -> SolveReport:
    grid = system.grid
    measured = {'interior': interior, **boundary}
    failed = {name: value for name, value in measured.items() if value > limits[name]}
    report = SolveReport(
        problem=problem,
        solution=Field(values, grid),
        interior_residual=interior,
        boundary_residuals=boundary,
        condition_estimate=system.condition_estimate,
        resolution=grid.shape,
        converged=not failed,
        tolerances=limits,
    )
    if failed:
        details = ", ".join(f"{k}={v:.3g} (tol {limits[k]:.1g})" for k, v in sorted(failed.items()))
        message = ErrorMessages.UNCONVERGED.format(problem=problem, details=details)
        if strict:
            raise Unconverged(message)
        logger.warning(message)
    return report


def solve_clamped_biharmonic(geom: DomainGeometry, grid: TensorGrid, rhs: Rhs = 1.0,
                             tolerances: Optional[Tolerances] = None,
                             strict: bool = False,
                             system: Optional[CollocationSystem] = None) -> SolveReport:
    """Solve Delta^2 u = rhs with u = du/dnu = 0 on the boundary."""
    _check_grid(geom, grid)
    tol = tolerances or Tolerances()
    system = system or CollocationSystem(grid, 'clamped')
    u = system.solve(rhs)
    interior, boundary = clamped_residuals(u, grid, rhs)
    limits = {'interior': tol.biharmonic_interior, 'value': tol.boundary_value,
              'normal_derivative': tol.boundary_flux}
    logger.info("Clamped plate %dx%d: interior %.3g, u %.3g, du/dnu %.3g",
                grid.n_r, grid.n_theta, interior, boundary['value'], boundary['normal_derivative'])
    return _report('clamped', system, u, interior, boundary, limits, strict)


def solve_torsion(geom: DomainGeometry, grid: TensorGrid,
                  tolerances: Optional[Tolerances] = None,
                  strict: bool = False) -> SolveReport:
    """Solve -Delta psi = 1 with psi = 0 on the boundary."""
    _check_grid(geom, grid)
    tol = tolerances or Tolerances()
    system = CollocationSystem(grid, 'torsion')
    psi = system.solve(1.0)
    interior, boundary = torsion_residuals(psi, grid)
    limits = {'interior': tol.torsion_interior, 'value': tol.boundary_value}
    logger.info("Torsion %dx%d: interior %.3g, psi %.3g",
                grid.n_r, grid.n_theta, interior, boundary['value'])
    return _report('torsion', system, psi, interior, boundary, limits, strict)


class ManufacturedProblem(Protocol):
    name: str

    def exact_on(self, grid: TensorGrid) -> np.ndarray: ...

    def rhs_on(self, grid: TensorGrid) -> np.ndarray: ...


@dataclass(frozen=True)
class ConvergenceRow:
    n_r: int
    n_theta: int
    sup_error: float

    def to_dict(self) -> Dict:
        return {'n_r': self.n_r, 'n_theta': self.n_theta, 'sup_error': self.sup_error}


def manufactured_convergence(geom: DomainGeometry, problem: ManufacturedProblem,
                             resolutions: Sequence[Tuple[int, int]]) -> List[ConvergenceRow]:
    """Sup error of the clamped solver against a closed-form solution, per resolution."""
    table = []
    for n_r, n_theta in resolutions:
        grid = TensorGrid(geom, n_r, n_theta)
        system = CollocationSystem(grid, 'clamped')
        u = system.solve(problem.rhs_on(grid))
        error = float(np.max(np.abs(u - problem.exact_on(grid))))
        logger.info("Manufactured %s at %dx%d: sup error %.3e", problem.name, n_r, n_theta, error)
        table.append(ConvergenceRow(n_r, n_theta, error))
    return table


def is_spectrally_convergent(table: Sequence[ConvergenceRow], factor: float = 1e2,
                             floor: float = 1e-9) -> bool:
    """Each doubling must cut the error by `factor` unless the error has reached `floor`."""
    for coarse, fine in zip(table, table[1:]):
        if fine.sup_error <= floor or coarse.sup_error <= floor:
            continue
        if fine.sup_error > coarse.sup_error / factor:
            return False
    return True
