"""
overdet-lab - clamped plate solver and checks for the overdetermined condition on perturbed disks
"""

from .analysis import SolutionBundle, build_bundle, derive_fields
from .config import RunConfig, load_config
from .discretization import Field, TensorGrid
from .geometry import BoundaryShape, DomainGeometry, Mode, build_domain
from .identities import IdentityReport, run_identity_suite
from .radial_reference import RadialSolution, radial_constants
from .solver import SolveReport, solve_clamped_biharmonic, solve_torsion
from .stability import SweepRecord, SweepResult, stability_sweep

__version__ = "0.1.0"

__all__ = [
    'BoundaryShape', 'DomainGeometry', 'Mode', 'build_domain',
    'TensorGrid', 'Field',
    'SolveReport', 'solve_clamped_biharmonic', 'solve_torsion',
    'SolutionBundle', 'build_bundle', 'derive_fields',
    'IdentityReport', 'run_identity_suite',
    'SweepRecord', 'SweepResult', 'stability_sweep',
    'RadialSolution', 'radial_constants',
    'RunConfig', 'load_config',
]
