"""
Closed-form solutions for convergence studies. Forcing terms come from sympy.
"""

import logging
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .discretization import TensorGrid
from .geometry import BoundaryShape

logger = logging.getLogger(__name__)

X, Y = sp.symbols('x y', real=True)
S, THETA = sp.symbols('s theta', real=True)


def cartesian_bilaplacian(expr: sp.Expr) -> sp.Expr:
    lap = sp.diff(expr, X, 2) + sp.diff(expr, Y, 2)
    return sp.expand(sp.diff(lap, X, 2) + sp.diff(lap, Y, 2))


def map_radius_expr(shape: BoundaryShape) -> sp.Expr:
    """R(s, theta) of the interior map as a sympy expression."""
    expr = S
    eps = sp.Float(shape.epsilon)
    for m in shape.modes:
        expr += eps * S ** (m.k + 1) * (sp.Float(m.a) * sp.cos(m.k * THETA)
                                         + sp.Float(m.b) * sp.sin(m.k * THETA))
    return expr


def mapped_laplacian(expr: sp.Expr, big_r: sp.Expr) -> sp.Expr:
    """Laplacian in map coordinates: T^2 + T/R + A^2/R^2 with T = d_s/R_s, A = d_theta - (R_theta/R_s) d_s."""
    r_s = sp.diff(big_r, S)
    r_theta = sp.diff(big_r, THETA)

    def radial(f):
        return sp.diff(f, S) / r_s

    def angular(f):
        return sp.diff(f, THETA) - r_theta / r_s * sp.diff(f, S)

    return radial(radial(expr)) + radial(expr) / big_r + angular(angular(expr)) / big_r ** 2


class CartesianSolution:
    """u*(x, y) given as a polynomial; clamped only where it vanishes to second order."""

    def __init__(self, name: str, expr: sp.Expr, rhs: Optional[sp.Expr] = None):
        self.name = name
        self.expr = expr
        self.rhs_expr = cartesian_bilaplacian(expr) if rhs is None else rhs
        self._exact = sp.lambdify((X, Y), expr, 'numpy')
        self._rhs = sp.lambdify((X, Y), self.rhs_expr, 'numpy')

    def exact_on(self, grid: TensorGrid) -> np.ndarray:
        return np.broadcast_to(self._exact(grid.x, grid.y), grid.shape).astype(float)

    def rhs_on(self, grid: TensorGrid) -> np.ndarray:
        return np.broadcast_to(self._rhs(grid.x, grid.y), grid.shape).astype(float)


class LevelFunctionSquare:
    """u* = (1 - s^2)^2 with s the map radius; clamped on every shape."""

    def __init__(self, shape: BoundaryShape):
        self.name = f"level_square(eps={shape.epsilon:g})"
        self.shape = shape
        big_r = map_radius_expr(shape)
        u = (1 - S ** 2) ** 2
        self.rhs_expr = mapped_laplacian(mapped_laplacian(u, big_r), big_r)
        self._rhs: Callable = sp.lambdify((S, THETA), self.rhs_expr, 'numpy', cse=True)
        logger.debug("Built manufactured forcing for %s", self.name)

    def _mesh(self, grid: TensorGrid):
        if grid.geom.shape != self.shape:
            raise ValueError("manufactured solution was built for a different shape")
        return np.meshgrid(grid.s, grid.theta, indexing='ij')

    def exact_on(self, grid: TensorGrid) -> np.ndarray:
        s_mesh, _ = self._mesh(grid)
        return (1.0 - s_mesh ** 2) ** 2

    def rhs_on(self, grid: TensorGrid) -> np.ndarray:
        s_mesh, th_mesh = self._mesh(grid)
        return np.broadcast_to(self._rhs(s_mesh, th_mesh), grid.shape).astype(float)


def radial_quartic() -> CartesianSolution:
    """(1 - r^2)^2 / 64, the plate deflection of the unit disk."""
    return CartesianSolution('radial_quartic', (1 - X ** 2 - Y ** 2) ** 2 / 64)


def quartic_times_x() -> CartesianSolution:
    """(1 - r^2)^2 x with forcing 192 x on the unit disk."""
    return CartesianSolution('quartic_times_x', (1 - X ** 2 - Y ** 2) ** 2 * X)


def for_shape(shape: BoundaryShape, name: Optional[str] = None):
    """Default manufactured solution for a shape."""
    if name == 'radial_quartic':
        return radial_quartic()
    if name == 'quartic_times_x':
        return quartic_times_x()
    return LevelFunctionSquare(shape)
