"""
Chebyshev x Fourier collocation on a mapped disk.

Radial nodes are the positive half of a Chebyshev-Gauss-Lobatto grid on
[-1, 1] with an even number of points, so s = 0 is never a node. Values at
negative s are read from the opposite angle, f(-s, theta) = f(s, theta + pi).
Every operator here assumes its input is such a scalar field on the disk.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple, Union

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.linalg import toeplitz

from .constants import TWO_PI, ErrorMessages, Limits
from .errors import GridMismatch, NonFiniteField, OrderTooHigh, ResolutionOutOfRange
from .geometry import DomainGeometry
from .utils import ValidationUtils

logger = logging.getLogger(__name__)


def chebyshev_matrix(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto points x_j = cos(pi j / degree) and the differentiation matrix."""
    n = np.arange(degree + 1)
    x = np.cos(np.pi * n / degree)
    c = np.ones(degree + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** n
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(degree + 1))
    d = d - np.diag(np.sum(d, axis=1))
    return x, d


def fourier_matrix(count: int) -> np.ndarray:
    """Periodic spectral differentiation on `count` (even) equispaced nodes."""
    h = TWO_PI / count
    k = np.arange(1, count)
    column = np.concatenate([[0.0], 0.5 * (-1.0) ** k / np.tan(k * h / 2.0)])
    return toeplitz(column, column[np.r_[0, count - 1:0:-1]])


def fourier_second_matrix(count: int) -> np.ndarray:
    """Periodic second derivative on `count` (even) nodes; keeps the Nyquist mode at -(count/2)^2."""
    h = TWO_PI / count
    k = np.arange(1, count)
    column = np.concatenate([[-math.pi ** 2 / (3.0 * h * h) - 1.0 / 6.0],
                             -0.5 * (-1.0) ** k / np.sin(k * h / 2.0) ** 2])
    return toeplitz(column)


def radial_weights(t_nodes: np.ndarray) -> np.ndarray:
    """Interpolatory weights for the integral over t in [0, 1] at the given nodes."""
    count = len(t_nodes)
    vander = cheb.chebvander(2.0 * t_nodes - 1.0, count - 1)
    # Odd Chebyshev moments vanish
    moments = np.zeros(count)
    even = np.arange(0, count, 2, dtype=float)
    moments[::2] = 1.0 / (1.0 - even ** 2)
    return np.linalg.solve(vander.T, moments)


def _broadcast(coef: np.ndarray, values: np.ndarray) -> np.ndarray:
    return coef.reshape(coef.shape + (1,) * (values.ndim - coef.ndim))


def _second_metric(geom: DomainGeometry, s_mesh: np.ndarray, th_mesh: np.ndarray,
                   first: Tuple[np.ndarray, ...]) -> dict:
    """Chain-rule coefficients (f_ss, f_s_theta, f_theta_theta, f_s, f_theta) of f_xx, f_xy, f_yy.

    s = S(rho, theta) inverts rho = R(s, theta) along each ray; theta is the polar angle.
    """
    big_r, r_s, r_theta, s_x, s_y, theta_x, theta_y = first
    r_ss, r_st, r_tt = geom.map_radius_second(s_mesh, th_mesh)
    cos_t, sin_t = np.cos(th_mesh), np.sin(th_mesh)

    s_rho = 1.0 / r_s
    s_th = -r_theta / r_s
    s_rr = -r_ss * s_rho ** 2 / r_s
    s_rt = -(r_ss * s_th + r_st) * s_rho / r_s
    s_tt = -(r_ss * s_th ** 2 + 2.0 * r_st * s_th + r_tt) / r_s

    rho_d = {'x': cos_t, 'y': sin_t}
    th_d = {'x': theta_x, 'y': theta_y}
    rho_dd = {'xx': sin_t ** 2 / big_r, 'xy': -sin_t * cos_t / big_r, 'yy': cos_t ** 2 / big_r}
    th_dd = {'xx': 2.0 * sin_t * cos_t / big_r ** 2,
             'xy': (sin_t ** 2 - cos_t ** 2) / big_r ** 2,
             'yy': -2.0 * sin_t * cos_t / big_r ** 2}
    s_d = {'x': s_x, 'y': s_y}

    coefficients = {}
    for a, b in (('x', 'x'), ('x', 'y'), ('y', 'y')):
        pair = a + b
        s_ab = (s_rr * rho_d[a] * rho_d[b] + s_rt * (rho_d[a] * th_d[b] + rho_d[b] * th_d[a])
                + s_tt * th_d[a] * th_d[b] + s_rho * rho_dd[pair] + s_th * th_dd[pair])
        coefficients[pair] = (s_d[a] * s_d[b], s_d[a] * th_d[b] + s_d[b] * th_d[a],
                              th_d[a] * th_d[b], s_ab, th_dd[pair])
    coefficients['lap'] = tuple(xx + yy for xx, yy in zip(coefficients['xx'], coefficients['yy']))
    for terms in coefficients.values():
        for c in terms:
            c.flags.writeable = False
    return coefficients


class TensorGrid:
    """Immutable tensor grid with node coordinates, metric terms and quadrature."""

    __slots__ = ('geom', 'n_r', 'n_theta', 'key', 's', 'theta', 'x', 'y',
                 'map_r', 'map_r_s', 'map_r_theta', 's_x', 's_y', 'theta_x', 'theta_y',
                 'weights', 'boundary_jacobian', 'boundary_normal', 'boundary_points',
                 '_d_near', '_d_far', '_d2_near', '_d2_far', '_d_theta', '_d_theta2',
                 '_second', '_full_nodes', '_bary')

    def __init__(self, geom: DomainGeometry, n_r: int, n_theta: int):
        n_r, n_theta = ValidationUtils.validate_resolution(n_r, n_theta)
        required = 4 * geom.shape.max_mode
        if n_theta < required:
            raise ResolutionOutOfRange(ErrorMessages.UNDER_RESOLVED.format(
                n_theta=n_theta, required=required))

        self.geom = geom
        self.n_r = n_r
        self.n_theta = n_theta
        self.key = (geom.shape, n_r, n_theta)

        degree = 2 * n_r - 1
        full_nodes, d = chebyshev_matrix(degree)
        d2 = d @ d
        far = degree - np.arange(n_r)
        self._full_nodes = full_nodes
        self._d_near, self._d_far = d[:n_r, :n_r], d[:n_r, far]
        self._d2_near, self._d2_far = d2[:n_r, :n_r], d2[:n_r, far]
        self._d_theta = fourier_matrix(n_theta)
        self._d_theta2 = fourier_second_matrix(n_theta)
        bary = (-1.0) ** np.arange(degree + 1)
        bary[0] *= 0.5
        bary[-1] *= 0.5
        self._bary = bary

        self.s = full_nodes[:n_r]
        self.theta = np.arange(n_theta) * TWO_PI / n_theta
        s_mesh, th_mesh = np.meshgrid(self.s, self.theta, indexing='ij')

        big_r, r_s, r_theta = geom.map_radius(s_mesh, th_mesh)
        cos_t, sin_t = np.cos(th_mesh), np.sin(th_mesh)
        self.map_r, self.map_r_s, self.map_r_theta = big_r, r_s, r_theta
        self.x = big_r * cos_t
        self.y = big_r * sin_t
        self.s_x = cos_t / r_s + sin_t * r_theta / (big_r * r_s)
        self.s_y = sin_t / r_s - cos_t * r_theta / (big_r * r_s)
        self.theta_x = -sin_t / big_r
        self.theta_y = cos_t / big_r
        self._second = _second_metric(geom, s_mesh, th_mesh, (
            big_r, r_s, r_theta, self.s_x, self.s_y, self.theta_x, self.theta_y))

        # Volume element R R_s ds dtheta, integrated in t = s^2
        w_t = radial_weights(self.s ** 2)
        self.weights = 0.5 * w_t[:, None] * (TWO_PI / n_theta) * (big_r / s_mesh) * r_s

        self.boundary_jacobian = geom.jacobian(self.theta)
        self.boundary_normal = geom.normal(self.theta)
        self.boundary_points = np.stack([self.x[0], self.y[0]], axis=-1)

        for name in ('s', 'theta', 'x', 'y', 'map_r', 'map_r_s', 'map_r_theta', 's_x', 's_y',
                     'theta_x', 'theta_y', 'weights', 'boundary_jacobian',
                     'boundary_normal', 'boundary_points'):
            getattr(self, name).flags.writeable = False
        logger.debug("TensorGrid %dx%d for eps=%g", n_r, n_theta, geom.shape.epsilon)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.x.ravel(), self.y.ravel()], axis=-1)

    # Differentiation on arrays of shape (n_r, n_theta, *batch)

    def _fold(self, near: np.ndarray, far: np.ndarray, values: np.ndarray) -> np.ndarray:
        mirrored = np.roll(values, -self.n_theta // 2, axis=1)
        return np.tensordot(near, values, axes=(1, 0)) + np.tensordot(far, mirrored, axes=(1, 0))

    def d_s(self, values: np.ndarray) -> np.ndarray:
        return self._fold(self._d_near, self._d_far, values)

    def d_ss(self, values: np.ndarray) -> np.ndarray:
        return self._fold(self._d2_near, self._d2_far, values)

    def d_theta(self, values: np.ndarray) -> np.ndarray:
        return np.moveaxis(np.tensordot(self._d_theta, values, axes=(1, 1)), 0, 1)

    def d_theta_theta(self, values: np.ndarray) -> np.ndarray:
        return np.moveaxis(np.tensordot(self._d_theta2, values, axes=(1, 1)), 0, 1)

    def dx(self, values: np.ndarray) -> np.ndarray:
        return (_broadcast(self.s_x, values) * self.d_s(values)
                + _broadcast(self.theta_x, values) * self.d_theta(values))

    def dy(self, values: np.ndarray) -> np.ndarray:
        return (_broadcast(self.s_y, values) * self.d_s(values)
                + _broadcast(self.theta_y, values) * self.d_theta(values))

    def _second_order(self, which: str, values: np.ndarray) -> np.ndarray:
        f_theta = self.d_theta(values)
        parts = (self.d_ss(values), self.d_s(f_theta), self.d_theta_theta(values),
                 self.d_s(values), f_theta)
        return sum(_broadcast(c, values) * part for c, part in zip(self._second[which], parts))

    def dxx(self, values: np.ndarray) -> np.ndarray:
        return self._second_order('xx', values)

    def dxy(self, values: np.ndarray) -> np.ndarray:
        return self._second_order('xy', values)

    def dyy(self, values: np.ndarray) -> np.ndarray:
        return self._second_order('yy', values)

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self._second_order('lap', values)

    def operator_matrix(self, operator: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Dense matrix of a linear field operator, row/column index i * n_theta + l."""
        basis = np.eye(self.size).reshape(self.n_r, self.n_theta, self.size)
        return operator(basis).reshape(self.size, self.size)

    # Interpolation

    def doubled(self, values: np.ndarray) -> np.ndarray:
        """Values on the full radial grid [-1, 1], rows ordered like the Chebyshev nodes."""
        mirrored = np.roll(values, -self.n_theta // 2, axis=1)[::-1]
        return np.concatenate([values, mirrored], axis=0)

    def interpolate(self, values: np.ndarray, points) -> np.ndarray:
        """Spectral interpolant of a scalar field at physical points inside the domain."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        s, theta = self.geom.inverse_map(points)
        full = self.doubled(np.asarray(values, dtype=float))

        coeff = np.fft.rfft(full, axis=1) / self.n_theta
        k = np.arange(coeff.shape[1])
        scale = np.full(len(k), 2.0)
        scale[0] = 1.0
        scale[-1] = 1.0
        phases = np.exp(1j * np.outer(k, theta))
        rows = np.real((coeff * scale) @ phases)

        diff = s[None, :] - self._full_nodes[:, None]
        exact = diff == 0.0
        diff = np.where(exact, 1.0, diff)
        ratio = self._bary[:, None] / diff
        result = np.sum(ratio * rows, axis=0) / np.sum(ratio, axis=0)
        hit_rows, hit_cols = np.nonzero(exact)
        result[hit_cols] = rows[hit_rows, hit_cols]
        return result

    def spectral_tail(self, values: np.ndarray) -> float:
        """Largest trailing coefficient relative to the leading one, radial and angular."""
        full = self.doubled(np.asarray(values, dtype=float))
        radial = np.abs(cheb.chebfit(self._full_nodes, full, len(self._full_nodes) - 1))
        angular = np.abs(np.fft.rfft(full, axis=1))
        lead = max(float(np.max(radial)), float(np.max(angular)) / self.n_theta)
        if lead == 0.0:
            return 0.0
        tail = max(float(np.max(radial[-2:])), float(np.max(angular[:, -2:])) / self.n_theta)
        return tail / lead


@dataclass(frozen=True, eq=False)
class Field:
    """Values of a scalar function at the nodes of a TensorGrid."""
    values: np.ndarray
    grid: TensorGrid

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatch(ErrorMessages.GRID_MISMATCH)
        bad = int(np.count_nonzero(~np.isfinite(values)))
        if bad:
            raise NonFiniteField(ErrorMessages.NON_FINITE_FIELD.format(count=bad))
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: TensorGrid, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Field":
        return cls(np.broadcast_to(func(grid.x, grid.y), grid.shape), grid)

    @classmethod
    def constant(cls, grid: TensorGrid, value: float) -> "Field":
        return cls(np.full(grid.shape, float(value)), grid)

    def _other(self, other) -> Union[np.ndarray, float]:
        if isinstance(other, Field):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other) -> "Field":
        return Field(self.values + self._other(other), self.grid)

    __radd__ = __add__

    def __sub__(self, other) -> "Field":
        return Field(self.values - self._other(other), self.grid)

    def __rsub__(self, other) -> "Field":
        return Field(self._other(other) - self.values, self.grid)

    def __mul__(self, other) -> "Field":
        return Field(self.values * self._other(other), self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(-self.values, self.grid)

    def boundary(self) -> np.ndarray:
        """Trace at the s = 1 nodes."""
        return self.values[0]

    def at(self, points) -> np.ndarray:
        return self.grid.interpolate(self.values, points)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def csv_rows(self) -> List[Tuple[float, float, float, float, float]]:
        """Rows (s, theta, x, y, value) in node order."""
        g = self.grid
        s_mesh, th_mesh = np.meshgrid(g.s, g.theta, indexing='ij')
        return list(zip(s_mesh.ravel(), th_mesh.ravel(), g.x.ravel(), g.y.ravel(),
                        self.values.ravel()))


def check_same_grid(*fields: Field) -> TensorGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        _require_grid(f.grid, grid)
    return grid


def _require_grid(actual: TensorGrid, expected: TensorGrid) -> None:
    if actual is not expected and actual.key != expected.key:
        raise GridMismatch(ErrorMessages.GRID_MISMATCH)


def differentiate(f: Field, multi_index: Tuple[int, int]) -> Field:
    """d^(i+j) f / dx^i dy^j, taking x and y derivatives two at a time where possible."""
    i, j = multi_index
    if i < 0 or j < 0:
        raise ValueError(f"multi-index entries must be >= 0, got {multi_index}")
    if i + j > Limits.MAX_DERIVATIVE_ORDER:
        raise OrderTooHigh(ErrorMessages.ORDER_TOO_HIGH.format(order=i + j))
    g = f.grid
    values = f.values
    for _ in range(i // 2):
        values = g.dxx(values)
    for _ in range(j // 2):
        values = g.dyy(values)
    if i % 2 and j % 2:
        values = g.dxy(values)
    elif i % 2:
        values = g.dx(values)
    elif j % 2:
        values = g.dy(values)
    return Field(values, g)


def laplacian(f: Field) -> Field:
    return Field(f.grid.laplacian(f.values), f.grid)


def gradient(f: Field) -> Tuple[Field, Field]:
    return Field(f.grid.dx(f.values), f.grid), Field(f.grid.dy(f.values), f.grid)


def hessian(f: Field) -> Tuple[Field, Field, Field]:
    """(f_xx, f_xy, f_yy); f_xx + f_yy matches laplacian(f) to rounding."""
    g = f.grid
    return Field(g.dxx(f.values), g), Field(g.dxy(f.values), g), Field(g.dyy(f.values), g)


def volume_integral(f: Field, grid: TensorGrid = None) -> float:
    """Integral over the domain; pass `grid` to assert the field lives on it."""
    if grid is not None:
        _require_grid(f.grid, grid)
    return float(np.sum(f.values * f.grid.weights))


def _trace(grid: TensorGrid, g) -> np.ndarray:
    if isinstance(g, Field):
        _require_grid(g.grid, grid)
        return g.boundary()
    trace = np.asarray(g, dtype=float)
    if trace.ndim == 0:
        return np.full(grid.n_theta, float(trace))
    if trace.shape[0] != grid.n_theta:
        raise GridMismatch(ErrorMessages.GRID_MISMATCH)
    return trace


def boundary_integral(grid: TensorGrid, g) -> Union[float, np.ndarray]:
    """Trapezoidal rule for the boundary integral of g dS; g may carry trailing components."""
    trace = _trace(grid, g)
    jac = _broadcast(grid.boundary_jacobian, trace)
    total = np.sum(trace * jac, axis=0) * (TWO_PI / grid.n_theta)
    return float(total) if np.ndim(total) == 0 else total


def boundary_lp_norm(grid: TensorGrid, g, p: float) -> float:
    p = ValidationUtils.validate_p(p)
    trace = np.abs(_trace(grid, g))
    if math.isinf(p):
        return float(np.max(trace))
    return boundary_integral(grid, trace ** p) ** (1.0 / p)


def perimeter(grid: TensorGrid) -> float:
    return boundary_integral(grid, np.ones(grid.n_theta))


def upsample_periodic(values: np.ndarray, count: int) -> np.ndarray:
    """Trigonometric interpolant of equispaced samples evaluated at `count` equispaced points."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    coeff = np.fft.rfft(values)
    if n % 2 == 0:
        coeff[-1] *= 0.5
    return np.fft.irfft(coeff, n=count) * (count / n)
