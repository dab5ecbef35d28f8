"""
Star-shaped perturbations of the unit disk.

A boundary is r(theta) = 1 + epsilon * rho(theta) with rho a finite
trigonometric series, so every derivative of r is exact. The interior map
blends mode k into the disk as s**k, which keeps Phi(-s, theta) = Phi(s, theta + pi)
and lets fields live on the doubled radial interval.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .constants import (
    CLOSENESS_DERIVATIVE_ORDER,
    COARSE_SCAN_POINTS,
    DEFAULT_AMPLITUDE_CAP,
    DEFAULT_C4_CAP,
    DENSE_SAMPLE_POINTS,
    FOLD_SCAN_RADII,
    MAX_NEWTON_STEPS,
    NEWTON_TOLERANCE,
    SHAPE_PRESETS,
    STATIONARITY_TOLERANCE,
    TWO_PI,
    ErrorMessages,
)
from .errors import (
    EmptyShape,
    FoldedMap,
    InadmissibleShape,
    NewtonStall,
    NonStarShaped,
    NotInterior,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mode:
    """One term a*cos(k theta) + b*sin(k theta) of the perturbation."""
    k: int
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(ErrorMessages.BAD_MODE.format(k=self.k))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True)
class BoundaryShape:
    """Immutable boundary r(theta) = 1 + epsilon * rho(theta)."""
    epsilon: float
    modes: Tuple[Mode, ...] = ()
    normalization: float = field(init=False, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "modes", tuple(self.modes))
        theta = np.linspace(0.0, TWO_PI, DENSE_SAMPLE_POINTS, endpoint=False)
        norm = float(np.max(np.abs(self.rho(theta)))) if self.modes else 0.0
        object.__setattr__(self, "normalization", norm)

    @classmethod
    def from_terms(cls, epsilon: float, terms: Iterable[Tuple[int, float, float]]) -> "BoundaryShape":
        return cls(epsilon, tuple(Mode(k, a, b) for k, a, b in terms))

    @classmethod
    def preset(cls, name: str, epsilon: float) -> "BoundaryShape":
        """Build one of the shipped families ('disk', 'cos1', 'cos2', 'cos3', 'mixed')."""
        if name not in SHAPE_PRESETS:
            raise ValueError(ErrorMessages.UNKNOWN_PRESET.format(
                name=name, choices=", ".join(sorted(SHAPE_PRESETS))))
        if name == "disk":
            return cls(0.0)
        return cls.from_terms(epsilon, SHAPE_PRESETS[name])

    def with_epsilon(self, epsilon: float) -> "BoundaryShape":
        return BoundaryShape(epsilon, self.modes)

    @property
    def max_mode(self) -> int:
        return max((m.k for m in self.modes), default=0)

    def rho(self, theta, order: int = 0) -> np.ndarray:
        """order-th derivative of rho, using d^m cos(k t) = k^m cos(k t + m pi/2)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        shift = order * math.pi / 2.0
        for m in self.modes:
            phase = m.k * theta + shift
            out = out + m.k ** order * (m.a * np.cos(phase) + m.b * np.sin(phase))
        return out

    def radius(self, theta, order: int = 0) -> np.ndarray:
        value = self.epsilon * self.rho(theta, order)
        return 1.0 + value if order == 0 else value

    def rotated(self, alpha: float) -> "BoundaryShape":
        """Shape rotated counterclockwise by alpha: r_new(theta) = r(theta - alpha)."""
        modes = []
        for m in self.modes:
            ca, sa = math.cos(m.k * alpha), math.sin(m.k * alpha)
            modes.append(Mode(m.k, m.a * ca - m.b * sa, m.a * sa + m.b * ca))
        return BoundaryShape(self.epsilon, tuple(modes))

    def amplitude(self) -> float:
        """epsilon * max|rho|."""
        return self.epsilon * self.normalization

    def c4_measure(self) -> float:
        """epsilon * max_k k^4 |coef|."""
        return self.epsilon * max(
            (m.k ** 4 * max(abs(m.a), abs(m.b)) for m in self.modes), default=0.0)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "modes": [{"k": m.k, "a": m.a, "b": m.b} for m in self.modes],
        }


@dataclass(frozen=True)
class DomainGeometry:
    """Geometry of the domain bounded by a BoundaryShape, with the map Phi from the disk."""
    shape: BoundaryShape
    area: float
    perimeter: float
    centroid: Tuple[float, float]

    # Boundary trace

    def boundary_point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        r = self.shape.radius(theta)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def boundary_derivative(self, theta, order: int = 1) -> np.ndarray:
        """order-th theta-derivative of x(theta) = r(theta) e(theta) (Leibniz rule)."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape + (2,))
        for j in range(order + 1):
            r_j = self.shape.radius(theta, j)
            phase = theta + (order - j) * math.pi / 2.0
            out += math.comb(order, j) * r_j[..., None] * np.stack(
                [np.cos(phase), np.sin(phase)], axis=-1)
        return out

    def tangent(self, theta) -> np.ndarray:
        return self.boundary_derivative(theta, 1)

    def jacobian(self, theta) -> np.ndarray:
        """Arclength element J = sqrt(r^2 + r'^2)."""
        r = self.shape.radius(theta)
        dr = self.shape.radius(theta, 1)
        return np.sqrt(r * r + dr * dr)

    def normal(self, theta) -> np.ndarray:
        """Outward unit normal (r cos + r' sin, r sin - r' cos) / J."""
        theta = np.asarray(theta, dtype=float)
        r = self.shape.radius(theta)
        dr = self.shape.radius(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        jac = np.sqrt(r * r + dr * dr)
        return np.stack([(r * c + dr * s) / jac, (r * s - dr * c) / jac], axis=-1)

    # Interior map

    def map_radius(self, s, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """R(s, theta) = s + eps sum s^(k+1) (a cos + b sin) and its partials R_s, R_theta."""
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        big_r = s + 0.0 * theta
        r_s = np.ones_like(big_r)
        r_theta = np.zeros_like(big_r)
        eps = self.shape.epsilon
        for m in self.shape.modes:
            c, sn = np.cos(m.k * theta), np.sin(m.k * theta)
            trig = m.a * c + m.b * sn
            dtrig = m.k * (m.b * c - m.a * sn)
            big_r = big_r + eps * s ** (m.k + 1) * trig
            r_s = r_s + eps * (m.k + 1) * s ** m.k * trig
            r_theta = r_theta + eps * s ** (m.k + 1) * dtrig
        return big_r, r_s, r_theta

    def map_radius_second(self, s, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Second partials (R_ss, R_s_theta, R_theta_theta) of the map radius."""
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        r_ss = np.zeros_like(s + 0.0 * theta)
        r_st = np.zeros_like(r_ss)
        r_tt = np.zeros_like(r_ss)
        eps = self.shape.epsilon
        for m in self.shape.modes:
            c, sn = np.cos(m.k * theta), np.sin(m.k * theta)
            trig = m.a * c + m.b * sn
            dtrig = m.k * (m.b * c - m.a * sn)
            r_ss = r_ss + eps * (m.k + 1) * m.k * s ** (m.k - 1) * trig
            r_st = r_st + eps * (m.k + 1) * s ** m.k * dtrig
            r_tt = r_tt - eps * m.k ** 2 * s ** (m.k + 1) * trig
        return r_ss, r_st, r_tt

    def map_point(self, s, theta) -> np.ndarray:
        big_r, _, _ = self.map_radius(s, theta)
        theta = np.asarray(theta, dtype=float)
        return np.stack([big_r * np.cos(theta), big_r * np.sin(theta)], axis=-1)

    def inverse_map(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """(s, theta) with Phi(s, theta) = x, by Newton on R(s, theta) = |x|."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        theta = np.mod(np.arctan2(points[:, 1], points[:, 0]), TWO_PI)
        target = np.hypot(points[:, 0], points[:, 1])
        s = target / self.shape.radius(theta)
        for _ in range(MAX_NEWTON_STEPS):
            big_r, r_s, _ = self.map_radius(s, theta)
            step = (big_r - target) / r_s
            s = s - step
            if np.max(np.abs(step)) < NEWTON_TOLERANCE:
                break
        return s, theta

    # Point classification

    def contains(self, points, strict: bool = True) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        theta = np.arctan2(points[:, 1], points[:, 0])
        rad = np.hypot(points[:, 0], points[:, 1])
        bound = self.shape.radius(theta)
        return rad < bound if strict else rad <= bound

    def require_interior(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float).reshape(2)
        if not self.contains(point)[0]:
            raise NotInterior(ErrorMessages.NOT_INTERIOR.format(x=point[0], y=point[1]))
        return point


def _check_unfolded(shape: BoundaryShape) -> None:
    """The interior map must be monotone in s: dR/ds > 0 on (0, 1] x [0, 2 pi)."""
    if not shape.modes:
        return
    s = np.linspace(1.0 / FOLD_SCAN_RADII, 1.0, FOLD_SCAN_RADII)
    theta = np.linspace(0.0, TWO_PI, COARSE_SCAN_POINTS, endpoint=False)
    s_mesh, th_mesh = np.meshgrid(s, theta, indexing='ij')
    _, r_s, _ = DomainGeometry(shape, 0.0, 0.0, (0.0, 0.0)).map_radius(s_mesh, th_mesh)
    worst = np.unravel_index(np.argmin(r_s), r_s.shape)
    if r_s[worst] <= 0:
        raise FoldedMap(ErrorMessages.FOLDED_MAP.format(
            r_s_min=float(r_s[worst]), s=float(s_mesh[worst]), theta=float(th_mesh[worst])))


def build_domain(shape: BoundaryShape) -> DomainGeometry:
    """Validate a shape and evaluate its area, perimeter and centroid."""
    if shape.epsilon > 0 and not shape.modes:
        raise EmptyShape(ErrorMessages.EMPTY_SHAPE.format(epsilon=shape.epsilon))

    theta = np.linspace(0.0, TWO_PI, DENSE_SAMPLE_POINTS, endpoint=False)
    r = shape.radius(theta)
    r_min = float(np.min(r))
    if r_min <= 0:
        raise NonStarShaped(ErrorMessages.NON_STAR_SHAPED.format(r_min=r_min))
    _check_unfolded(shape)

    # Trapezoid sums are exact for trigonometric polynomials of this degree
    dtheta = TWO_PI / DENSE_SAMPLE_POINTS
    dr = shape.radius(theta, 1)
    area = 0.5 * float(np.sum(r * r)) * dtheta
    perimeter = float(np.sum(np.sqrt(r * r + dr * dr))) * dtheta
    moment = np.sum(r ** 3 * np.stack([np.cos(theta), np.sin(theta)]), axis=1) * dtheta / 3.0
    centroid = (float(moment[0] / area), float(moment[1] / area))

    logger.debug("Built domain: eps=%g modes=%d area=%.12g perimeter=%.12g",
                 shape.epsilon, len(shape.modes), area, perimeter)
    return DomainGeometry(shape=shape, area=area, perimeter=perimeter, centroid=centroid)


def check_admissible(shape: BoundaryShape,
                     amplitude_cap: float = DEFAULT_AMPLITUDE_CAP,
                     c4_cap: float = DEFAULT_C4_CAP) -> bool:
    """Enforce the amplitude cap; the C^4 cap is only flagged. Returns True when within both."""
    amplitude = shape.amplitude()
    if amplitude > amplitude_cap:
        raise InadmissibleShape(ErrorMessages.INADMISSIBLE_SHAPE.format(
            amplitude=amplitude, cap=amplitude_cap))
    c4 = shape.c4_measure()
    if c4 > c4_cap:
        logger.warning("Shape exceeds the C4 closeness cap: %.6g > %.6g", c4, c4_cap)
        return False
    return True


# Boundary extremization

def _extremize(geom: DomainGeometry, points: np.ndarray, maximize: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Extremal |x(theta) - p| for each point: coarse scan, then guarded Newton on theta.

    Newton works on g = |x(theta) - p|^2 / 2 with g' = (x - p).x' and
    g'' = |x'|^2 + (x - p).x''. Points whose refinement stalls fall back to a
    dense scan with a NewtonStall warning.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coarse = np.linspace(0.0, TWO_PI, COARSE_SCAN_POINTS, endpoint=False)
    trace = geom.boundary_point(coarse)
    sq = np.sum((trace[None, :, :] - points[:, None, :]) ** 2, axis=-1)
    idx = np.argmax(sq, axis=1) if maximize else np.argmin(sq, axis=1)
    theta = coarse[idx]
    best = sq[np.arange(len(points)), idx]
    max_step = TWO_PI / COARSE_SCAN_POINTS

    residual = np.full(len(points), np.inf)
    for _ in range(MAX_NEWTON_STEPS):
        diff = geom.boundary_point(theta) - points
        d1 = geom.boundary_derivative(theta, 1)
        d2 = geom.boundary_derivative(theta, 2)
        g1 = np.sum(diff * d1, axis=-1)
        g2 = np.sum(d1 * d1, axis=-1) + np.sum(diff * d2, axis=-1)
        residual = np.abs(g1)
        if np.all(residual <= NEWTON_TOLERANCE):
            break
        safe = np.where(g2 != 0.0, g2, 1.0)
        step = np.clip(g1 / safe, -max_step, max_step)
        theta = theta - np.where(residual > NEWTON_TOLERANCE, step, 0.0)

    refined = np.sum((geom.boundary_point(theta) - points) ** 2, axis=-1)
    regressed = refined < best - 1e-15 if maximize else refined > best + 1e-15
    stalled = (residual > STATIONARITY_TOLERANCE) | regressed
    if np.any(stalled):
        warnings.warn(ErrorMessages.NEWTON_STALL.format(residual=float(np.max(residual))),
                      NewtonStall, stacklevel=3)
        dense = np.linspace(0.0, TWO_PI, DENSE_SAMPLE_POINTS, endpoint=False)
        dense_trace = geom.boundary_point(dense)
        sub = points[stalled]
        dsq = np.sum((dense_trace[None, :, :] - sub[:, None, :]) ** 2, axis=-1)
        pick = np.argmax(dsq, axis=1) if maximize else np.argmin(dsq, axis=1)
        theta[stalled] = dense[pick]
        refined[stalled] = dsq[np.arange(len(sub)), pick]
    return np.sqrt(refined), np.mod(theta, TWO_PI)


def distances_to_boundary(geom: DomainGeometry, points) -> np.ndarray:
    """Vectorized nearest-boundary distance; points on the boundary give 0."""
    dist, _ = _extremize(geom, points, maximize=False)
    return dist


def distance_to_boundary(geom: DomainGeometry, x) -> float:
    point = geom.require_interior(x)
    return float(distances_to_boundary(geom, point[None, :])[0])


def radii_about(geom: DomainGeometry, z) -> Tuple[float, float]:
    """In-radius and out-radius (rho_1, rho_2) of the domain about z."""
    point = geom.require_interior(z)[None, :]
    rho_1, _ = _extremize(geom, point, maximize=False)
    rho_2, _ = _extremize(geom, point, maximize=True)
    return float(rho_1[0]), float(rho_2[0])


def derivative_sup_norms(geom: DomainGeometry, max_order: int = CLOSENESS_DERIVATIVE_ORDER + 1) -> List[float]:
    """sup|d^m (eps rho)| for m = 0..max_order."""
    theta = np.linspace(0.0, TWO_PI, DENSE_SAMPLE_POINTS, endpoint=False)
    eps = geom.shape.epsilon
    if not geom.shape.modes:
        return [0.0] * (max_order + 1)
    return [float(eps * np.max(np.abs(geom.shape.rho(theta, m)))) for m in range(max_order + 1)]


def closeness_proxy(geom: DomainGeometry) -> float:
    """C^4 surrogate for the distance of Phi from the identity."""
    return max(derivative_sup_norms(geom, CLOSENESS_DERIVATIVE_ORDER))


def shape_from_mapping(data: dict) -> BoundaryShape:
    """Shape from {"epsilon": float, "modes": [{"k": int, "a": float, "b": float}]}."""
    modes = tuple(Mode(int(m["k"]), float(m.get("a", 0.0)), float(m.get("b", 0.0)))
                  for m in data.get("modes", []))
    return BoundaryShape(float(data.get("epsilon", 0.0)), modes)


def family(template: BoundaryShape, epsilons: Sequence[float]) -> List[BoundaryShape]:
    return [template.with_epsilon(eps) for eps in epsilons]
