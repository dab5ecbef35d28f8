"""
Closed-form plate and torsion solutions of the unit ball in any dimension n >= 2.
"""

import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import sympy as sp

from .utils import ValidationUtils

_R = sp.symbols('r', positive=True)


def sphere_area(n: int) -> float:
    """|S^(n-1)| = 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class RadialSolution:
    """u0 = (r^2 - 1)^2 / (8n(n+2)), v0 = -Delta u0, psi0 = (1 - r^2)/(2n) and their constants."""
    n: int
    c0: float
    r2: float
    v0_center: float
    u0_center: float
    psi0_center: float

    def u0(self, r):
        r = np.asarray(r, dtype=float)
        return (r * r - 1.0) ** 2 / (8.0 * self.n * (self.n + 2))

    def v0(self, r):
        r = np.asarray(r, dtype=float)
        return (self.n - (self.n + 2) * r * r) / (2.0 * self.n * (self.n + 2))

    def psi0(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 - r * r) / (2.0 * self.n)

    def quadratic(self, r):
        """Q(r) = (R0^2 - r^2) / (2n); identical to v0."""
        r = np.asarray(r, dtype=float)
        return (self.r2 - r * r) / (2.0 * self.n)

    def to_dict(self) -> Dict[str, float]:
        return {
            'n': self.n,
            'c0': self.c0,
            'R2': self.r2,
            'v0_center': self.v0_center,
            'u0_center': self.u0_center,
            'psi0_center': self.psi0_center,
        }


def radial_constants(n: int) -> RadialSolution:
    n = ValidationUtils.validate_dimension(n)
    return RadialSolution(
        n=n,
        c0=1.0 / (n * (n + 2)),
        r2=n / (n + 2.0),
        v0_center=1.0 / (2.0 * (n + 2)),
        u0_center=1.0 / (8.0 * n * (n + 2)),
        psi0_center=1.0 / (2.0 * n),
    )


@dataclass(frozen=True)
class RadialIntegrals:
    n: int
    volume_integral: float
    pucci_serrin_lhs: float
    pucci_serrin_rhs: float

    def to_dict(self) -> Dict[str, float]:
        return {
            'n': self.n,
            'integral_u0': self.volume_integral,
            'pucci_serrin_lhs': self.pucci_serrin_lhs,
            'pucci_serrin_rhs': self.pucci_serrin_rhs,
        }


def radial_integrals(n: int) -> RadialIntegrals:
    """Integral of u0 over the ball (Gauss-Legendre, exact for the polynomial profile) and both sides of
    (n+4) int u0 = c0^2 |S^(n-1)|."""
    sol = radial_constants(n)
    degree = 4 + (sol.n - 1)
    nodes, weights = np.polynomial.legendre.leggauss(degree // 2 + 1)
    r = 0.5 * (nodes + 1.0)
    profile = float(0.5 * np.sum(weights * sol.u0(r) * r ** (sol.n - 1)))
    area = sphere_area(sol.n)
    integral = profile * area
    return RadialIntegrals(
        n=sol.n,
        volume_integral=integral,
        pucci_serrin_lhs=(sol.n + 4) * integral,
        pucci_serrin_rhs=sol.c0 ** 2 * area,
    )


def radial_laplacian(expr: sp.Expr, n: int) -> sp.Expr:
    """Delta f = f'' + (n - 1) f' / r for radial f."""
    return sp.diff(expr, _R, 2) + (n - 1) * sp.diff(expr, _R) / _R


def radial_residuals(n: int, samples: int = 1001) -> Dict[str, float]:
    """Sup residuals of the defining equations on a fine radial grid."""
    n = ValidationUtils.validate_dimension(n)
    u0 = (_R ** 2 - 1) ** 2 / (8 * n * (n + 2))
    psi0 = (1 - _R ** 2) / (2 * n)
    v0 = (n - (n + 2) * _R ** 2) / (2 * n * (n + 2))
    lap_u0 = radial_laplacian(u0, n)
    exprs = {
        'bilaplacian': sp.simplify(radial_laplacian(lap_u0, n) - 1),
        'torsion': sp.simplify(-radial_laplacian(psi0, n) - 1),
        'v0_definition': sp.simplify(v0 + lap_u0),
        'v0_quadratic': sp.simplify(v0 - (sp.Rational(n, n + 2) - _R ** 2) / (2 * n)),
    }
    r = np.linspace(1e-3, 1.0, samples)
    out = {}
    for name, expr in exprs.items():
        values = np.broadcast_to(sp.lambdify(_R, expr, 'numpy')(r), r.shape)
        out[name] = float(np.max(np.abs(values)))
    boundary = {
        'u0_at_1': float(u0.subs(_R, 1)),
        'du0_at_1': float(sp.diff(u0, _R).subs(_R, 1)),
        'psi0_at_1': float(psi0.subs(_R, 1)),
    }
    out.update({k: abs(v) for k, v in boundary.items()})
    return out


def constants_table(dimensions: List[int]) -> List[Dict[str, float]]:
    """One merged row of constants and integrals per dimension."""
    rows = []
    for n in dimensions:
        row = radial_constants(n).to_dict()
        row.update(radial_integrals(n).to_dict())
        rows.append(row)
    return rows
