"""
Quantities of the stability chain (gap, oscillation, chain ratios, trace ratios,
positivity certificate) and the epsilon sweeps that confront them with the
stability exponents.
"""

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .analysis import SolutionBundle, build_bundle, dense_trace
from .config import RunConfig, Tolerances
from .constants import (
    CERTIFICATE_MIN_DISTANCE,
    DEFAULT_BETA_MARGIN,
    DEFAULT_SIGMA_MARGIN,
    DEFAULT_TWO_STAR,
    DEGENERATE_INTEGRAL,
    MIN_FIT_POINTS,
    NOISE_FLOOR_FACTOR,
    PLANE_DIMENSION,
    ErrorMessages,
)
from .discretization import (
    Field,
    TensorGrid,
    boundary_lp_norm,
    hessian,
    volume_integral,
)
from .errors import (
    CertificateViolated,
    DegenerateDenominator,
    InequalityViolated,
    NoiseFloor,
)
from .geometry import BoundaryShape, DomainGeometry, build_domain, check_admissible, radii_about
from .identities import main_identity, pucci_serrin
from .utils import ValidationUtils, finite_or_none, max_min_ratio

logger = logging.getLogger(__name__)


# Exponent tables

def sigma(p: float, n: int = PLANE_DIMENSION) -> float:
    """Stability exponent: (n+2)p / (n(n+2p-1)) below p = 3/2, 3/(2n) from there on."""
    p = ValidationUtils.validate_p(p)
    n = ValidationUtils.validate_dimension(n)
    if p < 1.5:
        return (n + 2) * p / (n * (n + 2 * p - 1))
    return 3.0 / (2.0 * n)


def beta(p: float, n: int = PLANE_DIMENSION) -> float:
    """Trace exponent: 1/3 up to p = 3, (n+p-1)/((n+2)p) above, 1/(n+2) at infinity."""
    p = ValidationUtils.validate_p(p)
    n = ValidationUtils.validate_dimension(n)
    if math.isinf(p):
        return 1.0 / (n + 2)
    if p <= 3:
        return 1.0 / 3.0
    return (n + p - 1) / ((n + 2) * p)


def beta_direct(p: float, n: int = PLANE_DIMENSION) -> float:
    """Trace exponent before interpolating with the p = 3 estimate: (n+p-3)/(np+2p-6)."""
    p = ValidationUtils.validate_p(p)
    n = ValidationUtils.validate_dimension(n)
    if math.isinf(p):
        return 1.0 / (n + 2)
    if p <= 3:
        return 1.0 / 3.0
    return (n + p - 3) / (n * p + 2 * p - 6)


def baseline_exponent(n: int = PLANE_DIMENSION) -> float:
    """Exponent of the weaker L^1 stability estimate."""
    return 1.0 / ValidationUtils.validate_dimension(n)


def conjugate_exponent(p: float) -> float:
    p = ValidationUtils.validate_p(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def effective_sigma(p: float, n: int = PLANE_DIMENSION, margin: float = DEFAULT_SIGMA_MARGIN) -> float:
    """sigma_p minus the margin; in the plane also scaled by (1 - margin)."""
    value = sigma(p, n) - margin
    if n == 2:
        value *= 1.0 - margin
    return value


@dataclass(frozen=True)
class ExponentTables:
    n: int
    ps: Tuple[float, ...]

    @property
    def sigma(self) -> Dict[float, float]:
        return {p: sigma(p, self.n) for p in self.ps}

    @property
    def beta(self) -> Dict[float, float]:
        return {p: beta(p, self.n) for p in self.ps}

    @property
    def beta_direct(self) -> Dict[float, float]:
        return {p: beta_direct(p, self.n) for p in self.ps}

    def rows(self) -> List[Dict[str, float]]:
        return [{'n': self.n, 'p': p, 'sigma': sigma(p, self.n), 'beta': beta(p, self.n),
                 'beta_direct': beta_direct(p, self.n)} for p in self.ps]


# Boundary deviation

def deviation_trace(bundle: SolutionBundle, c: Optional[float] = None) -> np.ndarray:
    c = bundle.c if c is None else c
    return bundle.lap_u_boundary - c


def deviation_norm(bundle: SolutionBundle, p: float, c: Optional[float] = None) -> float:
    """||Delta u - c||_{L^p(boundary)}; the sup norm is taken on the dense trace."""
    trace = deviation_trace(bundle, c)
    if math.isinf(ValidationUtils.validate_p(p)):
        return float(np.max(np.abs(dense_trace(trace))))
    return boundary_lp_norm(bundle.grid, trace, p)


@dataclass(frozen=True)
class GapCheck:
    rho_1: float
    rho_2: float
    lhs: float
    rhs: float
    oscillation: float
    deviation_inf: float

    @property
    def gap(self) -> float:
        return self.rho_2 - self.rho_1

    def to_dict(self) -> Dict[str, float]:
        return {'rho_1': self.rho_1, 'rho_2': self.rho_2, 'gap': self.gap, 'lhs': self.lhs,
                'rhs': self.rhs, 'oscillation': self.oscillation, 'deviation_inf': self.deviation_inf}


def oscillation_h(bundle: SolutionBundle) -> float:
    trace = dense_trace(bundle.h.boundary())
    return float(np.max(trace) - np.min(trace))


def gap_and_oscillation(bundle: SolutionBundle, tolerance: float = Tolerances().inequality) -> GapCheck:
    """rho_2^2 - rho_1^2 <= 2n osc h + 4n ||Delta u - c||_inf about the bundle's z."""
    rho_1, rho_2 = radii_about(bundle.geom, bundle.z)
    osc = oscillation_h(bundle)
    dev = deviation_norm(bundle, math.inf)
    lhs = rho_2 ** 2 - rho_1 ** 2
    rhs = 2.0 * bundle.n * osc + 4.0 * bundle.n * dev
    if lhs > rhs + tolerance:
        raise InequalityViolated(ErrorMessages.INEQUALITY_VIOLATED.format(
            name="gap/oscillation bound", lhs=lhs, rhs=rhs))
    return GapCheck(rho_1=rho_1, rho_2=rho_2, lhs=lhs, rhs=rhs, oscillation=osc, deviation_inf=dev)


def centroid_radii(bundle: SolutionBundle) -> Tuple[float, float]:
    """(rho_1, rho_2) about the domain centroid instead of argmax v."""
    return radii_about(bundle.geom, bundle.geom.centroid)


# Chain of inequalities

def _ratio(numerator: float, denominator: Optional[float]) -> Optional[float]:
    if denominator is None or denominator == 0.0:
        return None
    return numerator / denominator


def _nondegenerate(norm: float) -> Optional[float]:
    """None when the squared norm is below the degeneracy threshold."""
    return norm if norm * norm >= DEGENERATE_INTEGRAL else None


def weighted_hessian_integral(bundle: SolutionBundle) -> float:
    """int d^2 |D^2 h|^2."""
    xx, xy, yy = bundle.h_hessian
    hess_sq = xx.values ** 2 + 2.0 * xy.values ** 2 + yy.values ** 2
    return volume_integral(Field(bundle.distance.values ** 2 * hess_sq, bundle.grid))


@dataclass(frozen=True)
class ChainQuantities:
    oscillation: float
    mean_deviation: float
    gradient_l2: float
    weighted_hessian_l2: float
    exponent: float
    ratio_oscillation: Optional[float]
    ratio_sobolev: Optional[float]
    ratio_weighted: Optional[float]
    gradient_ratio: Optional[float]

    def to_dict(self) -> Dict[str, Optional[float]]:
        return dict(self.__dict__)


def chain_quantities(bundle: SolutionBundle, two_star: float = DEFAULT_TWO_STAR) -> ChainQuantities:
    """osc h, ||h - h_mean||_{2*}, ||grad h||_2, ||d D^2 h||_2 and the successive ratios.

    With gamma = 2*/(n + 2*) the ratios are osc/A^gamma, (A/B)^gamma and (B/D)^gamma
    for the three norms A, B, D; ratios with a degenerate denominator are None.
    """
    grid = bundle.grid
    h = bundle.h.values
    area = bundle.geom.area
    h_mean = volume_integral(bundle.h) / area
    mean_dev = volume_integral(Field(np.abs(h - h_mean) ** two_star, grid)) ** (1.0 / two_star)
    grad_l2 = math.sqrt(max(volume_integral(Field(bundle.h_x.values ** 2 + bundle.h_y.values ** 2, grid)), 0.0))
    weighted = math.sqrt(max(weighted_hessian_integral(bundle), 0.0))
    osc = oscillation_h(bundle)
    gamma = two_star / (bundle.n + two_star)

    a, b, d = _nondegenerate(mean_dev), _nondegenerate(grad_l2), _nondegenerate(weighted)
    return ChainQuantities(
        oscillation=osc,
        mean_deviation=mean_dev,
        gradient_l2=grad_l2,
        weighted_hessian_l2=weighted,
        exponent=gamma,
        ratio_oscillation=_ratio(osc, None if a is None else a ** gamma),
        ratio_sobolev=None if a is None or b is None else (a / b) ** gamma,
        ratio_weighted=None if b is None or d is None else (b / d) ** gamma,
        gradient_ratio=None if b is None or d is None else (b / d) ** 2,
    )


# Trace inequality

def gradient_trace_norm(bundle: SolutionBundle, p: float) -> float:
    """||grad h||_{L^p(boundary)}."""
    magnitude = np.hypot(bundle.h_x.boundary(), bundle.h_y.boundary())
    if math.isinf(ValidationUtils.validate_p(p)):
        return float(np.max(dense_trace(magnitude)))
    return boundary_lp_norm(bundle.grid, magnitude, p)


def trace_exponent(p: float, n: int, margin: float = DEFAULT_BETA_MARGIN, exact: bool = False) -> float:
    if exact:
        if not math.isinf(p):
            raise ValueError("the exact trace exponent is only available at p = inf")
        return beta(p, n)
    return beta(p, n) - margin


def trace_ratio(bundle: SolutionBundle, p: float, margin: float = DEFAULT_BETA_MARGIN,
                exact: bool = False) -> float:
    """||grad h||_{L^p(boundary)} / (int d^2 |D^2 h|^2)^beta."""
    weighted = weighted_hessian_integral(bundle)
    if weighted < DEGENERATE_INTEGRAL:
        raise DegenerateDenominator(ErrorMessages.DEGENERATE_DENOMINATOR.format(value=weighted))
    exponent = trace_exponent(p, bundle.n, margin, exact)
    return gradient_trace_norm(bundle, p) / weighted ** exponent


def trace_to_deviation(bundle: SolutionBundle, p: float, margin: float = DEFAULT_BETA_MARGIN) -> Optional[float]:
    """||grad h||_{L^p} / ||Delta u - c||_{L^p'}^(beta/(1-beta)); None when the deviation vanishes."""
    exponent = trace_exponent(p, bundle.n, margin)
    deviation = deviation_norm(bundle, conjugate_exponent(p))
    if _nondegenerate(deviation) is None:
        return None
    return gradient_trace_norm(bundle, p) / deviation ** (exponent / (1.0 - exponent))


# Positivity certificate

@dataclass(frozen=True)
class PositivityCertificate:
    c_omega: float
    eta: float
    min_w: float
    min_bilaplacian_w: float
    min_u: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def positivity_certificate(bundle: SolutionBundle, tolerance: float = Tolerances().certificate,
                           min_distance: float = CERTIFICATE_MIN_DISTANCE) -> PositivityCertificate:
    """w = u - c_Omega psi^2 with c_Omega = 1 / (2(1 + 2 max|D^2 psi|^2)), and eta = min u/d^2."""
    xx, xy, yy = hessian(bundle.psi)
    hess_sq = xx.values ** 2 + 2.0 * xy.values ** 2 + yy.values ** 2
    c_omega = 1.0 / (2.0 * (1.0 + 2.0 * float(np.max(hess_sq))))
    w = bundle.u.values - c_omega * bundle.psi.values ** 2
    min_w = float(np.min(w))
    if min_w < -tolerance:
        raise CertificateViolated(ErrorMessages.CERTIFICATE_VIOLATED.format(value=min_w, tolerance=tolerance))

    d = bundle.distance.values
    mask = d >= min_distance
    eta = float(np.min(bundle.u.values[mask] / d[mask] ** 2))
    bilap_w = 1.0 - 2.0 * c_omega * (1.0 + 2.0 * hess_sq)
    return PositivityCertificate(c_omega=c_omega, eta=eta, min_w=min_w,
                                 min_bilaplacian_w=float(np.min(bilap_w)),
                                 min_u=float(np.min(bundle.u.values)))


# Sweeps

@dataclass(frozen=True)
class SweepRecord:
    """One epsilon point of a sweep. Per-p entries are keyed by p."""
    epsilon: float
    z: Tuple[float, float]
    rho_1: float
    rho_2: float
    centroid_rho_1: float
    centroid_rho_2: float
    deviation: Dict[float, float]
    deviation_l2_c0: float
    oscillation: float
    mean_deviation: float
    gradient_l2: float
    weighted_hessian_l2: float
    gradient_trace: Dict[float, float]
    chain: ChainQuantities
    trace_ratio: Dict[float, Optional[float]]
    trace_ratio_exact_inf: Optional[float]
    trace_to_deviation: Dict[float, Optional[float]]
    identity_lhs: float
    identity_rel_residual: float
    certificate: PositivityCertificate

    @property
    def gap(self) -> float:
        return self.rho_2 - self.rho_1

    @property
    def centroid_gap(self) -> float:
        return self.centroid_rho_2 - self.centroid_rho_1


@dataclass(frozen=True)
class ExponentFit:
    p: float
    sigma: float
    sigma_effective: float
    constant: Optional[float]
    baseline_constant: Optional[float]
    slope_vs_norm: Optional[float]
    slope_gap_vs_epsilon: Optional[float]
    slope_norm_vs_epsilon: Optional[float]
    points_used: int
    noise_floor: float
    max_trace_ratio: Optional[float]

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class SweepResult:
    family: BoundaryShape
    ps: Tuple[float, ...]
    records: List[SweepRecord]
    fits: List[ExponentFit]
    margins: Dict[str, float]
    chain_spread: Dict[str, Optional[float]] = field(default_factory=dict)
    max_trace_ratio_exact_inf: Optional[float] = None


def _safe_trace_ratio(bundle: SolutionBundle, p: float, margin: float, exact: bool = False) -> Optional[float]:
    try:
        return trace_ratio(bundle, p, margin, exact)
    except DegenerateDenominator as e:
        logger.debug("Trace ratio at p=%s undefined: %s", p, e)
        return None


def sweep_point(geom: DomainGeometry, grid: TensorGrid, ps: Sequence[float],
                config: RunConfig) -> SweepRecord:
    """Solve one shape and measure every sweep quantity."""
    tol = config.tolerances
    bundle = build_bundle(geom, grid, c_choice=config.c_choice, tolerances=tol)
    gap = gap_and_oscillation(bundle, tol.inequality)
    c_rho_1, c_rho_2 = centroid_radii(bundle)
    chain = chain_quantities(bundle, config.two_star)
    identity = pucci_serrin(bundle)
    lhs = main_identity(bundle).lhs
    c0 = 1.0 / (bundle.n * (bundle.n + 2))
    margin = config.margins.beta
    record = SweepRecord(
        epsilon=geom.shape.epsilon,
        z=(float(bundle.z[0]), float(bundle.z[1])),
        rho_1=gap.rho_1,
        rho_2=gap.rho_2,
        centroid_rho_1=c_rho_1,
        centroid_rho_2=c_rho_2,
        deviation={p: deviation_norm(bundle, p) for p in ps},
        deviation_l2_c0=deviation_norm(bundle, 2.0, c0),
        oscillation=chain.oscillation,
        mean_deviation=chain.mean_deviation,
        gradient_l2=chain.gradient_l2,
        weighted_hessian_l2=chain.weighted_hessian_l2,
        gradient_trace={p: gradient_trace_norm(bundle, p) for p in ps},
        chain=chain,
        trace_ratio={p: _safe_trace_ratio(bundle, p, margin) for p in ps},
        trace_ratio_exact_inf=_safe_trace_ratio(bundle, math.inf, margin, exact=True),
        trace_to_deviation={p: trace_to_deviation(bundle, p, margin) for p in ps},
        identity_lhs=lhs,
        identity_rel_residual=identity.rel_residual,
        certificate=positivity_certificate(bundle, tol.certificate),
    )
    logger.debug("Sweep point eps=%g: gap=%.6e dev_inf=%.6e", record.epsilon, record.gap,
                 deviation_norm(bundle, math.inf))
    return record


def _slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if np.count_nonzero(keep) < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _max_or_none(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return max(values) if values else None


def fit_exponents(records: Sequence[SweepRecord], p: float, n: int = PLANE_DIMENSION,
                  sigma_margin: float = DEFAULT_SIGMA_MARGIN, strict: bool = False) -> ExponentFit:
    """Boundedness constants and log-log slopes for one p; points under the noise floor are dropped."""
    sig_eff = effective_sigma(p, n, sigma_margin)
    base = baseline_exponent(n)
    gaps = [r.gap for r in records]
    norms = [r.deviation[p] for r in records]
    norms_inf = [r.deviation[math.inf] for r in records]
    eps = [r.epsilon for r in records]

    floor = NOISE_FLOOR_FACTOR * max(r.identity_rel_residual for r in records)
    kept = [i for i, value in enumerate(norms) if value >= floor]

    constants, baselines = [], []
    for i in kept:
        constants.append(finite_or_none(gaps[i] / (norms[i] ** sig_eff + norms_inf[i])))
        baselines.append(finite_or_none(gaps[i] / (norms[i] ** base + norms_inf[i])))

    slope_vs_norm = slope_gap_eps = slope_norm_eps = None
    if len(kept) < MIN_FIT_POINTS:
        message = ErrorMessages.NOISE_FLOOR.format(count=len(kept), floor=floor, required=MIN_FIT_POINTS)
        if strict:
            raise NoiseFloor(message)
        logger.warning(message)
    else:
        slope_vs_norm = _slope([norms[i] for i in kept], [gaps[i] for i in kept])
        slope_gap_eps = _slope([eps[i] for i in kept], [gaps[i] for i in kept])
        slope_norm_eps = _slope([eps[i] for i in kept], [norms[i] for i in kept])

    return ExponentFit(
        p=p,
        sigma=sigma(p, n),
        sigma_effective=sig_eff,
        constant=_max_or_none(constants),
        baseline_constant=_max_or_none(baselines),
        slope_vs_norm=slope_vs_norm,
        slope_gap_vs_epsilon=slope_gap_eps,
        slope_norm_vs_epsilon=slope_norm_eps,
        points_used=len(kept),
        noise_floor=floor,
        max_trace_ratio=_max_or_none(r.trace_ratio[p] for r in records),
    )


def prepare_family(template: BoundaryShape, epsilons: Sequence[float],
                   config: RunConfig) -> List[DomainGeometry]:
    """Validate and build every domain of a sweep before anything is solved."""
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError(ErrorMessages.DECREASING_EPSILONS)
    domains = []
    for eps in epsilons:
        shape = template.with_epsilon(eps)
        geom = build_domain(shape)
        check_admissible(shape, config.caps.amplitude, config.caps.c4)
        domains.append(geom)
    return domains


def stability_sweep(template: BoundaryShape, epsilons: Sequence[float], ps: Sequence[float],
                    config: Optional[RunConfig] = None, threads: int = 0,
                    strict: bool = False, progress: Optional[bool] = None) -> SweepResult:
    """One SweepRecord per epsilon plus exponent fits per p.

    Points run on a thread pool when `threads` > 1; records keep the order of
    `epsilons` regardless of scheduling.
    """
    config = config or RunConfig()
    ps = tuple(ValidationUtils.validate_p(p) for p in ps)
    sweep_ps = ps if math.inf in ps else ps + (math.inf,)
    domains = prepare_family(template, list(epsilons), config)
    res = config.resolution

    grids = [TensorGrid(geom, res.n_r, res.n_theta) for geom in domains]
    show = sys.stderr.isatty() if progress is None else progress
    logger.info("Sweeping %d shapes over p in %s with %d thread(s)", len(domains), list(ps), max(threads, 1))

    def run(index: int) -> SweepRecord:
        return sweep_point(domains[index], grids[index], sweep_ps, config)

    indices = range(len(domains))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(tqdm(pool.map(run, indices), total=len(domains), desc="sweep", disable=not show))
    else:
        records = [run(i) for i in tqdm(indices, desc="sweep", disable=not show)]

    n = PLANE_DIMENSION
    fits = [fit_exponents(records, p, n, config.margins.sigma, strict) for p in ps]
    chain_spread = {
        'ratio_oscillation': max_min_ratio(r.chain.ratio_oscillation for r in records),
        'ratio_sobolev': max_min_ratio(r.chain.ratio_sobolev for r in records),
        'ratio_weighted': max_min_ratio(r.chain.ratio_weighted for r in records),
        'gradient_ratio': max_min_ratio(r.chain.gradient_ratio for r in records),
    }
    return SweepResult(
        family=template,
        ps=ps,
        records=records,
        fits=fits,
        margins={'sigma': config.margins.sigma, 'beta': config.margins.beta},
        chain_spread=chain_spread,
        max_trace_ratio_exact_inf=_max_or_none(r.trace_ratio_exact_inf for r in records),
    )
