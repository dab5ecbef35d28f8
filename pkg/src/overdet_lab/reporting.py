"""
Deterministic serialization of reports, sweep tables and golden files.
Floats are written with 17 significant digits; keys are sorted.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .analysis import SolutionBundle, bundle_summary
from .config import RunConfig
from .constants import SHAPE_PRESETS
from .geometry import BoundaryShape
from .identities import IdentityReport
from .radial_reference import constants_table
from .solver import ConvergenceRow, SolveReport
from .stability import ExponentTables, SweepResult, stability_sweep
from .utils import format_float, format_p

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RADIAL_GOLDEN_DIMENSIONS = (2, 3, 4)
GOLDEN_PS = (1.0, 1.5, 2.0, 3.0, 10.0, math.inf)
RADIAL_RELATIVE_TOLERANCE = 1e-9
SWEEP_RELATIVE_TOLERANCE = 0.2
MISSING_GOLDEN = "missing"
GOLDEN_FIT_KEYS = ("p", "sigma", "constant", "baseline_constant", "slope_vs_norm",
                   "slope_gap_vs_epsilon", "slope_norm_vs_epsilon", "max_trace_ratio")

SWEEP_COLUMNS_FIXED = [
    "epsilon", "z_x", "z_y", "rho_1", "rho_2", "gap", "centroid_rho_1", "centroid_rho_2",
    "oscillation", "mean_deviation", "gradient_l2", "weighted_hessian_l2",
    "ratio_oscillation", "ratio_sobolev", "ratio_weighted", "gradient_ratio",
    "deviation_l2_c0", "trace_ratio_exact_inf", "identity_lhs", "identity_rel_residual",
    "c_omega", "eta", "min_w", "min_bilaplacian_w",
]


# JSON

def _json_value(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "null"
        if math.isinf(value):
            return json.dumps(format_float(value))
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = sorted(((_json_key(k), v) for k, v in value.items()), key=lambda item: item[0])
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_json_value(v, indent, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        body = ",\n".join(pad + _json_value(v, indent, level + 1) for v in value)
        return "[\n" + body + "\n" + end + "]"
    if hasattr(value, "tolist"):
        return _json_value(value.tolist(), indent, level)
    if hasattr(value, "item"):
        return _json_value(value.item(), indent, level)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _json_key(key: Any) -> str:
    if isinstance(key, float):
        return format_p(key)
    return str(key)


def dumps(data: Any, indent: int = 2) -> str:
    """JSON text with 17-digit floats, sorted keys and a trailing newline."""
    return _json_value(data, indent, 0) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(data))
    logger.debug("Wrote %s", path)
    return path


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


# CSV and plot data

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else format_float(value)
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_dat(path: PathLike, pairs: Iterable[Tuple[float, float]]) -> Path:
    """Two whitespace-separated columns per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for x, y in pairs:
            f.write(f"{format_float(x)} {format_float(y)}\n")
    return path


# Payloads

def identity_payload(reports: Iterable[IdentityReport]) -> List[Dict]:
    return [r.to_dict() for r in reports]


def solve_payload(bundle: SolutionBundle, config: RunConfig) -> Dict:
    return {
        "shape": bundle.geom.shape.to_dict(),
        "resolution": [bundle.grid.n_r, bundle.grid.n_theta],
        "clamped": bundle.u_report.to_dict() if bundle.u_report else None,
        "torsion": bundle.psi_report.to_dict() if bundle.psi_report else None,
        "bundle": bundle_summary(bundle, config.tolerances),
        "area": bundle.geom.area,
        "perimeter": bundle.geom.perimeter,
    }


def sweep_header(ps: Sequence[float]) -> List[str]:
    header = list(SWEEP_COLUMNS_FIXED)
    for p in ps:
        label = format_p(p)
        header += [f"deviation_p{label}", f"gradient_trace_p{label}", f"trace_ratio_p{label}",
                   f"trace_to_deviation_p{label}"]
    return header


def sweep_rows(result: SweepResult) -> List[List[Any]]:
    rows = []
    for r in result.records:
        chain = r.chain
        cert = r.certificate
        row = [r.epsilon, r.z[0], r.z[1], r.rho_1, r.rho_2, r.gap, r.centroid_rho_1, r.centroid_rho_2,
               r.oscillation, r.mean_deviation, r.gradient_l2, r.weighted_hessian_l2,
               chain.ratio_oscillation, chain.ratio_sobolev, chain.ratio_weighted, chain.gradient_ratio,
               r.deviation_l2_c0, r.trace_ratio_exact_inf, r.identity_lhs, r.identity_rel_residual,
               cert.c_omega, cert.eta, cert.min_w, cert.min_bilaplacian_w]
        for p in result.ps:
            row += [r.deviation[p], r.gradient_trace[p], r.trace_ratio[p], r.trace_to_deviation[p]]
        rows.append(row)
    return rows


def fits_payload(result: SweepResult) -> Dict:
    return {
        "family": result.family.to_dict(),
        "epsilons": [r.epsilon for r in result.records],
        "margins": dict(result.margins),
        "fits": [f.to_dict() for f in result.fits],
        "chain_spread": dict(result.chain_spread),
        "chain_max": {
            "ratio_oscillation": _max_defined(r.chain.ratio_oscillation for r in result.records),
            "ratio_sobolev": _max_defined(r.chain.ratio_sobolev for r in result.records),
            "ratio_weighted": _max_defined(r.chain.ratio_weighted for r in result.records),
            "gradient_ratio": _max_defined(r.chain.gradient_ratio for r in result.records),
        },
        "max_trace_ratio_exact_inf": result.max_trace_ratio_exact_inf,
    }


def _max_defined(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return max(values) if values else None


def write_sweep_outputs(result: SweepResult, out_dir: PathLike) -> List[Path]:
    """sweep.csv, fits.json and plotdata/*.dat."""
    out = Path(out_dir)
    written = [
        write_csv(out / "sweep.csv", sweep_header(result.ps), sweep_rows(result)),
        write_json(out / "fits.json", fits_payload(result)),
    ]
    plot = out / "plotdata"
    records = result.records
    written.append(write_dat(plot / "gap_vs_epsilon.dat", [(r.epsilon, r.gap) for r in records]))
    for p in result.ps:
        label = format_p(p)
        written.append(write_dat(plot / f"gap_vs_deviation_p{label}.dat",
                                 [(r.deviation[p], r.gap) for r in records]))
        written.append(write_dat(plot / f"deviation_p{label}_vs_epsilon.dat",
                                 [(r.epsilon, r.deviation[p]) for r in records]))
    return written


def convergence_rows(table: Sequence[ConvergenceRow]) -> List[List[Any]]:
    return [[row.n_r, row.n_theta, row.sup_error] for row in table]


def write_convergence(table: Sequence[ConvergenceRow], path: PathLike) -> Path:
    return write_csv(path, ["n_r", "n_theta", "sup_error"], convergence_rows(table))


def write_field(report: SolveReport, path: PathLike) -> Path:
    """Nodal values of a solution: s, theta, x, y, value."""
    return write_csv(path, ["s", "theta", "x", "y", "value"], report.solution.csv_rows())


# Goldens

@dataclass(frozen=True)
class GoldenMismatch:
    file: str
    path: str
    expected: Any
    actual: Any

    def __str__(self) -> str:
        return f"{self.file}:{self.path}: expected {self.expected!r}, got {self.actual!r}"


def radial_golden() -> Dict:
    return {"rows": constants_table(list(RADIAL_GOLDEN_DIMENSIONS))}


def exponents_golden() -> Dict:
    return {"rows": [row for n in RADIAL_GOLDEN_DIMENSIONS for row in ExponentTables(n, GOLDEN_PS).rows()]}


def sweep_golden(preset: str, ps: Sequence[float], config: RunConfig, threads: int = 0) -> Dict:
    template = BoundaryShape.preset(preset, 1.0)
    result = stability_sweep(template, config.sweep.epsilons, ps, config, threads=threads, progress=False)
    payload = fits_payload(result)
    fits = [{key: fit[key] for key in GOLDEN_FIT_KEYS} for fit in payload["fits"]]
    return {"fits": fits, "chain_max": payload["chain_max"],
            "max_trace_ratio_exact_inf": payload["max_trace_ratio_exact_inf"]}


def golden_plan(config: RunConfig, threads: int = 0) -> Dict[str, Tuple[Callable[[], Dict], float]]:
    """File name -> (producer, relative tolerance)."""
    plan = {
        "radial.json": (radial_golden, RADIAL_RELATIVE_TOLERANCE),
        "exponents.json": (exponents_golden, RADIAL_RELATIVE_TOLERANCE),
    }
    for preset, ps in (("cos2", (1.0, 2.0, math.inf)), ("cos1", (math.inf,))):
        if preset in SHAPE_PRESETS:
            plan[f"sweep_{preset}.json"] = (
                lambda preset=preset, ps=ps: sweep_golden(preset, ps, config, threads),
                SWEEP_RELATIVE_TOLERANCE)
    return plan


def write_goldens(directory: PathLike, config: RunConfig, only: Optional[Sequence[str]] = None,
                  threads: int = 0) -> List[Path]:
    directory = Path(directory)
    written = []
    for name, (produce, _) in golden_plan(config, threads).items():
        if only and name not in only:
            continue
        written.append(write_json(directory / name, produce()))
        logger.info("Froze golden %s", name)
    return written


def compare_payload(expected: Any, actual: Any, rel_tol: float, file: str = "",
                    path: str = "$") -> List[GoldenMismatch]:
    """Recursive comparison; numbers within rel_tol, everything else exact."""
    if isinstance(expected, dict) and isinstance(actual, dict):
        mismatches = []
        for key in sorted(expected):
            if key not in actual:
                mismatches.append(GoldenMismatch(file, f"{path}.{key}", expected[key], None))
                continue
            mismatches += compare_payload(expected[key], actual[key], rel_tol, file, f"{path}.{key}")
        return mismatches
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [GoldenMismatch(file, f"{path}[len]", len(expected), len(actual))]
        mismatches = []
        for i, (e, a) in enumerate(zip(expected, actual)):
            mismatches += compare_payload(e, a, rel_tol, file, f"{path}[{i}]")
        return mismatches
    numeric = (int, float)
    if isinstance(expected, numeric) and isinstance(actual, numeric) \
            and not isinstance(expected, bool) and not isinstance(actual, bool):
        scale = max(abs(expected), abs(actual))
        if abs(expected - actual) <= rel_tol * scale:
            return []
        return [GoldenMismatch(file, path, expected, actual)]
    if expected != actual:
        return [GoldenMismatch(file, path, expected, actual)]
    return []


def check_goldens(directory: PathLike, config: RunConfig, only: Optional[Sequence[str]] = None,
                  threads: int = 0) -> List[GoldenMismatch]:
    """Recompute every planned golden and compare; a planned file missing from `directory` is a mismatch."""
    directory = Path(directory)
    mismatches = []
    for name, (produce, rel_tol) in golden_plan(config, threads).items():
        if only and name not in only:
            continue
        path = directory / name
        if not path.exists():
            logger.error("Golden %s not found in %s", name, directory)
            mismatches.append(GoldenMismatch(name, "$", "frozen file", MISSING_GOLDEN))
            continue
        # Round-trip through the writer so both sides use the same float text
        actual = json.loads(dumps(produce()))
        mismatches += compare_payload(read_json(path), actual, rel_tol, name)
    return mismatches
