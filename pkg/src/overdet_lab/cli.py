"""
Command-line front end: solve, verify, sweep, convergence, radial, goldens.

Exit codes: 0 when every enabled check passed, 1 when a check failed,
2 for usage and configuration errors.
"""

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import click
import coloredlogs
import numpy as np
import typer
from pydantic import ValidationError

from .analysis import (
    auxiliary_q,
    build_bundle,
    bundle_summary,
    deficit_check,
    gap_reconstruction,
    gradient_h_at_z,
    harmonicity_residual,
    mean_value_check,
)
from .check_log import CheckEventLogger
from .config import RunConfig, load_config, read_config_file, resolve_threads
from .constants import (
    ARGMAX_OFFSET_LIMIT,
    CHAIN_SPREAD_LIMIT,
    ETA_FLOOR,
    RADIAL_EXACTNESS,
    RADIAL_TRACE_EXACTNESS,
    Limits,
)
from .discretization import TensorGrid
from .errors import CheckFailed, OverdetLabError
from .geometry import BoundaryShape, build_domain, closeness_proxy, shape_from_mapping
from .identities import identity_invariance, run_identity_suite, translation_moment
from .manufactured import for_shape
from .radial_reference import constants_table, radial_constants, radial_integrals, radial_residuals
from .reporting import (
    check_goldens,
    identity_payload,
    solve_payload,
    write_convergence,
    write_field,
    write_goldens,
    write_json,
    write_sweep_outputs,
)
from .solver import is_spectrally_convergent, manufactured_convergence
from .stability import gap_and_oscillation, positivity_certificate, stability_sweep
from .terminal_output import TerminalOutput
from .utils import parse_number_list, safe_execute

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%H:%M:%S'

app = typer.Typer(name="overdet-lab", add_completion=False, no_args_is_help=True,
                  help="Clamped-plate laboratory for overdetermined boundary problems.")


@dataclass
class CliState:
    config_path: Optional[Path] = None
    c_choice: Optional[str] = None
    seed: Optional[int] = None


def setup_logging(verbose: bool = False) -> None:
    coloredlogs.install(level=logging.DEBUG if verbose else logging.INFO,
                        fmt=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)


@app.callback()
def main_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="JSON or YAML run configuration."),
    c_choice: Optional[str] = typer.Option(None, "--c-choice", help="Boundary constant: mean, c0 or midrange."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for randomized spot checks."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
):
    setup_logging(verbose)
    ctx.obj = CliState(config_path=config, c_choice=c_choice, seed=seed)


# Helpers

@contextmanager
def exit_codes():
    """Map laboratory exceptions onto the documented exit codes."""
    try:
        yield
    except CheckFailed as e:
        logger.error(str(e))
        raise typer.Exit(1)
    except (ValidationError, ValueError, OSError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(2)
    except OverdetLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        raise typer.Exit(1)


def _shape_override(shape: Optional[str], eps: Optional[float]) -> dict:
    section = {}
    if shape is not None:
        path = Path(shape)
        if path.suffix.lower() in ('.json', '.yaml', '.yml'):
            data = read_config_file(path)
            data = data.get('shape', data)
            section = {'preset': None, 'epsilon': data.get('epsilon', 0.0), 'modes': data.get('modes', [])}
        else:
            section = {'preset': shape}
    if eps is not None:
        section['epsilon'] = eps
    return section


def load_run_config(ctx: typer.Context, shape: Optional[str] = None, eps: Optional[float] = None,
                    n_r: Optional[int] = None, n_theta: Optional[int] = None,
                    out: Optional[Path] = None) -> RunConfig:
    state: CliState = ctx.obj or CliState()
    overrides = {}
    shape_section = _shape_override(shape, eps)
    if shape_section:
        overrides['shape'] = shape_section
    resolution = {k: v for k, v in (('n_r', n_r), ('n_theta', n_theta)) if v is not None}
    if resolution:
        overrides['resolution'] = resolution
    if state.c_choice is not None:
        overrides['c_choice'] = state.c_choice
    if state.seed is not None:
        overrides['seed'] = state.seed
    if out is not None:
        overrides['output_dir'] = str(out)
    return load_config(state.config_path, overrides)


def _measure(checks: CheckEventLogger, name: str, func: Callable):
    """Run one measurement; failures are logged as failed checks."""
    try:
        return func()
    except OverdetLabError as e:
        checks.log_error(name, e)
        return None


@safe_execute("Mean-value spot check failed", return_value=None)
def _mean_value(bundle, seed: int) -> Optional[float]:
    return mean_value_check(bundle, seed=seed)


def _finish(checks: CheckEventLogger, output: TerminalOutput, out_dir: Path) -> None:
    write_json(out_dir / "checks.json", checks.get_events_as_dicts())
    output.print_check_summary(checks)
    checks.raise_if_failed()


# Commands

@app.command()
def solve(
    ctx: typer.Context,
    shape: Optional[str] = typer.Option(None, "--shape", help="Preset name or shape file."),
    eps: Optional[float] = typer.Option(None, "--eps", help="Perturbation amplitude."),
    n_r: Optional[int] = typer.Option(None, "--n-r", "--nr", help="Radial resolution."),
    n_theta: Optional[int] = typer.Option(None, "--n-theta", "--ntheta", help="Angular resolution (even)."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """Solve the clamped plate and torsion problems and write the fields."""
    with exit_codes():
        config = load_run_config(ctx, shape, eps, n_r, n_theta, out)
        out_dir = Path(config.output_dir)
        geometry = config.shape.to_shape()
        geom = build_domain(geometry)
        grid = TensorGrid(geom, config.resolution.n_r, config.resolution.n_theta)
        bundle = build_bundle(geom, grid, config.c_choice, config.tolerances)

        checks = CheckEventLogger("solve")
        output = TerminalOutput()
        output.print_header("solve")
        checks.log_flag("clamped_converged", bundle.u_report.converged,
                        interior=bundle.u_report.interior_residual)
        checks.log_flag("torsion_converged", bundle.psi_report.converged,
                        interior=bundle.psi_report.interior_residual)
        if geometry.epsilon == 0:
            radial = radial_constants(2)
            center = np.zeros((1, 2))
            checks.log_bound("u_center", abs(bundle.u.at(center)[0] - radial.u0_center), RADIAL_EXACTNESS)
            checks.log_bound("boundary_laplacian", float(np.max(np.abs(bundle.lap_u_boundary - radial.c0))),
                             RADIAL_TRACE_EXACTNESS)
            checks.log_bound("psi_center", abs(bundle.psi.at(center)[0] - radial.psi0_center), RADIAL_EXACTNESS)

        write_json(out_dir / "solution.json", solve_payload(bundle, config))
        write_field(bundle.u_report, out_dir / "u.csv")
        write_field(bundle.psi_report, out_dir / "psi.csv")
        _finish(checks, output, out_dir)


@app.command()
def verify(
    ctx: typer.Context,
    shape: Optional[str] = typer.Option(None, "--shape", help="Preset name or shape file."),
    eps: Optional[float] = typer.Option(None, "--eps", help="Perturbation amplitude."),
    n_r: Optional[int] = typer.Option(None, "--n-r", "--nr", help="Radial resolution."),
    n_theta: Optional[int] = typer.Option(None, "--n-theta", "--ntheta", help="Angular resolution (even)."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """Evaluate every identity and pointwise relation on one shape."""
    with exit_codes():
        config = load_run_config(ctx, shape, eps, n_r, n_theta, out)
        tol = config.tolerances
        out_dir = Path(config.output_dir)
        geom = build_domain(config.shape.to_shape())
        grid = TensorGrid(geom, config.resolution.n_r, config.resolution.n_theta)
        bundle = build_bundle(geom, grid, config.c_choice, tol)

        checks = CheckEventLogger("verify")
        output = TerminalOutput()
        output.print_header("verify")
        checks.log_flag("clamped_converged", bundle.u_report.converged)
        checks.log_flag("torsion_converged", bundle.psi_report.converged)

        reports = run_identity_suite(bundle, tol)
        for report in reports:
            checks.log_identity(report)
        by_name = {r.name: r for r in reports}
        checks.log_bound("main_identity_lhs_agreement",
                         abs(by_name['main_identity'].lhs - by_name['main_identity_second_anchor'].lhs),
                         tol.lhs_agreement)
        checks.log_bound("harmonic_form_lhs_gap", by_name['harmonic_form'].extra['lhs_gap'], tol.lhs_agreement)
        checks.log_lower_bound("main_identity_lhs_sign", by_name['main_identity'].lhs, -tol.positivity)

        invariance = identity_invariance(bundle, seed=config.seed)
        checks.log_bound("rhs_z_invariance", invariance['rhs_z_spread'], tol.invariance)
        checks.log_bound("rhs_c_invariance", invariance['rhs_c_spread'], tol.invariance)
        moment = translation_moment(bundle)
        checks.log_bound("translation_moment", float(np.hypot(*moment)), tol.zero_flux)

        deficit = deficit_check(bundle, tol.core_distance)
        checks.log_lower_bound("deficit_sign", deficit.min_deficit, -tol.positivity)
        checks.log_bound("deficit_identity", deficit.identity_residual, tol.deficit_identity)
        checks.log_bound("deficit_algebra", deficit.algebra_residual, tol.deficit_identity)
        q = auxiliary_q(bundle, tol.core_distance)
        checks.log_bound("laplace_q", q.laplace_residual, tol.laplace_q)
        checks.log_bound("bilaplace_q", q.bilaplace_residual, tol.bilaplace_q)
        checks.log_bound("harmonicity", harmonicity_residual(bundle, tol.core_distance), tol.harmonicity)
        checks.log_bound("gradient_h_at_z", gradient_h_at_z(bundle), tol.gradient_at_z)
        checks.log_bound("argmax_offset", float(np.hypot(*bundle.z)), ARGMAX_OFFSET_LIMIT)
        gap_rec = gap_reconstruction(bundle)
        checks.log_bound("gap_reconstruction", gap_rec['residual'], tol.gap_reconstruction)
        checks.log_bound("mean_value", _mean_value(bundle, config.seed), tol.mean_value)

        gap = _measure(checks, "gap_and_oscillation", lambda: gap_and_oscillation(bundle, tol.inequality))
        if gap is not None:
            checks.log_flag("gap_and_oscillation", True, lhs=gap.lhs, rhs=gap.rhs)
        certificate = _measure(checks, "positivity_certificate",
                               lambda: positivity_certificate(bundle, tol.certificate))
        if certificate is not None:
            checks.log_lower_bound("min_u", certificate.min_u, -tol.positivity)
            checks.log_lower_bound("eta", certificate.eta, ETA_FLOOR)

        summary = bundle_summary(bundle, tol)
        summary.update({
            'closeness_proxy': closeness_proxy(geom),
            'invariance': invariance,
            'translation_moment': moment,
            'gap_reconstruction': gap_rec,
            'gap': gap.to_dict() if gap is not None else None,
            'certificate': certificate.to_dict() if certificate is not None else None,
        })
        write_json(out_dir / "identities.json", identity_payload(reports))
        write_json(out_dir / "summary.json", summary)
        output.print_identity_table(reports)
        _finish(checks, output, out_dir)


@app.command()
def sweep(
    ctx: typer.Context,
    family: Optional[str] = typer.Option(None, "--family", help="Preset name or shape file."),
    eps: Optional[str] = typer.Option(None, "--eps", help="Comma-separated decreasing amplitudes."),
    p: Optional[str] = typer.Option(None, "--p", help="Comma-separated exponents; 'inf' allowed."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
    strict: bool = typer.Option(False, "--strict", help="Fail when too few points clear the noise floor."),
):
    """Run an epsilon sweep and fit the stability exponents."""
    with exit_codes():
        config = load_run_config(ctx, out=out)
        family = family or config.sweep.family
        path = Path(family)
        if path.suffix.lower() in ('.json', '.yaml', '.yml'):
            data = read_config_file(path)
            template = shape_from_mapping(data.get('shape', data))
        else:
            template = BoundaryShape.preset(family, 1.0)
        epsilons = parse_number_list(eps) if eps else list(config.sweep.epsilons)
        ps = parse_number_list(p) if p else list(config.sweep.ps)

        result = stability_sweep(template, epsilons, ps, config, threads=resolve_threads(), strict=strict)
        out_dir = Path(config.output_dir)
        write_sweep_outputs(result, out_dir)

        checks = CheckEventLogger("sweep")
        output = TerminalOutput()
        output.print_header(f"sweep {family}")
        output.print_sweep(result)
        for fit in result.fits:
            checks.log_flag(f"stability_constant_p{fit.p:g}", fit.constant is not None and math.isfinite(fit.constant),
                            constant=fit.constant)
        for name, spread in result.chain_spread.items():
            checks.log_bound(f"chain_spread_{name}", spread, CHAIN_SPREAD_LIMIT)
        _finish(checks, output, out_dir)


@app.command()
def convergence(
    ctx: typer.Context,
    shape: Optional[str] = typer.Option(None, "--shape", help="Preset name or shape file."),
    eps: Optional[float] = typer.Option(None, "--eps"),
    problem: Optional[str] = typer.Option(None, "--problem",
                                          help="radial_quartic, quartic_times_x or level_square (default)."),
    n_r: int = typer.Option(8, "--n-r", help="Coarsest radial resolution."),
    n_theta: int = typer.Option(16, "--n-theta", help="Coarsest angular resolution."),
    levels: int = typer.Option(3, "--levels", min=2, help="Number of resolutions, each doubling the last."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """Manufactured-solution convergence table of the clamped solver."""
    with exit_codes():
        config = load_run_config(ctx, shape, eps, out=out)
        geometry = config.shape.to_shape()
        geom = build_domain(geometry)
        manufactured = for_shape(geometry, problem)
        resolutions = []
        for level in range(levels):
            pair = (n_r * 2 ** level, n_theta * 2 ** level)
            if pair[0] > Limits.MAX_N_R or pair[1] > Limits.MAX_N_THETA:
                break
            resolutions.append(pair)
        table = manufactured_convergence(geom, manufactured, resolutions)

        out_dir = Path(config.output_dir)
        write_convergence(table, out_dir / "convergence.csv")
        checks = CheckEventLogger("convergence")
        output = TerminalOutput()
        output.print_header(f"convergence {manufactured.name}")
        output.print_rows([row.to_dict() for row in table], ["n_r", "n_theta", "sup_error"])
        checks.log_flag("spectral_convergence", is_spectrally_convergent(table),
                        errors=[row.sup_error for row in table])
        _finish(checks, output, out_dir)


@app.command()
def radial(
    ctx: typer.Context,
    n: str = typer.Option("2,3", "--n", help="Comma-separated dimensions."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
):
    """Constants of the closed-form ball solutions."""
    with exit_codes():
        config = load_run_config(ctx, out=out)
        dims = [int(value) for value in parse_number_list(n)]
        rows = constants_table(dims)
        out_dir = Path(config.output_dir)
        write_json(out_dir / "radial.json", {"rows": rows})

        checks = CheckEventLogger("radial")
        output = TerminalOutput()
        output.print_header("radial")
        output.print_rows(rows, ["n", "c0", "R2", "u0_center", "v0_center", "psi0_center", "integral_u0"])
        for dim in dims:
            residuals = radial_residuals(dim)
            checks.log_bound(f"radial_equations_n{dim}", max(residuals.values()), 1e-12)
            integrals = radial_integrals(dim)
            scale = max(abs(integrals.pucci_serrin_lhs), abs(integrals.pucci_serrin_rhs))
            checks.log_bound(f"radial_pucci_serrin_n{dim}",
                             abs(integrals.pucci_serrin_lhs - integrals.pucci_serrin_rhs) / scale, 1e-13)
        _finish(checks, output, out_dir)


@app.command()
def goldens(
    ctx: typer.Context,
    write: bool = typer.Option(False, "--write", help="Freeze current outputs."),
    check: bool = typer.Option(False, "--check", help="Compare current outputs with the frozen ones."),
    directory: Path = typer.Option(Path("goldens"), "--dir", help="Golden file directory."),
    only: Optional[str] = typer.Option(None, "--only", help="Comma-separated golden file names."),
):
    """Write or check the golden output files."""
    with exit_codes():
        if write == check:
            raise typer.BadParameter("pass exactly one of --write or --check")
        config = load_run_config(ctx)
        names = [name.strip() for name in only.split(",")] if only else None
        threads = resolve_threads()
        if write:
            for path in write_goldens(directory, config, names, threads):
                typer.echo(f"wrote {path}")
            return
        mismatches = check_goldens(directory, config, names, threads)
        for mismatch in mismatches:
            typer.echo(str(mismatch))
        if mismatches:
            raise CheckFailed(f"{len(mismatches)} golden field(s) differ",
                              sorted({m.file for m in mismatches}))
        typer.echo("goldens match")


def run_command(argv: Optional[List[str]] = None) -> int:
    """Run the CLI on `argv` and return its exit code instead of exiting."""
    try:
        result = app(args=argv, prog_name="overdet-lab", standalone_mode=False)
    except click.exceptions.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    app(prog_name="overdet-lab")
