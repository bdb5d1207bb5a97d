#!/usr/bin/env python3
"""
Condensation Laboratory CLI

Main entry point for the command-line interface.
"""

import click
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from click.core import ParameterSource

# Add the src directory to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.core.config import ConfigManager, DEFAULT_CONFIG_PATH, WORKERS_ENV
from src.core.errors import CapExceededError, ParameterError
from src.core.model import format_coloring, load_hypergraph, save_hypergraph, write_hypergraph
from src.utils.helpers import parse_float_list, parse_int_list, write_csv, write_json
from src.utils.logging import get_logger, setup_logging
from src.cli.commands import (
    AnalyticCommands,
    CommandOutput,
    ExactCommands,
    ModelCommands,
    ScanCommands,
    WhiteningCommands,
    load_instance,
)

EXIT_FAILURE = 1
EXIT_PARAMETER = 2
EXIT_CAP = 3

LN2 = math.log(2.0)

logger = get_logger(__name__)


def _fail(action: str, error: Exception) -> None:
    """Report an error on stderr and exit with the matching code."""
    click.echo(f"Error {action}: {error}", err=True)
    if isinstance(error, CapExceededError):
        sys.exit(EXIT_CAP)
    if isinstance(error, ParameterError):
        sys.exit(EXIT_PARAMETER)
    logger.exception(f"Unexpected failure while {action}")
    sys.exit(EXIT_FAILURE)


def _resolve(ctx, command: str, defaults: Dict[str, Any], **flags) -> Dict[str, Any]:
    """
    Resolve flags against the configuration file and built-in defaults.

    Flags win over top-level config keys of the same name, which win over
    `defaults`.
    """
    resolved = ctx.obj['config'].merged(flags)
    for key, value in defaults.items():
        if resolved.get(key) is None:
            resolved[key] = value
    if resolved.get('format') not in ('csv', 'json'):
        raise ParameterError(f"--format must be csv or json, got {resolved.get('format')!r}")
    resolved['command'] = command
    return resolved


def _header(resolved: Dict[str, Any]) -> Dict[str, Any]:
    """Configuration echoed into data files; output paths are left out."""
    return {key: value for key, value in resolved.items()
            if key not in ('out', 'format', 'coloring_out') and value is not None}


def _emit(output: CommandOutput, resolved: Dict[str, Any]) -> None:
    """Write a command result to --out (or stdout) in the resolved format."""
    path = resolved.get('out')
    stream = open(path, 'w', encoding='utf-8', newline='') if path else sys.stdout
    try:
        if resolved['format'] == 'json':
            write_json(stream, output.payload, _header(resolved))
        else:
            write_csv(stream, output.columns, output.rows, _header(resolved))
    finally:
        if path:
            stream.close()
    if path:
        logger.info(f"Wrote {resolved['command']} output to {path}")


def _float_list(text: Optional[str], option: str):
    if text is None:
        return None
    try:
        return parse_float_list(text)
    except ValueError as e:
        raise ParameterError(f"{option}: {e}") from e


def _int_list(text: Optional[str], option: str):
    if text is None:
        return None
    try:
        return parse_int_list(text)
    except ValueError as e:
        raise ParameterError(f"{option}: {e}") from e


def _scan_defaults(ctx) -> Dict[str, Any]:
    config = ctx.obj['config']
    return {
        'seed': config.get('seed', 20240601),
        'workers': config.get('workers', 1),
        'trials': config.get('experiments.trials', 100),
        'time_budget': config.get('experiments.time_budget'),
        'format': 'csv',
    }


def common_options(default_format: str):
    """--seed, --out and --format, shared by every subcommand."""
    def decorator(func):
        func = click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None,
                            help=f'Output format (default {default_format})')(func)
        func = click.option('--out', '-o', type=click.Path(dir_okay=False), default=None,
                            help='Output file (default stdout)')(func)
        func = click.option('--seed', type=int, default=None,
                            help='Master seed (default from configuration)')(func)
        return func
    return decorator


def instance_options(func):
    """--in and --coloring for commands that read a hypergraph."""
    func = click.option('--coloring', 'coloring_path', type=click.Path(dir_okay=False), default=None,
                        help='Reference coloring file (default: canonical equitable coloring)')(func)
    func = click.option('--in', 'in_path', type=click.Path(dir_okay=False), required=True,
                        help='Hypergraph file')(func)
    return func


def workers_option(func):
    return click.option('--workers', type=int, default=None,
                        help=f'Worker threads (default ${WORKERS_ENV} or configuration)')(func)


@click.group()
@click.option('--config', '-c',
              default=DEFAULT_CONFIG_PATH,
              help='Configuration file path (YAML or JSON)')
@click.option('--verbose', '-v',
              is_flag=True,
              help='Enable verbose logging')
@click.option('--log-file',
              default=None,
              help='Also write log records to this file')
@click.pass_context
def cli(ctx, config, verbose, log_file):
    """
    Condensation Laboratory

    Rate functions, random models, exact counts and scans for random
    k-uniform hypergraph 2-coloring.
    """
    # Ensure context object exists
    ctx.ensure_object(dict)

    # Load configuration; a path given explicitly must exist
    explicit = ctx.get_parameter_source('config') != ParameterSource.DEFAULT
    try:
        config_manager = ConfigManager(config, required=explicit)
        ctx.obj['config'] = config_manager
    except ParameterError as e:
        click.echo(f"Error loading configuration: {e}", err=True)
        sys.exit(EXIT_PARAMETER)

    # Setup logging
    log_level = 'DEBUG' if verbose else config_manager.get('logging.level', 'INFO')
    setup_logging(log_level, log_file or config_manager.get('logging.file'))

    # Initialize command objects
    ctx.obj['analytic'] = AnalyticCommands(config_manager)
    ctx.obj['model'] = ModelCommands(config_manager)
    ctx.obj['exact'] = ExactCommands(config_manager)
    ctx.obj['whitening'] = WhiteningCommands(config_manager)
    ctx.obj['scan'] = ScanCommands(config_manager)


@cli.command()
@click.option('--k', type=int, default=None, help='Edge size k >= 3')
@common_options('json')
@click.pass_context
def thresholds(ctx, k, seed, out, fmt):
    """
    Density thresholds r_second < r_cond < r_first (and r_crit) for one k.
    """
    try:
        resolved = _resolve(ctx, 'thresholds', {'seed': ctx.obj['config'].get('seed'), 'format': 'json'},
                            k=k, seed=seed, out=out, format=fmt)
        if resolved['k'] is None:
            raise ParameterError("--k is required")
        _emit(ctx.obj['analytic'].thresholds(int(resolved['k'])), resolved)
    except Exception as e:
        _fail("computing thresholds", e)


@cli.command('rate-curve')
@click.option('--k', type=int, default=None, help='Edge size k >= 3')
@click.option('--r', type=float, default=None, help='Density m/n')
@click.option('--points', type=int, default=None, help='Number of rows (default 1000)')
@common_options('csv')
@click.pass_context
def rate_curve(ctx, k, r, points, seed, out, fmt):
    """
    Tabulate psi_{k,r}(x) on (0, 1) as x,psi rows.
    """
    try:
        resolved = _resolve(ctx, 'rate-curve',
                            {'seed': ctx.obj['config'].get('seed'), 'points': 1000, 'format': 'csv'},
                            k=k, r=r, points=points, seed=seed, out=out, format=fmt)
        if resolved['k'] is None or resolved['r'] is None:
            raise ParameterError("--k and --r are required")
        output = ctx.obj['analytic'].rate_curve(int(resolved['k']), float(resolved['r']),
                                                int(resolved['points']))
        _emit(output, resolved)
    except Exception as e:
        _fail("computing the rate curve", e)


@cli.command('pair-curve')
@click.option('--k', type=int, default=None, help='Edge size k >= 3')
@click.option('--r', type=float, default=None, help='Density m/n')
@click.option('--beta', type=float, default=None, help='Criticality excess (default 0)')
@click.option('--points', type=int, default=None, help='Number of rows (default 199)')
@common_options('csv')
@click.pass_context
def pair_curve(ctx, k, r, beta, points, seed, out, fmt):
    """
    Tabulate the pair rate g(alpha) of the critical-planted model.
    """
    try:
        resolved = _resolve(ctx, 'pair-curve',
                            {'seed': ctx.obj['config'].get('seed'), 'beta': 0.0, 'points': 199,
                             'format': 'csv'},
                            k=k, r=r, beta=beta, points=points, seed=seed, out=out, format=fmt)
        if resolved['k'] is None or resolved['r'] is None:
            raise ParameterError("--k and --r are required")
        output = ctx.obj['analytic'].pair_curve(int(resolved['k']), float(resolved['r']),
                                                float(resolved['beta']), int(resolved['points']))
        _emit(output, resolved)
    except Exception as e:
        _fail("computing the pair curve", e)


@cli.command()
@click.option('--model', type=click.Choice(['uniform', 'planted', 'planted_critical', 'binomial_planted']),
              default=None, help='Random model (default uniform)')
@click.option('--n', type=int, default=None, help='Number of vertices')
@click.option('--k', type=int, default=None, help='Edge size')
@click.option('--m', type=int, default=None, help='Number of edges (expected number for binomial_planted)')
@click.option('--beta', type=float, default=None, help='Criticality excess for planted_critical')
@click.option('--m2', type=int, default=None, help='Non-critical edges for planted_critical')
@click.option('--coloring-out', type=click.Path(dir_okay=False), default=None,
              help='Write the planted coloring to this file')
@common_options('csv')
@click.pass_context
def sample(ctx, model, n, k, m, beta, m2, coloring_out, seed, out, fmt):
    """
    Draw one random hypergraph and write it in the hypergraph file format.

    The hypergraph goes to --out (or stdout); --format json wraps the edge
    list and the planted coloring in a JSON object instead.
    """
    try:
        resolved = _resolve(ctx, 'sample',
                            {'seed': ctx.obj['config'].get('seed'), 'model': 'uniform', 'beta': 0.0,
                             'format': 'csv'},
                            model=model, n=n, k=k, m=m, beta=beta, m2=m2, coloring_out=coloring_out,
                            seed=seed, out=out, format=fmt)
        for key in ('n', 'k', 'm'):
            if resolved[key] is None:
                raise ParameterError(f"--{key} is required")
        H, sigma = ctx.obj['model'].sample(resolved['model'], int(resolved['n']), int(resolved['k']),
                                           int(resolved['m']), int(resolved['seed']),
                                           beta=float(resolved['beta']), m2=resolved['m2'])
        if resolved['coloring_out']:
            if sigma is None:
                raise ParameterError("the uniform model has no planted coloring")
            with open(resolved['coloring_out'], 'w', encoding='utf-8') as file:
                file.write(format_coloring(sigma) + "\n")

        if resolved['format'] == 'json':
            payload = {
                'n': H.n,
                'k': H.k,
                'm': H.m,
                'edges': [list(edge) for edge in H.edge_list()],
                'coloring': format_coloring(sigma) if sigma is not None else None,
            }
            _emit(CommandOutput((), [], payload), resolved)
        elif resolved['out']:
            save_hypergraph(H, resolved['out'])
        else:
            write_hypergraph(H, sys.stdout)
        logger.info(f"Sampled {resolved['model']} hypergraph with {H.m} edges")
    except Exception as e:
        _fail("sampling", e)


@cli.command()
@click.option('--in', 'in_path', type=click.Path(dir_okay=False), required=True, help='Hypergraph file')
@click.option('--b', 'b_list', default=None, help='Inverse temperatures, e.g. 0,1,5')
@workers_option
@common_options('json')
@click.pass_context
def count(ctx, in_path, b_list, workers, seed, out, fmt):
    """
    Exact solution census: Z, Z_e, the violation histogram and Z_b.
    """
    try:
        resolved = _resolve(ctx, 'count',
                            {'seed': ctx.obj['config'].get('seed'), 'workers': ctx.obj['config'].get('workers', 1),
                             'format': 'json'},
                            in_path=in_path, b=b_list, workers=workers, seed=seed, out=out, format=fmt)
        bs = _float_list(resolved['b'], '--b') or []
        H = load_hypergraph(in_path)
        _emit(ctx.obj['exact'].count(H, bs, workers=int(resolved['workers'])), resolved)
    except Exception as e:
        _fail("counting colorings", e)


@cli.command()
@instance_options
@click.option('--alpha', type=float, default=None, help='Cluster radius (default 0.1)')
@click.option('--beta', type=float, default=None, help='Outer window edge (default 0.4)')
@click.option('--gamma', type=float, default=None, help='Exponential share threshold (default 0.01)')
@click.option('--equitable-only', is_flag=True, help='Profile equitable solutions only')
@common_options('csv')
@click.pass_context
def profile(ctx, in_path, coloring_path, alpha, beta, gamma, equitable_only, seed, out, fmt):
    """
    Distance profile Z(d) around a coloring and the cluster verdict.
    """
    try:
        resolved = _resolve(ctx, 'profile',
                            {'seed': ctx.obj['config'].get('seed'), 'alpha': 0.1, 'beta': 0.4,
                             'gamma': 0.01, 'format': 'csv'},
                            in_path=in_path, coloring=coloring_path, alpha=alpha, beta=beta, gamma=gamma,
                            equitable_only=equitable_only, seed=seed, out=out, format=fmt)
        H, sigma = load_instance(in_path, coloring_path)
        output = ctx.obj['exact'].profile(H, sigma, float(resolved['alpha']), float(resolved['beta']),
                                          float(resolved['gamma']), equitable_only=equitable_only)
        _emit(output, resolved)
    except Exception as e:
        _fail("computing the distance profile", e)


@cli.command()
@instance_options
@click.option('--table', type=click.Choice(['trace', 'census']), default='trace',
              help='CSV table: round,vertex trace or statistic,observed,predicted census')
@click.option('--audit-sizes', default=None, help='Set sizes for the expansion diagnostic, e.g. 4,8')
@click.option('--audit-samples', type=int, default=0, help='Random sets per audited size')
@common_options('csv')
@click.pass_context
def whiten(ctx, in_path, coloring_path, table, audit_sizes, audit_samples, seed, out, fmt):
    """
    Whitening set U, its round trace and the U/S0/S1 census.
    """
    try:
        resolved = _resolve(ctx, 'whiten', {'seed': ctx.obj['config'].get('seed'), 'format': 'csv'},
                            in_path=in_path, coloring=coloring_path, table=table, audit_sizes=audit_sizes,
                            audit_samples=audit_samples, seed=seed, out=out, format=fmt)
        sizes = _int_list(audit_sizes, '--audit-sizes') or []
        H, sigma = load_instance(in_path, coloring_path)
        output = ctx.obj['whitening'].whiten(H, sigma, table=table, audit_sizes=sizes,
                                             audit_samples=audit_samples, seed=int(resolved['seed']))
        _emit(output, resolved)
    except Exception as e:
        _fail("whitening", e)


@cli.command()
@instance_options
@click.option('--l', 'core_l', type=int, default=None, help='Core parameter, even (default from configuration)')
@click.option('--attach', 'with_attach', is_flag=True, help='Also compute the attachment closure')
@click.option('--theta', type=int, default=None, help='Check rigidity of the result with this threshold')
@common_options('csv')
@click.pass_context
def core(ctx, in_path, coloring_path, core_l, with_attach, theta, seed, out, fmt):
    """
    Core of a colored hypergraph, optionally attached and rigidity-checked.
    """
    try:
        resolved = _resolve(ctx, 'core',
                            {'seed': ctx.obj['config'].get('seed'),
                             'core_l': ctx.obj['config'].get('whitening.core_l', 10), 'format': 'csv'},
                            in_path=in_path, coloring=coloring_path, core_l=core_l, attach=with_attach,
                            theta=theta, seed=seed, out=out, format=fmt)
        H, sigma = load_instance(in_path, coloring_path)
        output = ctx.obj['whitening'].core(H, sigma, int(resolved['core_l']), with_attach=with_attach,
                                           theta=theta)
        _emit(output, resolved)
    except Exception as e:
        _fail("computing the core", e)


@cli.command()
@instance_options
@click.option('--l', 'core_l', type=int, default=None, help='Core parameter, even (default from configuration)')
@click.option('--mode', type=click.Choice(['projected', 'conditioned']), default='projected',
              help='Residual constraints: projected edges or conditioned on the core colors')
@click.option('--attach', 'with_attach', is_flag=True, help='Fix the attachment closure instead of the core')
@common_options('json')
@click.pass_context
def census(ctx, in_path, coloring_path, core_l, mode, with_attach, seed, out, fmt):
    """
    Residual component census outside the core and cluster-entropy bounds.
    """
    try:
        resolved = _resolve(ctx, 'census',
                            {'seed': ctx.obj['config'].get('seed'),
                             'core_l': ctx.obj['config'].get('whitening.core_l', 10), 'format': 'json'},
                            in_path=in_path, coloring=coloring_path, core_l=core_l, mode=mode,
                            attach=with_attach, seed=seed, out=out, format=fmt)
        H, sigma = load_instance(in_path, coloring_path)
        output = ctx.obj['whitening'].census(H, sigma, int(resolved['core_l']), mode=mode,
                                             with_attach=with_attach)
        _emit(output, resolved)
    except Exception as e:
        _fail("computing the residual census", e)


@cli.command('scan-condensation')
@click.option('--k', type=int, default=None, help='Edge size (default 3)')
@click.option('--n', type=int, default=None, help='Number of vertices (default 24)')
@click.option('--r', 'r_grid', default=None, help='Density grid, e.g. 0.5,1,1.5 or 0.5:2.5:20')
@click.option('--trials', type=int, default=None, help='Trials per grid point')
@click.option('--gate-sigmas', type=float, default=None, help='Jensen gate width in standard errors')
@click.option('--time-budget', type=float, default=None, help='Per-trial time budget in seconds')
@click.option('--records', is_flag=True, help='Emit per-trial records instead of the curve')
@workers_option
@common_options('csv')
@click.pass_context
def scan_condensation(ctx, k, n, r_grid, trials, gate_sigmas, time_budget, records, workers, seed, out, fmt):
    """
    Quenched (1/n) ln(1+Z) against the Jensen bound over an r grid.
    """
    try:
        defaults = _scan_defaults(ctx)
        defaults.update({'k': 3, 'n': 24, 'r': '0.5:2.5:20',
                         'gate_sigmas': ctx.obj['config'].get('experiments.gate_sigmas', 3.0)})
        resolved = _resolve(ctx, 'scan-condensation', defaults,
                            k=k, n=n, r=r_grid, trials=trials, gate_sigmas=gate_sigmas,
                            time_budget=time_budget, records=records, workers=workers,
                            seed=seed, out=out, format=fmt)
        output = ctx.obj['scan'].condensation(
            int(resolved['k']), int(resolved['n']), _float_list(str(resolved['r']), '--r'),
            int(resolved['trials']), int(resolved['seed']), int(resolved['workers']),
            float(resolved['gate_sigmas']), resolved['time_budget'], records=records)
        _emit(output, resolved)
    except Exception as e:
        _fail("running the condensation scan", e)


@cli.command('scan-cluster')
@click.option('--k', type=int, default=None, help='Edge size (default 10)')
@click.option('--n', type=int, default=None, help='Number of vertices, even (default 10000)')
@click.option('--lambda', 'lambda_grid', default=None, help='Support-degree grid, e.g. 5:9:9')
@click.option('--beta', type=float, default=None, help='Criticality excess (default 0)')
@click.option('--m2', type=int, default=None, help='Non-critical edges (default rn - m1)')
@click.option('--trials', type=int, default=None, help='Trials per grid point')
@click.option('--time-budget', type=float, default=None, help='Per-trial time budget in seconds')
@click.option('--records', is_flag=True, help='Emit per-trial records instead of the curve')
@workers_option
@common_options('csv')
@click.pass_context
def scan_cluster(ctx, k, n, lambda_grid, beta, m2, trials, time_budget, records, workers, seed, out, fmt):
    """
    Local cluster entropy bounds against the first-moment rate over a lambda grid.
    """
    try:
        defaults = _scan_defaults(ctx)
        defaults.update({'k': 10, 'n': 10000, 'lambda': '5:9:9', 'beta': 0.0})
        resolved = _resolve(ctx, 'scan-cluster', defaults,
                            k=k, n=n, **{'lambda': lambda_grid}, beta=beta, m2=m2, trials=trials,
                            time_budget=time_budget, records=records, workers=workers,
                            seed=seed, out=out, format=fmt)
        output = ctx.obj['scan'].cluster(
            int(resolved['k']), int(resolved['n']), _float_list(str(resolved['lambda']), '--lambda'),
            int(resolved['trials']), int(resolved['seed']), int(resolved['workers']),
            float(resolved['beta']), resolved['m2'], resolved['time_budget'], records=records)
        _emit(output, resolved)
    except Exception as e:
        _fail("running the cluster scan", e)


@cli.command('degree-law')
@click.option('--k', type=int, default=None, help='Edge size (default 10)')
@click.option('--n', type=int, default=None, help='Number of vertices, even (default 100000)')
@click.option('--lambda', 'lambda_grid', default=None, help='Support-degree grid (default 10 ln 2)')
@click.option('--trials', type=int, default=None, help='Trials per grid point')
@click.option('--whitening', 'with_whitening', is_flag=True, help='Add the whitening census rows')
@click.option('--time-budget', type=float, default=None, help='Per-trial time budget in seconds')
@click.option('--records', is_flag=True, help='Emit per-trial records instead of the curve')
@workers_option
@common_options('csv')
@click.pass_context
def degree_law(ctx, k, n, lambda_grid, trials, with_whitening, time_budget, records, workers, seed, out, fmt):
    """
    Support-degree histogram of the planted-critical model against Poisson(lambda).
    """
    try:
        defaults = _scan_defaults(ctx)
        defaults.update({'k': 10, 'n': 100000, 'lambda': repr(10 * LN2), 'trials': 10})
        resolved = _resolve(ctx, 'degree-law', defaults,
                            k=k, n=n, **{'lambda': lambda_grid}, trials=trials, whitening=with_whitening,
                            time_budget=time_budget, records=records, workers=workers,
                            seed=seed, out=out, format=fmt)
        output = ctx.obj['scan'].degree_law(
            int(resolved['k']), int(resolved['n']), _float_list(str(resolved['lambda']), '--lambda'),
            int(resolved['trials']), int(resolved['seed']), int(resolved['workers']),
            resolved['time_budget'], with_whitening=with_whitening, records=records)
        _emit(output, resolved)
    except Exception as e:
        _fail("running the degree-law scan", e)


if __name__ == '__main__':
    cli()
