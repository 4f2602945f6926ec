"""Command-line surface for the correlation toolkit.

Every command writes CSV data files whose bytes depend only on the
resolved configuration and seed — never on thread count or timing — plus
a JSON manifest recording the resolved configuration and SHA-256
digests of each output. Figures are rendered next to the data unless
``--no-plot`` is given.

Exit codes: 0 success, 1 usage error, 2 numerical or convergence
failure, 3 I/O failure.

A JSON configuration file (``--config``, given before the subcommand)
supplies defaults per command, overridden by explicit flags::

    {"sweep": {"kernel": "em", "seed": 7}, "walk": {"walkers": 200000}}

The output directory resolves as ``--out-dir`` flag, else the
``FIELDCORR_OUTPUT_DIR`` environment variable, else the configured or
current directory.
"""

import json
import math
from pathlib import Path

import click
import numpy as np

from ._version import __version__
from . import calibration, kernels, reporting, sampler, smearing, walker
from .errors import (FieldcorrError, InfeasibleCalibrationError,
                     QuadratureConvergenceError)

_KERNEL_NAMES = ["scalar", "em", "squeezed"]
_MODE_NAMES = [m.value for m in sampler.SamplerMode]
_METHOD_NAMES = [m.value for m in calibration.CalibrationMethod]

_OUT_DIR_OPTION = dict(
    type=click.Path(file_okay=False, path_type=Path),
    default=None, envvar="FIELDCORR_OUTPUT_DIR",
    help="Directory for output files (default: FIELDCORR_OUTPUT_DIR or cwd).",
)


def _parse_range(spec, what):
    """A single float or a start:stop:count range, as an array."""
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 1:
                raise ValueError
            return np.linspace(start, stop, count)
        return np.array([float(spec)])
    except ValueError:
        raise click.BadParameter(
            f"{what} must be a number or start:stop:count, got {spec!r}"
        ) from None


def _parse_float_list(spec, what):
    try:
        values = [float(v) for v in spec.split(",") if v.strip() != ""]
    except ValueError:
        raise click.BadParameter(
            f"{what} must be a comma-separated list of numbers, got {spec!r}"
        ) from None
    if not values:
        raise click.BadParameter(f"{what} list is empty")
    return values


def _parse_window(spec):
    try:
        lo, hi = spec.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise click.BadParameter(
            f"fit window must be lo:hi, got {spec!r}"
        ) from None


def _resolve_out_dir(out_dir):
    out_dir = Path(out_dir) if out_dir is not None else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _build_kernel(name, k):
    try:
        return kernels.kernel_by_name(name, k=k)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _normalize_config_section(mapping, command, path, where):
    """Validate one config section and translate option names to params.

    Keys may be written as the command-line option name (``out-dir``)
    or the underlying parameter name (``out_dir``); unknown keys are
    rejected so typos cannot silently fall back to defaults.
    """
    if not isinstance(mapping, dict):
        raise click.UsageError(
            f"{path}: section {where or 'top level'!r} must be a JSON object"
        )
    sub_names = (command.commands if isinstance(command, click.Group)
                 else {})
    by_alias = {}
    for p in command.params:
        by_alias[p.name] = p.name
        for opt in getattr(p, "opts", ()):
            if opt.startswith("--"):
                by_alias[opt[2:].replace("-", "_")] = p.name
    out = {}
    for key, value in mapping.items():
        if key in sub_names:
            out[key] = _normalize_config_section(
                value, sub_names[key], path, f"{where} {key}".strip())
        elif key.replace("-", "_") in by_alias:
            out[by_alias[key.replace("-", "_")]] = value
        else:
            raise click.UsageError(
                f"{path}: unknown configuration key {key!r} in "
                f"section {where or 'top level'!r}"
            )
    return out


def _load_config(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise click.UsageError(f"{path}: configuration must be a JSON object")
    return _normalize_config_section(data, cli, path, "")


@click.group()
@click.version_option(__version__, prog_name="fieldcorr")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="JSON file with per-command default options.")
@click.pass_context
def cli(ctx, config):
    """Correlated Gaussian field-measurement simulator."""
    if config is not None:
        ctx.default_map = _load_config(config)


@cli.group()
def kernel():
    """Operations on the analytic correlation kernels."""


@kernel.command("eval")
@click.option("--kernel", "kernel_name", type=click.Choice(_KERNEL_NAMES),
              required=True, help="Which correlation kernel to evaluate.")
@click.option("--k", type=float, default=None,
              help="Mode wavenumber (squeezed kernel only).")
@click.option("--t0", "t0_spec", required=True,
              help="Time separation: a number or start:stop:count.")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Write CSV here instead of stdout.")
def kernel_eval(kernel_name, k, t0_spec, output):
    """Evaluate a kernel on a grid and emit (t0, value) rows."""
    kern = _build_kernel(kernel_name, k)
    grid = _parse_range(t0_spec, "--t0")
    rows = [(float(t0), float(kern.eval(float(t0)))) for t0 in grid]
    if output is None:
        click.echo("t0,value")
        for row in rows:
            click.echo(",".join(reporting.format_value(v) for v in row))
    else:
        reporting.write_csv(output, ("t0", "value"), rows)
        click.echo(f"wrote {output}")


def _sweep_slug(kern, method, mode):
    parts = ["sweep", kern.label]
    if kern.wavenumber_k is not None:
        parts.append(f"k{kern.wavenumber_k:g}")
    parts.extend([method, mode.value])
    return "_".join(parts)


@cli.command()
@click.option("--kernel", "kernel_name", type=click.Choice(_KERNEL_NAMES),
              required=True, help="Target correlation kernel.")
@click.option("--k", type=float, default=None,
              help="Mode wavenumber (squeezed kernel only).")
@click.option("--method", type=click.Choice(_METHOD_NAMES), default="exact",
              show_default=True, help="Calibration method.")
@click.option("--mode", "mode_name", type=click.Choice(_MODE_NAMES),
              default="chain-raw", show_default=True, help="Sampler mode.")
@click.option("--table", "table_path",
              type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="Calibration table CSV (required for --method table; "
                   "must have been measured with the same mode and sigma2).")
@click.option("--points", type=int, default=801, show_default=True,
              help="Number of grid separations.")
@click.option("--steps", type=int, default=20_000, show_default=True,
              help="Steps per grid point.")
@click.option("--t0-max", type=float, default=8.0, show_default=True,
              help="Largest time separation.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sigma2", type=float, default=None,
              help="Marginal variance (default: the kernel's variance).")
@click.option("--out-dir", **_OUT_DIR_OPTION)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads; never affects the output bytes.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def sweep(kernel_name, k, method, mode_name, table_path, points, steps,
          t0_max, seed, sigma2, out_dir, threads, plot):
    """Simulate a correlation function across time separations.

    Writes the sweep CSV, a JSON manifest, and (unless --no-plot) a
    figure overlaying the analytic curve on the simulation.
    """
    kern = _build_kernel(kernel_name, k)
    mode = sampler.mode_by_name(mode_name)
    method_enum = calibration.method_by_name(method)
    if sigma2 is None:
        sigma2 = kern.variance
    if method_enum is calibration.CalibrationMethod.TABLE:
        if table_path is None:
            raise click.UsageError("--method table requires --table FILE")
        _, rows = reporting.read_csv(table_path)
        table = calibration.CalibrationTable.from_rows(rows, mode, sigma2)
        calib = calibration.table_calibration(table)
    elif method_enum is calibration.CalibrationMethod.TAN_FIT:
        calib = calibration.tan_fit_calibration(mode)
    else:
        calib = calibration.exact_inversion(mode)

    result = sampler.correlation_sweep(
        kern, calib, n_points=points, t0_max=t0_max, steps_per_point=steps,
        seed=seed, sigma2=sigma2, threads=threads,
    )

    out_dir = _resolve_out_dir(out_dir)
    slug = _sweep_slug(kern, method, mode)
    csv_path = reporting.write_csv(
        out_dir / f"{slug}.csv", sampler.SweepRow.CSV_HEADER,
        [r.csv_values() for r in result.rows],
    )
    outputs = [csv_path]
    if plot:
        outputs.append(reporting.render_sweep_figure(
            result, out_dir / f"{slug}.png"))
    config = dict(result.manifest_config(), threads=threads)
    manifest = reporting.RunManifest.build("sweep", config, seed, outputs)
    manifest.write(out_dir / f"{slug}_manifest.json")

    if result.n_infeasible:
        click.echo(f"infeasible grid points: {result.n_infeasible} "
                   f"of {len(result.rows)}")
    if result.n_infeasible == len(result.rows):
        raise InfeasibleCalibrationError(
            "every grid point was infeasible for this mode; no "
            "correlation was simulated"
        )
    click.echo(f"max |deviation| = {result.max_abs_deviation:.6g}")
    click.echo(f"RMS deviation   = {result.rms_deviation:.6g}")
    click.echo(f"wrote {csv_path}")


@cli.command("verify-quadrature")
@click.option("--t0", "t0_spec", default="0,0.5,1,2,4,8", show_default=True,
              help="Comma-separated time separations.")
@click.option("--alpha", "alpha_spec", default="0.1,1,10", show_default=True,
              help="Comma-separated logarithmic scale constants.")
@click.option("--tol", type=float, default=1e-6, show_default=True,
              help="Absolute tolerance per point.")
@click.option("--truncation", type=float, default=100.0, show_default=True,
              help="Half-width T of the finite integration box.")
@click.option("--out-dir", **_OUT_DIR_OPTION)
@click.option("--plot/--no-plot", default=True, show_default=True)
def verify_quadrature(t0_spec, alpha_spec, tol, truncation, out_dir, plot):
    """Check the double-integral representation against the closed form.

    Integrates the logarithmic-kernel representation of the smeared
    scalar correlation numerically at each (t0, alpha) and compares
    with the analytic kernel. Exits 0 only if every point converges
    and agrees within tolerance; the report CSV is written either way.
    """
    t0_values = _parse_float_list(t0_spec, "--t0")
    alpha_values = _parse_float_list(alpha_spec, "--alpha")
    reports = []
    for alpha in alpha_values:
        spec = smearing.SmearingSpec(alpha=alpha, truncation_T=truncation,
                                     abs_tol=tol)
        reports.append(smearing.verify_closed_form(t0_values, spec))

    out_dir = _resolve_out_dir(out_dir)
    all_rows = [p.csv_values() for rep in reports for p in rep.points]
    csv_path = reporting.write_csv(
        out_dir / "quadrature_report.csv", smearing.SmearingPoint.CSV_HEADER,
        all_rows,
    )
    outputs = [csv_path]
    if plot:
        for rep in reports:
            outputs.append(reporting.render_quadrature_figure(
                rep, out_dir / f"quadrature_alpha{rep.alpha:g}.png"))
    config = {
        "t0": list(t0_values), "alpha": list(alpha_values),
        "abs_tol": tol, "truncation_T": truncation,
    }
    manifest = reporting.RunManifest.build("verify-quadrature", config, None,
                                           outputs)
    manifest.write(out_dir / "quadrature_manifest.json")

    worst = max(rep.max_abs_dev for rep in reports)
    click.echo(f"max |deviation| over {len(all_rows)} points = {worst:.3g} "
               f"(tolerance {tol:g})")
    if len(reports) > 1:
        spread = _alpha_spread(reports)
        click.echo(f"max pairwise spread across alpha = {spread:.3g}")
    click.echo(f"wrote {csv_path}")
    bad = [p for rep in reports for p in rep.points
           if not p.converged or not p.abs_dev <= tol]
    if bad:
        raise QuadratureConvergenceError(
            f"{len(bad)} of {len(all_rows)} point(s) failed the "
            f"{tol:g} tolerance",
            estimate=worst,
            achieved_bound=max(p.err_bound for p in bad),
        )


def _alpha_spread(reports):
    """Largest |difference| of quadrature values across alpha, any t0."""
    by_alpha = np.array([[p.quad_value for p in rep.points]
                         for rep in reports])
    return float(np.max(by_alpha.max(axis=0) - by_alpha.min(axis=0)))


def _check_f_list(f_values):
    for f in f_values:
        if not (math.isfinite(f) and abs(f) <= 1.0):
            raise click.BadParameter(
                f"shift factor {f:g} outside the allowed band |f| <= 1"
            )
    return f_values


@cli.command()
@click.option("--f", "f_spec", default="-0.5,0,0.5", show_default=True,
              help="Comma-separated shift factors, each with |f| <= 1.")
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--walkers", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", "mode_name", type=click.Choice(_MODE_NAMES),
              default="chain-raw", show_default=True)
@click.option("--sigma2", type=float, default=1.0, show_default=True)
@click.option("--fit/--no-fit", default=True, show_default=True,
              help="Fit msd = c1 N + c0 and print the coefficients.")
@click.option("--fit-window", default=None,
              help="Fit window lo:hi (default 1:min(100, steps)).")
@click.option("--blocks", type=int, default=walker.DEFAULT_WALK_BLOCKS,
              show_default=True, help="Walker blocks (statistics only).")
@click.option("--out-dir", **_OUT_DIR_OPTION)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads; never affects the output bytes.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def walk(f_spec, steps, walkers, seed, mode_name, sigma2, fit, fit_window,
         blocks, out_dir, threads, plot):
    """Run correlated random-walk ensembles, one per shift factor.

    Writes one msd CSV per f plus a manifest, prints the linear fit of
    each ensemble, and reports slope ratios against the f = 0 run when
    present.
    """
    f_values = _check_f_list(_parse_float_list(f_spec, "--f"))
    mode = sampler.mode_by_name(mode_name)
    window = _parse_window(fit_window) if fit_window is not None else None

    results, fits = [], []
    for f in f_values:
        res = walker.run_walk_ensemble(f, sigma2, mode, steps, walkers,
                                       seed=seed, n_blocks=blocks,
                                       threads=threads)
        results.append(res)
        fits.append(walker.fit_sqrt_growth(res, window) if fit else None)

    out_dir = _resolve_out_dir(out_dir)
    outputs = []
    for res in results:
        path = out_dir / f"walk_f{res.f:g}_{mode.value}.csv"
        outputs.append(reporting.write_csv(path, res.CSV_HEADER,
                                           res.csv_rows()))
    if plot:
        outputs.append(reporting.render_walk_figure(
            results, fits, out_dir / f"walk_{mode.value}.png"))

    config = {
        "f": list(f_values), "sigma2": sigma2, "mode": mode.value,
        "n_steps": steps, "n_walkers": walkers, "blocks": blocks,
        "threads": threads,
    }
    if fit:
        config["fits"] = [
            {"f": res.f, "c1": ft.c1, "c0": ft.c0, "c1_stderr": ft.c1_stderr,
             "window": list(ft.window)}
            for res, ft in zip(results, fits)
        ]
    manifest = reporting.RunManifest.build("walk", config, seed, outputs)
    manifest.write(out_dir / f"walk_{mode.value}_manifest.json")

    for res, ft in zip(results, fits):
        if ft is None:
            click.echo(f"f = {res.f:g}: msd({res.n_steps}) = "
                       f"{res.msd[-1]:.6g} +- {res.stderr[-1]:.2g}")
        else:
            click.echo(f"f = {res.f:g}: c1 = {ft.c1:.6g} +- "
                       f"{ft.c1_stderr:.2g}, c0 = {ft.c0:.6g}")
    if fit:
        base = next((ft for res, ft in zip(results, fits)
                     if res.f == 0.0), None)
        if base is not None and base.c1 != 0.0:
            for res, ft in zip(results, fits):
                if res.f != 0.0:
                    click.echo(f"slope ratio c1(f={res.f:g}) / c1(f=0) = "
                               f"{ft.c1 / base.c1:.4g}")
    click.echo(f"wrote {len(outputs)} file(s) to {out_dir}")


@cli.command()
@click.option("--mode", "mode_name", type=click.Choice(_MODE_NAMES),
              required=True, help="Sampler mode to calibrate.")
@click.option("--steps", type=int, default=200_000, show_default=True,
              help="Steps per grid point.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sigma2", type=float, default=1.0, show_default=True)
@click.option("--grid", "grid_spec", default=None,
              help="Shift-factor grid start:stop:count "
                   "(default: 41 points on [-0.98, 0.98]).")
@click.option("--out-dir", **_OUT_DIR_OPTION)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads; never affects the output bytes.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def calibrate(mode_name, steps, seed, sigma2, grid_spec, out_dir, threads,
              plot):
    """Measure a shift-to-correlation calibration table."""
    mode = sampler.mode_by_name(mode_name)
    f_grid = (_parse_range(grid_spec, "--grid")
              if grid_spec is not None else None)
    table = calibration.calibrate_monte_carlo(
        mode, sigma2=sigma2, f_grid=f_grid, steps_per_point=steps,
        seed=seed, threads=threads,
    )

    out_dir = _resolve_out_dir(out_dir)
    csv_path = reporting.write_csv(
        out_dir / f"calibration_{mode.value}.csv", table.CSV_HEADER,
        table.rows(),
    )
    outputs = [csv_path]
    if plot:
        outputs.append(reporting.render_calibration_figure(
            table, out_dir / f"calibration_{mode.value}.png"))
    config = {
        "mode": mode.value, "sigma2": sigma2, "steps_per_point": steps,
        "grid": [float(f) for f in table.f_values], "threads": threads,
    }
    manifest = reporting.RunManifest.build("calibrate", config, seed, outputs)
    manifest.write(out_dir / f"calibration_{mode.value}_manifest.json")

    click.echo(f"measured {len(table.f_values)} grid points, "
               f"covering correlations [{table.c_min:.6g}, {table.c_max:.6g}]")
    click.echo(f"wrote {csv_path}")


def main(argv=None):
    """Entry point mapping exceptions onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.FileError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 3
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except FieldcorrError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0
