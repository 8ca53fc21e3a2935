"""Command line entry point: ``hevi-slice stability|column|bubble|checks --config <path> [--out <dir>] [overrides]``"""
# stdlib
import argparse
import logging
import os
import sys

from hevi_slice import loggingtools
from hevi_slice.__version__ import __version_str__
from hevi_slice.cli_io.checks import run_checks
from hevi_slice.cli_io.settings import EXPERIMENTS
from hevi_slice.cli_io.settings import parse_config
from hevi_slice.cli_io.writers import RunWriter
from hevi_slice.cli_io.writers import ensure_directory
from hevi_slice.cli_io.writers import write_timeseries
from hevi_slice.config import get_config_value
from hevi_slice.derham_mesh import build_mesh
from hevi_slice.exceptions import EXIT_OK
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import HeviSliceException
from hevi_slice.hevi_stepper.simulation import EXPERIMENT_BUBBLE
from hevi_slice.hevi_stepper.simulation import run_simulation
from hevi_slice.stability import GRID_COLUMNS
from hevi_slice.stability import SCHEMES
from hevi_slice.stability import dt_sweep
from hevi_slice.stability import grid_rows
from hevi_slice.stability import resolve_scheme
from hevi_slice.stability import sweep_grid

log = loggingtools.getLogger()

RUN_LOG = "run.log"
CONFIG_ECHO = "config.txt"
BOUNDARY_COLUMNS = ("dt", "k_star", "cfl", "index", "monotone")
BUBBLE_COLUMNS = ("t", "centroid_height")

#: Command line options that override configuration keys, with their argparse types
OVERRIDES = (
    ("--dt", "dt", float),
    ("--t-end", "t_end", float),
    ("--tol", "tol", float),
    ("--scheme", "scheme", str),
    ("--c", "c", float),
    ("--N", "N", float),
    ("--L", "L", float),
    ("--nk", "nk", int),
    ("--nl", "nl", int),
    ("--l-index", "l_index", int),
    ("--visc", "visc", float),
    ("--upwind", "upwind", str),
    ("--exner-average", "exner_average", str),
)


def build_parser():
    parser = argparse.ArgumentParser(prog="hevi-slice",
                                     description="Energetically balanced HEVI slice model and stability analysis")
    parser.add_argument("--version", action="version", version=__version_str__)
    subparsers = parser.add_subparsers(dest="command", metavar="|".join(EXPERIMENTS))
    subparsers.required = True
    for experiment in EXPERIMENTS:
        sub = subparsers.add_parser(experiment)
        sub.add_argument("--config", help="key=value run configuration file")
        sub.add_argument("--out", help="output directory; overrides the 'out' key")
        for flag, key, option_type in OVERRIDES:
            sub.add_argument(flag, dest=key, type=option_type, default=None)
        if experiment == "stability":
            sub.add_argument("--dt-sweep", dest="dt_sweep", type=float, nargs="+", default=None,
                             help="time steps at which to locate the acoustic stability boundary")
    return parser


def _read_config_text(path):
    if not path:
        return ""
    try:
        with open(path, encoding="utf-8") as stream:
            return stream.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(key="--config", reason="cannot read %s: %s" % (path, exc))


def _overrides(args):
    overrides = {key: getattr(args, key) for _, key, _ in OVERRIDES if getattr(args, key, None) is not None}
    if args.out:
        overrides["out"] = args.out
    return overrides


def run_stability(run_config, out_dir, schemes=SCHEMES, dts=None, stream=None):
    """Writes the (k, l) grid of each of `schemes` and the acoustic boundary of the configured scheme at each of
    `dts` (the configured dt by default)"""
    stream = stream or sys.stdout
    for scheme in schemes:
        results = sweep_grid(scheme, run_config.c, run_config.N, run_config.dt, run_config.L, run_config.L,
                             run_config.nk, run_config.nl)
        write_timeseries(os.path.join(out_dir, "stability_%s.csv" % scheme), grid_rows(results), GRID_COLUMNS)
        stream.write("%-18s max|acoustic|=%.17g max|gravity|=%.17g\n"
                     % (scheme, max(result.max_acoustic for result in results),
                        max(result.max_gravity for result in results)))

    dts = dts or [run_config.dt]
    rows = []
    for dt, boundary in dt_sweep(run_config.c, run_config.N, run_config.L, run_config.l_index, dts,
                                 scheme=run_config.scheme, lx=run_config.L, nk=run_config.nk):
        if boundary.stable_throughout:
            rows.append([dt, "", "", "", ""])
            stream.write("dt=%g: acoustic modes stable on the whole lattice\n" % dt)
        else:
            rows.append([dt, boundary.k, boundary.cfl, boundary.index, int(boundary.monotone)])
            stream.write("dt=%g: acoustic instability from k=%.17g (CFL %.6g)%s\n"
                         % (dt, boundary.k, boundary.cfl, "" if boundary.monotone else ", not monotone"))
    write_timeseries(os.path.join(out_dir, "stability_boundary.csv"), rows, BOUNDARY_COLUMNS)


def run_experiment(run_config, out_dir, stream=None):
    """Runs the column or bubble experiment, writing ``energy.csv`` and theta snapshots as the run proceeds"""
    stream = stream or sys.stdout
    mesh = build_mesh(run_config.nx, run_config.nz, run_config.p, run_config.Lx, run_config.Lz,
                      over_integrate=run_config.quadrature == "gauss")
    with RunWriter(out_dir, mesh) as writer:
        result = run_simulation(run_config, observer=writer)
    if run_config.experiment == EXPERIMENT_BUBBLE:
        rows = [[row[0], height] for row, height in zip(result.rows, result.centroid_heights)]
        write_timeseries(os.path.join(out_dir, "bubble.csv"), rows, BUBBLE_COLUMNS)
        stream.write("centroid height %.6g m, max overshoot %.6g K\n"
                     % (result.centroid_heights[-1], result.max_overshoot))
    initial, final = result.rows[0], result.rows[-1]
    stream.write("t=%g H=%.17g dH/H=%.3e\n" % (final[0], final[4], final[5] / initial[4]))
    return result


def _log_level():
    level = get_config_value("HEVI_SLICE_LOG_LEVEL", "INFO")
    return logging.getLevelName(str(level).upper())


def main(argv=None):
    """
    :return: Process exit code: 0 success, 1 configuration or output error, 2 numerical failure, 3 failed invariant
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    loggingtools.configure_logging(level=_log_level())
    try:
        run_config = parse_config(_read_config_text(args.config), experiment=args.command,
                                  overrides=_overrides(args))
        out_dir = ensure_directory(run_config.out)
        loggingtools.configure_logging(level=_log_level(), log_file=os.path.join(out_dir, RUN_LOG))
        log.info("hevi-slice %s: %s into %s", __version_str__, run_config.experiment, out_dir)
        with open(os.path.join(out_dir, CONFIG_ECHO), "w", encoding="utf-8") as echo:
            echo.write(run_config.to_text())

        if run_config.experiment == "stability":
            schemes = (resolve_scheme(args.scheme),) if args.scheme else SCHEMES
            run_stability(run_config, out_dir, schemes=schemes, dts=args.dt_sweep)
        elif run_config.experiment == "checks":
            run_checks(run_config)
        else:
            run_experiment(run_config, out_dir)
    except HeviSliceException as exc:
        log.error("%s failed: %s", args.command, exc.message)
        return exc.exit_code
    except OSError as exc:
        log.error("%s failed: %s", args.command, exc)
        return ConfigError.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
