"""Run configuration: the ``key=value`` file format, its defaults and its validation"""
# stdlib
import dataclasses
from dataclasses import dataclass

from hevi_slice import NOTSET
from hevi_slice import loggingtools
from hevi_slice.config import Config
from hevi_slice.config import ConfigKeyError
from hevi_slice.config import KeyValueConfig
from hevi_slice.exceptions import ConfigError
from hevi_slice.stability import resolve_scheme
from hevi_slice.typetools import parse_bool

log = loggingtools.getLogger()

EXPERIMENT_STABILITY = "stability"
EXPERIMENT_COLUMN = "column"
EXPERIMENT_BUBBLE = "bubble"
EXPERIMENT_CHECKS = "checks"
EXPERIMENTS = (EXPERIMENT_STABILITY, EXPERIMENT_COLUMN, EXPERIMENT_BUBBLE, EXPERIMENT_CHECKS)

QUADRATURES = ("gll", "gauss")

#: Per experiment values replacing the general defaults of `RunConfig`
EXPERIMENT_DEFAULTS = {
    EXPERIMENT_BUBBLE: {},
    EXPERIMENT_COLUMN: dict(nx=1, nz=20, Lz=10000.0, dt=0.5, t_end=25.0, rc=2000.0, zc=5000.0,
                            snapshot_interval=0.0),
    EXPERIMENT_STABILITY: dict(dt=0.5),
    EXPERIMENT_CHECKS: dict(nx=4, nz=4, dt=0.5),
}


@dataclass(frozen=True)
class RunConfig(object):
    """Validated settings of one run.  Defaults are those of the bubble experiment."""
    # pylint: disable=invalid-name
    experiment: str = EXPERIMENT_BUBBLE
    # grid
    nx: int = 12
    nz: int = 18
    p: int = 3
    Lx: float = 1000.0
    Lz: float = 1500.0
    quadrature: str = "gll"
    # time
    dt: float = 0.05
    t_end: float = 200.0
    # physical constants
    cp: float = 1004.5
    cv: float = 717.5
    R: float = 287.0
    p0: float = 100000.0
    g: float = 9.80616
    # scheme switches
    upwind: bool = False
    upwind_fraction: float = 0.5
    visc: float = 0.0
    picard_tol: float = 1e-12
    picard_max_iter: int = 100
    exner_average: str = "trapezoidal"
    # initial state
    theta0: float = 300.0
    dtheta: float = 0.5
    rc: float = 250.0
    xc: float = 500.0
    zc: float = 350.0
    s0: float = 0.0
    # output
    out: str = "out"
    snapshot_interval: float = 10.0
    # stability analysis
    scheme: str = "hevi_new"
    c: float = 340.0
    N: float = 0.01
    L: float = 1000.0
    nk: int = 64
    nl: int = 64
    l_index: int = 1
    # invariant suite
    tol: float = 1e-10

    def __post_init__(self):
        _validate(self)

    @classmethod
    def for_experiment(cls, experiment, **values):
        """Defaults of `experiment` overlaid with `values`

        :raises: ConfigError
        """
        if experiment not in EXPERIMENTS:
            raise ConfigError(key="experiment", reason="expected one of %s" % ", ".join(EXPERIMENTS))
        merged = dict(EXPERIMENT_DEFAULTS[experiment])
        merged.update(values)
        return cls(experiment=experiment, **merged)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        """Serialises every field as ``key=value``; `parse_config` of the result gives an equal config"""
        lines = []
        for config_field in dataclasses.fields(self):
            value = getattr(self, config_field.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append("%s=%s" % (config_field.name, text))
        return "\n".join(lines) + "\n"


POSITIVE = ("nx", "nz", "p", "Lx", "Lz", "dt", "cp", "cv", "R", "p0", "g", "picard_tol", "picard_max_iter",
            "theta0", "rc", "c", "L", "nk", "nl", "tol")
NON_NEGATIVE = ("t_end", "upwind_fraction", "visc", "snapshot_interval", "N", "l_index")


def _validate(run_config):
    for name in POSITIVE:
        if not getattr(run_config, name) > 0:
            raise ConfigError(key=name, reason="must be positive, got %r" % getattr(run_config, name))
    for name in NON_NEGATIVE:
        if getattr(run_config, name) < 0:
            raise ConfigError(key=name, reason="must not be negative, got %r" % getattr(run_config, name))
    if run_config.experiment not in EXPERIMENTS:
        raise ConfigError(key="experiment", reason="expected one of %s" % ", ".join(EXPERIMENTS))
    if run_config.quadrature not in QUADRATURES:
        raise ConfigError(key="quadrature", reason="expected one of %s" % ", ".join(QUADRATURES))
    if run_config.exner_average not in ("trapezoidal", "discrete_gradient"):
        raise ConfigError(key="exner_average", reason="expected trapezoidal or discrete_gradient")
    if abs(run_config.R - (run_config.cp - run_config.cv)) > 1e-9 * run_config.cp:
        raise ConfigError(key="R", reason="R must equal cp - cv")
    if run_config.experiment == EXPERIMENT_COLUMN and run_config.nx != 1:
        raise ConfigError(key="nx", reason="the column experiment has a single x element")
    resolve_scheme(run_config.scheme)


def _parse_int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError("%r is not an integer" % text)
    return int(value)


#: Text to value conversion per field type
PARSERS = {
    int: _parse_int,
    float: float,
    bool: parse_bool,
    str: str,
}


def field_parsers():
    return {config_field.name: PARSERS[config_field.type] for config_field in dataclasses.fields(RunConfig)}


def from_config(source, experiment=None, line_numbers=None):
    """Builds a `RunConfig` from any `Config` provider.

    :param source: Provider of raw string values
    :type source: hevi_slice.config.Config
    :param experiment: Experiment selected outside the file, e.g. by the command line subcommand
    :param line_numbers: Line of every key read from a file, for error messages
    :type line_numbers: dict
    :rtype: RunConfig
    :raises: ConfigError
    """
    line_numbers = line_numbers or {}
    parsers = field_parsers()
    for key in source.keys():
        if key not in parsers:
            raise ConfigError(key=key, line_number=line_numbers.get(key), reason="unknown key")

    file_experiment = source.get_conf_value("experiment", default_value=None)
    if experiment and file_experiment and file_experiment != experiment:
        raise ConfigError(key="experiment", line_number=line_numbers.get("experiment"),
                          reason="file selects %r but %r was requested" % (file_experiment, experiment))
    experiment = experiment or file_experiment
    if not experiment:
        raise ConfigError(key="experiment", reason="missing required key")

    values = {}
    for key, parser in parsers.items():
        if key == "experiment":
            continue
        try:
            value = source.get_conf_value(key, default_value=NOTSET)
        except ConfigKeyError:
            continue
        try:
            values[key] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key=key, line_number=line_numbers.get(key), reason="malformed value: %s" % exc)
    if "scheme" in values:
        values["scheme"] = resolve_scheme(values["scheme"])

    try:
        run_config = RunConfig.for_experiment(experiment, **values)
    except ConfigError as exc:
        if exc.line_number is None and exc.key in line_numbers:
            raise ConfigError(key=exc.key, line_number=line_numbers[exc.key], reason=exc.reason)
        raise
    log.debug("Parsed %s configuration from %s", experiment, source.name)
    return run_config


def parse_config(text, experiment=None, overrides=None):
    """Parses ``key=value`` run configuration text.

    :param text: UTF-8 text; ``#`` starts a comment
    :param experiment: Experiment selected on the command line; required when the text has no ``experiment`` key
    :param overrides: Raw string values taking precedence over the file (command line options)
    :type overrides: dict
    :rtype: RunConfig
    :raises: ConfigError
    """
    file_config = KeyValueConfig(text)
    line_numbers = dict(file_config.line_numbers)
    source = file_config
    if overrides:
        source = Config("command line", {key: str(value) for key, value in overrides.items()}, file_config)
        for key in overrides:
            line_numbers.pop(key, None)
    return from_config(source, experiment=experiment, line_numbers=line_numbers)


__all__ = ['EXPERIMENTS', 'RunConfig', 'from_config', 'parse_config']
