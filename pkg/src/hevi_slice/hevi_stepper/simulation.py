"""Time loop for the column and bubble experiments, with per-step energy, entropy and power diagnostics"""
# stdlib
from dataclasses import dataclass
from dataclasses import field

import numpy

from hevi_slice import loggingtools
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import build_mesh
from hevi_slice.exceptions import ConfigError
from hevi_slice.hevi_stepper.dynamics import SliceDynamics
from hevi_slice.hevi_stepper.initial import bubble_state
from hevi_slice.hevi_stepper.initial import column_state
from hevi_slice.hevi_stepper.state import SliceOptions
from hevi_slice.thermo import PhysConstants
from hevi_slice.thermo import diagnose_theta
from hevi_slice.thermo import entropy_diagnostic
from hevi_slice.thermo import total_energy

LOG = loggingtools.getLogger()

EXPERIMENT_COLUMN = "column"
EXPERIMENT_BUBBLE = "bubble"

ENERGY_COLUMNS = ("t", "K", "P", "I", "H", "dH", "balance_residual", "entropy", "p2k", "i2k")


class NullObserver(object):
    """Observer that discards everything"""

    def on_row(self, row):
        pass

    def on_snapshot(self, index, t, theta):
        pass


@dataclass
class SimulationResult(object):
    rows: list = field(default_factory=list)
    centroid_heights: list = field(default_factory=list)
    max_overshoot: float = 0.0
    final_state: object = None
    reports: list = field(default_factory=list)
    mass_drift: float = 0.0
    theta_drift: float = 0.0


def theta_centroid_height(mesh, theta, theta0):
    """Height of the centroid of the positive part of ``theta - theta0``; nan when there is none"""
    excess = numpy.maximum(mesh.evaluate(SPACE_T, theta) - theta0, 0.0)
    total = mesh.integrate(excess)
    return mesh.integrate(excess * mesh.quad_z) / total if total > 0.0 else float("nan")


def theta_maximum(mesh, theta):
    return float(mesh.evaluate(SPACE_T, theta).max())


def build_components(config):
    """Mesh, constants and dynamics described by a run configuration

    :type config: hevi_slice.cli_io.settings.RunConfig
    """
    mesh = build_mesh(config.nx, config.nz, config.p, config.Lx, config.Lz,
                      over_integrate=config.quadrature == "gauss")
    constants = PhysConstants(cp=config.cp, cv=config.cv, R=config.R, p0=config.p0, g=config.g)
    options = SliceOptions(upwind=config.upwind, upwind_fraction=config.upwind_fraction, visc=config.visc,
                           picard_tol=config.picard_tol, picard_max_iter=config.picard_max_iter,
                           exner_average=config.exner_average,
                           vertical_only=config.experiment == EXPERIMENT_COLUMN)
    return mesh, constants, SliceDynamics(mesh, constants, options)


def initial_state(config, mesh, constants):
    if config.experiment == EXPERIMENT_BUBBLE:
        return bubble_state(mesh, constants, theta0=config.theta0, dtheta=config.dtheta, rc=config.rc,
                            xc=config.xc, zc=config.zc)
    if config.experiment == EXPERIMENT_COLUMN:
        return column_state(mesh, constants, theta0=config.theta0, dtheta=config.dtheta, rc=config.rc,
                            zc=config.zc)
    raise ConfigError(key="experiment", reason="%r has no time loop" % config.experiment)


def _theta(dynamics, state, dt):
    options = dynamics.options
    return diagnose_theta(dynamics.mesh, state.rho, state.theta_density, upwind=options.upwind, w=state.w, dt=dt,
                          upwind_fraction=options.upwind_fraction)


def run_simulation(config, observer=None, state=None):
    """Runs the column or bubble experiment described by `config`.

    The first step uses forward Euler for the provisional velocity and every later step leapfrog.  Each energy row
    and each theta snapshot is handed to `observer` as soon as it exists, so a failing run leaves its partial
    output behind.

    :type config: hevi_slice.cli_io.settings.RunConfig
    :param observer: Object with ``on_row(row)`` and ``on_snapshot(index, t, theta)``
    :param state: Initial state; built from the configuration when omitted
    :rtype: SimulationResult
    :raises: NumericError
    """
    observer = observer or NullObserver()
    mesh, constants, dynamics = build_components(config)
    state = state or initial_state(config, mesh, constants)
    dt = config.dt
    n_steps = int(round(config.t_end / dt))
    snapshot_every = max(int(round(config.snapshot_interval / dt)), 1) if config.snapshot_interval else 0
    LOG.info("Running %s on %r for %d steps of %g s", config.experiment, mesh, n_steps, dt)

    energy_0 = total_energy(mesh, state, constants)
    mass_0, theta_total_0 = mass_and_theta_totals(mesh, state)
    theta = _theta(dynamics, state, dt)
    result = SimulationResult(final_state=state)
    initial_max = theta_maximum(mesh, theta.values)
    first_row = [state.t, energy_0.K, energy_0.P, energy_0.I, energy_0.H, 0.0, 0.0,
                 entropy_diagnostic(mesh, theta, state.rho, constants, config.s0), 0.0, 0.0]
    result.rows.append(first_row)
    observer.on_row(first_row)
    result.centroid_heights.append(theta_centroid_height(mesh, theta.values, config.theta0))
    if snapshot_every:
        observer.on_snapshot(0, state.t, theta)

    previous = None
    for step_index in range(1, n_steps + 1):
        outcome = dynamics.step(state, dt, previous=previous)
        previous, state = state, outcome.state
        energy = total_energy(mesh, state, constants)
        theta = _theta(dynamics, state, dt)
        p2k, i2k = dynamics.power_exchanges(outcome.fluxes, previous, state, dt)
        row = [state.t, energy.K, energy.P, energy.I, energy.H, energy.H - energy_0.H,
               outcome.balance.vertical_part, entropy_diagnostic(mesh, theta, state.rho, constants, config.s0),
               p2k, i2k]
        result.rows.append(row)
        result.reports.append(outcome.report)
        result.final_state = state
        observer.on_row(row)
        result.centroid_heights.append(theta_centroid_height(mesh, theta.values, config.theta0))
        result.max_overshoot = max(result.max_overshoot, theta_maximum(mesh, theta.values) - initial_max)
        if snapshot_every and step_index % snapshot_every == 0:
            observer.on_snapshot(step_index // snapshot_every, state.t, theta)
        if config.experiment == EXPERIMENT_COLUMN:
            # v stays zero so the step is purely the implicit substep
            previous = None
    mass, theta_total = mass_and_theta_totals(mesh, state)
    result.mass_drift = abs(mass - mass_0) / abs(mass_0)
    result.theta_drift = abs(theta_total - theta_total_0) / abs(theta_total_0)
    LOG.info("Finished at t=%g with dH/H=%.3e, mass drift %.3e, Theta drift %.3e", state.t,
             result.rows[-1][5] / energy_0.H, result.mass_drift, result.theta_drift)
    return result


def run_column(config, observer=None):
    """Vertical-only column run; `config.experiment` must be ``column``"""
    if config.experiment != EXPERIMENT_COLUMN:
        raise ConfigError(key="experiment", reason="run_column needs the column experiment")
    return run_simulation(config, observer=observer)


def mass_and_theta_totals(mesh, state):
    """Domain integrals of rho and Theta; equal to the sums of their Q coefficients"""
    return (mesh.integrate(mesh.evaluate(SPACE_Q, state.rho)),
            mesh.integrate(mesh.evaluate(SPACE_Q, state.theta_density)))
