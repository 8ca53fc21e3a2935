"""The structural invariant suite behind the ``checks`` subcommand"""
# stdlib
import sys
from dataclasses import dataclass

import numpy

from hevi_slice import loggingtools
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_U_PAR
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.derham_mesh import build_mesh
from hevi_slice.derham_mesh import incidence_nilpotency_check
from hevi_slice.derham_mesh import project_div
from hevi_slice.exceptions import InvariantFailure
from hevi_slice.hevi_stepper.dynamics import SliceDynamics
from hevi_slice.hevi_stepper.initial import bubble_state
from hevi_slice.hevi_stepper.initial import column_state
from hevi_slice.hevi_stepper.state import SliceOptions
from hevi_slice.polybasis import gauss_legendre
from hevi_slice.thermo import PhysConstants
from hevi_slice.thermo import total_energy

log = loggingtools.getLogger()

CHECK_SEED = 20170
COLUMN_LEVELS = 8
COLUMN_HEIGHT = 10000.0
COLUMN_STEPS = 5
COLUMN_DT = 0.5

TABLE_FORMAT = "%-24s %12s %12s  %s"


@dataclass(frozen=True)
class CheckResult(object):
    name: str
    value: float
    threshold: float
    passed: bool

    def row(self):
        return TABLE_FORMAT % (self.name, "%.3e" % self.value, "%.1e" % self.threshold,
                               "PASS" if self.passed else "FAIL")


class CheckContext(object):
    """Mesh, constants and seeded random generator shared by the checks"""

    def __init__(self, run_config):
        self.run_config = run_config
        self.mesh = build_mesh(run_config.nx, run_config.nz, run_config.p, run_config.Lx, run_config.Lz,
                               over_integrate=run_config.quadrature == "gauss")
        self.constants = PhysConstants(cp=run_config.cp, cv=run_config.cv, R=run_config.R, p0=run_config.p0,
                                       g=run_config.g)
        self.rng = numpy.random.default_rng(CHECK_SEED)

    def options(self, **changes):
        run_config = self.run_config
        values = dict(upwind=run_config.upwind, upwind_fraction=run_config.upwind_fraction,
                      picard_tol=run_config.picard_tol, picard_max_iter=run_config.picard_max_iter,
                      exner_average=run_config.exner_average)
        values.update(changes)
        return SliceOptions(**values)


def _relative_max(difference, reference):
    scale = numpy.abs(reference).max()
    return float(numpy.abs(difference).max() / scale) if scale else float(numpy.abs(difference).max())


def incidence_nilpotency(context):
    """1 when a composite incidence product has a non-zero entry, else 0"""
    return 0.0 if incidence_nilpotency_check(context.mesh) else 1.0


def galerkin_orthogonality(context):
    """``<beta, P[u] - u>`` for a random pointwise vector field, relative to ``<beta, u>``"""
    mesh = context.mesh
    raw = (context.rng.standard_normal(mesh.n_quad), context.rng.standard_normal(mesh.n_quad))
    v_field, w_field = project_div(mesh, raw)
    residuals = []
    for space, field, component in ((SPACE_U_PAR, v_field, raw[0]), (SPACE_U_PERP, w_field, raw[1])):
        load = mesh.dual(space, component)
        residuals.append(_relative_max(mesh.mass(space).dot(field.values) - load, load))
    return max(residuals)


def flux_average_exactness(context):
    """Assembled V_bar and W_bar against the time average of ``rho u`` by Gauss quadrature in time"""
    mesh = context.mesh
    rng = context.rng
    dynamics = SliceDynamics(mesh, context.constants, context.options())
    rho = [mesh.project(SPACE_Q, 1.0 + 0.1 * rng.random(mesh.n_quad)) for _ in range(2)]
    theta_density = [300.0 * value for value in rho]
    v = [rng.standard_normal(mesh.dimension(SPACE_U_PAR)) for _ in range(2)]
    w = [rng.standard_normal(mesh.dimension(SPACE_U_PERP)) for _ in range(2)]
    fluxes = dynamics.flux_time_averages(v[0], v[1], w[0], w[1], rho[0], rho[1], theta_density[0],
                                         theta_density[1])

    residuals = []
    nodes, weights = gauss_legendre(3)
    for space, pair, computed in ((SPACE_U_PAR, v, fluxes.v_bar), (SPACE_U_PERP, w, fluxes.w_bar)):
        average = numpy.zeros(mesh.n_quad)
        for node, weight in zip(nodes, weights):
            tau = 0.5 * (node + 1.0)
            rho_points = mesh.evaluate(SPACE_Q, (1.0 - tau) * rho[0] + tau * rho[1])
            u_points = mesh.evaluate(space, (1.0 - tau) * pair[0] + tau * pair[1])
            average += 0.5 * weight * rho_points * u_points
        expected = mesh.project(space, average)
        residuals.append(_relative_max(computed - expected, expected))
    return max(residuals)


def column_energy_conservation(context):
    """Largest per-step ``|dH| / H`` of vertical-only steps of a perturbed balanced column"""
    run_config = context.run_config
    mesh = build_mesh(1, COLUMN_LEVELS, run_config.p, run_config.Lx, COLUMN_HEIGHT)
    constants = context.constants
    dynamics = SliceDynamics(mesh, constants, context.options(vertical_only=True))
    state = column_state(mesh, constants, rc=2000.0, zc=0.5 * COLUMN_HEIGHT)
    energy = total_energy(mesh, state, constants).H
    worst = 0.0
    for _ in range(COLUMN_STEPS):
        state = dynamics.step(state, COLUMN_DT).state
        next_energy = total_energy(mesh, state, constants).H
        worst = max(worst, abs(next_energy - energy) / abs(energy))
        energy = next_energy
    return worst


def skew_cancellation(context):
    """Sum of the energy exchange terms of a perturbed bubble state relative to their magnitudes"""
    mesh = context.mesh
    dynamics = SliceDynamics(mesh, context.constants, context.options())
    state = bubble_state(mesh, context.constants, xc=0.5 * mesh.lx, zc=0.3 * mesh.lz, rc=0.2 * min(mesh.lx, mesh.lz))
    state = state.replace(v=context.rng.standard_normal(mesh.dimension(SPACE_U_PAR)),
                          w=context.rng.standard_normal(mesh.dimension(SPACE_U_PERP)))
    terms = dynamics.energy_exchange_terms(state)
    return float(abs(terms.sum()) / numpy.abs(terms).sum())


#: (name, function) in execution order
CHECKS = (
    ("incidence_nilpotency", incidence_nilpotency),
    ("galerkin_orthogonality", galerkin_orthogonality),
    ("flux_average_exactness", flux_average_exactness),
    ("column_energy", column_energy_conservation),
    ("skew_cancellation", skew_cancellation),
)


def evaluate_checks(run_config, tol=None):
    """Runs every check; nilpotency must hold exactly, the others within `tol`.

    :type run_config: hevi_slice.cli_io.settings.RunConfig
    :rtype: list of CheckResult
    """
    tol = run_config.tol if tol is None else tol
    context = CheckContext(run_config)
    results = []
    for name, check in CHECKS:
        value = check(context)
        threshold = 0.0 if check is incidence_nilpotency else tol
        passed = value == 0.0 if check is incidence_nilpotency else value <= threshold
        log.debug("Check %s: %.3e (%s)", name, value, "pass" if passed else "fail")
        results.append(CheckResult(name=name, value=value, threshold=threshold, passed=passed))
    return results


def run_checks(run_config, tol=None, stream=None):
    """Prints the pass/fail table of the invariant suite.

    :rtype: list of CheckResult
    :raises: InvariantFailure when any check fails
    """
    stream = stream or sys.stdout
    results = evaluate_checks(run_config, tol=tol)
    stream.write(TABLE_FORMAT % ("check", "value", "threshold", "status") + "\n")
    for result in results:
        stream.write(result.row() + "\n")
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise InvariantFailure(failed=", ".join(failed))
    log.info("All %d invariant checks passed", len(results))
    return results
