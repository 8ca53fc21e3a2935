"""The energetically balanced HEVI step.

With ``F = M^-1 M_rho u`` the mass flux, ``C(q) = <beta_par, q beta_perp>`` the vorticity coupling and loads
``<gamma, Phi>``, ``<gamma, Pi>`` on Q, the semi-discrete slice equations are

    M_par  v_t = C(q) F_w   + E_par^T  <gamma, Phi> + M_par,theta  M_par^-1  E_par^T  <gamma, Pi>
    M_perp w_t = -C(q)^T F_v + E_perp^T <gamma, Phi> + M_perp,theta M_perp^-1 E_perp^T <gamma, Pi>
    rho_t      = -E_par F_v - E_perp F_w
    Theta_t    = -E_par M_par^-1 M_par,theta F_v - E_perp M_perp^-1 M_perp,theta F_w

whose right side is skew-symmetric against the variational derivatives, so every exchange term cancels in the
energy budget.  A step is three stages:

1. an explicit provisional horizontal velocity ``v'`` (forward Euler or leapfrog),
2. an implicit solve for ``w, rho, Theta`` at the new level with the horizontal fluxes taken along ``v^n -> v'``,
3. an explicit horizontal update with the time integrated fluxes of stage 2.

The time integrated fluxes are exact integrals over the step of the products of linear-in-time fields, so stage
2 conserves energy to solver tolerance and stage 3 only leaves the error ``V_bar^T M_par (v' - v^{n+1})``.
"""
# stdlib
import dataclasses
from dataclasses import dataclass

import numpy
import scipy.sparse

from hevi_slice import loggingtools
from hevi_slice.collections.exceptions import PipelineErrorExit
from hevi_slice.collections.pipeline import Pipeline
from hevi_slice.derham_mesh import SPACE_P
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import SPACE_U_PAR
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.derham_mesh import mass_matrix
from hevi_slice.derham_mesh import weak_curl_pv
from hevi_slice.exceptions import ConvergenceError
from hevi_slice.exceptions import NumericError
from hevi_slice.exceptions import StartupError
from hevi_slice.exceptions import ThermodynamicDomainError
from hevi_slice.hevi_stepper.state import EXNER_DISCRETE_GRADIENT
from hevi_slice.hevi_stepper.state import MODE_EULER
from hevi_slice.hevi_stepper.state import MODE_LEAPFROG
from hevi_slice.hevi_stepper.state import EnergyBalance
from hevi_slice.hevi_stepper.state import FluxSet
from hevi_slice.hevi_stepper.state import SliceOptions
from hevi_slice.hevi_stepper.state import StateVector
from hevi_slice.hevi_stepper.state import StepReport
from hevi_slice.numkit import lu_factor
from hevi_slice.polybasis import TemporalPair
from hevi_slice.polybasis import gauss_legendre
from hevi_slice.thermo import PhysConstants
from hevi_slice.thermo import diagnose_theta
from hevi_slice.thermo import exner_derivative_points
from hevi_slice.thermo import exner_points
from hevi_slice.thermo import total_energy

LOG = loggingtools.getLogger()

#: Velocity scale below which corrections to w are measured absolutely, m/s
VELOCITY_FLOOR = 1.0

#: Gauss-Legendre points for the line integral of Pi along the linear Theta path
DISCRETE_GRADIENT_POINTS = 6


@dataclass(frozen=True)
class LevelFields(object):
    """Diagnosed pointwise fields of one time level"""
    rho: numpy.ndarray
    theta_density: numpy.ndarray
    exner: numpy.ndarray
    theta: numpy.ndarray
    pv: numpy.ndarray


@dataclass(frozen=True)
class VerticalSolution(object):
    """Result of the implicit stage"""
    w: numpy.ndarray
    rho: numpy.ndarray
    theta_density: numpy.ndarray
    fluxes: FluxSet
    report: StepReport
    pv_mid: numpy.ndarray
    theta_mid: numpy.ndarray

    def __iter__(self):
        return iter((self.w, self.rho, self.theta_density, self.fluxes, self.report))


@dataclass(frozen=True)
class StepWork(object):
    """Intermediate result handed from stage to stage"""
    state: StateVector
    dt: float
    previous: StateVector = None
    v_prime: numpy.ndarray = None
    vertical: VerticalSolution = None
    next_state: StateVector = None


@dataclass(frozen=True)
class StepOutcome(object):
    state: StateVector
    fluxes: FluxSet
    report: StepReport
    v_prime: numpy.ndarray
    balance: EnergyBalance


class SliceDynamics(object):
    """Operators and stages of the HEVI step on one mesh"""

    def __init__(self, mesh, constants=None, options=None):
        """
        :type mesh: hevi_slice.derham_mesh.MeshComplex
        :type constants: hevi_slice.thermo.PhysConstants
        :type options: hevi_slice.hevi_stepper.state.SliceOptions
        """
        self.mesh = mesh
        self.constants = constants or PhysConstants()
        self.options = options or SliceOptions()
        self._mode = MODE_EULER
        self.pipeline = Pipeline(self._predict_horizontal, self._solve_vertical, self._correct_horizontal,
                                 transition_filters=[self._domain_filter])

    def __repr__(self):
        return "SliceDynamics(%r, %r)" % (self.mesh, self.options)

    # pointwise diagnostics

    def level(self, v, w, rho, theta_density, dt=0.0):
        """Diagnoses Pi, theta and PV of one level at the quadrature points.

        :rtype: LevelFields
        :raises: ThermodynamicDomainError, DegenerateStateError
        """
        mesh = self.mesh
        rho_points = mesh.evaluate(SPACE_Q, rho)
        if not numpy.all(rho_points > 0.0):
            raise ThermodynamicDomainError(field_name="rho", minimum=float(rho_points.min()))
        theta_density_points = mesh.evaluate(SPACE_Q, theta_density)
        theta = diagnose_theta(mesh, rho, theta_density, upwind=self.options.upwind, w=w, dt=dt,
                               upwind_fraction=self.options.upwind_fraction)
        pv = weak_curl_pv(mesh, v, w, rho)
        return LevelFields(rho=rho_points, theta_density=theta_density_points,
                           exner=exner_points(theta_density_points, self.constants),
                           theta=mesh.evaluate(SPACE_T, theta.values), pv=mesh.evaluate(SPACE_P, pv.values))

    def mass_flux(self, space, rho_points, coefficients):
        """``M^-1 M_rho u`` for a velocity in U_par or U_perp"""
        mesh = self.mesh
        return mesh.solve_mass(space, mesh.dual(space, rho_points * mesh.evaluate(space, coefficients)))

    def vorticity_coupling(self, pv_points):
        """``C(q) = <beta_par, q beta_perp>``"""
        return self.mesh.weighted_product(SPACE_U_PAR, SPACE_U_PERP, pv_points)

    def _theta_gradient(self, space, theta_points, pi_load):
        """``M_theta M^-1 E^T <gamma, Pi>`` on U_par or U_perp"""
        mesh = self.mesh
        incidence = mesh.e32_par if space == SPACE_U_PAR else mesh.e32_perp
        gradient = mesh.solve_mass(space, incidence.T.dot(pi_load))
        return mesh.dual(space, theta_points * mesh.evaluate(space, gradient))

    def _theta_flux(self, space, theta_points, flux):
        """``M^-1 M_theta F``"""
        mesh = self.mesh
        return mesh.solve_mass(space, mesh.dual(space, theta_points * mesh.evaluate(space, flux)))

    def horizontal_forcing(self, pv_points, theta_points, w_flux, phi_load, pi_load):
        """Right side of the horizontal momentum equation as a U_par dual vector"""
        return (self.vorticity_coupling(pv_points).dot(w_flux)
                + self.mesh.e32_par.T.dot(phi_load)
                + self._theta_gradient(SPACE_U_PAR, theta_points, pi_load))

    # stage 1

    def step1_horizontal(self, state, dt, previous=None, mode=MODE_EULER):
        """Provisional horizontal velocity from the forcing at level n.

        :param previous: The state at level n - 1, required by leapfrog
        :param mode: ``euler`` (v^n + dt f^n) or ``leapfrog`` (v^{n-1} + 2 dt f^n)
        :rtype: numpy.ndarray
        :raises: StartupError
        """
        mesh = self.mesh
        if mode == MODE_LEAPFROG and previous is None:
            raise StartupError()
        if self.options.vertical_only:
            return numpy.zeros(mesh.dimension(SPACE_U_PAR))
        if dt == 0.0:
            return state.v.copy()
        fields = self.level(state.v, state.w, state.rho, state.theta_density, dt)
        kinetic = self._kinetic_points(state.v, state.w)
        phi_load = mesh.dual(SPACE_Q, kinetic + self.constants.g * mesh.quad_z)
        pi_load = mesh.dual(SPACE_Q, fields.exner)
        w_flux = self.mass_flux(SPACE_U_PERP, fields.rho, state.w)
        tendency = mesh.solve_mass(SPACE_U_PAR,
                                   self.horizontal_forcing(fields.pv, fields.theta, w_flux, phi_load, pi_load))
        if mode == MODE_LEAPFROG:
            return previous.v + 2.0 * dt * tendency
        return state.v + dt * tendency

    def _kinetic_points(self, v, w):
        mesh = self.mesh
        return 0.5 * (mesh.evaluate(SPACE_U_PAR, v) ** 2 + mesh.evaluate(SPACE_U_PERP, w) ** 2)

    # time integrated fluxes

    def exner_average_points(self, theta_density_n, theta_density_next):
        """Pointwise step average of Pi; trapezoidal, or the exact average along the linear Theta path"""
        constants = self.constants
        pi_n = exner_points(theta_density_n, constants)
        pi_next = exner_points(theta_density_next, constants)
        trapezoidal = 0.5 * (pi_n + pi_next)
        if self.options.exner_average != EXNER_DISCRETE_GRADIENT:
            return trapezoidal
        nodes, weights = gauss_legendre(DISCRETE_GRADIENT_POINTS)
        average = numpy.zeros_like(trapezoidal)
        for node, weight in zip(nodes, weights):
            tau = 0.5 * (node + 1.0)
            path = (1.0 - tau) * theta_density_n + tau * theta_density_next
            average += 0.5 * weight * exner_points(path, constants)
        return average

    def flux_time_averages(self, v_n, v_prime, w_n, w_next, rho_n, rho_next, theta_density_n, theta_density_next):
        """Exact step averages of the variational derivatives for fields linear in time over the step.

        ``V_bar = M^-1 (1/3 M_rho^n v^n + 1/6 M_rho^{n+1} v^n + 1/6 M_rho^n v' + 1/3 M_rho^{n+1} v')`` and likewise for
        ``W_bar``; ``Phi_bar`` is the six term kinetic average plus ``g z``; ``Pi_bar`` follows the Exner averaging
        option.

        :rtype: FluxSet
        """
        mesh = self.mesh
        pair = TemporalPair(0.0, 1.0)
        rho0, rho1 = mesh.evaluate(SPACE_Q, rho_n), mesh.evaluate(SPACE_Q, rho_next)
        v0, v1 = mesh.evaluate(SPACE_U_PAR, v_n), mesh.evaluate(SPACE_U_PAR, v_prime)
        w0, w1 = mesh.evaluate(SPACE_U_PERP, w_n), mesh.evaluate(SPACE_U_PERP, w_next)

        v_bar = mesh.solve_mass(SPACE_U_PAR, mesh.dual(SPACE_U_PAR, pair.average(rho0, rho1, v0, v1)))
        w_bar = mesh.solve_mass(SPACE_U_PERP, mesh.dual(SPACE_U_PERP, pair.average(rho0, rho1, w0, w1)))
        kinetic = (v0 * v0 + v0 * v1 + v1 * v1 + w0 * w0 + w0 * w1 + w1 * w1) / 6.0
        phi_load = mesh.dual(SPACE_Q, kinetic + self.constants.g * mesh.quad_z)
        pi_points = self.exner_average_points(mesh.evaluate(SPACE_Q, theta_density_n),
                                              mesh.evaluate(SPACE_Q, theta_density_next))
        pi_load = mesh.dual(SPACE_Q, pi_points)
        return FluxSet(v_bar=v_bar, w_bar=w_bar,
                       phi_bar=mesh.solve_mass(SPACE_Q, phi_load), pi_bar=mesh.solve_mass(SPACE_Q, pi_load),
                       phi_load=phi_load, pi_load=pi_load)

    # stage 2

    def _vertical_jacobian(self, fields, dt):
        """Chord matrix of the implicit stage frozen at level n; buoyancy, PV and kinetic Bernoulli terms are left
        to the iteration.  Block diagonal over the x elements."""
        mesh = self.mesh
        half = 0.5 * dt
        m_perp = mesh.mass(SPACE_U_PERP)
        m_perp_inv = mesh.inverse_mass(SPACE_U_PERP)
        m_perp_theta = mass_matrix(mesh, SPACE_U_PERP, fields.theta)
        m_perp_rho = mass_matrix(mesh, SPACE_U_PERP, fields.rho)
        m_q_dpi = mass_matrix(mesh, SPACE_Q, exner_derivative_points(fields.theta_density, self.constants))
        e_perp = mesh.e32_perp.astype(float)

        w_theta = -half * m_perp_theta.dot(m_perp_inv.dot(e_perp.T.dot(m_q_dpi)))
        rho_w = half * e_perp.dot(m_perp_inv.dot(m_perp_rho))
        theta_w = half * e_perp.dot(m_perp_inv.dot(m_perp_theta.dot(m_perp_inv.dot(m_perp_rho))))
        identity = scipy.sparse.identity(mesh.dimension(SPACE_Q), format="csr")
        jacobian = scipy.sparse.bmat([[m_perp, None, w_theta],
                                      [rho_w, identity, None],
                                      [theta_w, None, identity]], format="csc")
        return lu_factor(jacobian)

    def _vertical_residual(self, state, w_next, rho_next, theta_density_next, fluxes, pv_mid, theta_mid, dt):
        mesh = self.mesh
        e_par, e_perp = mesh.e32_par, mesh.e32_perp
        w_forcing = (-self.vorticity_coupling(pv_mid).T.dot(fluxes.v_bar)
                     + e_perp.T.dot(fluxes.phi_load)
                     + self._theta_gradient(SPACE_U_PERP, theta_mid, fluxes.pi_load))
        residual_w = mesh.mass(SPACE_U_PERP).dot(w_next - state.w) - dt * w_forcing
        residual_rho = rho_next - state.rho + dt * (e_par.dot(fluxes.v_bar) + e_perp.dot(fluxes.w_bar))
        residual_theta = theta_density_next - state.theta_density + dt * (
            e_par.dot(self._theta_flux(SPACE_U_PAR, theta_mid, fluxes.v_bar))
            + e_perp.dot(self._theta_flux(SPACE_U_PERP, theta_mid, fluxes.w_bar)))
        return numpy.concatenate([residual_w, residual_rho, residual_theta])

    def _iterate_fields(self, state, v_prime, w_next, rho_next, theta_density_next, fields_n, dt):
        fields_next = self.level(v_prime, w_next, rho_next, theta_density_next, dt)
        fluxes = self.flux_time_averages(state.v, v_prime, state.w, w_next, state.rho, rho_next,
                                         state.theta_density, theta_density_next)
        return fluxes, 0.5 * (fields_n.pv + fields_next.pv), 0.5 * (fields_n.theta + fields_next.theta)

    def solve_vertical_implicit(self, state, v_prime, dt, tol=None, max_iter=None):
        """Implicit vertical solve with the horizontal divergence of ``V_bar`` and ``theta_mid V_bar`` as sources.

        Chord (frozen Jacobian) iteration on the residual of the w, rho and Theta equations; PV and theta at the
        midpoint are refreshed from every iterate.

        :param v_prime: Provisional horizontal velocity from stage 1
        :rtype: VerticalSolution
        :raises: ConvergenceError, ThermodynamicDomainError
        """
        mesh = self.mesh
        tol = self.options.picard_tol if tol is None else tol
        max_iter = self.options.picard_max_iter if max_iter is None else max_iter
        fields_n = self.level(state.v, state.w, state.rho, state.theta_density, dt)
        w_next, rho_next, theta_next = state.w.copy(), state.rho.copy(), state.theta_density.copy()

        if dt == 0.0:
            fluxes, pv_mid, theta_mid = self._iterate_fields(state, v_prime, w_next, rho_next, theta_next,
                                                             fields_n, dt)
            return VerticalSolution(w_next, rho_next, theta_next, fluxes, StepReport(1, 0.0), pv_mid, theta_mid)

        factor = self._vertical_jacobian(fields_n, dt)
        n_w, n_q = mesh.dimension(SPACE_U_PERP), mesh.dimension(SPACE_Q)
        w_scale = max(numpy.abs(state.w).max(initial=0.0), VELOCITY_FLOOR * mesh.lx / mesh.x_axis.edge_count)
        rho_scale = numpy.abs(state.rho).max()
        theta_scale = numpy.abs(state.theta_density).max()
        history = []
        for iteration in range(1, max_iter + 1):
            fluxes, pv_mid, theta_mid = self._iterate_fields(state, v_prime, w_next, rho_next, theta_next,
                                                             fields_n, dt)
            residual = self._vertical_residual(state, w_next, rho_next, theta_next, fluxes, pv_mid, theta_mid, dt)
            correction = factor.solve(-residual)
            w_next = w_next + correction[:n_w]
            rho_next = rho_next + correction[n_w:n_w + n_q]
            theta_next = theta_next + correction[n_w + n_q:]
            size = max(numpy.abs(correction[:n_w]).max(initial=0.0) / w_scale,
                       numpy.abs(correction[n_w:n_w + n_q]).max() / rho_scale,
                       numpy.abs(correction[n_w + n_q:]).max() / theta_scale)
            history.append(float(size))
            LOG.debug("Vertical iteration %d: correction %.3e", iteration, size)
            if not numpy.isfinite(size):
                raise NumericError(reason="vertical iteration produced non-finite values")
            if size <= tol:
                break
        else:
            raise ConvergenceError(iterations=max_iter, residual_history=history[-5:])

        if iteration > max_iter // 2:
            LOG.warning("Vertical solve needed %d of %d iterations", iteration, max_iter)
        fluxes, pv_mid, theta_mid = self._iterate_fields(state, v_prime, w_next, rho_next, theta_next, fields_n, dt)
        report = StepReport(picard_iterations=iteration, implicit_residual=history[-1],
                            residual_history=tuple(history))
        return VerticalSolution(w_next, rho_next, theta_next, fluxes, report, pv_mid, theta_mid)

    # stage 3

    def step3_horizontal(self, state, fluxes, pv_mid, theta_mid, dt):
        """Horizontal update with the time integrated fluxes and midpoint PV and theta, plus the explicit
        biharmonic tendency of ``v^n``.

        :rtype: numpy.ndarray
        """
        mesh = self.mesh
        if self.options.vertical_only:
            return numpy.zeros(mesh.dimension(SPACE_U_PAR))
        forcing = self.horizontal_forcing(pv_mid, theta_mid, fluxes.w_bar, fluxes.phi_load, fluxes.pi_load)
        v_next = state.v + dt * mesh.solve_mass(SPACE_U_PAR, forcing)
        if self.options.visc:
            v_next = v_next + dt * self.biharmonic_viscosity(state.v)
        return v_next

    def horizontal_laplacian(self, v):
        """``-M_par^-1 E_par^T M_Q E_par v``"""
        mesh = self.mesh
        divergence = mesh.e32_par.dot(v)
        return -mesh.solve_mass(SPACE_U_PAR, mesh.e32_par.T.dot(mesh.mass(SPACE_Q).dot(divergence)))

    def biharmonic_viscosity(self, v, coeff=None):
        """Tendency ``-coeff L(L v)`` with L the horizontal weak Laplacian; zero for a zero coefficient

        :param coeff: m^4/s; the configured viscosity when omitted
        """
        coeff = self.options.visc if coeff is None else coeff
        if coeff == 0.0:
            return numpy.zeros_like(numpy.asarray(v, dtype=float))
        return -coeff * self.horizontal_laplacian(self.horizontal_laplacian(v))

    # energy

    def energy_balance_residual(self, fluxes, state, next_state, v_prime):
        """Energy change implied by the step's own operators.

        ``vertical_part = W_bar^T M dw + Phi_bar^T M drho + Pi_bar^T M dTheta + V_bar^T M dv`` vanishes up to the
        implicit solve tolerance (and the viscous work); ``horizontal_error = V_bar^T M (v' - v^{n+1})``.

        :rtype: EnergyBalance
        """
        mesh = self.mesh
        m_par_v_bar = mesh.mass(SPACE_U_PAR).dot(fluxes.v_bar)
        terms = numpy.array([
            mesh.mass(SPACE_U_PERP).dot(fluxes.w_bar).dot(next_state.w - state.w),
            fluxes.phi_load.dot(next_state.rho - state.rho),
            fluxes.pi_load.dot(next_state.theta_density - state.theta_density),
            m_par_v_bar.dot(next_state.v - state.v),
        ])
        return EnergyBalance(vertical_part=float(terms.sum()),
                             horizontal_error=float(m_par_v_bar.dot(v_prime - next_state.v)),
                             scale=float(numpy.abs(terms).sum()))

    def energy_exchange_terms(self, state):
        """Products of the variational derivatives with the semi-discrete tendencies of `state`.

        Returns ``(F_v . M v_t, F_w . M w_t, <gamma, Phi> . rho_t, <gamma, Pi> . Theta_t)``; the right side is skew so
        the four sum to zero up to round-off.

        :rtype: numpy.ndarray
        """
        mesh = self.mesh
        fields = self.level(state.v, state.w, state.rho, state.theta_density)
        v_flux = self.mass_flux(SPACE_U_PAR, fields.rho, state.v)
        w_flux = self.mass_flux(SPACE_U_PERP, fields.rho, state.w)
        phi_load = mesh.dual(SPACE_Q, self._kinetic_points(state.v, state.w) + self.constants.g * mesh.quad_z)
        pi_load = mesh.dual(SPACE_Q, fields.exner)

        v_forcing = self.horizontal_forcing(fields.pv, fields.theta, w_flux, phi_load, pi_load)
        w_forcing = (-self.vorticity_coupling(fields.pv).T.dot(v_flux) + mesh.e32_perp.T.dot(phi_load)
                     + self._theta_gradient(SPACE_U_PERP, fields.theta, pi_load))
        rho_tendency = -(mesh.e32_par.dot(v_flux) + mesh.e32_perp.dot(w_flux))
        theta_tendency = -(mesh.e32_par.dot(self._theta_flux(SPACE_U_PAR, fields.theta, v_flux))
                           + mesh.e32_perp.dot(self._theta_flux(SPACE_U_PERP, fields.theta, w_flux)))
        return numpy.array([v_flux.dot(v_forcing), w_flux.dot(w_forcing), phi_load.dot(rho_tendency),
                            pi_load.dot(theta_tendency)])

    def power_exchanges(self, fluxes, state, next_state, dt):
        """(potential to kinetic, internal to kinetic) power over the step, W per metre"""
        mesh = self.mesh
        p2k = self.constants.g * mesh.height_dual.dot(mesh.e32_perp.dot(fluxes.w_bar))
        i2k = fluxes.pi_load.dot(state.theta_density - next_state.theta_density) / dt if dt else 0.0
        return float(p2k), float(i2k)

    # the pipeline

    def _predict_horizontal(self, work):
        mode = MODE_LEAPFROG if work.previous is not None else MODE_EULER
        v_prime = self.step1_horizontal(work.state, work.dt, previous=work.previous, mode=mode)
        return dataclasses.replace(work, v_prime=v_prime)

    def _solve_vertical(self, work):
        vertical = self.solve_vertical_implicit(work.state, work.v_prime, work.dt)
        provisional = work.state.replace(v=work.v_prime, w=vertical.w, rho=vertical.rho,
                                         theta_density=vertical.theta_density, t=work.state.t + work.dt)
        return dataclasses.replace(work, vertical=vertical, next_state=provisional)

    def _correct_horizontal(self, work):
        vertical = work.vertical
        v_next = self.step3_horizontal(work.state, vertical.fluxes, vertical.pv_mid, vertical.theta_mid, work.dt)
        return dataclasses.replace(work, next_state=work.next_state.replace(v=v_next))

    def _domain_filter(self, pipeline, stage, work):
        """Stops the step when a stage leaves non-finite velocities or a non-positive rho or Theta"""
        if work.v_prime is not None and not numpy.all(numpy.isfinite(work.v_prime)):
            raise PipelineErrorExit(pipeline, work, reason="non-finite provisional velocity after %s"
                                                           % stage.__name__)
        if work.next_state is not None and work.next_state.domain_violation(self.mesh):
            raise PipelineErrorExit(pipeline, work, reason="%s is not positive after %s"
                                                           % (work.next_state.domain_violation(self.mesh)[0],
                                                              stage.__name__))
        return work

    def step(self, state, dt, previous=None):
        """One full HEVI step; leapfrog when `previous` is given, forward Euler otherwise.

        :rtype: StepOutcome
        :raises: NumericError
        """
        try:
            work = self.pipeline.start(StepWork(state=state, dt=dt, previous=previous))
        except PipelineErrorExit as exit_signal:
            violation = exit_signal.intermediate_result.next_state
            if violation is not None and violation.domain_violation(self.mesh):
                field_name, minimum = violation.domain_violation(self.mesh)
                raise ThermodynamicDomainError(field_name=field_name, minimum=minimum)
            raise NumericError(reason=exit_signal.reason)

        next_state = work.next_state
        vertical = work.vertical
        balance = self.energy_balance_residual(vertical.fluxes, state, next_state, work.v_prime)
        energy_change = (total_energy(self.mesh, next_state, self.constants).H
                         - total_energy(self.mesh, state, self.constants).H)
        report = dataclasses.replace(vertical.report, energy_balance_residual=balance.vertical_part,
                                     dH=energy_change, horizontal_error=balance.horizontal_error)
        LOG.debug("t=%.4f: %d iterations, dH=%.3e, horizontal error %.3e", next_state.t, report.picard_iterations,
                  energy_change, balance.horizontal_error)
        return StepOutcome(state=next_state, fluxes=vertical.fluxes, report=report, v_prime=work.v_prime,
                           balance=balance)
