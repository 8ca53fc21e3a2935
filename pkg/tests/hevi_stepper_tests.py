"""Tests for hevi_slice.hevi_stepper"""
import mock
import numpy

from hevi_slice.cli_io.settings import RunConfig
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import SPACE_U_PAR
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.derham_mesh import build_mesh
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import ConvergenceError
from hevi_slice.exceptions import StartupError
from hevi_slice.exceptions import ThermodynamicDomainError
from hevi_slice.hevi_stepper import EXNER_DISCRETE_GRADIENT
from hevi_slice.hevi_stepper import EXNER_TRAPEZOIDAL
from hevi_slice.hevi_stepper import EXPERIMENT_COLUMN
from hevi_slice.hevi_stepper import MODE_LEAPFROG
from hevi_slice.hevi_stepper import SliceDynamics
from hevi_slice.hevi_stepper import SliceOptions
from hevi_slice.hevi_stepper import StateVector
from hevi_slice.hevi_stepper import bubble_state
from hevi_slice.hevi_stepper import column_state
from hevi_slice.hevi_stepper import hydrostatic_state
from hevi_slice.hevi_stepper import run_column
from hevi_slice.hevi_stepper import run_simulation
from hevi_slice.hevi_stepper.initial import _balance_residual
from hevi_slice.hevi_stepper.initial import cosine_bump
from hevi_slice.hevi_stepper.simulation import ENERGY_COLUMNS
from hevi_slice.hevi_stepper.simulation import mass_and_theta_totals
from hevi_slice.polybasis import gauss_legendre
from hevi_slice.test import NumericTestCase
from hevi_slice.test import data
from hevi_slice.test.category_decorators import slow_test
from hevi_slice.thermo import PhysConstants
from hevi_slice.thermo import diagnose_theta
from hevi_slice.thermo import exner_points
from hevi_slice.thermo import internal_energy_points
from hevi_slice.thermo import total_energy

from .settings import BUBBLE_BALANCE_STEPS
from .settings import SMALL_MESH
from .settings import TEST_PICARD_TOL

BALANCE_MESH = dict(nx=8, nz=12, p=3, lx=1000.0, lz=1500.0)
BUBBLE_DT = 0.05
DISCRETE_GRADIENT_PICARD_TOL = 1e-10


class SliceOptionsTestCase(NumericTestCase):
    @data(dict(visc=-1.0), dict(picard_tol=0.0), dict(picard_max_iter=0), dict(exner_average="midpoint"),
          dict(upwind_fraction=-0.5))
    def test_invalid(self, values):
        with self.assertRaises(ConfigError):
            SliceOptions(**values)


class InitialStateTestCase(NumericTestCase):
    def setUp(self):
        self.mesh = build_mesh(**SMALL_MESH)
        self.constants = PhysConstants()

    def test_cosine_bump(self):
        self.assertAllClose(cosine_bump([0.0, 125.0, 250.0, 400.0], 0.5, 250.0), [0.5, 0.25, 0.0, 0.0], atol=1e-15)

    def test_hydrostatic_balance(self):
        mesh, constants = self.mesh, self.constants
        state = bubble_state(mesh, constants)
        theta = mesh.evaluate(SPACE_T, diagnose_theta(mesh, state.rho, state.theta_density).values)
        residual = _balance_residual(mesh, constants, state.theta_density, state.rho, theta)
        gravity = mesh.e32_perp.T.dot(constants.g * mesh.height_dual)
        self.assertLess(numpy.abs(residual).max(), 1e-9 * numpy.abs(gravity).max())
        self.assertAllClose(state.v, 0.0, atol=0.0)
        self.assertAllClose(state.w, 0.0, atol=0.0)

    def test_uniform_theta_profile(self):
        mesh = self.mesh
        state = hydrostatic_state(mesh, self.constants, lambda x, z: numpy.full_like(z, 300.0))
        theta = diagnose_theta(mesh, state.rho, state.theta_density)
        self.assertAllClose(mesh.evaluate(SPACE_T, theta.values), 300.0, rtol=1e-10, atol=0.0)
        rho = mesh.evaluate(SPACE_Q, state.rho)
        self.assertTrue(numpy.all(rho > 0.0))
        self.assertGreater(rho[numpy.argmin(mesh.quad_z)], rho[numpy.argmax(mesh.quad_z)])

    def test_balance_budget(self):
        with self.assertRaises(ConvergenceError):
            hydrostatic_state(self.mesh, self.constants, lambda x, z: numpy.full_like(z, 300.0), tol=1e-30,
                              max_iter=1)

    def test_column_perturbation_keeps_density(self):
        mesh = build_mesh(1, 8, 3, 1000.0, 10000.0)
        constants = self.constants
        state = column_state(mesh, constants)
        background = hydrostatic_state(mesh, constants, lambda x, z: numpy.full_like(z, 300.0))
        self.assertAllClose(state.rho, background.rho, atol=0.0)
        self.assertGreater(state.theta_density.sum(), background.theta_density.sum())


class StepperTestCase(NumericTestCase):
    """Single steps of the three stage HEVI scheme on the small mesh"""

    def setUp(self):
        self.mesh = build_mesh(**SMALL_MESH)
        self.constants = PhysConstants()
        self.dynamics = SliceDynamics(self.mesh, self.constants, SliceOptions(picard_tol=TEST_PICARD_TOL))
        self.state = bubble_state(self.mesh, self.constants)

    def test_zero_step_is_identity(self):
        outcome = self.dynamics.step(self.state, 0.0)
        for name in ("v", "w", "rho", "theta_density"):
            self.assertAllClose(getattr(outcome.state, name), getattr(self.state, name), atol=0.0)
        self.assertEqual(outcome.state.t, self.state.t)
        self.assertEqual(outcome.report.picard_iterations, 1)
        self.assertEqual(outcome.report.dH, 0.0)

    def test_leapfrog_needs_previous_level(self):
        with self.assertRaises(StartupError):
            self.dynamics.step1_horizontal(self.state, BUBBLE_DT, mode=MODE_LEAPFROG)

    def test_step_advances_time(self):
        outcome = self.dynamics.step(self.state, BUBBLE_DT)
        self.assertAlmostEqual(outcome.state.t, BUBBLE_DT, places=15)
        self.assertGreater(outcome.report.picard_iterations, 0)
        self.assertLessEqual(outcome.report.implicit_residual, TEST_PICARD_TOL)
        outcome.state.check(self.mesh)

    def test_conserves_mass_and_theta(self):
        mesh = self.mesh
        state, previous = self.state, None
        mass_0, theta_0 = mass_and_theta_totals(mesh, state)
        for _ in range(3):
            state, previous = self.dynamics.step(state, BUBBLE_DT, previous=previous).state, state
        mass, theta = mass_and_theta_totals(mesh, state)
        self.assertRelativeClose(mass, mass_0, 1e-13)
        self.assertRelativeClose(theta, theta_0, 1e-13)
        self.assertRelativeClose(state.rho.sum(), self.state.rho.sum(), 1e-13)

    def test_balanced_rest_state_stays_at_rest(self):
        mesh = build_mesh(6, 9, 3, 1000.0, 1500.0)
        dynamics = SliceDynamics(mesh, self.constants, SliceOptions(picard_tol=TEST_PICARD_TOL))
        state, previous = hydrostatic_state(mesh, self.constants, lambda x, z: numpy.full_like(z, 300.0)), None
        energy_0 = total_energy(mesh, state, self.constants).H
        for _ in range(100):
            state, previous = dynamics.step(state, BUBBLE_DT, previous=previous).state, state
        self.assertLess(numpy.abs(state.w).max(), 1e-8)
        self.assertLess(numpy.abs(state.v).max(), 1e-8)
        self.assertLess(abs(total_energy(mesh, state, self.constants).H - energy_0) / energy_0, 1e-9)

    def test_picard_budget(self):
        dynamics = SliceDynamics(self.mesh, self.constants, SliceOptions(picard_tol=1e-30, picard_max_iter=2))
        with self.assertRaises(ConvergenceError) as ctx:
            dynamics.step(self.state, BUBBLE_DT)
        self.assertEqual(ctx.exception.iterations, 2)

    def test_negative_density_is_rejected(self):
        state = self.state.replace(rho=-self.state.rho)
        with self.assertRaises(ThermodynamicDomainError):
            self.dynamics.step(state, BUBBLE_DT)

    def test_wrong_state_length(self):
        with self.assertRaises(ValueError):
            StateVector(v=numpy.zeros(3), w=self.state.w, rho=self.state.rho,
                        theta_density=self.state.theta_density).check(self.mesh)


class FluxAverageTestCase(NumericTestCase):
    def setUp(self):
        self.mesh = build_mesh(4, 4, 3, 1000.0, 1000.0)
        self.dynamics = SliceDynamics(self.mesh, PhysConstants())

    def test_exact_for_linear_in_time_fields(self):
        """``V_bar`` is the projection of the time average of rho v when rho and v are linear in time"""
        mesh, rng = self.mesh, self.rng
        rho = [mesh.project(SPACE_Q, 1.0 + 0.1 * rng.random(mesh.n_quad)) for _ in range(2)]
        v = [rng.standard_normal(mesh.dimension(SPACE_U_PAR)) for _ in range(2)]
        w = [rng.standard_normal(mesh.dimension(SPACE_U_PERP)) for _ in range(2)]
        fluxes = self.dynamics.flux_time_averages(v[0], v[1], w[0], w[1], rho[0], rho[1], 300.0 * rho[0],
                                                  300.0 * rho[1])
        nodes, weights = gauss_legendre(3)
        average = numpy.zeros(mesh.n_quad)
        for node, weight in zip(nodes, weights):
            tau = 0.5 * (node + 1.0)
            average += 0.5 * weight * (mesh.evaluate(SPACE_Q, (1.0 - tau) * rho[0] + tau * rho[1])
                                       * mesh.evaluate(SPACE_U_PAR, (1.0 - tau) * v[0] + tau * v[1]))
        expected = mesh.project(SPACE_U_PAR, average)
        self.assertLess(numpy.abs(fluxes.v_bar - expected).max() / numpy.abs(expected).max(), 1e-13)

    def test_discrete_gradient_is_exact_secant(self):
        constants = PhysConstants()
        dynamics = SliceDynamics(self.mesh, constants, SliceOptions(exner_average=EXNER_DISCRETE_GRADIENT))
        theta_n = numpy.array([300.0, 350.0, 400.0])
        theta_next = numpy.array([310.0, 350.0 * (1.0 + 1e-6), 380.0])
        average = dynamics.exner_average_points(theta_n, theta_next)
        secant = internal_energy_points(theta_next, constants) - internal_energy_points(theta_n, constants)
        self.assertAllClose(average * (theta_next - theta_n), secant, rtol=1e-8, atol=0.0)

    def test_trapezoidal_average(self):
        theta_n, theta_next = numpy.array([300.0]), numpy.array([320.0])
        average = self.dynamics.exner_average_points(theta_n, theta_next)
        constants = self.dynamics.constants
        expected = 0.5 * (exner_points(theta_n, constants) + exner_points(theta_next, constants))
        self.assertAllClose(average, expected, atol=0.0)


class ViscosityTestCase(NumericTestCase):
    def setUp(self):
        self.mesh = build_mesh(**SMALL_MESH)
        self.dynamics = SliceDynamics(self.mesh, PhysConstants(), SliceOptions(visc=624.78))

    def test_zero_coefficient(self):
        v = self.rng.standard_normal(self.mesh.dimension(SPACE_U_PAR))
        self.assertAllClose(self.dynamics.biharmonic_viscosity(v, coeff=0.0), 0.0, atol=0.0)

    def test_uniform_wind_is_untouched(self):
        mesh = self.mesh
        v = mesh.project(SPACE_U_PAR, numpy.full(mesh.n_quad, 3.0))
        self.assertAllClose(self.dynamics.biharmonic_viscosity(v), 0.0, atol=1e-9)

    def test_dissipative(self):
        mesh = self.mesh
        v = self.rng.standard_normal(mesh.dimension(SPACE_U_PAR))
        tendency = self.dynamics.biharmonic_viscosity(v)
        self.assertLess(v.dot(mesh.mass(SPACE_U_PAR).dot(tendency)), 0.0)


class EnergyTestCase(NumericTestCase):
    def test_exchange_terms_cancel(self):
        mesh = build_mesh(**SMALL_MESH)
        constants = PhysConstants()
        dynamics = SliceDynamics(mesh, constants)
        state = bubble_state(mesh, constants).replace(v=self.rng.standard_normal(mesh.dimension(SPACE_U_PAR)),
                                                      w=self.rng.standard_normal(mesh.dimension(SPACE_U_PERP)))
        terms = dynamics.energy_exchange_terms(state)
        self.assertLess(abs(terms.sum()), 1e-10 * numpy.abs(terms).sum())

    def test_column_conserves_energy(self):
        """Vertical-only steps of the perturbed column with the trapezoidal Exner average"""
        config = RunConfig.for_experiment(EXPERIMENT_COLUMN, picard_tol=TEST_PICARD_TOL)
        self.assertEqual((config.nz, config.exner_average), (20, EXNER_TRAPEZOIDAL))
        result = run_column(config)
        energies = numpy.array([row[ENERGY_COLUMNS.index("H")] for row in result.rows])
        self.assertEqual(len(energies), 51)
        self.assertLess(numpy.abs(numpy.diff(energies) / energies[:-1]).max(), 1e-10)
        self.assertAllClose(result.final_state.v, 0.0, atol=0.0)
        self.assertGreater(numpy.abs(result.final_state.w).max(), 0.0)

    def test_column_with_discrete_gradient_average(self):
        config = RunConfig.for_experiment(EXPERIMENT_COLUMN, picard_tol=DISCRETE_GRADIENT_PICARD_TOL, t_end=5.0,
                                          exner_average=EXNER_DISCRETE_GRADIENT)
        result = run_column(config)
        energies = numpy.array([row[ENERGY_COLUMNS.index("H")] for row in result.rows])
        self.assertEqual(len(energies), 11)
        self.assertLess(numpy.abs(numpy.diff(energies) / energies[:-1]).max(), 1e-9)
        self.assertTrue(all(report.implicit_residual <= DISCRETE_GRADIENT_PICARD_TOL for report in result.reports))

    def test_run_column_rejects_other_experiments(self):
        with self.assertRaises(ConfigError):
            run_column(RunConfig())

    @data(EXNER_TRAPEZOIDAL, EXNER_DISCRETE_GRADIENT)
    def test_energy_balance_identity(self, exner_average):
        """The energy change of a step up to ``v'`` is the horizontal error ``V_bar^T M (v' - v^{n+1})`` to within
        ten times the implicit solve tolerance"""
        mesh = build_mesh(**BALANCE_MESH)
        constants = PhysConstants()
        dynamics = SliceDynamics(mesh, constants, SliceOptions(picard_tol=TEST_PICARD_TOL,
                                                               exner_average=exner_average))
        state, previous = bubble_state(mesh, constants), None
        tolerance = 10.0 * TEST_PICARD_TOL
        for _ in range(int(BUBBLE_BALANCE_STEPS)):
            outcome = dynamics.step(state, BUBBLE_DT, previous=previous)
            energy_n = total_energy(mesh, state, constants).H
            energy_next = total_energy(mesh, outcome.state, constants).H
            provisional = total_energy(mesh, outcome.state.replace(v=outcome.v_prime), constants).H
            self.assertLess(abs(outcome.balance.vertical_part), tolerance * energy_n)
            self.assertLess(abs(provisional - energy_n - outcome.balance.vertical_part
                                - outcome.balance.horizontal_error), tolerance * energy_n)
            self.assertLess(abs(provisional - energy_n - outcome.report.horizontal_error), tolerance * energy_n)
            self.assertEqual(outcome.report.dH, energy_next - energy_n)
            state, previous = outcome.state, state


class RunSimulationTestCase(NumericTestCase):
    def setUp(self):
        self.config = RunConfig.for_experiment("bubble", nx=4, nz=4, dt=BUBBLE_DT, t_end=3 * BUBBLE_DT,
                                               snapshot_interval=BUBBLE_DT)

    def test_first_step_euler_then_leapfrog(self):
        with mock.patch.object(SliceDynamics, "step", autospec=True, side_effect=SliceDynamics.step) as step:
            run_simulation(self.config)
        previous = [call[1].get("previous") for call in step.call_args_list]
        self.assertEqual(len(previous), 3)
        self.assertIsNone(previous[0])
        self.assertIsNotNone(previous[1])
        self.assertIsNotNone(previous[2])

    def test_observer_receives_rows_and_snapshots(self):
        observer = mock.Mock()
        result = run_simulation(self.config, observer=observer)
        self.assertEqual(observer.on_row.call_count, 4)
        self.assertEqual(observer.on_snapshot.call_count, 4)
        self.assertEqual([call[0][0] for call in observer.on_snapshot.call_args_list], [0, 1, 2, 3])
        self.assertEqual(len(result.rows), 4)
        self.assertEqual(len(result.rows[0]), len(ENERGY_COLUMNS))
        self.assertEqual(result.rows[0][ENERGY_COLUMNS.index("dH")], 0.0)
        self.assertEqual(len(result.reports), 3)
        self.assertEqual(len(result.centroid_heights), 4)

    def test_given_initial_state(self):
        mesh = build_mesh(4, 4, 3, 1000.0, 1500.0)
        state = bubble_state(mesh, PhysConstants())
        result = run_simulation(self.config.replace(t_end=BUBBLE_DT), state=state)
        self.assertEqual(len(result.rows), 2)

    def test_reports_mass_and_theta_drift(self):
        with mock.patch("hevi_slice.hevi_stepper.simulation.LOG") as log:
            result = run_simulation(self.config)
        self.assertLess(result.mass_drift, 1e-12)
        self.assertLess(result.theta_drift, 1e-12)
        message, args = log.info.call_args[0][0], log.info.call_args[0][1:]
        self.assertIn("mass drift", message)
        self.assertEqual(args[-2:], (result.mass_drift, result.theta_drift))

    def test_stability_has_no_time_loop(self):
        with self.assertRaises(ConfigError):
            run_simulation(RunConfig.for_experiment("stability"))


class BubbleAcceptanceTestCase(NumericTestCase):
    """Desk scale rising bubble without dissipation, with and without upwinding"""
    _results = {}

    @classmethod
    def _run(cls, upwind):
        if upwind not in cls._results:
            config = RunConfig.for_experiment("bubble", snapshot_interval=0.0, upwind=upwind)
            cls._results[upwind] = (config, run_simulation(config))
        return cls._results[upwind]

    @slow_test
    @data(False, True)
    def test_bubble_rises(self, upwind):
        config, result = self._run(upwind)
        self.assertEqual((config.nx, config.nz, config.dt, config.t_end, config.visc), (12, 18, 0.05, 200.0, 0.0))
        times = numpy.array([row[ENERGY_COLUMNS.index("t")] for row in result.rows])
        heights = numpy.array(result.centroid_heights)[times > 20.0]
        self.assertTrue(numpy.all(numpy.diff(heights) > 0.0))
        energies = numpy.array([row[ENERGY_COLUMNS.index("H")] for row in result.rows])
        self.assertTrue(numpy.all(numpy.diff(energies) <= 10.0 * config.picard_tol * numpy.abs(energies[:-1])))
        self.assertLess(result.mass_drift, 1e-12)
        self.assertLess(result.theta_drift, 1e-12)
        self.assertAlmostEqual(result.final_state.t, config.t_end, places=9)
        self.assertTrue(numpy.all(numpy.isfinite(result.final_state.v)))

    @slow_test
    def test_upwinding_limits_overshoot(self):
        _, plain = self._run(False)
        _, upwinded = self._run(True)
        self.assertLess(upwinded.max_overshoot, plain.max_overshoot)
        dh_plain = plain.rows[-1][ENERGY_COLUMNS.index("dH")]
        dh_upwinded = upwinded.rows[-1][ENERGY_COLUMNS.index("dH")]
        self.assertLess(abs(dh_upwinded - dh_plain), 0.1 * abs(dh_plain))
