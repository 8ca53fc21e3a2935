"""Equation of state and the variational derivatives of the Hamiltonian

    H = int 1/2 rho |u|^2 + rho g z + (c_v / c_p) Theta Pi(Theta) dx dz,     Pi(Theta) = c_p (R Theta / p0)^(R / c_v)

together with the potential temperature diagnosis (optionally upwinded in the vertical) and the entropy diagnostic.
Every integral uses the model quadrature of the mesh so the derivatives here are the exact discrete derivatives of
:func:`total_energy`.
"""
# stdlib
from dataclasses import dataclass

import numpy

from hevi_slice import loggingtools
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import SPACE_U_PAR
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.derham_mesh import FieldCoefficients
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import DegenerateStateError
from hevi_slice.exceptions import NumericError
from hevi_slice.exceptions import ThermodynamicDomainError
from hevi_slice.numkit import lu_factor
from hevi_slice.numkit import sparse_from_triplets
from hevi_slice.polybasis import lagrange_values

LOG = loggingtools.getLogger()

#: Fraction of the step used for the downwind shift of the test functions
DEFAULT_UPWIND_FRACTION = 0.5


@dataclass(frozen=True)
class PhysConstants(object):
    """Dry air constants in SI units"""
    cp: float = 1004.5
    cv: float = 717.5
    R: float = 287.0  # pylint: disable=invalid-name
    p0: float = 1.0e5
    g: float = 9.80616

    def __post_init__(self):
        for name in ("cp", "cv", "R", "p0"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(key=name, reason="must be positive")
        if self.g < 0.0:
            raise ConfigError(key="g", reason="must not be negative")
        if abs(self.R - (self.cp - self.cv)) > 1e-9 * self.cp:
            raise ConfigError(key="R", reason="R=%r is not cp - cv = %r" % (self.R, self.cp - self.cv))

    @property
    def exner_exponent(self):
        """R / c_v, the exponent of the Exner function of Theta"""
        return self.R / self.cv


@dataclass(frozen=True)
class EnergyBreakdown(object):
    """Domain integrated kinetic, potential and internal energy in J per metre of slice depth"""
    K: float  # pylint: disable=invalid-name
    P: float  # pylint: disable=invalid-name
    I: float  # pylint: disable=invalid-name

    @property
    def H(self):  # pylint: disable=invalid-name
        return self.K + self.P + self.I


def _require_positive(values, field_name):
    minimum = float(numpy.min(values)) if numpy.size(values) else 0.0
    if not minimum > 0.0 or not numpy.all(numpy.isfinite(values)):
        raise ThermodynamicDomainError(field_name=field_name, minimum=minimum)


def exner_points(theta_density, constants):
    """Pointwise Exner pressure of density weighted potential temperature

    :raises: ThermodynamicDomainError
    """
    _require_positive(theta_density, "Theta")
    return constants.cp * (constants.R * theta_density / constants.p0) ** constants.exner_exponent


def exner_derivative_points(theta_density, constants):
    """d Pi / d Theta pointwise"""
    return constants.exner_exponent * exner_points(theta_density, constants) / theta_density


def internal_energy_points(theta_density, constants):
    """(c_v / c_p) Theta Pi(Theta); its Theta derivative is Pi"""
    return (constants.cv / constants.cp) * theta_density * exner_points(theta_density, constants)


def exner(mesh, theta_density, constants):
    """L2 projection of the pointwise Exner function into Q.

    :param theta_density: Q coefficients of Theta
    :rtype: numpy.ndarray
    :raises: ThermodynamicDomainError
    """
    theta_points = mesh.evaluate(SPACE_Q, theta_density)
    return mesh.project(SPACE_Q, exner_points(theta_points, constants))


def kinetic_points(mesh, v, w):
    """1/2 |u|^2 at the quadrature points"""
    v_points = mesh.evaluate(SPACE_U_PAR, v)
    w_points = mesh.evaluate(SPACE_U_PERP, w)
    return 0.5 * (v_points ** 2 + w_points ** 2)


def bernoulli(mesh, v, w, g, height=None):
    """L2 projection of ``1/2 |u|^2 + g z`` into Q.

    :param height: Q coefficients of the height field; the exact height at the quadrature points when omitted
    :rtype: numpy.ndarray
    """
    z_points = mesh.quad_z if height is None else mesh.evaluate(SPACE_Q, height)
    return mesh.project(SPACE_Q, kinetic_points(mesh, v, w) + g * z_points)


def total_energy(mesh, state, constants):
    """Kinetic, potential and internal energy of `state` by model quadrature.

    :type state: hevi_slice.hevi_stepper.StateVector
    :rtype: EnergyBreakdown
    :raises: ThermodynamicDomainError
    """
    rho_points = mesh.evaluate(SPACE_Q, state.rho)
    theta_points = mesh.evaluate(SPACE_Q, state.theta_density)
    _require_positive(rho_points, "rho")
    kinetic = mesh.integrate(rho_points * kinetic_points(mesh, state.v, state.w))
    potential = mesh.integrate(rho_points * constants.g * mesh.quad_z)
    internal = mesh.integrate(internal_energy_points(theta_points, constants))
    return EnergyBreakdown(K=kinetic, P=potential, I=internal)


def downwind_coords(zeta, w_local, dt, upwind_fraction=DEFAULT_UPWIND_FRACTION):
    """First order downwind shift of reference coordinates, ``zeta + f dt w``, clamped to [-1, 1].

    :param zeta: Reference coordinates in [-1, 1]
    :param w_local: Vertical velocity in reference units (d zeta / dt) interpolated within the element
    :param dt: Time step
    :param upwind_fraction: The factor f; 0.5 by default
    :rtype: numpy.ndarray
    """
    zeta = numpy.asarray(zeta, dtype=float)
    shift = upwind_fraction * dt * numpy.asarray(w_local, dtype=float)
    if numpy.size(shift) and numpy.abs(shift).max() > 2.0:
        LOG.warning("Downwind shift of %.3g reference units exceeds the element; clamping", numpy.abs(shift).max())
    return numpy.clip(zeta + shift, -1.0, 1.0)


def _downwind_test_evaluation(mesh, w, dt, upwind_fraction):
    """Evaluation matrix of the T basis with its vertical factor taken at the downwind coordinates"""
    x_ax, z_ax = mesh.x_axis, mesh.z_axis
    w_local = mesh.evaluate(SPACE_U_PERP, w) * (2.0 / z_ax.h)
    z_elements = numpy.tile(z_ax.quad_element, x_ax.n_quad)
    shifted = downwind_coords(numpy.tile(z_ax.quad_ref, x_ax.n_quad), w_local, dt, upwind_fraction)
    z_vals = lagrange_values(z_ax.nodal_basis.nodes, shifted)
    z_cols = z_ax.nodal_index(z_elements[:, None], numpy.arange(z_ax.p + 1)[None, :])

    # the x factor is static: element-local edge values repeated for every vertical point
    qx = numpy.repeat(numpy.arange(x_ax.n_quad), z_ax.n_quad)
    x_local = x_ax.edge_basis.evaluate(x_ax.ref_points) * (2.0 / x_ax.h)
    x_vals = x_local[qx % x_ax.points_per_element]
    x_cols = x_ax.quad_element[qx][:, None] * x_ax.p + numpy.arange(x_ax.p)[None, :]

    cols = x_cols[:, :, None] * z_ax.nodal_count + z_cols[:, None, :]
    vals = x_vals[:, :, None] * z_vals[:, None, :]
    rows = numpy.broadcast_to(numpy.arange(mesh.n_quad)[:, None, None], vals.shape)
    return sparse_from_triplets(rows.ravel(), cols.ravel(), vals.ravel(), (mesh.n_quad, mesh.dimension(SPACE_T)))


def theta_system(mesh, rho, theta_density, upwind=False, w=None, dt=0.0, upwind_fraction=DEFAULT_UPWIND_FRACTION):
    """Matrix and right side of the potential temperature diagnosis.

    :return: (test-by-trial matrix, right side, trial-side matrix without upwinding)
    """
    rho_points = mesh.evaluate(SPACE_Q, rho)
    if not numpy.all(rho_points > 0.0):
        raise DegenerateStateError(field_name="rho")
    theta_points = mesh.evaluate(SPACE_Q, theta_density)
    trial = mesh.evaluation(SPACE_T)
    if upwind and w is not None and dt != 0.0:
        test = _downwind_test_evaluation(mesh, w, dt, upwind_fraction)
    else:
        test = trial
    weights = mesh.quad_weights
    matrix = (test.T.multiply(weights * rho_points)).dot(trial).tocsr()
    rhs = test.T.dot(weights * theta_points)
    return matrix, rhs, test


def diagnose_theta(mesh, rho, theta_density, upwind=False, w=None, dt=0.0,
                   upwind_fraction=DEFAULT_UPWIND_FRACTION):
    """Potential temperature in the vertical trace space from ``<beta_test, rho beta> theta = <beta_test, Theta>``.

    With upwinding the vertical factor of every test function is evaluated at the downwind coordinate of its
    quadrature point; trial functions are unchanged.

    :rtype: FieldCoefficients
    :raises: DegenerateStateError
    """
    matrix, rhs, _ = theta_system(mesh, rho, theta_density, upwind=upwind, w=w, dt=dt,
                                  upwind_fraction=upwind_fraction)
    try:
        factor = lu_factor(matrix)
    except NumericError:
        raise DegenerateStateError(field_name="rho")
    return FieldCoefficients(SPACE_T, factor.solve(rhs), "K")


def entropy_diagnostic(mesh, theta, rho, constants, s0=0.0):
    """``int rho (c_p log theta + s0)``

    :param theta: T coefficients of potential temperature
    :param rho: Q coefficients of density
    :raises: ThermodynamicDomainError
    """
    theta_values = theta.values if isinstance(theta, FieldCoefficients) else theta
    theta_points = mesh.evaluate(SPACE_T, theta_values)
    _require_positive(theta_points, "theta")
    rho_points = mesh.evaluate(SPACE_Q, rho)
    return mesh.integrate(rho_points * (constants.cp * numpy.log(theta_points) + s0))
