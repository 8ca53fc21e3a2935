"""Initial states: discrete hydrostatic balance, the warm bubble and the perturbed column"""
# stdlib
import functools

import numpy
import scipy.sparse

from hevi_slice import loggingtools
from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_T
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.derham_mesh import mass_matrix
from hevi_slice.exceptions import ConvergenceError
from hevi_slice.hevi_stepper.state import StateVector
from hevi_slice.numkit import lu_factor
from hevi_slice.thermo import diagnose_theta
from hevi_slice.thermo import exner_derivative_points
from hevi_slice.thermo import exner_points

LOG = loggingtools.getLogger()

BALANCE_TOL = 1e-13
BALANCE_MAX_ITER = 50


def cosine_bump(distance, amplitude, radius):
    """``amplitude / 2 (1 + cos(pi r / radius))`` inside the radius, zero outside"""
    distance = numpy.asarray(distance, dtype=float)
    inside = distance <= radius
    return numpy.where(inside, 0.5 * amplitude * (1.0 + numpy.cos(numpy.pi * numpy.minimum(distance / radius, 1.0))),
                       0.0)


def bubble_profile(x, z, theta0=300.0, dtheta=0.5, rc=250.0, xc=500.0, zc=350.0):
    """Potential temperature of the warm bubble on a uniform background"""
    return theta0 + cosine_bump(numpy.hypot(x - xc, z - zc), dtheta, rc)


def _balance_residual(mesh, constants, theta_density, rho, theta_points):
    """``E_perp^T <gamma, g z> + M_perp,theta M_perp^-1 E_perp^T <gamma, Pi>`` at rest"""
    e_perp = mesh.e32_perp
    pi_load = mesh.dual(SPACE_Q, exner_points(mesh.evaluate(SPACE_Q, theta_density), constants))
    gradient = mesh.solve_mass(SPACE_U_PERP, e_perp.T.dot(pi_load))
    return (e_perp.T.dot(constants.g * mesh.height_dual)
            + mesh.dual(SPACE_U_PERP, theta_points * mesh.evaluate(SPACE_U_PERP, gradient)))


def hydrostatic_state(mesh, constants, theta_profile, tol=BALANCE_TOL, max_iter=BALANCE_MAX_ITER):
    """State at rest in exact discrete vertical balance with potential temperature ``theta_profile(x, z)``.

    Theta is the unknown; density follows as the projection of ``Theta / theta_profile``.  The balance equations
    of every interior w node are closed by fixing the mass of every x column to that of the first guess
    ``Pi = c_p - g z / theta``.  Newton iteration with theta frozen in the Jacobian.

    :rtype: StateVector
    :raises: ConvergenceError
    """
    theta_points = numpy.asarray(theta_profile(mesh.quad_x, mesh.quad_z), dtype=float)
    density_map = mesh.inverse_mass(SPACE_Q).dot(mass_matrix(mesh, SPACE_Q, 1.0 / theta_points))
    column_sum = scipy.sparse.kron(scipy.sparse.identity(mesh.x_axis.edge_count),
                                   numpy.ones((1, mesh.z_axis.edge_count)), format="csr")

    exner_guess = constants.cp - constants.g * mesh.quad_z / theta_points
    theta_density = mesh.project(SPACE_Q, constants.p0 / constants.R
                                 * (exner_guess / constants.cp) ** (constants.cv / constants.R))
    target_mass = column_sum.dot(density_map.dot(theta_density))
    mass_rows = column_sum.dot(density_map)
    e_perp = mesh.e32_perp.astype(float)
    m_perp_inv = mesh.inverse_mass(SPACE_U_PERP)

    history = []
    for iteration in range(1, max_iter + 1):
        rho = density_map.dot(theta_density)
        theta = mesh.evaluate(SPACE_T, diagnose_theta(mesh, rho, theta_density).values)
        residual = numpy.concatenate([_balance_residual(mesh, constants, theta_density, rho, theta),
                                      column_sum.dot(rho) - target_mass])
        dpi = exner_derivative_points(mesh.evaluate(SPACE_Q, theta_density), constants)
        balance_rows = mass_matrix(mesh, SPACE_U_PERP, theta).dot(
            m_perp_inv.dot(e_perp.T.dot(mass_matrix(mesh, SPACE_Q, dpi))))
        jacobian = scipy.sparse.vstack([balance_rows, mass_rows], format="csc")
        correction = lu_factor(jacobian).solve(-residual)
        theta_density = theta_density + correction
        size = float(numpy.abs(correction).max() / numpy.abs(theta_density).max())
        history.append(size)
        LOG.debug("Hydrostatic iteration %d: relative correction %.3e", iteration, size)
        if size <= tol:
            break
        if len(history) > 2 and size < 1e3 * tol and size >= history[-2]:
            LOG.debug("Hydrostatic iteration stalled at round-off after %d iterations", iteration)
            break
    else:
        raise ConvergenceError(iterations=max_iter, residual_history=history[-5:])

    rho = density_map.dot(theta_density)
    LOG.info("Hydrostatic state balanced after %d iterations", iteration)
    return StateVector.at_rest(mesh, rho=rho, theta_density=theta_density)


def bubble_state(mesh, constants, theta0=300.0, dtheta=0.5, rc=250.0, xc=500.0, zc=350.0):
    """Warm bubble in discrete hydrostatic balance.

    :rtype: StateVector
    """
    profile = functools.partial(bubble_profile, theta0=theta0, dtheta=dtheta, rc=rc, xc=xc, zc=zc)
    return hydrostatic_state(mesh, constants, profile)


def column_state(mesh, constants, theta0=300.0, dtheta=0.5, rc=2000.0, zc=5000.0):
    """Balanced column of uniform theta whose Theta is then raised by a vertical cosine bump at fixed density

    :rtype: StateVector
    """
    background = hydrostatic_state(mesh, constants, lambda x, z: numpy.full_like(z, theta0))
    rho_points = mesh.evaluate(SPACE_Q, background.rho)
    theta_points = theta0 + cosine_bump(numpy.abs(mesh.quad_z - zc), dtheta, rc)
    return background.replace(theta_density=mesh.project(SPACE_Q, rho_points * theta_points))
