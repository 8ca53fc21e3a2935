"""One dimensional Gauss-Lobatto-Legendre nodal and edge bases.

The nodal basis is the Lagrange basis on the GLL points.  The edge basis is built from the nodal derivatives,

    e_j = - sum_{i <= j} d l_i / d xi,     j = 0 .. p-1,

so that the derivative of a nodal expansion is the edge expansion of its nodal differences,
``d/dxi (sum_i f_i l_i) = sum_j (f_{j+1} - f_j) e_j``, and ``e_j`` integrates to one over the j-th inter-node interval
and to zero over every other one.

The same construction on the reference interval mapped to ``[t^n, t^{n+1}]`` gives the temporal pair used by the
time integrator, see :class:`TemporalPair`.
"""
# stdlib
from dataclasses import dataclass
from dataclasses import field

import numpy
from numpy.polynomial import legendre

from hevi_slice import loggingtools
from hevi_slice.exceptions import ConvergenceError
from hevi_slice.exceptions import InvalidDegreeError

LOG = loggingtools.getLogger()

NEWTON_TOL = 1e-15
NEWTON_MAX_ITER = 100

#: Extra Gauss-Legendre points used by the over-integration switch
OVER_INTEGRATION_EXTRA_POINTS = 2


def lagrange_values(nodes, points):
    """Values of every Lagrange polynomial on `nodes` at `points`.

    :return: array of shape (len(points), len(nodes))
    """
    nodes = numpy.asarray(nodes, dtype=float)
    points = numpy.atleast_1d(numpy.asarray(points, dtype=float))
    n_nodes = nodes.size
    values = numpy.ones((points.size, n_nodes))
    for i in range(n_nodes):
        for m in range(n_nodes):
            if m != i:
                values[:, i] *= (points - nodes[m]) / (nodes[i] - nodes[m])
    return values


def lagrange_derivatives(nodes, points):
    """First derivatives of every Lagrange polynomial on `nodes` at `points`.

    :return: array of shape (len(points), len(nodes))
    """
    nodes = numpy.asarray(nodes, dtype=float)
    points = numpy.atleast_1d(numpy.asarray(points, dtype=float))
    n_nodes = nodes.size
    derivs = numpy.zeros((points.size, n_nodes))
    for i in range(n_nodes):
        for k in range(n_nodes):
            if k == i:
                continue
            term = numpy.full(points.size, 1.0 / (nodes[i] - nodes[k]))
            for m in range(n_nodes):
                if m != i and m != k:
                    term *= (points - nodes[m]) / (nodes[i] - nodes[m])
            derivs[:, i] += term
    return derivs


def _lobatto_points(p):
    """Newton iteration for the roots of (1 - x^2) P_p'(x), started from the Chebyshev-Gauss-Lobatto points"""
    n_points = p + 1
    x = -numpy.cos(numpy.pi * numpy.arange(n_points) / p)
    # Legendre-Vandermonde columns P_0 .. P_p evaluated by the three term recurrence
    vandermonde = numpy.zeros((n_points, n_points))
    for iteration in range(1, NEWTON_MAX_ITER + 1):
        x_old = x.copy()
        vandermonde[:, 0] = 1.0
        vandermonde[:, 1] = x
        for k in range(2, n_points):
            vandermonde[:, k] = ((2 * k - 1) * x * vandermonde[:, k - 1] - (k - 1) * vandermonde[:, k - 2]) / k
        x = x_old - (x * vandermonde[:, p] - vandermonde[:, p - 1]) / (n_points * vandermonde[:, p])
        if numpy.abs(x - x_old).max() <= NEWTON_TOL:
            LOG.debug("GLL nodes for p=%d converged after %d iterations", p, iteration)
            break
    else:
        raise ConvergenceError(iterations=NEWTON_MAX_ITER, residual_history=[numpy.abs(x - x_old).max()])

    vandermonde[:, 0] = 1.0
    vandermonde[:, 1] = x
    for k in range(2, n_points):
        vandermonde[:, k] = ((2 * k - 1) * x * vandermonde[:, k - 1] - (k - 1) * vandermonde[:, k - 2]) / k
    weights = 2.0 / (p * n_points * vandermonde[:, p] ** 2)

    # exact endpoints and symmetry
    x[0], x[-1] = -1.0, 1.0
    x = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return x, weights


@dataclass(frozen=True)
class NodalBasis(object):
    """Lagrange basis on the p+1 GLL points of [-1, 1]"""
    degree: int
    nodes: numpy.ndarray = field(repr=False)
    quadrature_weights: numpy.ndarray = field(repr=False)
    differentiation_matrix: numpy.ndarray = field(repr=False)

    def evaluate(self, points):
        """:return: (len(points), p+1) Lagrange values"""
        return lagrange_values(self.nodes, points)

    def derivative(self, points):
        """:return: (len(points), p+1) Lagrange derivatives"""
        return lagrange_derivatives(self.nodes, points)

    def incidence(self):
        """The 1D nodal-to-edge incidence matrix E10, shape (p, p+1)"""
        incidence = numpy.zeros((self.degree, self.degree + 1))
        idx = numpy.arange(self.degree)
        incidence[idx, idx] = -1.0
        incidence[idx, idx + 1] = 1.0
        return incidence


@dataclass(frozen=True)
class EdgeBasis(object):
    """The p edge polynomials of degree p-1 derived from a :class:`NodalBasis`"""
    nodal: NodalBasis

    @property
    def size(self):
        return self.nodal.degree

    def evaluate(self, points):
        """:return: (len(points), p) edge values on the reference interval"""
        derivs = self.nodal.derivative(points)
        return -numpy.cumsum(derivs, axis=1)[:, :self.size]

    def interval_integrals(self):
        """Integrals of every edge function over every inter-node interval, shape (p intervals, p functions).

        Uses Gauss-Legendre with p points per interval, exact for the degree p-1 integrands.
        """
        gauss_x, gauss_w = legendre.leggauss(max(self.size, 1))
        nodes = self.nodal.nodes
        integrals = numpy.zeros((self.size, self.size))
        for k in range(self.size):
            half = 0.5 * (nodes[k + 1] - nodes[k])
            points = nodes[k] + half * (gauss_x + 1.0)
            integrals[k] = (half * gauss_w).dot(self.evaluate(points))
        return integrals


def gll_nodes(p):
    """Builds the GLL nodal basis of degree `p`.

    :param p: Polynomial degree, at least 1
    :type p: int
    :rtype: NodalBasis
    :raises: InvalidDegreeError
    """
    if int(p) != p or p < 1:
        raise InvalidDegreeError(degree=p)
    p = int(p)
    nodes, weights = _lobatto_points(p)
    differentiation = lagrange_derivatives(nodes, nodes)
    return NodalBasis(degree=p, nodes=nodes, quadrature_weights=weights, differentiation_matrix=differentiation)


def edge_basis(nodal):
    """Edge basis paired with `nodal`

    :type nodal: NodalBasis
    :rtype: EdgeBasis
    """
    return EdgeBasis(nodal=nodal)


def gauss_legendre(n_points):
    """Gauss-Legendre points and weights on [-1, 1]"""
    return legendre.leggauss(n_points)


def quadrature_rule(p, over_integrate=False):
    """Element quadrature used for spatial integrals.

    GLL collocation with p+1 points is the default (inexact for products of two degree-p polynomials); the
    over-integration switch uses p+1+2 Gauss-Legendre points.

    :return: (points, weights)
    """
    if over_integrate:
        return gauss_legendre(p + 1 + OVER_INTEGRATION_EXTRA_POINTS)
    basis = gll_nodes(p)
    return basis.nodes.copy(), basis.quadrature_weights.copy()


@dataclass(frozen=True)
class TemporalPair(object):
    """Degree one nodal pair and degree zero edge function on ``[t_n, t_n + dt]``"""
    t_n: float
    dt: float

    def l0(self, t):
        return (self.t_n + self.dt - numpy.asarray(t)) / self.dt

    def l1(self, t):
        return (numpy.asarray(t) - self.t_n) / self.dt

    def e1(self, t):
        return numpy.ones_like(numpy.asarray(t, dtype=float)) / self.dt

    def dl0_dt(self):
        return -1.0 / self.dt

    def dl1_dt(self):
        return 1.0 / self.dt

    def mass(self):
        """Temporal mass of the edge function, the integral of e1 * e1 over the step"""
        return 1.0 / self.dt

    def average(self, start, end, start_other=None, end_other=None):
        """Exact step average of a product of two linear-in-time quantities, or of one quantity.

        ``(1/dt) int (a0 l0 + a1 l1)(b0 l0 + b1 l1) dt = a0 b0 / 3 + (a0 b1 + a1 b0) / 6 + a1 b1 / 3``
        """
        if start_other is None:
            return 0.5 * (start + end)
        return (start * start_other / 3.0 + (start * end_other + end * start_other) / 6.0
                + end * end_other / 3.0)
