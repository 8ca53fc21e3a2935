"""Structured x-z slice mesh carrying the discrete de Rham complex.

Each direction is a 1D :class:`Axis` of equal elements with GLL nodal and edge bases.  Two dimensional spaces are
tensor products of the 1D factors with coefficients ordered x-major (``ix * n_z + iz``):

========  ==============  =====================================================
space     x factor x z    meaning
========  ==============  =====================================================
P         nodal x nodal   scalar potential / vorticity (PV lives here)
U_par     nodal x edge    horizontal flux through vertical faces (v)
U_perp    edge x nodal    vertical flux through horizontal faces (w), walls removed
Q         edge x edge     densities (rho, Theta, Phi, Pi)
T         edge x nodal    potential temperature trace space (walls kept)
========  ==============  =====================================================

Edge coefficients are integrals over sub-intervals so every incidence entry is -1, 0 or +1 and the discrete
divergence, curl and gradient are exact.  x is periodic, w vanishes on the z walls.
"""
# stdlib
from dataclasses import dataclass

import numpy
import scipy.sparse

from hevi_slice import loggingtools
from hevi_slice.classtools import cached_property
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import DegenerateStateError
from hevi_slice.exceptions import HeviSliceValueError
from hevi_slice.numkit import lu_factor
from hevi_slice.polybasis import edge_basis
from hevi_slice.polybasis import gll_nodes
from hevi_slice.polybasis import lagrange_values
from hevi_slice.polybasis import quadrature_rule

LOG = loggingtools.getLogger()

SPACE_P = "P"
SPACE_U_PAR = "U_par"
SPACE_U_PERP = "U_perp"
SPACE_Q = "Q"
SPACE_T = "T"
SPACES = (SPACE_P, SPACE_U_PAR, SPACE_U_PERP, SPACE_Q, SPACE_T)


@dataclass(frozen=True)
class FieldCoefficients(object):
    """Coefficient vector tagged with the space it lives in"""
    space: str
    values: numpy.ndarray
    units: str = ""

    def __post_init__(self):
        if self.space not in SPACES:
            raise HeviSliceValueError(value_name="space %r" % self.space)
        object.__setattr__(self, "values", numpy.asarray(self.values, dtype=float))

    def check(self, mesh):
        """Validates the length against `mesh`; returns self for chaining"""
        expected = mesh.dimension(self.space)
        if self.values.shape != (expected,):
            raise HeviSliceValueError("Field in space {value_name} has the wrong length",
                                      value_name="%s (%d != %d)" % (self.space, self.values.size, expected))
        return self


def _values(field_or_array):
    return field_or_array.values if isinstance(field_or_array, FieldCoefficients) else numpy.asarray(field_or_array)


class Axis(object):
    """One direction of the tensor-product mesh: elements of width ``length / n_elements``"""

    def __init__(self, n_elements, p, length, periodic, over_integrate=False):
        self.n_elements = n_elements
        self.p = p
        self.length = float(length)
        self.periodic = periodic
        self.h = self.length / n_elements
        self.nodal_basis = gll_nodes(p)
        self.edge_basis = edge_basis(self.nodal_basis)
        self.ref_points, ref_weights = quadrature_rule(p, over_integrate=over_integrate)
        self.points_per_element = self.ref_points.size

        n_q = n_elements * self.points_per_element
        self.quad_element = numpy.repeat(numpy.arange(n_elements), self.points_per_element)
        self.quad_ref = numpy.tile(self.ref_points, n_elements)
        self.quad_points = self.quad_element * self.h + 0.5 * self.h * (self.quad_ref + 1.0)
        self.quad_weights = numpy.tile(0.5 * self.h * ref_weights, n_elements)
        self.n_quad = n_q

        self.nodal_count = n_elements * p if periodic else n_elements * p + 1
        self.edge_count = n_elements * p
        self.node_coordinates = numpy.concatenate([
            e * self.h + 0.5 * self.h * (self.nodal_basis.nodes[:-1] + 1.0) for e in range(n_elements)])
        if not periodic:
            self.node_coordinates = numpy.append(self.node_coordinates, self.length)

    def nodal_index(self, element, local):
        """Global nodal dof of local node `local` of `element`"""
        index = element * self.p + local
        return index % self.nodal_count if self.periodic else index

    @cached_property
    def nodal_eval(self):
        """Sparse (n_quad, nodal_count) Lagrange values at the quadrature points"""
        local = lagrange_values(self.nodal_basis.nodes, self.ref_points)
        return self._element_matrix(local, self.nodal_count, nodal=True)

    @cached_property
    def edge_eval(self):
        """Sparse (n_quad, edge_count) physical edge values, scaled by 2/h so sub-interval integrals are one"""
        local = self.edge_basis.evaluate(self.ref_points) * (2.0 / self.h)
        return self._element_matrix(local, self.edge_count, nodal=False)

    def _element_matrix(self, local, n_cols, nodal):
        n_pts, n_local = local.shape
        rows, cols, vals = [], [], []
        for element in range(self.n_elements):
            q_idx = element * n_pts + numpy.arange(n_pts)
            if nodal:
                dofs = numpy.array([self.nodal_index(element, i) for i in range(n_local)])
            else:
                dofs = element * self.p + numpy.arange(n_local)
            rows.append(numpy.repeat(q_idx, n_local))
            cols.append(numpy.tile(dofs, n_pts))
            vals.append(local.ravel())
        matrix = scipy.sparse.coo_matrix((numpy.concatenate(vals), (numpy.concatenate(rows), numpy.concatenate(cols))),
                                         shape=(self.n_quad, n_cols)).tocsr()
        matrix.sum_duplicates()
        return matrix

    @cached_property
    def incidence(self):
        """Integer (edge_count, nodal_count) difference matrix; periodic wrap in x"""
        edges = numpy.arange(self.edge_count)
        rows = numpy.concatenate([edges, edges])
        cols = numpy.concatenate([edges, (edges + 1) % self.nodal_count if self.periodic else edges + 1])
        vals = numpy.concatenate([-numpy.ones(self.edge_count, dtype=numpy.int64),
                                  numpy.ones(self.edge_count, dtype=numpy.int64)])
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.edge_count, self.nodal_count))

    @cached_property
    def interior_nodes(self):
        """Nodal dofs not on a wall (all of them when periodic)"""
        if self.periodic:
            return numpy.arange(self.nodal_count)
        return numpy.arange(1, self.nodal_count - 1)

    @cached_property
    def nodal_mass(self):
        return _weighted_gram(self.nodal_eval, self.quad_weights).toarray()

    @cached_property
    def edge_mass(self):
        return _weighted_gram(self.edge_eval, self.quad_weights).toarray()


def _weighted_gram(left, weights, right=None):
    """``left^T diag(weights) right`` as a sparse matrix"""
    right = left if right is None else right
    return (left.T.multiply(weights)).dot(right).tocsr()


class MeshComplex(object):
    """Tensor-product slice mesh, its function spaces and operators.  Immutable after construction; operators are
    assembled lazily and cached."""

    def __init__(self, nx, nz, p, lx, lz, over_integrate=False):
        self.nx = nx
        self.nz = nz
        self.p = p
        self.lx = float(lx)
        self.lz = float(lz)
        self.over_integrate = over_integrate
        self.x_axis = Axis(nx, p, lx, periodic=True, over_integrate=over_integrate)
        self.z_axis = Axis(nz, p, lz, periodic=False, over_integrate=over_integrate)
        self.n_quad = self.x_axis.n_quad * self.z_axis.n_quad
        self.quad_x = numpy.repeat(self.x_axis.quad_points, self.z_axis.n_quad)
        self.quad_z = numpy.tile(self.z_axis.quad_points, self.x_axis.n_quad)
        self.quad_weights = numpy.kron(self.x_axis.quad_weights, self.z_axis.quad_weights)
        LOG.debug("Built mesh %s with %d quadrature points", self, self.n_quad)

    def __repr__(self):
        return "MeshComplex(nx=%d, nz=%d, p=%d, lx=%g, lz=%g%s)" % (
            self.nx, self.nz, self.p, self.lx, self.lz, ", over_integrate" if self.over_integrate else "")

    @property
    def area(self):
        return self.lx * self.lz

    def dimension(self, space):
        """Number of degrees of freedom of `space`"""
        x_ax, z_ax = self.x_axis, self.z_axis
        return {
            SPACE_P: x_ax.nodal_count * z_ax.nodal_count,
            SPACE_U_PAR: x_ax.nodal_count * z_ax.edge_count,
            SPACE_U_PERP: x_ax.edge_count * z_ax.interior_nodes.size,
            SPACE_Q: x_ax.edge_count * z_ax.edge_count,
            SPACE_T: x_ax.edge_count * z_ax.nodal_count,
        }[space]

    # evaluation at quadrature points

    @cached_property
    def _z_interior_eval(self):
        return self.z_axis.nodal_eval[:, self.z_axis.interior_nodes]

    @cached_property
    def eval_p(self):
        return scipy.sparse.kron(self.x_axis.nodal_eval, self.z_axis.nodal_eval, format="csr")

    @cached_property
    def eval_u_par(self):
        return scipy.sparse.kron(self.x_axis.nodal_eval, self.z_axis.edge_eval, format="csr")

    @cached_property
    def eval_u_perp(self):
        return scipy.sparse.kron(self.x_axis.edge_eval, self._z_interior_eval, format="csr")

    @cached_property
    def eval_q(self):
        return scipy.sparse.kron(self.x_axis.edge_eval, self.z_axis.edge_eval, format="csr")

    @cached_property
    def eval_t(self):
        return scipy.sparse.kron(self.x_axis.edge_eval, self.z_axis.nodal_eval, format="csr")

    def evaluation(self, space):
        """Sparse (n_quad, dimension) matrix mapping coefficients of `space` to quadrature point values"""
        return {
            SPACE_P: self.eval_p,
            SPACE_U_PAR: self.eval_u_par,
            SPACE_U_PERP: self.eval_u_perp,
            SPACE_Q: self.eval_q,
            SPACE_T: self.eval_t,
        }[space]

    def evaluate(self, space, coefficients):
        """Values of a field at the quadrature points"""
        return self.evaluation(space).dot(_values(coefficients))

    def dual(self, space, point_values):
        """Load vector ``<basis_i, f>`` of pointwise values `f` against the basis of `space`"""
        return self.evaluation(space).T.dot(self.quad_weights * point_values)

    def integrate(self, point_values):
        return float(self.quad_weights.dot(point_values))

    # incidence

    @cached_property
    def _identity(self):
        x_ax, z_ax = self.x_axis, self.z_axis
        return {
            "xn": scipy.sparse.identity(x_ax.nodal_count, dtype=numpy.int64, format="csr"),
            "xe": scipy.sparse.identity(x_ax.edge_count, dtype=numpy.int64, format="csr"),
            "zn": scipy.sparse.identity(z_ax.nodal_count, dtype=numpy.int64, format="csr"),
            "ze": scipy.sparse.identity(z_ax.edge_count, dtype=numpy.int64, format="csr"),
        }

    @cached_property
    def e32_par(self):
        """Horizontal divergence, Q x U_par"""
        return scipy.sparse.kron(self.x_axis.incidence, self._identity["ze"], format="csr")

    @cached_property
    def e32_perp_full(self):
        """Vertical divergence including wall dofs, Q x (edge x nodal)"""
        return scipy.sparse.kron(self._identity["xe"], self.z_axis.incidence, format="csr")

    @cached_property
    def perp_interior(self):
        """Indices of the U_perp dofs within the wall-inclusive edge x nodal numbering"""
        z_nodes = self.z_axis.nodal_count
        interior = self.z_axis.interior_nodes
        return (numpy.arange(self.x_axis.edge_count)[:, None] * z_nodes + interior[None, :]).ravel()

    @cached_property
    def e32_perp(self):
        """Vertical divergence, Q x U_perp (wall dofs eliminated)"""
        return self.e32_perp_full[:, self.perp_interior].tocsr()

    @cached_property
    def e21(self):
        """Discrete curl P -> (U_par, wall-inclusive U_perp): (d psi / dz, -d psi / dx)"""
        ident = self._identity
        top = scipy.sparse.kron(ident["xn"], self.z_axis.incidence)
        bottom = -scipy.sparse.kron(self.x_axis.incidence, ident["zn"])
        return scipy.sparse.vstack([top, bottom], format="csr")

    @cached_property
    def e32_full(self):
        """Divergence on the wall-inclusive flux space, matching the row layout of :attr:`e21`"""
        return scipy.sparse.hstack([self.e32_par, self.e32_perp_full], format="csr")

    @cached_property
    def e10(self):
        """Gradient P -> tangential space (x component edge x nodal, z component nodal x edge)"""
        ident = self._identity
        x_part = scipy.sparse.kron(self.x_axis.incidence, ident["zn"])
        z_part = scipy.sparse.kron(ident["xn"], self.z_axis.incidence)
        return scipy.sparse.vstack([x_part, z_part], format="csr")

    @cached_property
    def e21_tangential(self):
        """Scalar curl of the tangential space into Q: d b / dx - d a / dz"""
        ident = self._identity
        a_part = -scipy.sparse.kron(ident["xe"], self.z_axis.incidence)
        b_part = scipy.sparse.kron(self.x_axis.incidence, ident["ze"])
        return scipy.sparse.hstack([a_part, b_part], format="csr")

    # mass matrices

    @cached_property
    def _mass_factors(self):
        x_ax, z_ax = self.x_axis, self.z_axis
        interior = z_ax.interior_nodes
        return {
            SPACE_P: (x_ax.nodal_mass, z_ax.nodal_mass),
            SPACE_U_PAR: (x_ax.nodal_mass, z_ax.edge_mass),
            SPACE_U_PERP: (x_ax.edge_mass, z_ax.nodal_mass[numpy.ix_(interior, interior)]),
            SPACE_Q: (x_ax.edge_mass, z_ax.edge_mass),
            SPACE_T: (x_ax.edge_mass, z_ax.nodal_mass),
        }

    def mass(self, space):
        """Unweighted mass matrix; the Kronecker product of the 1D masses"""
        key = "_mass_" + space
        if key not in self.__dict__:
            x_mass, z_mass = self._mass_factors[space]
            self.__dict__[key] = scipy.sparse.kron(scipy.sparse.csr_matrix(x_mass),
                                                   scipy.sparse.csr_matrix(z_mass), format="csr")
        return self.__dict__[key]

    def inverse_mass(self, space):
        """Inverse of the unweighted mass matrix as the Kronecker product of the inverted 1D masses"""
        key = "_inverse_mass_" + space
        if key not in self.__dict__:
            x_mass, z_mass = self._mass_factors[space]
            x_inv = _prune(numpy.linalg.inv(x_mass))
            z_inv = _prune(numpy.linalg.inv(z_mass))
            self.__dict__[key] = scipy.sparse.kron(x_inv, z_inv, format="csr")
        return self.__dict__[key]

    def solve_mass(self, space, rhs):
        """Solves ``M_space x = rhs``"""
        return self.inverse_mass(space).dot(rhs)

    def project(self, space, point_values):
        """L2 projection of pointwise values into `space`"""
        return self.solve_mass(space, self.dual(space, point_values))

    def weighted_product(self, left_space, right_space, point_weights):
        """``<basis_left, w basis_right>`` with no sign requirement on the weight"""
        return _weighted_gram(self.evaluation(left_space), self.quad_weights * point_weights,
                              self.evaluation(right_space))

    @cached_property
    def height_dual(self):
        """``<gamma, z>`` for every Q basis function"""
        return self.dual(SPACE_Q, self.quad_z)

    @cached_property
    def height(self):
        """Q coefficients of the height field z"""
        return self.solve_mass(SPACE_Q, self.height_dual)


def _prune(dense, rel_tol=1e-15):
    """Sparse copy with round-off level entries of a structurally block-sparse inverse dropped"""
    scale = numpy.abs(dense).max() if dense.size else 0.0
    dense = numpy.where(numpy.abs(dense) > rel_tol * scale, dense, 0.0)
    return scipy.sparse.csr_matrix(dense)


def build_mesh(nx, nz, p, lx, lz, over_integrate=False):
    """Builds an x-periodic, z-walled slice mesh of ``nx * nz`` affine elements of degree `p`.

    :raises: ConfigError for non-positive sizes
    :rtype: MeshComplex
    """
    for key, value in (("nx", nx), ("nz", nz), ("p", p)):
        if int(value) != value or value < 1:
            raise ConfigError(key=key, reason="must be a positive integer, got %r" % (value,))
    for key, value in (("Lx", lx), ("Lz", lz)):
        if not value > 0:
            raise ConfigError(key=key, reason="must be positive, got %r" % (value,))
    return MeshComplex(int(nx), int(nz), int(p), lx, lz, over_integrate=over_integrate)


def incidence_nilpotency_check(mesh):
    """True iff curl-then-div and grad-then-curl are exactly the zero matrix in integer arithmetic.

    :type mesh: MeshComplex
    :rtype: bool
    """
    composites = {
        "div.curl": mesh.e32_full.dot(mesh.e21),
        "curl.grad": mesh.e21_tangential.dot(mesh.e10),
    }
    all_zero = True
    for name, product in composites.items():
        product = product.tocsr()
        product.eliminate_zeros()
        LOG.debug("Composite %s has shape %s and %d non-zeros", name, product.shape, product.nnz)
        if product.nnz:
            all_zero = False
    return all_zero


def mass_matrix(mesh, space, weight=None, require_positive=True):
    """Mass matrix of `space`, optionally weighted by a field.

    :param weight: None, pointwise values at the quadrature points, or FieldCoefficients in Q or T
    :param require_positive: Raise DegenerateStateError when the weight is not strictly positive
    :rtype: scipy.sparse.csr_matrix
    :raises: DegenerateStateError
    """
    if weight is None:
        return mesh.mass(space)
    if isinstance(weight, FieldCoefficients):
        point_weight = mesh.evaluate(weight.space, weight.values)
        field_name = weight.space
    else:
        point_weight = numpy.asarray(weight, dtype=float)
        field_name = "weight"
    if require_positive and not numpy.all(point_weight > 0.0):
        raise DegenerateStateError(field_name=field_name)
    return mesh.weighted_product(space, space, point_weight)


def project_div(mesh, raw):
    """Galerkin projection of a pointwise vector field into U = U_par + U_perp.

    :param raw: (x component, z component) sampled at the quadrature points
    :return: (U_par coefficients, U_perp coefficients)
    :rtype: tuple of FieldCoefficients
    """
    x_values, z_values = (numpy.asarray(component, dtype=float) for component in raw)
    v_hat = mesh.project(SPACE_U_PAR, x_values)
    w_hat = mesh.project(SPACE_U_PERP, z_values)
    return FieldCoefficients(SPACE_U_PAR, v_hat, "m/s"), FieldCoefficients(SPACE_U_PERP, w_hat, "m/s")


def curl_load(mesh, v, w):
    """``<d psi/dz, v> - <d psi/dx, w>`` for every P basis function psi"""
    flux_rows = mesh.dimension(SPACE_U_PAR)
    curl_par = mesh.e21[:flux_rows]
    curl_perp = mesh.e21[flux_rows:]
    v_dual = mesh.mass(SPACE_U_PAR).dot(_values(v))
    # w paired against the wall-inclusive edge x nodal basis
    w_points = mesh.evaluate(SPACE_U_PERP, _values(w))
    w_dual_full = mesh.dual(SPACE_T, w_points)
    return curl_par.T.dot(v_dual) + curl_perp.T.dot(w_dual_full)


def weak_curl_pv(mesh, v, w, rho):
    """Potential vorticity q in P from ``<psi, rho q> = <d psi/dz, v> - <d psi/dx, w>``.

    :param v: U_par coefficients
    :param w: U_perp coefficients
    :param rho: Q coefficients of density
    :rtype: FieldCoefficients
    :raises: DegenerateStateError
    """
    rho_points = mesh.evaluate(SPACE_Q, _values(rho))
    weighted = mass_matrix(mesh, SPACE_P, rho_points)
    try:
        factor = lu_factor(weighted)
    except ArithmeticError:
        raise DegenerateStateError(field_name="rho")
    q_hat = factor.solve(curl_load(mesh, v, w))
    return FieldCoefficients(SPACE_P, q_hat, "1/(s kg/m^3)")
