"""Value types passed between the stages of a step"""
# stdlib
import dataclasses
from dataclasses import dataclass
from dataclasses import field

import numpy

from hevi_slice.derham_mesh import SPACE_Q
from hevi_slice.derham_mesh import SPACE_U_PAR
from hevi_slice.derham_mesh import SPACE_U_PERP
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import HeviSliceValueError
from hevi_slice.thermo import DEFAULT_UPWIND_FRACTION

EXNER_TRAPEZOIDAL = "trapezoidal"
EXNER_DISCRETE_GRADIENT = "discrete_gradient"
EXNER_AVERAGES = (EXNER_TRAPEZOIDAL, EXNER_DISCRETE_GRADIENT)

MODE_EULER = "euler"
MODE_LEAPFROG = "leapfrog"


@dataclass(frozen=True)
class StateVector(object):
    """Prognostic coefficients at one time level"""
    v: numpy.ndarray = field(repr=False)
    w: numpy.ndarray = field(repr=False)
    rho: numpy.ndarray = field(repr=False)
    theta_density: numpy.ndarray = field(repr=False)
    t: float = 0.0

    def __post_init__(self):
        for name in ("v", "w", "rho", "theta_density"):
            object.__setattr__(self, name, numpy.array(getattr(self, name), dtype=float))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def check(self, mesh):
        """Validates every coefficient length against `mesh`; returns self"""
        for name, space in (("v", SPACE_U_PAR), ("w", SPACE_U_PERP), ("rho", SPACE_Q), ("theta_density", SPACE_Q)):
            expected = mesh.dimension(space)
            if getattr(self, name).shape != (expected,):
                raise HeviSliceValueError("State field {value_name} has the wrong length",
                                          value_name="%s (%d != %d)" % (name, getattr(self, name).size, expected))
        return self

    def domain_violation(self, mesh):
        """(field name, minimum) of the first of rho or Theta that is not positive at every quadrature point"""
        for name in ("rho", "theta_density"):
            values = mesh.evaluate(SPACE_Q, getattr(self, name))
            minimum = float(values.min())
            if not minimum > 0.0 or not numpy.all(numpy.isfinite(values)):
                return name, minimum
        return None

    @classmethod
    def at_rest(cls, mesh, rho, theta_density, t=0.0):
        return cls(v=numpy.zeros(mesh.dimension(SPACE_U_PAR)), w=numpy.zeros(mesh.dimension(SPACE_U_PERP)),
                   rho=rho, theta_density=theta_density, t=t)


@dataclass(frozen=True)
class FluxSet(object):
    """Time integrated variational derivatives over one step.

    ``phi_load`` and ``pi_load`` are the Q dual vectors ``<gamma, Phi>``, ``<gamma, Pi>``; ``phi_bar`` and ``pi_bar``
    their coefficients.
    """
    v_bar: numpy.ndarray = field(repr=False)
    w_bar: numpy.ndarray = field(repr=False)
    phi_bar: numpy.ndarray = field(repr=False)
    pi_bar: numpy.ndarray = field(repr=False)
    phi_load: numpy.ndarray = field(repr=False)
    pi_load: numpy.ndarray = field(repr=False)


@dataclass(frozen=True)
class StepReport(object):
    picard_iterations: int
    implicit_residual: float
    energy_balance_residual: float = 0.0
    dH: float = 0.0  # pylint: disable=invalid-name
    horizontal_error: float = 0.0
    residual_history: tuple = ()


@dataclass(frozen=True)
class EnergyBalance(object):
    """Energy change predicted by the step's own operators"""
    vertical_part: float
    horizontal_error: float
    scale: float = 0.0


@dataclass(frozen=True)
class SliceOptions(object):
    """Scheme switches of the slice dynamics"""
    upwind: bool = False
    upwind_fraction: float = DEFAULT_UPWIND_FRACTION
    visc: float = 0.0
    picard_tol: float = 1e-12
    picard_max_iter: int = 100
    exner_average: str = EXNER_TRAPEZOIDAL
    vertical_only: bool = False

    def __post_init__(self):
        if self.visc < 0.0:
            raise ConfigError(key="visc", reason="viscosity must not be negative")
        if not self.picard_tol > 0.0:
            raise ConfigError(key="picard_tol", reason="tolerance must be positive")
        if self.picard_max_iter < 1:
            raise ConfigError(key="picard_max_iter", reason="at least one iteration is required")
        if self.exner_average not in EXNER_AVERAGES:
            raise ConfigError(key="exner_average", reason="expected one of %s" % ", ".join(EXNER_AVERAGES))
        if self.upwind_fraction < 0.0:
            raise ConfigError(key="upwind_fraction", reason="must not be negative")
