"""Von Neumann analysis of the linearised compressible Boussinesq equations

    u_t + p_x = 0,   w_t + p_z - b = 0,   p_t + c^2 (u_x + w_z) = 0,   b_t + N^2 w = 0

for plane waves ``exp(i k x + i l z)`` under three time discretisations: Crank-Nicolson, the energetically balanced
HEVI splitting (forward Euler provisional horizontal velocity) and the standard trapezoidal HEVI splitting.  Each
scheme gives a one step map ``y^{n+1} = A y^n`` on ``y = (u, w, p, b)``.
"""
# stdlib
import cmath
import math
from dataclasses import dataclass
from dataclasses import field

import numpy

from hevi_slice import loggingtools
from hevi_slice.exceptions import ConfigError
from hevi_slice.exceptions import SingularMatrixError
from hevi_slice.numkit import eig4
from hevi_slice.numkit import lu_factor

LOG = loggingtools.getLogger()

SCHEME_CRANK_NICOLSON = "crank_nicolson"
SCHEME_HEVI_NEW = "hevi_new"
SCHEME_HEVI_TRAPEZOIDAL = "hevi_trapezoidal"
SCHEMES = (SCHEME_CRANK_NICOLSON, SCHEME_HEVI_NEW, SCHEME_HEVI_TRAPEZOIDAL)

#: Short names accepted on the command line
SCHEME_ALIASES = {
    "cn": SCHEME_CRANK_NICOLSON,
    "new": SCHEME_HEVI_NEW,
    "trap": SCHEME_HEVI_TRAPEZOIDAL,
}

MODE_LABELS = ("acoustic+", "acoustic-", "gravity+", "gravity-")

#: Amplification above this counts as unstable
INSTABILITY_THRESHOLD = 1.0 + 1e-12


def resolve_scheme(name):
    """Canonical scheme name for a canonical name or alias

    :raises: ConfigError
    """
    scheme = SCHEME_ALIASES.get(name, name)
    if scheme not in SCHEMES:
        raise ConfigError(key="scheme", reason="unknown scheme %r, expected one of %s"
                                               % (name, ", ".join(sorted(SCHEME_ALIASES))))
    return scheme


@dataclass(frozen=True)
class BoussinesqParams(object):
    """One plane wave of the linear model"""
    c: float  # pylint: disable=invalid-name
    N: float  # pylint: disable=invalid-name
    dt: float
    k: float = 0.0
    l: float = 0.0  # noqa: E741

    def __post_init__(self):
        if not self.c > 0.0:
            raise ConfigError(key="c", reason="sound speed must be positive")
        if self.N < 0.0:
            raise ConfigError(key="N", reason="buoyancy frequency must not be negative")
        if not self.dt > 0.0:
            raise ConfigError(key="dt", reason="time step must be positive")

    @property
    def horizontal_cfl(self):
        """k c dt / pi"""
        return self.k * self.c * self.dt / math.pi


@dataclass(frozen=True)
class AmplificationResult(object):
    """Eigenvalues of the one step map labelled by mode family"""
    params: BoussinesqParams
    eigenvalues: numpy.ndarray = field(repr=False)
    mode_labels: tuple = MODE_LABELS

    @property
    def moduli(self):
        return numpy.abs(self.eigenvalues)

    def by_label(self, label):
        return self.eigenvalues[self.mode_labels.index(label)]

    @property
    def acoustic_moduli(self):
        return numpy.abs([self.by_label("acoustic+"), self.by_label("acoustic-")])

    @property
    def gravity_moduli(self):
        return numpy.abs([self.by_label("gravity+"), self.by_label("gravity-")])

    @property
    def max_acoustic(self):
        return float(self.acoustic_moduli.max())

    @property
    def max_gravity(self):
        return float(self.gravity_moduli.max())


def _stage_matrices(scheme, params):
    """The implicit (left) and explicit (right) matrices of a scheme; the trapezoidal scheme also returns its
    corrector pair ``y^{n+1} = B1 y^n + B2 y'``"""
    half = 0.5 * params.dt
    ik, il = 1j * params.k, 1j * params.l
    c2, n2 = params.c ** 2, params.N ** 2

    if scheme == SCHEME_CRANK_NICOLSON:
        left = [[1, 0, half * ik, 0],
                [0, 1, half * il, -half],
                [half * ik * c2, half * il * c2, 1, 0],
                [0, half * n2, 0, 1]]
        right = [[1, 0, -half * ik, 0],
                 [0, 1, -half * il, half],
                 [-half * ik * c2, -half * il * c2, 1, 0],
                 [0, -half * n2, 0, 1]]
        return numpy.array(left, dtype=complex), numpy.array(right, dtype=complex), None

    if scheme == SCHEME_HEVI_NEW:
        # the provisional u' = u - dt ik p substituted into the pressure equation
        left = [[1, 0, half * ik, 0],
                [0, 1, half * il, -half],
                [0, half * il * c2, 1, 0],
                [0, half * n2, 0, 1]]
        right = [[1, 0, -half * ik, 0],
                 [0, 1, -half * il, half],
                 [-params.dt * ik * c2, -half * il * c2, 1 - 0.5 * params.dt ** 2 * params.k ** 2 * c2, 0],
                 [0, -half * n2, 0, 1]]
        return numpy.array(left, dtype=complex), numpy.array(right, dtype=complex), None

    if scheme == SCHEME_HEVI_TRAPEZOIDAL:
        predictor_left = [[1, 0, 0, 0],
                          [0, 1, half * il, -half],
                          [0, half * il * c2, 1, 0],
                          [0, half * n2, 0, 1]]
        predictor_right = [[1, 0, -params.dt * ik, 0],
                           [0, 1, -half * il, half],
                           [-params.dt * ik * c2, -half * il * c2, 1, 0],
                           [0, half * n2, 0, 1]]
        corrector_old = [[1, 0, -half * ik, 0],
                         [0, 1, -half * il, half],
                         [-half * ik * c2, -half * il * c2, 1, 0],
                         [0, -half * n2, 0, 1]]
        corrector_provisional = [[0, 0, -half * ik, 0],
                                 [0, 0, -half * il, half],
                                 [-half * ik * c2, -half * il * c2, 0, 0],
                                 [0, -half * n2, 0, 0]]
        return (numpy.array(predictor_left, dtype=complex), numpy.array(predictor_right, dtype=complex),
                (numpy.array(corrector_old, dtype=complex), numpy.array(corrector_provisional, dtype=complex)))

    raise ConfigError(key="scheme", reason="unknown scheme %r" % (scheme,))


def amplification_matrix(scheme, params):
    """The 4x4 one step map ``A = L^-1 R`` of `scheme`; for the trapezoidal splitting ``A = B1 + B2 L^-1 R``.

    :type params: BoussinesqParams
    :rtype: numpy.ndarray
    :raises: SingularMatrixError
    """
    scheme = resolve_scheme(scheme)
    left, right, corrector = _stage_matrices(scheme, params)
    try:
        stage = lu_factor(left).solve(right)
    except SingularMatrixError:
        LOG.error("Implicit matrix of %s is singular at %s", scheme, params)
        raise
    if corrector is None:
        return stage
    corrector_old, corrector_provisional = corrector
    return corrector_old + corrector_provisional.dot(stage)


def _label_eigenvalues(eigenvalues, reference=None):
    """Orders eigenvalues as acoustic+, acoustic-, gravity+, gravity-.

    Without a reference the pair with the larger |arg| is acoustic.  With a reference (the labelled eigenvalues of a
    neighbouring wavenumber) each label takes the nearest remaining eigenvalue.
    """
    if reference is not None:
        remaining = list(eigenvalues)
        ordered = []
        for target in reference:
            idx = int(numpy.argmin([abs(value - target) for value in remaining]))
            ordered.append(remaining.pop(idx))
        return numpy.array(ordered)

    by_arg = sorted(eigenvalues, key=lambda value: (-abs(cmath.phase(value)), -value.imag))
    acoustic, gravity = by_arg[:2], by_arg[2:]
    acoustic.sort(key=lambda value: -value.imag)
    gravity.sort(key=lambda value: -value.imag)
    return numpy.array(acoustic + gravity)


def amplification_factors(scheme, params, reference=None):
    """Labelled eigenvalues of the one step map.

    :param reference: Labelled eigenvalues of a neighbouring wavenumber for continuity tracking past aliasing
    :rtype: AmplificationResult
    :raises: NumericError
    """
    eigenvalues = eig4(amplification_matrix(scheme, params))
    return AmplificationResult(params=params, eigenvalues=_label_eigenvalues(eigenvalues, reference))


def wavenumbers(length, count):
    """Lattice ``2 pi m / length`` for m = 0 .. count - 1"""
    return 2.0 * math.pi * numpy.arange(count) / length


def sweep_grid(scheme, c, N, dt, lx, lz, nk, nl):  # pylint: disable=invalid-name
    """Amplification factors over the wavenumber lattice, k outer and l inner, (0, 0) included.

    Labels follow the largest-|arg| rule while ``c dt |K| < pi`` and continuity in k beyond it.

    :rtype: list of AmplificationResult
    :raises: ConfigError
    """
    if nk < 1 or nl < 1:
        raise ConfigError(key="nk/nl", reason="grid needs at least one wavenumber per direction")
    results = []
    previous_in_l = {}
    for k in wavenumbers(lx, nk):
        for m, l in enumerate(wavenumbers(lz, nl)):
            params = BoussinesqParams(c=c, N=N, dt=dt, k=k, l=l)
            aliased = c * dt * math.hypot(k, l) >= math.pi
            reference = previous_in_l.get(m) if aliased else None
            result = amplification_factors(scheme, params, reference=reference)
            previous_in_l[m] = result.eigenvalues
            results.append(result)
    LOG.info("Swept %d wavenumbers for %s at dt=%g", len(results), scheme, dt)
    return results


@dataclass(frozen=True)
class StabilityBoundary(object):
    """Smallest lattice wavenumber with an unstable acoustic mode; ``k is None`` when stable throughout"""
    k: float
    cfl: float
    index: int
    monotone: bool = True

    @property
    def stable_throughout(self):
        return self.k is None


def acoustic_stability_boundary(c, N, dt, lz, l_index, scheme=SCHEME_HEVI_NEW, lx=1000.0, nk=64):  # pylint: disable=invalid-name
    """Onset of acoustic instability along the horizontal wavenumber lattice at the vertical wavenumber
    ``2 pi l_index / lz``.

    A linear scan rather than a bisection: every lattice point is evaluated, the first unstable one is ``k*``, and a
    response that is not monotone in k is reported through ``monotone``.

    :rtype: StabilityBoundary
    """
    vertical = 2.0 * math.pi * l_index / lz
    lattice = wavenumbers(lx, nk)
    flags = []
    for k in lattice:
        params = BoussinesqParams(c=c, N=N, dt=dt, k=k, l=vertical)
        flags.append(amplification_factors(scheme, params).max_acoustic > INSTABILITY_THRESHOLD)
    if not any(flags):
        return StabilityBoundary(k=None, cfl=None, index=None)

    first = flags.index(True)
    monotone = all(flags[first:])
    if not monotone:
        LOG.warning("Acoustic instability of %s is not monotone in k at dt=%g", scheme, dt)
    k_star = float(lattice[first])
    return StabilityBoundary(k=k_star, cfl=k_star * c * dt / math.pi, index=first, monotone=monotone)


def dt_sweep(c, N, lz, l_index, dts, scheme=SCHEME_HEVI_NEW, lx=1000.0, nk=64):  # pylint: disable=invalid-name
    """Acoustic boundary for several time steps, in the order given

    :rtype: list of (float, StabilityBoundary)
    """
    return [(dt, acoustic_stability_boundary(c, N, dt, lz, l_index, scheme=scheme, lx=lx, nk=nk)) for dt in dts]


def grid_rows(results):
    """Flattened CSV rows: k, l, |lambda| acoustic, |lambda| gravity, then arg per labelled mode"""
    rows = []
    for result in results:
        rows.append([result.params.k, result.params.l, result.max_acoustic, result.max_gravity]
                    + [cmath.phase(value) for value in result.eigenvalues])
    return rows


GRID_COLUMNS = ["k", "l", "abs_acoustic", "abs_gravity"] + ["arg_" + label for label in MODE_LABELS]
