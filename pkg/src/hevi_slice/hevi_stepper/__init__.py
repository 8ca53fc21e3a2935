"""The HEVI time stepper: state types, the three-stage step, balanced initial states and the experiment loops"""
from hevi_slice.hevi_stepper.dynamics import SliceDynamics
from hevi_slice.hevi_stepper.dynamics import StepOutcome
from hevi_slice.hevi_stepper.initial import bubble_state
from hevi_slice.hevi_stepper.initial import column_state
from hevi_slice.hevi_stepper.initial import hydrostatic_state
from hevi_slice.hevi_stepper.simulation import EXPERIMENT_BUBBLE
from hevi_slice.hevi_stepper.simulation import EXPERIMENT_COLUMN
from hevi_slice.hevi_stepper.simulation import run_column
from hevi_slice.hevi_stepper.simulation import run_simulation
from hevi_slice.hevi_stepper.state import EXNER_DISCRETE_GRADIENT
from hevi_slice.hevi_stepper.state import EXNER_TRAPEZOIDAL
from hevi_slice.hevi_stepper.state import MODE_EULER
from hevi_slice.hevi_stepper.state import MODE_LEAPFROG
from hevi_slice.hevi_stepper.state import FluxSet
from hevi_slice.hevi_stepper.state import SliceOptions
from hevi_slice.hevi_stepper.state import StateVector
from hevi_slice.hevi_stepper.state import StepReport

__all__ = ['EXNER_DISCRETE_GRADIENT', 'EXNER_TRAPEZOIDAL', 'EXPERIMENT_BUBBLE', 'EXPERIMENT_COLUMN', 'MODE_EULER',
           'MODE_LEAPFROG', 'FluxSet', 'SliceDynamics', 'SliceOptions', 'StateVector', 'StepOutcome', 'StepReport',
           'bubble_state', 'column_state', 'hydrostatic_state', 'run_column', 'run_simulation']
