"""Settings required for driving the hevi_slice test suite
"""
from hevi_slice.config import get_config_value

#: Smallest mesh on which every operator has interior structure; used by the fast operator tests
SMALL_MESH = dict(nx=3, nz=4, p=3, lx=1000.0, lz=1500.0)

#: Picard tolerance of the time stepping tests
TEST_PICARD_TOL = get_config_value("HEVI_SLICE_TEST_PICARD_TOL", default=1e-12)

#: Number of steps of the bubble energy balance run
BUBBLE_BALANCE_STEPS = get_config_value("HEVI_SLICE_TEST_BALANCE_STEPS", default=20)

try:
    from .local_settings import *
except ImportError:
    pass
