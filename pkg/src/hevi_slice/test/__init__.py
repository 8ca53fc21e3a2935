"""Utilities for writing tests of the numerical code
"""
# stdlib
import unittest

import numpy

from hevi_slice import loggingtools

try:
    from ddt import ddt
    from ddt import data as ddt_data
except ImportError:
    # pylint: disable=invalid-name
    ddt = None

    def ddt_data(*_):
        """
        Dummy ddt data decorator
        """
        raise RuntimeError("In order to use the data decorator you must install hevi_slice with the "
                           "'test_utils' extras package; eg hevi_slice['test_utils']")

LOG = loggingtools.getLogger()

#: Seed used by every test that draws random data
DEFAULT_SEED = 20170412

__all__ = ["TestCase", "NumericTestCase", "data", "DEFAULT_SEED"]

data = ddt_data  # pylint: disable=invalid-name


class TestCaseMixinMetaClass(type):
    """Meta class for the base TestCase.

      1> Guarantees calls to _custom_setup and _custom_teardown around the test's own setUp/tearDown so base classes
        can rely on their lifecycle hooks even when a test forgets to call super().
      2> Applies the ddt class decorator so `data` decorated methods expand without an explicit @ddt.
    """
    def __init__(cls, name, bases, dct):
        cls._expand_data_tests()
        super(TestCaseMixinMetaClass, cls).__init__(name, bases, dct)

    def __call__(cls, *args, **kwargs):
        if not getattr(cls.setUp, "_lifecycle_wrapped", False):
            current_setup = cls.setUp
            current_teardown = cls.tearDown

            def cb_wrapped_setUp(self):  # pylint: disable=invalid-name
                """Wrapper which wraps the core setUp and calls the _custom_setup
                """
                self._custom_setup()
                current_setup(self)

            def cb_wrapped_tearDown(self):  # pylint: disable=invalid-name
                """Wrapper which wraps the core tearDown and calls the _custom_teardown
                """
                try:
                    current_teardown(self)
                finally:
                    self._custom_teardown()

            cb_wrapped_setUp._lifecycle_wrapped = True
            cls.setUp = cb_wrapped_setUp
            cls.tearDown = cb_wrapped_tearDown

        return super(TestCaseMixinMetaClass, cls).__call__(*args, **kwargs)

    def _expand_data_tests(cls):
        """Discovers ddt data attributes on test methods and expands them into separate tests
        """
        if ddt is None:
            return
        ddt(cls)


class TestCase(unittest.TestCase, metaclass=TestCaseMixinMetaClass):
    """
    Base TestCase class which applies behavior provided by TestCaseMixinMetaClass.
    """

    def _custom_setup(self):
        """Setup hook for base classes; runs before the test's own setUp"""
        pass

    def _custom_teardown(self):
        """Teardown hook for base classes; runs after the test's own tearDown"""
        pass


class NumericTestCase(TestCase):
    """TestCase with a seeded random generator and array assertions"""

    seed = DEFAULT_SEED

    def _custom_setup(self):
        super(NumericTestCase, self)._custom_setup()
        self.rng = numpy.random.default_rng(self.seed)

    def assertAllClose(self, actual, expected, rtol=0.0, atol=1e-12, msg=None):  # pylint: disable=invalid-name
        """Asserts two arrays agree element-wise within ``atol + rtol * |expected|``"""
        numpy.testing.assert_allclose(numpy.asarray(actual), numpy.asarray(expected), rtol=rtol, atol=atol,
                                      err_msg=msg or "")

    def assertRelativeClose(self, actual, expected, tol, msg=None):  # pylint: disable=invalid-name
        """Asserts ``|actual - expected| <= tol * max(|expected|, tiny)`` for scalars"""
        scale = max(abs(expected), numpy.finfo(float).tiny)
        self.assertLessEqual(abs(actual - expected), tol * scale,
                             msg or "%r differs from %r by more than %g relative" % (actual, expected, tol))
