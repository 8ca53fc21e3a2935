"""Logging handlers used by the command line runs
"""
# stdlib
import sys
from logging import FileHandler
from logging import Formatter
from logging import StreamHandler as py_StreamHandler


class NoBufferingFileHandlerMixin(object):
    """Log File handler mixin which flushes after every record so the run log is complete even if a run aborts
    """

    def emit(self, record):
        assert isinstance(self, FileHandler)
        super(NoBufferingFileHandlerMixin, self).emit(record)
        self.flush()


class NoBufferingFileHandler(NoBufferingFileHandlerMixin, FileHandler):
    """A FileHandler which does not buffer
    """
    pass


class StreamHandler(py_StreamHandler):
    """Stream handler writing to stderr so CSV or table output on stdout stays clean
    """
    def __init__(self, fmt="%(message)s"):
        super(StreamHandler, self).__init__(stream=sys.stderr)
        self.setFormatter(Formatter(fmt))
