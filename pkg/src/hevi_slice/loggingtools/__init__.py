"""Helper utilities for dealing with python logging
"""
# stdlib
import inspect
import io
import logging
import os
import traceback

# Namespace logging under a prefix.
# For example a logger should be created by one of either:
#   log = ns_log.getChild("mylogger")
#     or
#   log = getLogger("mylogger")

BASE_NS_LOG_NAME = os.environ.get('HEVI_SLICE_LOGGING_PREFIX', 'hevi_slice')
UNKNOWN_LOGGER_NAME = "UNKNOWN"
DEFAULT_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# pylint: disable=invalid-name
ns_log = logging.getLogger(BASE_NS_LOG_NAME)
_log = ns_log.getChild("hevi_slice.loggingtools")
# pylint: enable=invalid-name


def getLogger(name=None):  # pylint: disable=invalid-name
    """
    Convenience method for getting a namespaced python logger.  This is a short-hand for just doing:

    >>> log = ns_log.getChild(name)

    When `name` is omitted the name of the calling module is used, with the calling function appended when the call
    is not made at module level.

    :param name: The name of the child logger to create.  This will be a child of the `ns_log` logger
    :return: Requested logger
    :rtype: logging.Logger
    """
    if name is None:
        caller_frame = inspect.currentframe().f_back
        caller_module = inspect.getmodule(caller_frame)
        if caller_module is None:
            string_file = io.StringIO()
            traceback.print_stack(file=string_file)
            _log.error("getLogger() is unable to determine the name of the calling module, which usually means the "
                       "module failed to import.  Returning an 'UNKNOWN' logger.  Current call stack is\n: %s",
                       string_file.getvalue())
            return ns_log.getChild(UNKNOWN_LOGGER_NAME)

        name = caller_module.__name__
        # code in a function or class body is named after it
        if caller_frame.f_code.co_name != "<module>":
            name = ".".join([name, caller_frame.f_code.co_name])

    return ns_log.getChild(name)


def configure_logging(level=logging.INFO, log_file=None, fmt=DEFAULT_LOG_FORMAT):
    """Attaches a stream handler, and optionally an unbuffered file handler, to the namespace logger.

    Calling this again replaces the handlers installed by a previous call so repeated CLI invocations within one
    interpreter (tests) do not duplicate output.

    :param level: Log level for the namespace logger
    :type level: int|str
    :param log_file: Path of a run log written without buffering, or None
    :type log_file: str
    :param fmt: Format string shared by both handlers
    :type fmt: str
    :return: The namespace logger
    :rtype: logging.Logger
    """
    # imported here since handlers imports this package for its own logger
    from hevi_slice.loggingtools.handlers import NoBufferingFileHandler
    from hevi_slice.loggingtools.handlers import StreamHandler

    for handler in list(ns_log.handlers):
        if getattr(handler, "_hevi_slice_managed", False):
            ns_log.removeHandler(handler)
            handler.close()

    new_handlers = [StreamHandler(fmt)]
    if log_file:
        new_handlers.append(NoBufferingFileHandler(log_file, mode="w", encoding="utf-8"))

    for handler in new_handlers:
        handler._hevi_slice_managed = True  # pylint: disable=protected-access
        handler.setFormatter(logging.Formatter(fmt))
        ns_log.addHandler(handler)

    ns_log.setLevel(level)
    _log.debug("Logging configured at level %s with file %s", level, log_file)
    return ns_log
