"""Type coercion helpers shared by the configuration layer"""
# stdlib
from collections.abc import Iterable

TRUE_STRINGS = ("true", "yes", "on", "1")
FALSE_STRINGS = ("false", "no", "off", "0")


def is_iterable(obj, exclude_string=True):
    """Returns whether or not the provided `obj` is iterable in the list sense and not in the string sense

    :param obj: The object to test for whether it is iterable or not
    :param exclude_string: Whether or not to exclude the string type as iterable.  The default is True.
    :return: Whether or not the provided `obj` is iterable
    :rtype: bool
    """
    if exclude_string and isinstance(obj, str):
        return False

    return isinstance(obj, Iterable)


def as_iterable(obj, exclude_string=True, iter_type=list):
    """Returns `obj` as something that can be iterated over if it is not already iterable.

    :param obj: The value to wrap
    :param exclude_string: Treat strings as scalars
    :param iter_type: The container type used when wrapping a scalar
    :rtype: Iterable
    """
    if obj is None:
        return iter_type()
    if is_iterable(obj, exclude_string=exclude_string):
        return obj
    return iter_type((obj,))


def parse_bool(value):
    """Parses a boolean from its textual config representation.

    :param value: One of the accepted true/false spellings (case insensitive) or a bool
    :type value: str|bool
    :rtype: bool
    :raises: ValueError
    """
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in TRUE_STRINGS:
        return True
    if lowered in FALSE_STRINGS:
        return False
    raise ValueError("Unable to parse '%s' as a boolean" % value)
