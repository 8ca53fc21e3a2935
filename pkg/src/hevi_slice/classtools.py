"""Class helpers: naming, attribute harvesting for exception messages and a caching property for operators that
are expensive to assemble but immutable once built."""
# stdlib
import inspect

from . import loggingtools

LOG = loggingtools.getLogger()


def get_classfqn(obj):
    """
    Returns the fully qualified class name for the provided `obj`
    :param obj: Either a Class or an object instance that you want the fully qualified class name for
    :type obj: object|Class
    :return: The fully qualified class name for `obj`
    :rtype: str
    """
    if obj is None:
        raise ValueError("Must provide an object")

    clazz = obj if inspect.isclass(obj) else obj.__class__
    return "%s.%s" % (clazz.__module__, clazz.__name__)


def get_class_attributes(clazz, include_base_attrs=True, include_private=False):
    """Retrieves a dict of the value attributes declared on `clazz` (and optionally its bases) mapped to their current
    values.  Routines and descriptors are skipped since they only make sense on an instance.

    :param clazz: The class to retrieve the attributes for
    :type clazz: type
    :param include_base_attrs: Whether or not to include the attributes of any base class.
    :type include_base_attrs: bool
    :param include_private: Whether or not to include attributes with a leading "_"
    :type include_private: bool
    :rtype: dict of (str, ?)
    """
    return_dict = {}

    def _is_private(attr_name):
        if attr_name.startswith("__"):
            return True
        return not include_private and attr_name.startswith("_")

    # reverse mro so the most derived value wins
    mro_list = list(reversed(inspect.getmro(clazz))) if include_base_attrs else [clazz]
    for mro_clazz in mro_list:
        clazz_attrs = inspect.getmembers(mro_clazz,
                                         lambda x: not (inspect.isroutine(x) or
                                                        inspect.isgetsetdescriptor(x) or
                                                        inspect.isdatadescriptor(x)))
        for attr_name, obj in clazz_attrs:
            if _is_private(attr_name):
                continue
            return_dict[attr_name] = obj

    return return_dict


class cached_property(object):  # pylint: disable=invalid-name
    """Property descriptor that computes its value once per instance and stores it in the instance ``__dict__``.

    Used for the mesh operators (incidence, evaluation and mass matrices) which are pure functions of the mesh
    parameters:

    .. code-block:: python

        @cached_property
        def mass_q(self):
            return assemble_mass(...)

    Deleting the attribute drops the cached value so the next access recomputes it.
    """

    def __init__(self, fget, doc=None):
        self.__get = fget
        self.__doc__ = doc or fget.__doc__
        self.__name__ = fget.__name__
        self.__module__ = fget.__module__

    def __get__(self, obj, _type=None):
        if obj is None:
            return self
        try:
            return obj.__dict__[self.__name__]
        except KeyError:
            LOG.debug("Computing cached property %s on %s", self.__name__, get_classfqn(obj))
            value = obj.__dict__[self.__name__] = self.__get(obj)
            return value

    def __delete__(self, obj):
        obj.__dict__.pop(self.__name__, None)
