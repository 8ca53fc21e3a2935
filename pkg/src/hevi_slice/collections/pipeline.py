"""Sequential stage pipeline.

A HEVI step is three stages run in order, each consuming the previous stage's result.  Transition filters run
between stages and may rewrite the intermediate result or abort with an error.
"""
from hevi_slice import loggingtools
from hevi_slice.collections.exceptions import PipelineErrorExit
from hevi_slice.collections.exceptions import PipelineException
from hevi_slice.typetools import as_iterable

LOG = loggingtools.getLogger()


class Pipeline(object):
    """Chains a series of stage functions, passing the result of each stage to the next.
    """
    _transition_filters = None

    def __init__(self, *stage_functions, **kwargs):
        """
        :param stage_functions: Stage callables run in sequence.  The first receives the pipeline arguments, every
            later stage receives the previous result.
        :param transition_filters: callables ``(pipeline, stage_func, intermediate_result) -> intermediate_result``
            run after every stage except the last.
        :raises: PipelineException
        """
        transition_filters = list(as_iterable(kwargs.get('transition_filters')))
        for trans_filter in transition_filters:
            if not callable(trans_filter):
                raise PipelineException("Invalid type passed to Pipeline as transition_filters argument, "
                                        "transition_filter must be callable")

        self._transition_filters = transition_filters
        self._stage_functions = list(stage_functions)

    def __len__(self):
        return len(self._stage_functions)

    def __repr__(self):
        names = [getattr(func, "__name__", repr(func)) for func in self._stage_functions]
        return "Pipeline(%s)" % " -> ".join(names)

    def start(self, *args, **kwargs):
        """
        Runs the stages in order.

        :return: The result of the last stage.
        :raises: PipelineErrorExit
        """
        intermediate_result = None
        last_idx = len(self) - 1
        for idx, func in enumerate(self._stage_functions):
            if idx == 0:
                intermediate_result = func(*args, **kwargs)
            else:
                intermediate_result = func(intermediate_result)

            if idx < last_idx:
                intermediate_result = self._execute_transition_filters(func, intermediate_result)

        return intermediate_result

    def _execute_transition_filters(self, stage_func, intermediate_result):
        """Run between stages.

        :return: The possibly rewritten intermediate result
        """
        for trans_filter in self._transition_filters:
            try:
                intermediate_result = trans_filter(self, stage_func, intermediate_result)
            except PipelineErrorExit as exit_signal:
                LOG.warning("%s (after stage %s)", exit_signal.message, getattr(stage_func, "__name__", stage_func))
                raise
        return intermediate_result
