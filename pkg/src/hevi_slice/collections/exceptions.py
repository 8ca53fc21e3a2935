"""Exceptions for pipelines
"""
from hevi_slice.exceptions import HeviSliceException


class PipelineException(HeviSliceException):
    """Basic exception class for Pipelines
    """
    message = "Pipeline failure"


class PipelineErrorExit(PipelineException):
    """Raised by a transition filter to stop the Pipeline due to an error condition
    """
    intermediate_result = None
    pipeline = None
    reason = None
    message = "Pipeline {pipeline} stopped due to error condition: {reason}"

    def __init__(self, pipeline, intermediate_result, reason=None):
        """
        :param pipeline: The pipeline being exited
        :type pipeline: hevi_slice.collections.pipeline.Pipeline
        :param intermediate_result: The result of the last completed stage
        :param reason: Free text explaining the exit
        :type reason: str
        """
        super(PipelineErrorExit, self).__init__(pipeline=pipeline, intermediate_result=intermediate_result,
                                                reason=reason)
