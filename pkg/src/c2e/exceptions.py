"""
Defines the exception classes used throughout the c2e code for convenient reference.
"""


class C2EError(Exception):
    """
    Base class for every error raised by c2e
    """
    pass


class ScenarioSyntaxError(C2EError):
    """
    Raised when a scenario or descriptor document cannot be read as structured text

    :ivar int line: The 1-based line of the offending text, or None if unknown
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line {}: {}".format(line, message)
        super(ScenarioSyntaxError, self).__init__(message)


class UnknownReferenceError(C2EError):
    """
    Raised when a document refers to an operator, node, profile or dataset id that is not declared

    :ivar str kind: What sort of id was referenced, e.g. "operator"
    :ivar str ref: The unknown id
    """

    def __init__(self, kind, ref, where=None):
        self.kind = kind
        self.ref = ref
        message = "unknown {} '{}'".format(kind, ref)
        if where:
            message += " referenced from {}".format(where)
        super(UnknownReferenceError, self).__init__(message)


class ScenarioInvariantError(C2EError):
    """
    Raised when a parsed scenario breaks one or more named invariants

    :ivar list violations: :class:`c2e.app_model.Violation` entries, one per failed invariant
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super(ScenarioInvariantError, self).__init__(
            "; ".join("{}: {}".format(v.name, v.detail) for v in self.violations))


class InvalidApplicationError(ScenarioInvariantError):
    """
    Raised by operations that require a valid training application DAG
    """
    pass


class OverrideError(C2EError):
    """
    Raised when a dotted-path override does not resolve to a scenario option
    """
    pass


class UnknownConfigError(C2EError):
    """
    Raise if the requested configuration values are not set
    """
    pass


class UnknownNodeError(C2EError):
    """
    Raised when a node id is not part of the cluster
    """
    pass


class NodeAlreadyFailedError(C2EError):
    """
    Raised when failing a node that has already failed
    """
    pass


class MissingSpeedupError(C2EError):
    """
    Raised if a device profile declares no speedup for the requested model class
    """
    pass


class InfeasiblePlacementError(C2EError):
    """
    The infeasibility report of the placer: no constraint-satisfying slot for an operator instance

    :ivar str operator: The first operator that could not be placed
    :ivar str reason: Human readable explanation
    """

    def __init__(self, operator, reason):
        self.operator = operator
        self.reason = reason
        super(InfeasiblePlacementError, self).__init__(
            "cannot place operator '{}': {}".format(operator, reason))


class InstanceTooLargeError(C2EError):
    """
    Raised by the exhaustive placement search when the instance would explode
    """
    pass


class EmptyWindowError(C2EError):
    """
    Raised when utilization is observed over an empty metrics window
    """
    pass


class ClockRegressionError(C2EError):
    """
    Raised if the simulator is asked to process an event earlier than its clock
    """
    pass


class ExportError(C2EError):
    """
    Raised if the metrics cannot be written to the requested path
    """
    pass


class UnsupportedDescriptorError(C2EError):
    """
    Raised when a sample type / label type pair has no shape convention

    :ivar str sample_type: The sample type of the descriptor
    :ivar str label_type: The label type of the descriptor
    """

    def __init__(self, sample_type, label_type):
        self.sample_type = sample_type
        self.label_type = label_type
        super(UnsupportedDescriptorError, self).__init__(
            "unsupported combination {} + {}".format(sample_type, label_type))


class NoCompatibleArchitectureError(C2EError):
    """
    Raised if no backbone/head pair fits the descriptor
    """
    pass


class MissingPartitionsError(C2EError):
    """
    Raised when generating a training DAG from a descriptor without partitions
    """
    pass


class UnsupportedArrivalProcessError(C2EError):
    """
    Raised if the arrival process configured is not supported
    """
    pass


class MalformedTemplateConfig(C2EError):
    """
    Raised if a template config string starts with neither "CANNED:" nor "FILE:"
    """
    pass


class TemplateNotFoundException(C2EError):
    """
    Raised if a canned template is provided in config and cannot be found
    """
    pass


class InvalidDecisionError(C2EError):
    """
    Raised when a scale decision would push parallelism or the node count outside its bounds
    """
    pass


class RunInvariantError(C2EError):
    """
    Raised when a finished run breaks tuple conservation or places a sensitive instance off its dataset

    :ivar list violations: :class:`c2e.app_model.Violation` entries found in the run
    :ivar report: The :class:`c2e.simengine.metrics.MetricsReport` of the run
    """

    def __init__(self, violations, report=None):
        self.violations = list(violations)
        self.report = report
        super(RunInvariantError, self).__init__(
            "; ".join("{}: {}".format(v.name, v.detail) for v in self.violations))
