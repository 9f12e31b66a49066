"""
The training application: a directed acyclic graph of operators (the vertices carry a piece of the training
computation, the edges are the streams between them), the :class:`Scenario` bundling one reproducible experiment,
and their validation.

Here is a code example of building and ordering the four-operator chain A -> B -> C -> D::

    from c2e.app_model import OperatorSpec, TrainingApp, validate_app, topo_order

    app = TrainingApp(operators=[OperatorSpec('A', 'source', sensitivity='d1', parallelism_min=2,
                                              parallelism_max=2),
                                 OperatorSpec('B', 'transform'),
                                 OperatorSpec('C', 'aggregator', parallelism_min=3, parallelism_max=3),
                                 OperatorSpec('D', 'sink')],
                      edges=[('A', 'B'), ('B', 'C'), ('C', 'D')],
                      model_class='CNN')

    assert validate_app(app) == []
    assert topo_order(app) == ['A', 'B', 'C', 'D']

Every order that the model leaves unspecified is broken lexicographically by id so that reruns are byte-identical.
"""

import heapq
from collections import namedtuple
from dataclasses import dataclass, field

from .cluster_model import DEFAULT_TRAINING
from .exceptions import InvalidApplicationError

OPERATOR_KINDS = ('source', 'transform', 'trainer', 'aggregator', 'sink')

Violation = namedtuple('Violation', ['name', 'detail'])
Violation.__doc__ = "A failed invariant: ``name`` is the invariant, ``detail`` says where it failed"


@dataclass(frozen=True)
class OperatorSpec(object):
    """
    A vertex of the training application

    :ivar str id: Operator identifier, unique within an app
    :ivar str kind: One of source, transform, trainer, aggregator, sink
    :ivar str sensitivity: Dataset id of the sensitive data the operator touches, None if it touches none
    :ivar float selectivity: Output tuples per input tuple
    :ivar float cost_per_tuple: Work units per tuple on the reference CPU
    :ivar int parallelism_min: Lowest number of instances
    :ivar int parallelism_max: Highest number of instances
    :ivar float state_size: Migration cost of one instance
    """
    id: str
    kind: str = 'transform'
    sensitivity: str = None
    selectivity: float = 1.0
    cost_per_tuple: float = 0.001
    parallelism_min: int = 1
    parallelism_max: int = 1
    state_size: float = 1.0

    @property
    def sensitive(self):
        return bool(self.sensitivity)


@dataclass(frozen=True)
class TrainingApp(object):
    """
    The training application DAG

    Operators and edges are normalised to id order on construction, so two apps built from the same parts in a
    different order compare equal.

    :ivar tuple operators: :class:`OperatorSpec` entries
    :ivar tuple edges: (from_id, to_id) pairs
    :ivar str model_class: "MLP" or "CNN", selects the training profile
    """
    operators: tuple = ()
    edges: tuple = ()
    model_class: str = 'MLP'

    def __post_init__(self):
        object.__setattr__(self, 'operators', tuple(sorted(self.operators, key=lambda o: o.id)))
        object.__setattr__(self, 'edges', tuple(sorted(tuple(e) for e in self.edges)))

    def operator_ids(self):
        return [o.id for o in self.operators]

    def operator(self, operator_id):
        for op in self.operators:
            if op.id == operator_id:
                return op
        raise KeyError(operator_id)

    def predecessors(self, operator_id):
        return [u for u, v in self.edges if v == operator_id]

    def successors(self, operator_id):
        return [v for u, v in self.edges if u == operator_id]

    def sources(self):
        targets = set(v for _, v in self.edges)
        return [o.id for o in self.operators if o.id not in targets]

    def sinks(self):
        origins = set(u for u, _ in self.edges)
        return [o.id for o in self.operators if o.id not in origins]

    def trainers(self):
        return [o.id for o in self.operators if o.kind == 'trainer']


@dataclass(frozen=True)
class Scenario(object):
    """
    One reproducible experiment

    :ivar TrainingApp app: The training application
    :ivar cluster: The :class:`c2e.cluster_model.Cluster` at t=0
    :ivar trace: The :class:`c2e.simengine.WorkloadTrace` of input rates
    :ivar failures: The :class:`c2e.cluster_model.FailureSchedule`
    :ivar policy: The :class:`c2e.autoscaler.AutoscalePolicy`
    :ivar int seed: Seed of the run's single random generator
    :ivar float horizon: Simulated seconds
    :ivar float target_accuracy: Accuracy at which training completes
    :ivar int queue_cap: Per-operator backlog cap, 0 for unbounded
    :ivar float replication_time: Seconds needed to replicate the trained model to every node
    :ivar dict training: model class -> :class:`c2e.cluster_model.TrainingProfile`
    """
    app: TrainingApp
    cluster: object
    trace: object
    failures: object
    policy: object
    seed: int = 0
    horizon: float = 60.0
    target_accuracy: float = 0.98
    queue_cap: int = 0
    replication_time: float = 1.0
    training: dict = field(default_factory=lambda: dict(DEFAULT_TRAINING))

    @property
    def training_profile(self):
        return self.training[self.app.model_class]


def _reachable(app, starts):
    seen = set(starts)
    stack = list(starts)
    while stack:
        current = stack.pop()
        for nxt in app.successors(current):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _kahn(app):
    """
    Kahn's algorithm with a min-heap of ready ids, which yields the lexicographically smallest topological order.
    Returns (order, ids left on a cycle).
    """
    ids = set(app.operator_ids())
    indegree = dict((i, 0) for i in ids)
    for u, v in app.edges:
        if u in ids and v in ids:
            indegree[v] += 1
    ready = [i for i in ids if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        current = heapq.heappop(ready)
        order.append(current)
        for nxt in sorted(set(app.successors(current))):
            if nxt not in indegree:
                continue
            indegree[nxt] -= app.successors(current).count(nxt)
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    return order, sorted(ids - set(order))


def validate_app(app):
    """
    Checks every :class:`TrainingApp` invariant.

    Violations are returned, never raised; each failed invariant appears exactly once, with all offending ids
    gathered in its detail. Invariant names: ``unique_ids``, ``operator_kind``, ``parallelism_min <= parallelism_max``,
    ``selectivity >= 0``, ``cost_per_tuple > 0``, ``edge_endpoints``, ``cycle``, ``source``, ``sink``, ``unreachable``.

    :param TrainingApp app: The application
    :return: list of :class:`Violation`, empty iff the app is valid
    """
    violations = []

    ids = app.operator_ids()
    duplicates = sorted(set(i for i in ids if ids.count(i) > 1))
    if duplicates:
        violations.append(Violation('unique_ids', "duplicate operator ids: {}".format(', '.join(duplicates))))

    bad_kind = [o.id for o in app.operators if o.kind not in OPERATOR_KINDS]
    if bad_kind:
        violations.append(Violation('operator_kind', "unknown kind on: {}".format(', '.join(bad_kind))))

    bad_bounds = [o.id for o in app.operators
                  if o.parallelism_min < 1 or o.parallelism_min > o.parallelism_max]
    if bad_bounds:
        violations.append(Violation('parallelism_min <= parallelism_max',
                                    "invalid parallelism on: {}".format(', '.join(bad_bounds))))

    bad_selectivity = [o.id for o in app.operators if o.selectivity < 0]
    if bad_selectivity:
        violations.append(Violation('selectivity >= 0', "negative on: {}".format(', '.join(bad_selectivity))))

    bad_cost = [o.id for o in app.operators if not o.cost_per_tuple > 0]
    if bad_cost:
        violations.append(Violation('cost_per_tuple > 0', "non-positive on: {}".format(', '.join(bad_cost))))

    known = set(ids)
    dangling = sorted(set(x for edge in app.edges for x in edge if x not in known))
    if dangling:
        violations.append(Violation('edge_endpoints', "undeclared operators: {}".format(', '.join(dangling))))

    _, cyclic = _kahn(app)
    if cyclic:
        violations.append(Violation('cycle', "operators on a cycle: {}".format(', '.join(cyclic))))

    sources = app.sources()
    if not sources:
        violations.append(Violation('source', "no operator with in-degree 0"))
    if not app.sinks():
        violations.append(Violation('sink', "no operator with out-degree 0"))

    unreachable = sorted(known - _reachable(app, sources))
    if unreachable:
        violations.append(Violation('unreachable', "not reachable from a source: {}".format(', '.join(unreachable))))

    return violations


def topo_order(app):
    """
    Deterministic topological order of the operator ids, ties broken by lexicographic id

    :param TrainingApp app: A valid application
    :raises InvalidApplicationError: if :func:`validate_app` reports violations
    :rtype: list
    """
    violations = validate_app(app)
    if violations:
        raise InvalidApplicationError(violations)
    order, _ = _kahn(app)
    return order


def parse_scenario(text, overrides=None):
    """
    Parses and fully validates a scenario document.

    :param str text: The scenario document (see :mod:`c2e.configuration` for the layout)
    :param overrides: Optional iterable of ``dotted.path=value`` strings applied before validation
    :raises ScenarioSyntaxError: if the text is empty or not well-formed
    :raises UnknownReferenceError: if an operator, node, profile or dataset id does not resolve
    :raises ScenarioInvariantError: listing every failed invariant by name
    :rtype: Scenario
    """
    from .configuration import ScenarioDocument
    document = ScenarioDocument.from_text(text)
    for item in overrides or ():
        document.override(item)
    return document.to_scenario()


def render_scenario(scenario):
    """
    Renders a scenario back into document text; ``parse_scenario(render_scenario(s)) == s``

    :param Scenario scenario: The scenario
    :rtype: str
    """
    from .configuration import ScenarioDocument
    return ScenarioDocument.from_scenario(scenario).to_text()
