"""
Reactive elastic scaling of operator parallelism and of the active node pool.

The policy is threshold based with a dead band and a cooldown:

* any operator whose utilization exceeds ``theta_up`` gets one more replica (up to its maximum) and, if the free slots
  cannot take the new replicas, ``node_step`` reserve nodes are activated;
* only when every operator sits below ``theta_down`` is one replica removed, from the least utilized operator that
  is above its minimum, and nodes left empty are released;
* otherwise nothing happens.

Only observed metrics drive decisions. The cooldown is enforced by the caller, which owns the timestamp of the last
decision.
"""

import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy

from .app_model import Violation
from .exceptions import EmptyWindowError, InvalidDecisionError
from .placer import Placement, feasible_nodes, rebalance

logger = logging.getLogger(__name__)

REASONS = ('overload', 'underload', 'failure_compensation', 'none')
TREND_DEAD_BAND = 0.05

ScaleOutcome = namedtuple('ScaleOutcome', ['cluster', 'placement', 'warnings'])


@dataclass(frozen=True)
class AutoscalePolicy(object):
    """
    :ivar float theta_up: Utilization above which an operator is scaled out
    :ivar float theta_down: Utilization under which (for every operator) the app is scaled in
    :ivar float cooldown: Seconds between two non-none decisions
    :ivar float window: Seconds of metrics history per decision
    :ivar int node_step: Nodes activated per scale-out decision that lacks free slots
    :ivar float interval: Seconds between two autoscale ticks
    """
    theta_up: float = 0.8
    theta_down: float = 0.3
    cooldown: float = 30.0
    window: float = 60.0
    node_step: int = 1
    interval: float = 1.0


def policy_violations(policy):
    """
    :return: list of :class:`c2e.app_model.Violation` for the policy invariants
    """
    violations = []
    if not 0 < policy.theta_up <= 1:
        violations.append(Violation('0 < theta_up <= 1', "theta_up = {!r}".format(policy.theta_up)))
    if not 0 <= policy.theta_down < 1:
        violations.append(Violation('0 <= theta_down < 1', "theta_down = {!r}".format(policy.theta_down)))
    if not policy.theta_down < policy.theta_up:
        violations.append(Violation('theta_down < theta_up', "theta_down = {!r}, theta_up = {!r}".format(
            policy.theta_down, policy.theta_up)))
    if not policy.cooldown > 0:
        violations.append(Violation('cooldown > 0', "cooldown = {!r}".format(policy.cooldown)))
    if not policy.window > 0:
        violations.append(Violation('window > 0', "window = {!r}".format(policy.window)))
    if not policy.node_step >= 1:
        violations.append(Violation('node_step >= 1', "node_step = {!r}".format(policy.node_step)))
    if not policy.interval > 0:
        violations.append(Violation('interval > 0', "interval = {!r}".format(policy.interval)))
    return violations


@dataclass(frozen=True)
class OperatorSample(object):
    """
    One second of an operator's metrics

    :ivar float demand: Work units that arrived (tuples * cost_per_tuple)
    :ivar float capacity: Work units the instances could serve (sum of device speedups)
    :ivar int backlog: Queued tuples at the end of the second
    """
    demand: float = 0.0
    capacity: float = 0.0
    backlog: int = 0


@dataclass(frozen=True)
class UtilizationStats(object):
    """
    :ivar dict utilization: operator_id -> demand / capacity over the window
    :ivar dict trend: operator_id -> "rising", "flat" or "falling" backlog
    """
    utilization: dict = field(default_factory=dict)
    trend: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScaleDecision(object):
    """
    :ivar dict op_parallelism_delta: operator_id -> signed replica change
    :ivar int node_delta: Nodes to activate (positive) or release (negative)
    :ivar str reason: overload, underload, failure_compensation or none
    """
    op_parallelism_delta: dict = field(default_factory=dict)
    node_delta: int = 0
    reason: str = 'none'

    @property
    def is_none(self):
        return self.reason == 'none'


NO_DECISION = ScaleDecision()


def _trend(backlog):
    half = len(backlog) // 2
    if half == 0:
        return 'flat'
    first = float(numpy.mean(backlog[:half]))
    last = float(numpy.mean(backlog[len(backlog) - half:]))
    band = TREND_DEAD_BAND * max(abs(first), abs(last))
    if last - first > band:
        return 'rising'
    if first - last > band:
        return 'falling'
    return 'flat'


def observe(window):
    """
    Summarises a window of per-second operator samples.

    :param window: Sequence of dicts, one per second, mapping operator_id -> :class:`OperatorSample`
    :raises EmptyWindowError: if the window holds no sample
    :rtype: UtilizationStats
    """
    window = list(window)
    if not window:
        raise EmptyWindowError("cannot observe an empty metrics window")

    utilization = {}
    trend = {}
    for op_id in sorted(set(k for sample in window for k in sample)):
        samples = [sample[op_id] for sample in window if op_id in sample]
        demand = float(numpy.mean([s.demand for s in samples]))
        capacity = float(numpy.mean([s.capacity for s in samples]))
        if capacity > 0:
            utilization[op_id] = demand / capacity
        else:
            utilization[op_id] = 0.0 if demand == 0 else float('inf')
        trend[op_id] = _trend([s.backlog for s in samples])
    return UtilizationStats(utilization=utilization, trend=trend)


def _needs_nodes(new_replicas, app, cluster, placement):
    """
    True if the current free slots cannot host one new replica per listed operator
    """
    free = dict((n.id, n.slots - placement.load(n.id)) for n in cluster.available_nodes())
    for op_id in new_replicas:
        candidates = [n for n in feasible_nodes(app.operator(op_id), cluster) if free.get(n, 0) > 0]
        if not candidates:
            return True
        chosen = min(candidates, key=lambda n: (-free[n], n))
        free[chosen] -= 1
    return False


def decide(stats, policy, current, cluster, app):
    """
    One scaling decision from observed utilization.

    :param UtilizationStats stats: The observed window
    :param AutoscalePolicy policy: Thresholds and step sizes
    :param current: The current :class:`c2e.placer.Placement`
    :param cluster: The current :class:`c2e.cluster_model.Cluster`
    :param app: The :class:`c2e.app_model.TrainingApp`
    :rtype: ScaleDecision
    """
    utilization = stats.utilization
    if not utilization:
        return NO_DECISION

    overloaded = sorted(op_id for op_id, u in utilization.items() if u > policy.theta_up)
    if overloaded:
        grow = [op_id for op_id in overloaded
                if current.parallelism[op_id] < app.operator(op_id).parallelism_max]
        if not grow:
            return NO_DECISION
        node_delta = 0
        if _needs_nodes(grow, app, cluster, current):
            room = min(cluster.pool_max - len(cluster.available_nodes()), len(cluster.reserve_nodes()))
            node_delta = max(0, min(policy.node_step, room))
        return ScaleDecision(op_parallelism_delta=dict((op_id, 1) for op_id in grow),
                             node_delta=node_delta, reason='overload')

    if all(u < policy.theta_down for u in utilization.values()):
        shrinkable = [op_id for op_id in utilization
                      if current.parallelism[op_id] > app.operator(op_id).parallelism_min]
        if not shrinkable:
            return NO_DECISION
        victim = min(shrinkable, key=lambda op_id: (utilization[op_id], op_id))
        index = current.parallelism[victim] - 1
        remaining = dict(current.assignment)
        del remaining[(victim, index)]
        available = cluster.available_nodes()
        empty = [n for n in available if n.id not in remaining.values()]
        releasable = min(len(empty), len(available) - 1)
        return ScaleDecision(op_parallelism_delta={victim: -1}, node_delta=-releasable, reason='underload')

    return NO_DECISION


def _check_bounds(decision, app, cluster, placement):
    for op_id, delta in decision.op_parallelism_delta.items():
        op = app.operator(op_id)
        result = placement.parallelism[op_id] + delta
        if not op.parallelism_min <= result <= op.parallelism_max:
            raise InvalidDecisionError("parallelism of {} would become {} outside [{}, {}]".format(
                op_id, result, op.parallelism_min, op.parallelism_max))
    result = len(cluster.available_nodes()) + decision.node_delta
    if not 1 <= result <= cluster.pool_max:
        raise InvalidDecisionError("active node count would become {} outside [1, {}]".format(
            result, cluster.pool_max))


def rank_reserve(cluster, operators):
    """
    Reserve nodes in activation order: nodes that can host one of ``operators`` first, then by id

    :param cluster: The :class:`c2e.cluster_model.Cluster`
    :param operators: :class:`c2e.app_model.OperatorSpec` instances waiting for a slot
    :rtype: list of :class:`c2e.cluster_model.NodeSpec`
    """
    def preference(node):
        activated = cluster.set_active(node.id, True)
        useful = any(node.id in feasible_nodes(op, activated) for op in operators)
        return (not useful, node.id)

    return sorted(cluster.reserve_nodes(), key=preference)


def apply_decision(decision, app, cluster, placement):
    """
    Applies a decision: activates reserve nodes, adds or removes replicas and releases empty nodes.

    New replicas are placed with :func:`c2e.placer.rebalance`, passing them as the evicted list so that nothing else
    moves. A removed replica is always the highest index of its operator. Only empty nodes are released; if fewer are
    empty than requested a warning is returned instead.

    :raises InvalidDecisionError: if the decision breaks parallelism or node-count bounds
    :raises InfeasiblePlacementError: if new replicas cannot be placed; the caller keeps its previous state
    :return: :class:`ScaleOutcome` (cluster, placement, warnings)
    """
    if decision.is_none or (not decision.op_parallelism_delta and decision.node_delta == 0):
        return ScaleOutcome(cluster, placement, [])

    _check_bounds(decision, app, cluster, placement)
    warnings = []
    growing = sorted(op_id for op_id, d in decision.op_parallelism_delta.items() if d > 0)

    if decision.node_delta > 0:
        wanted = [app.operator(op_id) for op_id in growing]
        activated = 0
        for node in rank_reserve(cluster, wanted)[:decision.node_delta]:
            cluster = cluster.set_active(node.id, True)
            activated += 1
        if activated < decision.node_delta:
            warnings.append("requested {} node(s), activated {}".format(decision.node_delta, activated))

    parallelism = dict(placement.parallelism)
    assignment = dict(placement.assignment)
    new_instances = []
    for op_id in growing:
        for _ in range(decision.op_parallelism_delta[op_id]):
            new_instances.append((op_id, parallelism[op_id]))
            parallelism[op_id] += 1
    for op_id, delta in sorted(decision.op_parallelism_delta.items()):
        for _ in range(-delta if delta < 0 else 0):
            parallelism[op_id] -= 1
            del assignment[(op_id, parallelism[op_id])]

    result = Placement(assignment=assignment, parallelism=parallelism)
    if new_instances:
        result = rebalance(result, app, cluster, new_instances)

    if decision.node_delta < 0:
        available = cluster.available_nodes()
        empty = sorted((n.id for n in available if result.load(n.id) == 0), reverse=True)
        releasable = empty[:min(-decision.node_delta, len(available) - 1)]
        for node_id in releasable:
            cluster = cluster.set_active(node_id, False)
        if len(releasable) < -decision.node_delta:
            warnings.append("requested release of {} node(s), {} empty".format(-decision.node_delta, len(releasable)))

    for message in warnings:
        logger.warning(message)
    logger.info("applied %s decision %s, node_delta %d", decision.reason,
                sorted(decision.op_parallelism_delta.items()), decision.node_delta)
    return ScaleOutcome(cluster, result, warnings)
