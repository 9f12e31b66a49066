"""
Placement of operator instances onto cloud and edge nodes.

The central rule is data locality for privacy: an instance of an operator tagged with a sensitive dataset may only run
on an edge node that hosts that dataset. Everything else may run on any alive, active node.

:func:`place` and :func:`rebalance` are greedy and deterministic: instances are taken in (size of feasible node set,
operator id, replica index) order and each goes to the feasible node with the most free slots, ties broken by node id.
:func:`optimal_place_bruteforce` enumerates every assignment and is meant as a test oracle for small instances.
"""

import itertools
import logging
from dataclasses import dataclass, field

from .app_model import validate_app, topo_order
from .exceptions import InfeasiblePlacementError, InstanceTooLargeError, InvalidApplicationError, UnknownNodeError

logger = logging.getLogger(__name__)

BRUTEFORCE_MAX_OPERATORS = 6
BRUTEFORCE_MAX_NODES = 4
BRUTEFORCE_MAX_INSTANCES = 10


@dataclass(frozen=True)
class Placement(object):
    """
    Assignment of operator instances to nodes

    :ivar dict assignment: (operator_id, replica_index) -> node_id
    :ivar dict parallelism: operator_id -> number of instances
    """
    assignment: dict = field(default_factory=dict)
    parallelism: dict = field(default_factory=dict)

    def instances(self):
        return sorted(self.assignment)

    def instances_of(self, operator_id):
        return sorted(k for k in self.assignment if k[0] == operator_id)

    def instances_on(self, node_id):
        return sorted(k for k, n in self.assignment.items() if n == node_id)

    def load(self, node_id):
        return sum(1 for n in self.assignment.values() if n == node_id)

    def rows(self):
        """
        The placement as sorted (operator_id, replica_index, node_id) rows, used for snapshots
        """
        return [(k[0], k[1], self.assignment[k]) for k in sorted(self.assignment)]


@dataclass(frozen=True)
class PlacementCost(object):
    """
    :ivar float est_epoch_time: Bottleneck operator service demand over its placed capacity
    :ivar float migration_cost: Sum of state sizes of instances that moved
    """
    est_epoch_time: float = 0.0
    migration_cost: float = 0.0


def feasible_nodes(op, cluster):
    """
    Nodes an instance of ``op`` may run on

    :param op: The :class:`c2e.app_model.OperatorSpec`
    :param cluster: The :class:`c2e.cluster_model.Cluster`
    :return: frozenset of node ids (possibly empty)
    """
    result = set()
    for node in cluster.available_nodes():
        if op.sensitive and (node.tier != 'edge' or op.sensitivity not in node.hosted_datasets):
            continue
        result.add(node.id)
    return frozenset(result)


def check_placement(placement, app, cluster):
    """
    Lists every broken :class:`Placement` invariant; an empty list means the placement is valid.

    :rtype: list of str
    """
    problems = []
    for op in app.operators:
        count = placement.parallelism.get(op.id)
        if count is None or count < 1:
            problems.append("operator {} has no parallelism".format(op.id))
            continue
        indices = sorted(k[1] for k in placement.assignment if k[0] == op.id)
        if indices != list(range(count)):
            problems.append("operator {} replicas {} do not match parallelism {}".format(op.id, indices, count))

    known = set(app.operator_ids())
    for (op_id, index), node_id in sorted(placement.assignment.items()):
        if op_id not in known:
            problems.append("instance ({}, {}) belongs to no operator".format(op_id, index))
            continue
        try:
            node = cluster.node(node_id)
        except UnknownNodeError:
            problems.append("instance ({}, {}) on unknown node {}".format(op_id, index, node_id))
            continue
        if not node.alive:
            problems.append("instance ({}, {}) on failed node {}".format(op_id, index, node_id))
        op = app.operator(op_id)
        if op.sensitive and (node.tier != 'edge' or op.sensitivity not in node.hosted_datasets):
            problems.append("sensitive instance ({}, {}) of dataset {} on node {}".format(
                op_id, index, op.sensitivity, node_id))

    for node in cluster.nodes:
        load = placement.load(node.id)
        if load > node.slots:
            problems.append("node {} hosts {} instances with {} slots".format(node.id, load, node.slots))
    return problems


def _free_slots(cluster, assignment):
    free = dict((n.id, n.slots) for n in cluster.available_nodes())
    for node_id in assignment.values():
        if node_id in free:
            free[node_id] -= 1
    return free


def _assign_greedy(instances, app, cluster, assignment):
    """
    Places ``instances`` into ``assignment`` (mutated) with the most-free-slots rule.
    """
    free = _free_slots(cluster, assignment)
    feasible = dict((op.id, feasible_nodes(op, cluster)) for op in app.operators)
    for op_id, index in sorted(instances, key=lambda k: (len(feasible[k[0]]), k[0], k[1])):
        candidates = [n for n in feasible[op_id] if free.get(n, 0) > 0]
        if not candidates:
            if not feasible[op_id]:
                reason = "no feasible node"
                if app.operator(op_id).sensitive:
                    reason += " hosts dataset {}".format(app.operator(op_id).sensitivity)
            else:
                reason = "no free slot on feasible nodes {}".format(', '.join(sorted(feasible[op_id])))
            raise InfeasiblePlacementError(op_id, reason)
        chosen = min(candidates, key=lambda n: (-free[n], n))
        assignment[(op_id, index)] = chosen
        free[chosen] -= 1


def place(app, cluster):
    """
    Initial placement, every operator at its minimum parallelism

    :param app: A valid :class:`c2e.app_model.TrainingApp`
    :param cluster: The :class:`c2e.cluster_model.Cluster`
    :raises InvalidApplicationError: if the app does not validate
    :raises InfeasiblePlacementError: naming the first operator without feasible capacity
    :rtype: Placement
    """
    violations = validate_app(app)
    if violations:
        raise InvalidApplicationError(violations)

    parallelism = dict((op.id, op.parallelism_min) for op in app.operators)
    instances = [(op.id, i) for op in app.operators for i in range(op.parallelism_min)]
    assignment = {}
    _assign_greedy(instances, app, cluster, assignment)
    placement = Placement(assignment=assignment, parallelism=parallelism)
    logger.debug("placed %d instances on %d nodes", len(assignment), len(set(assignment.values())))
    return placement


def rebalance(current, app, cluster, evicted):
    """
    Re-places evicted (or newly created) instances; every other instance stays where it is.

    :param Placement current: The placement before the triggering event. Its parallelism must already account for any
        new replicas listed in ``evicted``.
    :param app: The :class:`c2e.app_model.TrainingApp`
    :param cluster: The cluster after the triggering event
    :param evicted: Instance ids to (re)assign
    :raises InfeasiblePlacementError: if some evicted instance has no surviving feasible slot
    :rtype: Placement
    """
    evicted = set(evicted)
    if not evicted:
        return current
    assignment = dict((k, v) for k, v in current.assignment.items() if k not in evicted)
    _assign_greedy(sorted(evicted), app, cluster, assignment)
    logger.debug("rebalanced %d instance(s)", len(evicted))
    return Placement(assignment=assignment, parallelism=dict(current.parallelism))


def moved_instances(before, after):
    """
    Instances whose node differs between two placements, new instances included
    """
    return sorted(k for k, node_id in after.assignment.items() if before.assignment.get(k) != node_id)


def _operator_inflow(app, rate):
    """
    Tuples per second arriving at each operator: ``rate`` into every source, scaled by selectivity along every path
    """
    inflow = {}
    for op_id in topo_order(app):
        preds = app.predecessors(op_id)
        if not preds:
            inflow[op_id] = float(rate)
        else:
            inflow[op_id] = sum(inflow[p] * app.operator(p).selectivity for p in preds)
    return inflow


def estimate_cost(p, app, cluster, rate, previous=None):
    """
    Bottleneck estimate of a placement.

    ``est_epoch_time`` is the largest ratio, over operators, of service demand (inflow * cost_per_tuple) to the sum of
    device speedups of the operator's instances. ``migration_cost`` sums the state size of instances that moved with
    respect to ``previous`` (zero without one).

    :param Placement p: A valid placement
    :param float rate: Input tuples per second at each source
    :rtype: PlacementCost
    """
    inflow = _operator_inflow(app, rate)
    worst = 0.0
    for op in app.operators:
        demand = inflow[op.id] * op.cost_per_tuple
        capacity = sum(cluster.speedup(node_id, app.model_class)
                       for (op_id, _), node_id in p.assignment.items() if op_id == op.id)
        if demand <= 0:
            continue
        worst = max(worst, demand / capacity if capacity > 0 else float('inf'))

    migration = 0.0
    if previous is not None:
        migration = sum(app.operator(k[0]).state_size for k in moved_instances(previous, p))
    return PlacementCost(est_epoch_time=worst, migration_cost=migration)


def optimal_place_bruteforce(app, cluster, rate=1.0):
    """
    Exhaustive search over every assignment at minimum parallelism.

    Returns the feasible placement with the smallest ``est_epoch_time``; among equals, the lexicographically smallest
    assignment (instances in id order, nodes in id order) wins.

    :raises InstanceTooLargeError: beyond 6 operators, 4 nodes or 10 instances
    :raises InfeasiblePlacementError: if no assignment satisfies the constraints
    :rtype: Placement
    """
    nodes = cluster.available_nodes()
    instances = [(op.id, i) for op in app.operators for i in range(op.parallelism_min)]
    if (len(app.operators) > BRUTEFORCE_MAX_OPERATORS or len(cluster.nodes) > BRUTEFORCE_MAX_NODES
            or len(instances) > BRUTEFORCE_MAX_INSTANCES):
        raise InstanceTooLargeError("{} operators / {} nodes / {} instances is too large for exhaustive search".format(
            len(app.operators), len(cluster.nodes), len(instances)))

    violations = validate_app(app)
    if violations:
        raise InvalidApplicationError(violations)

    parallelism = dict((op.id, op.parallelism_min) for op in app.operators)
    choices = [sorted(feasible_nodes(app.operator(op_id), cluster)) for op_id, _ in instances]
    slots = dict((n.id, n.slots) for n in nodes)

    best = None
    best_cost = None
    for combo in itertools.product(*choices):
        used = {}
        for node_id in combo:
            used[node_id] = used.get(node_id, 0) + 1
        if any(count > slots[node_id] for node_id, count in used.items()):
            continue
        candidate = Placement(assignment=dict(zip(instances, combo)), parallelism=dict(parallelism))
        cost = estimate_cost(candidate, app, cluster, rate).est_epoch_time
        if best is None or cost < best_cost:
            best, best_cost = candidate, cost

    if best is None:
        first = instances[0][0] if instances else None
        for (op_id, _), options in zip(instances, choices):
            if not options:
                first = op_id
                break
        raise InfeasiblePlacementError(first, "no assignment satisfies the constraints")
    return best
