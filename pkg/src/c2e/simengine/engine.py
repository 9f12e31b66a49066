"""
The discrete-event simulator.

A run is driven by one :class:`c2e.simengine.events.EventQueue`. Every simulated second a ``tuple_batch`` event moves
tuples through the operators in topological order:

* each source draws its arrivals for the second from the run's arrival process (the trace rate is injected into every
  source);
* arrivals are dealt round-robin over the operator's instances and queued; an instance on a node with speedup ``s``
  serves ``s * dt / cost_per_tuple`` tuples per second, fractional capacity carried over while it has work;
* an operator emits ``floor(processed * selectivity)`` tuples (cumulative) on every outgoing edge in the same second.

Training progress is counted in reference-CPU work units, ``processed * cost_per_tuple`` summed over the trainer
operators, and one epoch is ``base_epoch_time`` units. Epoch completions are scheduled at the exact instant within the
second their work was reached, so a saturated trainer on a device with speedup ``s`` completes an epoch every
``base_epoch_time / s`` seconds.

``failure`` events fail a node and rebalance its instances (queues travel with them), ``autoscale_tick`` events run the
observe / decide / apply cycle of :mod:`c2e.autoscaler`. When the target accuracy is reached (or at the horizon) a
``training_complete`` event bumps the model version and ``replication_done`` marks it present on every alive node.

Here is a code example of running a scenario::

    from c2e.app_model import parse_scenario
    from c2e.simengine import simulate, export_metrics

    with open('scenarios/fig7a_fault_16.cfg') as f:
        scenario = parse_scenario(f.read(), ['failures.limit=2'])

    report = simulate(scenario)
    print(report.summary['training_completion_time'])
    export_metrics(report, 'out/')
"""

import logging
import math

import numpy

from ..app_model import Violation, topo_order, validate_app
from ..arrivals import get_arrivals
from ..autoscaler import OperatorSample, apply_decision, decide, observe, policy_violations, rank_reserve
from ..cluster_model import MODEL_CLASSES, TIERS, accuracy_after, apply_failure, epochs_to_accuracy
from ..exceptions import (ClockRegressionError, InfeasiblePlacementError, InvalidDecisionError,
                          NodeAlreadyFailedError, RunInvariantError, ScenarioInvariantError)
from ..placer import check_placement, moved_instances, place, rebalance
from .events import EventQueue, SimEvent
from .metrics import MetricsReport
from .workload import trace_violations

logger = logging.getLogger(__name__)

EPSILON = 1e-9


def scenario_violations(scenario):
    """
    Checks every invariant of a scenario and of the parts it bundles.

    :param scenario: The :class:`c2e.app_model.Scenario`
    :return: list of :class:`c2e.app_model.Violation`, empty iff the scenario may be simulated
    """
    violations = list(validate_app(scenario.app))
    cluster = scenario.cluster

    if scenario.app.model_class not in MODEL_CLASSES and scenario.app.model_class not in scenario.training:
        violations.append(Violation('model_class', "unknown model class {}".format(scenario.app.model_class)))
    if not scenario.horizon > 0:
        violations.append(Violation('horizon > 0', "horizon = {!r}".format(scenario.horizon)))
    if not 0 < scenario.target_accuracy <= 1:
        violations.append(Violation('0 < target_accuracy <= 1', "target_accuracy = {!r}".format(
            scenario.target_accuracy)))
    if scenario.queue_cap < 0:
        violations.append(Violation('queue_cap >= 0', "queue_cap = {!r}".format(scenario.queue_cap)))
    if scenario.replication_time < 0:
        violations.append(Violation('replication_time >= 0', "replication_time = {!r}".format(
            scenario.replication_time)))

    ids = cluster.node_ids()
    duplicates = sorted(set(i for i in ids if ids.count(i) > 1))
    if duplicates:
        violations.append(Violation('node ids unique', "duplicate node ids: {}".format(', '.join(duplicates))))
    if not ids:
        violations.append(Violation('cluster not empty', "no node declared"))
    bad_tier = [n.id for n in cluster.nodes if n.tier not in TIERS]
    if bad_tier:
        violations.append(Violation('node_tier', "unknown tier on: {}".format(', '.join(bad_tier))))
    bad_slots = [n.id for n in cluster.nodes if n.slots < 1]
    if bad_slots:
        violations.append(Violation('slots >= 1', "on: {}".format(', '.join(bad_slots))))
    cloud_data = [n.id for n in cluster.nodes if n.hosted_datasets and n.tier != 'edge']
    if cloud_data:
        violations.append(Violation('hosted_datasets only on edge nodes', "on: {}".format(', '.join(cloud_data))))
    if len(cluster.alive_nodes()) > cluster.pool_max:
        violations.append(Violation('alive nodes <= pool_max', "{} alive, pool_max {}".format(
            len(cluster.alive_nodes()), cluster.pool_max)))

    missing = sorted(set(n.device for n in cluster.nodes if n.device not in cluster.profiles))
    if missing:
        violations.append(Violation('device profiles exist', "undeclared: {}".format(', '.join(missing))))
    no_speedup = sorted(set(n.device for n in cluster.nodes if n.device in cluster.profiles
                            and scenario.app.model_class not in cluster.profiles[n.device].speedup))
    if no_speedup:
        violations.append(Violation('speedup declared for model_class', "{} on: {}".format(
            scenario.app.model_class, ', '.join(no_speedup))))
    bad_speedup = sorted(p.name for p in cluster.profiles.values() if any(v <= 0 for v in p.speedup.values()))
    if bad_speedup:
        violations.append(Violation('speedup > 0', "on: {}".format(', '.join(bad_speedup))))

    if scenario.app.model_class not in scenario.training:
        violations.append(Violation('training profile exists', "no profile for {}".format(scenario.app.model_class)))
    for name in sorted(scenario.training):
        profile = scenario.training[name]
        if not (0 < profile.a_max <= 1 and profile.tau > 0 and profile.base_epoch_time > 0):
            violations.append(Violation('training profile bounds', "{}: a_max {!r}, tau {!r}, base {!r}".format(
                name, profile.a_max, profile.tau, profile.base_epoch_time)))

    times = [t for t, _ in scenario.failures.events]
    if any(t < 0 or t >= scenario.horizon for t in times):
        violations.append(Violation('failure times < horizon', "times {}".format(times)))
    if any(b < a for a, b in zip(times, times[1:])):
        violations.append(Violation('failure times non-decreasing', "times {}".format(times)))
    failing = [n for _, n in scenario.failures.events]
    unknown = sorted(set(n for n in failing if n not in ids))
    if unknown:
        violations.append(Violation('failure nodes exist', "unknown: {}".format(', '.join(unknown))))
    repeated = sorted(set(n for n in failing if failing.count(n) > 1))
    if repeated:
        violations.append(Violation('failure nodes distinct', "repeated: {}".format(', '.join(repeated))))

    violations.extend(trace_violations(scenario.trace))
    violations.extend(policy_violations(scenario.policy))
    return violations


class Simulator(object):
    """
    The state of one run and its event handlers.

    :param scenario: A valid :class:`c2e.app_model.Scenario`

    :ivar float clock: Time of the last processed event
    :ivar cluster: Current :class:`c2e.cluster_model.Cluster`
    :ivar placement: Current :class:`c2e.placer.Placement`
    :ivar MetricsReport report: The metrics collected so far
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.app = scenario.app
        self.order = topo_order(scenario.app)
        self.training = scenario.training_profile
        self.epochs_needed = epochs_to_accuracy(self.training, scenario.target_accuracy)
        self.rng = numpy.random.default_rng(scenario.seed)
        self.arrivals = get_arrivals(scenario.trace.arrivals, self.rng)
        self.report = MetricsReport(self.order)
        self.queue = EventQueue()

        self.clock = 0.0
        self.cluster = scenario.cluster
        self.placement = None
        self.queues = {}
        self.credit = {}
        self.next_instance = dict((op_id, 0) for op_id in self.order)
        self.cumulative_processed = dict((op_id, 0) for op_id in self.order)

        self.work = 0.0
        self.scheduled_epochs = 0
        self.epochs = 0
        self.training_done = False
        self.completion_time = None
        self.target_reached = False
        self.model_version = 0

        self.samples = []
        self.last_decision = None
        self.decisions = 0
        self.migrations = 0
        self.migration_cost = 0.0
        self.peak_active = len(self.cluster.available_nodes())
        self.finished = False
        self.violations = []

    # setup

    def start(self):
        """
        Places the application and schedules the initial events. Returns False if the initial placement is
        infeasible, in which case the report is marked aborted.
        """
        try:
            self.placement = place(self.app, self.cluster)
        except InfeasiblePlacementError as e:
            self.report.abort(0.0, str(e))
            self.finished = True
            return False

        for key in self.placement.instances():
            self.queues[key] = 0
            self.credit[key] = 0.0
        self._snapshot(0.0)
        logger.info("initial placement of %d instance(s) on %d node(s)", len(self.placement.assignment),
                    len(set(self.placement.assignment.values())))

        horizon = self.scenario.horizon
        self.queue.push(SimEvent(0.0, 'tuple_batch'))
        for time, node_id in self.scenario.failures.events:
            self.queue.push(SimEvent(float(time), 'failure', {'node': node_id}))
        interval = self.scenario.policy.interval
        if interval < horizon:
            self.queue.push(SimEvent(interval, 'autoscale_tick'))
        self.queue.push(SimEvent(float(horizon), 'training_complete', {'reached': False}))
        return True

    def run(self):
        """
        Processes events until the queue is empty or the run aborts, then checks the run

        :raises RunInvariantError: if tuples were lost or a recorded placement is invalid
        :rtype: MetricsReport
        """
        if self.placement is None and not self.finished:
            self.start()
        while len(self.queue) and not self.finished:
            event = self.queue.pop()
            for emitted in self.step(event):
                self.queue.push(emitted)
        self._summarise()
        self._verify()
        return self.report

    def _verify(self):
        """
        Checks tuple conservation of the finished run and the placements recorded during it
        """
        predecessors = dict((op_id, self.app.predecessors(op_id)) for op_id in self.order)
        violations = list(self.violations)
        violations.extend(Violation('tuple conservation', p)
                          for p in self.report.conservation_violations(predecessors))
        if violations:
            for violation in violations:
                logger.error("%s: %s", violation.name, violation.detail)
            raise RunInvariantError(violations, self.report)

    def step(self, event):
        """
        Applies one event to the state.

        :param SimEvent event: The next event; its time may not precede the clock
        :raises ClockRegressionError: if it does
        :return: list of new events to schedule
        """
        if event.time < self.clock - EPSILON:
            raise ClockRegressionError("event {} at t={} precedes the clock t={}".format(
                event.kind, event.time, self.clock))
        self.clock = max(self.clock, event.time)
        handler = getattr(self, '_on_' + event.kind)
        return handler(event) or []

    # helpers

    def _speedup(self, key):
        return self.cluster.speedup(self.placement.assignment[key], self.app.model_class)

    def _capacity(self, op_id):
        return sum(self._speedup(key) for key in self.placement.instances_of(op_id))

    def _backlog(self, op_id):
        return sum(self.queues[key] for key in self.placement.instances_of(op_id))

    def _deal(self, op_id, count):
        """
        Queues ``count`` tuples round-robin over the instances of an operator, continuing where the last deal stopped
        """
        instances = self.placement.instances_of(op_id)
        n = len(instances)
        start = self.next_instance[op_id] % n
        share, extra = divmod(count, n)
        for offset in range(n):
            key = instances[(start + offset) % n]
            self.queues[key] += share + (1 if offset < extra else 0)
        self.next_instance[op_id] = (start + extra) % n

    def _serve(self, key, op, dt):
        """
        Serves an instance's queue for ``dt`` seconds; returns the number of tuples processed
        """
        self.credit[key] += self._speedup(key) * dt / op.cost_per_tuple
        processed = min(self.queues[key], int(math.floor(self.credit[key] + EPSILON)))
        self.queues[key] -= processed
        self.credit[key] -= processed
        if self.queues[key] == 0:
            self.credit[key] = min(self.credit[key], 1.0)
        return processed

    def _trim(self, op_id, cap):
        """
        Cuts an operator's queues down to ``cap`` tuples in total, shortest queues kept whole first.
        Returns the number of tuples dropped.
        """
        excess = self._backlog(op_id) - cap
        if excess <= 0:
            return 0
        instances = sorted(self.placement.instances_of(op_id), key=lambda k: (self.queues[k], k))
        keep = cap
        for position, key in enumerate(instances):
            kept = min(self.queues[key], keep // (len(instances) - position))
            self.queues[key] = kept
            keep -= kept
        return excess

    def _snapshot(self, time):
        problems = check_placement(self.placement, self.app, self.cluster)
        if problems:
            logger.error("invalid placement at t=%s: %s", time, '; '.join(problems))
            self.violations.extend(Violation('placement', '{} at t={}'.format(p, time)) for p in problems)
        self.report.add_snapshot(time, self.placement, self.cluster)
        self.peak_active = max(self.peak_active, len(self.cluster.available_nodes()))

    def _track_moves(self, before, after):
        moved = [k for k in moved_instances(before, after) if k in before.assignment]
        self.migrations += len(moved)
        self.migration_cost += sum(self.app.operator(k[0]).state_size for k in moved)
        return moved

    # handlers

    def _on_tuple_batch(self, event):
        t = event.time
        dt = min(1.0, self.scenario.horizon - t)
        if dt <= 0:
            return []

        rate = self.scenario.trace.rate_at(t)
        incoming = dict((op_id, 0) for op_id in self.order)
        injected = 0
        for op_id in self.app.sources():
            drawn = self.arrivals.draw(rate, dt)
            incoming[op_id] = drawn
            injected += drawn

        cap = self.scenario.queue_cap
        trainers = set(self.app.trainers())
        sinks = set(self.app.sinks())
        trainer_processed = 0
        delivered = 0
        work = 0.0
        samples = {}
        utilization = {}

        for op_id in self.order:
            op = self.app.operator(op_id)
            counters = self.report.counters[op_id]
            arriving = incoming[op_id]
            counters.received += arriving
            if arriving:
                self._deal(op_id, arriving)

            processed = 0
            for key in self.placement.instances_of(op_id):
                processed += self._serve(key, op, dt)
            counters.processed += processed
            if cap > 0:
                counters.dropped += self._trim(op_id, cap)

            before = self.cumulative_processed[op_id]
            after = before + processed
            self.cumulative_processed[op_id] = after
            emitted = (int(math.floor(after * op.selectivity + EPSILON))
                       - int(math.floor(before * op.selectivity + EPSILON)))
            counters.emitted += emitted
            for successor in self.app.successors(op_id):
                incoming[successor] += emitted

            if op_id in trainers:
                trainer_processed += processed
                work += processed * op.cost_per_tuple
            if op_id in sinks:
                delivered += processed

            capacity = self._capacity(op_id)
            demand = arriving * op.cost_per_tuple / dt
            samples[op_id] = OperatorSample(demand=demand, capacity=capacity, backlog=self._backlog(op_id))
            utilization[op_id] = demand / capacity if capacity > 0 else 0.0

        self.samples.append((t, samples))
        emitted_events = self._advance_training(t, dt, work)

        values = {
            'time': t,
            'input_rate': rate,
            'injected': injected,
            'processed_rate': trainer_processed / dt,
            'delivered': delivered,
            'alive_node_count': len(self.cluster.alive_nodes()),
            'active_node_count': len(self.cluster.available_nodes()),
            'epochs': self.epochs,
            'accuracy': accuracy_after(self.training, self.epochs),
        }
        for op_id in self.order:
            values['backlog_' + op_id] = samples[op_id].backlog
            values['parallelism_' + op_id] = self.placement.parallelism[op_id]
            values['utilization_' + op_id] = utilization[op_id]
        self.report.add_row(values)

        if t + 1.0 < self.scenario.horizon:
            emitted_events.append(SimEvent(t + 1.0, 'tuple_batch'))
        return emitted_events

    def _advance_training(self, t, dt, work):
        """
        Adds a second of trainer work and schedules the epochs it completes
        """
        if work <= 0 or self.training_done:
            return []
        if self.epochs_needed is not None and self.scheduled_epochs >= self.epochs_needed:
            return []
        base = self.training.base_epoch_time
        rate = work / dt
        before = self.work
        self.work += work
        events = []
        while self.work + EPSILON >= (self.scheduled_epochs + 1) * base:
            if self.epochs_needed is not None and self.scheduled_epochs >= self.epochs_needed:
                break
            self.scheduled_epochs += 1
            offset = (self.scheduled_epochs * base - before) / rate
            offset = min(max(offset, 0.0), dt)
            events.append(SimEvent(t + offset, 'epoch_complete', {'epoch': self.scheduled_epochs}))
        return events

    def _on_epoch_complete(self, event):
        self.epochs = event.payload['epoch']
        accuracy = accuracy_after(self.training, self.epochs)
        self.report.epoch_times.append(event.time)
        self.report.add_event(event.time, 'epoch_complete', str(self.epochs), repr(accuracy))
        logger.debug("t=%s epoch %d, accuracy %.4f", event.time, self.epochs, accuracy)
        if self.epochs_needed is not None and self.epochs >= self.epochs_needed and not self.training_done:
            return [SimEvent(event.time, 'training_complete', {'reached': True})]
        return []

    def _on_training_complete(self, event):
        if self.training_done:
            return []
        self.training_done = True
        self.completion_time = event.time
        self.target_reached = self.epochs_needed is not None and self.epochs >= self.epochs_needed
        self.model_version += 1
        accuracy = accuracy_after(self.training, self.epochs)
        self.report.add_event(event.time, 'training_complete', 'v{}'.format(self.model_version),
                              'target reached' if self.target_reached else 'horizon reached')
        logger.info("t=%s training complete after %d epoch(s), accuracy %.4f", event.time, self.epochs, accuracy)
        return [SimEvent(event.time + self.scenario.replication_time, 'replication_done',
                         {'version': self.model_version})]

    def _on_replication_done(self, event):
        version = event.payload['version']
        nodes = [n.id for n in self.cluster.alive_nodes()]
        self.report.replicated_nodes = nodes
        self.report.add_event(event.time, 'replication_done', 'v{}'.format(version), ' '.join(nodes))
        logger.info("t=%s model v%d replicated to %d node(s)", event.time, version, len(nodes))
        return []

    def _on_failure(self, event):
        node_id = event.payload['node']
        try:
            cluster, evicted = apply_failure(self.cluster, node_id, event.time, self.placement)
        except NodeAlreadyFailedError as e:
            logger.warning(str(e))
            return []
        self.cluster = cluster
        self.report.add_event(event.time, 'failure', node_id, '{} instance(s) evicted'.format(len(evicted)))
        for op_id, index in evicted:
            self.report.add_event(event.time, 'eviction', '{}#{}'.format(op_id, index), node_id)

        before = self.placement
        while True:
            try:
                self.placement = rebalance(before, self.app, self.cluster, evicted)
                break
            except InfeasiblePlacementError as e:
                if not self._compensate(event.time, evicted):
                    self.report.abort(event.time, str(e))
                    self.finished = True
                    return []
        if evicted:
            self._track_moves(before, self.placement)
        self._snapshot(event.time)
        return []

    def _compensate(self, time, evicted):
        """
        Activates up to ``node_step`` reserve nodes after a failure left too little capacity, nodes that can host an
        evicted instance first. Returns False when no node can be activated.
        """
        room = self.cluster.pool_max - len(self.cluster.available_nodes())
        waiting = [self.app.operator(op_id) for op_id in sorted(set(k[0] for k in evicted))]
        reserve = rank_reserve(self.cluster, waiting)
        count = min(self.scenario.policy.node_step, room, len(reserve))
        if count <= 0:
            return False
        for node in reserve[:count]:
            self.cluster = self.cluster.set_active(node.id, True)
        self.decisions += 1
        self.report.add_event(time, 'scale', 'failure_compensation', 'nodes +{}'.format(count))
        logger.info("t=%s activated %d reserve node(s) to compensate a failure", time, count)
        return True

    def _on_autoscale_tick(self, event):
        t = event.time
        policy = self.scenario.policy
        follow = []
        if t + policy.interval < self.scenario.horizon:
            follow.append(SimEvent(t + policy.interval, 'autoscale_tick'))

        if self.last_decision is not None and t - self.last_decision < policy.cooldown - EPSILON:
            return follow
        window = [s for time, s in self.samples if t - policy.window - EPSILON <= time < t]
        if not window:
            return follow

        decision = decide(observe(window), policy, self.placement, self.cluster, self.app)
        if decision.is_none:
            return follow

        detail = ' '.join('{}{:+d}'.format(op_id, d) for op_id, d in sorted(decision.op_parallelism_delta.items()))
        detail = '{} nodes {:+d}'.format(detail, decision.node_delta).strip()
        self.last_decision = t
        try:
            outcome = apply_decision(decision, self.app, self.cluster, self.placement)
        except (InfeasiblePlacementError, InvalidDecisionError) as e:
            self.report.add_event(t, 'rollback', decision.reason, str(e))
            logger.warning("t=%s %s decision rolled back: %s", t, decision.reason, e)
            return follow

        self.decisions += 1
        previous = self.placement
        self.cluster = outcome.cluster
        self.placement = outcome.placement
        self._resize(previous)
        self.report.add_event(t, 'scale', decision.reason, detail)
        for message in outcome.warnings:
            self.report.add_event(t, 'warning', decision.reason, message)
        self._snapshot(t)
        return follow

    def _resize(self, previous):
        """
        Creates queues for new replicas and hands the backlog of removed replicas to the survivors
        """
        for key in self.placement.instances():
            if key not in self.queues:
                self.queues[key] = 0
                self.credit[key] = 0.0
        for key in previous.instances():
            if key in self.placement.assignment:
                continue
            leftover = self.queues.pop(key)
            self.credit.pop(key)
            if leftover:
                self._deal(key[0], leftover)

    def _summarise(self):
        report = self.report
        if self.placement is not None:
            for op_id in self.order:
                report.counters[op_id].backlog = self._backlog(op_id)
        accuracy = accuracy_after(self.training, self.epochs)
        injected = sum(report.counters[s].received for s in self.app.sources()) if report.counters else 0
        summary = report.summary
        summary['seed'] = self.scenario.seed
        summary['horizon'] = float(self.scenario.horizon)
        summary['training_completion_time'] = self.completion_time
        summary['target_reached'] = self.target_reached
        summary['final_accuracy'] = accuracy
        summary['epochs'] = self.epochs
        summary['total_migrations'] = self.migrations
        summary['migration_cost'] = float(self.migration_cost)
        summary['replication_time'] = float(self.scenario.replication_time)
        summary['replicated_nodes'] = len(report.replicated_nodes)
        summary['model_version'] = self.model_version
        summary['scale_decisions'] = self.decisions
        summary['aborted'] = report.aborted
        summary['abort_reason'] = report.abort_reason
        summary['injected'] = injected
        summary['delivered'] = sum(report.counters[s].processed for s in self.app.sinks())
        summary['dropped'] = sum(c.dropped for c in report.counters.values())
        summary['in_flight'] = sum(c.backlog for c in report.counters.values())
        summary['peak_active_nodes'] = self.peak_active


def step(state, event):
    """
    Functional form of :meth:`Simulator.step`

    :param Simulator state: The run state
    :param SimEvent event: The event to apply
    :return: (state, emitted events)
    """
    return state, state.step(event)


def simulate(scenario):
    """
    Runs a scenario to its horizon.

    :param scenario: The :class:`c2e.app_model.Scenario`
    :raises ScenarioInvariantError: if the scenario does not validate
    :raises RunInvariantError: if the run loses tuples or records an invalid placement
    :return: the :class:`c2e.simengine.metrics.MetricsReport`; if the initial placement or a failure rebalance is
        infeasible the report is partial and ``aborted`` is set
    """
    violations = scenario_violations(scenario)
    if violations:
        raise ScenarioInvariantError(violations)
    simulator = Simulator(scenario)
    simulator.start()
    return simulator.run()
