import unittest

from hypothesis import given, settings, strategies as st

from c2e.app_model import OperatorSpec
from c2e.autoscaler import (NO_DECISION, AutoscalePolicy, OperatorSample, ScaleDecision, UtilizationStats,
                            apply_decision, decide, observe, policy_violations)
from c2e.exceptions import EmptyWindowError, InfeasiblePlacementError, InvalidDecisionError
from c2e.placer import check_placement, place

from .fixtures import chain, cluster, node


def setup_pool():
    app = chain(OperatorSpec('src', 'source'), OperatorSpec('prep', parallelism_min=2, parallelism_max=4),
                OperatorSpec('sink', 'sink'))
    c = cluster(node('n1'), node('n2'), node('n3'), node('n4'), node('n5', active=False), pool_max=5)
    return app, c, place(app, c)


def stats(**utilization):
    return UtilizationStats(utilization=utilization, trend=dict((k, 'flat') for k in utilization))


class ObserveTest(unittest.TestCase):

    def test_empty_window(self):
        with self.assertRaises(EmptyWindowError):
            observe([])

    def test_utilization_is_mean_demand_over_mean_capacity(self):
        window = [{'a': OperatorSample(demand=1.0, capacity=2.0, backlog=0)},
                  {'a': OperatorSample(demand=3.0, capacity=2.0, backlog=0)}]
        self.assertAlmostEqual(1.0, observe(window).utilization['a'])

    def test_backlog_trend(self):
        rising = [{'a': OperatorSample(1.0, 1.0, b)} for b in (0, 0, 10, 20)]
        falling = [{'a': OperatorSample(1.0, 1.0, b)} for b in (20, 10, 0, 0)]
        flat = [{'a': OperatorSample(1.0, 1.0, 5)}]
        self.assertEqual('rising', observe(rising).trend['a'])
        self.assertEqual('falling', observe(falling).trend['a'])
        self.assertEqual('flat', observe(flat).trend['a'])


class DecideTest(unittest.TestCase):

    def setUp(self):
        self.app, self.cluster, self.placement = setup_pool()
        self.policy = AutoscalePolicy(theta_up=0.8, theta_down=0.3)

    def test_initial_layout(self):
        self.assertEqual({('prep', 0): 'n1', ('prep', 1): 'n2', ('sink', 0): 'n3', ('src', 0): 'n4'},
                         self.placement.assignment)

    def test_overload_adds_replica_and_node(self):
        decision = decide(stats(prep=0.9, sink=0.1, src=0.1), self.policy, self.placement, self.cluster, self.app)
        self.assertEqual(ScaleDecision(op_parallelism_delta={'prep': 1}, node_delta=1, reason='overload'), decision)

    def test_dead_band(self):
        decision = decide(stats(prep=0.5, sink=0.1, src=0.1), self.policy, self.placement, self.cluster, self.app)
        self.assertIs(NO_DECISION, decision)

    def test_overload_at_maximum(self):
        decision = decide(stats(src=0.95, prep=0.5, sink=0.1), self.policy, self.placement, self.cluster, self.app)
        self.assertTrue(decision.is_none)

    def test_underload_at_minimum(self):
        decision = decide(stats(prep=0.1, sink=0.1, src=0.1), self.policy, self.placement, self.cluster, self.app)
        self.assertTrue(decision.is_none)

    def test_policy_invariants(self):
        self.assertEqual([], policy_violations(self.policy))
        names = [v.name for v in policy_violations(AutoscalePolicy(theta_up=0.3, theta_down=0.5, cooldown=0))]
        self.assertEqual(['theta_down < theta_up', 'cooldown > 0'], names)


class ApplyDecisionTest(unittest.TestCase):

    def setUp(self):
        self.app, self.cluster, self.placement = setup_pool()
        self.policy = AutoscalePolicy()

    def test_scale_out_then_in(self):
        out = ScaleDecision(op_parallelism_delta={'prep': 1}, node_delta=1, reason='overload')
        grown = apply_decision(out, self.app, self.cluster, self.placement)
        self.assertEqual([], grown.warnings)
        self.assertTrue(grown.cluster.node('n5').active)
        self.assertEqual('n5', grown.placement.assignment[('prep', 2)])
        self.assertEqual(3, grown.placement.parallelism['prep'])
        for key, node_id in self.placement.assignment.items():
            self.assertEqual(node_id, grown.placement.assignment[key])
        self.assertEqual([], check_placement(grown.placement, self.app, grown.cluster))

        shrink = decide(stats(prep=0.1, sink=0.1, src=0.1), self.policy, grown.placement, grown.cluster, self.app)
        self.assertEqual(ScaleDecision(op_parallelism_delta={'prep': -1}, node_delta=-1, reason='underload'), shrink)
        shrunk = apply_decision(shrink, self.app, grown.cluster, grown.placement)
        self.assertEqual(self.placement, shrunk.placement)
        self.assertFalse(shrunk.cluster.node('n5').active)
        self.assertTrue(shrunk.cluster.node('n5').alive)

    def test_no_decision_is_identity(self):
        outcome = apply_decision(NO_DECISION, self.app, self.cluster, self.placement)
        self.assertIs(self.placement, outcome.placement)
        self.assertIs(self.cluster, outcome.cluster)

    def test_bounds(self):
        with self.assertRaises(InvalidDecisionError):
            apply_decision(ScaleDecision({'prep': -1}, 0, 'underload'), self.app, self.cluster, self.placement)
        with self.assertRaises(InvalidDecisionError):
            apply_decision(ScaleDecision({'prep': 1}, 2, 'overload'), self.app, self.cluster, self.placement)

    def test_release_only_empty_nodes(self):
        decision = ScaleDecision(op_parallelism_delta={}, node_delta=-1, reason='underload')
        outcome = apply_decision(decision, self.app, self.cluster, self.placement)
        self.assertEqual(self.cluster, outcome.cluster)
        self.assertEqual(["requested release of 1 node(s), 0 empty"], outcome.warnings)


LOADS = st.sampled_from([0.0, 0.1, 0.5, 0.9, 1.5])


class ScaleSequenceTest(unittest.TestCase):

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(LOADS, LOADS, LOADS), min_size=1, max_size=25))
    def test_bounds_hold_for_any_sequence(self, loads):
        app, c, placement = setup_pool()
        policy = AutoscalePolicy()
        for src, prep, sink in loads:
            decision = decide(stats(src=src, prep=prep, sink=sink), policy, placement, c, app)
            try:
                outcome = apply_decision(decision, app, c, placement)
            except InfeasiblePlacementError:
                continue
            c, placement = outcome.cluster, outcome.placement
            for op in app.operators:
                self.assertTrue(op.parallelism_min <= placement.parallelism[op.id] <= op.parallelism_max)
            self.assertTrue(1 <= len(c.available_nodes()) <= c.pool_max)
            self.assertEqual([], check_placement(placement, app, c))


if __name__ == '__main__':
    unittest.main()
