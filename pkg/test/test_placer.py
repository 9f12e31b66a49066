import unittest

import numpy
from hypothesis import given, settings, strategies as st

from c2e.app_model import OperatorSpec
from c2e.cluster_model import apply_failure
from c2e.exceptions import InfeasiblePlacementError, InstanceTooLargeError
from c2e.placer import (Placement, check_placement, estimate_cost, feasible_nodes, moved_instances,
                        optimal_place_bruteforce, place, rebalance)

from .fixtures import chain, cluster, load_scenario, node


def four_operators():
    s = load_scenario('fig4_placement.cfg')
    return s.app, s.cluster


@st.composite
def small_instances(draw):
    """
    A chain of up to four operators on up to three homogeneous nodes, some operators tied to dataset d0
    """
    length = draw(st.integers(min_value=2, max_value=4))
    ops = []
    for i in range(length):
        kind = 'source' if i == 0 else ('sink' if i == length - 1 else 'transform')
        sensitive = draw(st.floats(min_value=0, max_value=1)) < 0.3
        par = draw(st.integers(min_value=1, max_value=2))
        ops.append(OperatorSpec('op{}'.format(i), kind, sensitivity='d0' if sensitive else None,
                                cost_per_tuple=draw(st.sampled_from([0.001, 0.002, 0.005])),
                                parallelism_min=par, parallelism_max=par))
    nodes = []
    for i in range(draw(st.integers(min_value=1, max_value=3))):
        edge = draw(st.booleans())
        hosts = edge and draw(st.booleans())
        nodes.append(node('n{}'.format(i), 'edge' if edge else 'cloud', slots=draw(st.integers(1, 3)),
                          datasets=['d0'] if hosts else []))
    return chain(*ops), cluster(*nodes)


def outcome(function, app, c):
    try:
        return function(app, c)
    except InfeasiblePlacementError:
        return None


class PlaceTest(unittest.TestCase):

    def test_four_operator_example(self):
        app, c = four_operators()
        placement = place(app, c)
        self.assertEqual({('A', 0): 'edge1', ('A', 1): 'edge2', ('B', 0): 'cloud', ('C', 0): 'edge1',
                          ('C', 1): 'edge2', ('C', 2): 'cloud', ('D', 0): 'edge1'}, placement.assignment)
        self.assertEqual({'A': 2, 'B': 1, 'C': 3, 'D': 1}, placement.parallelism)
        self.assertEqual([], check_placement(placement, app, c))

    def test_sensitive_operator_stays_on_hosting_edge(self):
        app, c = four_operators()
        self.assertEqual(frozenset(['edge1', 'edge2']), feasible_nodes(app.operator('A'), c))
        self.assertEqual(frozenset(['cloud', 'edge1', 'edge2']), feasible_nodes(app.operator('B'), c))

    def test_no_host_is_infeasible(self):
        app = chain(OperatorSpec('a', 'source', sensitivity='d9'), OperatorSpec('b', 'sink'))
        with self.assertRaises(InfeasiblePlacementError) as context:
            place(app, cluster(node('c1', slots=4), node('e1', 'edge', slots=4, datasets=['d1'])))
        self.assertEqual('a', context.exception.operator)
        self.assertIn('d9', context.exception.reason)

    def test_too_few_slots(self):
        app = chain(OperatorSpec('a', 'source', parallelism_min=3, parallelism_max=3), OperatorSpec('b', 'sink'))
        with self.assertRaises(InfeasiblePlacementError):
            place(app, cluster(node('c1', slots=2), node('c2', slots=1)))

    def test_deterministic(self):
        app, c = four_operators()
        self.assertEqual(place(app, c), place(app, c))


class RebalanceTest(unittest.TestCase):

    def test_only_evicted_instances_move(self):
        s = load_scenario('fig4_placement.cfg', 'node.cloud.slots=4')
        app, c = s.app, s.cluster
        before = place(app, c)
        failed, evicted = apply_failure(c, 'edge2', 10.0, before)
        self.assertEqual([('A', 1), ('D', 0)], evicted)
        after = rebalance(before, app, failed, evicted)
        self.assertEqual(set(evicted), set(moved_instances(before, after)))
        self.assertEqual('edge1', after.assignment[('A', 1)])
        self.assertEqual('cloud', after.assignment[('D', 0)])
        self.assertEqual([], check_placement(after, app, failed))

    def test_lost_dataset_is_infeasible(self):
        app, c = four_operators()
        before = place(app, c)
        c, _ = apply_failure(c, 'edge2', 10.0, before)
        c, evicted = apply_failure(c, 'edge1', 11.0, before)
        with self.assertRaises(InfeasiblePlacementError) as context:
            rebalance(before, app, c, evicted + before.instances_on('edge2'))
        self.assertEqual('A', context.exception.operator)

    def test_nothing_evicted(self):
        app, c = four_operators()
        before = place(app, c)
        self.assertIs(before, rebalance(before, app, c, []))


class CostTest(unittest.TestCase):

    def test_bottleneck_estimate(self):
        app = chain(OperatorSpec('a', 'source', cost_per_tuple=0.001),
                    OperatorSpec('t', 'trainer', cost_per_tuple=0.01, selectivity=0.5),
                    OperatorSpec('k', 'sink', cost_per_tuple=0.001))
        c = cluster(node('g', device='Tesla-K20c', slots=3))
        cost = estimate_cost(place(app, c), app, c, rate=1400.0)
        self.assertAlmostEqual(1.0, cost.est_epoch_time)
        self.assertEqual(0.0, cost.migration_cost)

    def test_migration_cost_counts_state(self):
        app = chain(OperatorSpec('a', 'source'), OperatorSpec('t', 'trainer', state_size=8.0),
                    OperatorSpec('k', 'sink'))
        c = cluster(node('n1', slots=3), node('n2', slots=3))
        before = Placement(assignment={('a', 0): 'n1', ('t', 0): 'n1', ('k', 0): 'n1'},
                           parallelism={'a': 1, 't': 1, 'k': 1})
        after = Placement(assignment={('a', 0): 'n1', ('t', 0): 'n2', ('k', 0): 'n1'},
                          parallelism={'a': 1, 't': 1, 'k': 1})
        self.assertEqual(8.0, estimate_cost(after, app, c, 10.0, previous=before).migration_cost)


class CheckPlacementTest(unittest.TestCase):

    def test_reports_broken_constraints(self):
        app, c = four_operators()
        broken = Placement(assignment={('A', 0): 'cloud', ('A', 1): 'edge2', ('B', 0): 'cloud', ('C', 0): 'cloud',
                                       ('C', 1): 'edge2', ('D', 0): 'edge1'},
                           parallelism={'A': 2, 'B': 1, 'C': 3, 'D': 1})
        problems = check_placement(broken, app, c)
        self.assertTrue(any('sensitive instance (A, 0)' in p for p in problems))
        self.assertTrue(any('node cloud hosts 3 instances' in p for p in problems))
        self.assertTrue(any('operator C replicas' in p for p in problems))


class OracleTest(unittest.TestCase):

    def test_too_large_for_exhaustive_search(self):
        app = chain(*[OperatorSpec('o{}'.format(i), 'source' if i == 0 else 'transform') for i in range(7)])
        with self.assertRaises(InstanceTooLargeError):
            optimal_place_bruteforce(app, cluster(node('n1', slots=10)))

    def test_oracle_on_four_operator_example(self):
        app, c = four_operators()
        best = optimal_place_bruteforce(app, c)
        self.assertEqual([], check_placement(best, app, c))
        greedy = place(app, c)
        rate = 100.0
        self.assertLessEqual(estimate_cost(best, app, c, rate).est_epoch_time,
                             estimate_cost(greedy, app, c, rate).est_epoch_time + 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(small_instances())
    def test_greedy_never_breaks_constraints(self, instance):
        app, c = instance
        greedy = outcome(place, app, c)
        oracle = outcome(optimal_place_bruteforce, app, c)
        if greedy is not None:
            self.assertEqual([], check_placement(greedy, app, c))
            self.assertIsNotNone(oracle)
        if oracle is not None:
            self.assertEqual([], check_placement(oracle, app, c))

    def test_agreement_with_oracle(self):
        rng = numpy.random.default_rng(11)
        solvable = found = 0
        for _ in range(500):
            length = int(rng.integers(2, 5))
            ops = []
            for i in range(length):
                kind = 'source' if i == 0 else ('sink' if i == length - 1 else 'transform')
                par = int(rng.integers(1, 3))
                ops.append(OperatorSpec('op{}'.format(i), kind, sensitivity='d0' if rng.random() < 0.3 else None,
                                        parallelism_min=par, parallelism_max=par))
            nodes = []
            for i in range(int(rng.integers(1, 4))):
                edge = bool(rng.random() < 0.5)
                nodes.append(node('n{}'.format(i), 'edge' if edge else 'cloud', slots=int(rng.integers(1, 4)),
                                  datasets=['d0'] if edge and rng.random() < 0.5 else []))
            app, c = chain(*ops), cluster(*nodes)
            oracle = outcome(optimal_place_bruteforce, app, c)
            if oracle is None:
                continue
            solvable += 1
            greedy = outcome(place, app, c)
            if greedy is None:
                continue
            found += 1
            self.assertEqual([], check_placement(greedy, app, c))
            ratio = (estimate_cost(greedy, app, c, 100.0).est_epoch_time /
                     estimate_cost(oracle, app, c, 100.0).est_epoch_time)
            self.assertLessEqual(ratio, 1.5)
        self.assertGreaterEqual(solvable, 50)
        self.assertGreaterEqual(found / float(solvable), 0.95)


if __name__ == '__main__':
    unittest.main()
