import unittest

from hypothesis import given, strategies as st

from c2e.cluster_model import (DEFAULT_PROFILES, DEFAULT_TRAINING, DeviceProfile, FailureSchedule, TrainingProfile,
                               accuracy_after, apply_failure, device_epoch_time, epochs_to_accuracy)
from c2e.exceptions import MissingSpeedupError, NodeAlreadyFailedError, UnknownNodeError
from c2e.placer import Placement

from .fixtures import cluster, node


class DeviceProfileTest(unittest.TestCase):

    def test_gpu_epoch_times(self):
        mlp, cnn = DEFAULT_TRAINING['MLP'], DEFAULT_TRAINING['CNN']
        self.assertAlmostEqual(1.0, device_epoch_time(DEFAULT_PROFILES['Tesla-K20c'], mlp))
        self.assertAlmostEqual(1.0, device_epoch_time(DEFAULT_PROFILES['Tesla-K20c'], cnn))
        self.assertAlmostEqual(14.0 / 6.0, device_epoch_time(DEFAULT_PROFILES['Quadro-K4000'], mlp))
        self.assertAlmostEqual(73.0 / 38.0, device_epoch_time(DEFAULT_PROFILES['Quadro-K4000'], cnn))

    def test_reference_cpu_is_unit(self):
        for training in DEFAULT_TRAINING.values():
            self.assertEqual(training.base_epoch_time,
                             device_epoch_time(DEFAULT_PROFILES['reference-CPU'], training))

    def test_missing_model_class(self):
        profile = DeviceProfile('fpga', {'MLP': 3.0})
        with self.assertRaises(MissingSpeedupError):
            device_epoch_time(profile, DEFAULT_TRAINING['CNN'])


class TrainingCurveTest(unittest.TestCase):

    def test_anchor_epochs(self):
        self.assertEqual(50, epochs_to_accuracy(DEFAULT_TRAINING['MLP'], 0.98))
        self.assertEqual(5, epochs_to_accuracy(DEFAULT_TRAINING['CNN'], 0.98))

    def test_accuracy_is_monotone_and_bounded(self):
        for training in DEFAULT_TRAINING.values():
            values = [accuracy_after(training, e) for e in range(0, 30)]
            self.assertEqual(0.0, values[0])
            self.assertTrue(all(b > a for a, b in zip(values, values[1:])))
            self.assertTrue(all(v < training.a_max for v in values))

    @given(st.sampled_from(sorted(DEFAULT_TRAINING)), st.floats(min_value=0.0, max_value=200.0),
           st.floats(min_value=0.0, max_value=50.0))
    def test_more_epochs_never_lose_accuracy(self, model_class, epochs, extra):
        training = DEFAULT_TRAINING[model_class]
        self.assertLessEqual(accuracy_after(training, epochs), accuracy_after(training, epochs + extra))
        self.assertLessEqual(accuracy_after(training, epochs + extra), training.a_max)

    @given(st.floats(min_value=0.01, max_value=1.0), st.floats(min_value=0.05, max_value=100.0),
           st.lists(st.floats(min_value=0.0, max_value=500.0), min_size=2, max_size=12))
    def test_any_profile_rises_towards_its_plateau(self, a_max, tau, epochs):
        training = TrainingProfile('MLP', a_max, tau, 10.0)
        values = [accuracy_after(training, e) for e in sorted(epochs)]
        self.assertEqual(values, sorted(values))
        self.assertTrue(all(0.0 <= v <= a_max for v in values))

    def test_unreachable_target(self):
        self.assertIsNone(epochs_to_accuracy(DEFAULT_TRAINING['MLP'], 0.99))

    def test_target_edge(self):
        training = DEFAULT_TRAINING['MLP']
        epochs = epochs_to_accuracy(training, 0.9)
        self.assertGreaterEqual(accuracy_after(training, epochs), 0.9)
        self.assertLess(accuracy_after(training, epochs - 1), 0.9)


class ApplyFailureTest(unittest.TestCase):

    def setUp(self):
        self.cluster = cluster(node('cloud', slots=2), node('edge1', 'edge', slots=3, datasets=['d1']),
                               node('edge2', 'edge', slots=3, datasets=['d1']))
        self.placement = Placement(assignment={('A', 0): 'edge1', ('A', 1): 'edge2', ('B', 0): 'cloud'},
                                   parallelism={'A': 2, 'B': 1})

    def test_evicts_instances_of_the_node(self):
        updated, evicted = apply_failure(self.cluster, 'edge1', 5.0, self.placement)
        self.assertEqual([('A', 0)], evicted)
        self.assertFalse(updated.node('edge1').alive)
        self.assertFalse(updated.node('edge1').active)
        self.assertTrue(self.cluster.node('edge1').alive)
        self.assertEqual(['cloud', 'edge2'], [n.id for n in updated.alive_nodes()])

    def test_unknown_node(self):
        with self.assertRaises(UnknownNodeError):
            apply_failure(self.cluster, 'edge9', 1.0)

    def test_second_failure_of_a_node(self):
        updated, _ = apply_failure(self.cluster, 'cloud', 1.0)
        with self.assertRaises(NodeAlreadyFailedError):
            apply_failure(updated, 'cloud', 2.0)

    def test_schedule_prefix(self):
        schedule = FailureSchedule(events=((22.0, 'n03'), (22.0, 'n04'), (30.0, 'n05')))
        self.assertEqual(((22.0, 'n03'), (22.0, 'n04')), schedule.prefix(2).events)
        self.assertEqual((), schedule.prefix(0).events)


class ClusterTest(unittest.TestCase):

    def test_reserve_nodes(self):
        c = cluster(node('n1'), node('n2', active=False), node('n3', active=False, alive=False), pool_max=3)
        self.assertEqual(['n2'], [n.id for n in c.reserve_nodes()])
        self.assertEqual(['n1'], [n.id for n in c.available_nodes()])
        self.assertEqual(['n1', 'n2'], [n.id for n in c.set_active('n2', True).available_nodes()])


if __name__ == '__main__':
    unittest.main()
