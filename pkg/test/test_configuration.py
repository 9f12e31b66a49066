import unittest

from voluptuous import Invalid

from c2e.configuration import (ScenarioDocument, bool_str, edge_list, pair_list, parse_descriptor, render_app,
                               validate_scenario)
from c2e.dnn_config import generate_training_dag, suggest_architectures
from c2e.exceptions import (OverrideError, ScenarioInvariantError, ScenarioSyntaxError, UnknownConfigError,
                            UnknownReferenceError)

from .fixtures import read_scenario

MINIMAL = """
[app]
edges = a -> b

[operator:a]
kind = source

[operator:b]
kind = sink

[node:n1]
tier = cloud
device = reference-CPU

[trace]
breakpoints = 0:10
"""


class ValidatorTest(unittest.TestCase):

    def test_bool_str(self):
        self.assertTrue(bool_str(' True'))
        self.assertFalse(bool_str('false'))
        self.assertRaises(Invalid, bool_str, 'maybe')

    def test_edges_and_pairs(self):
        self.assertEqual((('a', 'b'), ('b', 'c')), edge_list('a -> b, b->c'))
        self.assertRaises(Invalid, edge_list, 'a - b')
        self.assertEqual(((0.0, 250.0), (200.0, 1200.0)), pair_list(float)('0:250, 200:1200'))
        self.assertRaises(Invalid, pair_list(float), '0:fast')


class ReadTest(unittest.TestCase):

    def test_defaults(self):
        scenario = ScenarioDocument.from_text(MINIMAL).to_scenario()
        self.assertEqual(0, scenario.seed)
        self.assertEqual(60.0, scenario.horizon)
        self.assertEqual(1, scenario.cluster.pool_max)
        self.assertEqual('poisson', scenario.trace.arrivals)
        self.assertEqual(0.8, scenario.policy.theta_up)
        self.assertEqual((), scenario.failures.events)

    def test_empty_document(self):
        with self.assertRaises(ScenarioSyntaxError):
            ScenarioDocument.from_text('  \n')

    def test_syntax_error_names_the_line(self):
        with self.assertRaises(ScenarioSyntaxError) as context:
            ScenarioDocument.from_text("[app]\nedges = a -> b\nthis is not an option\n")
        self.assertEqual(3, context.exception.line)

    def test_option_outside_section(self):
        with self.assertRaises(ScenarioSyntaxError) as context:
            ScenarioDocument.from_text("seed = 1\n[app]\n")
        self.assertEqual(1, context.exception.line)

    def test_unknown_section(self):
        with self.assertRaises(ScenarioSyntaxError) as context:
            ScenarioDocument.from_text(MINIMAL + "\n[extras]\nfoo = 1\n").to_scenario()
        self.assertIn('[extras]', str(context.exception))

    def test_missing_trace(self):
        with self.assertRaises(ScenarioSyntaxError):
            ScenarioDocument.from_text(MINIMAL.replace('[trace]\nbreakpoints = 0:10\n', '')).to_scenario()

    def test_malformed_value(self):
        with self.assertRaises(ScenarioSyntaxError) as context:
            ScenarioDocument.from_text(MINIMAL.replace('device = reference-CPU', 'device = reference-CPU\n'
                                                                               'slots = many')).to_scenario()
        self.assertIn('node:n1', str(context.exception))
        self.assertEqual(MINIMAL.splitlines().index('[node:n1]') + 1, context.exception.line)

    def test_unknown_references(self):
        cases = [
            (MINIMAL.replace('edges = a -> b', 'edges = a -> c'), 'operator'),
            (MINIMAL.replace('device = reference-CPU', 'device = TPU-v9'), 'profile'),
            (MINIMAL.replace('kind = source', 'kind = source\nsensitivity = d7'), 'dataset'),
            (MINIMAL + "\n[failures]\nevents = 5:n9\n", 'node'),
        ]
        for text, kind in cases:
            with self.assertRaises(UnknownReferenceError) as context:
                ScenarioDocument.from_text(text).to_scenario()
            self.assertEqual(kind, context.exception.kind)

    def test_invariants_collected(self):
        text = MINIMAL + "\n[policy]\ntheta_up = 0.2\ntheta_down = 0.5\n"
        with self.assertRaises(ScenarioInvariantError) as context:
            ScenarioDocument.from_text(text).to_scenario()
        self.assertEqual(['theta_down < theta_up'], [v.name for v in context.exception.violations])
        self.assertEqual(['theta_down < theta_up'], [v.name for v in validate_scenario(text)])
        self.assertEqual([], validate_scenario(MINIMAL))

    def test_profile_sections_merge(self):
        text = MINIMAL + "\n[profile:Jetson-AGX]\nMLP = 3.5\n\n[profile:fpga]\nMLP = 4\nCNN = 9\n"
        profiles = ScenarioDocument.from_text(text).to_scenario().cluster.profiles
        self.assertEqual({'MLP': 3.5, 'CNN': 10.0}, profiles['Jetson-AGX'].speedup)
        self.assertEqual({'MLP': 4.0, 'CNN': 9.0}, profiles['fpga'].speedup)
        self.assertIn('Tesla-K20c', profiles)

    def test_cluster_size_keeps_first_nodes(self):
        scenario = ScenarioDocument.from_text(read_scenario('fig7a_fault_16.cfg'))
        scenario.override('cluster.size=8')
        scenario.override('failures.limit=0')
        cluster = scenario.to_scenario().cluster
        self.assertEqual(['n0{}'.format(i) for i in range(1, 9)], cluster.node_ids())
        self.assertEqual(16, cluster.pool_max)


class OverrideTest(unittest.TestCase):

    def setUp(self):
        self.document = ScenarioDocument.from_text(read_scenario('fig7a_fault_16.cfg'))

    def test_paths(self):
        self.document.override('seed=9')
        self.document.override('policy.theta_up = 0.9')
        self.document.override('node.n01.slots=3')
        self.document.override('operator.train.parallelism_max=6')
        scenario = self.document.to_scenario()
        self.assertEqual(9, scenario.seed)
        self.assertEqual(0.9, scenario.policy.theta_up)
        self.assertEqual(3, scenario.cluster.node('n01').slots)
        self.assertEqual(6, scenario.app.operator('train').parallelism_max)

    def test_unresolvable(self):
        for item in ('seed', 'policy.speed=1', 'node.n99.slots=2', 'operator.ghost.kind=sink', 'a.b.c.d=1',
                     'warp=9'):
            with self.assertRaises(OverrideError):
                self.document.override(item)

    def test_get_set_has(self):
        self.assertEqual('22:n03, 22:n04, 22:n05, 22:n06', self.document.get('failures', 'events'))
        self.assertFalse(self.document.has('failures', 'limit'))
        self.document.set('failures', 'limit', 2)
        self.assertEqual('2', self.document.get('failures', 'limit'))
        self.assertIsNone(self.document.get('policy', 'nothing', raise_on_absent=False))
        with self.assertRaises(UnknownConfigError):
            self.document.set('policy', 'nothing', 1)
        self.assertEqual('scenario', self.document.sections()[0])


class DescriptorTest(unittest.TestCase):

    def test_parse(self):
        d = parse_descriptor("[dataset]\nsample_type = image\nshape = 480, 640, 3\nlabel_type = bbox2d\n"
                             "n_samples = 50000\nsensitive_dataset = d1\npartitions = s1:edge1, s2:edge2\n")
        self.assertEqual((480, 640, 3), d.sample_shape)
        self.assertEqual((('s1', 'edge1'), ('s2', 'edge2')), d.partitions)
        self.assertEqual(1, d.n_classes)
        self.assertEqual(40000, d.training_samples)

    def test_bad_descriptor(self):
        with self.assertRaises(ScenarioSyntaxError):
            parse_descriptor("[dataset]\nsample_type = image\n")
        with self.assertRaises(ScenarioInvariantError):
            parse_descriptor("[dataset]\nsample_type = image\nshape = 4, 4\nlabel_type = bbox2d\nn_samples = 10\n")

    def test_render_app(self):
        d = parse_descriptor(read_scenario('descriptors/gps_sequence.cfg'))
        text = render_app(generate_training_dag(suggest_architectures(d)[0], d))
        self.assertTrue(text.startswith('[app]\nmodel_class = MLP\nedges = ingest -> train, train -> engine\n'))
        self.assertIn('[operator:ingest]', text)
        self.assertIn('sensitivity = gps', text)


if __name__ == '__main__':
    unittest.main()
