"""
Provides a mechanism for reading and validating scenario documents in a complete and verifiable manner. The primary \
object, ScenarioDocument, is a ConfigParser-like object which uses an internal dict, voluptuous schemas and \
ConfigParser to read, override and write scenario options, and turns a document into a validated \
:class:`c2e.app_model.Scenario`.

A scenario document is an INI file::

    [scenario]
    seed = 7
    horizon = 200

    [app]
    model_class = MLP
    edges = ingest -> train, train -> sink

    [operator:ingest]
    kind = source
    sensitivity = d1

    [operator:train]
    kind = trainer
    cost_per_tuple = 0.01
    parallelism_min = 4
    parallelism_max = 4

    [operator:sink]
    kind = sink

    [cluster]
    pool_max = 16

    [profile:Jetson-AGX]
    MLP = 2.0

    [node:n01]
    tier = edge
    device = Jetson-AGX
    slots = 2
    hosted_datasets = d1

    [trace]
    breakpoints = 0:250, 200:1200, 500:250
    arrivals = poisson

    [failures]
    events = 22:n03, 22:n04

    [policy]
    theta_up = 0.8
    theta_down = 0.3

Sections ``[scenario]``, ``[cluster]``, ``[failures]``, ``[policy]``, ``[profile:<name>]`` and ``[training:<class>]`` are
optional; built-in device and training profiles are used when absent. Keyed sections are addressed in overrides as
``operator.<id>.<option>``, ``node.<id>.<option>`` and so on; options of ``[scenario]`` may be given bare
(``seed=7``).

Dataset descriptors for :mod:`c2e.dnn_config` use the same machinery with a single ``[dataset]`` section.
"""

import configparser
import io
import re
from copy import copy as _copy, deepcopy as _deepcopy

from voluptuous import Schema, Required, Optional, All, In, Range, Invalid, Coerce, MultipleInvalid

from .app_model import OperatorSpec, Scenario, TrainingApp
from .arrivals import SUPPORTED_ARRIVALS
from .autoscaler import AutoscalePolicy
from .cluster_model import (DEFAULT_PROFILES, DEFAULT_TRAINING, Cluster, DeviceProfile, FailureSchedule, NodeSpec,
                            TrainingProfile)
from .dnn_config import CAPACITY_THRESHOLD, DEFAULT_SPLIT, DataDescriptor, descriptor_violations
from .exceptions import (OverrideError, ScenarioInvariantError, ScenarioSyntaxError, UnknownConfigError,
                         UnknownReferenceError)
from .simengine import WorkloadTrace, scenario_violations

PLAIN_SECTIONS = ('scenario', 'app', 'cluster', 'trace', 'failures', 'policy')
KEYED_SECTIONS = ('operator', 'profile', 'node', 'training')
SECTION_ORDER = ('scenario', 'app', 'operator', 'cluster', 'profile', 'node', 'training', 'trace', 'failures',
                 'policy')

_SECTION_LINE = re.compile(r'^\s*\[([^\]]+)\]')


def bool_str(value):
    """
    Validation function for bool-like string values
    :param value: The configured value
    :return: True or False based on validity
    :raises Invalid: if not valid
    """
    if isinstance(value, bool):
        return value
    if not isinstance(value, str):
        raise Invalid("Value must be a string")
    elif value.strip().upper() not in ("TRUE", "FALSE"):
        raise Invalid("Value must be True or False")
    return value.strip().upper() == "TRUE"


def valid_template_value(value):
    """
    Validation function for template config strings
    :param value: The configured template value
    :return: value if valid
    :raises Invalid: if not valid
    """
    if not isinstance(value, str):
        raise Invalid("Template values must be strings")
    if value.startswith("CANNED:") or value.startswith("FILE:"):
        return value
    raise Invalid("Template values must start with 'CANNED:' or 'FILE:' and be the name of a canned template" +
                  " in c2e.templates or the path to a jinja2 template")


def optional_str(value):
    """
    Validation function for optional ids, the empty string meaning None
    """
    if value is None:
        return None
    value = str(value).strip()
    return value or None


def name_list(value):
    """
    Validation function for comma separated ids
    :return: frozenset of the ids
    """
    if isinstance(value, (set, frozenset, list, tuple)):
        return frozenset(value)
    return frozenset(v.strip() for v in str(value).split(',') if v.strip())


def number_list(kind):
    def validator(value):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [v for v in str(value).split(',') if v.strip()]
        try:
            return tuple(kind(v) for v in items)
        except ValueError:
            raise Invalid("expected comma separated {} values".format(kind.__name__))
    return validator


def edge_list(value):
    """
    Validation function for ``from -> to`` pairs
    :return: tuple of (from, to)
    :raises Invalid: if a pair has no arrow
    """
    edges = []
    for item in str(value).split(','):
        item = item.strip()
        if not item:
            continue
        if '->' not in item:
            raise Invalid("edge '{}' is not 'from -> to'".format(item))
        head, tail = item.split('->', 1)
        if not head.strip() or not tail.strip():
            raise Invalid("edge '{}' is not 'from -> to'".format(item))
        edges.append((head.strip(), tail.strip()))
    return tuple(edges)


def pair_list(second):
    """
    Validation function factory for ``t:value`` pairs with a float time
    """
    def validator(value):
        pairs = []
        for item in str(value).split(','):
            item = item.strip()
            if not item:
                continue
            if ':' not in item:
                raise Invalid("pair '{}' is not 't:value'".format(item))
            t, v = item.split(':', 1)
            try:
                pairs.append((float(t), second(v.strip())))
            except ValueError:
                raise Invalid("pair '{}' has a malformed value".format(item))
        return tuple(pairs)
    return validator


class ScenarioDocument(object):
    """
    This object supports and validates the scenario document schema. It behaves mostly like a ConfigParser object, \
    keeps every value as text until :meth:`to_scenario` and validates against the schema there.

    :param dict configuration: section -> {option: text}
    :param dict lines: section -> line number in the source text, used in error messages
    """

    _SCHEMAS = {
        'scenario': Schema({
            Required('seed', default=0): All(Coerce(int), Range(min=0)),
            Required('horizon', default=60.0): Coerce(float),
            Required('target_accuracy', default=0.98): Coerce(float),
            Required('queue_cap', default=0): Coerce(int),
            Required('replication_time', default=1.0): Coerce(float)}),
        'app': Schema({
            Required('model_class', default='MLP'): Coerce(str),
            Required('edges', default=''): edge_list}),
        'operator': Schema({
            Required('kind', default='transform'): Coerce(str),
            Required('sensitivity', default=''): optional_str,
            Required('selectivity', default=1.0): Coerce(float),
            Required('cost_per_tuple', default=0.001): Coerce(float),
            Required('parallelism_min', default=1): Coerce(int),
            Optional('parallelism_max'): Coerce(int),
            Required('state_size', default=1.0): Coerce(float)}),
        'cluster': Schema({
            Optional('pool_max'): Coerce(int),
            Optional('size'): All(Coerce(int), Range(min=1))}),
        'profile': Schema({Coerce(str): Coerce(float)}),
        'node': Schema({
            Required('tier'): Coerce(str),
            Required('device'): Coerce(str),
            Required('slots', default=1): Coerce(int),
            Required('hosted_datasets', default=''): name_list,
            Required('alive', default=True): bool_str,
            Required('active', default=True): bool_str}),
        'training': Schema({
            Required('a_max'): Coerce(float),
            Required('tau'): Coerce(float),
            Required('base_epoch_time'): Coerce(float)}),
        'trace': Schema({
            Required('breakpoints'): pair_list(float),
            Required('arrivals', default='poisson'): All(Coerce(str), In(SUPPORTED_ARRIVALS))}),
        'failures': Schema({
            Required('events', default=''): pair_list(str),
            Optional('limit'): All(Coerce(int), Range(min=0))}),
        'policy': Schema({
            Required('theta_up', default=0.8): Coerce(float),
            Required('theta_down', default=0.3): Coerce(float),
            Required('cooldown', default=30.0): Coerce(float),
            Required('window', default=60.0): Coerce(float),
            Required('node_step', default=1): Coerce(int),
            Required('interval', default=1.0): Coerce(float)}),
    }

    def __init__(self, configuration=None, lines=None):
        self._configuration = _deepcopy(configuration) if configuration else dict()
        self._lines = dict(lines or {})

    @classmethod
    def from_text(cls, text):
        """
        Reads a document

        :param str text: The INI text
        :raises ScenarioSyntaxError: if the text is empty or not well-formed INI
        :rtype: ScenarioDocument
        """
        if not text or not text.strip():
            raise ScenarioSyntaxError("empty scenario document", line=1)
        parser = _new_parser()
        try:
            parser.read_string(text)
        except configparser.MissingSectionHeaderError as e:
            raise ScenarioSyntaxError("option outside of a section: {}".format(e.line.strip()), line=e.lineno)
        except configparser.ParsingError as e:
            lineno, line = e.errors[0]
            raise ScenarioSyntaxError("cannot parse {}".format(line.strip()), line=lineno)
        except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
            raise ScenarioSyntaxError(e.message, line=e.lineno)

        lines = {}
        for number, line in enumerate(text.splitlines(), 1):
            match = _SECTION_LINE.match(line)
            if match and match.group(1) not in lines:
                lines[match.group(1)] = number
        return cls(cls._configparser_to_dict(parser), lines)

    @classmethod
    def from_scenario(cls, scenario):
        """
        The document of a scenario. Device and training profiles equal to the built-in ones are left out.

        :param c2e.app_model.Scenario scenario: The scenario
        :rtype: ScenarioDocument
        """
        config = dict()
        config['scenario'] = {
            'seed': scenario.seed,
            'horizon': scenario.horizon,
            'target_accuracy': scenario.target_accuracy,
            'queue_cap': scenario.queue_cap,
            'replication_time': scenario.replication_time}
        _app_sections(scenario.app, config)

        cluster = scenario.cluster
        config['cluster'] = {'pool_max': cluster.pool_max}
        for name in sorted(cluster.profiles):
            profile = cluster.profiles[name]
            if DEFAULT_PROFILES.get(name) != profile:
                config['profile:' + name] = dict((mc, profile.speedup[mc]) for mc in sorted(profile.speedup))
        for node in cluster.nodes:
            config['node:' + node.id] = {
                'tier': node.tier,
                'device': node.device,
                'slots': node.slots,
                'hosted_datasets': ', '.join(sorted(node.hosted_datasets)),
                'alive': node.alive,
                'active': node.active}
        for name in sorted(scenario.training):
            training = scenario.training[name]
            if DEFAULT_TRAINING.get(name) != training:
                config['training:' + name] = {
                    'a_max': training.a_max,
                    'tau': training.tau,
                    'base_epoch_time': training.base_epoch_time}

        config['trace'] = {
            'breakpoints': ', '.join('{}:{}'.format(_text(t), _text(r)) for t, r in scenario.trace.breakpoints),
            'arrivals': scenario.trace.arrivals}
        if scenario.failures.events:
            config['failures'] = {
                'events': ', '.join('{}:{}'.format(_text(t), n) for t, n in scenario.failures.events)}
        policy = scenario.policy
        config['policy'] = {
            'theta_up': policy.theta_up,
            'theta_down': policy.theta_down,
            'cooldown': policy.cooldown,
            'window': policy.window,
            'node_step': policy.node_step,
            'interval': policy.interval}
        return cls(_stringify(config))

    @staticmethod
    def _configparser_to_dict(config_parser):
        """
        Parses a ConfigParser object into a dict to evaluate against the voluptuous schemas.

        :param config_parser: The configparser object
        :type config_parser: configparser.ConfigParser
        :returns dict: Dict representing a document
        """
        config_dict = dict()
        for section in config_parser.sections():
            config_dict[section] = dict()
            for option in config_parser.options(section):
                config_dict[section][option] = config_parser.get(section, option)
        return config_dict

    @staticmethod
    def _dict_to_configparser(config_dict):
        """
        Parses a document dict into a ConfigParser object, sections in canonical order

        :param config_dict: The document as a dictionary
        :type config_dict: dict
        :returns configparser.ConfigParser: A populated ConfigParser object
        """
        config_parser = _new_parser()
        for section in sorted(config_dict, key=_section_rank):
            config_parser.add_section(section)
            for option in config_dict[section]:
                config_parser.set(section, option, _text(config_dict[section][option]))
        return config_parser

    @staticmethod
    def _kind(section):
        """
        The schema name of a section: ``node`` for ``node:n01``, None for unknown sections
        """
        if section in PLAIN_SECTIONS:
            return section
        if ':' in section:
            kind, key = section.split(':', 1)
            if kind in KEYED_SECTIONS and key:
                return kind
        return None

    def _options_of(self, kind):
        if kind == 'profile':
            return None
        return [option.schema for option in self._SCHEMAS[kind].schema]

    def get(self, section, option, raise_on_absent=True):
        """
        Gets the option text from the document

        :param section: The section the option is in, e.g. "policy" or "node:n01"
        :param option: The name of the option
        :raises UnknownConfigError: If the section and option are not found
        :returns: the option text
        """
        try:
            return _copy(self._configuration[section][option])
        except KeyError:
            if raise_on_absent:
                raise UnknownConfigError("{}/{} cannot be found in the scenario".format(section, option))
            else:
                return None

    def has(self, section, option):
        """
        Check if the option is in the document

        :returns: boolean for presence
        """
        try:
            self.get(section, option)
            return True
        except UnknownConfigError:
            return False

    def set(self, section, option, value=None):
        """
        Sets the option value in the provided section, creating the section if the schema knows it

        :param section: The section, e.g. "policy" or "node:n01"
        :param option: The name of the option
        :param value: The value, stored as text
        :raises UnknownConfigError: If the section and option are not valid in the scenario schema
        """
        kind = self._kind(section)
        allowed = self._options_of(kind) if kind else []
        if kind is None or (allowed is not None and option not in allowed):
            raise UnknownConfigError("Section:{} and Option:{} not valid on the scenario schema".format(
                section, option))
        if isinstance(value, dict):
            raise TypeError("Option values cannot be dictionaries")
        self._configuration.setdefault(section, dict())[option] = _text(value)

    def sections(self):
        """
        Returns the list of sections of the document in canonical order
        :return: list(str)
        """
        return sorted(self._configuration, key=_section_rank)

    def options(self, section):
        """
        Returns the list of option names set in the section
        :return: list(str)
        """
        return list(self._configuration[section].keys())

    def write(self, fp):
        """
        Persists the document to a file pointer
        :param fp: The file pointer into which the document should be persisted
        """
        config_parser = self._dict_to_configparser(self._configuration)
        config_parser.write(fp)

    def to_text(self):
        buffer = io.StringIO()
        self.write(buffer)
        return buffer.getvalue()

    def override(self, item):
        """
        Applies one ``dotted.path=value`` override: ``seed=7``, ``policy.theta_up=0.9``, ``node.n01.slots=3``

        :param str item: The override
        :raises OverrideError: if the path does not resolve to an option of the schema, or names an operator or node
            the document does not declare
        """
        if '=' not in item:
            raise OverrideError("override '{}' is not path=value".format(item))
        path, value = item.split('=', 1)
        parts = [p.strip() for p in path.strip().split('.')]

        if len(parts) == 1:
            section, option = 'scenario', parts[0]
        elif len(parts) == 2 and parts[0] in PLAIN_SECTIONS:
            section, option = parts
        elif len(parts) == 3 and parts[0] in KEYED_SECTIONS:
            section, option = '{}:{}'.format(parts[0], parts[1]), parts[2]
            if parts[0] in ('operator', 'node') and section not in self._configuration:
                raise OverrideError("override '{}' names an undeclared {}".format(item, parts[0]))
        else:
            raise OverrideError("override path '{}' does not resolve".format(path.strip()))

        try:
            self.set(section, option, value.strip())
        except UnknownConfigError:
            raise OverrideError("override path '{}' does not resolve".format(path.strip()))

    def _valid(self, section):
        kind = self._kind(section)
        try:
            return self._SCHEMAS[kind](dict(self._configuration.get(section, {})))
        except MultipleInvalid as e:
            problems = '; '.join('{}: {}'.format('.'.join(str(p) for p in error.path), error.msg)
                                 for error in e.errors)
            raise ScenarioSyntaxError("[{}] {}".format(section, problems), line=self._lines.get(section))

    def _keyed(self, kind):
        prefix = kind + ':'
        return [(s[len(prefix):], s) for s in sorted(self._configuration) if s.startswith(prefix)]

    def to_scenario(self):
        """
        Validates the document and builds the scenario.

        :raises ScenarioSyntaxError: for unknown or missing sections and malformed values
        :raises UnknownReferenceError: if an operator, device profile, dataset or node id does not resolve
        :raises ScenarioInvariantError: listing every failed invariant by name
        :rtype: c2e.app_model.Scenario
        """
        for section in self._configuration:
            if self._kind(section) is None:
                raise ScenarioSyntaxError("unknown section [{}]".format(section), line=self._lines.get(section))
        for required in ('app', 'trace'):
            if required not in self._configuration:
                raise ScenarioSyntaxError("missing section [{}]".format(required))
        if not self._keyed('node'):
            raise ScenarioSyntaxError("missing [node:<id>] sections")

        settings = self._valid('scenario')
        app = self._build_app()

        profiles = dict(DEFAULT_PROFILES)
        for name, section in self._keyed('profile'):
            speedup = dict(profiles[name].speedup) if name in profiles else dict()
            speedup.update(self._valid(section))
            profiles[name] = DeviceProfile(name, speedup)

        nodes = []
        for node_id, section in self._keyed('node'):
            values = self._valid(section)
            if values['device'] not in profiles:
                raise UnknownReferenceError('profile', values['device'], section)
            nodes.append(NodeSpec(id=node_id, **values))
        declared = set(n.id for n in nodes)
        hosted = set(d for n in nodes for d in n.hosted_datasets)
        for op in app.operators:
            if op.sensitive and op.sensitivity not in hosted:
                raise UnknownReferenceError('dataset', op.sensitivity, 'operator:' + op.id)

        cluster_values = self._valid('cluster')
        if 'size' in cluster_values:
            nodes = sorted(nodes, key=lambda n: n.id)[:cluster_values['size']]
        cluster = Cluster(nodes=nodes, pool_max=cluster_values.get('pool_max', len(nodes)), profiles=profiles)

        training = dict(DEFAULT_TRAINING)
        for name, section in self._keyed('training'):
            training[name] = TrainingProfile(model_class=name, **self._valid(section))

        trace_values = self._valid('trace')
        trace = WorkloadTrace(breakpoints=trace_values['breakpoints'], arrivals=trace_values['arrivals'])

        failure_values = self._valid('failures')
        for _, node_id in failure_values['events']:
            if node_id not in declared:
                raise UnknownReferenceError('node', node_id, 'failures.events')
        failures = FailureSchedule(events=failure_values['events'])
        if 'limit' in failure_values:
            failures = failures.prefix(failure_values['limit'])

        scenario = Scenario(app=app, cluster=cluster, trace=trace, failures=failures,
                            policy=AutoscalePolicy(**self._valid('policy')), training=training, **settings)
        violations = scenario_violations(scenario)
        if violations:
            raise ScenarioInvariantError(violations)
        return scenario

    def _build_app(self):
        app_values = self._valid('app')
        operators = []
        for op_id, section in self._keyed('operator'):
            values = self._valid(section)
            values.setdefault('parallelism_max', values['parallelism_min'])
            operators.append(OperatorSpec(id=op_id, **values))
        known = set(o.id for o in operators)
        for u, v in app_values['edges']:
            for ref in (u, v):
                if ref not in known:
                    raise UnknownReferenceError('operator', ref, 'app.edges')
        return TrainingApp(operators=operators, edges=app_values['edges'], model_class=app_values['model_class'])


def _new_parser():
    parser = configparser.ConfigParser(interpolation=None, default_section='__defaults__')
    parser.optionxform = str
    return parser


def _section_rank(section):
    kind = section.split(':', 1)[0]
    rank = SECTION_ORDER.index(kind) if kind in SECTION_ORDER else len(SECTION_ORDER)
    return rank, section


def _text(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _stringify(config):
    return dict((section, dict((k, _text(v)) for k, v in options.items())) for section, options in config.items())


def _app_sections(app, config):
    config['app'] = {
        'model_class': app.model_class,
        'edges': ', '.join('{} -> {}'.format(u, v) for u, v in app.edges)}
    for op in app.operators:
        config['operator:' + op.id] = {
            'kind': op.kind,
            'sensitivity': op.sensitivity or '',
            'selectivity': op.selectivity,
            'cost_per_tuple': op.cost_per_tuple,
            'parallelism_min': op.parallelism_min,
            'parallelism_max': op.parallelism_max,
            'state_size': op.state_size}


def render_app(app):
    """
    The ``[app]`` and ``[operator:<id>]`` sections of a training application, ready to be combined with cluster,
    trace and policy sections into a full scenario
    """
    config = dict()
    _app_sections(app, config)
    return ScenarioDocument(_stringify(config)).to_text()


def validate_scenario(text, overrides=None):
    """
    Parses a document and collects its invariant violations instead of raising them.

    :raises ScenarioSyntaxError: if the text is not a well-formed document
    :raises UnknownReferenceError: if an id does not resolve
    :raises OverrideError: if an override does not resolve
    :return: list of :class:`c2e.app_model.Violation`, empty iff the scenario is valid
    """
    document = ScenarioDocument.from_text(text)
    for item in overrides or ():
        document.override(item)
    try:
        document.to_scenario()
    except ScenarioInvariantError as e:
        return e.violations
    return []


def id_pairs(value):
    """
    Validation function for ``shard:node`` pairs
    :return: tuple of (shard, node)
    """
    pairs = []
    for item in str(value).split(','):
        item = item.strip()
        if not item:
            continue
        shard, _, node = item.partition(':')
        if not shard.strip() or not node.strip():
            raise Invalid("partition '{}' is not 'shard:node'".format(item))
        pairs.append((shard.strip(), node.strip()))
    return tuple(pairs)


DESCRIPTOR_SCHEMA = Schema({
    Required('dataset'): {
        Required('sample_type'): Coerce(str),
        Required('shape'): number_list(int),
        Required('label_type'): Coerce(str),
        Required('n_classes', default=1): Coerce(int),
        Required('n_samples'): Coerce(int),
        Required('sensitive_dataset', default=''): optional_str,
        Required('partitions', default=''): id_pairs,
        Required('split', default=DEFAULT_SPLIT): number_list(float),
        Required('capacity_threshold', default=CAPACITY_THRESHOLD): Coerce(int)},
})


def parse_descriptor(text):
    """
    Reads a dataset descriptor document::

        [dataset]
        sample_type = image
        shape = 480, 640, 3
        label_type = bbox2d
        n_classes = 1
        n_samples = 50000
        sensitive_dataset = d1
        partitions = s1:edge1, s2:edge2

    :param str text: The INI text
    :raises ScenarioSyntaxError: if the text is empty, not INI or does not match the descriptor schema
    :raises ScenarioInvariantError: if the descriptor breaks its invariants
    :rtype: c2e.dnn_config.DataDescriptor
    """
    if not text or not text.strip():
        raise ScenarioSyntaxError("empty descriptor document", line=1)
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioSyntaxError("option outside of a section: {}".format(e.line.strip()), line=e.lineno)
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ScenarioSyntaxError("cannot parse {}".format(line.strip()), line=lineno)
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ScenarioSyntaxError(e.message, line=e.lineno)

    try:
        values = DESCRIPTOR_SCHEMA(ScenarioDocument._configparser_to_dict(parser))['dataset']
    except MultipleInvalid as e:
        raise ScenarioSyntaxError('; '.join('{}: {}'.format('.'.join(str(p) for p in error.path), error.msg)
                                            for error in e.errors))

    descriptor = DataDescriptor(sample_type=values['sample_type'], sample_shape=values['shape'],
                                label_type=values['label_type'], n_classes=values['n_classes'],
                                n_samples=values['n_samples'], sensitive_dataset=values['sensitive_dataset'],
                                partitions=values['partitions'], split=values['split'],
                                capacity_threshold=values['capacity_threshold'])
    violations = descriptor_violations(descriptor)
    if violations:
        raise ScenarioInvariantError(violations)
    return descriptor
