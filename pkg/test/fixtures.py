"""
Shared builders for the unit tests
"""

import os

from c2e.app_model import OperatorSpec, Scenario, TrainingApp, parse_scenario
from c2e.autoscaler import AutoscalePolicy
from c2e.cluster_model import Cluster, FailureSchedule, NodeSpec
from c2e.simengine import WorkloadTrace

SCENARIOS = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, 'scenarios')


def scenario_path(name):
    return os.path.join(SCENARIOS, name)


def read_scenario(name):
    with open(scenario_path(name), 'r') as f:
        return f.read()


def load_scenario(name, *overrides):
    return parse_scenario(read_scenario(name), overrides)


def chain(*ops, model_class='MLP'):
    """
    A linear app over the given operators, in argument order
    """
    edges = [(a.id, b.id) for a, b in zip(ops, ops[1:])]
    return TrainingApp(operators=ops, edges=edges, model_class=model_class)


def simple_app(model_class='MLP', sensitivity=None):
    return chain(OperatorSpec('ingest', 'source', sensitivity=sensitivity),
                 OperatorSpec('train', 'trainer', selectivity=0.01, cost_per_tuple=0.01),
                 OperatorSpec('sink', 'sink'),
                 model_class=model_class)


def node(node_id, tier='cloud', device='reference-CPU', slots=1, datasets=(), alive=True, active=True):
    return NodeSpec(id=node_id, tier=tier, device=device, slots=slots, hosted_datasets=frozenset(datasets),
                    alive=alive, active=active)


def cluster(*nodes, pool_max=None):
    return Cluster(nodes=nodes, pool_max=pool_max if pool_max is not None else len(nodes))


def scenario(app, nodes, rate=100.0, horizon=30.0, failures=(), policy=None, **settings):
    return Scenario(app=app, cluster=nodes, trace=WorkloadTrace(breakpoints=((0.0, rate),), arrivals='constant'),
                    failures=FailureSchedule(events=tuple(failures)), policy=policy or AutoscalePolicy(),
                    horizon=horizon, **settings)


def lose_excess(simulator, op_id, cap):
    """
    Stand-in for the simulator's queue trimming that cuts queues without counting the drops
    """
    for key in simulator.placement.instances_of(op_id):
        simulator.queues[key] = min(simulator.queues[key], cap)
    return 0
