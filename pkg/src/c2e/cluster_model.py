"""
The heterogeneous cloud/edge node pool: device speed profiles, nodes, the cluster snapshot, training-progress curves
and the failure process.

Device profiles express how many times faster a device trains an epoch than the reference CPU, per model class. The
GPU rows are the measured factors (MLP/CNN): Tesla-K20c 14/73 and Quadro-K4000 6/38. The edge rows (Jetson-AGX,
Kalray-Konic, RaspberryPi-3B+) are nominal and meant to be overridden from a scenario's ``[profile:<name>]`` sections.

Clusters are immutable snapshots. Every state change (a failure, a node activation) returns a new :class:`Cluster`,
so snapshots handed to the placer or recorded in metrics never change under the reader.
"""

import logging
import math
from dataclasses import dataclass, field, replace

from .exceptions import MissingSpeedupError, UnknownNodeError, NodeAlreadyFailedError

logger = logging.getLogger(__name__)

MODEL_CLASSES = ('MLP', 'CNN')
TIERS = ('cloud', 'edge')


@dataclass(frozen=True)
class DeviceProfile(object):
    """
    Per model-class epoch-time divisor relative to the reference CPU

    :ivar str name: The profile name nodes refer to, e.g. "Tesla-K20c"
    :ivar dict speedup: model class -> positive ratio
    """
    name: str
    speedup: dict = field(default_factory=dict)

    def speedup_for(self, model_class):
        """
        :raises MissingSpeedupError: if the profile declares nothing for the model class
        """
        try:
            return self.speedup[model_class]
        except KeyError:
            raise MissingSpeedupError("device profile {} has no speedup for {}".format(self.name, model_class))


@dataclass(frozen=True)
class NodeSpec(object):
    """
    A cloud or edge node

    :ivar str id: Node identifier
    :ivar str tier: "cloud" or "edge"
    :ivar str device: Name of the :class:`DeviceProfile` of the node
    :ivar int slots: Maximum number of operator instances hosted at once
    :ivar frozenset hosted_datasets: Sensitive datasets produced or stored on the node (edge only)
    :ivar bool alive: False once the node has failed; never comes back within a run
    :ivar bool active: Whether the node is part of the active pool (inactive alive nodes are the scaling reserve)
    """
    id: str
    tier: str
    device: str
    slots: int = 1
    hosted_datasets: frozenset = frozenset()
    alive: bool = True
    active: bool = True

    @property
    def available(self):
        return self.alive and self.active


@dataclass(frozen=True)
class TrainingProfile(object):
    """
    Saturating-exponential training progress of a model class

    :ivar str model_class: "MLP" or "CNN"
    :ivar float a_max: Plateau accuracy
    :ivar float tau: Epochs-to-plateau time constant
    :ivar float base_epoch_time: Seconds per epoch on the reference CPU
    """
    model_class: str
    a_max: float
    tau: float
    base_epoch_time: float


@dataclass(frozen=True)
class FailureSchedule(object):
    """
    Timed, permanent node failures

    :ivar tuple events: (time, node_id) pairs with non-decreasing times
    """
    events: tuple = ()

    def prefix(self, count):
        return FailureSchedule(events=tuple(self.events[:count]))


# tau values solve a_max * (1 - exp(-e / tau)) = 0.98 for e = 5 (CNN) and e = 50 (MLP), rounded down so that the
# anchor epoch reaches the target.
DEFAULT_TRAINING = {
    'MLP': TrainingProfile(model_class='MLP', a_max=0.9856, tau=9.6, base_epoch_time=14.0),
    'CNN': TrainingProfile(model_class='CNN', a_max=0.9921, tau=1.13, base_epoch_time=73.0),
}

DEFAULT_PROFILES = {
    'reference-CPU': DeviceProfile('reference-CPU', {'MLP': 1.0, 'CNN': 1.0}),
    'Tesla-K20c': DeviceProfile('Tesla-K20c', {'MLP': 14.0, 'CNN': 73.0}),
    'Quadro-K4000': DeviceProfile('Quadro-K4000', {'MLP': 6.0, 'CNN': 38.0}),
    'Jetson-AGX': DeviceProfile('Jetson-AGX', {'MLP': 2.0, 'CNN': 10.0}),
    'Kalray-Konic': DeviceProfile('Kalray-Konic', {'MLP': 1.5, 'CNN': 8.0}),
    'RaspberryPi-3B+': DeviceProfile('RaspberryPi-3B+', {'MLP': 0.25, 'CNN': 0.5}),
}


@dataclass(frozen=True)
class Cluster(object):
    """
    Snapshot of the node pool

    :ivar tuple nodes: :class:`NodeSpec` entries ordered by id
    :ivar int pool_max: Maximum number of nodes the autoscaler may have active
    :ivar dict profiles: profile name -> :class:`DeviceProfile`
    """
    nodes: tuple = ()
    pool_max: int = 1
    profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(sorted(self.nodes, key=lambda n: n.id)))

    def node(self, node_id):
        """
        :raises UnknownNodeError: if the node is not part of the cluster
        """
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise UnknownNodeError("node '{}' is not part of the cluster".format(node_id))

    def node_ids(self):
        return [n.id for n in self.nodes]

    def alive_nodes(self):
        return [n for n in self.nodes if n.alive]

    def available_nodes(self):
        """
        Nodes instances may be placed on: alive and active
        """
        return [n for n in self.nodes if n.available]

    def reserve_nodes(self):
        """
        Alive nodes outside the active pool, in id order
        """
        return [n for n in self.nodes if n.alive and not n.active]

    def speedup(self, node_id, model_class):
        node = self.node(node_id)
        return self.profiles[node.device].speedup_for(model_class)

    def with_node(self, node):
        """
        Returns a copy of the cluster where the node with the same id is replaced
        """
        return replace(self, nodes=tuple(node if n.id == node.id else n for n in self.nodes))

    def set_active(self, node_id, active):
        return self.with_node(replace(self.node(node_id), active=active))


def device_epoch_time(profile, training):
    """
    Seconds needed for one epoch of ``training`` on a device of the given profile

    :param DeviceProfile profile: The device
    :param TrainingProfile training: The model-class training profile
    :raises MissingSpeedupError: if the profile has no entry for the model class
    :rtype: float
    """
    return training.base_epoch_time / profile.speedup_for(training.model_class)


def accuracy_after(training, epochs):
    """
    Accuracy reached after a number of epochs: ``a_max * (1 - exp(-epochs / tau))``

    :param TrainingProfile training: The training profile
    :param epochs: Completed epochs (non-negative)
    :rtype: float
    """
    if epochs <= 0:
        return 0.0
    return training.a_max * (1.0 - math.exp(-float(epochs) / training.tau))


def epochs_to_accuracy(training, target):
    """
    Smallest whole number of epochs whose accuracy reaches ``target``

    :return: the epoch count, or None if the plateau lies below the target
    :rtype: int or None
    """
    if target <= 0:
        return 0
    if target >= training.a_max:
        return None
    estimate = int(math.ceil(-training.tau * math.log(1.0 - target / training.a_max)))
    # float slack around the closed form
    epochs = max(estimate - 1, 0)
    while accuracy_after(training, epochs) < target:
        epochs += 1
    return epochs


def apply_failure(cluster, node_id, time, placement=None):
    """
    Permanently fail a node.

    The node leaves both the alive set and the active pool; datasets hosted on it become unreachable because
    placement only considers alive nodes.

    :param Cluster cluster: The current cluster snapshot
    :param str node_id: The failing node
    :param float time: Simulated time of the failure (used for logging)
    :param placement: The current :class:`c2e.placer.Placement`, if any
    :return: (updated cluster, sorted list of evicted instance ids)
    :raises UnknownNodeError: if the node does not exist
    :raises NodeAlreadyFailedError: if the node has already failed
    """
    node = cluster.node(node_id)
    if not node.alive:
        raise NodeAlreadyFailedError("node '{}' has already failed".format(node_id))

    updated = cluster.with_node(replace(node, alive=False, active=False))
    evicted = placement.instances_on(node_id) if placement is not None else []
    logger.info("t=%s node %s failed, %d instance(s) evicted", time, node_id, len(evicted))
    return updated, evicted
