"""
Front-end of the network configuration manager: from a description of a dataset it infers the input and output layer
shapes, sizes the model from the amount of training data, suggests backbone/head pairs and emits the training
application that trains the chosen architecture on the cluster.

No tensors or weights are built here; the emitted :class:`c2e.app_model.TrainingApp` is a cost model whose training
progress comes from the :mod:`c2e.cluster_model` profiles.

Here is a code example for an image detection dataset split over two vehicles::

    from c2e.dnn_config import DataDescriptor, suggest_architectures, generate_training_dag

    descriptor = DataDescriptor(sample_type='image', sample_shape=(480, 640, 3), label_type='bbox2d', n_classes=1,
                                n_samples=50000, sensitive_dataset='d1',
                                partitions=(('s1', 'edge1'), ('s2', 'edge2')))

    best = suggest_architectures(descriptor)[0]     # Darknet + YoloV5
    app = generate_training_dag(best, descriptor)   # ingest (2 instances) -> train -> engine
"""

import logging
import math
from dataclasses import dataclass

from .app_model import OperatorSpec, TrainingApp, Violation
from .exceptions import (MissingPartitionsError, NoCompatibleArchitectureError, UnknownReferenceError,
                         UnsupportedDescriptorError)

logger = logging.getLogger(__name__)

SAMPLE_TYPES = ('image', 'lidar_points', 'gps_sequence', 'log_trace')
LABEL_TYPES = ('class_label', 'bbox2d', 'segmentation_mask', 'sequence_label')
SEQUENCE_SAMPLES = ('gps_sequence', 'log_trace')

# number of values in the sample shape of each sample type
SAMPLE_ARITY = {'image': 3, 'lidar_points': 2, 'gps_sequence': 2, 'log_trace': 2}

CAPACITY_THRESHOLD = 10000
DEFAULT_SPLIT = (0.8, 0.1, 0.1)

YOLO_GRID = 13
YOLO_ANCHORS = 3

BACKBONES = {
    'light': ('VGG16', 'MobileNetV2', 'Darknet'),
    'heavy': ('Darknet', 'MobileNetV2', 'VGG16'),
}
DETECTION_HEADS = ('YoloV5', 'YoloV4', 'YoloV3', 'RetinaNet', 'SSD')
HEAD_LAYERS = {'light': 2, 'heavy': 4}
LSTM_UNITS = 256

TRAINER_COST = {'light': 0.005, 'heavy': 0.02}
TRAINER_STATE = {'light': 2.0, 'heavy': 8.0}


@dataclass(frozen=True)
class DataDescriptor(object):
    """
    Structure and placement of a training dataset

    :ivar str sample_type: image, lidar_points, gps_sequence or log_trace
    :ivar tuple sample_shape: (h, w, channels) for images, (points, dims) for lidar, (length, features) for sequences
    :ivar str label_type: class_label, bbox2d, segmentation_mask or sequence_label
    :ivar int n_classes: Number of label classes
    :ivar int n_samples: Number of samples before the split
    :ivar str sensitive_dataset: Dataset id if the data is sensitive, None otherwise
    :ivar tuple partitions: (shard_id, node_id) pairs, the node being where the shard is produced
    :ivar tuple split: train, evaluation and test fractions
    :ivar int capacity_threshold: Training samples from which the heavy capacity class is used
    """
    sample_type: str
    sample_shape: tuple
    label_type: str
    n_classes: int
    n_samples: int
    sensitive_dataset: str = None
    partitions: tuple = ()
    split: tuple = DEFAULT_SPLIT
    capacity_threshold: int = CAPACITY_THRESHOLD

    @property
    def training_samples(self):
        return int(math.floor(self.n_samples * self.split[0] + 1e-9))


@dataclass(frozen=True)
class ArchSpec(object):
    """
    A suggested network anatomy

    :ivar tuple input_shape: Input layer shape
    :ivar tuple output_shape: Output layer shape
    :ivar str backbone: VGG16, MobileNetV2, Darknet, or None for recurrent models
    :ivar str head: YoloV3, YoloV4, YoloV5, RetinaNet, SSD, SoftmaxClassifier or LSTMSequence
    :ivar str capacity_class: light or heavy
    :ivar int head_layers: Layers of the prediction head
    :ivar int head_units: Recurrent units of an LSTMSequence head, None otherwise
    """
    input_shape: tuple
    output_shape: tuple
    backbone: str
    head: str
    capacity_class: str
    head_layers: int = 2
    head_units: int = None


def descriptor_violations(d):
    """
    :return: list of :class:`c2e.app_model.Violation` for the descriptor's own invariants
    """
    violations = []
    if d.sample_type not in SAMPLE_TYPES:
        violations.append(Violation('sample_type', "unknown sample type {}".format(d.sample_type)))
    elif len(d.sample_shape) != SAMPLE_ARITY[d.sample_type] or any(v < 1 for v in d.sample_shape):
        violations.append(Violation('sample_shape', "{} needs {} positive values, got {}".format(
            d.sample_type, SAMPLE_ARITY[d.sample_type], list(d.sample_shape))))
    if d.label_type not in LABEL_TYPES:
        violations.append(Violation('label_type', "unknown label type {}".format(d.label_type)))
    if d.n_classes < 1:
        violations.append(Violation('n_classes >= 1', "n_classes = {!r}".format(d.n_classes)))
    if d.n_samples < 1:
        violations.append(Violation('n_samples >= 1', "n_samples = {!r}".format(d.n_samples)))
    if (len(d.split) != 3 or any(f < 0 for f in d.split) or d.split[0] <= 0
            or abs(sum(d.split) - 1.0) > 1e-9):
        violations.append(Violation('split', "fractions {} must be non-negative, sum to 1, train > 0".format(
            list(d.split))))
    shards = [s for s, _ in d.partitions]
    repeated = sorted(set(s for s in shards if shards.count(s) > 1))
    if repeated:
        violations.append(Violation('shard ids unique', "repeated: {}".format(', '.join(repeated))))
    if d.capacity_threshold < 1:
        violations.append(Violation('capacity_threshold >= 1', "capacity_threshold = {!r}".format(
            d.capacity_threshold)))
    return violations


def infer_io_shapes(d):
    """
    Input and output layer shapes of a dataset.

    Images give ``[h, w, c]``, lidar ``[points, dims]`` and sequences ``[length, features]``. Class and sequence
    labels give ``[n]``, 2D boxes the single-scale detection layout ``[13, 13, 3, 5 + n]`` and segmentation masks one
    score per class and input element.

    :param DataDescriptor d: The dataset
    :raises UnsupportedDescriptorError: for a sample/label pair without a shape convention
    :return: (input_shape, output_shape) tuples
    """
    n = d.n_classes
    if d.sample_type not in SAMPLE_TYPES or d.label_type not in LABEL_TYPES:
        raise UnsupportedDescriptorError(d.sample_type, d.label_type)
    input_shape = tuple(int(v) for v in d.sample_shape)

    if d.label_type == 'class_label':
        output_shape = (n,)
    elif d.label_type == 'bbox2d' and d.sample_type == 'image':
        output_shape = (YOLO_GRID, YOLO_GRID, YOLO_ANCHORS, 5 + n)
    elif d.label_type == 'segmentation_mask' and d.sample_type == 'image':
        output_shape = (input_shape[0], input_shape[1], n)
    elif d.label_type == 'segmentation_mask' and d.sample_type == 'lidar_points':
        output_shape = (input_shape[0], n)
    elif d.label_type == 'sequence_label' and d.sample_type in SEQUENCE_SAMPLES:
        output_shape = (n,)
    else:
        raise UnsupportedDescriptorError(d.sample_type, d.label_type)
    return input_shape, output_shape


def capacity_class(n_samples, threshold=CAPACITY_THRESHOLD):
    """
    Model capacity sized from the amount of training data: light below ``threshold`` samples, heavy from it on

    :rtype: str
    """
    return 'light' if n_samples < threshold else 'heavy'


def _heads(d):
    if d.label_type == 'bbox2d':
        return DETECTION_HEADS
    if d.label_type == 'sequence_label':
        return ('LSTMSequence',)
    return ('SoftmaxClassifier',)


def suggest_architectures(d):
    """
    Candidate architectures, best first.

    Backbones come in capacity order (VGG16 first when data is scarce, Darknet first otherwise) and, for each backbone,
    heads in recency order. Sequence data gets a recurrent model without a convolutional backbone.

    :param DataDescriptor d: The dataset
    :raises UnsupportedDescriptorError: if the shapes cannot be inferred
    :raises NoCompatibleArchitectureError: if no backbone/head pair fits
    :rtype: list of ArchSpec
    """
    input_shape, output_shape = infer_io_shapes(d)
    capacity = capacity_class(d.training_samples, d.capacity_threshold)
    layers = HEAD_LAYERS[capacity]

    if d.sample_type in SEQUENCE_SAMPLES:
        backbones = (None,)
    else:
        backbones = BACKBONES[capacity]

    suggestions = []
    for backbone in backbones:
        for head in _heads(d):
            if head == 'LSTMSequence' and backbone is not None:
                continue
            units = LSTM_UNITS if head == 'LSTMSequence' else None
            suggestions.append(ArchSpec(input_shape=input_shape, output_shape=output_shape, backbone=backbone,
                                        head=head, capacity_class=capacity, head_layers=layers, head_units=units))
    if not suggestions:
        raise NoCompatibleArchitectureError("no architecture fits {} + {}".format(d.sample_type, d.label_type))
    logger.debug("%d suggestion(s) for %s + %s (%s)", len(suggestions), d.sample_type, d.label_type, capacity)
    return suggestions


def model_class_for(d):
    """
    Training profile of the generated app: convolutional data trains like the CNN profile, sequences like the MLP one
    """
    return 'MLP' if d.sample_type in SEQUENCE_SAMPLES else 'CNN'


def generate_training_dag(arch, d):
    """
    The training application for an architecture: ``ingest -> train -> engine``.

    ``ingest`` is the source, one instance per partition shard, tagged with the sensitive dataset if there is one.
    ``train`` is the trainer, its cost per tuple following the capacity class. ``engine`` aggregates the trained
    model into the deployable inference engine.

    :param ArchSpec arch: One of :func:`suggest_architectures` ``(d)``
    :param DataDescriptor d: The dataset
    :raises MissingPartitionsError: if the descriptor lists no partition
    :rtype: c2e.app_model.TrainingApp
    """
    if not d.partitions:
        raise MissingPartitionsError("descriptor has no partitions to ingest from")
    shards = len(d.partitions)
    capacity = arch.capacity_class

    operators = [
        OperatorSpec('ingest', 'source', sensitivity=d.sensitive_dataset or None, selectivity=1.0,
                     cost_per_tuple=0.001, parallelism_min=shards, parallelism_max=shards, state_size=1.0),
        OperatorSpec('train', 'trainer', selectivity=0.01, cost_per_tuple=TRAINER_COST[capacity],
                     parallelism_min=1, parallelism_max=2 * shards, state_size=TRAINER_STATE[capacity]),
        OperatorSpec('engine', 'aggregator', selectivity=1.0, cost_per_tuple=0.001, parallelism_min=1,
                     parallelism_max=1, state_size=1.0),
    ]
    edges = [('ingest', 'train'), ('train', 'engine')]
    return TrainingApp(operators=operators, edges=edges, model_class=model_class_for(d))


def bind_descriptor(d, cluster):
    """
    Checks the partitions of a descriptor against a cluster: every shard node must be an edge node and, for sensitive
    data, host the dataset.

    :param DataDescriptor d: The dataset
    :param cluster: The :class:`c2e.cluster_model.Cluster`
    :raises UnknownReferenceError: if a shard names a node the cluster does not have
    :return: list of :class:`c2e.app_model.Violation`
    """
    violations = []
    known = set(cluster.node_ids())
    for shard, node_id in d.partitions:
        if node_id not in known:
            raise UnknownReferenceError('node', node_id, 'partition {}'.format(shard))
        node = cluster.node(node_id)
        if node.tier != 'edge':
            violations.append(Violation('shard on edge node', "{} is produced on {} node {}".format(
                shard, node.tier, node_id)))
        elif d.sensitive_dataset and d.sensitive_dataset not in node.hosted_datasets:
            violations.append(Violation('shard node hosts dataset', "{} does not host {} for {}".format(
                node_id, d.sensitive_dataset, shard)))
    return violations
