import heapq
import itertools
from dataclasses import dataclass, field

# Order of kinds at equal time; completion bookkeeping first, fresh work last.
EVENT_KINDS = ('epoch_complete', 'training_complete', 'replication_done', 'failure', 'autoscale_tick', 'tuple_batch')
PRIORITY = dict((kind, rank) for rank, kind in enumerate(EVENT_KINDS))


@dataclass(frozen=True)
class SimEvent(object):
    """
    :ivar float time: Simulated seconds
    :ivar str kind: One of :data:`EVENT_KINDS`
    :ivar dict payload: Kind specific data, e.g. ``{'node': 'n03'}`` for a failure
    """
    time: float
    kind: str
    payload: dict = field(default_factory=dict)


class EventQueue(object):
    """
    Events ordered by (time, kind priority, insertion sequence)
    """

    def __init__(self):
        self._heap = []
        self._sequence = itertools.count()

    def push(self, event):
        heapq.heappush(self._heap, (event.time, PRIORITY[event.kind], next(self._sequence), event))

    def pop(self):
        return heapq.heappop(self._heap)[-1]

    def __len__(self):
        return len(self._heap)
