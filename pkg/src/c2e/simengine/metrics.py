"""
The metrics of a simulation run and their CSV export.

Three files make up an export, with fixed names and column orders:

``timeseries.csv``
    one row per simulated second: ``time, input_rate, injected, processed_rate, delivered, alive_node_count,
    active_node_count, epochs, accuracy`` followed by ``backlog_<op>, parallelism_<op>, utilization_<op>`` for every
    operator in topological order.
``events.csv``
    ``time, kind, subject, detail`` rows for placements, scale decisions, rollbacks, failures, evictions, epochs,
    training completion and replication.
``summary.csv``
    ``metric, value`` rows for the scalars of the run.

Numbers are written as the shortest decimal that round-trips (``repr``), so equal reports export to equal bytes.
"""

import csv
import logging
import os
from collections import OrderedDict

from ..exceptions import ExportError

logger = logging.getLogger(__name__)

BASE_COLUMNS = ['time', 'input_rate', 'injected', 'processed_rate', 'delivered', 'alive_node_count',
                'active_node_count', 'epochs', 'accuracy']
EVENT_COLUMNS = ['time', 'kind', 'subject', 'detail']
SUMMARY_COLUMNS = ['metric', 'value']

TIMESERIES_FILE = 'timeseries.csv'
EVENTS_FILE = 'events.csv'
SUMMARY_FILE = 'summary.csv'


def format_value(value):
    """
    Shortest round-trip text for a metric value
    """
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


class OperatorCounters(object):
    """
    Tuple accounting of one operator

    :ivar int received: Tuples that arrived (injected for sources, upstream output otherwise)
    :ivar int processed: Tuples served
    :ivar int dropped: Tuples refused by the queue cap
    :ivar int emitted: Tuples sent downstream (``floor(processed * selectivity)``)
    :ivar int backlog: Tuples queued at the end of the run
    """

    def __init__(self):
        self.received = 0
        self.processed = 0
        self.dropped = 0
        self.emitted = 0
        self.backlog = 0


class MetricsReport(object):
    """
    Everything a run records.

    :param list operators: Operator ids in topological order (fixes the per-operator column order)

    :ivar list columns: Time-series column names
    :ivar list rows: Time-series rows, one per simulated second
    :ivar list events: (time, kind, subject, detail) rows
    :ivar OrderedDict summary: Scalar results
    :ivar list snapshots: (time, placement, cluster) at every placement change
    :ivar dict counters: operator_id -> :class:`OperatorCounters`
    :ivar bool aborted: True if the run stopped early (infeasible placement)
    """

    def __init__(self, operators=()):
        self.operators = list(operators)
        self.columns = list(BASE_COLUMNS)
        for op_id in self.operators:
            self.columns.extend(['backlog_' + op_id, 'parallelism_' + op_id, 'utilization_' + op_id])
        self.rows = []
        self.events = []
        self.summary = OrderedDict()
        self.snapshots = []
        self.counters = OrderedDict((op_id, OperatorCounters()) for op_id in self.operators)
        self.aborted = False
        self.abort_reason = None
        self.epoch_times = []
        self.replicated_nodes = []

    def add_row(self, values):
        self.rows.append([values[c] for c in self.columns])

    def add_event(self, time, kind, subject='', detail=''):
        self.events.append((time, kind, subject, detail))

    def add_snapshot(self, time, placement, cluster):
        self.snapshots.append((time, placement, cluster))
        for op_id, index, node_id in placement.rows():
            self.add_event(time, 'placement', '{}#{}'.format(op_id, index), node_id)

    def abort(self, time, reason):
        self.aborted = True
        self.abort_reason = reason
        self.add_event(time, 'infeasible', '', reason)
        logger.warning("run aborted at t=%s: %s", time, reason)

    def column(self, name):
        """
        One time-series column as a list
        """
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def conservation_violations(self, predecessors):
        """
        Checks tuple conservation per operator: received = processed + dropped + backlog, and every non-source
        operator received exactly what its predecessors emitted.

        :param dict predecessors: operator_id -> list of predecessor ids
        :rtype: list of str
        """
        problems = []
        for op_id, c in self.counters.items():
            if c.received != c.processed + c.dropped + c.backlog:
                problems.append("{}: received {} != processed {} + dropped {} + backlog {}".format(
                    op_id, c.received, c.processed, c.dropped, c.backlog))
            preds = predecessors.get(op_id, [])
            if preds:
                upstream = sum(self.counters[p].emitted for p in preds)
                if upstream != c.received:
                    problems.append("{}: received {} != upstream emitted {}".format(op_id, c.received, upstream))
        return problems


def _write(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def export_metrics(report, path):
    """
    Writes ``timeseries.csv``, ``events.csv`` and ``summary.csv`` into the directory ``path`` (created if missing).

    :param MetricsReport report: A complete report, or a partial one flagged ``aborted``
    :param str path: Output directory
    :raises ExportError: if the directory or files cannot be written
    :return: list of written file paths
    """
    written = []
    try:
        if not os.path.isdir(path):
            os.makedirs(path)
        timeseries = os.path.join(path, TIMESERIES_FILE)
        _write(timeseries, report.columns, report.rows)
        written.append(timeseries)

        events = os.path.join(path, EVENTS_FILE)
        _write(events, EVENT_COLUMNS, report.events)
        written.append(events)

        summary = os.path.join(path, SUMMARY_FILE)
        _write(summary, SUMMARY_COLUMNS, list(report.summary.items()))
        written.append(summary)
    except OSError as e:
        raise ExportError("cannot write metrics to {}: {}".format(path, e))
    logger.debug("exported %s", ', '.join(written))
    return written
