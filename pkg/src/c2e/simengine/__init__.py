from .workload import WorkloadTrace, trace_violations
from .events import EVENT_KINDS, EventQueue, SimEvent
from .metrics import MetricsReport, export_metrics
from .engine import Simulator, scenario_violations, simulate, step
