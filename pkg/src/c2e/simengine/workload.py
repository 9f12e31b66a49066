import bisect
from dataclasses import dataclass

from ..app_model import Violation


@dataclass(frozen=True)
class WorkloadTrace(object):
    """
    Piecewise-constant input rate

    :ivar tuple breakpoints: (t, rate) pairs; the rate holds from ``t`` until the next breakpoint
    :ivar str arrivals: Name of the arrival process drawing whole tuples from the rate
    """
    breakpoints: tuple = ((0.0, 0.0),)
    arrivals: str = 'poisson'

    def __post_init__(self):
        object.__setattr__(self, 'breakpoints', tuple((float(t), float(r)) for t, r in self.breakpoints))

    def rate_at(self, t):
        """
        Nominal tuples per second at time ``t`` (0 before the first breakpoint)
        """
        times = [b[0] for b in self.breakpoints]
        index = bisect.bisect_right(times, t) - 1
        if index < 0:
            return 0.0
        return self.breakpoints[index][1]


def trace_violations(trace):
    violations = []
    times = [t for t, _ in trace.breakpoints]
    if not times or times[0] != 0:
        violations.append(Violation('trace starts at 0', "first breakpoint at {}".format(times[0] if times else None)))
    if any(b <= a for a, b in zip(times, times[1:])):
        violations.append(Violation('trace times strictly increasing', "times {}".format(times)))
    negative = [t for t, r in trace.breakpoints if r < 0]
    if negative:
        violations.append(Violation('rate >= 0', "negative rate at t = {}".format(negative)))
    return violations
