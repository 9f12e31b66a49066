"""Arrival processes turn the nominal input rate of a workload trace into whole tuple counts per simulated interval.
They are the only consumers of randomness in a run and draw from the single generator owned by the simulator, so a
run is a pure function of its seed.

Here is a code example of using an arrival process (in this case PoissonArrivals)::

    import numpy

    from c2e.arrivals.poisson import PoissonArrivals

    arrivals = PoissonArrivals(numpy.random.default_rng(7))

    # tuples injected during one second at 250 tuples/s
    count = arrivals.draw(rate=250.0, dt=1.0)

All processes support the same ``draw`` method.
"""

from abc import ABCMeta, abstractmethod


class ArrivalProcess(object, metaclass=ABCMeta):
    """
    The abstract base class of arrival processes. It only sets the method contract and keeps the generator.

    :param rng: The run's random generator
    :type rng: numpy.random.Generator

    :ivar numpy.random.Generator rng: The generator draws come from
    """

    name = None

    def __init__(self, rng):
        self.rng = rng

    @abstractmethod
    def draw(self, rate, dt):
        """
        Number of tuples arriving in an interval

        :param float rate: Nominal tuples per second
        :param float dt: Interval length in seconds
        :return: non-negative tuple count
        :rtype: int
        """
        pass
