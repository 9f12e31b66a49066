import math

from .process import ArrivalProcess


class ConstantArrivals(ArrivalProcess):
    """
    Deterministic arrivals: exactly ``rate * dt`` tuples per interval, the fractional part carried to the next one.
    The generator is not used.
    """

    name = 'constant'

    def __init__(self, rng=None):
        super(ConstantArrivals, self).__init__(rng)
        self._carry = 0.0

    def draw(self, rate, dt):
        expected = rate * dt + self._carry
        count = int(math.floor(expected + 1e-9))
        self._carry = max(expected - count, 0.0)
        return count
