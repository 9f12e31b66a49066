from .process import ArrivalProcess


class PoissonArrivals(ArrivalProcess):
    """
    Poisson arrivals with mean ``rate * dt`` per interval
    """

    name = 'poisson'

    def draw(self, rate, dt):
        if rate <= 0:
            return 0
        return int(self.rng.poisson(rate * dt))
