from ..exceptions import UnsupportedArrivalProcessError
from .process import ArrivalProcess
from .constant import ConstantArrivals
from .poisson import PoissonArrivals

SUPPORTED_ARRIVALS = ['poisson', 'constant']


def get_arrivals(kind, rng):
    """
    Get an arrival process by the name used in the scenario ``[trace]`` section

    :param str kind: "poisson" or "constant"
    :param rng: The run's numpy random generator
    :raises UnsupportedArrivalProcessError: for any other name
    :rtype: ArrivalProcess
    """
    if kind == 'poisson':
        process = PoissonArrivals(rng)
    elif kind == 'constant':
        process = ConstantArrivals(rng)
    else:
        raise UnsupportedArrivalProcessError("{kind} is an unknown arrival process".format(kind=kind))
    return process
