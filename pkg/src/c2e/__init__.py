"""c2e module - elastic cloud/edge training placement, autoscaling and simulation

    The c2e module consists of the following submodules:

    * :mod:`c2e.app_model` - training application DAGs and scenario documents
    * :mod:`c2e.cluster_model` - nodes, device profiles, training curves, failures
    * :mod:`c2e.placer` - privacy-constrained operator placement
    * :mod:`c2e.autoscaler` - reactive threshold autoscaling
    * :mod:`c2e.simengine` - the discrete-event simulator and CSV export
    * :mod:`c2e.dnn_config` - shape inference and architecture suggestion
    * :mod:`c2e.cli` - the ``c2e`` command line

"""

import logging

__version__ = '0.3'

_debug = 0
logger = logging.getLogger('c2e')

nh = logging.NullHandler()
nh.setLevel(logging.DEBUG)
ch = logging.StreamHandler()
ch.setLevel(logging.DEBUG)
ch.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))

logger.addHandler(nh)


def debug(setting):
    """
    Set debug on or off

    :param setting: The log level, currently 0 is off any anything else is DEBUG
    :type setting: int
    """
    global _debug
    _debug = setting
    if setting == 0:
        if ch in logger.handlers:
            logger.removeHandler(ch)
        if nh not in logger.handlers:
            logger.addHandler(nh)
        logger.setLevel(logging.WARNING)
    else:
        if ch not in logger.handlers:
            logger.addHandler(ch)
        logger.setLevel(logging.DEBUG)
