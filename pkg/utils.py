import logging
import os
import random

import numpy as np

LOG_FORMAT = '[%(asctime)s][%(name)s][%(levelname)s] - %(message)s'


def seed_everything(seed):
    os.environ['PYTHONHASHSEED'] = str(seed)
    random.seed(seed)
    np.random.seed(seed)


def setup_logging(verbose=False):
    """ Root logger in hydra's default job format; -v lowers the level to DEBUG.

    The compose API used by verify.py does not configure logging the way
    @hydra.main does, so the root logger is set here with
    logging.basicConfig(force=True), replacing any handlers already installed.
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)
    for name in ('joblib', 'hydra'):
        logging.getLogger(name).setLevel(logging.WARNING)
