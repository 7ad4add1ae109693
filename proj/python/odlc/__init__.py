"""Deferrable-load MPC engines, closed-form variance bounds and ensembles."""

from ._odlc import *  # noqa: F401,F403
from ._odlc import ArrivalModel, BaseloadModel, run_ensemble

__version__ = "0.1.0"


def ensemble_array(baseload: BaseloadModel, arrivals: ArrivalModel, count: int, **kwargs):
    """run_ensemble returning numpy arrays (samples, seeds)."""
    import numpy as np

    samples, seeds = run_ensemble(baseload, arrivals, count, **kwargs)
    return np.asarray(samples), np.asarray(seeds, dtype=np.uint64)
