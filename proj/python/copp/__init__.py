"""Stochastic declustering of self-exciting point processes."""

import json

import numpy as np

from . import _copp
from ._copp import (
    DegenerateError,
    Fit,
    IngestionError,
    ResourceGuardError,
    ValidationError,
    load_catalog,
    log_l_score,
    neighbors,
)

__all__ = [
    "DegenerateError",
    "Fit",
    "IngestionError",
    "ResourceGuardError",
    "ValidationError",
    "decluster",
    "exact_max_difference",
    "load_catalog",
    "log_l_score",
    "neighbors",
    "simulate",
]


def simulate(spec):
    """Simulate from a spec dict; returns (events, parents), parent -1 for background."""
    return _copp.simulate(json.dumps(spec))


def decluster(events, scales, config=None, time_independent=False):
    """Fit background and trigger intensities; config keys match the CLI JSON."""
    return _copp.decluster(np.asarray(events, dtype=float), list(scales),
                           json.dumps(config or {}), time_independent)


def exact_max_difference(events, scales, config=None):
    """Largest gap between final responsibilities of the accelerated and dense routes."""
    return _copp.exact_max_difference(np.asarray(events, dtype=float), list(scales),
                                      json.dumps(config or {}))
