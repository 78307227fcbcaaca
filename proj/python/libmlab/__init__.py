"""Python access to the libmlab core (closed forms, PDE solves, particle ensembles)."""

import json

import numpy as np

from ._libmlab import (
    ConfigError,
    ParseError,
    __version__,
    canonical_config,
    diffusion_matrix,
    eval_expr,
    is_normally_elliptic,
    ms_ternary_matrix,
    two_color_matrix,
)
from . import _libmlab


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return json.dumps(config)


def _arrays(d):
    return {k: np.asarray(v) for k, v in d.items()}


def solve(config=None):
    """PDE snapshots as numpy arrays: t, x, rho1[t, x], rho2[t, x]."""
    return _arrays(_libmlab.solve(_text(config)))


def ensemble_mean(config=None, seed=1, threads=1):
    """Replica-mean smoothed densities at the snapshot times."""
    return _arrays(_libmlab.ensemble_mean(_text(config), seed, threads))


__all__ = [
    "ConfigError",
    "ParseError",
    "__version__",
    "canonical_config",
    "diffusion_matrix",
    "ensemble_mean",
    "eval_expr",
    "is_normally_elliptic",
    "ms_ternary_matrix",
    "solve",
    "two_color_matrix",
]
