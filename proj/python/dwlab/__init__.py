"""Python front end to the dwlab C++ core.

Configuration arguments accept plain dicts; they are passed to the core as JSON.
"""

import json

from ._dwlab import (
    DomainError,
    EstimationFailure,
    NotSeparableError,
    SpecificationError,
    __version__,
    closed_form_error,
    epsilon_term,
    max_margin,
    schema_version,
)
from . import _dwlab


def _text(cfg):
    return cfg if isinstance(cfg, str) else json.dumps(cfg)


def generate(spec):
    """Draw a Gaussian mixture; returns (features, labels)."""
    return _dwlab.generate(_text(spec))


def error_profile(features, labels, config=None):
    """Per-sample error profile of a dataset under an estimator config."""
    return _dwlab.error_profile(features, labels, _text(config or {}))


def config_digest(config):
    return _dwlab.config_digest(_text(config))


def run(kind, config, out_dir, jobs=0, base_dir="."):
    """Run one experiment and return its manifest."""
    return json.loads(_dwlab.run(kind, _text(config), str(out_dir), jobs, str(base_dir)))


__all__ = [
    "DomainError",
    "EstimationFailure",
    "NotSeparableError",
    "SpecificationError",
    "__version__",
    "closed_form_error",
    "config_digest",
    "epsilon_term",
    "error_profile",
    "generate",
    "max_margin",
    "run",
    "schema_version",
]
