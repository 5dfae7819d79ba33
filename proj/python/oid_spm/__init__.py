"""Optimal input design for single-particle-model parameter estimation."""

import json

from . import _oid_spm
from ._oid_spm import (
    NUM_PARAMETERS,
    OidError,
    estimate,
    initial_guess,
    relative_error,
    simulate,
    study,
    synthetic_truth,
)

__all__ = [
    "NUM_PARAMETERS",
    "OidError",
    "design",
    "estimate",
    "initial_guess",
    "relative_error",
    "run_test",
    "simulate",
    "study",
    "synthetic_truth",
]


def design(framework="collection", config=None, progress=None):
    """Design inputs against simulated measurements and return the record as a dict.

    `config` maps configuration keys (for example ``"design.max_inputs"``) to
    values; `progress` is called with ``(iteration, objective)``.
    """
    return json.loads(_oid_spm.design(framework, config or {}, progress))


def run_test(test, config=None, output_dir="oid_report"):
    """Run one test pipeline and return its summary as a dict."""
    return json.loads(_oid_spm.run_test(test, config or {}, str(output_dir)))
