"""Galton-Watson branching flows, their continuum limits, and convergence checks."""

import json
import os

from ._gwflow import (  # noqa: F401
    AdmissibleFamily,
    BlowUpError,
    BranchingMechanism,
    ConfigError,
    DomainError,
    GwflowError,
    Pgf,
    PopulationCapError,
    ValidityError,
    build_local_pgf,
    build_nonlocal_pgf,
    bundled_config_names,
    closed_form_cumulant,
    discrete_cumulant,
    iterate,
    sampler_table,
    scaled_phi_k,
    scaled_psi_k,
    simulate_independent,
    solve_cumulant,
    solve_nonlocal_cumulant,
)
from ._gwflow import bundled_config_json as _bundled_config_json
from ._gwflow import run_config_json as _run_config_json

__version__ = "0.1.0"


def bundled_config(name):
    """The bundled config `name` as a dict."""
    return json.loads(_bundled_config_json(name))


def run(config, workers=0):
    """Run an experiment.

    `config` is a dict, a path to a JSON file, or the name of a bundled
    config. Returns the summary dict (verdicts, per-rung statistics, extras).
    """
    if isinstance(config, dict):
        text = json.dumps(config)
    elif os.path.exists(str(config)):
        with open(config, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = _bundled_config_json(str(config))
    return json.loads(_run_config_json(text, workers))
