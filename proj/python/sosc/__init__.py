"""Contracts for systems of systems: parse, validate, simulate, explore, refine."""

import json

from . import _core
from ._core import ParseError, canonical, catalog, run_cli

__all__ = [
    "ParseError",
    "canonical",
    "catalog",
    "conform",
    "explore",
    "monte_carlo_loss",
    "run_cli",
    "simulate",
    "validate",
]


def validate(text, file="<input>"):
    """Structural and fault-model diagnostics as a list of dicts."""
    return json.loads(_core.validate(text, file))


def simulate(devices, **kwargs):
    """One seeded run of the AV composition; a list of event dicts."""
    lines = _core.simulate(devices, **kwargs).splitlines()
    return [json.loads(line) for line in lines if line]


def explore(devices, **kwargs):
    return json.loads(_core.explore(devices, **kwargs))


def conform(text, impl, contract, depth=6):
    return json.loads(_core.conform(text, impl, contract, depth))


def monte_carlo_loss(drop_prob, retries, messages, seed=0):
    return json.loads(_core.monte_carlo_loss(drop_prob, retries, messages, seed))
