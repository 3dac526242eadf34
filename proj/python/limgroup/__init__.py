"""Direct-limit Lie groups: integrators, charts, extension engines and the property harness."""

import json as _json

from ._limgroup import (
    CompatibilityError,
    DegeneracyError,
    Diffeo,
    DomainError,
    Error,
    Extension,
    FactorizationError,
    Field,
    IoError,
    NumericalError,
    ParseError,
    StructuralError,
    ValidationError,
    WitnessError,
    bump_field,
    diff_chart,
    diff_chart_inverse,
    diff_distance,
    diff_round_trip,
    evol_point,
    expm,
    in_log_domain,
    log_derivative,
    logm,
    rotation,
    suite_names,
    support_witness,
)
from ._limgroup import verify as _verify


def verify(config=None, seed=None, suites=None, trials=None):
    """Run the property suites; returns the parsed report."""
    return _json.loads(_verify(config, seed, suites, trials))


__all__ = [name for name in dir() if not name.startswith("_")]
