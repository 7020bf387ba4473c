"""Python bindings for the polyneck generalized connected sum library."""

from ._polyneck import (
    Model,
    PolyneckError,
    barrier_constant,
    chi,
    command_names,
    eta,
    make_model,
    minimal_alpha,
    picard_solve,
    run,
    u_eps,
    yamabe_constants,
)

__all__ = [
    "Model",
    "PolyneckError",
    "barrier_constant",
    "chi",
    "command_names",
    "eta",
    "make_model",
    "minimal_alpha",
    "picard_solve",
    "run",
    "u_eps",
    "yamabe_constants",
]
