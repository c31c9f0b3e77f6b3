"""Hill approximation of the equilateral restricted four-body problem."""

import json

from ._core import (
    ConvergenceError,
    DomainError,
    jacobi,
    portrait_stage,
    run_cli,
    vector_field,
    version,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "critical_mass_ratio",
    "equilibria",
    "jacobi",
    "lyapunov_orbit",
    "portrait_stage",
    "run_cli",
    "vector_field",
    "version",
]

__version__ = version()


def equilibria(mu):
    """Equilibrium points with their stability data, as a list of dicts."""
    from ._core import equilibria_json

    return json.loads(equilibria_json(mu))


def critical_mass_ratio():
    """Computed and quoted critical mass ratio of L3/L4."""
    from ._core import critical_mass_ratio_json

    return json.loads(critical_mass_ratio_json())


def lyapunov_orbit(mu, jacobi, point="L1"):
    """Planar Lyapunov orbit about L1 or L2 at the given Jacobi constant."""
    from ._core import lyapunov_orbit_json

    return json.loads(lyapunov_orbit_json(mu, jacobi, point))
