"""Named convex potentials with their known Monge-Ampere right-hand sides."""

import re
from dataclasses import replace
from typing import Callable, NamedTuple

import numpy as np

from . import cones, expfam
from .errors import UnknownPotentialError
from .hessian_core import Potential

__all__ = ["GemaPotential", "quadratic", "simplex_entropy", "softmax", "logdet", "get_potential", "NAMES"]

NAMES = ("quadratic", "simplex-entropy", "softmax", "logdet-n")


class GemaPotential(NamedTuple):
    potential: Potential
    target: Callable[[np.ndarray], float]  # f in det Hess psi = f


def quadratic(dim: int) -> GemaPotential:
    pot = Potential(
        dim=dim,
        func=lambda x: 0.5 * float(x @ x),
        grad=lambda x: x.copy(),
        hess=lambda x: np.eye(dim),
        third=lambda x: np.zeros((dim, dim, dim)),
        sampler=lambda rng, n: rng.normal(size=(n, dim)),
        name=f"quadratic-{dim}",
    )
    return GemaPotential(pot, lambda x: 1.0)


def simplex_entropy(N: int) -> GemaPotential:
    """Negative entropy on the N-simplex chart; ``det Hess = 1 / prod eta_i``."""
    pot = expfam.entropy_chart_potential(N)

    def target(y):
        return 1.0 / ((1.0 - y.sum()) * np.prod(y))

    return GemaPotential(pot, target)


def softmax(N: int) -> GemaPotential:
    """Gauge-fixed ``log(1 + sum e^theta_i)``; ``det Hess = prod_{i=0..N} eta_i``."""
    fam = expfam.categorical(N + 1, gauge_fixed=True)
    pot = expfam.family_potential(fam)

    def target(theta):
        return float(np.prod(expfam.probabilities(fam, theta)))

    return GemaPotential(replace(pot, name=f"softmax-{N}"), target)


def logdet(n: int, field: str = "real") -> GemaPotential:
    """``-log det`` on the cone; ``det Hess = kappa_n det(X)^-(n+1)``."""
    pot = cones.logdet_potential(n, field)
    kappa = cones.ma_constant(n, field)
    power = n + 1 if field == "real" else 2 * n

    def target(x):
        X = cones.to_matrix(x, n, field)
        return kappa * float(np.real(np.linalg.det(X))) ** (-power)

    return GemaPotential(pot, target)


def get_potential(name: str, dim: int = 2) -> GemaPotential:
    """Look up ``quadratic``, ``simplex-entropy``, ``softmax`` or ``logdet-<n>``.

    ``dim`` is the ambient dimension for the quadratic and the simplex
    dimension ``N`` for the entropy and softmax potentials.
    """
    if name == "quadratic":
        return quadratic(dim)
    if name == "simplex-entropy":
        return simplex_entropy(dim)
    if name == "softmax":
        return softmax(dim)
    match = re.fullmatch(r"logdet-(\d+)", name)
    if match and int(match.group(1)) >= 1:
        return logdet(int(match.group(1)))
    raise UnknownPotentialError(f"unknown potential {name!r}; choose from {', '.join(NAMES)}")
