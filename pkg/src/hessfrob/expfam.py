"""Exponential families over a finite (or quadrature) sample space.

A family is described by atoms ``x_k`` with base weights ``w_k``,
sufficient statistics ``F_i(x_k)`` and a carrier ``C(x_k)``.  Densities
are taken with respect to the weighted counting measure::

    rho_theta(x_k) = exp(C(x_k) + <theta, F(x_k)> - psi(theta))

The categorical family on the open simplex is the main case; a
quadrature family on the simplex is kept as an experimental companion
so that its Legendre dual can be compared against the negative entropy.
"""

from dataclasses import dataclass, field, replace
from math import comb, factorial
from itertools import product
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import BoundaryError, ConvexityError, DomainError
from .hessian_core import Potential, hessian_metric, is_positive_definite

__all__ = [
    "ExponentialFamily",
    "MeanPoint",
    "categorical",
    "two_point",
    "simplex_quadrature_family",
    "log_partition",
    "density",
    "probabilities",
    "mean_params",
    "natural_params",
    "negative_entropy",
    "fisher_metric",
    "third_cumulant",
    "family_potential",
    "entropy_chart_potential",
    "dual_ma_check",
    "legendre_gap",
    "sample_simplex",
]


@dataclass(frozen=True)
class ExponentialFamily:
    """Sample space, statistics and carrier of an exponential family.

    ``statistics`` has shape ``(K, m)``; ``carrier`` and ``base_weights``
    have shape ``(K,)``.  ``atoms`` is informational (labels or points).
    """

    statistics: np.ndarray
    carrier: np.ndarray
    base_weights: np.ndarray
    atoms: Optional[np.ndarray] = None
    name: str = ""
    experimental: bool = False
    _log_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.statistics, dtype=float))
        K = F.shape[0]
        C = np.asarray(self.carrier, dtype=float).reshape(-1)
        w = np.asarray(self.base_weights, dtype=float).reshape(-1)
        if C.shape != (K,) or w.shape != (K,):
            raise ValueError("carrier and base_weights must have one entry per atom")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("base weights must be positive and finite")
        object.__setattr__(self, "statistics", F)
        object.__setattr__(self, "carrier", C)
        object.__setattr__(self, "base_weights", w)
        object.__setattr__(self, "_log_weights", np.log(w) + C)

    @property
    def num_params(self) -> int:
        return self.statistics.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.statistics.shape[0]

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "statistics": self.statistics.tolist(),
            "carrier": self.carrier.tolist(),
            "weights": self.base_weights.tolist(),
        }
        if self.atoms is not None:
            doc["atoms"] = np.asarray(self.atoms).tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExponentialFamily":
        F = np.asarray(doc["statistics"], dtype=float)
        K = F.shape[0]
        return cls(
            statistics=F,
            carrier=np.asarray(doc.get("carrier", np.zeros(K)), dtype=float),
            base_weights=np.asarray(doc.get("weights", np.ones(K)), dtype=float),
            atoms=None if doc.get("atoms") is None else np.asarray(doc["atoms"]),
            name=doc.get("name", ""),
        )


@dataclass(frozen=True)
class MeanPoint:
    """A point ``eta`` of the open probability simplex."""

    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", _simplex_point(self.eta))


def _simplex_point(eta, tol=1e-10) -> np.ndarray:
    if isinstance(eta, MeanPoint):
        return eta.eta
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size < 2 or not np.all(np.isfinite(eta)):
        raise BoundaryError("a simplex point needs at least two finite coordinates")
    if np.any(eta <= 0):
        raise BoundaryError(f"point {eta!r} is not in the open simplex")
    if abs(eta.sum() - 1.0) > tol:
        raise BoundaryError(f"coordinates sum to {eta.sum()!r}, not 1")
    return eta


def categorical(num_atoms: int, gauge_fixed: bool = True) -> ExponentialFamily:
    """Categorical family on ``num_atoms`` atoms.

    With ``gauge_fixed`` the indicator of atom 0 is dropped (``theta^0 = 0``),
    leaving ``num_atoms - 1`` identifiable parameters.
    """
    if num_atoms < 2:
        raise ValueError("need at least two atoms")
    F = np.eye(num_atoms)
    if gauge_fixed:
        F = F[:, 1:]
    return ExponentialFamily(
        statistics=F,
        carrier=np.zeros(num_atoms),
        base_weights=np.ones(num_atoms),
        atoms=np.arange(num_atoms),
        name=f"categorical-{num_atoms}" + ("" if gauge_fixed else "-full"),
    )


def two_point() -> ExponentialFamily:
    """Bernoulli family: atoms {0, 1}, statistic the indicator of 1."""
    return ExponentialFamily(
        statistics=np.array([[0.0], [1.0]]),
        carrier=np.zeros(2),
        base_weights=np.ones(2),
        atoms=np.array([0, 1]),
        name="two-point",
    )


def simplex_quadrature_family(N: int, resolution: int = 24) -> ExponentialFamily:
    """Experimental Lebesgue family on the open simplex (fixed-grid quadrature).

    Nodes ``(k + 1/(N+1)) / (R+1)`` for nonnegative integer ``k`` with
    ``sum k = R`` all lie in the open simplex; each carries the weight
    ``vol / count`` with ``vol = 1/N!`` the chart volume.  The
    statistics are ``eta_1 .. eta_N`` (``eta_0`` is redundant).
    """
    if N < 1 or resolution < 1:
        raise ValueError("N and resolution must be positive")
    R = resolution
    nodes = [k for k in product(range(R + 1), repeat=N) if sum(k) <= R]
    pts = np.array([(R - sum(k),) + k for k in nodes], dtype=float)
    pts = (pts + 1.0 / (N + 1)) / (R + 1)
    count = len(nodes)
    assert count == comb(R + N, N)
    return ExponentialFamily(
        statistics=pts[:, 1:],
        carrier=np.zeros(count),
        base_weights=np.full(count, 1.0 / factorial(N) / count),
        atoms=pts,
        name=f"simplex-quadrature-{N}",
        experimental=True,
    )


def _theta(fam: ExponentialFamily, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (fam.num_params,):
        raise DomainError(f"expected {fam.num_params} natural parameters, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise DomainError("natural parameters must be finite")
    return theta


def _log_terms(fam, theta):
    return fam._log_weights + fam.statistics @ _theta(fam, theta)


def log_partition(fam: ExponentialFamily, theta) -> float:
    """``psi(theta) = log sum_k w_k exp(C_k + <theta, F_k>)`` (max-shifted)."""
    val = float(logsumexp(_log_terms(fam, theta)))
    if not np.isfinite(val):
        raise DomainError("log-partition diverges at this parameter")
    return val


def probabilities(fam: ExponentialFamily, theta) -> np.ndarray:
    """Atom probabilities ``w_k rho_theta(x_k)``; they sum to one."""
    t = _log_terms(fam, theta)
    return np.exp(t - logsumexp(t))


def density(fam: ExponentialFamily, theta, x: Optional[int] = None):
    """Density w.r.t. the base measure, at atom index ``x`` or at every atom."""
    theta = _theta(fam, theta)
    rho = np.exp(fam.carrier + fam.statistics @ theta - log_partition(fam, theta))
    if x is None:
        return rho
    if not 0 <= int(x) < fam.num_atoms:
        raise DomainError(f"atom index {x} outside the sample space")
    return float(rho[int(x)])


def mean_params(fam: ExponentialFamily, theta) -> np.ndarray:
    """Expectation parameters ``eta = grad psi(theta) = E_theta[F]``."""
    return probabilities(fam, theta) @ fam.statistics


def fisher_metric(fam: ExponentialFamily, theta) -> np.ndarray:
    """Fisher metric as the covariance of the sufficient statistics."""
    p = probabilities(fam, theta)
    centered = fam.statistics - p @ fam.statistics
    g = (centered * p[:, None]).T @ centered
    g = 0.5 * (g + g.T)
    if not is_positive_definite(g):
        raise ConvexityError("Fisher metric is degenerate; fix a gauge (drop a redundant statistic)")
    return g


def third_cumulant(fam: ExponentialFamily, theta) -> np.ndarray:
    """``d^3 psi`` as the third central moment of the statistics."""
    p = probabilities(fam, theta)
    c = fam.statistics - p @ fam.statistics
    return np.einsum("k,ka,kb,kc->abc", p, c, c, c)


def family_potential(fam: ExponentialFamily) -> Potential:
    """The log-partition function as a :class:`Potential` with moment derivatives."""
    return Potential(
        dim=fam.num_params,
        func=lambda th: log_partition(fam, th),
        grad=lambda th: mean_params(fam, th),
        hess=lambda th: fisher_metric(fam, th),
        third=lambda th: third_cumulant(fam, th),
        sampler=lambda rng, n: rng.normal(scale=1.5, size=(n, fam.num_params)),
        name=f"log-partition[{fam.name}]",
    )


def natural_params(eta) -> np.ndarray:
    """Categorical natural parameters ``theta^i = log eta_i`` (additive constant zero)."""
    return np.log(_simplex_point(eta))


def negative_entropy(eta) -> float:
    """``phi(eta) = sum_i eta_i log eta_i`` on the open simplex."""
    eta = _simplex_point(eta)
    return float(np.dot(eta, np.log(eta)))


def sample_simplex(rng: np.random.Generator, count: int, N: int, concentration: float = 1.0) -> np.ndarray:
    """``count`` points of the open N-simplex (Dirichlet), shape ``(count, N+1)``."""
    pts = rng.dirichlet(np.full(N + 1, concentration), size=count)
    # Dirichlet draws can underflow to exact zeros for small concentration.
    pts = np.clip(pts, 1e-12, None)
    return pts / pts.sum(axis=1, keepdims=True)


def _chart_full(y: np.ndarray) -> np.ndarray:
    return np.concatenate(([1.0 - y.sum()], y))


def entropy_chart_potential(N: int, closed_form: bool = True) -> Potential:
    """Negative entropy in the chart ``(eta_1, .., eta_N)``, ``eta_0 = 1 - sum``.

    Closed forms: ``Hess_ij = delta_ij / eta_i + 1 / eta_0`` and
    ``d_k Hess_ij = -delta_ijk / eta_i^2 + 1 / eta_0^2``.
    """

    def func(y):
        e = _chart_full(y)
        return float(np.dot(e, np.log(e)))

    def grad(y):
        e = _chart_full(y)
        return np.log(e[1:]) - np.log(e[0])

    def hess(y):
        e = _chart_full(y)
        return np.diag(1.0 / e[1:]) + 1.0 / e[0]

    def third(y):
        e = _chart_full(y)
        T = np.full((N, N, N), 1.0 / e[0] ** 2)
        idx = np.arange(N)
        T[idx, idx, idx] -= 1.0 / e[1:] ** 2
        return T

    def domain(y):
        return bool(np.all(y > 0) and y.sum() < 1)

    def dist(y):
        return float(min(y.min(), 1.0 - y.sum()))

    def sampler(rng, n):
        return sample_simplex(rng, n, N)[:, 1:]

    return Potential(
        dim=N,
        func=func,
        domain=domain,
        grad=grad if closed_form else None,
        hess=hess if closed_form else None,
        third=third if closed_form else None,
        boundary_distance=dist,
        sampler=sampler,
        name=f"simplex-entropy-{N}",
    )


def dual_ma_check(eta, h: Optional[float] = None):
    """Finite-difference ``det Hess phi`` in the chart against ``exp(-C(eta))``.

    The Hessian is a central difference of the closed-form gradient
    ``log eta_i - log eta_0``, which stays accurate close to the boundary.

    ``C(eta) = sum_i log eta_i`` so the target is ``1 / prod eta_i``.
    Returns ``(det_hess, target)``.
    """
    eta = _simplex_point(eta)
    N = eta.size - 1
    pot = replace(entropy_chart_potential(N), hess=None, third=None)
    g = hessian_metric(pot, eta[1:], h=h)
    target = float(np.exp(-np.sum(np.log(eta))))
    return float(np.linalg.det(g)), target


def legendre_gap(fam: ExponentialFamily, theta) -> float:
    """Difference between the numerical Legendre dual of ``psi`` and the negative entropy.

    Evaluates ``<theta, eta> - psi(theta) - sum_i eta_i log eta_i`` at
    ``eta = grad psi(theta)``, where the full simplex point is rebuilt
    from the ``N`` statistics as ``(1 - sum eta, eta)``.  Zero for the
    gauge-fixed categorical family; nonzero for the quadrature family.
    """
    theta = _theta(fam, theta)
    eta = mean_params(fam, theta)
    dual = float(theta @ eta - log_partition(fam, theta))
    return dual - negative_entropy(_chart_full(eta))
