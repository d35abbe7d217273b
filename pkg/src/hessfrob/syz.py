"""Weighted projective moment map and torus-fibration diagnostics.

The torus ``(S^1)^{N+1}`` acts on ``C^{N+1}`` by per-coordinate phases;
its moment map, normalized on the weighted sphere ``sum w_j |z_j|^2 = 1``,
lands in the standard simplex.  Fibers over interior points are sampled
explicitly, isotropy of the torus orbits is checked against the standard
form ``omega(u, v) = Im <u, v>``, and the dimension of the fiber cut out
by ``W = 0`` is measured numerically.
"""

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from . import expfam
from .bhk import ExponentMatrix, WeightSystem
from .errors import (
    BoundaryError,
    DomainError,
    NoSolutionFoundError,
    SingularBasisError,
    ZeroVectorError,
)

__all__ = [
    "WeightedProjectivePoint",
    "SlicePolytope",
    "TorusFiber",
    "weighted_action",
    "moment_map",
    "slice_membership",
    "sample_fiber",
    "symplectic_form",
    "phase_directions",
    "isotropy_residual",
    "fiber_dimensions",
    "hypersurface_fiber_dimension",
    "dual_fiber",
    "legendre_chart",
]


def _weights(w) -> np.ndarray:
    w = np.asarray(w.w if isinstance(w, WeightSystem) else w, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    return w


def weighted_action(z, w, t: complex) -> np.ndarray:
    """``t . z = (t^{w_0} z_0, .., t^{w_N} z_N)`` for ``t`` in ``C^x``."""
    t = complex(t)
    if t == 0:
        raise ValueError("t must be nonzero")
    z = np.asarray(z, dtype=complex)
    return np.array([t ** int(wi) * zi for wi, zi in zip(_weights(w), z)])


@dataclass(frozen=True)
class WeightedProjectivePoint:
    """Homogeneous coordinates ``[z_0 : .. : z_N]`` on ``P(w)``."""

    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex).reshape(-1)
        w = _weights(self.w)
        if z.shape != w.shape:
            raise ValueError("z and w must have the same length")
        if not np.any(z != 0):
            raise ZeroVectorError("homogeneous coordinates cannot all vanish")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    def level(self) -> float:
        return float(np.sum(self.w * np.abs(self.z) ** 2))

    def canonical(self) -> "WeightedProjectivePoint":
        """Representative with ``sum w_j |z_j|^2 = 1`` under real ``t > 0``."""
        a = self.w * np.abs(self.z) ** 2

        def f(s):  # level at t = e^s
            return float(np.sum(a * np.exp(2 * s * self.w))) - 1.0

        lo, hi = -1.0, 1.0
        while f(lo) > 0:
            lo *= 2
        while f(hi) < 0:
            hi *= 2
        s = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        z = self.z * np.exp(s * self.w)
        # Final rescale corrects the last ulps when all weights are equal.
        if np.all(self.w == self.w[0]):
            z = z / np.sqrt(np.sum(self.w * np.abs(z) ** 2))
        return WeightedProjectivePoint(z, self.w)


def moment_map(z, w=None) -> np.ndarray:
    """``eta_i = w_i |z_i|^2 / sum_j w_j |z_j|^2``.

    Raw coordinates ``z`` are used as given.  A
    :class:`WeightedProjectivePoint` is first moved to its level-set
    representative ``sum w |z|^2 = 1``: with unequal weights the bare
    ratio changes under real rescalings ``t . z``, while the value at the
    representative depends only on the projective point.
    """
    if isinstance(z, WeightedProjectivePoint):
        if not np.all(z.w == z.w[0]):
            z = z.canonical()
        z, w = z.z, z.w
    z = np.asarray(z, dtype=complex)
    w = _weights(w)
    a = w * np.abs(z) ** 2
    total = a.sum()
    if total == 0:
        raise ZeroVectorError("moment map undefined at z = 0")
    return a / total


@dataclass(frozen=True)
class SlicePolytope:
    """``{eta in open simplex : sum w_i eta_i = level}``; level defaults to ``1/d``."""

    w: tuple
    d: int
    level: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(int(x) for x in self.w))
        lvl = Fraction(1, self.d) if self.level is None else Fraction(self.level)
        object.__setattr__(self, "level", lvl)

    @classmethod
    def from_weights(cls, ws: WeightSystem, level=None) -> "SlicePolytope":
        return cls(ws.w, ws.d, level)

    def is_empty(self) -> bool:
        """Exact test: ``sum w eta`` ranges over ``(min w, max w)`` on the open simplex."""
        lo, hi = min(self.w), max(self.w)
        if lo == hi:
            return self.level != lo
        return not (lo < self.level < hi)

    def interior_point(self) -> np.ndarray:
        """The point ``eta_i ~ exp(lam w_i)`` of the slice (``lam`` found by bisection)."""
        if self.is_empty():
            raise BoundaryError(f"slice at level {self.level} is empty")
        w = np.array(self.w, dtype=float)
        c = float(self.level)
        if np.all(w == w[0]):
            return np.full(w.size, 1.0 / w.size)

        def point(lam):
            e = np.exp(lam * w - np.max(lam * w))
            return e / e.sum()

        lam = brentq(lambda lam: point(lam) @ w - c, -1.0 / np.ptp(w) * 800, 1.0 / np.ptp(w) * 800,
                     xtol=1e-15)
        return point(lam)


def slice_membership(eta, s: SlicePolytope, tol: float = 1e-12) -> bool:
    eta = np.asarray(eta, dtype=float)
    if eta.size != len(s.w) or np.any(eta <= 0) or abs(eta.sum() - 1.0) > tol:
        return False
    return bool(abs(float(np.dot(s.w, eta)) - float(s.level)) <= tol)


def _interior(eta) -> np.ndarray:
    return expfam.MeanPoint(eta).eta


def sample_fiber(eta, w, count: int, seed=None) -> List[WeightedProjectivePoint]:
    """Points ``z_i = sqrt(eta_i / w_i) e^{i phi_i}`` with seeded uniform phases."""
    eta = _interior(eta)
    w = _weights(w)
    if eta.shape != w.shape:
        raise ValueError("eta and w must have the same length")
    rng = np.random.default_rng(seed)
    r = np.sqrt(eta / w)
    out = []
    for _ in range(count):
        phi = rng.uniform(0.0, 2 * np.pi, size=eta.size)
        out.append(WeightedProjectivePoint(r * np.exp(1j * phi), w))
    return out


def symplectic_form(u, v) -> float:
    """``omega(u, v) = Im sum conj(u_a) v_a`` on ``C^{N+1}``."""
    return float(np.imag(np.vdot(u, v)))


def phase_directions(z) -> np.ndarray:
    """Generators ``v_k = i z_k e_k`` of the torus orbit through ``z``, one per row."""
    z = np.asarray(z.z if isinstance(z, WeightedProjectivePoint) else z, dtype=complex)
    return np.diag(1j * z)


def isotropy_residual(z, w, tangent_pairs: int = 100, seed=None, level_tol: float = 1e-9) -> float:
    """Max ``|omega(u, v)|`` over torus-orbit tangent pairs at ``z``.

    Covers every pair of pure phase directions plus ``tangent_pairs``
    random real combinations.
    """
    if isinstance(z, WeightedProjectivePoint):
        z, w = z.z, z.w
    z = np.asarray(z, dtype=complex)
    w = _weights(w)
    level = float(np.sum(w * np.abs(z) ** 2))
    if abs(level - 1.0) > level_tol:
        raise DomainError(f"point is off the level set (sum w|z|^2 = {level})")
    V = phase_directions(z)
    n = z.size
    worst = 0.0
    for j in range(n):
        for k in range(n):
            worst = max(worst, abs(symplectic_form(V[j], V[k])))
    rng = np.random.default_rng(seed)
    for _ in range(tangent_pairs):
        a, b = rng.normal(size=n), rng.normal(size=n)
        worst = max(worst, abs(symplectic_form(a @ V, b @ V)))
    return worst


def _eval_W(rows, r, phi):
    """``W`` and ``dW/dphi`` at ``z = r e^{i phi}`` (unit coefficients)."""
    z = r * np.exp(1j * phi)
    monos = np.array([np.prod(z ** np.asarray(row)) for row in rows])
    E = np.asarray(rows, dtype=float)
    return monos.sum(), 1j * (monos @ E)


def fiber_dimensions(E: ExponentMatrix, ws: WeightSystem, eta, seed=None, starts: int = 16,
                     max_iter: int = 100, tol: float = 1e-12) -> List[int]:
    """Fiber dimension at every converged Newton start (see :func:`hypersurface_fiber_dimension`)."""
    eta = _interior(eta)
    w = _weights(ws)
    if eta.size != E.size:
        raise ValueError("eta must have one entry per variable")
    r = np.sqrt(eta / w)
    N = E.size - 1
    rng = np.random.default_rng(seed)
    dims = []
    for _ in range(starts):
        phi = rng.uniform(0.0, 2 * np.pi, size=E.size)
        for _ in range(max_iter):
            val, grad = _eval_W(E.rows, r, phi)
            if abs(val) < tol:
                break
            J = np.vstack([grad.real, grad.imag])
            phi = phi - np.linalg.pinv(J) @ np.array([val.real, val.imag])
        val, grad = _eval_W(E.rows, r, phi)
        if abs(val) >= tol:
            continue
        J = np.vstack([grad.real, grad.imag])
        sv = np.linalg.svd(J, compute_uv=False)
        rank = int(np.sum(sv > 1e-8 * max(1.0, sv.max())))
        dims.append(N + 1 - 1 - rank)
    return dims


def hypersurface_fiber_dimension(E: ExponentMatrix, ws: WeightSystem, eta, seed=None,
                                 starts: int = 16) -> int:
    """Numerical dimension of ``{phi : W(sqrt(eta/w) e^{i phi}) = 0}`` modulo the weighted phase.

    Newton (minimum-norm steps) from seeded random phases finds zeros of
    ``W``; at each zero the rank of the real Jacobian of ``(Re W, Im W)``
    gives ``N + 1 - 1 - rank``.  The most common value is returned.
    """
    dims = fiber_dimensions(E, ws, eta, seed=seed, starts=starts)
    if not dims:
        raise NoSolutionFoundError("Newton found no point of W = 0 on this torus fiber")
    counts = Counter(dims)
    return max(counts, key=lambda d: (counts[d], -d))


@dataclass(frozen=True)
class TorusFiber:
    """``R^r / L Z^r`` with lattice basis ``L`` (columns).

    Integer or rational bases are stored as ``Fraction`` entries and
    dualized exactly; anything else is kept in floating point.
    """

    lattice_basis: tuple

    def __post_init__(self):
        rows = [list(r) for r in np.asarray(self.lattice_basis, dtype=object)]
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("lattice basis must be square")
        exact = all(isinstance(x, (int, np.integer, Fraction)) for r in rows for x in r)
        conv = Fraction if exact else float
        object.__setattr__(self, "lattice_basis", tuple(tuple(conv(x) for x in r) for r in rows))

    @property
    def rank(self) -> int:
        return len(self.lattice_basis)

    @property
    def exact(self) -> bool:
        return isinstance(self.lattice_basis[0][0], Fraction)

    def as_array(self) -> np.ndarray:
        return np.array(self.lattice_basis, dtype=float)


def _fraction_inverse(rows):
    n = len(rows)
    M = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k] != 0), None)
        if piv is None:
            raise SingularBasisError("lattice basis is singular")
        M[k], M[piv] = M[piv], M[k]
        pk = M[k][k]
        M[k] = [x / pk for x in M[k]]
        for i in range(n):
            if i != k and M[i][k] != 0:
                f = M[i][k]
                M[i] = [a - f * b for a, b in zip(M[i], M[k])]
    return [r[n:] for r in M]


def dual_fiber(f: TorusFiber) -> TorusFiber:
    """Dual torus: basis ``L^{-T}``, so that ``L^T L^{-T} = I``."""
    if f.exact:
        inv = _fraction_inverse(f.lattice_basis)
        return TorusFiber(tuple(zip(*inv)))
    L = f.as_array()
    if not np.all(np.isfinite(L)) or np.linalg.cond(L) > 1e14:
        raise SingularBasisError("lattice basis is singular")
    return TorusFiber(tuple(map(tuple, np.linalg.inv(L).T)))


def legendre_chart(eta) -> np.ndarray:
    """``theta = log eta`` on the open simplex (categorical natural parameters)."""
    return expfam.natural_params(eta)
