"""Hessian geometry of a convex potential on a flat domain.

From a strictly convex potential ``psi`` this module builds the metric
``g = Hess psi``, the symmetric cubic tensor ``A = D^3 psi``, the
multiplication ``A_ab^c = A_abe g^ec`` and the Levi-Civita symbols
``1/2 g^ce A_abe``, together with max-norm residuals for the
Monge-Ampere equation, the compatibility ``g(X o Y, Z) = g(X, Y o Z)``
and associativity (WDVV).

Metrics, cubic tensors and multiplication tables are plain ``ndarray``
objects of shape ``(n, n)``, ``(n, n, n)`` and ``(n, n, n)``.
"""

from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConvexityError,
    DimensionMismatchError,
    DomainError,
    SingularMetricError,
)

__all__ = [
    "Potential",
    "default_step",
    "hessian_metric",
    "third_tensor",
    "ma_residual",
    "christoffel",
    "structure_constants",
    "lower_index",
    "compatibility_residual",
    "symmetry_residual",
    "wdvv_residual",
    "is_positive_definite",
]

_REL_STEP = 1e-4
# Step cap as a fraction of the distance to the boundary.  Differencing
# psi itself is roundoff-limited, so it may step further out than
# differencing a closed-form gradient or Hessian.
_BOUNDARY_FRACTION = {"func": 1e-3, "derivative": 3e-4}
_RICHARDSON_SCALE = 4.0


@dataclass(frozen=True)
class Potential:
    """A smooth scalar function on an open convex domain.

    Parameters
    ----------
    dim : int
        Number of flat coordinates.
    func : callable
        ``func(x) -> float`` for ``x`` of shape ``(dim,)``.
    domain : callable, optional
        ``domain(x) -> bool``; defaults to the whole space.
    grad, hess, third : callable, optional
        Closed-form first, second and third derivatives.
    boundary_distance : callable, optional
        Distance from ``x`` to the boundary of the domain; used to shrink
        finite-difference steps near the boundary.
    sampler : callable, optional
        ``sampler(rng, count) -> ndarray (count, dim)`` of interior points.
    """

    dim: int
    func: Callable[[np.ndarray], float]
    domain: Optional[Callable[[np.ndarray], bool]] = None
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    third: Optional[Callable[[np.ndarray], np.ndarray]] = None
    boundary_distance: Optional[Callable[[np.ndarray], float]] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")

    def __call__(self, x):
        return float(self.func(np.asarray(x, dtype=float)))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        return True if self.domain is None else bool(self.domain(x))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.sampler is None:
            raise NotImplementedError(f"potential {self.name!r} has no sampler")
        return np.asarray(self.sampler(rng, count), dtype=float).reshape(count, self.dim)


def default_step(p: Potential, x, differenced: str = "func") -> float:
    """Central-difference step ``1e-4 * max(1, |x|)``, capped near the boundary.

    ``differenced`` is ``"func"`` when ``psi`` itself is differenced and
    ``"derivative"`` when a closed-form gradient or Hessian is.
    """
    x = np.asarray(x, dtype=float)
    h = _REL_STEP * max(1.0, float(np.linalg.norm(x)))
    if p.boundary_distance is not None:
        h = min(h, _BOUNDARY_FRACTION[differenced] * float(p.boundary_distance(x)))
    return h


def _differenced(p: Potential) -> str:
    return "func" if p.grad is None and p.hess is None else "derivative"


def _require_interior(p: Potential, x: np.ndarray):
    if not p.contains(x):
        raise DomainError(f"point {x!r} is outside the domain of {p.name or 'potential'}")


def _check_stencil(p: Potential, points):
    for y in points:
        if not p.contains(y):
            raise DomainError("finite-difference stencil leaves the domain; reduce the step")


def is_positive_definite(m: np.ndarray) -> bool:
    """Symmetric part has eigenvalues above rounding level (relative to the largest)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0 or not np.all(np.isfinite(m)):
        return False
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    return bool(eig[0] > 16 * m.shape[0] * np.finfo(float).eps * max(abs(eig[-1]), np.finfo(float).tiny))


def _symmetrize3(t: np.ndarray) -> np.ndarray:
    return sum(t.transpose(p) for p in permutations(range(3))) / 6.0


def _second_differences(p: Potential, x: np.ndarray, h: float) -> np.ndarray:
    n = p.dim
    eye = np.eye(n) * h
    _check_stencil(p, [x + s * eye[i] + t * eye[j] for i in range(n) for j in range(n)
                       for s in (1, -1) for t in (1, -1)])
    f0 = p(x)
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (p(x + eye[i]) - 2.0 * f0 + p(x - eye[i])) / (h * h)
        for j in range(i + 1, n):
            fpp, fpm = p(x + eye[i] + eye[j]), p(x + eye[i] - eye[j])
            fmp, fmm = p(x - eye[i] + eye[j]), p(x - eye[i] - eye[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return H


def _fd_hessian(p: Potential, x: np.ndarray, h: float) -> np.ndarray:
    if p.grad is not None:
        eye = np.eye(p.dim) * h
        pts = [(x + e, x - e) for e in eye]
        _check_stencil(p, [y for pair in pts for y in pair])
        cols = [(np.asarray(p.grad(a), dtype=float) - np.asarray(p.grad(b), dtype=float)) / (2.0 * h)
                for a, b in pts]
        return np.column_stack(cols)
    # Second differences of psi are roundoff-limited at small steps, so take
    # wider ones and cancel the O(h^2) error by Richardson extrapolation.
    wide = _RICHARDSON_SCALE * h
    return (4.0 * _second_differences(p, x, wide) - _second_differences(p, x, 2.0 * wide)) / 3.0


def hessian_metric(p: Potential, x, h: Optional[float] = None, method: str = "auto") -> np.ndarray:
    """Hessian metric ``g_ij = d_i d_j psi`` at ``x``.

    Uses the closed-form Hessian when the potential carries one and
    ``method == "auto"``; ``method="fd"`` forces central differences,
    taken on the gradient when that is known and on ``psi`` otherwise.
    The result is symmetrized and must be positive definite.
    """
    x = np.asarray(x, dtype=float)
    _require_interior(p, x)
    if method not in ("auto", "fd"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and p.hess is not None:
        H = np.asarray(p.hess(x), dtype=float)
    else:
        H = _fd_hessian(p, x, default_step(p, x, _differenced(p)) if h is None else h)
    H = 0.5 * (H + H.T)
    if not is_positive_definite(H):
        raise ConvexityError(f"Hessian of {p.name or 'potential'} is not positive definite at {x!r}")
    return H


def third_tensor(p: Potential, x, h: Optional[float] = None, method: str = "auto") -> np.ndarray:
    """Totally symmetric third derivative ``A_abc = d_a d_b d_c psi``.

    Finite differences are nested on the highest closed-form derivative
    available: the Hessian (one central difference), the gradient (a
    mixed second difference) or, failing both, the function itself with
    a step scaled as ``h**0.75``.
    """
    x = np.asarray(x, dtype=float)
    _require_interior(p, x)
    if method not in ("auto", "fd"):
        raise ValueError(f"unknown method {method!r}")
    n = p.dim
    if method == "auto" and p.third is not None:
        return _symmetrize3(np.asarray(p.third(x), dtype=float))
    h = default_step(p, x, _differenced(p)) if h is None else h
    eye = np.eye(n)
    T = np.empty((n, n, n))
    if p.hess is not None:
        pts = [(x + h * eye[k], x - h * eye[k]) for k in range(n)]
        _check_stencil(p, [y for pair in pts for y in pair])
        for k, (xp, xm) in enumerate(pts):
            T[:, :, k] = (np.asarray(p.hess(xp)) - np.asarray(p.hess(xm))) / (2.0 * h)
    elif p.grad is not None:
        for i in range(n):
            for j in range(i, n):
                pts = [x + s * h * eye[i] + t * h * eye[j] for s in (1, -1) for t in (1, -1)]
                _check_stencil(p, pts)
                gpp, gpm, gmp, gmm = (np.asarray(p.grad(y)) for y in pts)
                T[i, j, :] = T[j, i, :] = (gpp - gpm - gmp + gmm) / (4.0 * h * h)
    else:
        s = h ** 0.75
        signs = [(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)]
        for i in range(n):
            for j in range(i, n):
                for k in range(j, n):
                    pts = [x + s * (a * eye[i] + b * eye[j] + c * eye[k]) for a, b, c in signs]
                    _check_stencil(p, pts)
                    val = sum(a * b * c * p(y) for (a, b, c), y in zip(signs, pts)) / (8.0 * s ** 3)
                    for perm in set(permutations((i, j, k))):
                        T[perm] = val
    return _symmetrize3(T)


def ma_residual(p: Potential, x, f: Callable[[np.ndarray], float], h=None, method="auto") -> float:
    """``det Hess psi(x) - f(x)``."""
    x = np.asarray(x, dtype=float)
    g = hessian_metric(p, x, h=h, method=method)
    return float(np.linalg.det(g) - f(x))


def _checked_metric(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatchError(f"metric must be square, got shape {g.shape}")
    if not np.all(np.isfinite(g)) or np.linalg.cond(g) > 1e14:
        raise SingularMetricError("metric is singular or numerically singular")
    return g


def _check_tensor(g, A):
    A = np.asarray(A, dtype=float)
    n = np.asarray(g).shape[0]
    if A.shape != (n, n, n):
        raise DimensionMismatchError(f"tensor shape {A.shape} does not match metric dim {n}")
    return A


def structure_constants(g, A) -> np.ndarray:
    """Raise the last index: ``m_ab^c = sum_e A_abe g^ec`` (no factor 1/2)."""
    g = _checked_metric(g)
    A = _check_tensor(g, A)
    n = g.shape[0]
    # a linear solve keeps m g - A at rounding level even when g is badly conditioned
    return np.linalg.solve(g, A.reshape(n * n, n).T).T.reshape(n, n, n)


def christoffel(g, A) -> np.ndarray:
    """Levi-Civita symbols ``Gamma_ab^c = 1/2 sum_e g^ce A_abe`` in flat coordinates."""
    return 0.5 * structure_constants(g, A)


def lower_index(m, g) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.einsum("abe,ec->abc", m, np.asarray(g, dtype=float))


def symmetry_residual(A) -> float:
    """Max deviation of ``A`` from total symmetry (a transposition and a 3-cycle)."""
    A = np.asarray(A, dtype=float)
    return float(max(np.max(np.abs(A - A.transpose(1, 0, 2))),
                     np.max(np.abs(A - A.transpose(1, 2, 0)))))


def compatibility_residual(g, A, m) -> float:
    """Max-norm residual of ``g(X o Y, Z) = g(X, Y o Z)``.

    Sum of ``max |m_ab^e g_ec - A_abc|`` and the total-symmetry defect of ``A``.
    """
    g = np.asarray(g, dtype=float)
    A = _check_tensor(g, A)
    m = _check_tensor(g, m)
    lowering = float(np.max(np.abs(lower_index(m, g) - A)))
    return lowering + symmetry_residual(A)


def wdvv_residual(m) -> float:
    """Associator max ``|sum_e m_ab^e m_ec^d - m_bc^e m_ae^d|``."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n, n):
        raise DimensionMismatchError(f"multiplication table must be (n, n, n), got {m.shape}")
    left = np.einsum("abe,ecd->abcd", m, m)
    right = np.einsum("bce,aed->abcd", m, m)
    return float(np.max(np.abs(left - right)))
