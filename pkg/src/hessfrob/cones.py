"""Symmetric cones of positive-definite matrices.

The cone ``P_n(K)`` (real symmetric or complex Hermitian) carries the
potential ``-log det`` whose Hessian is the affine-invariant metric
``g_X(V, W) = Re Tr(X^-1 V X^-1 W)``.  Coordinates on ``Sym(n)`` are the
upper triangle in row-major order, ``(x11, x12, .., x1n, x22, ..)``; the
Hermitian case appends the imaginary parts of the strict upper triangle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DimensionMismatchError, NotInConeError, NotSymmetricError
from .hessian_core import (
    Potential,
    christoffel,
    compatibility_residual,
    hessian_metric,
    wdvv_residual,
)

__all__ = [
    "ConePoint",
    "CartanTorusPoint",
    "in_cone",
    "koszul_potential",
    "cone_metric",
    "coordinate_basis",
    "to_matrix",
    "to_coords",
    "logdet_potential",
    "ma_constant",
    "cone_ma_check",
    "geodesic",
    "geodesic_by_integration",
    "jordan_product",
    "trace_form",
    "cartan_frobenius_check",
    "cartan_torus_curvature",
    "torus_from_cone",
    "quaternionic_embedding",
    "random_cone_point",
]

_HERMITIAN_TOL = 1e-12


def _square(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {X.shape}")
    if not np.iscomplexobj(X):
        X = X.astype(float)
    return X


def _check_hermitian(X) -> np.ndarray:
    X = _square(X)
    scale = max(1.0, float(np.max(np.abs(X))))
    if np.max(np.abs(X - X.conj().T)) > _HERMITIAN_TOL * scale:
        raise NotSymmetricError("matrix is not symmetric/Hermitian")
    return X


def in_cone(X) -> bool:
    """True iff ``X`` is symmetric (Hermitian) positive definite."""
    X = _check_hermitian(X)
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return False
    return True


def _cone(X) -> np.ndarray:
    if not in_cone(X):
        raise NotInConeError("matrix is not positive definite")
    return _square(X)


@dataclass(frozen=True)
class ConePoint:
    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _cone(self.X))

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class CartanTorusPoint:
    """Positive diagonal matrix of determinant one."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).reshape(-1)
        if np.any(d <= 0):
            raise NotInConeError("Cartan torus entries must be positive")
        if abs(np.sum(np.log(d))) > 1e-12:
            raise ValueError("Cartan torus point must have unit determinant")
        object.__setattr__(self, "diag", d)

    @classmethod
    def from_log(cls, a) -> "CartanTorusPoint":
        a = np.asarray(a, dtype=float)
        return cls(np.exp(a - a.mean()))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


def koszul_potential(X) -> float:
    """``-log det X`` (the Koszul-Vinberg potential up to scale and constant)."""
    X = _cone(X)
    L = np.linalg.cholesky(X)
    return float(-2.0 * np.sum(np.log(np.real(np.diag(L)))))


def cone_metric(X, V, W) -> float:
    """``g_X(V, W) = Re Tr(X^-1 V X^-1 W)``."""
    X = _cone(X)
    V, W = _square(V), _square(W)
    if V.shape != X.shape or W.shape != X.shape:
        raise DimensionMismatchError("tangent vectors must match the base point")
    Xi = np.linalg.inv(X)
    return float(np.real(np.trace(Xi @ V @ Xi @ W)))


def coordinate_basis(n: int, field: str = "real") -> np.ndarray:
    """Basis matrices ``B_a`` with ``X = sum_a x_a B_a``; shape ``(dim, n, n)``."""
    if field not in ("real", "complex"):
        raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
    dtype = float if field == "real" else complex
    basis = []
    for i in range(n):
        for j in range(i, n):
            B = np.zeros((n, n), dtype=dtype)
            B[i, j] = B[j, i] = 1.0
            basis.append(B)
    if field == "complex":
        for i in range(n):
            for j in range(i + 1, n):
                B = np.zeros((n, n), dtype=complex)
                B[i, j], B[j, i] = 1j, -1j
                basis.append(B)
    return np.array(basis)


def to_matrix(x, n: int, field: str = "real") -> np.ndarray:
    return np.tensordot(np.asarray(x, dtype=float), coordinate_basis(n, field), axes=1)


def to_coords(X, field: str = "real") -> np.ndarray:
    X = _square(X)
    n = X.shape[0]
    iu = np.triu_indices(n)
    coords = list(np.real(X[iu]))
    if field == "complex":
        iu1 = np.triu_indices(n, 1)
        coords += list(np.imag(X[iu1]))
    return np.array(coords, dtype=float)


def _logdet_derivatives(n, field):
    basis = coordinate_basis(n, field)

    def hess(x):
        Xi = np.linalg.inv(to_matrix(x, n, field))
        P = np.einsum("ij,ajk->aik", Xi, basis)  # X^-1 B_a
        return np.real(np.einsum("aij,bji->ab", P, P))

    def third(x):
        Xi = np.linalg.inv(to_matrix(x, n, field))
        P = np.einsum("ij,ajk->aik", Xi, basis)
        t = np.einsum("aij,bjk,cki->abc", P, P, P)
        return -np.real(t + t.transpose(0, 2, 1))

    def grad(x):
        Xi = np.linalg.inv(to_matrix(x, n, field))
        return -np.real(np.einsum("ij,aji->a", Xi, basis))

    return grad, hess, third


def ma_constant(n: int, field: str = "real") -> float:
    """``kappa`` in ``det Hess(-log det) = kappa det(X)^-(n+1)`` (real) or ``^-2n`` (complex)."""
    return float(2.0 ** (n * (n - 1) // 2 if field == "real" else n * (n - 1)))


def _ma_exponent(n, field):
    return n + 1 if field == "real" else 2 * n


def random_cone_point(rng: np.random.Generator, n: int, field: str = "real") -> np.ndarray:
    """Well-conditioned random cone point ``A A^* / n + I / 2``."""
    A = rng.normal(size=(n, n))
    if field == "complex":
        A = A + 1j * rng.normal(size=(n, n))
    X = A @ A.conj().T / n + 0.5 * np.eye(n)
    return 0.5 * (X + X.conj().T)


def logdet_potential(n: int, field: str = "real", closed_form: bool = True) -> Potential:
    """``-log det`` as a :class:`Potential` in the upper-triangle coordinates."""
    grad, hess, third = _logdet_derivatives(n, field)
    dim = n * (n + 1) // 2 if field == "real" else n * n

    def domain(x):
        try:
            np.linalg.cholesky(to_matrix(x, n, field))
        except np.linalg.LinAlgError:
            return False
        return True

    def dist(x):
        # Frobenius-ball radius around X inside the cone; coordinates weight
        # off-diagonals by sqrt(2), so halve it for safety.
        return 0.5 * float(np.linalg.eigvalsh(to_matrix(x, n, field))[0])

    return Potential(
        dim=dim,
        func=lambda x: koszul_potential(to_matrix(x, n, field)),
        domain=domain,
        grad=grad if closed_form else None,
        hess=hess if closed_form else None,
        third=third if closed_form else None,
        boundary_distance=dist,
        sampler=lambda rng, k: np.array([to_coords(random_cone_point(rng, n, field), field)
                                         for _ in range(k)]),
        name=f"logdet-{n}" + ("" if field == "real" else "-complex"),
    )


def cone_ma_check(X, field: Optional[str] = None, h: Optional[float] = None):
    """Finite-difference ``det Hess(-log det)`` at ``X`` against ``kappa det(X)^-(n+1)``.

    Returns ``(det_hess, target)``.  ``field`` defaults to complex for
    complex input and real otherwise.
    """
    X = _cone(X)
    if field is None:
        field = "complex" if np.iscomplexobj(X) and np.any(np.imag(X) != 0) else "real"
    n = X.shape[0]
    pot = logdet_potential(n, field, closed_form=False)
    g = hessian_metric(pot, to_coords(X, field), h=h, method="fd")
    detX = float(np.real(np.linalg.det(X)))
    return float(np.linalg.det(g)), ma_constant(n, field) * detX ** (-_ma_exponent(n, field))


def _eig_fun(X, fun):
    w, U = np.linalg.eigh(X)
    return (U * fun(w)) @ U.conj().T


def geodesic(X, V, t: float) -> np.ndarray:
    """``X^1/2 exp(t X^-1/2 V X^-1/2) X^1/2`` (affine-invariant geodesic)."""
    X = _cone(X)
    V = _check_hermitian(V)
    if V.shape != X.shape:
        raise DimensionMismatchError("tangent vector must match the base point")
    s = _eig_fun(X, np.sqrt)
    si = _eig_fun(X, lambda w: 1.0 / np.sqrt(w))
    M = si @ V @ si
    M = 0.5 * (M + M.conj().T)
    G = s @ _eig_fun(M, lambda w: np.exp(t * w)) @ s
    return 0.5 * (G + G.conj().T)


def geodesic_by_integration(X, V, t: float, rtol: float = 1e-12, atol: float = 1e-13) -> np.ndarray:
    """Geodesic of the Hessian metric of ``-log det`` by integrating its ODE.

    Works in the real coordinates of :func:`to_coords` with the
    Christoffel symbols ``1/2 g^-1 A`` of the closed-form potential:
    ``x'' = -Gamma(x', x')``.
    """
    X = _cone(X)
    field = "complex" if np.iscomplexobj(X) else "real"
    n = X.shape[0]
    pot = logdet_potential(n, field)
    x0, v0 = to_coords(X, field), to_coords(_check_hermitian(V), field)
    k = x0.size

    def rhs(_, y):
        x, v = y[:k], y[k:]
        gamma = christoffel(pot.hess(x), pot.third(x))
        return np.concatenate([v, -np.einsum("abc,a,b->c", gamma, v, v)])

    sol = solve_ivp(rhs, (0.0, t), np.concatenate([x0, v0]), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return to_matrix(sol.y[:k, -1], n, field)


def _same_shape(X, Y):
    X, Y = _square(X), _square(Y)
    if X.shape != Y.shape:
        raise DimensionMismatchError(f"shapes {X.shape} and {Y.shape} differ")
    return X, Y


def jordan_product(X, Y) -> np.ndarray:
    """``(XY + YX) / 2``."""
    X, Y = _same_shape(X, Y)
    return 0.5 * (X @ Y + Y @ X)


def trace_form(X, Y) -> float:
    """``<X, Y> = Re Tr(XY)``."""
    X, Y = _same_shape(X, Y)
    return float(np.real(np.trace(X @ Y)))


def _diag_algebra(n):
    m = np.zeros((n, n, n))
    idx = np.arange(n)
    m[idx, idx, idx] = 1.0
    return m


def cartan_frobenius_check(n: int, samples: int = 100, seed: int = 0) -> dict:
    """Frobenius-algebra residuals of the diagonal (Cartan) algebra.

    Structure constants, Gram matrix and products are all derived from
    :func:`jordan_product` and :func:`trace_form` on the diagonal matrix
    units, then checked for commutativity, associativity, unit,
    invariance and nondegeneracy.  Random diagonal triples additionally
    test invariance through the matrix operations.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    units = [np.diag(np.eye(n)[a]) for a in range(n)]
    gram = np.array([[trace_form(a, b) for b in units] for a in units])
    gram_inv = np.linalg.inv(gram)
    lowered = np.array([[[trace_form(jordan_product(a, b), c) for c in units]
                         for b in units] for a in units])
    m = np.einsum("abe,ec->abc", lowered, gram_inv)
    unit = np.eye(n)
    unit_coords = np.array([trace_form(unit, c) for c in units]) @ gram_inv
    invariance = max(abs(trace_form(jordan_product(a, b), c) - trace_form(a, jordan_product(b, c)))
                     for a in units for b in units for c in units)
    rng = np.random.default_rng(seed)
    sampled = 0.0
    for _ in range(samples):
        X, Y, Z = (np.diag(rng.normal(size=n)) for _ in range(3))
        sampled = max(sampled, abs(trace_form(jordan_product(X, Y), Z)
                                   - trace_form(X, jordan_product(Y, Z))))
    report = {
        "n": n,
        "samples": samples,
        "commutativity": float(np.max(np.abs(m - m.transpose(1, 0, 2)))),
        "wdvv": wdvv_residual(m),
        "unit": float(np.max(np.abs(np.einsum("a,abc->bc", unit_coords, m) - np.eye(n)))),
        "compatibility": compatibility_residual(gram, lowered, m),
        "invariance": float(invariance),
        "sampled_invariance": float(sampled),
        "gram_det": float(np.linalg.det(gram)),
    }
    report["max_residual"] = max(report[k] for k in
                                 ("commutativity", "wdvv", "unit", "compatibility", "invariance",
                                  "sampled_invariance"))
    return report


def _torus_metric(d_free):
    """Induced metric on the Cartan torus in the chart ``(d_1, .., d_{n-1})``.

    ``d_n = 1 / prod d_i``; tangent vectors ``dX/dd_i = E_ii - (d_n / d_i) E_nn``
    are fed to :func:`cone_metric`.
    """
    d_free = np.asarray(d_free, dtype=float)
    k = d_free.size
    d = np.append(d_free, 1.0 / np.prod(d_free))
    X = np.diag(d)
    tangents = []
    for i in range(k):
        T = np.zeros(k + 1)
        T[i] = 1.0
        T[k] = -d[k] / d[i]
        tangents.append(np.diag(T))
    return np.array([[cone_metric(X, a, b) for b in tangents] for a in tangents])


def _fd_christoffel(metric, x, h):
    k = x.size
    dg = np.empty((k, k, k))  # dg[c] = d_c g
    for c in range(k):
        e = np.zeros(k)
        e[c] = h
        dg[c] = (metric(x + e) - metric(x - e)) / (2 * h)
    ginv = np.linalg.inv(metric(x))
    # Gamma^l_ij = 1/2 g^lm (d_i g_mj + d_j g_mi - d_m g_ij)
    tmp = np.einsum("imj->mij", dg) + np.einsum("jmi->mij", dg) - dg
    return 0.5 * np.einsum("lm,mij->lij", ginv, tmp)


def cartan_torus_curvature(n: int, point=None, h: float = 1e-4) -> float:
    """Max |R^l_ijk| of the induced metric on the Cartan torus, by finite differences.

    The Christoffel symbols come from central differences of the metric
    and the Riemann tensor from central differences of those symbols.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    x = np.linspace(0.7, 1.4, n - 1) if point is None else np.asarray(point, dtype=float)
    k = x.size

    def gamma(y):
        return _fd_christoffel(_torus_metric, y, h)

    G = gamma(x)
    dG = np.empty((k, k, k, k))  # dG[c] = d_c Gamma
    for c in range(k):
        e = np.zeros(k)
        e[c] = h
        dG[c] = (gamma(x + e) - gamma(x - e)) / (2 * h)
    # R^l_ijk = d_j Gamma^l_ik - d_k Gamma^l_ij + Gamma^l_jm Gamma^m_ik - Gamma^l_km Gamma^m_ij
    R = (np.einsum("jlik->lijk", dG) - np.einsum("klij->lijk", dG)
         + np.einsum("ljm,mik->lijk", G, G) - np.einsum("lkm,mij->lijk", G, G))
    return float(np.max(np.abs(R))) if R.size else 0.0


def torus_from_cone(Y):
    """Lattice basis (columns of ``Y``) and covolume ``det Y`` of ``R^n / Y Z^n``."""
    Y = _cone(Y)
    if np.iscomplexobj(Y):
        raise ValueError("torus_from_cone takes a real cone point")
    return Y.copy(), float(np.linalg.det(Y))


def quaternionic_embedding(a, b, c, d) -> np.ndarray:
    """Experimental: ``a + b i + c j + d k`` as the 2n x 2n complex matrix ``[[A, B], [-conj B, conj A]]``."""
    A = np.asarray(a) + 1j * np.asarray(b)
    B = np.asarray(c) + 1j * np.asarray(d)
    return np.block([[A, B], [-B.conj(), A.conj()]])
