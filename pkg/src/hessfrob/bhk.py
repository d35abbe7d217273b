"""Invertible quasi-homogeneous polynomials and their Berglund-Hubsch-Krawitz mirrors.

Everything here is exact integer/rational arithmetic.  A polynomial is
reduced to its exponent matrix ``E`` (row ``i`` holds the exponents of
monomial ``i``); coefficients are discarded.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import List, Sequence, Tuple

from .errors import (
    NonPositiveWeightError,
    NotInvertibleError,
    NotSquareError,
    ParseError,
    ZeroDeterminantError,
)

__all__ = [
    "ExponentMatrix",
    "Atom",
    "WeightSystem",
    "SymmetryGroup",
    "parse_polynomial",
    "format_polynomial",
    "integer_det",
    "classify_atoms",
    "weights",
    "is_calabi_yau",
    "transpose_mirror",
    "smith_normal_form",
    "symmetry_group",
    "bhk_report",
]


def integer_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    M = [list(map(int, r)) for r in rows]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


@dataclass(frozen=True)
class ExponentMatrix:
    """Square nonsingular exponent matrix of an invertible polynomial."""

    rows: Tuple[Tuple[int, ...], ...]
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        rows = tuple(tuple(int(a) for a in r) for r in self.rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            cols = {len(r) for r in rows}
            raise NotSquareError(f"{n} monomials in {sorted(cols)} variables; the matrix must be square")
        if any(a < 0 for r in rows for a in r):
            raise ParseError("exponents must be nonnegative")
        names = tuple(self.names) or tuple(f"x{i}" for i in range(n))
        if len(names) != n:
            raise ValueError("one name per variable is required")
        for j in range(n):
            if all(r[j] == 0 for r in rows):
                raise NotInvertibleError(f"variable {names[j]} appears in no monomial")
        if integer_det(rows) == 0:
            raise ZeroDeterminantError("exponent matrix is singular")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "names", names)

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def det(self) -> int:
        return integer_det(self.rows)

    def transpose(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(zip(*self.rows))

    def tolist(self) -> List[List[int]]:
        return [list(r) for r in self.rows]

    def __str__(self) -> str:
        return format_polynomial(self)


_TERM = re.compile(r"\s*([+-])?\s*([^+-]+)")
_FACTOR = re.compile(r"^([A-Za-z]+)(\d+)(?:\s*(?:\^|\*\*)\s*(\d+))?$")
_COEFF = re.compile(r"^\d+(?:\.\d*)?$")


def parse_polynomial(s: str) -> ExponentMatrix:
    """Exponent matrix of ``s``, one row per monomial in input order.

    Monomials are products (``*``) of variables ``<prefix><index>`` with
    optional ``^e`` or ``**e``; numeric coefficients are ignored.
    Variable indices must run over ``0..N`` and all share one prefix.
    """
    if not isinstance(s, str) or not s.strip():
        raise ParseError("empty polynomial")
    text = s.strip()
    pos, monomials = 0, []
    for m in _TERM.finditer(text):
        if m.start() != pos:
            raise ParseError(f"cannot parse near {text[pos:]!r}")
        pos = m.end()
        exps = {}
        for raw in _split_factors(m.group(2)):
            f = raw.strip()
            if not f:
                raise ParseError(f"empty factor in {m.group(2)!r}")
            if _COEFF.match(f):
                continue
            fm = _FACTOR.match(f)
            if not fm:
                raise ParseError(f"bad factor {f!r}")
            key = (fm.group(1), int(fm.group(2)))
            exps[key] = exps.get(key, 0) + int(fm.group(3) or 1)
        if not exps:
            raise ParseError("constant terms are not allowed")
        monomials.append(exps)
    if pos != len(text):
        raise ParseError(f"trailing input {text[pos:]!r}")
    prefixes = {p for mono in monomials for p, _ in mono}
    if len(prefixes) != 1:
        raise ParseError(f"variables must share one prefix, got {sorted(prefixes)}")
    prefix = prefixes.pop()
    indices = {i for mono in monomials for _, i in mono}
    nvars = max(indices) + 1
    missing = sorted(set(range(nvars)) - indices)
    if missing:
        raise NotInvertibleError(f"variables {[f'{prefix}{i}' for i in missing]} appear in no monomial")
    if len(monomials) != nvars:
        raise NotSquareError(f"{len(monomials)} monomials in {nvars} variables")
    rows = [[mono.get((prefix, j), 0) for j in range(nvars)] for mono in monomials]
    return ExponentMatrix(rows, tuple(f"{prefix}{j}" for j in range(nvars)))


def _split_factors(term: str) -> List[str]:
    # '**' is an exponent marker; protect it before splitting on '*'.
    return [f.replace("\0", "**") for f in term.replace("**", "\0").split("*")]


def format_polynomial(E: ExponentMatrix) -> str:
    terms = []
    for r in E.rows:
        factors = [name if a == 1 else f"{name}^{a}" for name, a in zip(E.names, r) if a]
        terms.append("*".join(factors))
    return " + ".join(terms)


@dataclass(frozen=True)
class Atom:
    """A Fermat, loop or chain block; ``variables`` in cycle/chain order."""

    kind: str
    variables: Tuple[int, ...]
    exponents: Tuple[int, ...]

    def to_json(self, names=None) -> dict:
        labels = [names[v] for v in self.variables] if names else list(self.variables)
        return {"kind": self.kind, "variables": labels, "exponents": list(self.exponents)}


def classify_atoms(E: ExponentMatrix) -> List[Atom]:
    """Decompose ``E`` into Fermat ``x^a``, loop and chain blocks.

    Each monomial must be ``x_p^a`` or ``x_p^a x_q`` with ``a >= 2``;
    the second form is an edge ``p -> q``.  Every variable must be the
    pivot ``p`` of exactly one monomial and receive at most one edge.
    Cycles are loops; maximal paths ending at a pure power are chains.
    """
    n = E.size
    pivot_of_row, target = {}, {}
    for i, r in enumerate(E.rows):
        support = [j for j in range(n) if r[j]]
        if len(support) == 1 and r[support[0]] >= 2:
            p, q = support[0], None
        elif len(support) == 2:
            a, b = support
            if r[a] >= 2 and r[b] == 1:
                p, q = a, b
            elif r[b] >= 2 and r[a] == 1:
                p, q = b, a
            else:
                raise NotInvertibleError(f"monomial {i} is not of the form x^a or x^a*y")
        else:
            raise NotInvertibleError(f"monomial {i} is not of the form x^a or x^a*y")
        if p in pivot_of_row:
            raise NotInvertibleError(f"variable {E.names[p]} is the power variable of two monomials")
        pivot_of_row[p] = i
        target[p] = q
    incoming = {}
    for p, q in target.items():
        if q is not None:
            if q in incoming:
                raise NotInvertibleError(f"variable {E.names[q]} is the linear factor of two monomials")
            incoming[q] = p

    def exponent(v):
        return E.rows[pivot_of_row[v]][v]

    atoms, seen = [], set()
    for start in range(n):
        if start in seen or start in incoming:
            continue
        path = [start]
        while target[path[-1]] is not None:
            path.append(target[path[-1]])
        seen.update(path)
        kind = "fermat" if len(path) == 1 else "chain"
        atoms.append(Atom(kind, tuple(path), tuple(exponent(v) for v in path)))
    for start in range(n):
        if start in seen:
            continue
        cycle = [start]
        while target[cycle[-1]] != start:
            cycle.append(target[cycle[-1]])
        seen.update(cycle)
        atoms.append(Atom("loop", tuple(cycle), tuple(exponent(v) for v in cycle)))
    return sorted(atoms, key=lambda a: min(a.variables))


@dataclass(frozen=True)
class WeightSystem:
    """Integer weights ``w`` and degree ``d`` with ``gcd(w, d) = 1``."""

    w: Tuple[int, ...]
    d: int

    def __post_init__(self):
        w = tuple(int(x) for x in self.w)
        if self.d <= 0 or any(x <= 0 for x in w):
            raise NonPositiveWeightError(f"weights {w} and degree {self.d} must be positive")
        if reduce(gcd, w, self.d) != 1:
            raise ValueError("weight system is not reduced (gcd of weights and degree is not 1)")
        object.__setattr__(self, "w", w)

    @property
    def charges(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(x, self.d) for x in self.w)


def _solve_rational(rows, rhs) -> List[Fraction]:
    n = len(rows)
    M = [[Fraction(a) for a in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k] != 0), None)
        if piv is None:
            raise ZeroDeterminantError("exponent matrix is singular")
        M[k], M[piv] = M[piv], M[k]
        for i in range(n):
            if i != k and M[i][k] != 0:
                f = M[i][k] / M[k][k]
                M[i] = [a - f * b for a, b in zip(M[i], M[k])]
    return [M[i][n] / M[i][i] for i in range(n)]


def weights(E: ExponentMatrix) -> WeightSystem:
    """Solve ``E q = 1`` over the rationals and clear denominators."""
    q = _solve_rational(E.rows, [1] * E.size)
    if any(x <= 0 for x in q):
        raise NonPositiveWeightError(f"charges {[str(x) for x in q]} are not all positive")
    d = reduce(lcm, (x.denominator for x in q), 1)
    w = [int(x * d) for x in q]
    g = reduce(gcd, w, d)
    w, d = [x // g for x in w], d // g
    assert all(sum(a * b for a, b in zip(r, w)) == d for r in E.rows)
    return WeightSystem(tuple(w), d)


def is_calabi_yau(ws: WeightSystem) -> bool:
    return sum(ws.w) == ws.d


def _fresh_names(names):
    out = []
    for name in names:
        m = re.fullmatch(r"([A-Za-z]+)(\d+)", name)
        prefix, idx = (m.group(1), m.group(2)) if m else ("x", str(len(out)))
        out.append({"x": "y", "y": "x"}.get(prefix, "y") + idx)
    return tuple(out)


def transpose_mirror(E: ExponentMatrix) -> ExponentMatrix:
    """BHK transpose ``E^T``; variable prefixes swap ``x <-> y``."""
    return ExponentMatrix(E.transpose(), _fresh_names(E.names))


def smith_normal_form(rows: Sequence[Sequence[int]]) -> List[int]:
    """Diagonal of the Smith normal form of an integer matrix (nonnegative, dividing chain)."""
    M = [list(map(int, r)) for r in rows]
    m = len(M)
    n = len(M[0]) if m else 0
    diag = []
    for k in range(min(m, n)):
        while True:
            entries = [(abs(M[i][j]), i, j) for i in range(k, m) for j in range(k, n) if M[i][j]]
            if not entries:
                return diag + [0] * (min(m, n) - k)
            _, i0, j0 = min(entries)
            M[k], M[i0] = M[i0], M[k]
            for r in M:
                r[k], r[j0] = r[j0], r[k]
            p = M[k][k]
            clean = True
            for i in range(k + 1, m):
                q = M[i][k] // p
                if q:
                    M[i] = [a - q * b for a, b in zip(M[i], M[k])]
                clean &= M[i][k] == 0
            for j in range(k + 1, n):
                q = M[k][j] // p
                if q:
                    for r in M:
                        r[j] -= q * r[k]
                clean &= M[k][j] == 0
            if not clean:
                continue
            bad = next(((i, j) for i in range(k + 1, m) for j in range(k + 1, n) if M[i][j] % p), None)
            if bad is None:
                break
            M[k] = [a + b for a, b in zip(M[k], M[bad[0]])]
        diag.append(abs(M[k][k]))
    return diag


@dataclass(frozen=True)
class SymmetryGroup:
    """Finite abelian group ``Z/d_1 x .. x Z/d_r`` with ``d_1 | d_2 | ..``."""

    invariant_factors: Tuple[int, ...]

    @property
    def order(self) -> int:
        out = 1
        for d in self.invariant_factors:
            out *= d
        return out


def symmetry_group(E: ExponentMatrix) -> SymmetryGroup:
    """Diagonal symmetries ``Z^{N+1} / E^T Z^{N+1}`` via Smith normal form; trivial factors dropped."""
    diag = smith_normal_form(E.transpose())
    if 0 in diag:
        raise ZeroDeterminantError("exponent matrix is singular")
    group = SymmetryGroup(tuple(d for d in diag if d != 1))
    assert group.order == abs(E.det)
    return group


def bhk_report(E: ExponentMatrix) -> dict:
    """JSON-ready summary of ``E`` and its transpose mirror."""
    ws = weights(E)
    mirror = transpose_mirror(E)
    mws = weights(mirror)
    group = symmetry_group(E)
    mgroup = symmetry_group(mirror)
    return {
        "polynomial": format_polynomial(E),
        "exponent_matrix": E.tolist(),
        "weights": list(ws.w),
        "degree": ws.d,
        "calabi_yau": is_calabi_yau(ws),
        "atoms": [a.to_json(E.names) for a in classify_atoms(E)],
        "group": {"invariant_factors": list(group.invariant_factors), "order": group.order},
        "mirror": {
            "polynomial": format_polynomial(mirror),
            "exponent_matrix": mirror.tolist(),
            "weights": list(mws.w),
            "degree": mws.d,
            "calabi_yau": is_calabi_yau(mws),
            "atoms": [a.to_json(mirror.names) for a in classify_atoms(mirror)],
            "group": {"invariant_factors": list(mgroup.invariant_factors), "order": mgroup.order},
        },
    }
