"""Discretized Koopman-von Neumann wave functions and Landau-Ginzburg functionals.

A :class:`WaveFunction` is a complex amplitude per grid cell together
with the Liouville weight of a cell.  Its density ``|psi|^2`` is mapped
to exponential-family parameters by :func:`project_pi`; the phase circle
``psi -> e^{i a} psi`` is the fiber of that map.

The free energy and Landau-Ginzburg residual use units with
``hbar = c = 1``, periodic central differences and lexicographic cell
order for every sum.
"""

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import expfam
from .errors import DomainError, GridError, NotInFamilyError, ZeroFunctionError

__all__ = [
    "WaveFunction",
    "LGParams",
    "density_of",
    "normalize",
    "phase_fiber",
    "project_pi",
    "lg_free_energy",
    "lg_equation_residual",
    "regular_grid",
]


@dataclass(frozen=True)
class WaveFunction:
    """Amplitudes on grid points.

    ``points`` has shape ``(K, D)``; ``shape`` (optional) is the regular
    grid shape whose C-order flattening matches ``points``.
    """

    points: np.ndarray
    values: np.ndarray
    cell_volume: float = 1.0
    shape: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] != vals.size:
            raise ValueError(f"{pts.shape[0]} points but {vals.size} values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wave function values must be finite")
        if not self.cell_volume > 0:
            raise ValueError("cell volume must be positive")
        shape = None if self.shape is None else tuple(int(s) for s in self.shape)
        if shape is not None and int(np.prod(shape)) != vals.size:
            raise GridError(f"grid shape {shape} does not match {vals.size} cells")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "cell_volume", float(self.cell_volume))
        object.__setattr__(self, "shape", shape)

    def with_values(self, values) -> "WaveFunction":
        return WaveFunction(self.points, values, self.cell_volume, self.shape)

    def to_json(self) -> dict:
        doc = {
            "points": self.points.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
            "cell_volume": self.cell_volume,
        }
        if self.shape is not None:
            doc["shape"] = list(self.shape)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "WaveFunction":
        re_, im = np.asarray(doc["re"], dtype=float), np.asarray(doc.get("im", np.zeros(len(doc["re"]))))
        return cls(np.asarray(doc["points"], dtype=float), re_ + 1j * im,
                   doc.get("cell_volume", 1.0), doc.get("shape"))

    def to_csv(self) -> str:
        """Columns ``x0..x{D-1}, re, im, cell_volume``; the grid shape is not stored."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        D = self.points.shape[1]
        writer.writerow([f"x{i}" for i in range(D)] + ["re", "im", "cell_volume"])
        for p, v in zip(self.points, self.values):
            row = [*p, v.real, v.imag, self.cell_volume]
            writer.writerow([repr(float(c)) for c in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, shape=None) -> "WaveFunction":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        coord_cols = [i for i, h in enumerate(header) if h.startswith("x")]
        col = {h: i for i, h in enumerate(header)}
        data = np.array(body, dtype=float)
        vols = data[:, col["cell_volume"]]
        if not np.allclose(vols, vols[0], rtol=0, atol=0):
            raise GridError("cells must share one volume")
        return cls(data[:, coord_cols], data[:, col["re"]] + 1j * data[:, col["im"]], vols[0], shape)

    @classmethod
    def load(cls, path) -> "WaveFunction":
        path = str(path)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if path.endswith(".csv"):
            return cls.from_csv(text)
        return cls.from_json(json.loads(text))


def regular_grid(shape, spacing: float) -> np.ndarray:
    """Points of a regular grid, C order, shape ``(prod(shape), len(shape))``."""
    axes = [np.arange(n) * spacing for n in shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass(frozen=True)
class LGParams:
    """Landau-Ginzburg constants.

    ``magnetization_offset`` stands for the field term ``int M . dB``,
    subtracted per cell; there is no model for ``M`` so it defaults to 0.
    ``vector_potential`` is ``None`` (zero field) or shape ``(K, D)``.
    """

    alpha: float
    beta: float
    mass: float
    grid_spacing: float
    charge: float = 0.0
    F0: float = 0.0
    vector_potential: Optional[np.ndarray] = None
    magnetization_offset: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "mass", "grid_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.vector_potential is not None:
            object.__setattr__(self, "vector_potential", np.asarray(self.vector_potential, dtype=float))

    @classmethod
    def from_json(cls, doc: dict) -> "LGParams":
        keys = ("alpha", "beta", "mass", "grid_spacing", "charge", "F0", "vector_potential",
                "magnetization_offset")
        return cls(**{k: doc[k] for k in keys if k in doc})

    def to_json(self) -> dict:
        doc = {"alpha": self.alpha, "beta": self.beta, "mass": self.mass,
               "grid_spacing": self.grid_spacing, "charge": self.charge, "F0": self.F0,
               "magnetization_offset": self.magnetization_offset}
        if self.vector_potential is not None:
            doc["vector_potential"] = self.vector_potential.tolist()
        return doc


def density_of(psi: WaveFunction) -> np.ndarray:
    return np.abs(psi.values) ** 2


def normalize(psi: WaveFunction) -> WaveFunction:
    """Rescale so that ``sum |psi|^2 * cell_volume = 1``."""
    mass = float(np.sum(density_of(psi)) * psi.cell_volume)
    if mass == 0.0:
        raise ZeroFunctionError("cannot normalize the zero function")
    return psi.with_values(psi.values / np.sqrt(mass))


def phase_fiber(psi: WaveFunction, alpha: float) -> WaveFunction:
    """``e^{i alpha} psi``: a point of the same fiber."""
    return psi.with_values(np.exp(1j * alpha) * psi.values)


def project_pi(psi: WaveFunction, fam: expfam.ExponentialFamily, tol: float = 1e-12,
               max_iter: int = 200) -> np.ndarray:
    """Natural parameter of the family member closest to ``|psi|^2``.

    Cell probabilities ``|psi_k|^2 dV`` (normalized) are matched with the
    family's atom probabilities.  Exact members are recovered by a linear
    solve of ``log p_k - log w_k - C_k = <theta, F_k> - psi(theta)``;
    otherwise the moment equations ``E_theta[F] = sum_k p_k F_k`` are
    solved by damped Newton (the information projection).
    """
    if fam.num_atoms != psi.values.size:
        raise DomainError(f"family has {fam.num_atoms} atoms but the grid has {psi.values.size} cells")
    rho = density_of(psi)
    if np.any(rho <= 0):
        raise DomainError("density must be strictly positive on every cell")
    p = rho * psi.cell_volume
    p = p / p.sum()
    lhs = np.hstack([fam.statistics, -np.ones((fam.num_atoms, 1))])
    rhs = np.log(p) - fam._log_weights
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    theta = sol[:-1]
    if np.max(np.abs(expfam.probabilities(fam, theta) - p)) <= tol:
        return _newton_polish(fam, theta, p @ fam.statistics, 3)
    target = p @ fam.statistics
    theta = _newton_polish(fam, np.zeros(fam.num_params), target, max_iter)
    residual = float(np.max(np.abs(expfam.mean_params(fam, theta) - target)))
    if not residual <= 1e-10:
        raise NotInFamilyError(f"moment matching did not converge (residual {residual:.3e})", residual)
    return theta


def _newton_polish(fam, theta, target, iterations):
    theta = np.array(theta, dtype=float)
    for _ in range(iterations):
        r = expfam.mean_params(fam, theta) - target
        if np.max(np.abs(r)) < 1e-15:
            break
        step = np.linalg.solve(expfam.fisher_metric(fam, theta), r)
        # Backtrack on the convex dual objective psi(theta) - <theta, target>.
        obj = expfam.log_partition(fam, theta) - theta @ target
        t = 1.0
        while t > 1e-8:
            cand = theta - t * step
            if expfam.log_partition(fam, cand) - cand @ target <= obj + 1e-14 * max(1.0, abs(obj)):
                break
            t *= 0.5
        theta = cand
    return theta


def _grid_shape(psi: WaveFunction, p: LGParams):
    shape = psi.shape
    if shape is None:
        shape = tuple(len(np.unique(psi.points[:, d])) for d in range(psi.points.shape[1]))
        if int(np.prod(shape)) != psi.values.size:
            raise GridError("points do not form a full rectangular grid")
    D = len(shape)
    if D not in (1, 2, 3) or psi.points.shape[1] != D:
        raise GridError("grid must be 1-, 2- or 3-dimensional with matching point coordinates")
    h = p.grid_spacing
    if not np.isclose(psi.cell_volume, h ** D, rtol=1e-12, atol=0):
        raise GridError(f"cell volume {psi.cell_volume} is not spacing^{D} = {h ** D}")
    pts = psi.points.reshape(shape + (D,))
    for d in range(D):
        if shape[d] < 3:
            raise GridError("periodic central differences need at least 3 cells per axis")
        steps = np.diff(pts[..., d], axis=d)
        others = np.delete(np.diff(pts, axis=d), d, axis=-1)
        if not (np.allclose(steps, h, rtol=1e-9, atol=0) and np.allclose(others, 0, atol=1e-9 * h)):
            raise GridError("points do not form a regular grid with the given spacing")
    return shape, D


def _covariant_derivatives(psi: WaveFunction, p: LGParams):
    """``D_d psi = (-i d_d - q A_d) psi`` for each axis, as grid arrays."""
    shape, D = _grid_shape(psi, p)
    u = psi.values.reshape(shape)
    A = p.vector_potential
    if A is not None:
        A = A.reshape(shape + (D,))
    out = []
    for d in range(D):
        du = (np.roll(u, -1, axis=d) - np.roll(u, 1, axis=d)) / (2.0 * p.grid_spacing)
        Du = -1j * du
        if A is not None:
            Du = Du - p.charge * A[..., d] * u
        out.append(Du)
    return out, shape, D


def lg_free_energy(psi: WaveFunction, p: LGParams) -> float:
    """Total free energy ``sum_cells [F0 - a|psi|^2 + b/2 |psi|^4 + |D psi|^2 / 2m - M] dV``."""
    Dpsi, shape, _ = _covariant_derivatives(psi, p)
    rho = np.abs(psi.values.reshape(shape)) ** 2
    kinetic = sum(np.abs(Du) ** 2 for Du in Dpsi) / (2.0 * p.mass)
    dens = p.F0 - p.alpha * rho + 0.5 * p.beta * rho ** 2 + kinetic - p.magnetization_offset
    return float(np.sum(dens.reshape(-1)) * psi.cell_volume)


def lg_equation_residual(psi: WaveFunction, p: LGParams) -> np.ndarray:
    """Per-cell ``[(1/2m)(-i grad - qA)^2 - alpha + beta |psi|^2] psi`` (complex, flattened)."""
    Dpsi, shape, D = _covariant_derivatives(psi, p)
    second = np.zeros(shape, dtype=complex)
    for d, Du in enumerate(Dpsi):
        tmp = psi.with_values(Du.reshape(-1))
        second += _covariant_derivatives(tmp, p)[0][d]
    u = psi.values.reshape(shape)
    res = second / (2.0 * p.mass) - p.alpha * u + p.beta * np.abs(u) ** 2 * u
    return res.reshape(-1)
