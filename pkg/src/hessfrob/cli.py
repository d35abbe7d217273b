"""Command-line verification runs with deterministic JSON reports.

Every subcommand draws its randomness from one seeded generator
(``--seed``, default :data:`DEFAULT_SEED`) split into a fixed stream per
subcommand, builds its report in a fixed key order and writes floats as
shortest round-trip decimals, so a repeated run is byte-identical.

Exit status: 0 when every check is within tolerance, 1 when some check
fails (listed under ``failures``), 2 on invalid input.
"""

import argparse
import json
import sys
from collections import Counter
from fractions import Fraction

import numpy as np

from . import bhk, cones, expfam, kvn, syz
from .errors import HessfrobError, NoSolutionFoundError
from .hessian_core import (
    compatibility_residual,
    hessian_metric,
    ma_residual,
    structure_constants,
    symmetry_residual,
    third_tensor,
    wdvv_residual,
)
from .potentials import get_potential

SCHEMA_VERSION = "1"
DEFAULT_SEED = 20240917

_STREAMS = {"gema-check": 0, "expfam-check": 1, "bhk": 2, "syz": 3, "kvn": 4, "cone-check": 5}

DEFAULT_TOLERANCES = {
    "gema-check": {"ma_relative": 1e-5, "compatibility": 1e-6, "symmetry": 1e-6,
                   "fd_metric": 1e-6, "fd_third": 1e-6, "kappa_spread": 1e-5},
    "expfam-check": {"roundtrip": 1e-8, "fenchel": 1e-10, "fisher_covariance": 1e-8,
                     "fisher_fd": 1e-6, "dual_ma": 1e-5},
    "bhk": {},
    "syz": {"moment_map": 1e-12, "invariance": 1e-12, "isotropy": 1e-12, "level_set": 1e-14,
            "legendre_roundtrip": 1e-12},
    "kvn": {"normalization": 1e-12, "phase_invariance": 1e-10, "lg_residual": 1e-12},
    "cone-check": {"ma_spread": 1e-5, "metric_fd": 1e-6, "geodesic": 1e-6, "cartan": 1e-12,
                   "trace_invariance": 1e-12, "curvature": 1e-6},
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def _text(report: dict, prefix="") -> str:
    lines = []
    for k, v in _jsonable(report).items():
        if isinstance(v, dict):
            lines.append(_text(v, f"{prefix}{k}.").rstrip("\n"))
        else:
            lines.append(f"{prefix}{k}: {json.dumps(v)}")
    return "\n".join(line for line in lines if line) + "\n"


class _Run:
    """Collects checks and builds the report envelope."""

    def __init__(self, command, args):
        self.command = command
        self.seed = args.seed
        self.tol = dict(DEFAULT_TOLERANCES[command])
        for name, value in args.tol:
            if name not in self.tol:
                raise HessfrobError(f"unknown tolerance {name!r} for {command}; "
                                    f"known: {', '.join(self.tol) or 'none'}")
            self.tol[name] = value
        ss = np.random.SeedSequence(self.seed, spawn_key=(_STREAMS[command],))
        self.rng = np.random.default_rng(ss)
        self.checks = []

    def check(self, name, value, tol_name=None, relation="<="):
        tol_name = tol_name or name
        tol = self.tol[tol_name]
        ok = bool(value <= tol) if relation == "<=" else bool(value == tol)
        self.checks.append({"name": name, "value": value, "tolerance": tol, "passed": ok})

    def require(self, name, ok):
        self.checks.append({"name": name, "value": bool(ok), "tolerance": True, "passed": bool(ok)})

    def report(self, body: dict) -> dict:
        failures = [c["name"] for c in self.checks if not c["passed"]]
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            **body,
            "checks": self.checks,
            "failures": failures,
            "passed": not failures,
        }


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1e-300, float(np.max(np.abs(b)))))


def cmd_gema_check(args) -> dict:
    run = _Run("gema-check", args)
    gp = get_potential(args.potential, args.dim)
    pot = gp.potential
    pts = pot.sample(run.rng, args.samples)
    ma, ma_rel, compat, sym, wdvv, fd_g, fd_a, kappas = [], [], [], [], [], [], [], []
    for x in pts:
        g = hessian_metric(pot, x)
        A = third_tensor(pot, x)
        m = structure_constants(g, A)
        ma.append(abs(ma_residual(pot, x, gp.target)))
        # det Hess grows like 1/prod(eta) near the boundary, so the gate is relative
        ma_rel.append(ma[-1] / gp.target(x))
        compat.append(compatibility_residual(g, A, m))
        sym.append(symmetry_residual(A))
        wdvv.append(wdvv_residual(m))
        g_fd = hessian_metric(pot, x, method="fd")
        fd_g.append(_rel(g_fd, g))
        fd_a.append(_rel(third_tensor(pot, x, method="fd"), A) if np.any(A) else
                    float(np.max(np.abs(third_tensor(pot, x, method="fd")))))
        if args.potential.startswith("logdet-"):
            n = int(args.potential.split("-")[1])
            X = cones.to_matrix(x, n)
            kappas.append(float(np.linalg.det(g_fd)) * float(np.linalg.det(X)) ** (n + 1))
    run.check("ma_relative", max(ma_rel))
    run.check("compatibility", max(compat))
    run.check("symmetry", max(sym))
    run.check("fd_metric", max(fd_g))
    run.check("fd_third", max(fd_a))
    body = {
        "potential": pot.name,
        "dim": pot.dim,
        "points": len(pts),
        "ma_residual_max": max(ma),
        "ma_relative_max": max(ma_rel),
        "compatibility_max": max(compat),
        "symmetry_max": max(sym),
        "wdvv_residual_max": max(wdvv),
        "fd_metric_rel_max": max(fd_g),
        "fd_third_max": max(fd_a),
    }
    if kappas:
        k = np.array(kappas)
        spread = float((k.max() - k.min()) / k.mean())
        body["kappa"] = float(np.round(k.mean(), 6))
        body["kappa_expected"] = cones.ma_constant(int(args.potential.split("-")[1]))
        body["kappa_spread"] = spread
        run.check("kappa_spread", spread)
    return run.report(body)


def cmd_expfam_check(args) -> dict:
    run = _Run("expfam-check", args)
    N = args.dim
    fam = expfam.categorical(N + 1)
    full = expfam.categorical(N + 1, gauge_fixed=False)
    roundtrip, fenchel, cov, fd, dual = [], [], [], [], []
    for _ in range(args.samples):
        theta = run.rng.normal(scale=1.5, size=N)
        eta = expfam.probabilities(fam, theta)
        back = expfam.natural_params(eta)
        roundtrip.append(float(np.max(np.abs((back[1:] - back[0]) - theta))))
        th_full = expfam.natural_params(eta)
        fenchel.append(abs(expfam.log_partition(full, th_full) + expfam.negative_entropy(eta)
                           - float(th_full @ eta)))
        g = expfam.fisher_metric(fam, theta)
        e = eta[1:]
        cov.append(float(np.max(np.abs(g - (np.diag(e) - np.outer(e, e))))))
        g_fd = hessian_metric(expfam.family_potential(fam), theta, method="fd")
        fd.append(_rel(g_fd, g))
    for eta in expfam.sample_simplex(run.rng, args.samples, N):
        det_hess, target = expfam.dual_ma_check(eta)
        dual.append(abs(det_hess - target) / target)
    run.check("roundtrip", max(roundtrip))
    run.check("fenchel", max(fenchel))
    run.check("fisher_covariance", max(cov))
    run.check("fisher_fd", max(fd))
    run.check("dual_ma", max(dual))
    quad = expfam.simplex_quadrature_family(N, resolution=args.resolution)
    gaps = [expfam.legendre_gap(quad, t) for t in run.rng.normal(size=(3, N))]
    return run.report({
        "family": fam.name,
        "samples": args.samples,
        "roundtrip_max": max(roundtrip),
        "fenchel_max": max(fenchel),
        "fisher_covariance_max": max(cov),
        "fisher_fd_rel_max": max(fd),
        "dual_ma_rel_max": max(dual),
        "experimental_quadrature": {"family": quad.name, "nodes": quad.num_atoms,
                                    "legendre_gap": gaps},
    })


def _exponent_matrix(args) -> bhk.ExponentMatrix:
    if args.matrix:
        return bhk.ExponentMatrix(json.loads(args.matrix))
    if not args.polynomial:
        raise bhk.ParseError("give a polynomial or --matrix")
    return bhk.parse_polynomial(args.polynomial)


def cmd_bhk(args) -> dict:
    run = _Run("bhk", args)
    E = _exponent_matrix(args)
    body = bhk.bhk_report(E)
    ws = bhk.weights(E)
    mirror = bhk.transpose_mirror(E)
    run.require("quasi_homogeneous", all(sum(a * b for a, b in zip(r, ws.w)) == ws.d for r in E.rows))
    run.require("mirror_involution", bhk.transpose_mirror(mirror).rows == E.rows)
    run.require("group_order_is_abs_det", body["group"]["order"] == abs(E.det))
    return run.report(body)


def _slice_samples(slc, rng, count, N):
    if slc.is_empty():
        return expfam.sample_simplex(rng, count, N), False
    base = slc.interior_point()
    w = np.array(slc.w, dtype=float)
    constraints = np.vstack([np.ones_like(w), w])
    _, _, vt = np.linalg.svd(constraints)
    null = vt[np.linalg.matrix_rank(constraints):]
    out = []
    for _ in range(count):
        if null.shape[0] == 0:
            out.append(base)
            continue
        d = rng.normal(size=null.shape[0]) @ null
        neg = d < 0
        t_max = np.min(base[neg] / -d[neg]) if np.any(neg) else 1.0
        eta = base + 0.9 * rng.uniform() * t_max * d
        out.append(eta / eta.sum())
    return np.array(out), True


def cmd_syz(args) -> dict:
    run = _Run("syz", args)
    E = _exponent_matrix(args)
    ws = bhk.weights(E)
    level = None if args.level is None else Fraction(args.level).limit_denominator(10 ** 9)
    slc = syz.SlicePolytope.from_weights(ws, level)
    N = E.size - 1
    etas, on_slice = _slice_samples(slc, run.rng, args.samples, N)
    mm, inv, iso, lvl, leg = [], [], [], [], []
    dims = Counter()
    for eta in etas:
        seed = int(run.rng.integers(2 ** 63))
        (z,) = syz.sample_fiber(eta, ws.w, 1, seed=seed)
        mm.append(float(np.max(np.abs(syz.moment_map(z) - eta))))
        lvl.append(abs(z.level() - 1.0))
        t = np.exp(run.rng.normal() + 1j * run.rng.uniform(0, 2 * np.pi))
        phases = np.exp(1j * run.rng.uniform(0, 2 * np.pi, size=eta.size))
        moved = syz.WeightedProjectivePoint(syz.weighted_action(z.z, z.w, t), z.w)
        rotated = syz.WeightedProjectivePoint(phases * z.z, z.w)
        inv.append(max(float(np.max(np.abs(syz.moment_map(q) - eta))) for q in (moved, rotated)))
        iso.append(syz.isotropy_residual(z, None, tangent_pairs=args.pairs, seed=seed))
        theta = syz.legendre_chart(eta)
        leg.append(float(np.max(np.abs(np.exp(theta) / np.exp(theta).sum() - eta))))
        try:
            dims[str(syz.hypersurface_fiber_dimension(E, ws, eta, seed=seed, starts=args.starts))] += 1
        except NoSolutionFoundError:
            dims["no_solution"] += 1
    run.check("moment_map", max(mm))
    run.check("invariance", max(inv))
    run.check("isotropy", max(iso))
    run.check("level_set", max(lvl))
    run.check("legendre_roundtrip", max(leg))
    if on_slice:
        off = max(abs(float(np.dot(slc.w, e)) - float(slc.level)) for e in etas)
        run.require("samples_on_slice", off <= 1e-12)
    return run.report({
        "polynomial": bhk.format_polynomial(E),
        "weights": list(ws.w),
        "degree": ws.d,
        "calabi_yau": bhk.is_calabi_yau(ws),
        "level": slc.level,
        "empty_slice": slc.is_empty(),
        "samples_on_slice": on_slice,
        "sample_count": len(etas),
        "samples": np.round(etas, 15),
        "moment_map_max": max(mm),
        "invariance_max": max(inv),
        "isotropy_max": max(iso),
        "legendre_roundtrip_max": max(leg),
        "fiber_dims_histogram": dict(sorted(dims.items())),
        "mirror_weights": list(bhk.weights(bhk.transpose_mirror(E)).w),
    })


def cmd_kvn(args) -> dict:
    run = _Run("kvn", args)
    psi = kvn.WaveFunction.load(args.wavefunction)
    with open(args.params, encoding="utf-8") as fh:
        params = kvn.LGParams.from_json(json.load(fh))
    if args.family:
        with open(args.family, encoding="utf-8") as fh:
            fam = expfam.ExponentialFamily.from_json(json.load(fh))
    else:
        fam = expfam.categorical(psi.values.size)
    unit = kvn.normalize(psi)
    norm_err = abs(float(np.sum(kvn.density_of(unit)) * unit.cell_volume) - 1.0)
    theta = kvn.project_pi(psi, fam)
    alpha = float(run.rng.uniform(0, 2 * np.pi))
    theta_rot = kvn.project_pi(kvn.phase_fiber(psi, alpha), fam)
    phase_err = float(np.max(np.abs(theta - theta_rot))) if theta.size else 0.0
    residual = kvn.lg_equation_residual(psi, params)
    res_max = float(np.max(np.abs(residual)))
    run.check("normalization", norm_err)
    run.check("phase_invariance", phase_err)
    run.check("lg_residual", res_max)
    return run.report({
        "cells": int(psi.values.size),
        "cell_volume": psi.cell_volume,
        "mass": float(np.sum(kvn.density_of(psi)) * psi.cell_volume),
        "normalization_error": norm_err,
        "theta": theta,
        "phase_alpha": alpha,
        "phase_invariance": phase_err,
        "free_energy": kvn.lg_free_energy(psi, params),
        "lg_residual_max": res_max,
    })


def cmd_cone_check(args) -> dict:
    run = _Run("cone-check", args)
    n, field = args.n, args.field
    pot = cones.logdet_potential(n, field, closed_form=False)
    kappa = cones.ma_constant(n, field)
    power = n + 1 if field == "real" else 2 * n
    ratios, metric_fd, geo, trace_inv = [], [], [], []
    for _ in range(args.samples):
        X = cones.random_cone_point(run.rng, n, field)
        det_hess, _ = cones.cone_ma_check(X, field)
        ratios.append(det_hess * float(np.real(np.linalg.det(X))) ** power)
        x = cones.to_coords(X, field)
        basis = cones.coordinate_basis(n, field)
        g = np.array([[cones.cone_metric(X, a, b) for b in basis] for a in basis])
        metric_fd.append(_rel(hessian_metric(pot, x, method="fd"), g))
        Y, Z = (cones.random_cone_point(run.rng, n, field) - np.eye(n) for _ in range(2))
        trace_inv.append(abs(cones.trace_form(cones.jordan_product(X, Y), Z)
                             - cones.trace_form(X, cones.jordan_product(Y, Z))))
    for _ in range(args.geodesics):
        X = cones.random_cone_point(run.rng, n, field)
        V = cones.random_cone_point(run.rng, n, field) - np.eye(n)
        geo.append(float(np.max(np.abs(cones.geodesic(X, V, 1.0)
                                       - cones.geodesic_by_integration(X, V, 1.0)))))
    r = np.array(ratios)
    spread = float((r.max() - r.min()) / r.mean())
    cartan = cones.cartan_frobenius_check(max(n, 2), samples=args.samples,
                                          seed=int(run.rng.integers(2 ** 63)))
    curvature = cones.cartan_torus_curvature(max(n, 3))
    run.check("ma_spread", spread)
    run.check("metric_fd", max(metric_fd))
    if geo:
        run.check("geodesic", max(geo))
    run.check("cartan", cartan["max_residual"])
    run.check("trace_invariance", max(trace_inv))
    run.check("curvature", curvature)
    return run.report({
        "n": n,
        "field": field,
        "samples": args.samples,
        "kappa": float(np.round(r.mean(), 6)),
        "kappa_expected": kappa,
        "ma_ratio_spread": spread,
        "metric_fd_rel_max": max(metric_fd),
        "geodesic_max": max(geo) if geo else None,
        "trace_invariance_max": max(trace_inv),
        "cartan": cartan,
        "cartan_curvature_max": curvature,
    })


def _tolerance(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"run seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", type=_tolerance, action="append", default=[],
                        metavar="NAME=VALUE", help="override a check tolerance")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="hessfrob", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gema-check", parents=[common], help="Monge-Ampere / pre-Frobenius residuals")
    p.add_argument("potential", help="quadratic | simplex-entropy | softmax | logdet-<n>")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_gema_check)

    p = sub.add_parser("expfam-check", parents=[common], help="categorical family and Legendre duality")
    p.add_argument("--dim", type=int, default=2, help="simplex dimension N")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--resolution", type=int, default=12, help="quadrature grid resolution")
    p.set_defaults(func=cmd_expfam_check)

    p = sub.add_parser("bhk", parents=[common], help="weights, atoms, mirror and symmetry group")
    p.add_argument("polynomial", nargs="?")
    p.add_argument("--matrix", help="exponent matrix as a JSON array of arrays")
    p.set_defaults(func=cmd_bhk)

    p = sub.add_parser("syz", parents=[common], help="moment map and torus-fiber diagnostics")
    p.add_argument("polynomial", nargs="?")
    p.add_argument("--matrix", help="exponent matrix as a JSON array of arrays")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--level", help="slice level (default 1/d), e.g. 1 or 1/5")
    p.add_argument("--pairs", type=int, default=20, help="random tangent pairs per sample")
    p.add_argument("--starts", type=int, default=8, help="Newton starts per fiber")
    p.set_defaults(func=cmd_syz)

    p = sub.add_parser("kvn", parents=[common], help="wave-function projection and LG functionals")
    p.add_argument("wavefunction", help="JSON or CSV wave function")
    p.add_argument("params", help="JSON Landau-Ginzburg parameters")
    p.add_argument("--family", help="JSON exponential family on the grid (default categorical)")
    p.set_defaults(func=cmd_kvn)

    p = sub.add_parser("cone-check", parents=[common], help="positive-definite cone toy model")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--field", choices=("real", "complex"), default="real")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--geodesics", type=int, default=5)
    p.set_defaults(func=cmd_cone_check)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
        code = 0 if report["passed"] else 1
    except (HessfrobError, ValueError, OSError) as exc:
        report = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "seed": args.seed,
            "error": {"type": type(exc).__name__, "message": str(exc)},
            "passed": False,
        }
        code = 2
    _emit(dumps(report) if args.format == "json" else _text(report), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
