"""Command-line interface.

One executable, subcommand per operation.  Every output embeds a run
manifest (subcommand, input hash, resolved numeric parameters, package
version, compute backend) so a result file documents how to reproduce
it; with --workers 1 and a fixed seed, reruns are bit-identical.

Output conventions: JSON for structured reports, CSV for grids, both
UTF-8 with LF line endings.  CSV cells use 17 significant digits and
the manifest rides in a leading "# manifest: {...}" comment.  Complex
values appear as [re, im] pairs.

Exit codes: 0 success, 1 validation or usage error, 2 numerical
failure, 3 refused classification.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import aomoto as aomoto_mod
from . import anderson as anderson_mod
from . import floquet as floquet_mod
from . import graph as graph_mod
from . import lifts as lifts_mod
from . import spectral as spectral_mod
from . import __version__
from .backend import BACKEND
from .errors import (
    ConvergenceError,
    GraphValidationError,
    NumericalError,
    RefusedClassificationError,
)
from .selfconsistent import SolverConfig, solve_m


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for numerical
    # failure here, so remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._fail(message))

    def _fail(self, message):
        print(f"error: {message}", file=sys.stderr)
        return 1


# flags whose values may start with '-' (comma-joined numbers); argparse
# would read those as option strings, so glue them into --flag=value
_NUMERIC_VALUE_FLAGS = {"--range", "--z", "--eps", "--at", "--lambda"}


def _merge_negative_values(argv):
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok in _NUMERIC_VALUE_FLAGS
            and i + 1 < len(argv)
            and argv[i + 1].startswith("-")
            and len(argv[i + 1]) > 1
            and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise GraphValidationError(f"expected RE,IM complex value, got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise GraphValidationError(f"malformed complex value {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise GraphValidationError(f"malformed number list {text!r}") from exc


def _jsonable(x):
    """Recursively convert numerics for JSON; complex becomes [re, im]."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        c = complex(x)
        return [c.real, c.imag]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


@dataclass
class RunManifest:
    subcommand: str
    graph_sha256: str | None
    params: dict = field(default_factory=dict)
    version: str = __version__
    backend: str = BACKEND

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "graph_sha256": self.graph_sha256,
            "params": _jsonable(self.params),
            "version": self.version,
            "backend": self.backend,
        }


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, manifest: RunManifest, out_path) -> None:
    doc = {"manifest": manifest.to_dict()}
    doc.update(_jsonable(payload))
    _emit(json.dumps(doc, indent=2) + "\n", out_path)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _emit_csv(header, rows, manifest: RunManifest, out_path, extra_comments=()):
    lines = ["# manifest: " + json.dumps(manifest.to_dict())]
    lines.extend(f"# {c}" for c in extra_comments)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _emit("\n".join(lines) + "\n", out_path)


def read_csv(path):
    """Read a CSV emitted by this tool: (manifest dict or None, header, columns)."""
    manifest = None
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("manifest:"):
                    manifest = json.loads(body[len("manifest:"):])
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(s) for s in line.split(",")])
    if header is None:
        raise GraphValidationError(f"{path}: no CSV header found")
    cols = np.asarray(rows, dtype=np.float64)
    cols = cols.reshape(-1, len(header)).T if rows else np.empty((len(header), 0))
    return manifest, header, {name: cols[i] for i, name in enumerate(header)}


def _load(args):
    if not args.graph:
        raise GraphValidationError("--graph is required for this subcommand")
    g, params = graph_mod.load_graph(args.graph)
    graph_mod.validate_or_raise(g, params)
    return g, params


def _solver_cfg(args, default_tol=1e-12) -> SolverConfig:
    tol = args.tol if args.tol is not None else default_tol
    kw = {"tolerance": tol}
    if getattr(args, "max_iter", None) is not None:
        kw["max_iterations"] = args.max_iter
    return SolverConfig(**kw)


def _dos_from_args(g, params, args, manifest):
    kwargs = {"workers": args.workers}
    if args.range:
        lo, hi = _parse_float_list(args.range)
        kwargs["e_range"] = (lo, hi)
    if args.points:
        kwargs["n_points"] = args.points
    if args.eps:
        kwargs["eps_ladder"] = _parse_float_list(args.eps)
    if args.tol is not None:
        kwargs["cfg"] = SolverConfig(tolerance=args.tol, damping=0.5)
    dos = spectral_mod.dos_grid(g, params, **kwargs)
    manifest.params.update(
        {
            "e_range": [dos.energies[0], dos.energies[-1]],
            "n_points": int(dos.energies.shape[0]),
            "eps_ladder": list(dos.eps_ladder),
            "workers": args.workers,
        }
    )
    return dos


def _gap_dict(gap):
    return {
        "left": gap.left,
        "right": gap.right,
        "k": gap.k,
        "label": gap.label,
        "residual": gap.residual,
        "suspect": gap.suspect,
    }


def _atom_dict(atom):
    return {
        "lambda": atom.lam,
        "mass": atom.mass,
        "vertex_weights": atom.weights,
        "fit_residual": atom.fit_residual,
    }


def _cmd_validate(args, manifest):
    if not args.graph:
        raise GraphValidationError("--graph is required for this subcommand")
    g, params = graph_mod.load_graph(args.graph)
    violations = graph_mod.validate(g, params)
    payload = {
        "valid": not violations,
        "violations": violations,
        "vertices": g.num_vertices,
        "edge_pairs": g.num_pairs,
    }
    _emit_json(payload, manifest, args.out)
    return 0 if not violations else 1


def _cmd_solve(args, manifest):
    g, params = _load(args)
    z = _parse_complex(args.z)
    cfg = _solver_cfg(args)
    manifest.params.update({"z": z, "tolerance": cfg.tolerance,
                           "max_iterations": cfg.max_iterations})
    sol = solve_m(g, params, z, cfg)
    payload = {
        "z": z,
        "m": sol.m,
        "G": sol.G,
        "Q": sol.Q,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "q_discrepancy": sol.q_discrepancy,
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_floquet_check(args, manifest):
    g, params = _load(args)
    z = _parse_complex(args.z)
    cfg = _solver_cfg(args)
    manifest.params.update({"z": z, "tolerance": cfg.tolerance})
    sol = solve_m(g, params, z, cfg)
    prod = floquet_mod.phi_product(sol)
    dos = _dos_from_args(g, params, args, manifest)
    integ = floquet_mod.phi_integral(dos, z)
    deriv = floquet_mod.log_derivative_check(g, params, z, cfg=cfg)
    payload = {
        "z": z,
        "phi_product": prod.phi,
        "phi_integral": integ.phi,
        "ratio_minus_one": prod.phi / integ.phi - 1.0,
        "derivative_residual_phi": deriv.phi_residual,
        "derivative_residual_edge_vertex": deriv.edge_vertex_residual,
        "derivative_step": deriv.h,
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_ids(args, manifest):
    g, params = _load(args)
    E0 = args.at
    cfg = SolverConfig(tolerance=args.tol, damping=0.5) if args.tol is not None else None
    manifest.params.update({"at": E0})
    k = floquet_mod.ids_via_arg(g, params, E0, cfg)
    p = g.num_vertices
    payload = {
        "at": E0,
        "k": k,
        "label": int(round(p * k)),
        "label_residual": abs(p * k - round(p * k)),
        "period": p,
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_dos(args, manifest):
    g, params = _load(args)
    dos = _dos_from_args(g, params, args, manifest)
    rows = np.column_stack([dos.energies, dos.density, dos.ids])
    extra = []
    for atom in dos.atoms:
        extra.append(
            "atom: " + json.dumps(_jsonable(_atom_dict(atom)))
        )
    extra.append(f"support: [{_fmt(dos.support[0])}, {_fmt(dos.support[1])}]")
    extra.append(f"mass_total: {_fmt(dos.mass_total)}")
    _emit_csv(("energy", "density", "ids"), rows, manifest, args.out, extra)
    return 0


def _cmd_gaps(args, manifest):
    g, params = _load(args)
    dos = _dos_from_args(g, params, args, manifest)
    payload = {
        "support": list(dos.support),
        "mass_total": dos.mass_total,
        "gaps": [_gap_dict(gp) for gp in dos.gaps],
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_atoms(args, manifest):
    g, params = _load(args)
    dos = _dos_from_args(g, params, args, manifest)
    payload = {
        "support": list(dos.support),
        "mass_total": dos.mass_total,
        "atoms": [_atom_dict(a) for a in dos.atoms],
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_aomoto(args, manifest):
    g, params = _load(args)
    lam = getattr(args, "lambda")
    if lam is None:
        raise GraphValidationError("--lambda is required for the aomoto subcommand")
    manifest.params.update({"lambda": lam})
    report = aomoto_mod.classify_sets(g, params, lam)
    payload = {
        "lambda": lam,
        "status": report.status,
        "X1": report.X1,
        "boundary_X1": report.boundary_X1,
        "X0": report.X0,
        "E_lambda": report.E_lambda,
        "index": report.index,
        "dk_mass": report.dk_mass,
        "vertex_weights": report.vertex_weights,
        "cc_X1": report.cc_X1,
        "cc_cross_check": aomoto_mod.cc_cross_check(report),
        "atom": _atom_dict(report.atom) if report.atom is not None else None,
    }
    try:
        orders = aomoto_mod.local_orders(g, params, lam, report=report)
        payload["local_orders"] = {
            "G": orders.g_orders,
            "m": orders.m_orders,
            "Q": orders.q_orders,
            "phi_order": orders.phi_order,
            "phi_slope": orders.phi_slope,
        }
    except (ConvergenceError, NumericalError) as exc:
        payload["local_orders"] = None
        payload["local_orders_note"] = f"order fits unavailable: {exc}"
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_lift(args, manifest):
    g, params = _load(args)
    if args.n is None:
        raise GraphValidationError("--n is required for the lift subcommand")
    seed = args.seed if args.seed is not None else 0
    manifest.params.update({"n": args.n, "seed": seed})
    lift = lifts_mod.random_lift(g, params, args.n, seed)
    eigs = lifts_mod.eigenvalues(lift)
    extra = [f"size: {lift.size}"]
    lam = getattr(args, "lambda")
    if lam is not None:
        manifest.params["lambda"] = lam
        dim = lifts_mod.kernel_dimension(lift, lam)
        extra.append(f"kernel_dimension: {dim}")
    _emit_csv(("eigenvalue",), [(x,) for x in eigs], manifest, args.out, extra)
    return 0


def _cmd_lift_ks(args, manifest):
    g, params = _load(args)
    if args.n is None or not args.dos:
        raise GraphValidationError("lift-ks requires --n and --dos")
    seed = args.seed if args.seed is not None else 0
    manifest.params.update({"n": args.n, "seed": seed, "dos_file": args.dos})
    _, header, cols = read_csv(args.dos)
    if "energy" not in cols or "ids" not in cols:
        raise GraphValidationError(f"{args.dos}: need energy and ids columns")

    class _Interp:
        energies = cols["energy"]
        ids = cols["ids"]

    lift = lifts_mod.random_lift(g, params, args.n, seed)
    eigs = lifts_mod.eigenvalues(lift)
    ks = lifts_mod.empirical_ids_distance(eigs, _Interp)
    payload = {
        "n": args.n,
        "seed": seed,
        "size": lift.size,
        "ks_distance": ks,
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _anderson_cfg(args) -> anderson_mod.AndersonConfig:
    if args.d is None:
        raise GraphValidationError("--d is required")
    try:
        b_dist = anderson_mod.parse_distribution(args.b or "const,0")
        a_dist = anderson_mod.parse_distribution(args.a or "const,1")
        cfg = anderson_mod.AndersonConfig(
            d=args.d,
            b_dist=b_dist,
            a_dist=a_dist,
            pool_size=args.pool,
            sweeps=args.sweeps,
            seed=args.seed if args.seed is not None else 0,
        )
        anderson_mod.validate_config(cfg)
        return cfg
    except ValueError as exc:
        raise GraphValidationError(str(exc)) from exc


def _anderson_manifest(manifest, cfg, z):
    manifest.params.update(
        {
            "d": cfg.d,
            "b_dist": [cfg.b_dist.kind, *cfg.b_dist.params],
            "a_dist": [cfg.a_dist.kind, *cfg.a_dist.params],
            "pool_size": cfg.pool_size,
            "sweeps": cfg.sweeps,
            "seed": cfg.seed,
            "z": z,
        }
    )


def _cmd_anderson(args, manifest):
    cfg = _anderson_cfg(args)
    z = _parse_complex(args.z)
    _anderson_manifest(manifest, cfg, z)
    est = anderson_mod.estimate_half_thouless(cfg, z)
    payload = {
        "z": z,
        "F": est.F,
        "stderr": est.stderr,
        "E_logG": est.E_logG,
        "E_logm": est.E_logm,
        "E_G": est.E_G,
        "diagnostics": {
            "stderr_logG": est.stderr_logG,
            "stderr_logm": est.stderr_logm,
            "stderr_G": est.stderr_G,
            "stationary": est.stationary,
        },
    }
    _emit_json(payload, manifest, args.out)
    return 0


def _cmd_anderson_check(args, manifest):
    cfg = _anderson_cfg(args)
    z = _parse_complex(args.z)
    h = args.h
    _anderson_manifest(manifest, cfg, z)
    manifest.params["h"] = h
    report = anderson_mod.derivative_identity_check(cfg, z, h)
    payload = {
        "z": z,
        "h": h,
        "derivative": report.lhs,
        "minus_E_G": report.rhs,
        "difference": report.difference,
        "stderr": report.stderr,
        "curvature_bound": report.curvature_bound,
        "threshold": report.threshold,
        "passed": report.passed,
    }
    _emit_json(payload, manifest, args.out)
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "floquet-check": _cmd_floquet_check,
    "ids": _cmd_ids,
    "dos": _cmd_dos,
    "gaps": _cmd_gaps,
    "atoms": _cmd_atoms,
    "aomoto": _cmd_aomoto,
    "lift": _cmd_lift,
    "lift-ks": _cmd_lift_ks,
    "anderson": _cmd_anderson,
    "anderson-check": _cmd_anderson_check,
}


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph JSON file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--workers", type=int, default=1,
                        help="grid evaluation threads; 1 is bit-deterministic")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--tol", type=float, help="solver tolerance override")

    parser = _Parser(prog="treejacobi", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    sub.add_parser("validate", parents=[common],
                   help="check a graph file and report violations")

    sp = sub.add_parser("solve", parents=[common],
                        help="solve the m-function system at one z")
    sp.add_argument("--z", required=True, help="evaluation point RE,IM")
    sp.add_argument("--max-iter", type=int, dest="max_iter")

    sp = sub.add_parser("floquet-check", parents=[common],
                        help="compare the two Floquet evaluations at z")
    sp.add_argument("--z", required=True)
    sp.add_argument("--range")
    sp.add_argument("--points", type=int)
    sp.add_argument("--eps")

    sp = sub.add_parser("ids", parents=[common],
                        help="integrated density of states at a gap energy")
    sp.add_argument("--at", type=float, required=True)

    for name, help_text in (
        ("dos", "density of states grid as CSV"),
        ("gaps", "detected gaps with labels as JSON"),
        ("atoms", "point masses as JSON"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("--range", help="A,B energy window")
        sp.add_argument("--points", type=int)
        sp.add_argument("--eps", help="comma-separated regularization ladder")

    sp = sub.add_parser("aomoto", parents=[common],
                        help="eigenvalue support classification at lambda")
    sp.add_argument("--lambda", type=float, dest="lambda")

    sp = sub.add_parser("lift", parents=[common],
                        help="random n-lift spectrum as CSV")
    sp.add_argument("--n", type=int)
    sp.add_argument("--lambda", type=float, dest="lambda")

    sp = sub.add_parser("lift-ks", parents=[common],
                        help="KS distance of a lift spectrum to a DOS CSV")
    sp.add_argument("--n", type=int)
    sp.add_argument("--dos", help="DOS CSV produced by the dos subcommand")

    for name, help_text in (
        ("anderson", "half-Thouless estimate by population dynamics"),
        ("anderson-check", "derivative identity check for the estimate"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("--d", type=int, help="tree degree")
        sp.add_argument("--b", help="potential distribution descriptor")
        sp.add_argument("--a", help="coupling distribution descriptor")
        sp.add_argument("--z", required=True)
        sp.add_argument("--pool", type=int, default=10_000)
        sp.add_argument("--sweeps", type=int, default=200)
        if name == "anderson-check":
            sp.add_argument("--h", type=float, default=1e-3)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_negative_values(argv))
    except SystemExit as exc:
        # argparse help/usage paths; 0 stays 0, usage errors were remapped
        return int(exc.code or 0)
    try:
        sha = _file_sha256(args.graph) if getattr(args, "graph", None) else None
    except OSError as exc:
        print(f"error: cannot read graph file: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(subcommand=args.subcommand, graph_sha256=sha)
    if args.tol is not None:
        manifest.params["tolerance"] = args.tol
    try:
        return _COMMANDS[args.subcommand](args, manifest)
    except GraphValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except RefusedClassificationError as exc:
        print(f"refused classification: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
