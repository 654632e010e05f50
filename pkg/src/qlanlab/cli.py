"""Command-line entry point: CSV reproductions of the bound sweeps and the asymptotic diagnostics.

Exit codes: 0 success, 1 usage error, 2 model error, 3 numerical failure.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics, bounds, gaussian, geometry, herm, lattice, states

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3

FIG_SWEEP = tuple(round(0.01 * k, 2) for k in range(100))
DEFAULT_N_SCHEDULE = (10**2, 10**3, 10**4, 10**5, 10**6)


class UsageError(Exception):
    pass


MODEL_ERRORS = (geometry.ModelError, states.StateError, herm.HermiticityError)
NUMERIC_ERRORS = (bounds.BoundError, herm.DomainError, herm.EigenError, herm.ResourceError,
                  gaussian.GaussianError, asymptotics.CenteringError,
                  lattice.PovmIntegrityError, np.linalg.LinAlgError)


@dataclass
class RunConfig:
    """Settings shared by every subcommand."""

    seed: int = 0
    memory_cap_dim: int = herm.DEFAULT_MEMCAP_DIM
    restarts: int = bounds.RESTARTS
    tolerances: dict = field(default_factory=lambda: {
        "objective_atol": bounds.OBJ_ATOL,
        "agreement_rtol": bounds.AGREE_RTOL,
        "independence_rtol": geometry.INDEP_RTOL,
        "trace_tol": states.TRACE_TOL,
    })

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.restarts < 0:
            raise UsageError("restarts must be non-negative")


def fmt(x):
    return "%.12g" % x


def write_csv(rows, header, out=None):
    """Write rows with a header, 12 significant digits and LF endings."""
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return str(bool(v)).lower()
        if isinstance(v, (float, np.floating)):
            return fmt(float(v))
        return str(v)

    if out is None:
        stream = sys.stdout
    else:
        stream = open(out, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([cell(v) for v in row])
    finally:
        if out is not None:
            stream.close()


def _complex_matrix(obj, name):
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise geometry.ModelError(f"{name} must be a matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_model_file(path):
    """Parse a JSON affine model file; returns ``(model, theta0)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise geometry.ModelError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise geometry.ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    if doc.get("type") != "affine":
        raise geometry.ModelError(f"unsupported model type {doc.get('type')!r}")
    try:
        rho0 = _complex_matrix(doc["rho0"], "rho0")
        gens = [_complex_matrix(g, "generator") for g in doc["generators"]]
        theta0 = np.asarray(doc.get("theta0", np.zeros(len(gens))), dtype=float)
        dim, d = int(doc["dim"]), int(doc["d"])
    except KeyError as exc:
        raise geometry.ModelError(f"model file is missing field {exc}") from exc
    if rho0.shape != (dim, dim) or len(gens) != d:
        raise geometry.ModelError("dim/d do not match rho0 and generators")
    model = geometry.affine(rho0, gens, theta0)
    return model, theta0


def resolve_model(args):
    """Builtin name or model-file path, plus the reference point ``theta0``."""
    name = args.model
    if name in geometry.BUILTINS:
        model = geometry.qubit2d(args.z0) if name == "qubit2d" else geometry.BUILTINS[name]()
        theta0 = None
    else:
        model, theta0 = load_model_file(name)
    if args.theta0 is not None:
        theta0 = parse_vector(args.theta0)
    if theta0 is None:
        theta0 = default_theta0(model)
    if theta0.shape != (model.d,):
        raise UsageError(f"--theta0 needs {model.d} components")
    return model, theta0


def default_theta0(model):
    if model.kind == "qubit3d":
        return np.array([0.0, 0.0, 0.5])
    if model.kind == "qubit2d":
        return np.array([0.0, 0.5])
    return np.zeros(model.d)


def parse_vector(text):
    try:
        return np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad vector {text!r}") from exc


def parse_ints(text):
    try:
        return [int(float(s)) for s in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def resolve_weight(args, geo):
    if args.weight == "sld":
        return geo.J_S
    if args.weight == "identity":
        return np.eye(geo.d)
    if not args.weight_file:
        raise UsageError("--weight file requires --weight-file PATH")
    try:
        G = np.atleast_2d(np.loadtxt(args.weight_file, delimiter=None))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read weight file: {exc}") from exc
    if G.shape != (geo.d, geo.d):
        raise UsageError(f"weight matrix must be {geo.d}x{geo.d}")
    return G


def _bound_row(model, theta0, G_kind, run, closed=None):
    geo = geometry.geometry(model, theta0)
    G = geo.J_S if G_kind == "sld" else G_kind
    b = bounds.holevo_bound(geo.Sigma, geo.tau, G, restarts=run.restarts, seed=run.seed)
    hgm = bounds.hgm_nagaoka_bound(geo.J_S, G)
    return b.value, hgm, closed(geo, G) if closed else "", b.converged


def cmd_bounds(args, run):
    header = ["r", "holevo", "hgm_nagaoka", "holevo_closed", "converged"]
    rows = []
    if args.figure1_left:
        model = geometry.qubit3d()
        for r in FIG_SWEEP:
            vals = _bound_row(model, np.array([0.0, 0.0, r]), "sld", run,
                              lambda geo, G: bounds.holevo_closed_dinv(geo.J, G))
            rows.append((r, *vals))
    elif args.figure1_right:
        model = geometry.qubit2d(args.z0)
        for r in FIG_SWEEP:
            vals = _bound_row(model, np.array([0.0, r]), "sld", run,
                              lambda geo, G, r=r: bounds.qubit2d_holevo_closed(r, args.z0))
            rows.append((r, *vals))
    else:
        model, theta0 = resolve_model(args)
        geo = geometry.geometry(model, theta0)
        G = resolve_weight(args, geo)
        b = bounds.holevo_bound(geo.Sigma, geo.tau, G, restarts=run.restarts, seed=run.seed)
        hgm = bounds.hgm_nagaoka_bound(geo.J_S, G)
        closed = bounds.holevo_closed_dinv(geo.J, G) if geo.r == geo.d else ""
        header[0] = "theta0"
        rows.append((" ".join(fmt(t) for t in theta0), b.value, hgm, closed, b.converged))
    rows.sort(key=lambda row: row[0])
    write_csv(rows, header, args.out)


def cmd_geometry(args, run):
    model, theta0 = resolve_model(args)
    geo = geometry.geometry(model, theta0)
    rows = []
    for name, mat in (("J", geo.J), ("J_S", geo.J_S), ("Sigma", geo.Sigma), ("tau", geo.tau)):
        mat = np.asarray(mat, dtype=complex)
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                rows.append((name, i + 1, j + 1, float(mat[i, j].real), float(mat[i, j].imag)))
    write_csv(rows, ["matrix", "i", "j", "re", "im"], args.out)


def _schedule(args):
    return parse_ints(args.n) if args.n else list(DEFAULT_N_SCHEDULE)


def cmd_clt(args, run):
    model, theta0 = resolve_model(args)
    rho = geometry.eval_model(model, theta0)
    A = geometry.sld(model, theta0)
    rows = asymptotics.clt_convergence_report(rho, A, n_schedule=_schedule(args))
    write_csv(rows, ["n", "sup_error"], args.out)


def cmd_qlan(args, run):
    model, theta0 = resolve_model(args)
    h = parse_vector(args.h) if args.h else np.eye(model.d)[0]
    if h.shape != (model.d,):
        raise UsageError(f"--h needs {model.d} components")
    rows = asymptotics.qlan_report(model, theta0, h, _schedule(args))
    write_csv(rows, ["n", "p_norm", "sqrtn_trace"], args.out)


def cmd_povm(args, run):
    cfg = lattice.LatticeConfig.parse(args.lattice) if args.lattice else lattice.LatticeConfig()
    rows = []
    if args.demo:
        # one-dimensional lattice POVMs of sigma_1 over a range of lattice densities
        for m in (1, 2, 4, 8, 16, 32):
            c = lattice.LatticeConfig(m, cfg.ell, cfg.q, cfg.p)
            povm = lattice.lattice_povm([herm.SX], c)
            rows.append((m, 2, len(povm.omegas), povm.completeness_residual(),
                         povm.min_eigenvalue(), "", ""))
        header = ["m", "dim", "outcomes", "completeness_residual", "min_eigenvalue",
                  "weighted_trace", "target"]
        write_csv(rows, header, args.out)
        return
    model, theta0 = resolve_model(args)
    geo = geometry.geometry(model, theta0)
    G = resolve_weight(args, geo)
    h = parse_vector(args.h) if args.h else np.zeros(model.d)
    for n in (parse_ints(args.n) if args.n else [1]):
        res = lattice.achievability_pipeline(model, theta0, G, h, n, cfg, restarts=run.restarts,
                                             seed=run.seed, cap=run.memory_cap_dim)
        rows.append((n, res.dim, len(res.povm.omegas), res.povm.completeness_residual(),
                     res.povm.min_eigenvalue(), res.stats.weighted_trace, res.target))
    header = ["n", "dim", "outcomes", "completeness_residual", "min_eigenvalue",
              "weighted_trace", "target"]
    write_csv(rows, header, args.out)


def cmd_gausslimit(args, run):
    cfg = lattice.LatticeConfig.parse(args.lattice) if args.lattice else lattice.LatticeConfig()
    model, theta0 = resolve_model(args)
    geo = geometry.geometry(model, theta0)
    G = resolve_weight(args, geo)
    b = bounds.holevo_bound(geo.Sigma, geo.tau, G, restarts=run.restarts, seed=run.seed)
    if args.h:
        hs = [parse_vector(args.h)]
    else:
        hs = [np.zeros(model.d), np.eye(model.d)[0], np.ones(model.d)]
    rows = []
    for h in hs:
        s = lattice.classical_limit_sim(b.V, h, cfg, args.samples, seed=run.seed, weight=G)
        rows.append((" ".join(fmt(x) for x in h), float(np.max(np.abs(s.mean - h))),
                     lattice.covariance_deviation(s.cov, b.V), s.weighted_trace, b.value))
    write_csv(rows, ["h", "bias_max", "cov_deviation", "weighted_trace", "target"], args.out)


COMMANDS = {"bounds": cmd_bounds, "geometry": cmd_geometry, "clt": cmd_clt, "qlan": cmd_qlan,
            "povm": cmd_povm, "gausslimit": cmd_gausslimit}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="qubit3d",
                        help="builtin model (qubit3d, qubit2d, qubit_pure) or JSON model file")
    common.add_argument("--theta0", help="comma-separated reference point")
    common.add_argument("--z0", type=float, default=0.25, help="z0 of the qubit2d family")
    common.add_argument("--weight", choices=("sld", "identity", "file"), default="sld")
    common.add_argument("--weight-file", help="whitespace-separated weight matrix")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=bounds.RESTARTS)
    common.add_argument("--out", help="output CSV path (default: stdout)")

    parser = _Parser(prog="qlanlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", parents=[common], help="Holevo and HGM/Nagaoka bounds")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--figure1-left", action="store_true", help="qubit3d sweep over r")
    grp.add_argument("--figure1-right", action="store_true", help="qubit2d sweep over r")

    sub.add_parser("geometry", parents=[common], help="J, Sigma and tau at theta0")

    p = sub.add_parser("clt", parents=[common], help="quantum CLT error of the SLDs")
    p.add_argument("--n", help="comma-separated sample sizes")

    p = sub.add_parser("qlan", parents=[common], help="QLAN remainder diagnostics")
    p.add_argument("--n", help="comma-separated sample sizes")
    p.add_argument("--h", help="comma-separated local parameter")

    p = sub.add_parser("povm", parents=[common], help="lattice POVM checks")
    p.add_argument("--n", help="comma-separated numbers of copies")
    p.add_argument("--h", help="comma-separated local parameter")
    p.add_argument("--lattice", help="m,ell,q,p")
    p.add_argument("--demo", action="store_true", help="one-parameter sigma_1 lattices only")

    p = sub.add_parser("gausslimit", parents=[common], help="classical limit of the estimator")
    p.add_argument("--lattice", help="m,ell,q,p")
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--h", help="comma-separated local parameter")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = RunConfig(seed=args.seed, memory_cap_dim=herm.memcap_dim(), restarts=args.restarts)
        COMMANDS[args.command](args, run)
    except (UsageError, ValueError) as exc:
        if isinstance(exc, MODEL_ERRORS):
            print(f"model error: {exc}", file=sys.stderr)
            return EXIT_MODEL
        if isinstance(exc, NUMERIC_ERRORS):
            print(f"numerical error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
