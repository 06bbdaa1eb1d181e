"""Command-line front end: ``exkit {certify, approximate, dicke, groundstate, selfcheck}``.

Matrices travel as line-delimited JSON objects::

    {"format": "exkit-matrix/1", "local_dim": 2, "sites": 2, "role": "state",
     "entries": [[[re, im], ...], ...]}

one object per line, entries row-major. Floats are written with ``repr``
precision, so a matrix written by the tool parses back bit-exactly.

Exit codes: 0 success / exchangeable, 1 self-check failure, 2 input error,
3 not exchangeable, 4 boundary.
"""

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from exkit import dicke as dk
from exkit.definetti_maps import m_inverse, m_map, v_inverse, v_map
from exkit.exchange_cert import BOUNDARY, EXCHANGEABLE, certify_exchangeable
from exkit.finite_size import exchangeable_approximant, n_extendability_necessary
from exkit.hermitian_core import (
    as_flip_invariant,
    as_hermitian,
    random_flip_invariant,
    random_hermitian,
)
from exkit.meanfield import (
    PairInteraction,
    bcs_interaction,
    bloch_grid_max,
    check_multiplicativity,
    e0,
    exact_ground_energy,
    is_positive_definite,
)

FORMAT = "exkit-matrix/1"
DICKE_FORMAT = "exkit-dicke/1"

EXIT_OK = 0
EXIT_SELFCHECK_FAIL = 1
EXIT_INPUT = 2
EXIT_NOT_EXCHANGEABLE = 3
EXIT_BOUNDARY = 4



def _warn(msg):
    print(f"exkit: warning: {msg}", file=sys.stderr)


class InputError(Exception):
    """Malformed or invalid input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# matrix files


def matrix_to_obj(M, role, local_dim, sites, **extra):
    M = np.asarray(M, dtype=complex)
    entries = [[[float(z.real), float(z.imag)] for z in row] for row in M]
    obj = {"format": FORMAT, "local_dim": int(local_dim), "sites": int(sites), "role": role}
    obj.update(extra)
    obj["entries"] = entries
    return obj


def obj_to_matrix(obj, where="input"):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected a JSON object")
    if obj.get("format") != FORMAT:
        raise InputError(f"{where}: field 'format' must be {FORMAT!r}, got {obj.get('format')!r}")
    try:
        d = int(obj["local_dim"])
        sites = int(obj["sites"])
        entries = obj["entries"]
    except KeyError as e:
        raise InputError(f"{where}: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError):
        raise InputError(f"{where}: 'local_dim' and 'sites' must be integers") from None
    if d < 1 or sites < 1:
        raise InputError(f"{where}: 'local_dim' and 'sites' must be positive")
    n = d**sites
    if not isinstance(entries, list) or len(entries) != n:
        raise InputError(f"{where}: field 'entries' must have {n} rows for d={d}, sites={sites}")
    M = np.empty((n, n), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != n:
            raise InputError(f"{where}: entries row {i} must have {n} [re, im] pairs")
        for j, z in enumerate(row):
            if not (isinstance(z, list) and len(z) == 2 and all(_is_number(x) for x in z)):
                raise InputError(f"{where}: entries[{i}][{j}] must be a [re, im] pair of numbers")
            M[i, j] = complex(z[0], z[1])
    return M


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def dumps_matrix(M, role, local_dim, sites, **extra):
    return json.dumps(matrix_to_obj(M, role, local_dim, sites, **extra))


def read_objects(path):
    """Parse a line-delimited JSON file into ``[(line_number, obj)]``."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    out = []
    for k, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append((k, json.loads(line)))
        except json.JSONDecodeError as e:
            raise InputError(f"{path}:{k}: invalid JSON ({e.msg} at column {e.colno})") from None
    if not out:
        raise InputError(f"{path}: no JSON objects found")
    return out


def read_matrices(path):
    """``{role: (matrix, obj)}`` for every matrix object in the file."""
    found = {}
    for k, obj in read_objects(path):
        where = f"{path}:{k}"
        M = obj_to_matrix(obj, where)
        role = obj.get("role", "state")
        if role in found:
            raise InputError(f"{where}: duplicate role {role!r}")
        found[role] = (M, obj, where)
    return found


def write_matrix_file(path, M, role, local_dim, sites, **extra):
    with open(path, "w") as fh:
        fh.write(dumps_matrix(M, role, local_dim, sites, **extra) + "\n")


def _load_state(path):
    mats = read_matrices(path)
    if "state" not in mats:
        raise InputError(f"{path}: no object with role 'state'")
    M, obj, where = mats["state"]
    if obj["sites"] != 2:
        raise InputError(f"{where}: a two-site state needs 'sites': 2")
    try:
        return as_flip_invariant(as_hermitian(M, tol=1e-10)), obj["local_dim"]
    except ValueError as e:
        raise InputError(f"{where}: {e}") from None


def _load_interaction(path):
    mats = read_matrices(path)
    if "interaction" not in mats:
        raise InputError(f"{path}: no object with role 'interaction'")
    h, obj, where = mats["interaction"]
    one_body = None
    if "one_body" in mats:
        one_body = mats["one_body"][0]
    try:
        return PairInteraction.auto(as_hermitian(h, tol=1e-10), one_body=one_body)
    except ValueError as e:
        raise InputError(f"{where}: {e}") from None


# ---------------------------------------------------------------------------
# output


class Reporter:
    """Collects key/value results and prints them as text or one JSON object."""

    def __init__(self, mode, stream=None):
        self.mode = mode
        self.stream = sys.stdout if stream is None else stream
        self.data = {}

    def add(self, key, value):
        self.data[key] = value

    def add_matrix(self, key, M, role, local_dim, sites):
        self.data[key] = matrix_to_obj(M, role, local_dim, sites)

    def emit(self):
        if self.mode == "json":
            print(json.dumps(self.data), file=self.stream)
            return
        for key, value in self.data.items():
            if isinstance(value, dict) and value.get("format") == FORMAT:
                print(f"{key}:", file=self.stream)
                print(_format_matrix(obj_to_matrix(value)), file=self.stream)
            elif isinstance(value, list) and value and isinstance(value[0], dict):
                print(f"{key}:", file=self.stream)
                for row in value:
                    if row.get("format") == FORMAT:
                        print(f"  weight={_fmt(row.get('weight'))}", file=self.stream)
                        print(_format_matrix(obj_to_matrix(row)), file=self.stream)
                        continue
                    print("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items()), file=self.stream)
            else:
                print(f"{key}: {_fmt(value)}", file=self.stream)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return json.dumps(v)
    return str(v)


def _format_matrix(M):
    rows = []
    for row in M:
        rows.append("  " + " ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row))
    return "\n".join(rows)


def _cvec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


# ---------------------------------------------------------------------------
# commands


def cmd_certify(args):
    rho, d = _load_state(args.state)
    try:
        rep = certify_exchangeable(rho, tol=args.tol)
    except ValueError as e:
        raise InputError(f"{args.state}: {e}") from None
    out = Reporter(args.output)
    out.add("verdict", rep.verdict)
    out.add("min_eigenvalue", rep.min_eigenvalue)
    out.add("tol", rep.tol)
    if rep.witness is not None:
        out.add("witness_value", rep.witness_value)
        out.add_matrix("witness", rep.witness, "witness", d, 1)
        if args.witness_out:
            write_matrix_file(args.witness_out, rep.witness, "witness", d, 1)
    if rep.decomposition is not None:
        out.add("reconstruction_error", rep.reconstruction_error)
        out.add("terms", len(rep.decomposition))
        out.add("decomposition", [matrix_to_obj(B, "term", d, 1, weight=w) for w, B in rep.decomposition])
    out.emit()
    if rep.verdict == EXCHANGEABLE:
        return EXIT_OK
    return EXIT_BOUNDARY if rep.verdict == BOUNDARY else EXIT_NOT_EXCHANGEABLE


def cmd_approximate(args):
    if args.N is None or args.N < 2:
        raise InputError("--N must be an integer >= 2")
    rho, d = _load_state(args.state)
    try:
        res = exchangeable_approximant(rho, args.N, tol=args.tol)
    except ValueError as e:
        raise InputError(f"{args.state}: {e}") from None
    nc = res.necessary_condition
    if not nc.passed:
        _warn(
            f"input fails the {args.N}-site extension inequality (min eigenvalue "
            f"{nc.min_eigenvalue:.3e}); it is not the marginal of a symmetric {args.N}-site state"
        )
    out = Reporter(args.output)
    out.add("N", res.N)
    out.add("c", res.c)
    out.add("c_over_N", res.c_over_N)
    out.add("bound", res.bound)
    out.add("distance", res.distance_to_input)
    out.add("normalized_distance", res.normalized_distance)
    out.add("verdict", res.certificate.verdict)
    out.add("approximant_min_eigenvalue", res.certificate.min_eigenvalue)
    out.add("necessary_condition", nc.passed)
    out.add_matrix("approximant", res.approximant, "state", d, 2)
    if args.approximant_out:
        write_matrix_file(args.approximant_out, res.approximant, "state", d, 2)
    out.emit()
    return EXIT_OK


def _load_coeffs(path):
    objs = read_objects(path)
    k, obj = objs[0]
    raw = obj.get("coeffs") if isinstance(obj, dict) else obj
    if not isinstance(raw, list) or len(raw) < 3:
        raise InputError(f"{path}:{k}: 'coeffs' must list at least 3 [re, im] pairs")
    vals = []
    for j, z in enumerate(raw):
        if _is_number(z):
            vals.append(complex(z))
        elif isinstance(z, list) and len(z) == 2 and all(_is_number(x) for x in z):
            vals.append(complex(z[0], z[1]))
        else:
            raise InputError(f"{path}:{k}: coeffs[{j}] must be a number or a [re, im] pair")
    c = np.array(vals)
    if np.linalg.norm(c) == 0:
        raise InputError(f"{path}:{k}: coefficients are all zero")
    return dk.DickeVector.normalized(c)


def cmd_dicke(args):
    out = Reporter(args.output)
    if args.sweep is not None:
        Ns = args.sweep or [4, 8, 16, 32, 64]
        if any(N < 2 for N in Ns):
            raise InputError("--sweep sizes must be >= 2")
        gaps, slope = dk.gap_sweep(Ns)
        out.add("sweep", [{"N": N, "n": int(round(N / 2)), "gap": float(g), "N_gap": float(N * g)}
                          for N, g in zip(Ns, gaps)])
        out.add("slope", slope)
        out.emit()
        return EXIT_OK

    if args.coeffs:
        psi = _load_coeffs(args.coeffs)
    else:
        if args.N is None or args.n is None:
            raise InputError("dicke needs --N and --n, --coeffs FILE, or --sweep")
        try:
            psi = dk.DickeVector.basis(args.N, args.n)
        except ValueError as e:
            raise InputError(str(e)) from None
    N = psi.N
    if N < 2:
        raise InputError("two-site marginals need N >= 2")
    rho = dk.two_site_marginal(psi)
    out.add("N", N)
    if not args.coeffs:
        out.add("n", args.n)
    out.add_matrix("marginal", rho, "state", 2, 2)
    if N <= dk.DENSE_MAX_N:
        err = float(np.max(np.abs(rho - dk.dense_two_site_marginal(psi))))
        out.add("oracle", "match" if err < 1e-10 else "MISMATCH")
        out.add("oracle_error", err)
    else:
        out.add("oracle", "skipped (N above dense limit)")
    if args.paper_formula:
        printed = dk.two_site_marginal(psi, element=dk.paper_two_site_element)
        diff = float(np.max(np.abs(printed - rho)))
        out.add("printed_formula_difference", diff)
        if diff > 1e-12:
            out.add_matrix("printed_formula_marginal", printed, "state", 2, 2)
    nc = n_extendability_necessary(rho, N, tol=args.tol)
    out.add("extension_inequality", nc.passed)
    out.add("extension_min_eigenvalue", nc.min_eigenvalue)
    cert = certify_exchangeable(rho, tol=args.tol)
    out.add("verdict", cert.verdict)
    approx = exchangeable_approximant(rho, N, tol=args.tol)
    out.add("approximant_distance", approx.distance_to_input)
    out.add("c_over_N", approx.c_over_N)
    out.add("bound", approx.bound)
    if not args.coeffs:
        out.add("separability_gap", dk.separability_gap(N, args.n))
    out.emit()
    return EXIT_OK


def _ground_report(out, prefix, r):
    out.add(f"{prefix}e0", r.e0)
    out.add(f"{prefix}label", r.label)
    out.add(f"{prefix}argmax_state", _cvec(r.argmax_state))
    out.add(f"{prefix}starts_used", r.starts_used)
    out.add(f"{prefix}converged", r.converged)
    out.add(f"{prefix}residual", r.residual)


def cmd_groundstate(args):
    if args.bcs is not None:
        if args.interaction:
            raise InputError("give either an interaction file or --bcs, not both")
        p = bcs_interaction(args.bcs[0], args.bcs[1])
    elif args.interaction:
        p = _load_interaction(args.interaction)
    else:
        raise InputError("groundstate needs an interaction file or --bcs FIELD LAMBDA")
    opts = dict(starts=args.starts, seed=args.seed)
    out = Reporter(args.output)
    if args.compose:
        p2 = _load_interaction(args.compose)
        if not is_positive_definite(p.h):
            raise InputError("--compose: the first interaction must be positive definite")
        rep = check_multiplicativity(p, p2, **opts)
        out.add("lhs", rep.lhs)
        out.add("rhs", rep.rhs)
        out.add("gap", rep.gap)
        out.add("product_bound_holds", rep.product_bound_holds)
        _ground_report(out, "composite_", rep.composite)
        out.emit()
        return EXIT_OK
    r = e0(p, **opts)
    _ground_report(out, "", r)
    if p.d == 2:
        out.add("bloch_grid_e0", -bloch_grid_max(p)[0])
    if args.exact is not None:
        try:
            out.add("exact_N", args.exact)
            out.add("exact_energy", exact_ground_energy(p, args.exact))
        except ValueError as e:
            raise InputError(f"--exact: {e}") from None
    out.emit()
    return EXIT_OK


def _selfcheck_suites(d, seed, samples, mm):
    rng = np.random.default_rng(seed)
    Bs = [random_hermitian(d, rng) for _ in range(samples)]
    As = [random_flip_invariant(d, rng) for _ in range(samples)]

    def v_isometry(k):
        B = Bs[k]
        return abs(np.linalg.norm(v_map(B)) ** 2 - np.trace(B @ B).real), {"B": B}

    def rank_one(k):
        B = Bs[k]
        v = v_map(B)
        return float(np.max(np.abs(mm(np.kron(B, B)) - np.outer(v, v)))), {"B": B}

    def trace_identity(k):
        A, B = As[k], Bs[k]
        v = v_map(B)
        lhs = np.trace(A @ np.kron(B, B)).real
        rhs = v @ mm(A) @ v
        return abs(lhs - rhs) / max(1.0, abs(lhs)), {"A": A, "B": B}

    def roundtrip(k):
        A, B = As[k], Bs[k]
        e1 = np.max(np.abs(v_inverse(v_map(B)) - B))
        e2 = np.max(np.abs(m_inverse(mm(A), d) - A))
        return float(max(e1, e2)), {"A": A, "B": B}

    return [("v_isometry", v_isometry), ("rank_one", rank_one),
            ("trace_identity", trace_identity), ("roundtrip", roundtrip)]


def _corrupted_m_map(A):
    # test hook: a deliberately wrong coordinate map
    M = m_map(A).copy()
    M[0, 0] += 1e-3
    return M


def cmd_selfcheck(args):
    d = args.d
    if d not in (2, 3, 4, 5):
        raise InputError("--d must be one of 2, 3, 4, 5")
    mm = _corrupted_m_map if args.inject_fault else m_map
    out = Reporter(args.output)
    out.add("d", d)
    failures = []
    start = time.perf_counter()
    for name, check in _selfcheck_suites(d, args.seed, args.samples, mm):
        worst = 0.0
        for k in range(args.samples):
            err, inputs = check(k)
            worst = max(worst, float(err))
            if err > args.check_tol:
                failures.append({
                    "check": name,
                    "d": d,
                    "seed": args.seed,
                    "sample": k,
                    "error": float(err),
                    "inputs": {key: matrix_to_obj(M, key, d, int(round(np.log(M.shape[0]) / np.log(d))))
                               for key, M in inputs.items()},
                })
                break
        out.add(name, {"max_error": worst, "passed": worst <= args.check_tol})
    out.add("seconds", time.perf_counter() - start)
    out.add("passed", not failures)
    if failures:
        out.add("counterexample", failures[0])
    out.emit()
    return EXIT_OK if not failures else EXIT_SELFCHECK_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def _positive_float(s):
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def _positive_int(s):
    x = int(s)
    if x < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return x


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=1e-9, help="PSD tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default $EXKIT_SEED or 0)")
    common.add_argument("--starts", type=_positive_int, default=32, help="optimizer starts (default 32)")
    common.add_argument("--output", choices=("human", "json"), default="human")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="exkit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="decide exchangeability of a two-site state")
    p.add_argument("state", help="matrix file with a role 'state' object")
    p.add_argument("--witness-out", metavar="FILE", help="write the witness as a matrix file")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("approximate", parents=[common], help="exchangeable approximant at N sites")
    p.add_argument("state")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--approximant-out", metavar="FILE")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("dicke", parents=[common], help="Dicke-state marginals and separability sweeps")
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--coeffs", metavar="FILE", help="JSON object with 'coeffs': [[re, im], ...]")
    p.add_argument("--sweep", type=int, nargs="*", metavar="N", help="gap-vs-N table (default 4 8 16 32 64)")
    p.add_argument("--paper-formula", action="store_true",
                   help="also evaluate the printed two-site formula and report the difference")
    p.set_defaults(func=cmd_dicke)

    p = sub.add_parser("groundstate", parents=[common], help="mean-field energy density e0")
    p.add_argument("interaction", nargs="?", help="matrix file with role 'interaction' (optional 'one_body')")
    p.add_argument("--bcs", type=float, nargs=2, metavar=("FIELD", "LAMBDA"))
    p.add_argument("--compose", metavar="FILE", help="second interaction; compare e0(h1 x h2) with -e0(h1) e0(h2)")
    p.add_argument("--exact", type=int, metavar="N", help="also diagonalize H^N exactly")
    p.set_defaults(func=cmd_groundstate)

    p = sub.add_parser("selfcheck", parents=[common], help="verify the coordinate-map identities")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--samples", type=_positive_int, default=50)
    p.add_argument("--check-tol", type=_positive_float, default=1e-10)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("EXKIT_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"EXKIT_SEED must be an integer, got {env!r}") from None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="exkit: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.seed = _resolve_seed(args.seed)
        return args.func(args)
    except InputError as e:
        print(f"exkit: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
