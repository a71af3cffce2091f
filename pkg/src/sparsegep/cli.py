"""Command-line interface.

Subcommands ``solve``, ``tune``, ``verify`` and ``experiment`` each write one
JSON document to stdout. Exit codes: 0 success, 1 usage error, 2 unreadable
input, 3 numerical failure (details as JSON on stderr).
"""
import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import (FASTPOI, POI, GepPair, OuterConfig, eigenvalues_ls, fit,
                   lambda_max, rayleigh_eigenvalues)
from .errors import InvalidInputError, SparseGepError
from .penalties import GROUP, LASSO, InnerSolveConfig
from .simulation import ExperimentSpec, run_experiment
from .tuning import penalty_for, select_lambda

MAX_DIM = 20000

EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3


class InputParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_matrix(path):
    """Read a dense matrix from CSV or from ``rows cols``-headed text."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputParseError(f"{path}: {exc.strerror}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputParseError(f"{path}: empty file")
    try:
        if "," in lines[0]:
            rows = [[float(v) for v in ln.split(",")] for ln in lines]
            if len({len(r) for r in rows}) != 1:
                raise InputParseError(f"{path}: ragged CSV rows")
            M = np.array(rows)
        else:
            head = lines[0].split()
            if len(head) != 2:
                raise InputParseError(f"{path}: expected a 'rows cols' header")
            r, c = int(head[0]), int(head[1])
            if r > MAX_DIM or c > MAX_DIM:
                raise InputParseError(f"{path}: dimensions exceed {MAX_DIM}")
            vals = [float(v) for ln in lines[1:] for v in ln.split()]
            if len(vals) != r * c:
                raise InputParseError(f"{path}: expected {r * c} entries, found {len(vals)}")
            M = np.array(vals).reshape(r, c)
    except ValueError as exc:
        raise InputParseError(f"{path}: {exc}") from exc
    if max(M.shape) > MAX_DIM:
        raise InputParseError(f"{path}: dimensions exceed {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise InputParseError(f"{path}: non-finite entries")
    return M


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _num(x):
    # non-finite values have no JSON literal
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _emit(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(_clean(obj), indent=2) + "\n")


def _pair(a_path, b_path, b_identity):
    A = read_matrix(a_path)
    if b_identity:
        B = None
    elif b_path:
        B = read_matrix(b_path)
    else:
        raise InvalidInputError("one of the B options is required")
    if A.shape[0] != A.shape[1]:
        raise InputParseError(f"{a_path}: A must be square, got {A.shape}")
    if B is not None and B.shape != A.shape:
        raise InputParseError(f"B has shape {B.shape}, A has {A.shape}")
    return GepPair.build(A, B)


def _config(args):
    init = "random" if args.seed is not None else "eig"
    return OuterConfig(max_outer=args.max_outer, outer_tol=args.tol, init=init,
                       seed=args.seed, inner=InnerSolveConfig(tol=args.inner_tol))


def estimate_dict(est, pair, lam, lam_max):
    return {
        "Q": est.Q, "U": est.U, "eigenvalues": est.eigenvalues,
        "support": est.support, "lambda": lam, "lambda_max": lam_max,
        "converged": est.converged, "outer_iters": est.outer_iters,
        "epsilon_used": pair.epsilon_used, "padded": est.padded,
        "method": est.method,
    }


def cmd_solve(args):
    pair = _pair(args.a, args.b, args.b_identity)
    lam_max = lambda_max(pair, args.penalty, args.d, args.method)
    lam = args.lam if args.lam is not None else args.lambda_rel * lam_max
    est = fit(pair, args.d, penalty_for(args.penalty, lam, args.d), args.method, _config(args))
    _emit(estimate_dict(est, pair, lam, lam_max))


def cmd_tune(args):
    train = _pair(args.a, args.b, args.b_identity)
    tune = _pair(args.a2, args.b2, args.b2_identity)
    report, est = select_lambda(train, tune, args.d, args.penalty, args.method,
                                _config(args), args.grid_ratio, args.grid_len)
    _emit({"report": report.to_dict(),
           "estimate": estimate_dict(est, train, report.selected_lambda, report.lam_max)})


def _load_u(path):
    if str(path).endswith(".json"):
        try:
            return np.asarray(json.loads(Path(path).read_text())["U"], dtype=float)
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise InputParseError(f"{path}: no usable 'U' field") from exc
    return read_matrix(path)


def cmd_verify(args):
    pair = _pair(args.a, args.b, args.b_identity)
    U = _load_u(args.u)
    if U.shape[0] != pair.p:
        raise InputParseError(f"U has {U.shape[0]} rows, expected {pair.p}")
    _emit({"rayleigh_eigenvalues": rayleigh_eigenvalues(U, pair),
           "ls_eigenvalues": eigenvalues_ls(U, pair)})


def cmd_experiment(args):
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise InputParseError(f"{args.config}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except ValueError:
            spec = ExperimentSpec.from_text(text)
        else:
            spec = ExperimentSpec.from_dict(data)
    else:
        spec = ExperimentSpec()
    overrides = {"family": args.family, "model": args.model, "d": args.d, "p": args.p,
                 "n_train": args.n, "n_tune": args.n_tune, "n_test": args.n_test,
                 "repetitions": args.reps, "seed": args.seed, "method": args.method,
                 "penalty": args.penalty}
    for key, value in overrides.items():
        if value is not None:
            setattr(spec, key, value)
    report = run_experiment(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.csv").write_text(report.to_csv())
    _emit({"aggregate": report.aggregate_row(), "failures": report.failures,
           "out": str(out)})


def _matrix_args(p, suffix=""):
    p.add_argument(f"--a{suffix}", required=True, help="matrix A (CSV or dense text)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument(f"--b{suffix}", help="matrix B")
    g.add_argument(f"--b{suffix}-identity", action="store_true", help="use B = I")


def _solver_args(p):
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--penalty", choices=[LASSO, GROUP], default=GROUP)
    p.add_argument("--method", choices=[POI, FASTPOI], default=POI)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--inner-tol", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=None,
                   help="start POI from a random basis drawn with this seed")


def build_parser():
    parser = _Parser(prog="sparsegep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="sparse leading generalized eigenspace")
    _matrix_args(p)
    _solver_args(p)
    lam = p.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--lambda-rel", type=float, help="penalty as a multiple of lambda_max")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("tune", help="cross-validate the penalty level")
    _matrix_args(p)
    _matrix_args(p, "2")
    _solver_args(p)
    p.add_argument("--grid-ratio", type=float, default=0.75)
    p.add_argument("--grid-len", type=int, default=31)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("verify", help="eigenvalue estimates for a given U")
    _matrix_args(p)
    p.add_argument("--u", required=True, help="matrix file or solve JSON output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run a simulation experiment")
    p.add_argument("--config", help="spec file (key = value lines or JSON)")
    p.add_argument("--family", choices=["pca", "lda", "taichi"])
    p.add_argument("--model")
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--n", type=int, help="training size (per class for lda)")
    p.add_argument("--n-tune", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=[POI, FASTPOI])
    p.add_argument("--penalty", choices=[LASSO, GROUP])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def _fail(code, kind, exc):
    _emit({"error": kind, "message": str(exc)}, sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InputParseError as exc:
        return _fail(EXIT_PARSE, "parse", exc)
    except InvalidInputError as exc:
        code = EXIT_USAGE if args.command == "experiment" else EXIT_NUMERIC
        return _fail(code, type(exc).__name__, exc)
    except (SparseGepError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
