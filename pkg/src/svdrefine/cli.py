"""Command line front end.

Verbs
-----
certify     evaluate the convergence certificate of a triplet
refine      certify, then refine and print the per-iteration trace
deflate     select well separated singular triplets of a square matrix
experiment  run the generate/initialize/deflate/refine pipeline

Exit status is 0 on success, 2 when a start fails certification, 3 when
the divergence guard stops a refinement and 1 for any other error.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .bench.experiment import ExperimentConfig, ExperimentError, run_experiment
from .bench.jacobi import init_svd
from .errors import CertificationError, DivergenceError, RefinementError
from .mmio import read_mtx, read_triplet, write_triplet
from .refiner import CSV_HEADER, PrecisionSchedule, certify, refine
from .spectra import deflate
from .triplet import SvdTriplet

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CERTIFICATION = 2
EXIT_DIVERGENCE = 3


def parse_orders(text):
    """``"3"`` -> (3,), ``"1-4"`` -> (1, 2, 3, 4), ``"1,3,5"`` -> (1, 3, 5)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("orders must be positive integers: %r" % text)
    return tuple(out)


def parse_mode(text):
    """``"regular"`` -> None, ``"cluster:2,1"`` -> (2, 1)."""
    if text == "regular":
        return None
    if text.startswith("cluster:"):
        try:
            sizes = tuple(int(k) for k in text[len("cluster:"):].split(",") if k.strip())
        except ValueError:
            sizes = ()
        if sizes and min(sizes) >= 1:
            return sizes
    raise argparse.ArgumentTypeError("mode must be 'regular' or 'cluster:<q1,q2,...>'")


def build_parser():
    parser = argparse.ArgumentParser(prog="svdrefine",
                                     description="High-order SVD refinement.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, needs_input=True):
        p.add_argument("--order", type=parse_orders, default=(1,),
                       help="series order p, a list (1,3) or a range (1-6)")
        p.add_argument("--bits", type=int, default=64, help="base working precision")
        p.add_argument("--format", choices=("csv", "table"), default="table")
        if needs_input:
            p.add_argument("--input", required=True, help="Matrix Market array file")
            p.add_argument("--triplet", help="triplet directory (default: baseline SVD)")
            p.add_argument("--mode", type=parse_mode, default=None,
                           help="regular or cluster:<q1,q2,...>")
            p.add_argument("--init-bits", type=int, default=53,
                           help="precision of the baseline SVD when no triplet is given")

    p_cert = sub.add_parser("certify", help="evaluate the convergence certificate")
    common(p_cert)

    p_ref = sub.add_parser("refine", help="refine a triplet")
    common(p_ref)
    p_ref.add_argument("--iters", type=int, default=3)
    p_ref.add_argument("--fixed", action="store_true", help="keep the precision fixed")
    p_ref.add_argument("--output", help="directory for the refined triplet")

    p_def = sub.add_parser("deflate", help="deflate a square triplet")
    common(p_def)
    p_def.add_argument("--output", help="directory for the deflated triplet")

    p_exp = sub.add_parser("experiment", help="run a benchmark family")
    common(p_exp, needs_input=False)
    p_exp.add_argument("--family", choices=("random", "cauchy", "prescribed"), required=True)
    p_exp.add_argument("--size", type=int, required=True)
    p_exp.add_argument("--cols", type=int, default=None)
    p_exp.add_argument("--iters", type=int, default=3)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--init-bits", type=int, default=53)
    p_exp.add_argument("--no-deflate", action="store_true")
    return parser


def _load(args):
    M = read_mtx(args.input)
    M = M.round(max(M.precision, args.bits))
    if args.triplet:
        T = read_triplet(args.triplet)
    else:
        T = init_svd(M.round(max(args.init_bits, 53)), args.init_bits)
    T = T.round(args.bits)
    if args.mode is not None:
        T = SvdTriplet(T.U, T.V, T.sigma, args.mode)
    return M, T


def _emit(rows, fmt, out):
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerows(rows)
        return
    widths = [max(len(str(r[k])) for r in rows) for k in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(str(v).rjust(w) for v, w in zip(r, widths)) + "\n")


def cmd_certify(args, out):
    M, T = _load(args)
    rows = [("order", "epsilon", "u0", "e_0", "kappa", "K", "passed")]
    ok = True
    for p in args.order:
        c = certify(T, M, p)
        ok &= c.passed
        rows.append((p, "%.6e" % float(c.epsilon), "%g" % float(c.u0),
                     "inf" if c.e_index is None else c.e_index,
                     "%.6e" % float(c.kappa), "%.6e" % float(c.big_k),
                     "yes" if c.passed else "no"))
    _emit(rows, args.format, out)
    return EXIT_OK if ok else EXIT_CERTIFICATION


def cmd_refine(args, out):
    M, T = _load(args)
    rows = [CSV_HEADER]
    status = EXIT_OK
    for p in args.order:
        schedule = (PrecisionSchedule.fixed(args.bits) if args.fixed
                    else PrecisionSchedule(args.bits, p, True))
        try:
            trace = refine(M, T, p, schedule, args.iters)
        except CertificationError as exc:
            sys.stderr.write("p=%d: %s\n" % (p, exc))
            status = max(status, EXIT_CERTIFICATION)
            continue
        except DivergenceError as exc:
            rows.extend(exc.trace.rows())
            sys.stderr.write("p=%d: %s\n" % (p, exc))
            status = max(status, EXIT_DIVERGENCE)
            continue
        rows.extend(trace.rows())
        if args.output:
            target = args.output if len(args.order) == 1 else "%s_p%d" % (args.output, p)
            write_triplet(target, trace.triplet)
    _emit(rows, args.format, out)
    return status


def cmd_deflate(args, out):
    M, T = _load(args)
    rows = [("order", "e", "q", "indices")]
    for p in args.order:
        result = deflate(T, M, p)
        rows.append((p, "%.6e" % float(result.e), result.q,
                     " ".join(str(i + 1) for i in result.indices)))
        if args.output:
            target = args.output if len(args.order) == 1 else "%s_p%d" % (args.output, p)
            write_triplet(target, result.triplet)
    _emit(rows, args.format, out)
    return EXIT_OK


def cmd_experiment(args, out):
    cfg = ExperimentConfig(args.family, args.size, args.order, args.bits, args.iters,
                           args.seed, args.init_bits, not args.no_deflate, args.cols)
    try:
        result = run_experiment(cfg)
    except ExperimentError as exc:
        _print_experiment(exc.partial, args.format, out)
        sys.stderr.write("%s\n" % exc)
        if isinstance(exc.__cause__, CertificationError):
            return EXIT_CERTIFICATION
        if isinstance(exc.__cause__, DivergenceError):
            return EXIT_DIVERGENCE
        return EXIT_ERROR
    _print_experiment(result, args.format, out)
    return EXIT_OK


def _print_experiment(result, fmt, out):
    if fmt == "csv":
        _emit(result.csv_rows(), "csv", out)
    else:
        out.write(result.format_table() + "\n")


COMMANDS = {
    "certify": cmd_certify,
    "refine": cmd_refine,
    "deflate": cmd_deflate,
    "experiment": cmd_experiment,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args, out)
    except (RefinementError, OSError, ValueError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
