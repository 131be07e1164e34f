"""Command-line front end: ``cpaltls {experiment, decompose, lemma-suite}``.

Exit status: 0 success, 1 usage or I/O error, 2 unparsable input file,
3 numerical degeneracy, 4 lemma violation.
"""

import argparse
import os
import sys

from . import io
from .altls import VARIANTS, StoppingRule, run
from .coherence import HybridSchedule, run_hybrid
from .errors import DegenerateComponentError, ParseError
from .experiments import PRESETS, run_preset, write_results
from .lemmas import run_lemma_suite, write_reports_csv
from .synthesis import INIT, random_init, substream

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_DEGENERATE, EXIT_LEMMA = range(5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for parse errors
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_seeds(text):
    """``"0-19"``, ``"3"``, ``"1,4,7-9"`` -> tuple of ints (ranges inclusive)."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be nonnegative")
    return tuple(seeds)


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonnegative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def build_parser():
    parser = _Parser(prog="cpaltls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(p, variant_default):
        p.add_argument("--rank", type=_positive)
        p.add_argument("--variant", choices=VARIANTS, default=variant_default)
        p.add_argument("--max-iters", type=_positive, dest="max_iters")
        p.add_argument("--tol", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--reduced-iters", type=_nonnegative, dest="reduced_iters")
        p.add_argument("--regular-iters", type=_nonnegative, dest="regular_iters")
        p.add_argument("--seeds", type=parse_seeds, default=(0,))
        p.add_argument("--no-timestamp", action="store_true", dest="no_timestamp")

    exp = sub.add_parser("experiment", help="run a preset experiment")
    exp.add_argument("--preset", choices=PRESETS, required=True)
    exp.add_argument("--output", default=".", help="output directory")
    solver_flags(exp, None)

    dec = sub.add_parser("decompose", help="decompose a tensor file")
    dec.add_argument("--input", required=True, help="dense tensor file (text or DTEN)")
    dec.add_argument("--output", default=".", help="output directory")
    solver_flags(dec, "serial")

    lem = sub.add_parser("lemma-suite", help="check the perturbation lemmas")
    lem.add_argument("--instances", type=_positive, default=1000)
    lem.add_argument("--seeds", type=parse_seeds, default=(0,))
    lem.add_argument("--output", default="lemma-suite.csv", help="CSV path, '-' for stdout")
    return parser


def cmd_experiment(args, out):
    results = run_preset(
        args.preset, args.seeds, rank=args.rank, variant=args.variant,
        max_iterations=args.max_iters, tol=args.tol, omega=args.omega,
        reduced_iterations=args.reduced_iters, regular_iterations=args.regular_iters,
    )
    paths = write_results(results, args.output, timestamp=not args.no_timestamp)
    for res, path in zip(results, paths):
        last = res.trace.records[-1]
        print(f"{path}: {len(res.trace) - 1} iterations, rel_error {last.relative_error:.3e}",
              file=out)
    return EXIT_OK


def cmd_decompose(args, out):
    x = io.read_tensor(args.input)
    rank = args.rank or 1
    if rank > min(x.shape):
        print(f"warning: rank {rank} exceeds the smallest extent {min(x.shape)}; "
              "no convergence guarantee", file=sys.stderr)
    seed = args.seeds[0]
    init = random_init(x.shape, rank, substream(seed, INIT))
    rule = StoppingRule(
        args.max_iters or 100, 1e-10 if args.tol is None else args.tol)
    if args.reduced_iters:
        schedule = HybridSchedule(
            1.0 if args.omega is None else args.omega, args.reduced_iters,
            rule.max_iterations if args.regular_iters is None else args.regular_iters)
        model, trace = run_hybrid(x, init, schedule, rule, use_direct_error=True)
    else:
        model, trace = run(x, init, args.variant, rule, use_direct_error=True)
    os.makedirs(args.output, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.input))[0]
    model_path = os.path.join(args.output, f"{stem}-model.txt")
    trace_path = os.path.join(args.output, f"{stem}-trace.csv")
    io.write_model(model_path, model)
    io.write_trace_csv(trace_path, trace, timestamp=not args.no_timestamp,
                       extra_metadata={"input": args.input, "rank": rank, "seed": seed,
                                       "variant": args.variant})
    last = trace.records[-1]
    print(f"{model_path}: rank {rank}, {len(trace) - 1} iterations "
          f"({trace.stop_reason}), rel_error {last.relative_error:.3e}", file=out)
    return EXIT_OK


def cmd_lemma_suite(args, out):
    reports = run_lemma_suite(args.instances, seed=args.seeds[0])
    if args.output == "-":
        write_reports_csv(reports, out)
    else:
        write_reports_csv(reports, args.output)
    bad = [r for r in reports if r.violated]
    for r in bad:
        print(f"violation: {r.lemma_id} seed {r.seed} margin {r.margin:.3e}", file=sys.stderr)
    if args.output != "-":
        print(f"{args.output}: {len(reports)} reports, {len(bad)} violations", file=out)
    return EXIT_LEMMA if bad else EXIT_OK


COMMANDS = {"experiment": cmd_experiment, "decompose": cmd_decompose,
            "lemma-suite": cmd_lemma_suite}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateComponentError as err:
        print(f"degenerate: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
