"""Command-line interface: ``wealthshare <subcommand> [flags]``.

Exit status is 0 on success, 1 on a usage error and 2 on a numerical
failure.
"""

import argparse
import contextlib
import io
import json
import math
import sys

from . import __version__
from .ensembles import RNG_ALGORITHM, EnsembleSpec, Kind
from .errors import ConvergenceError, DomainError
from .modality import classify, critical_thresholds
from .monte_carlo import compare, sample_share
from .phase_diagram import SweepSpec, export, sweep
from .share_distribution import ShareDensity, share_density_integral, tabulate, write_table_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(flag):
    def parse(text):
        try:
            value = int(float(text)) if "e" in text.lower() else int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}")
        if value < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {value}")
        return value
    return parse


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed expects an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("--seed must be an unsigned 64-bit integer")
    return value


def _add_ensemble(p, with_delta=True):
    p.add_argument("--kind", required=True, choices=["bounded", "exp", "exponential"])
    p.add_argument("--alpha", required=True, type=float)
    if with_delta:
        p.add_argument("--delta", type=float)
        p.add_argument("--L", dest="L", type=float)
        p.add_argument("--H", dest="H", type=float)


def _add_output(p, formats=("csv", "json"), default=None):
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=formats, default=default or formats[0])


def build_parser():
    parser = _Parser(
        prog="wealthshare",
        description=__doc__.splitlines()[0],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version", action="version",
        version=f"wealthshare {__version__} (rng: {RNG_ALGORITHM})",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pdf", help="tabulate P(omega)")
    _add_ensemble(p)
    p.add_argument("--grid", type=_positive_int("--grid"), default=101)
    p.add_argument("--oracle", action="store_true", help="add the quadrature oracle column")
    _add_output(p)

    p = sub.add_parser("sample", help="sample shares omega")
    _add_ensemble(p)
    p.add_argument("--n", type=_positive_int("--n"), required=True)
    p.add_argument("--seed", type=_seed, default=0)
    _add_output(p)

    p = sub.add_parser("classify", help="extrema and modal class of P(omega)")
    _add_ensemble(p)
    p.add_argument("--resolution", type=_positive_int("--resolution"), default=4096)
    _add_output(p, ("json",))

    p = sub.add_parser("critical", help="critical cut-off ratios delta_c, delta_cc")
    _add_ensemble(p, with_delta=False)
    p.add_argument("--resolution", type=_positive_int("--resolution"), default=4096)
    _add_output(p, ("json",))

    p = sub.add_parser("validate", help="Monte Carlo comparison with the closed form")
    _add_ensemble(p)
    p.add_argument("--n", type=_positive_int("--n"), default=1_000_000)
    p.add_argument("--bins", type=_positive_int("--bins"), default=100)
    p.add_argument("--seed", type=_seed, default=0)
    _add_output(p, ("json",))

    p = sub.add_parser("sweep", help="phase diagram over (alpha, ln delta)")
    p.add_argument("--kind", required=True, choices=["bounded", "exp", "exponential"])
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=2.5)
    p.add_argument("--delta-min", type=float, default=math.exp(-10.0))
    p.add_argument("--delta-max", type=float, default=math.exp(-0.05))
    p.add_argument("--alpha-steps", type=_positive_int("--alpha-steps"), default=20)
    p.add_argument("--delta-steps", type=_positive_int("--delta-steps"), default=20)
    p.add_argument("--resolution", type=_positive_int("--resolution"), default=4096)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix for the two CSV files")
    return parser


def _ensemble(args):
    if not args.alpha > 0 or not math.isfinite(args.alpha):
        raise UsageError(f"--alpha must be a finite number > 0, got {args.alpha}")
    kind = Kind.parse(args.kind)
    has_delta = args.delta is not None
    has_cutoffs = args.L is not None or args.H is not None
    if has_delta == has_cutoffs:
        raise UsageError("give exactly one of --delta or --L/--H")
    if has_delta:
        if not 0 < args.delta < 1:
            raise UsageError(f"--delta must lie in (0, 1), got {args.delta}")
        return EnsembleSpec.from_delta(kind, args.alpha, args.delta)
    if args.L is None or args.H is None:
        raise UsageError("--L and --H must be given together")
    if not 0 < args.L < args.H:
        raise UsageError(f"--L and --H need 0 < L < H, got L={args.L}, H={args.H}")
    return EnsembleSpec(kind, args.alpha, args.L, args.H)


def _dump_json(obj, fh):
    json.dump(obj, fh, indent=2, allow_nan=False)
    fh.write("\n")


def _cmd_pdf(args, fh):
    density = ShareDensity(_ensemble(args))
    rows = tabulate(density, args.grid)
    oracle = None
    if args.oracle:
        oracle = [
            share_density_integral(density.ensemble, w) if 0 < w < 1 else 0.0
            for w, _ in rows
        ]
    if args.format == "csv":
        write_table_csv(fh, density, rows, oracle)
        return
    out = {
        "ensemble": density.ensemble.as_dict(),
        "omega": [w for w, _ in rows],
        "p_omega": [p for _, p in rows],
    }
    if oracle is not None:
        out["p_omega_oracle"] = oracle
    _dump_json(out, fh)


def _cmd_sample(args, fh):
    spec = _ensemble(args)
    omega = sample_share(spec, args.n, args.seed)
    if args.format == "json":
        _dump_json({"ensemble": spec.as_dict(), "seed": args.seed, "rng": RNG_ALGORITHM,
                    "omega": omega.tolist()}, fh)
        return
    fh.write(
        f"# ensemble={spec.kind.value} alpha={spec.alpha!r} L={spec.lower_cutoff!r} "
        f"H={spec.upper_cutoff!r} seed={args.seed} rng={RNG_ALGORITHM} "
        f"version=wealthshare {__version__}\n"
    )
    fh.write("omega\n")
    for w in omega:
        fh.write(f"{w:.17g}\n")


def _cmd_classify(args, fh):
    _dump_json(classify(_ensemble(args), args.resolution).as_dict(), fh)


def _cmd_critical(args, fh):
    if not args.alpha > 0 or not math.isfinite(args.alpha):
        raise UsageError(f"--alpha must be a finite number > 0, got {args.alpha}")
    _dump_json(critical_thresholds(args.kind, args.alpha, args.resolution).as_dict(), fh)


def _cmd_validate(args, fh):
    if args.n < 10_000:
        raise UsageError("--n must be >= 10000")
    if args.bins < 10:
        raise UsageError("--bins must be >= 10")
    _dump_json(compare(_ensemble(args), args.n, args.bins, args.seed).as_dict(), fh)


def _cmd_sweep(args, fh):
    for flag, value in (("--delta-min", args.delta_min), ("--delta-max", args.delta_max)):
        if not 0 < value < 1:
            raise UsageError(f"{flag} must lie in (0, 1), got {value}")
    try:
        spec = SweepSpec(
            kind=args.kind,
            alpha_range=(args.alpha_min, args.alpha_max),
            ln_delta_range=(math.log(args.delta_min), math.log(args.delta_max)),
            alpha_steps=args.alpha_steps,
            delta_steps=args.delta_steps,
            resolution=args.resolution,
        )
    except DomainError as exc:
        raise UsageError(str(exc))
    paths = export(sweep(spec, n_jobs=args.jobs), args.out)
    for path in paths:
        fh.write(path + "\n")


_COMMANDS = {
    "pdf": _cmd_pdf,
    "sample": _cmd_sample,
    "classify": _cmd_classify,
    "critical": _cmd_critical,
    "validate": _cmd_validate,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"wealthshare: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    buffer = io.StringIO()
    try:
        out = buffer if args.command != "sweep" else sys.stdout
        _COMMANDS[args.command](args, out)
    except (UsageError, DomainError) as exc:
        print(f"wealthshare {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ConvergenceError, ValueError) as exc:
        print(f"wealthshare {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"wealthshare {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    text = buffer.getvalue()
    if getattr(args, "out", None) and args.command != "sweep":
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"wealthshare {args.command}: cannot write {args.out}: {exc.strerror}",
                  file=sys.stderr)
            return EXIT_NUMERICAL
    else:
        with contextlib.suppress(BrokenPipeError):
            sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
