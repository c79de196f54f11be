"""Command-line front end: ``snnls gen | solve | bench | summarize``.

Exit codes: 0 success, 1 usage or I/O error, 2 solver did not converge
(the result is still written), 3 singular matrix or divergence.
Machine-readable output goes to stdout or files; logs go to stderr.
"""

import argparse
from importlib import resources
import json
import logging
import os
import sys

from .datagen import DictionaryEnsemble, SignalDistribution, SIGNAL_KINDS, DICT_KINDS, TrialSpec, gen_instance
from .exceptions import DivergenceError, DomainError, SingularMatrixError
from . import experiments as ex
from .instance_io import read_instance, write_instance, write_solution
from .metrics import mse, support_error

logger = logging.getLogger("snnls")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(value, default=0):
    """Flag value, else ``$SNNLS_SEED``, else ``default``."""
    if value is not None:
        return value
    env = os.environ.get("SNNLS_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"SNNLS_SEED must be an integer, got {env!r}") from None
    return default


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_instance_flags(p, required_m=True, lists=False):
    p.add_argument("--n", type=int, required=required_m, help="number of measurements N")
    p.add_argument("--m", type=int, required=required_m, help="number of coefficients M")
    p.add_argument("--k", type=_int_list if lists else int, default=[10] if lists else 10,
                   help="cardinality K" + (" (comma list)" if lists else ""))
    p.add_argument("--dist", choices=SIGNAL_KINDS, default="rect-gaussian")
    p.add_argument("--dict", dest="dict_kind", choices=DICT_KINDS, default="gaussian")
    p.add_argument("--rho", type=_float_list if lists else float, default=[0.0] if lists else 0.0,
                   help="Toeplitz column correlation" + (" (comma list)" if lists else ""))
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--snr", type=float, help="SNR in dB")
    noise.add_argument("--noiseless", action="store_true", help="y = Phi x (default)")
    p.add_argument("--seed", type=int, help="master seed (fallback: $SNNLS_SEED, then 0)")


def build_parser():
    parser = _Parser(prog="snnls", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write one instance file")
    _add_instance_flags(g)
    g.add_argument("--trial", type=int, default=0, help="trial index within the seed stream")
    g.add_argument("--out", required=True, help="instance file to write")

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--in", dest="inp", required=True, help="instance file")
    s.add_argument("--solver", choices=ex.SOLVERS, default="da")
    s.add_argument("--point-estimate", choices=("mean", "mode"), default="mean")
    s.add_argument("--out", help="solution file (default: <in>.sol)")
    s.add_argument("--prune", choices=("on", "off"), default="on")
    s.add_argument("--damping", type=float, help="GAMP damping on s")
    s.add_argument("--noiseless", action="store_true",
                   help="treat sigma2 as a numerical floor (baseline tuning)")
    s.add_argument("--seed", type=int, help="MCMC seed (fallback: $SNNLS_SEED, then 0)")

    b = sub.add_parser("bench", help="run a benchmark sweep")
    b.add_argument("--recipe", help="recipe file, or the name of a packaged recipe (e.g. noiseless_sweep)")
    _add_instance_flags(b, required_m=False, lists=True)
    b.add_argument("--solvers", default="da,lmmse,gamp-sp,l1,nnomp")
    b.add_argument("--trials", type=int)
    b.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    b.add_argument("--prune", choices=("on", "off", "both"), default="on")
    b.add_argument("--point-estimate", choices=("mean", "mode"), default="mean")
    b.add_argument("--no-timing", action="store_true", help="leave wall_ms empty (byte-stable CSV)")
    b.add_argument("--out", required=True, help="output directory")

    m = sub.add_parser("summarize", help="aggregate one or more trial CSV files")
    m.add_argument("inputs", nargs="+")
    m.add_argument("--json", help="also write the aggregate as JSON here")
    return parser


def _load_recipe(name):
    if os.path.exists(name):
        with open(name) as fh:
            return ex.parse_recipe(fh.read())
    stem = name[:-4] if name.endswith(".txt") else name
    try:
        text = resources.files("snnls").joinpath("recipes", stem + ".txt").read_text()
    except FileNotFoundError:
        raise DomainError(f"no recipe file or packaged recipe named {name!r}") from None
    return ex.parse_recipe(text)


def cmd_gen(args):
    spec = TrialSpec(n=args.n, m=args.m, k=args.k, signal=SignalDistribution(args.dist),
                     dictionary=DictionaryEnsemble(args.dict_kind, args.rho),
                     snr_db=args.snr, trials=1, master_seed=_seed(args.seed))
    problem, x_gen, meta = gen_instance(spec, args.trial)
    write_instance(args.out, problem, x_gen)
    logger.info("wrote %s (seed %d, %d clipped)", args.out, meta["seed"], meta["clipped"])
    return EXIT_OK


def cmd_solve(args):
    problem, x_gen = read_instance(args.inp)
    overrides = {}
    if args.damping is not None:
        if not args.solver.startswith("gamp"):
            raise DomainError("--damping applies to the GAMP solvers only")
        overrides["damping"] = args.damping
    sol = ex.run_solver(args.solver, problem, prune=args.prune == "on", noiseless=args.noiseless,
                        seed=_seed(args.seed), **overrides)
    out = args.out or args.inp + ".sol"
    write_solution(out, args.solver, sol)
    x = sol.point_estimate(args.point_estimate)
    fields = [f"solver={args.solver}", f"estimate={args.point_estimate}",
              f"converged={int(sol.converged)}", f"iterations={sol.iterations}",
              f"wall_ms={1e3 * sol.wall_time:.3f}"]
    if x_gen is not None:
        fields += [f"mse={mse(x, x_gen):.6g}", f"pe={support_error(x, x_gen):.6g}"]
    print(" ".join(fields))
    if not sol.converged:
        logger.warning("%s did not converge after %d iterations", args.solver, sol.iterations)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_bench(args):
    if args.recipe:
        specs = _load_recipe(args.recipe)
    else:
        if args.n is None or args.m is None:
            raise DomainError("bench needs --recipe or both --n and --m")
        specs = [TrialSpec(n=args.n, m=args.m, k=k, signal=SignalDistribution(args.dist),
                           dictionary=DictionaryEnsemble(args.dict_kind, rho), snr_db=args.snr,
                           solvers=tuple(s.strip() for s in args.solvers.split(",") if s.strip()),
                           trials=10 if args.trials is None else args.trials,
                           master_seed=_seed(args.seed))
                 for rho in args.rho for k in args.k]
        for s in specs[0].solvers:
            if s not in ex.SOLVERS:
                raise DomainError(f"unknown solver {s!r}")
    specs = ex.with_trials(specs, args.trials, _seed(args.seed, default=None))
    prune_modes = {"on": (True,), "off": (False,), "both": (True, False)}[args.prune]
    records = ex.run_benchmark(specs, workers=max(1, args.workers), prune_modes=prune_modes,
                               point=args.point_estimate)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "trials.csv"), "w", newline="") as fh:
        ex.write_csv(records, fh, timing=not args.no_timing)
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        fh.write(ex.summary_json(records, specs))
    summary = ex.summarize(records)
    if summary:
        print(ex.format_table(summary), end="")
    failed = sum(r.failed for r in records)
    if failed:
        logger.warning("%d of %d solver runs failed", failed, len(records))
    if records and failed == len(records):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_summarize(args):
    records = []
    for path in args.inputs:
        with open(path, newline="") as fh:
            records.extend(ex.read_csv(fh))
    summary = ex.summarize(records)
    print(ex.format_table(summary), end="")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(summary, fh, indent=2)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "summarize": cmd_summarize}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return COMMANDS[args.command](args)
    except (SingularMatrixError, DivergenceError) as err:
        diag = getattr(err, "diagnostics", None)
        logger.error("%s%s", err, f" {diag}" if diag else "")
        return EXIT_NUMERIC
    except (DomainError, OSError) as err:
        logger.error("%s", err)
        return EXIT_USAGE
