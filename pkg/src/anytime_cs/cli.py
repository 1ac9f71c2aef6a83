"""Command-line interface.

Subcommands: boundary, confseq, ate, covariance, simulate, tune.  Input rows
are comma, tab or whitespace separated; output is comma separated (``--tsv``
for tabs) with 10 significant digits.  ``CONFSEQ_THREADS`` caps parallelism.

Exit codes: 0 ok, 2 usage or domain error, 3 I/O error.

Boundary flags map onto config keys as follows (``--config FILE`` reads the
same keys as ``key=value`` lines, flags override the file):

    --kind kind        --alpha alpha     --l0 l0          --family family
    --lambda lambda    --eta eta         --s s            --m m
    --c c              --rho rho         --opt-time opt_time
    --g g              --h h             --density density
    --lambda-bar lambda_bar              --A A            --cap-v v_max
    --convert-to convert_to              --row row
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Iterator, Sequence

import numpy as np

from . import __version__
from ._errors import ConvergenceError, DomainError, UnsupportedConversionError, UnsupportedStrategyError
from .boundaries import build_boundary, mixture_boundary, parse_config, tune_rho_for_time
from .confseq import (
    AteState,
    BernoulliFamilyStrategy,
    BetaBinomialStrategy,
    EmpiricalBernsteinStrategy,
    HoeffdingStrategy,
    NaiveSNStrategy,
    RunningIntersection,
    VarianceStrategy,
    ate_update,
    hoeffding_boundary,
)
from .matrix import CovStreamState, SymMatrix, covariance_boundary, covariance_cs
from .sim import PRESETS, preset, run_scenario

EXIT_USAGE = 2
EXIT_IO = 3

BOUNDARY_FLAGS = {
    "kind": str, "alpha": float, "l0": float, "family": str, "lambda": float, "eta": float,
    "s": float, "m": float, "c": float, "rho": float, "opt_time": float, "g": float, "h": float,
    "density": str, "lambda_bar": float, "A": float, "v_max": float, "convert_to": str, "row": int,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.10g}"


class Writer:
    def __init__(self, out, sep: str):
        self.out = out
        self.sep = sep

    def row(self, *values) -> None:
        self.out.write(self.sep.join(v if isinstance(v, str) else fmt(v) for v in values) + "\n")


def read_rows(path: str | None) -> Iterator[tuple[int, list[str]]]:
    """Iterator of (line number, fields), skipping blanks and # comments.

    The file is opened immediately so that I/O errors surface before any output.
    """
    try:
        fh = sys.stdin if path in (None, "-") else open(path)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror}", EXIT_IO) from None
    return _rows(fh)


def _rows(fh) -> Iterator[tuple[int, list[str]]]:
    try:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield n, line.replace(",", " ").split()
    finally:
        if fh is not sys.stdin:
            fh.close()


def floats(n: int, fields: Sequence[str], k: int | None = None) -> list[float]:
    if k is not None and len(fields) != k:
        raise CliError(f"line {n}: expected {k} fields, got {len(fields)}")
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise CliError(f"line {n}: non-numeric field in {' '.join(fields)!r}") from None


# ---------------------------------------------------------------- subcommands

def boundary_spec(args) -> dict:
    spec: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                spec.update(parse_config(fh.read()))
        except OSError as exc:
            raise CliError(f"cannot read {args.config}: {exc.strerror}", EXIT_IO) from None
    for key in BOUNDARY_FLAGS:
        val = getattr(args, "b_" + key)
        if val is not None:
            spec[key] = val
    spec.setdefault("alpha", 0.05)
    if "kind" not in spec:
        raise CliError("boundary needs --kind (or kind= in --config)")
    return spec


def cmd_boundary(args, w: Writer) -> None:
    u = build_boundary(boundary_spec(args))
    if args.print_config:
        sys.stdout.write(u.to_config())
        return
    if args.v:
        v = np.asarray(args.v, dtype=float)
    else:
        if not (0 < args.v_min < args.v_max) or args.v_points < 1:
            raise CliError("need 0 < --v-min < --v-max and --v-points >= 1")
        v = np.logspace(math.log10(args.v_min), math.log10(args.v_max), args.v_points)
    vals = np.atleast_1d(u(v))
    w.row("v", "u")
    for vi, ui in zip(v, vals):
        w.row(vi, ui)


def make_strategy(args):
    name = args.strategy
    alpha = args.alpha
    if name == "hoeffding":
        bd = mixture_boundary("normal2", {"rho": args.rho}, alpha) if args.rho else \
            hoeffding_boundary(args.a, args.b, alpha, args.opt_time)
        return HoeffdingStrategy(args.a, args.b, alpha, boundary=bd)
    if name == "empirical-bernstein":
        bd = None
        if args.rho:
            bd = mixture_boundary("gammaexp", {"rho": args.rho, "c": args.b - args.a}, alpha / 2)
        return EmpiricalBernsteinStrategy(args.a, args.b, alpha, opt_var=args.opt_var,
                                          closed_form=args.closed_form, boundary=bd)
    if name == "naive-sn":
        rho = args.rho or tune_rho_for_time(args.opt_var or 500.0, alpha)
        return NaiveSNStrategy(alpha=alpha, boundary=mixture_boundary("normal2", {"rho": rho}, alpha))
    if name == "beta-binomial":
        return BetaBinomialStrategy(args.a, args.b, alpha, args.opt_time, kappa=args.kappa)
    if name == "bernoulli-family":
        return BernoulliFamilyStrategy(alpha, args.opt_time)
    if name == "variance":
        return VarianceStrategy(alpha, args.opt_time)
    raise CliError(f"unknown strategy {name}")


def cmd_confseq(args, w: Writer) -> None:
    strat = make_strategy(args)
    rows = read_rows(args.input)
    if args.null is not None and not strat.uniform:
        raise CliError(f"{args.strategy} intervals are not uniformly valid; --null is unavailable")
    inter = RunningIntersection() if args.intersect else None
    header = ["t", "lower", "upper"]
    if inter:
        header.append("empty")
    if args.null is not None:
        header.append("p_value")
    w.row(*header)
    best = 1.0
    for n, fields in rows:
        (x,) = floats(n, fields, 1)
        try:
            ci = strat.update(x)
        except DomainError as exc:
            raise CliError(f"line {n}: {exc}") from None
        out = [ci.t]
        if inter:
            ci = inter.update(ci)
            out += [ci.lower, ci.upper, ci.empty]
        else:
            out += [ci.lower, ci.upper]
        if args.null is not None:
            best = min(best, strat.p_value(args.null))
            out.append(best)
        w.row(*out)


def cmd_ate(args, w: Writer) -> None:
    c = 2.0 / args.p_min
    rho = args.rho if args.rho else tune_rho_for_time(args.opt_var, args.alpha)
    bd = mixture_boundary("gammaexp", {"rho": rho, "c": c}, args.alpha / 2)
    st = AteState(p_min=args.p_min)
    rows = read_rows(args.input)
    w.row("t", "estimate", "lower", "upper", "v")
    for n, fields in rows:
        if len(fields) not in (3, 5):
            raise CliError(f"line {n}: expected z,p,y or z,p,y,pred0,pred1")
        vals = floats(n, fields)
        z = vals[0]
        if z not in (0.0, 1.0):
            raise CliError(f"line {n}: treatment must be 0 or 1")
        preds = (vals[3], vals[4]) if len(vals) == 5 else None
        try:
            ci = ate_update(st, int(z), vals[1], vals[2], bd, preds=preds)
        except DomainError as exc:
            raise CliError(f"line {n}: {exc}") from None
        w.row(ci.t, st.estimate, ci.lower, ci.upper, st.v)


def cmd_covariance(args, w: Writer) -> None:
    st = None
    bd = None
    check = None
    if args.check:
        try:
            entries = [float(x) for x in args.check.replace(";", ",").split(",")]
        except ValueError:
            raise CliError(f"--check needs numeric entries, got {args.check!r}") from None
        d = int(round((math.sqrt(8 * len(entries) + 1) - 1) / 2))
        if d * (d + 1) // 2 != len(entries) or (args.dim and d != args.dim):
            raise CliError(f"--check needs d(d+1)/2 upper-triangle entries, got {len(entries)}")
        check = SymMatrix(d, entries)
    for n, fields in read_rows(args.input):
        x = floats(n, fields)
        if st is None:
            if args.dim and len(x) != args.dim:
                raise CliError(f"line {n}: expected {args.dim} coordinates")
            d = len(x)
            if check is not None and check.dim != d:
                raise CliError(f"line {n}: --check matrix has dimension {check.dim}, data has {d}")
            st = CovStreamState(d, args.b)
            bd = covariance_boundary(args.b, d, args.alpha, args.eta, args.lambda_bar, args.s)
            names = [f"s{i}{j}" for i in range(d) for j in range(i, d)]
            w.row("t", *names, "ball_radius", *(["contains"] if check else []))
        if len(x) != st.dim:
            raise CliError(f"line {n}: expected {st.dim} coordinates, got {len(x)}")
        try:
            est = covariance_cs(st, x, bd)
        except DomainError as exc:
            raise CliError(f"line {n}: {exc}") from None
        extra = [est.contains(check)] if check else []
        w.row(est.t, *est.sigma_hat.entries, est.conservative_radius, *extra)


def cmd_simulate(args, w: Writer) -> None:
    horizon = args.horizon
    if args.full_scale and horizon is None:
        horizon = 100_000
    strategies = tuple(args.strategies.split(",")) if args.strategies else None
    sc = preset(args.scenario, reps=args.reps, horizon=horizon, seed=args.seed, alpha=args.alpha,
                strategies=strategies)
    report = run_scenario(sc)
    w.out.write(report.to_table(sep=w.sep))


def cmd_tune(args, w: Writer) -> None:
    alpha = 2 * args.alpha if args.one_sided else args.alpha
    w.row("rho")
    w.row(tune_rho_for_time(args.opt_time, alpha, args.l0))


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tsv", action="store_true", help="tab-separated output")

    p = argparse.ArgumentParser(prog="anytime-cs", description="Time-uniform confidence sequences.",
                                allow_abbrev=False)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("boundary", parents=[common], allow_abbrev=False, help="tabulate a uniform boundary")
    b.add_argument("--config", help="key=value boundary spec file")
    for key, typ in BOUNDARY_FLAGS.items():
        flag = "--cap-v" if key == "v_max" else "--" + key.replace("_", "-")
        b.add_argument(flag, dest="b_" + key, type=typ, metavar=key.upper(), help=f"boundary {key}")
    b.add_argument("--v", type=float, action="append", help="intrinsic time (repeatable)")
    b.add_argument("--v-min", type=float, default=1.0)
    b.add_argument("--v-max", type=float, default=1e6)
    b.add_argument("--v-points", type=int, default=13)
    b.add_argument("--print-config", action="store_true", help="print the spec as key=value lines")

    c = sub.add_parser("confseq", parents=[common], allow_abbrev=False, help="confidence sequence for a stream")
    c.add_argument("--strategy", required=True,
                   choices=["hoeffding", "beta-binomial", "empirical-bernstein", "naive-sn", "variance",
                            "bernoulli-family"])
    c.add_argument("--alpha", type=float, default=0.05, help="total error of the interval")
    c.add_argument("--a", type=float, default=0.0, help="support lower end")
    c.add_argument("--b", type=float, default=1.0, help="support upper end")
    c.add_argument("--rho", type=float, help="mixture precision (overrides tuning)")
    c.add_argument("--kappa", type=float, help="relative beta-binomial precision")
    c.add_argument("--opt-time", type=float, default=500.0, help="sample size to tune for")
    c.add_argument("--opt-var", type=float, help="intrinsic time to tune variance-based strategies for")
    c.add_argument("--closed-form", action="store_true", help="stitched empirical-Bernstein radius")
    c.add_argument("--null", type=float, help="null mean for always-valid p-values")
    c.add_argument("--intersect", action="store_true", help="report the running intersection")
    c.add_argument("--input", help="input file (default stdin)")

    a = sub.add_parser("ate", parents=[common], allow_abbrev=False,
                       help="average treatment effect sequence from rows z,p,y[,pred0,pred1]")
    a.add_argument("--alpha", type=float, default=0.05, help="total error of the interval")
    a.add_argument("--p-min", type=float, default=0.5)
    a.add_argument("--rho", type=float, help="gamma-exponential precision")
    a.add_argument("--opt-var", type=float, default=100.0, help="intrinsic time to tune rho for")
    a.add_argument("--input")

    v = sub.add_parser("covariance", parents=[common], allow_abbrev=False,
                       help="covariance confidence sequence from vector rows")
    v.add_argument("--b", type=float, required=True, help="bound on squared norms")
    v.add_argument("--dim", type=int, help="expected dimension")
    v.add_argument("--alpha", type=float, default=0.05)
    v.add_argument("--eta", type=float, default=1.1)
    v.add_argument("--lambda-bar", type=float, default=0.262)
    v.add_argument("--s", type=float, default=1.4)
    v.add_argument("--check", help="upper-triangle entries of a matrix to test for membership")
    v.add_argument("--input")

    s = sub.add_parser("simulate", parents=[common], allow_abbrev=False, help="run a Monte Carlo scenario")
    s.add_argument("--scenario", required=True, choices=sorted(PRESETS))
    s.add_argument("--reps", type=int)
    s.add_argument("--horizon", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=float)
    s.add_argument("--strategies", help="comma-separated subset of the scenario's strategies")
    s.add_argument("--full-scale", action="store_true", help="horizon 100000 unless --horizon is given")

    t = sub.add_parser("tune", parents=[common], allow_abbrev=False, help="normal-mixture rho for a target time")
    t.add_argument("--opt-time", type=float, required=True)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--l0", type=float, default=1.0)
    t.add_argument("--one-sided", action="store_true", help="tune for a one-sided bound")
    return p


COMMANDS = {"boundary": cmd_boundary, "confseq": cmd_confseq, "ate": cmd_ate,
            "covariance": cmd_covariance, "simulate": cmd_simulate, "tune": cmd_tune}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    w = Writer(sys.stdout, "\t" if args.tsv else ",")
    try:
        COMMANDS[args.command](args, w)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DomainError, UnsupportedConversionError, UnsupportedStrategyError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
