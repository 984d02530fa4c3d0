"""Command line entry point: ``onebitcs <command> ...``.

Exit codes: 0 success, 2 invalid arguments or config, 3 solver failure,
4 infeasible instance.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import harness
from .adaptive import AdaptiveConfig, Encoder, adapt_recover
from .decoders import LogSumConfig, decode_l0_bruteforce, decode_l1, decode_logsum
from .exceptions import InfeasibleMeasurementsError, InvalidArgumentError, SolverFailure
from .model import (
    DeviationSpec,
    format_bits,
    format_matrix,
    format_vector,
    gen_deviation,
    gen_gaussian_matrix,
    gen_sparse_signal,
    measure,
    parse_bits,
    parse_matrix,
    parse_vector,
    quantize,
    thresholds_from_deviation,
)

log = logging.getLogger("onebitcs")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_INFEASIBLE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read {path}: {exc}") from exc


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _write(directory, name, text):
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    x = gen_sparse_signal(args.n, args.K, rng)
    A = gen_gaussian_matrix(args.m, args.n, rng)
    for p in (_write(args.out, "signal.csv", format_vector(x.dense())),
              _write(args.out, "matrix.csv", format_matrix(A))):
        print(p)


def cmd_encode(args):
    A = parse_matrix(_read(args.matrix))
    x = parse_vector(_read(args.signal))
    y = measure(A, x)
    delta = gen_deviation(DeviationSpec.parse(args.deviation), A.shape[0], np.random.default_rng(args.seed))
    tau = thresholds_from_deviation(y, delta, sign=+1 if args.offset == "plus" else -1)
    q = quantize(y, tau)
    for p in (_write(args.out, "tau.csv", format_vector(tau)),
              _write(args.out, "bits.csv", format_bits(q.bits)),
              _write(args.out, "delta.csv", format_vector(delta))):
        print(p)


def cmd_decode(args):
    A = parse_matrix(_read(args.matrix))
    tau = parse_vector(_read(args.tau))
    bits = parse_bits(_read(args.bits))
    if args.decoder == "l1":
        res = decode_l1(A, tau, bits)
    elif args.decoder == "logsum":
        res = decode_logsum(A, tau, bits, LogSumConfig(args.epsilon_smooth, args.max_outer))
    else:
        res = decode_l0_bruteforce(A, tau, bits, args.kmax)
    _emit(format_vector(res.xhat), args.out)
    log.info("objective=%.17g consistent=%s outer_iterations=%d",
             res.objective, res.consistency_ok, res.outer_iterations)


def cmd_adapt(args):
    A = parse_matrix(_read(args.matrix))
    x = parse_vector(_read(args.signal))
    cfg = AdaptiveConfig(
        xi0=args.xi0, decay=args.decay, omega=args.omega, max_rounds=args.max_rounds,
        deviation=DeviationSpec.parse(args.deviation), decoder=args.decoder,
    )
    trace = adapt_recover(Encoder.from_signal(A, x), A, cfg, np.random.default_rng(args.seed), x_true=x)
    _emit(trace.to_csv(), args.out)


def _experiment_config(args, experiment):
    overrides = dict(master_seed=args.seed, trials=args.trials, output=args.out,
                     threads=args.threads, decoder=args.decoder)
    if getattr(args, "full_scale", False):
        overrides["full_scale"] = True
    if args.config:
        cfg = harness.ExperimentConfig.from_json(args.config, **overrides)
        if experiment and cfg.experiment != experiment:
            raise InvalidArgumentError(f"config is for {cfg.experiment!r}, not {experiment!r}")
        return cfg
    return harness.ExperimentConfig.defaults(experiment, **overrides)


def cmd_experiment(args):
    cfg = _experiment_config(args, args.name)
    text = harness.run_experiment(cfg)
    _emit(text, cfg.output)


def cmd_replay(args):
    rows = harness.read_rows(_read(args.csv))
    trial_rows = [r for r in rows if r.get("seed") == str(args.seed) and r.get("row_type") == "trial"]
    if not trial_rows:
        raise InvalidArgumentError(f"no trial row in {args.csv} carries seed {args.seed}")
    cfg = _experiment_config(args, trial_rows[0]["experiment"])
    fresh = harness.replay(cfg, rows, args.seed)
    columns = list(fresh[0].keys())
    lines = [",".join(columns)] + [",".join(r[c] for c in columns) for r in fresh]
    _emit("\n".join(lines) + "\n", args.out)
    stored = [{c: r.get(c, "") for c in columns} for r in trial_rows]
    if stored != fresh:
        log.error("replayed rows differ from %s", args.csv)
        return 1
    log.info("replay of seed %d matches %d stored row(s)", args.seed, len(fresh))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="onebitcs", description="One-bit compressed sensing with designed thresholds.")
    p.add_argument("-v", "--verbose", action="store_true")
    # -v is also accepted after the subcommand
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[verbose], **kw)

    g = sub.add_parser("gen", help="generate a sparse signal and a Gaussian sensing matrix")
    g.add_argument("--n", type=int, default=50)
    g.add_argument("--K", type=int, default=3)
    g.add_argument("--m", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("encode", help="quantize A @ x at thresholds y +- delta")
    e.add_argument("--matrix", required=True)
    e.add_argument("--signal", required=True)
    e.add_argument("--deviation", default="rademacher:0.001", help="kind:scale, e.g. gaussian:0.1")
    e.add_argument("--offset", choices=("plus", "minus"), default="plus", help="tau = y + delta or y - delta")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=".")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="recover a signal from thresholds and bits")
    d.add_argument("--matrix", required=True)
    d.add_argument("--tau", required=True)
    d.add_argument("--bits", required=True)
    d.add_argument("--decoder", choices=("l1", "logsum", "l0"), default="l1")
    d.add_argument("--kmax", type=int, default=1, help="sparsity cap for the l0 decoder")
    d.add_argument("--epsilon-smooth", type=float, default=0.01)
    d.add_argument("--max-outer", type=int, default=10)
    d.add_argument("--out", default="-")
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("adapt", help="run the adaptive threshold loop against a known signal")
    a.add_argument("--matrix", required=True)
    a.add_argument("--signal", required=True)
    a.add_argument("--xi0", type=float, default=1.0)
    a.add_argument("--decay", type=float, default=10.0)
    a.add_argument("--omega", type=float, default=0.01)
    a.add_argument("--max-rounds", type=int, default=20)
    a.add_argument("--deviation", default="gaussian:1")
    a.add_argument("--decoder", choices=("l1", "logsum"), default="l1")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_adapt)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config; flags override its fields")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--decoder", choices=("l1", "logsum"), default=None)

    x = sub.add_parser("experiment", help="run a Monte-Carlo experiment and write CSV")
    x.add_argument("name", choices=harness.EXPERIMENTS)
    x.add_argument("--full-scale", action="store_true", help="use the large trial counts")
    common(x)
    x.set_defaults(func=cmd_experiment)

    r = sub.add_parser("replay", help="recompute the trial rows carrying one seed")
    r.add_argument("--csv", required=True, help="CSV written by 'experiment'")
    common(r)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "replay" and args.seed is None:
        log.error("replay needs --seed")
        return EXIT_INVALID
    try:
        rc = args.func(args)
    except InvalidArgumentError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except SolverFailure as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except InfeasibleMeasurementsError as exc:
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
