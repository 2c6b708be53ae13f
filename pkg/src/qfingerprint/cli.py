"""Command-line front end.

Exit codes: 0 success (or equal inputs for ``fingerprint``), 1 different
inputs, 2 usage or configuration error, 3 runtime failure.
"""

import argparse
import csv
import logging
import sys
import warnings

from . import config as cfgmod
from .bits import BitString, random_bits
from .optics import expected_counts
from .information import advantage_report
from .referee import DegenerateConfigError, Verdict, protocol_error_bound
from .simulate import CaseKind, compare_files, fibre_loss_db, run_experiment, sweep

EXIT_OK, EXIT_DIFFERENT, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

PAPER_N_GRID = (2_000_000, 40_000_000, 142_000_000, 1_000_000_000, 2_000_000_000)
PAPER_KM_GRID = (0, 10, 20)

SIMULATE_HEADER = ("trial", "case", "counts_d1", "counts_d0", "threshold", "verdict", "truth")
SWEEP_HEADER = (
    "n", "m", "mu", "arm_loss_db", "case", "mean_d1", "std_d1", "threshold", "epsilon",
    "q_bits", "c_limit_bits", "c_best_bits", "gamma", "error",
)  # fmt: skip
ANALYZE_HEADER = (
    "n", "m", "mu", "q_bits", "q_bits_low", "q_bits_high", "c_limit_bits", "c_best_bits",
    "gamma", "lambda_equal", "lambda_diff", "threshold", "epsilon",
)  # fmt: skip


class UsageError(Exception):
    pass


def fmt(value):
    """Locale-independent text for a CSV cell."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _int_list(text, name):
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise UsageError(f"{name} grid is empty")
    try:
        return [cfgmod._int(t) for t in items]
    except ValueError as exc:
        raise UsageError(f"bad {name} grid: {exc}") from None


def _cases(text):
    if text is None:
        return None
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("case list is empty")
    try:
        return [CaseKind(t) for t in items]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args, **extra):
    extra.setdefault("memory_budget", args.memory_budget)
    extra.setdefault("scratch_dir", args.scratch_dir)
    return cfgmod.load(args.config, args.set, **extra)


def _open_out(args):
    if args.output in (None, "-"):
        return sys.stdout, False
    return open(args.output, "w", encoding="utf-8", newline=""), True


def analyze_row(config):
    """Analytic quantities for one config, shared by ``analyze`` and ``sweep``."""
    m = config.m
    rule = protocol_error_bound(config.params, m, config.delta)
    info = advantage_report(
        config.n, config.params.mu_total, config.mu_rel_uncertainty, config.rate, config.epsilon_target
    )
    return {
        "n": config.n,
        "m": m,
        "mu": config.params.mu_total,
        "q_bits": info.q_bits,
        "q_bits_low": info.q_bits_low,
        "q_bits_high": info.q_bits_high,
        "c_limit_bits": info.c_limit_bits,
        "c_best_bits": info.c_best_known_bits,
        "gamma": info.gamma,
        "lambda_equal": expected_counts(config.params, m, 0.0).lambda_d1,
        "lambda_diff": expected_counts(config.params, m, config.delta).lambda_d1,
        "threshold": rule.threshold,
        "epsilon": rule.epsilon,
    }


def cmd_analyze(args):
    config = _load(args)
    row = analyze_row(config)
    if args.csv:
        out, close = _open_out(args)
        w = _writer(out)
        w.writerow(ANALYZE_HEADER)
        w.writerow([fmt(row[k]) for k in ANALYZE_HEADER])
        if close:
            out.close()
    else:
        width = max(map(len, ANALYZE_HEADER))
        for k in ANALYZE_HEADER:
            print(f"{k:<{width}}  {fmt(row[k])}")
    return EXIT_OK


def cmd_simulate(args):
    base = _load(args)
    cases = _cases(args.cases) or [base.case_kind]
    extra = {}
    if CaseKind.FILE_PAIR in cases:
        if not (args.file_a and args.file_b):
            raise UsageError("file_pair needs --file-a and --file-b")
        extra = {"file_a": args.file_a, "file_b": args.file_b}
    out, close = _open_out(args)
    try:
        w = _writer(out)
        w.writerow(SIMULATE_HEADER)
        for case in cases:
            summary = run_experiment(base.replace(case_kind=case, **extra))
            for t, o in enumerate(summary.outcomes):
                w.writerow([t, case, o.counts_d1, o.counts_d0, summary.threshold, o.verdict, o.truth])
    finally:
        if close:
            out.close()
    return EXIT_OK


def sweep_rows(rows):
    for r in rows:
        s = r.summary
        if s is None:
            yield [r.n, "", "", fmt(r.arm_loss_db), r.case] + [""] * 8 + [r.error]
            continue
        i = s.info
        yield [
            r.n, i.m, fmt(i.mu), fmt(r.arm_loss_db), r.case, fmt(s.mean_d1), fmt(s.std_d1), s.threshold,
            fmt(s.rule.epsilon), fmt(i.q_bits), fmt(i.c_limit_bits), fmt(i.c_best_known_bits), fmt(i.gamma), "",
        ]  # fmt: skip


def cmd_sweep(args):
    base = _load(args)
    n_values = _int_list(args.n_values, "n") if args.n_values is not None else list(PAPER_N_GRID)
    kms = _int_list(args.km, "km") if args.km is not None else list(PAPER_KM_GRID)
    for km in kms:
        try:
            fibre_loss_db(km)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    rows = sweep(base, n_values, kms, _cases(args.cases), workers=args.workers)
    out, close = _open_out(args)
    try:
        w = _writer(out)
        w.writerow(SWEEP_HEADER)
        w.writerows(sweep_rows(rows))
    finally:
        if close:
            out.close()
    return EXIT_RUNTIME if any(r.error for r in rows) else EXIT_OK


def cmd_fingerprint(args):
    config = _load(args)
    for path in (args.file_a, args.file_b):
        try:
            with open(path, "rb"):
                pass
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    verdict, summary, info = compare_files(args.file_a, args.file_b, config, n=args.n)
    o = summary.outcomes[0]
    print(f"verdict          {verdict}")
    print(f"n                {info.n}")
    print(f"m                {info.m}")
    print(f"distance         {fmt(o.distance)}")
    print(f"counts_d1        {o.counts_d1}")
    print(f"threshold        {summary.threshold}")
    print(f"epsilon          {fmt(summary.rule.epsilon)}")
    print(f"q_bits           {fmt(info.q_bits)}")
    print(f"c_limit_bits     {fmt(info.c_limit_bits)}")
    print(f"c_best_bits      {fmt(info.c_best_known_bits)}")
    print(f"gamma            {fmt(info.gamma)}")
    return EXIT_OK if verdict is Verdict.EQUAL else EXIT_DIFFERENT


def cmd_gen_input(args):
    if args.bytes < 1:
        raise UsageError("--bytes must be positive")
    n = 8 * args.bytes
    bits = random_bits(args.seed, n)
    if args.flip_bit:
        data = bits.to_bytes()
        buf = bytearray(data)
        for j in args.flip_bit:
            if not 0 <= j < n:
                raise UsageError(f"--flip-bit {j} outside [0, {n})")
            buf[j >> 3] ^= 1 << (j & 7)
        bits = BitString.from_bytes(bytes(buf))
    bits.write(args.path)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="qfingerprint", description="Coherent-state quantum fingerprinting simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log one line per sweep cell")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_config=None):
        sp.add_argument(
            "-c", "--config", default=default_config, required=default_config is None,
            help="config file, or one of " + ", ".join(cfgmod.BUILTIN_CONFIGS),
        )  # fmt: skip
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--memory-budget", type=float, default=cfgmod.ExperimentConfig.memory_budget,
                        help="encoder workspace in bytes")  # fmt: skip
        sp.add_argument("--scratch-dir", help="park transform spectra in temporary files here")

    sp = sub.add_parser("analyze", help="analytic bounds and decision rule, no sampling")
    common(sp)
    sp.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("simulate", help="sampled trials, one CSV row each")
    common(sp)
    sp.add_argument("--cases", help="comma-separated case kinds (default: the config's case_kind)")
    sp.add_argument("--file-a")
    sp.add_argument("--file-b")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="grid over input size and fibre length")
    common(sp)
    sp.add_argument("--n", dest="n_values", help="comma-separated input sizes (default: 2e6 to 2e9 in five steps)")
    sp.add_argument("--km", help="comma-separated fibre lengths in km (default: 0,10,20)")
    sp.add_argument("--cases", help="comma-separated case kinds (default: the config's case_kind)")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fingerprint", help="compare two files; exit 0 if equal, 1 if different")
    common(sp, "paper_20km")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--n", type=cfgmod._int, help="input bits (default: size of the longer file)")
    sp.set_defaults(func=cmd_fingerprint)

    sp = sub.add_parser("gen-input", help="write a seeded random file")
    sp.add_argument("path")
    sp.add_argument("--bytes", type=cfgmod._int, required=True)
    sp.add_argument("--seed", type=cfgmod._int, default=0)
    sp.add_argument("--flip-bit", type=cfgmod._int, action="append", metavar="J", help="invert bit J afterwards")
    sp.set_defaults(func=cmd_gen_input)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if hasattr(args, "memory_budget"):
        args.memory_budget = int(args.memory_budget)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except (UsageError, cfgmod.ConfigError, DegenerateConfigError) as exc:
            print(f"qfingerprint: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except Exception as exc:
            print(f"qfingerprint: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"qfingerprint: warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
