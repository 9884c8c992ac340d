"""Command line front end: run sweeps, print theory values, run the selftest.

Exit codes: 0 success, 1 configuration problem, 2 runtime failure (failed
trials above the tolerated rate, or selftest failures), 3 output I/O error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import analysis
from .errors import CorrlinkError, DomainError, TrialFailureError
from .harness import ExperimentConfig, StreamingMoments, format_csv, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrlink",
        description="Distributed correlation estimation: simulated protocols, "
        "bit accounting, and closed-form theory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo sweep from a config file")
    p_run.add_argument("config", help="path to a flat key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None, help="worker thread count")
    p_run.add_argument("--out", default=None, help="output CSV path (default: config, else stdout)")

    p_theory = sub.add_parser("theory", help="print closed-form values for one scheme")
    p_theory.add_argument("scheme", help="scheme id (threshold, max, yvec, xvec, clt, pareto, additive)")
    p_theory.add_argument("--k", type=float, required=True, help="bit budget")
    p_theory.add_argument("--rho", required=True,
                          help="correlation, comma-separated for vector schemes")
    p_theory.add_argument("--alpha", type=float, default=None, help="power-law tail exponent")
    p_theory.add_argument("--b0", type=float, default=0.3, help="weak-coordinate band half-width")
    p_theory.add_argument("--sigma-offdiag", type=float, default=0.0,
                          help="equicorrelated off-diagonal of the X covariance")
    p_theory.add_argument("--x-law", default="laplace", dest="x_law",
                          help="X marginal for the additive scheme (laplace, gaussian, pareto)")

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def _cmd_run(args) -> int:
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = ExperimentConfig.from_file(args.config, **overrides)
    except (CorrlinkError, OSError, ValueError) as exc:
        print(f"corrlink: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_sweep(config, threads=args.threads)
    except TrialFailureError as exc:
        print(f"corrlink: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except CorrlinkError as exc:
        print(f"corrlink: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = format_csv(rows)
    out_path = args.out if args.out is not None else config.out
    if out_path is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"corrlink: cannot write {out_path!r}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_theory(args) -> int:
    try:
        rho_parts = [float(part) for part in args.rho.split(",") if part.strip() != ""]
        kwargs = {"k": args.k}
        if args.scheme in ("yvec", "xvec", "xvec_exact"):
            kwargs["rho"] = np.array(rho_parts)
        else:
            if len(rho_parts) != 1:
                raise DomainError("scalar schemes take a single correlation value")
            kwargs["rho"] = rho_parts[0]
        if args.scheme in ("xvec", "xvec_exact"):
            kwargs["b0"] = args.b0
            if args.sigma_offdiag != 0.0:
                from .linalg import CorrelationMatrix

                d = len(rho_parts)
                kwargs["sigma_x"] = CorrelationMatrix.equicorrelated(d, args.sigma_offdiag)
        if args.scheme == "pareto":
            if args.alpha is None:
                raise DomainError("the pareto scheme needs --alpha")
            kwargs["alpha"] = args.alpha
        if args.scheme == "additive":
            from .sources import ParetoTwoSided, StdNormal, UnitLaplace

            laws = {"laplace": UnitLaplace, "gaussian": StdNormal}
            name = args.x_law.lower()
            if name == "pareto":
                if args.alpha is None:
                    raise DomainError("the pareto X marginal needs --alpha")
                kwargs["x_law"] = ParetoTwoSided(alpha=args.alpha)
            elif name in laws:
                kwargs["x_law"] = laws[name]()
            else:
                raise DomainError(f"unknown X marginal {args.x_law!r}")
        report = analysis.build_report(args.scheme, **kwargs)
    except (CorrlinkError, ValueError) as exc:
        print(f"corrlink: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"scheme: {report.scheme}")
    print(f"k: {report.k:.10g}")
    if report.exact_variance is not None:
        print(f"exact_variance: {report.exact_variance:.10g}")
    else:
        print("exact_variance: n/a")
    print(f"asymptotic_variance: {report.asymptotic_variance:.10g}")
    print(f"crlb_trace: {report.crlb_trace:.10g}")
    print("fisher:")
    for row in np.atleast_2d(report.fisher):
        print("  " + "  ".join(f"{value:.10g}" for value in row))
    if report.bounds:
        print("bounds:")
        for label, value in report.bounds:
            print(f"  {label}: {value:.10g}")
    return EXIT_OK


def _selftest_checks():
    from .protocol import golomb_decode, golomb_encode, golomb_length
    from .statmath import geometric_entropy, geometric_entropy_inv, qfunc, qfunc_inv

    def check_roundtrips():
        for x in np.linspace(-6.0, 37.0, 25):
            back = qfunc_inv(qfunc(x))
            assert abs(back - x) <= 1e-8 * max(1.0, abs(x)), f"tail roundtrip failed at {x}"
        for k in (5.0, 20.0, 60.0):
            p = geometric_entropy_inv(k)
            assert abs(geometric_entropy(p) - k) <= 1e-8 * k, f"entropy roundtrip failed at {k}"

    def check_golomb():
        for m in (1, 3, 8, 37):
            for j in list(range(1, 200)) + [1000, 12345]:
                word = golomb_encode(j, m)
                assert len(word) == golomb_length(j, m), f"length mismatch at {j}, {m}"
                decoded, used = golomb_decode(word, m)
                assert decoded == j and used == len(word), f"roundtrip failed at {j}, {m}"

    def check_moments():
        rng = np.random.default_rng(7)
        values = rng.standard_normal(100_000) * 3.0 + 1.0
        sm = StreamingMoments()
        for start in range(0, values.size, 1024):
            sm.add(values[start:start + 1024])
        mean = float(values.mean())
        var = float(np.mean((values - mean) ** 2))
        assert abs(sm.mean - mean) <= 1e-9 * max(1.0, abs(mean)), "streaming mean drifted"
        assert abs(sm.variance - var) <= 1e-9 * var, "streaming variance drifted"

    def check_determinism():
        text = "scheme = threshold\ngrid.k = 10\ngrid.rho = 0.5\ntrials = 256\nseed = 11"
        config = ExperimentConfig.from_text(text)
        csv_1 = format_csv(run_sweep(config, threads=1))
        csv_2 = format_csv(run_sweep(config, threads=4))
        assert csv_1 == csv_2, "thread count changed the output bytes"

    def check_monte_carlo():
        text = "scheme = threshold\ngrid.k = 10\ngrid.rho = 0.3\ntrials = 20000\nseed = 3"
        config = ExperimentConfig.from_text(text)
        row = run_sweep(config)[0]
        gap = abs(row.variance - row.theory_exact)
        assert gap <= 6.0 * row.variance_se, (
            f"variance {row.variance:.6g} vs exact {row.theory_exact:.6g} "
            f"outside 6 standard errors ({row.variance_se:.3g})"
        )

    return [
        ("tail and entropy roundtrips", check_roundtrips),
        ("index code roundtrip", check_golomb),
        ("streaming moments", check_moments),
        ("thread determinism", check_determinism),
        ("monte carlo vs exact variance", check_monte_carlo),
    ]


def _cmd_selftest() -> int:
    failures = 0
    checks = _selftest_checks()
    for name, check in checks:
        try:
            check()
        except Exception as exc:
            failures += 1
            print(f"selftest FAIL {name}: {exc}", file=sys.stderr)
        else:
            print(f"selftest ok   {name}")
    if failures:
        print(f"selftest: {failures} of {len(checks)} checks failed", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"selftest: all {len(checks)} checks passed")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "theory":
        return _cmd_theory(args)
    return _cmd_selftest()


if __name__ == "__main__":
    sys.exit(main())
