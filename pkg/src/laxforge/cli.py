"""Command line interface.

``laxforge verify`` runs the verification suites and writes a JSON report
(optionally per-check CSV and summary figures); ``laxforge report`` renders
figures/CSV from an existing report.  Exit codes: 0 all checks pass, 1 a
check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ConfigError, SuiteConfig, run_suite


def _parse_tol(entries):
    out = {}
    for entry in entries or ():
        if "=" not in entry:
            raise ConfigError(f"bad --tol entry {entry!r}, expected name=value")
        name, val = entry.split("=", 1)
        out[name] = float(val)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laxforge",
        description="verification harness for rank-2 rational-connection Lax pairs")
    sub = parser.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="run the verification suites")
    ver.add_argument("--config", type=Path, help="JSON suite configuration")
    ver.add_argument("--problem", type=Path,
                     help="JSON problem descriptor: verify this one instance")
    ver.add_argument("--seed", type=int, help="override the configured seed")
    ver.add_argument("--suite", help="comma-separated suite subset")
    ver.add_argument("--tol", action="append", metavar="check=value",
                     help="override a tolerance (repeatable)")
    ver.add_argument("--instances", type=int, help="instances per case")
    ver.add_argument("--out", type=Path, help="write the JSON report here")
    ver.add_argument("--csv", type=Path, help="write per-check CSV here")
    ver.add_argument("--figures", type=Path, metavar="DIR",
                     help="render summary figures into DIR")
    ver.add_argument("--fault-inject", choices=["H", "nu", "F"],
                     help="negative-control fault injection")

    rep = sub.add_parser("report", help="render figures/CSV from a report")
    rep.add_argument("--in", dest="infile", type=Path, required=True)
    rep.add_argument("--figures", type=Path, metavar="DIR")
    rep.add_argument("--csv", type=Path)
    return parser


def _load_config(args) -> SuiteConfig:
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
        config = SuiteConfig.from_json(doc)
    else:
        config = SuiteConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.suite:
        config.suites = tuple(s.strip() for s in args.suite.split(",") if s.strip())
    if args.instances is not None:
        config.instances_per_case = args.instances
    if args.tol:
        tol = dict(config.tol)
        tol.update(_parse_tol(args.tol))
        config.tol = tol
    if args.fault_inject:
        config.fault_inject = args.fault_inject
    return config


def render_figures(report_doc: dict, outdir: Path) -> list:
    """Residual scatter per suite and a pass/fail summary, written as PNGs."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    outdir.mkdir(parents=True, exist_ok=True)
    checks = report_doc["checks"]
    written = []
    suites = sorted({c["suite"] for c in checks})

    fig, ax = plt.subplots(figsize=(9, 4.5))
    for i, suite in enumerate(suites):
        rows = [c for c in checks if c["suite"] == suite]
        res = np.array([max(c["residual"], 1e-18) for c in rows])
        tols = np.array([max(c["tol"], 1e-18) for c in rows])
        x = np.full(res.size, i, dtype=float) + np.linspace(-0.25, 0.25, res.size)
        colors = ["tab:green" if c["passed"] else "tab:red" for c in rows]
        ax.scatter(x, res, s=14, c=colors, alpha=0.8)
        ax.hlines(np.unique(tols), i - 0.3, i + 0.3,
                  colors="tab:blue", linestyles="dotted", linewidth=1)
    ax.set_yscale("log")
    ax.set_xticks(range(len(suites)))
    ax.set_xticklabels(suites, rotation=20, ha="right")
    ax.set_ylabel("residual")
    ax.set_title("check residuals against tolerances")
    fig.tight_layout()
    path = outdir / "residuals.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 3.5))
    passed = [sum(1 for c in checks if c["suite"] == s and c["passed"])
              for s in suites]
    failed = [sum(1 for c in checks if c["suite"] == s and not c["passed"])
              for s in suites]
    ax.bar(suites, passed, color="tab:green", label="pass")
    ax.bar(suites, failed, bottom=passed, color="tab:red", label="fail")
    ax.set_ylabel("checks")
    ax.legend()
    ax.set_title("suite outcomes")
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    path = outdir / "outcomes.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report":
        doc = json.loads(args.infile.read_text())
        if args.csv:
            rows = doc["checks"]
            cols = ["suite", "case", "seed", "name", "residual", "tol",
                    "passed", "lower_bound", "wall_time"]
            lines = [",".join(cols)]
            lines += [",".join(str(r.get(k, "")) for k in cols) for r in rows]
            args.csv.write_text("\n".join(lines) + "\n")
        if args.figures:
            for path in render_figures(doc, args.figures):
                print(f"wrote {path}")
        return 0

    try:
        config = _load_config(args)
        if args.problem is not None:
            from .harness import run_problem
            from .model import load_problem
            profile, chart, seed = load_problem(args.problem.read_text())
            if args.seed is not None:
                seed = args.seed
            report = run_problem(profile, chart, seed, config)
        else:
            report = run_suite(config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        mark = "PASS" if check.passed else "FAIL"
        bound = ">" if check.lower_bound else "<="
        print(f"[{mark}] {check.suite:24s} {check.case:12s} seed={check.seed} "
              f"{check.name}: {check.residual:.3e} {bound} {check.tol:.1e}")
    summary = report.summary()
    print(f"{summary['passed']}/{summary['total']} checks passed")
    if args.out:
        args.out.write_text(report.to_json())
        print(f"wrote {args.out}")
    if args.csv:
        args.csv.write_text(report.to_csv())
        print(f"wrote {args.csv}")
    if args.figures:
        doc = json.loads(report.to_json())
        for path in render_figures(doc, args.figures):
            print(f"wrote {path}")
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
