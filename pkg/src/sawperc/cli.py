"""Command line entry point: ``sawperc <command> [flags]``."""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys

from . import experiments as ex
from .paths import DEFAULT_MAX_NODES, _check_budget, count_saw

COMMANDS = {
    "verify": "run every exact oracle and seeded identity; exit 0 iff all pass",
    "enum": "exact SAW counts |S_N| for N = 1..n",
    "census": "good-spine census of uniform SAWs",
    "bridges": "bridge-set sizes and path-count floors on good spines",
    "quenched": "quenched growth Z_N^{1/N} against the annealed constant",
    "thresholds": "threshold bound, p_c expansion and their gap for d = 2..d",
}

DEFAULTS = {
    "verify": dict(seed=2024, format="json"),
    "enum": dict(d=2, n=10),
    "census": dict(d=5, n=200, eps=0.5, trials=100),
    "bridges": dict(d=5, n=300, p=0.1, eps=0.5, trials=100),
    "quenched": dict(d=3, n=20, p=0.5, trials=20),
    "thresholds": dict(d=16, eps=0.1),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, help="lattice dimension")
    common.add_argument("--n", type=int, help="path length N (or N_max)")
    common.add_argument("--p", type=float, help="edge-open probability")
    common.add_argument("--eps", type=float, help="tolerance epsilon")
    common.add_argument("--trials", type=int, help="number of trials")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    parser = argparse.ArgumentParser(prog="sawperc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _resolve(args) -> argparse.Namespace:
    base = dict(d=3, n=20, p=0.5, eps=0.5, trials=100, seed=0, format="csv")
    base.update(DEFAULTS[args.command])
    for k, v in base.items():
        if getattr(args, k) is None:
            setattr(args, k, v)
    return args


def _config(args) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(
        d=args.d, N=args.n, p=args.p, eps=args.eps, trials=args.trials,
        seed=args.seed, workers=args.workers, fmt=args.format,
    )


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[ex._fmt(v) for v in row] for row in rows])
    return buf.getvalue()


def cmd_verify(args) -> tuple[str, bool]:
    manifest = ex.run_all_verifications(seed=args.seed, workers=args.workers)
    ok = ex.manifest_ok(manifest)
    if args.format == "csv":
        rows = [(c["name"], c["status"], c["detail"]) for c in manifest["cases"]]
        return _rows_csv(("name", "status", "detail"), rows), ok
    return ex.dumps(manifest), ok


def cmd_enum(args) -> tuple[str, bool]:
    _check_budget(args.d, args.n, DEFAULT_MAX_NODES)  # fail before counting the small N
    rows = []
    for N in range(1, args.n + 1):
        c = count_saw(args.d, N, workers=args.workers)
        shadow = c / (2 * args.d * (2 * args.d - 1) ** (N - 1))
        rows.append((N, c, c ** (1.0 / N), shadow))
    header = ("N", "count", "root", "castor_term")
    if args.format == "json":
        return ex.dumps({"d": args.d, "rows": [dict(zip(header, r)) for r in rows],
                         "mu_expansion": ex.mu_expansion(args.d)}), True
    return _rows_csv(header, rows), True


def cmd_census(args) -> tuple[str, bool]:
    rep = ex.run_good_spine_experiment(_config(args))
    return (rep.to_json() if args.format == "json" else rep.to_csv()), True


def cmd_bridges(args) -> tuple[str, bool]:
    rep = ex.run_bridge_experiment(_config(args))
    s = rep.summary()
    ok = not s["violations"] and s["lowb_ok"]
    return (rep.to_json() if args.format == "json" else rep.to_csv()), ok


def cmd_quenched(args) -> tuple[str, bool]:
    rep = ex.run_quenched_estimate(_config(args))
    return (rep.to_json() if args.format == "json" else rep.to_csv()), True


def cmd_thresholds(args) -> tuple[str, bool]:
    rows = []
    for d in range(2, args.d + 1):
        tb, pc = ex.threshold_bound(d, args.eps), ex.pc_expansion(d)
        gap = float(ex.threshold_gap_formula(d, args.eps))
        rows.append((d, tb, pc, gap, ex.mu_expansion(d)))
    header = ("d", "threshold_bound", "pc_expansion", "gap", "mu_expansion")
    ok = all(r[3] > 0 for r in rows) or args.eps >= 3 * math.log(2) - 1.5
    if args.format == "json":
        return ex.dumps({"eps": args.eps, "rows": [dict(zip(header, r)) for r in rows]}), ok
    return _rows_csv(header, rows), ok


HANDLERS = {
    "verify": cmd_verify, "enum": cmd_enum, "census": cmd_census,
    "bridges": cmd_bridges, "quenched": cmd_quenched, "thresholds": cmd_thresholds,
}


def main(argv=None) -> int:
    args = _resolve(_parser().parse_args(argv))
    try:
        text, ok = HANDLERS[args.command](args)
    except (ValueError, RuntimeError) as exc:
        print(f"sawperc {args.command}: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
