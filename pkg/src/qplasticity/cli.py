"""Command-line entry point: ``qplasticity <command> ...``.

Exit codes: 0 success, 1 runtime failure (or a failed check), 2 usage error.
Runtime errors print one JSON line ``{"error": <type>, "message": <text>}``
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import QPlasticityError


def _cmd_run(args) -> int:
    from .config import load_config
    from .runner import run_experiment

    cfg = load_config(args.config)
    if args.out:
        cfg = cfg.with_output_dir(args.out)
    man = run_experiment(cfg, fresh=args.fresh)
    print(f"{man.status}: {man.completed_tasks} tasks -> {man.directory}")
    return 0


def _print_table(header, rows) -> None:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))


def _cmd_verify_theory(args) -> int:
    from .config import load_config
    from .theory import run_theory_suite

    cfg = load_config(args.config)
    if args.out:
        cfg = cfg.with_output_dir(args.out)
    checks, doc = run_theory_suite(cfg.theory, cfg.experiment.seed)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "theory.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _print_table(("check", "result", "detail"), [(c.name, "PASS" if c.passed else "FAIL", c.detail) for c in checks])
    return 0 if all(c.passed for c in checks) else 1


def _cmd_gradcheck(args) -> int:
    from .verification import gradcheck_suite

    rep = gradcheck_suite(args.n, args.seed)
    print(f"circuits: {rep.n_circuits}  coordinates checked: {rep.checked_coordinates}")
    for name, err in rep.max_rel_error_by_readout.items():
        print(f"  {name:10s} max relative error vs finite differences: {err:.3e}")
    print(f"max relative error: {rep.max_rel_error_fd:.3e}")
    print(f"parameter shift vs adjoint (RY/RZ circuits): {rep.max_abs_error_shift:.3e}")
    return 0 if rep.passed() else 1


def _cmd_gen_xxz(args) -> int:
    from .config import load_config
    from .runner import xxz_config
    from .tasks import write_xxz_jsonl

    cfg = load_config(args.config)
    indices = [int(i) for i in args.indices.split(",")] if args.indices else cfg.data.cache_indices
    dim = 1 << cfg.data.chain_length
    if any(i >= dim for i in indices):
        raise QPlasticityError(f"eigenstate index out of range for {dim} levels")
    out = Path(args.out) if args.out else cfg.output_dir / "xxz_states.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = write_xxz_jsonl(xxz_config(cfg), out, indices=indices)
    print(f"wrote {rows} eigenstates to {out}")
    return 0


def _cmd_plot(args) -> int:
    from .plotting import emit_plot

    out = emit_plot(args.jsonl, args.metric, args.window, args.out, labels=args.label or None,
                    relative=args.relative)
    print(out)
    return 0


def _cmd_report(args) -> int:
    from .runner import report, summary_csv

    results = report(args.manifests)
    for directory, rows in results:
        print(f"# {directory}")
        _print_table(("metric", "head", "tail", "relative", "slope", "p", "drop", "drop/100"), [
            (r["metric"], f"{r['head_mean']:.4g}", f"{r['tail_mean']:.4g}", f"{r['relative_tail']:.4g}",
             f"{r['slope']:.3g}", f"{r['p_value']:.3g}", f"{r['drop']:.3g}", f"{r['drop_rate_per_100']:.3g}")
            for r in rows
        ])
        if args.csv:
            path = Path(args.csv)
            if len(results) > 1:
                path = path.with_name(f"{path.stem}_{Path(directory).name}{path.suffix}")
            path.write_text(summary_csv(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qplasticity", description="Continual-learning plasticity experiments.")
    p.add_argument("--version", action="version", version=f"qplasticity {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run or resume an experiment")
    r.add_argument("config")
    r.add_argument("--out", help="override experiment.output_dir")
    r.add_argument("--fresh", action="store_true", help="discard any existing run in the output directory")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify-theory", help="Fisher-trace bound and collapse checks")
    v.add_argument("config")
    v.add_argument("--out")
    v.set_defaults(func=_cmd_verify_theory)

    g = sub.add_parser("gradcheck", help="adjoint vs finite-difference and parameter-shift oracles")
    g.add_argument("--n", type=int, default=60, help="number of random circuits (default 60)")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_cmd_gradcheck)

    x = sub.add_parser("gen-xxz", help="cache XXZ eigenstates as JSONL")
    x.add_argument("config")
    x.add_argument("--indices", help="comma-separated eigenstate indices (default: data.cache_indices)")
    x.add_argument("--out")
    x.set_defaults(func=_cmd_gen_xxz)

    pl = sub.add_parser("plot", help="moving-mean SVG of a metric")
    pl.add_argument("jsonl", nargs="+")
    pl.add_argument("--metric", required=True)
    pl.add_argument("--window", type=int, default=40)
    pl.add_argument("--out", required=True)
    pl.add_argument("--label", action="append", help="series label (repeat per input)")
    pl.add_argument("--relative", action="store_true", help="normalize by the first-10-task mean")
    pl.set_defaults(func=_cmd_plot)

    rp = sub.add_parser("report", help="trend summary of finished runs")
    rp.add_argument("manifests", nargs="+", help="manifest.json files or run directories")
    rp.add_argument("--csv", help="also write the summary CSV here")
    rp.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QPlasticityError, OSError, ValueError, KeyError, ArithmeticError) as exc:
        msg = str(exc).replace("\n", " ")
        print(json.dumps({"error": type(exc).__name__, "message": msg}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
