"""Command line: ``run`` a Monte Carlo grid, evaluate the ``bound``, or dump one trial as a ``trace``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bounds import yma_bound
from .harness import DEFAULT_GRID, SCHEMES, ExperimentSpec, export, monte_carlo, summarize, trace
from .model import SystemConfig

DEFAULTS = {
    "n": 4,
    "k": 8,
    "f": 400,
    "m": list(DEFAULT_GRID),
    "schemes": list(SCHEMES),
    "trials": 100,
    "seed": 0,
    "dist": "uniform",
    "verify": True,
    "out": None,
    "format": "csv",
    "packets": None,
    "timing": False,
    "random_leaders": False,
    "workers": 1,
    "trial": 0,
}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codedcache", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--config", type=Path, help="JSON file with any of the flags below; flags win")
        sp.add_argument("--n", type=int, help="number of files")
        sp.add_argument("--k", type=int, help="number of users")
        sp.add_argument("--m", type=_floats, help="comma separated cache sizes" if grid else "cache size")
        sp.add_argument("--dist", help="uniform or zipf:EXP")

    run = sub.add_parser("run", help="Monte Carlo over a memory grid")
    common(run)
    run.add_argument("--f", type=int, help="file size in bits")
    run.add_argument("--schemes", type=_names, help=f"comma separated subset of {','.join(SCHEMES)}")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--verify", type=_bool)
    run.add_argument("--out", type=Path)
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--packets", type=int, help="packets per file for the graph schemes (default F)")
    run.add_argument("--timing", type=_bool, help="record elapsed_ms (breaks byte-identical output)")
    run.add_argument("--random-leaders", dest="random_leaders", type=_bool)
    run.add_argument("--workers", type=int)

    bound = sub.add_parser("bound", help="analytic average load for random placement")
    common(bound)

    tr = sub.add_parser("trace", help="one trial with every codeword as JSON")
    common(tr, grid=False)
    tr.add_argument("--f", type=int)
    tr.add_argument("--schemes", type=_names)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--trial", type=int)
    tr.add_argument("--packets", type=int)
    tr.add_argument("--random-leaders", dest="random_leaders", type=_bool)
    tr.add_argument("--out", type=Path)
    return p


def _merge(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {', '.join(sorted(unknown))}")
        if isinstance(loaded.get("m"), (int, float)):
            loaded["m"] = [loaded["m"]]
        opts.update(loaded)
    opts.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    return opts


def _spec(opts: dict) -> ExperimentSpec:
    return ExperimentSpec(
        num_files=opts["n"],
        num_users=opts["k"],
        file_bits=opts["f"],
        memories=tuple(opts["m"]),
        schemes=tuple(opts["schemes"]),
        trials=opts["trials"],
        seed=opts["seed"],
        dist=opts["dist"],
        verify=opts["verify"],
        packet_count=opts["packets"],
        timing=opts["timing"],
        random_leaders=opts["random_leaders"],
        workers=opts["workers"],
    )


def _cmd_run(opts: dict) -> int:
    spec = _spec(opts)
    results = monte_carlo(spec, progress=True)
    stats = summarize(results, spec)
    print(f"{'scheme':8} {'M':>6} {'mean':>9} {'std':>8} {'ci95':>8} {'bound':>8} fails")
    for s in stats:
        bound = "" if s.bound is None else f"{s.bound:.4f}"
        print(f"{s.scheme:8} {s.memory:6g} {s.mean:9.4f} {s.std:8.4f} {s.ci95:8.4f} {bound:>8} {s.failures}")
    if opts["out"] is not None:
        summary = export(results, opts["format"], opts["out"], spec)
        print(f"wrote {opts['out']} and {summary}")
    failures = sum(r.failed for r in results)
    if failures:
        print(f"{failures} failed trial(s)", file=sys.stderr)
        return 1 if spec.verify or any(r.error for r in results) else 0
    return 0


def _cmd_bound(opts: dict) -> int:
    print(f"{'M':>6} {'bound':>12}")
    for m in opts["m"]:
        cfg = SystemConfig(opts["n"], opts["k"], 1, m)
        print(f"{m:6g} {yma_bound(cfg, opts['dist']):12.8f}")
    return 0


def _cmd_trace(opts: dict) -> int:
    memory = opts["m"][0] if isinstance(opts["m"], list) else opts["m"]
    spec = _spec({**opts, "m": [memory], "trials": 1})
    record = trace(spec, memory, opts["trial"])
    text = json.dumps(record, indent=1)
    if opts["out"] is None:
        print(text)
    else:
        try:
            Path(opts["out"]).write_text(text + "\n")
        except OSError as exc:
            raise OSError(f"cannot write trace to {opts['out']}: {exc.strerror or exc}") from exc
    ok = all(all(entry["decodable"]) for entry in record["schemes"].values())
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    opts = _merge(args)
    try:
        return {"run": _cmd_run, "bound": _cmd_bound, "trace": _cmd_trace}[args.command](opts)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
