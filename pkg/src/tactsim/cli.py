"""Command line entry point: ``tactsim run|sweep|transfer|export-policy|inspect-policy|default-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .harness import SweepSpec, run, sweep, transfer_pipeline, write_rows
from .learner import read_snapshot, write_snapshot
from .radio import OverloadError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    res = run(cfg, seed=args.seed, out_dir=args.out)
    s = res.summary
    print(f"{s['scheme']} seed={s['seed']} stages={s['stages']} cecr={s['cecr_final']}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = SweepSpec.load(args.spec)
    rows = sweep(spec, out_dir=args.out, jobs=args.jobs)
    failed = sum(r.get("status") != "ok" for r in rows)
    print(f"{len(rows)} cells, {failed} failed; results in {args.out}")
    return EXIT_OK


def _cmd_transfer(args) -> int:
    source = RunConfig.load(args.source)
    target = RunConfig.load(args.target)
    res = transfer_pipeline(source, target, out_dir=args.out, source_seed=args.source_seed,
                            target_seed=args.target_seed)
    print(f"improvement={res.improvement!r} kl={res.kl!r}")
    return EXIT_OK


def _cmd_export(args) -> int:
    cfg = RunConfig.load(args.config)
    scheme = cfg.learner.scheme if cfg.learner.scheme in ("ac", "tact") else "ac"
    res = run(cfg, seed=args.seed, scheme=scheme)
    write_snapshot(res.snapshot, args.out)
    print(f"wrote {len(res.snapshot.entries)} entries to {args.out}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    snap = read_snapshot(args.snapshot)
    states = sorted({s for s, _ in snap.entries})
    print(f"n_bs={snap.n_bs} stages={snap.stages} seed={snap.seed} config_hash={snap.config_hash or '-'}")
    print(f"entries={len(snap.entries)} states={len(states)}")
    table = snap.exotic_table()
    rows = []
    for s in states:
        best = max(table[s].items(), key=lambda kv: (kv[1], -kv[0]))
        rows.append({"state": s, "entries": len(table[s]), "best_action": best[0], "best_value": best[1]})
    if args.csv:
        write_rows(args.csv, rows)
    else:
        for r in rows[: args.limit]:
            print(f"  state {r['state']}: {r['entries']} actions, best {r['best_action']} ({r['best_value']:.4g})")
    return EXIT_OK


def _cmd_default_config(args) -> int:
    print(json.dumps(RunConfig().to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tactsim", description=__doc__)
    p.add_argument("--version", action="version", version=f"tactsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scheme with its all-on reference")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path, default=Path("out"))
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="vary one parameter over values x seeds x schemes")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=_cmd_sweep)

    t = sub.add_parser("transfer", help="train AC on a source task and transfer into TACT on a target")
    t.add_argument("--source", required=True, type=Path)
    t.add_argument("--target", required=True, type=Path)
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--source-seed", type=int)
    t.add_argument("--target-seed", type=int)
    t.set_defaults(func=_cmd_transfer)

    e = sub.add_parser("export-policy", help="run a learner and write its policy snapshot")
    e.add_argument("--config", required=True, type=Path)
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True, type=Path)
    e.set_defaults(func=_cmd_export)

    i = sub.add_parser("inspect-policy", help="summarize a policy snapshot")
    i.add_argument("snapshot", type=Path)
    i.add_argument("--limit", type=int, default=20)
    i.add_argument("--csv", type=Path)
    i.set_defaults(func=_cmd_inspect)

    d = sub.add_parser("default-config", help="print the default configuration as JSON")
    d.set_defaults(func=_cmd_default_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OverloadError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
