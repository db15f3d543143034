"""Command-line interface: serve, client, synth, bench."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

from . import bench as bench_mod
from . import synth as synth_mod
from .client import run_client
from .server import load_config, run_pipeline
from .stabilizer import ScreenGeometry


def _cmd_serve(args) -> int:
    config = load_config(args.config)
    try:
        asyncio.run(run_pipeline(config))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_client(args) -> int:
    screen = ScreenGeometry(args.width, args.height)
    try:
        asyncio.run(run_client(args.server, screen, log_path=args.log, name=args.name))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_synth(args) -> int:
    script = synth_mod.load_script(args.script)
    try:
        stream = synth_mod.generate(script, seed=args.seed)
    except synth_mod.InfeasibleSegment as e:
        print(f"infeasible script: {e}", file=sys.stderr)
        return 1
    synth_mod.record(stream.frames, args.out)
    if args.labels:
        with open(args.labels, "w", encoding="utf-8") as fh:
            for lab in stream.labels:
                entry = {"kind": lab.kind, "ts_us": lab.ts_us, "tol_us": lab.tol_us}
                if lab.direction:
                    entry["direction"] = lab.direction
                if lab.norm:
                    entry["norm"] = list(lab.norm)
                fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
    print(f"wrote {len(stream.frames)} frames, {len(stream.labels)} labels")
    return 0


def _cmd_bench(args) -> int:
    path = Path(args.scenario)
    if not path.exists():
        bundled = bench_mod.bundled_scenario_path(args.scenario)
        if bundled.exists():
            path = bundled
        else:
            print(f"no such scenario: {args.scenario}", file=sys.stderr)
            return 1
    scenario = bench_mod.load_scenario(path)
    try:
        report = bench_mod.run_bench(scenario)
    except bench_mod.ScenarioInfeasible as e:
        print(f"scenario infeasible: {e}", file=sys.stderr)
        return 1
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if report.passed else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="airhmi", description="Touchless gesture-to-cursor HMI")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the pipeline server")
    p.add_argument("--config", required=True, help="JSON config file path")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("client", help="run a virtual-cursor client")
    p.add_argument("--server", required=True, help="ws://host:port/cursor")
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--log", help="event-log JSONL output path")
    p.add_argument("--name", default="client")
    p.set_defaults(func=_cmd_client)

    p = sub.add_parser("synth", help="generate a labeled frame stream from a script")
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True, help="frames JSONL output path")
    p.add_argument("--labels", help="labels JSONL output path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="run a benchmark scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON path or bundled name")
    p.add_argument("--out", help="report JSON output path")
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
