"""Command line entry points.

run        execute a scenario headlessly and print its report
serve      expose a scenario over the live WebSocket protocol
replay     re-run a session from its event log and check the outcome
list-scenarios   names usable wherever a scenario file is expected
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .runner import Engine, replay as replay_log
from .scenario import (
    ScenarioError,
    bundled_text,
    list_scenarios,
    load_scenario,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_REACHED = 2


def _scenario_doc(arg: str) -> dict:
    """Resolve a path or bundled name to a parsed scenario document."""
    if os.path.exists(arg):
        with open(arg, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = bundled_text(arg)  # raises for unknown names
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON in {arg}: {e}") from None


def _load(arg: str, seed=None, max_ticks=None):
    doc = _scenario_doc(arg)
    if seed is not None:
        doc["seed"] = seed
    if max_ticks is not None:
        doc["max_ticks"] = max_ticks
    return load_scenario(doc)


def _outcome_code(outcome: str) -> int:
    return EXIT_OK if outcome == "GoalReached" else EXIT_NOT_REACHED


def _cmd_run(args) -> int:
    sc = _load(args.scenario, args.seed, args.max_ticks)
    snapshot_dir = args.snapshot_dir if args.snapshot_every else None
    eng = Engine(
        sc,
        log_path=args.log,
        snapshot_every=args.snapshot_every,
        snapshot_dir=snapshot_dir,
    )
    try:
        report = eng.run()
    finally:
        eng.close()
    for key, value in report.as_dict().items():
        print(f"{key}: {value}")
    return _outcome_code(report.outcome)


def _cmd_serve(args) -> int:
    from .server import serve

    sc = _load(args.scenario, args.seed, args.max_ticks)
    serve(sc, port=args.port, host=args.host, log_path=args.log, start_paused=args.start_paused)
    return EXIT_OK


def _cmd_replay(args) -> int:
    with open(args.log, "r", encoding="utf-8") as fh:
        text = fh.read()
    scenario = _load(args.scenario) if args.scenario else None
    report = replay_log(text, scenario)
    for key, value in report.as_dict().items():
        print(f"{key}: {value}")
    return _outcome_code(report.outcome)


def _cmd_list(args) -> int:
    for name in list_scenarios():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tactilenav")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headlessly")
    run.add_argument("scenario", help="scenario file or bundled name")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--max-ticks", type=int, default=None)
    run.add_argument("--log", default=None, help="write the event log here")
    run.add_argument("--snapshot-every", type=int, default=0, metavar="N")
    run.add_argument("--snapshot-dir", default="snapshots")
    run.set_defaults(func=_cmd_run)

    srv = sub.add_parser("serve", help="serve a scenario over WebSocket")
    srv.add_argument("scenario", help="scenario file or bundled name")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--seed", type=int, default=None)
    srv.add_argument("--max-ticks", type=int, default=None)
    srv.add_argument("--log", default=None)
    srv.add_argument("--start-paused", action="store_true")
    srv.set_defaults(func=_cmd_serve)

    rep = sub.add_parser("replay", help="re-run a session from its event log")
    rep.add_argument("log", help="event log file")
    rep.add_argument("--scenario", default=None, help="scenario file if not bundled")
    rep.set_defaults(func=_cmd_replay)

    lst = sub.add_parser("list-scenarios", help="print bundled scenario names")
    lst.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
