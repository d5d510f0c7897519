"""Deterministic closed-loop scenario engine.

Each tick runs, in fixed order: control application, percepts, escalation
maintenance, costmap rebuild, plan maintenance, nominal command, the
proximity filter, the interaction state machine, and finally the world
step.  Every run emits a line-delimited JSON event log; identical
scenario + seed yields a byte-identical log, and re-applying a log's
control records replays a served session exactly.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, asdict
from pathlib import Path as FsPath

from .behavior import (
    ContactHold,
    EscalationRecord,
    FsmInputs,
    GoalReached,
    HumanTruth,
    Idle,
    Navigate,
    TurnToContact,
    first_path_obstruction,
    fsm_step,
    maintain_escalations,
    state_name,
    turn_command,
)
from .costmap import (
    build_obstacle_layer,
    build_semantic_obstacle_layer,
    build_static_layer,
    clear_disc,
    inflate_layer,
    proxemic_layer,
)
from .geometry import VelocityCommand, ZERO_CMD
from .grid import combine, write_pgm
from .planner import StartBlockedError, local_follow, path_blocked, path_progress, plan_global
from .proximity import ContactEvent, FilterState, TimeoutExpired, filter_step
from .scenario import Scenario, build_world
from .sensors import TactileFrame, camera_detect, lidar_scan, tactile_sample
from .world import TeleopPolicy, plate_index
from .world import step as world_step

STUCK_WINDOW_TICKS = 200
STUCK_DISTANCE = 0.01


@dataclass(frozen=True)
class RunReport:
    outcome: str  # GoalReached | Timeout | Stuck
    ticks: int
    traveled: float
    contacts: int
    escalations: int
    exit: str | None

    def as_dict(self) -> dict:
        return asdict(self)


class ControlError(ValueError):
    """A control message failed validation; the loop is unaffected."""


class Engine:
    """One scenario run, advanced tick by tick.

    State is inspectable between ticks (world, composite, path, fsm_state,
    filter_state, records, detections), which the tests and the serve
    mode both rely on.
    """

    def __init__(
        self,
        scenario: Scenario,
        log_path: str | None = None,
        snapshot_every: int = 0,
        snapshot_dir: str | None = None,
    ):
        self.scenario = scenario
        self.cfg = scenario.configs
        self.world = build_world(scenario)
        self.rng = random.Random(scenario.seed)
        self.static = build_static_layer(self.world.occupancy, scenario.spec)

        self.filter_state = FilterState()
        self.fsm_state = Navigate() if scenario.goal else Idle()
        self.records: list[EscalationRecord] = []
        self.path = None
        self.composite = None
        self.detections = []
        self.last_tactile = None
        self.report: RunReport | None = None

        self._pending_replan = False
        self._last_plan_tick: int | None = None
        retry = self.cfg.planner.retry_period / self.cfg.sim.dt
        self._retry_ticks = max(1, math.ceil(retry - 1e-9))
        self._persist_ticks = math.ceil(self.cfg.sim.track_persist / self.cfg.sim.dt - 1e-9)
        self._tracks: dict[str, tuple] = {}
        self._last_detect_ids: tuple[str, ...] = ()
        self._traveled = 0.0
        self._contacts = 0
        self._escalations = 0
        self._exit: str | None = None
        self._stuck_anchor = (self.world.robot.pose.x, self.world.robot.pose.y)
        self._stuck_count = 0

        self._snapshot_every = snapshot_every
        self._snapshot_dir = FsPath(snapshot_dir) if snapshot_dir else None
        self.log_lines: list[str] = []
        self._log_file = open(log_path, "w", encoding="utf-8") if log_path else None

        sp = scenario.spec
        self._log(
            {
                "kind": "header",
                "scenario": scenario.name,
                "seed": scenario.seed,
                "dt": self.cfg.sim.dt,
                "max_ticks": scenario.max_ticks,
                "grid": [sp.width, sp.height, sp.resolution],
                "version": 1,
            }
        )

    # -- logging ---------------------------------------------------------

    def _log(self, record: dict):
        line = json.dumps(record, sort_keys=True)
        self.log_lines.append(line)
        if self._log_file:
            self._log_file.write(line + "\n")
            self._log_file.flush()

    def close(self):
        if self._log_file:
            self._log_file.close()
            self._log_file = None

    def log_meta(self, msg: dict):
        """Record an accepted session-level control (pause, step, ...).

        These shape when ticks happen, not what happens inside them, so
        replay skips them; they are kept in the log for audit.
        """
        self._log({"kind": "control", "tick": self.world.tick, "applied": msg})

    # -- controls --------------------------------------------------------

    def _apply_control(self, msg: dict, tick: int):
        kind = msg.get("kind")
        if kind == "teleop":
            human = self.world.human_by_id(str(msg["human"]))
            if not isinstance(human.policy, TeleopPolicy):
                raise ControlError(f"human {human.id!r} is not teleoperated")
            human.policy.vx = float(msg["vx"])
            human.policy.vy = float(msg["vy"])
        elif kind == "touch":
            # queued; injected into this tick's tactile frame
            self._injected.append((float(msg["azimuth"]), float(msg["force"])))
        else:
            raise ControlError(f"control kind {kind!r} cannot be applied to a tick")
        self._log({"kind": "control", "tick": tick, "applied": msg})

    # -- one tick --------------------------------------------------------

    def tick_once(self, controls: list[dict] = ()):  # noqa: C901
        if self.report is not None:
            return
        sc, cfg, world = self.scenario, self.cfg, self.world
        spec = sc.spec
        tick = world.tick
        dt = cfg.sim.dt
        pose = world.robot.pose

        self._injected: list[tuple[float, float]] = []
        for msg in controls:
            # a bad control is logged and dropped, never allowed to kill
            # the tick it was aimed at
            try:
                self._apply_control(msg, tick)
            except (ControlError, KeyError, ValueError, TypeError) as exc:
                self._log({"kind": "control_error", "tick": tick, "error": str(exc)})

        # percepts
        scan = lidar_scan(world, cfg.sim.lidar_beams, cfg.sim.lidar_range)
        dets = camera_detect(
            world,
            fov=cfg.sim.camera_fov,
            cam_range=cfg.sim.camera_range,
            rng=self.rng,
            noise_sigma=cfg.sim.noise_sigma,
        )
        frame = tactile_sample(world, k_c=cfg.sim.k_c)
        if self._injected:
            forces = list(frame.forces)
            for az, force in self._injected:
                forces[plate_index(az)] += force
            frame = TactileFrame(forces)
        self.detections = dets
        self.last_tactile = frame

        det_ids = tuple(d.id for d in dets)
        if det_ids != self._last_detect_ids:
            self._log({"kind": "detect", "tick": tick, "ids": list(det_ids)})
            self._last_detect_ids = det_ids

        # detections coast briefly after leaving the view, frozen at their
        # last estimate, so a heading sweep does not flip a known human
        # back to unknown-obstacle costing
        for d in dets:
            self._tracks[d.id] = (d, tick)
        self._tracks = {
            hid: (est, seen)
            for hid, (est, seen) in self._tracks.items()
            if tick - seen <= self._persist_ticks
        }
        known = [est for _, (est, _) in sorted(self._tracks.items())]

        truth = [HumanTruth(h.id, h.pose.x, h.pose.y, h.radius) for h in world.humans]
        self.records, dropped = maintain_escalations(self.records, truth)
        for rec in dropped:
            self._log({"kind": "escalation_drop", "tick": tick, "human": rec.human_id})

        # costmap rebuild: static + lidar obstacles (known humans cleared
        # back out, so vision-known people are costed only semantically)
        obstacle = build_obstacle_layer(scan, pose, spec)
        for d in known:
            clear_disc(obstacle, d.position, d.radius + spec.resolution)
        semantic = build_semantic_obstacle_layer(known, self.records, cfg.social, spec)
        pre = combine([self.static, obstacle, semantic], name="pre_inflation")
        inflated = inflate_layer(pre, cfg.inflation)
        prox = proxemic_layer(known, cfg.social, cfg.proxemic, spec)
        self.composite = combine([inflated, prox], name="composite")

        # plan maintenance
        if sc.goal is not None:
            reason = None
            if self._pending_replan:
                reason = "escalation"
            elif self.path is not None:
                prog = path_progress(self.path, pose.x, pose.y)
                if path_blocked(self.path, self.composite, from_index=prog):
                    reason = "blocked"
            elif (
                self._last_plan_tick is None
                or tick - self._last_plan_tick >= self._retry_ticks
            ):
                reason = "initial" if self._last_plan_tick is None else "retry"
            if reason:
                self._pending_replan = False
                self._last_plan_tick = tick
                try:
                    self.path = plan_global(
                        self.composite, (pose.x, pose.y), (sc.goal.x, sc.goal.y), cfg.planner
                    )
                except StartBlockedError:
                    self.path = None
                ok = self.path is not None
                self._log(
                    {
                        "kind": "replan",
                        "tick": tick,
                        "reason": reason,
                        "ok": ok,
                        "cost": self.path.total_cost if ok else None,
                        "cells": len(self.path.cells) if ok else 0,
                    }
                )

        # nominal command for the filter
        if isinstance(self.fsm_state, Navigate) and self.path is not None:
            nominal = local_follow(self.path, pose, cfg.planner)
        elif isinstance(self.fsm_state, TurnToContact):
            nominal = turn_command(
                self.fsm_state.target, pose.theta, dt, cfg.behavior.omega_max
            )
        else:
            nominal = ZERO_CMD

        cmd, self.filter_state, events = filter_step(
            nominal, scan, frame, self.filter_state, cfg.filter, dt
        )

        contact_human = None
        for ev in events:
            if isinstance(ev, ContactEvent):
                self._contacts += 1
                contact_human = self._nearest_overlapping()
                self._log(
                    {
                        "kind": "contact",
                        "tick": tick,
                        "azimuth": ev.azimuth,
                        "magnitude": ev.magnitude,
                        "human": contact_human,
                    }
                )
            elif isinstance(ev, TimeoutExpired):
                self._log({"kind": "filter_timeout", "tick": tick})

        at_goal = sc.goal is not None and (
            math.hypot(pose.x - sc.goal.x, pose.y - sc.goal.y) <= sc.goal.tol
        )
        prog = path_progress(self.path, pose.x, pose.y) if self.path else 0
        blocking = first_path_obstruction(self.path, prog, truth, cfg.inflation.r_ins)
        res = fsm_step(
            self.fsm_state,
            FsmInputs(
                tick=tick,
                dt=dt,
                pose=pose,
                events=events,
                contact_human=contact_human,
                at_goal=at_goal,
                blocking=blocking,
                humans=truth,
                has_path=self.path is not None,
            ),
            cfg.behavior,
        )
        for frm, to, trigger in res.transitions:
            self._log({"kind": "fsm", "tick": tick, "from": frm, "to": to, "trigger": trigger})
        for rec in res.new_records:
            self.records.append(rec)
            self._escalations += 1
            self._log(
                {
                    "kind": "escalation",
                    "tick": tick,
                    "human": rec.human_id,
                    "anchor": [rec.anchor[0], rec.anchor[1]],
                    "radius": rec.footprint_radius,
                }
            )
        self._pending_replan = self._pending_replan or res.replan
        self.fsm_state = res.state

        world_step(world, cmd, dt)
        after = world.robot.pose
        self._traveled += math.hypot(after.x - pose.x, after.y - pose.y)

        for name, (x0, y0, x1, y1) in sc.exit_regions.items():
            if x0 <= after.x <= x1 and y0 <= after.y <= y1:
                self._exit = name

        if isinstance(self.fsm_state, Navigate):
            if (
                math.hypot(after.x - self._stuck_anchor[0], after.y - self._stuck_anchor[1])
                > STUCK_DISTANCE
            ):
                self._stuck_anchor = (after.x, after.y)
                self._stuck_count = 0
            else:
                self._stuck_count += 1
        else:
            self._stuck_anchor = (after.x, after.y)
            self._stuck_count = 0

        self._log(
            {
                "kind": "tick",
                "tick": tick,
                "pose": [after.x, after.y, after.theta],
                "cmd": [cmd.vx, cmd.vy, cmd.omega],
                "filter": self.filter_state.phase.name,
                "fsm": state_name(self.fsm_state),
            }
        )

        if self._snapshot_every and self._snapshot_dir and tick % self._snapshot_every == 0:
            self._snapshot_dir.mkdir(parents=True, exist_ok=True)
            write_pgm(
                self.composite, self._snapshot_dir / f"composite_{tick:06d}.pgm", tick=tick
            )

        if isinstance(self.fsm_state, GoalReached):
            self._finish("GoalReached")
        elif self._stuck_count >= STUCK_WINDOW_TICKS:
            self._finish("Stuck")
        elif world.tick >= sc.max_ticks:
            self._finish("Timeout")

    def _nearest_overlapping(self) -> str | None:
        r = self.world.robot
        best = None
        for h in sorted(self.world.humans, key=lambda h: h.id):
            d = math.hypot(h.pose.x - r.pose.x, h.pose.y - r.pose.y)
            if d < r.radius + h.radius and (best is None or d < best[0]):
                best = (d, h.id)
        return best[1] if best else None

    def _finish(self, outcome: str):
        self.report = RunReport(
            outcome=outcome,
            ticks=self.world.tick,
            traveled=self._traveled,
            contacts=self._contacts,
            escalations=self._escalations,
            exit=self._exit,
        )
        self._log({"kind": "report", "tick": self.world.tick, **self.report.as_dict()})

    def run(self) -> RunReport:
        while self.report is None:
            self.tick_once()
        self.close()
        return self.report


def run(scenario: Scenario, log_path: str | None = None, **kwargs) -> RunReport:
    """Run a scenario to completion headlessly."""
    return Engine(scenario, log_path=log_path, **kwargs).run()


def replay(log_text: str, scenario: Scenario | None = None) -> RunReport:
    """Re-run a session from its event log, re-applying logged controls.

    The scenario is resolved from the header's name (bundled) unless one
    is supplied.  Returns the replayed RunReport for comparison with the
    logged one.
    """
    from .scenario import load_bundled

    lines = [json.loads(line) for line in log_text.splitlines() if line.strip()]
    if not lines or lines[0].get("kind") != "header":
        raise ValueError("log does not start with a header record")
    header = lines[0]
    if scenario is None:
        scenario = load_bundled(header["scenario"])
    controls: dict[int, list[dict]] = {}
    for rec in lines:
        # session-level controls (pause, step, load) steer the serve loop,
        # not the tick, so only tick-applied kinds are re-applied
        if rec.get("kind") == "control" and rec["applied"].get("kind") in ("teleop", "touch"):
            controls.setdefault(rec["tick"], []).append(rec["applied"])
    last_tick = max((rec["tick"] for rec in lines if "tick" in rec), default=0)

    eng = Engine(scenario)
    while eng.report is None and eng.world.tick <= last_tick:
        eng.tick_once(controls.get(eng.world.tick, []))
    eng.close()
    if eng.report is None:
        raise ValueError("log ends before the replayed run finished")
    return eng.report
