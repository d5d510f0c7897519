"""Wire protocol for the live serve mode.

One bidirectional channel of JSON text frames.  Server to client:
snapshot / ack / error.  Client to server: teleop, touch, pause, resume,
step, reset, load.  Both directions carry monotone sequence numbers.
Costmap content travels as run-length-encoded byte rows; a client's
first snapshot is a keyframe with every row, later ones carry only rows
that changed since that client's previous snapshot.
"""
from __future__ import annotations

import numpy as np

PROTOCOL_VERSION = 1

CLIENT_KINDS = {"teleop", "touch", "pause", "resume", "step", "reset", "load"}
SIM_KINDS = {"teleop", "touch"}  # applied inside a tick and logged for replay


class ProtocolError(ValueError):
    """A client frame failed validation."""


def rle_encode(row) -> list[int]:
    """Flattened [count, value, count, value, ...] runs of one cost row."""
    row = np.asarray(row)
    if row.size == 0:
        return []
    boundaries = np.flatnonzero(np.diff(row)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [row.size]))
    out = []
    for s, e in zip(starts, ends):
        out.append(int(e - s))
        out.append(int(row[s]))
    return out


def rle_decode(runs: list[int], width: int) -> list[int]:
    if len(runs) % 2 != 0:
        raise ProtocolError("run-length data must have even length")
    out: list[int] = []
    for i in range(0, len(runs), 2):
        out.extend([runs[i + 1]] * runs[i])
    if len(out) != width:
        raise ProtocolError(f"run-length data expands to {len(out)} cells, expected {width}")
    return out


def changed_rows(cost: np.ndarray, last: np.ndarray | None) -> list[list]:
    """[cy, runs] for every row that differs from the previous array."""
    rows = []
    for cy in range(cost.shape[0]):
        if last is None or not np.array_equal(cost[cy], last[cy]):
            rows.append([cy, rle_encode(cost[cy])])
    return rows


def capture_state(engine, paused: bool):
    """Freeze the dynamic state of one tick for streaming.

    Returns (state dict, cost array).  The dict holds plain values only
    and the cost array is the tick's own (each tick builds a fresh one),
    so both may cross into connection handlers without copying.
    """
    world = engine.world
    state = {
        "tick": world.tick,
        "paused": paused,
        "robot": [world.robot.pose.x, world.robot.pose.y, world.robot.pose.theta],
        "cmd": [world.robot.velocity.vx, world.robot.velocity.vy, world.robot.velocity.omega],
        "humans": [
            {
                "id": h.id,
                "x": h.pose.x,
                "y": h.pose.y,
                "theta": h.pose.theta,
                "radius": h.radius,
                "class": h.cls,
            }
            for h in world.humans
        ],
        "detected": [d.id for d in engine.detections],
        "fsm": type(engine.fsm_state).__name__,
        "filter": engine.filter_state.phase.name,
        "tactile": list(engine.last_tactile.forces) if engine.last_tactile else [0.0] * 6,
        "path": [[x, y] for x, y in engine.path.waypoints] if engine.path else None,
        "escalations": [
            [r.human_id, r.anchor[0], r.anchor[1], r.footprint_radius] for r in engine.records
        ],
        "report": engine.report.as_dict() if engine.report else None,
    }
    return state, engine.composite.cost


def scenario_info(sc) -> dict:
    """Static facts sent once per keyframe."""
    sp = sc.spec
    return {
        "scenario": sc.name,
        "grid": {
            "width": sp.width,
            "height": sp.height,
            "resolution": sp.resolution,
            "origin": [sp.origin[0], sp.origin[1]],
        },
        "goal": [sc.goal.x, sc.goal.y, sc.goal.tol] if sc.goal else None,
    }


def snapshot_message(state: dict, cost: np.ndarray, info: dict, seq: int, last_cost):
    """Assemble one client's snapshot frame; returns (message, cost to remember).

    With no previous cost the frame is a keyframe: every row plus the
    scenario info block.  Otherwise only rows that changed since that
    client's previous frame are included.
    """
    keyframe = last_cost is None
    msg = dict(state)
    msg["kind"] = "snapshot"
    msg["seq"] = seq
    msg["version"] = PROTOCOL_VERSION
    msg["keyframe"] = keyframe
    msg["rows"] = changed_rows(cost, last_cost)
    if keyframe:
        msg.update(info)
    return msg, cost


def _require(cond: bool, message: str):
    if not cond:
        raise ProtocolError(message)


def _number(msg: dict, field: str) -> float:
    v = msg.get(field)
    _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{field} must be a number")
    return float(v)


def validate_control(raw) -> dict:
    """Check one client frame; returns it with seq verified present.

    Frames must be objects with a string kind from the protocol set and
    an integer seq; kind-specific fields are type-checked here so a bad
    frame is refused before it can reach the simulation loop.
    """
    _require(isinstance(raw, dict), "frame must be an object")
    kind = raw.get("kind")
    _require(isinstance(kind, str) and kind in CLIENT_KINDS, f"unknown kind {kind!r}")
    seq = raw.get("seq")
    _require(isinstance(seq, int) and not isinstance(seq, bool), "seq must be an integer")
    if kind == "teleop":
        _require(isinstance(raw.get("human"), str), "human must be a string id")
        _number(raw, "vx")
        _number(raw, "vy")
    elif kind == "touch":
        _number(raw, "azimuth")
        _require(_number(raw, "force") > 0.0, "force must be > 0")
    elif kind == "load":
        sc = raw.get("scenario")
        _require(isinstance(sc, (str, dict)), "scenario must be a name or a document")
    return raw
