"""Touch-interaction state machine.

Contact while idle turns the robot toward whoever touched it.  Contact
while navigating holds position (the proximity filter owns motion during
its repulse/wait schedule); if the post-contact wait expires with the
path still physically obstructed, the blocker's footprint is escalated to
occupied-space cost and a replan is requested.  Escalations are anchored
snapshots and dissolve once the human moves away from the anchor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Pose, VelocityCommand, wrap_angle
from .proximity import ContactEvent, TimeoutExpired


@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class TurnToContact:
    """Rotating toward a world heading recorded at contact time."""

    target: float


@dataclass(frozen=True)
class Navigate:
    pass


@dataclass(frozen=True)
class ContactHold:
    """Holding after contact while navigating; human_id may be unknown."""

    human_id: str | None


@dataclass(frozen=True)
class Escalated:
    """One-tick state carrying the replan directive after an escalation."""


@dataclass(frozen=True)
class GoalReached:
    pass


FsmState = Idle | TurnToContact | Navigate | ContactHold | Escalated | GoalReached


def state_name(state: FsmState) -> str:
    return type(state).__name__


@dataclass(frozen=True)
class BehaviorConfig:
    turn_tol: float = 0.1
    rho: float = 0.5
    omega_max: float = 1.5

    def __post_init__(self):
        if self.turn_tol <= 0.0 or self.rho <= 0.0:
            raise ValueError("turn_tol and rho must be > 0")


@dataclass(frozen=True)
class EscalationRecord:
    """Anchored footprint of a human that kept blocking past the timeout."""

    human_id: str
    anchor: tuple[float, float]
    footprint_radius: float
    created_tick: int
    rho: float


@dataclass(frozen=True)
class HumanTruth:
    """Minimal ground-truth snapshot the FSM needs about one human."""

    id: str
    x: float
    y: float
    radius: float


@dataclass
class FsmInputs:
    tick: int
    dt: float
    pose: Pose
    events: list = field(default_factory=list)
    contact_human: str | None = None
    at_goal: bool = False
    blocking: tuple[tuple[float, float], list[str]] | None = None
    humans: list[HumanTruth] = field(default_factory=list)
    has_path: bool = False


@dataclass
class FsmResult:
    state: FsmState
    replan: bool = False
    turn_cmd: VelocityCommand | None = None
    new_records: list[EscalationRecord] = field(default_factory=list)
    transitions: list[tuple[str, str, str]] = field(default_factory=list)


def first_path_obstruction(
    path, from_index: int, humans: list[HumanTruth], clearance: float
) -> tuple[tuple[float, float], list[str]] | None:
    """First remaining path point a human disc physically obstructs.

    A point counts as obstructed when some human center is within
    (human radius + clearance) of it; clearance is the robot's inscribed
    radius.  Returns (point, ids sorted ascending) or None.
    """
    if path is None:
        return None
    for wx, wy in path.waypoints[max(0, from_index):]:
        ids = [
            h.id
            for h in humans
            if math.hypot(h.x - wx, h.y - wy) <= h.radius + clearance
        ]
        if ids:
            return ((wx, wy), sorted(ids))
    return None


def maintain_escalations(
    records: list[EscalationRecord], humans: list[HumanTruth]
) -> tuple[list[EscalationRecord], list[EscalationRecord]]:
    """Split records into (kept, dropped).

    A record drops once its human's center is farther than rho from the
    anchor, or the human no longer exists; the human then reverts to its
    class base cost on the next semantic layer build.
    """
    by_id = {h.id: h for h in humans}
    kept: list[EscalationRecord] = []
    dropped: list[EscalationRecord] = []
    for rec in records:
        h = by_id.get(rec.human_id)
        if h is None or math.hypot(h.x - rec.anchor[0], h.y - rec.anchor[1]) > rec.rho:
            dropped.append(rec)
        else:
            kept.append(rec)
    return kept, dropped


def turn_command(target: float, theta: float, dt: float, omega_max: float) -> VelocityCommand:
    """Rotate toward a world heading at fixed rate, clipping the last step."""
    err = wrap_angle(target - theta)
    omega = min(max(err / dt, -omega_max), omega_max)
    return VelocityCommand(0.0, 0.0, omega)


def fsm_step(state: FsmState, inp: FsmInputs, cfg: BehaviorConfig) -> FsmResult:
    """Advance the state machine one tick.

    Escalation fires only on TimeoutExpired with the path still
    physically obstructed, never on contact alone.  The chosen blocker
    is the lowest-id human at the first obstructed path point; its
    current footprint becomes the anchored record.
    """
    res = FsmResult(state)
    contact = next((e for e in inp.events if isinstance(e, ContactEvent)), None)
    timeout = any(isinstance(e, TimeoutExpired) for e in inp.events)

    def goto(new_state: FsmState, trigger: str):
        res.transitions.append((state_name(res.state), state_name(new_state), trigger))
        res.state = new_state

    if isinstance(res.state, Idle):
        if contact is not None:
            goto(TurnToContact(wrap_angle(inp.pose.theta + contact.azimuth)), "contact")
    elif isinstance(res.state, TurnToContact):
        if contact is not None:
            goto(TurnToContact(wrap_angle(inp.pose.theta + contact.azimuth)), "contact")
        else:
            err = wrap_angle(res.state.target - inp.pose.theta)
            if abs(err) < cfg.turn_tol:
                goto(Idle(), "turn_done")
            else:
                res.turn_cmd = turn_command(
                    res.state.target, inp.pose.theta, inp.dt, cfg.omega_max
                )
    elif isinstance(res.state, Navigate):
        if inp.at_goal:
            goto(GoalReached(), "goal")
        elif contact is not None:
            goto(ContactHold(inp.contact_human), "contact")
    elif isinstance(res.state, ContactHold):
        if timeout:
            if inp.blocking is not None:
                point, ids = inp.blocking
                hid = ids[0]
                human = next(h for h in inp.humans if h.id == hid)
                res.new_records.append(
                    EscalationRecord(
                        human_id=hid,
                        anchor=(human.x, human.y),
                        footprint_radius=human.radius,
                        created_tick=inp.tick,
                        rho=cfg.rho,
                    )
                )
                res.replan = True
                goto(Escalated(), "timeout_blocked")
            else:
                goto(Navigate(), "timeout_clear")
        elif inp.blocking is None:
            goto(Navigate(), "path_clear")
    elif isinstance(res.state, Escalated):
        goto(Navigate(), "replanned")
    # GoalReached is terminal
    return res
