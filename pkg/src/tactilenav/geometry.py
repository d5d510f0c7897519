"""Planar poses, velocity commands, and angle helpers shared across the stack."""
from __future__ import annotations

import math
from dataclasses import dataclass


def wrap_angle(theta: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi].

    The positive end is closed so that a heading of exactly pi is
    representable and stable under repeated normalization.
    """
    r = math.fmod(theta + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


def round_half_away(x: float) -> int:
    """Round with halves going away from zero (0.5 -> 1, -0.5 -> -1).

    Python's built-in round() ties to even, which is the wrong convention
    for cost discretization here.
    """
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class Pose:
    """Robot or human pose in world coordinates; theta in (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def body_to_world(self, bx: float, by: float) -> tuple[float, float]:
        """Rotate a body-frame vector into the world frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * bx - s * by, s * bx + c * by)

    def world_to_body(self, wx: float, wy: float) -> tuple[float, float]:
        """Rotate a world-frame vector into the body frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * wx + s * wy, -s * wx + c * wy)


@dataclass(frozen=True)
class VelocityCommand:
    """Body-frame velocity command: vx, vy in m/s, omega in rad/s."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def clamped(self, v_max: float, omega_max: float) -> "VelocityCommand":
        """Scale the linear part down to v_max and clip omega symmetrically."""
        vx, vy = self.vx, self.vy
        sp = math.hypot(vx, vy)
        if sp > v_max and sp > 0.0:
            k = v_max / sp
            vx, vy = vx * k, vy * k
        om = min(max(self.omega, -omega_max), omega_max)
        return VelocityCommand(vx, vy, om)


ZERO_CMD = VelocityCommand(0.0, 0.0, 0.0)
