"""Tactile-aware social navigation in 2D: layered costmaps, a compliant
velocity filter fusing laser and touch, a touch-interaction state machine
with cost escalation, and a deterministic scenario simulator."""

from .behavior import (
    BehaviorConfig,
    EscalationRecord,
    FsmInputs,
    FsmResult,
    fsm_step,
    maintain_escalations,
)
from .costmap import (
    InflationParams,
    ProxemicParams,
    SocialCostTable,
    build_obstacle_layer,
    build_semantic_obstacle_layer,
    build_static_layer,
    inflate_layer,
    proxemic_layer,
)
from .geometry import Pose, VelocityCommand
from .grid import FREE, INSCRIBED, LETHAL, CostLayer, GridSpec, combine, write_pgm
from .planner import (
    Path,
    PlannerConfig,
    PlannerError,
    StartBlockedError,
    local_follow,
    path_blocked,
    plan_global,
)
from .protocol import rle_decode, rle_encode, snapshot_message, validate_control
from .proximity import ContactEvent, FilterConfig, FilterState, TimeoutExpired, filter_step
from .runner import ControlError, Engine, RunReport, replay, run
from .scenario import Scenario, ScenarioError, build_world, list_scenarios, load_bundled, load_scenario
from .sensors import HumanEstimate, LaserScan, TactileFrame, camera_detect, lidar_scan, tactile_sample
from .world import HumanAgent, RobotState, World

__version__ = "0.1.0"
