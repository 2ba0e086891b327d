"""Closed-chain manipulator dynamics and actuator sizing workbench."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    FrictionParams,
    JointSpec,
    Link,
    LinkInertia,
    LoopClosureSpec,
    ModelError,
    PayloadSpec,
    RigidBodyModel,
    ScalingLaw,
    ScenarioConfig,
    apply_scaling,
    attach_actuator_masses,
    attach_payload,
    validate_model,
)
from .robots import build_cr4, build_cr6, build_robot, reach  # noqa: F401
