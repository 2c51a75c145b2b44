from .core import (
    EMBED_DIM,
    STEPPERS,
    CfgParams,
    Condition,
    CondKind,
    GuidedField,
    TimeSchedule,
    Trajectory,
    VelocityField,
    cfg_velocity,
    denoise,
    euler_step,
    get_stepper,
    invert,
    one_hot_condition,
    relative_l2,
    rf_solver_step,
)
from .fields import CountingField, LinearField, MlpField, make_linear_field

__all__ = [
    "EMBED_DIM",
    "STEPPERS",
    "CfgParams",
    "Condition",
    "CondKind",
    "CountingField",
    "GuidedField",
    "LinearField",
    "MlpField",
    "TimeSchedule",
    "Trajectory",
    "VelocityField",
    "cfg_velocity",
    "denoise",
    "euler_step",
    "get_stepper",
    "invert",
    "make_linear_field",
    "one_hot_condition",
    "relative_l2",
    "rf_solver_step",
]
