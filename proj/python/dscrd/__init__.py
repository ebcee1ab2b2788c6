"""Rate-distortion limits for multi-hop distributed coding of vector Gaussian sources."""

from ._dscrd import (
    Context,
    Error,
    InfeasibleTargetError,
    ModelError,
    Network,
    NetworkReport,
    NodeReport,
    Observation,
    Scheme,
    appendix_c_matrix,
    backward_channel,
    build_context,
    design_scheme,
    evaluate,
    fuse,
    load_config,
    node_statistic,
    parse_config,
    run,
    simulate,
    sweep,
)

__all__ = [
    "Context",
    "Error",
    "InfeasibleTargetError",
    "ModelError",
    "Network",
    "NetworkReport",
    "NodeReport",
    "Observation",
    "Scheme",
    "appendix_c_matrix",
    "backward_channel",
    "build_context",
    "design_scheme",
    "evaluate",
    "fuse",
    "load_config",
    "node_statistic",
    "parse_config",
    "run",
    "simulate",
    "sweep",
]
