"""Finite-key rate of four-intensity decoy-state MDI-QKD with intensity-fluctuating sources."""

from ._core import (
    ChannelParams,
    ConfigError,
    ProtocolPoint,
    SideSources,
    SolverError,
    __version__,
    chernoff_lower,
    chernoff_upper,
    config_hash,
    default_config_text,
    monte_carlo_yield,
    optimize,
    pair_yield,
    scan_csv,
    secure_key_rate,
)

__all__ = [
    "ChannelParams",
    "ConfigError",
    "ProtocolPoint",
    "SideSources",
    "SolverError",
    "__version__",
    "chernoff_lower",
    "chernoff_upper",
    "config_hash",
    "default_config_text",
    "monte_carlo_yield",
    "optimize",
    "pair_yield",
    "scan_csv",
    "secure_key_rate",
]
