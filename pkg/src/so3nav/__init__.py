"""Passivity-based semi-autonomous attitude navigation for rigid-body networks
on SO(3): simulation, stealthy null-space control, energy/passivity monitoring,
operator-model identification, and a live teleoperation service.
"""

from . import analysis, errors, navigation, network, operators, scenario, so3, sysid

__all__ = [
    "analysis",
    "errors",
    "navigation",
    "network",
    "operators",
    "scenario",
    "so3",
    "sysid",
]

__version__ = "0.1.0"
