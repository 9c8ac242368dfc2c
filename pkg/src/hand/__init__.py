"""
Articulated hand layer.
"""

from .rig import HandParams, HandRig, HandState, check_jacobians, forward, hand_mesh
from .template import build_default_rig, default_rig

__all__ = [
    "HandParams",
    "HandRig",
    "HandState",
    "build_default_rig",
    "check_jacobians",
    "default_rig",
    "forward",
    "hand_mesh",
]
