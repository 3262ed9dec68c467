"""Playability repair for tile-based game levels."""

from ._levelrepair import *  # noqa: F401,F403
from ._levelrepair import LevelRepairError, __doc__  # noqa: F401

__version__ = "0.1.0"
