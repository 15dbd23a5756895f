"""Priority-based multi-level bandwidth adaptation for multi-class cells."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
