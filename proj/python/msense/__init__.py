"""Python bindings for the msense depth-sensing core."""

from ._msense import *  # noqa: F401,F403
from ._msense import Error

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
