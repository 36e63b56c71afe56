"""rsglinear Config Layer."""
from .config import RunConfig

__all__ = ["RunConfig"]
