"""Feature-free video stabilization by direct rotation estimation on SO(3)."""

__version__ = "0.1.0"
