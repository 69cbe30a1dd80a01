"""Two-stream recurrent networks for skeleton-based action recognition."""

__version__ = "0.1.0"
