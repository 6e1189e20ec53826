"""Session-based job recommendation with resume-driven preference drift."""

__version__ = "0.1.0"
