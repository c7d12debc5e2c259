"""User-controlled consent tagging for web data."""

__version__ = "0.1.0"
