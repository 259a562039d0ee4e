"""Dyadic model sets, thick families, measures and trace audits."""

from ._stlab import *  # noqa: F401,F403
from ._stlab import Error, ExperimentConfig

__all__ = [name for name in dir() if not name.startswith("_")]


def failed_rows(rows):
    """Rows of an audit whose flag is fail."""
    return [r for r in rows if r["flag"] == "fail"]
