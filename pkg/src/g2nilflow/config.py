"""Shared numeric defaults."""

import os


def default_tol() -> float:
    """Default zero-test tolerance; override with the G2NILFLOW_TOL env var."""
    return float(os.environ.get("G2NILFLOW_TOL", "1e-9"))
