"""Numerical tolerances and size limits shared by every module."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_DIM_CAP = 2**21


class DimensionLimitError(ValueError):
    """Raised when a construction would exceed the configured dimension cap."""


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10
    equality: float = 1e-9
    eigen: float = 1e-8
    cp: float = 1e-9
    degenerate: float = 1e-6


TOL = Tolerances()

GROUP_LIMIT = 6
COLORING_LIMIT = 8


def dim_cap() -> int:
    """Global dimension cap, overridable through ``QZK_DIM_CAP``."""
    raw = os.environ.get("QZK_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    return int(raw)


def check_dim(dim: int, what: str = "dimension") -> int:
    cap = dim_cap()
    if dim > cap:
        raise DimensionLimitError(f"{what} {dim} exceeds cap {cap}")
    return dim
