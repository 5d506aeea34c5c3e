from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import Grid


@dataclass
class NormReport:
    """One quasi-norm evaluation.

    For the additive routes (``diff``, ``osc``) ``total = base + seminorm``.
    The ``lp`` and ``clubsuit`` routes are not split; they report ``base = 0``
    and the whole value as ``seminorm``.
    """

    route: str
    base: float
    seminorm: float
    total: float
    base_kind: str = "plain"
    params: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    domain: str = ""
    wall_time: float = 0.0


def grid_meta(grid: Grid) -> dict[str, Any]:
    return {"d": grid.d, "n": grid.n, "periodic": grid.periodic,
            "origin": grid.origin, "extent": grid.extent}
