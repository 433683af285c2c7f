"""Positions already cleared on earlier markets."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Order, cleared_quantity


@dataclass
class ClearedHistory:
    """Orders and accepted volumes of earlier sessions, day-ahead first."""

    sessions: list[tuple[list[Order], dict[str, float]]] = field(default_factory=list)

    def add(self, orders, accepted) -> None:
        self.sessions.append((list(orders), dict(accepted)))

    def position(self, unit: str, t: int) -> float:
        """Net production (MW) cleared for ``unit`` at step ``t`` over all sessions."""
        return sum(cleared_quantity(orders, acc, unit, t) for orders, acc in self.sessions)

    def fragment_position(self, unit: str, t: int, fragment: int) -> float:
        tag = f":frag{fragment}"
        total = 0.0
        for orders, acc in self.sessions:
            total += cleared_quantity([o for o in orders if o.id.endswith(tag)], acc, unit, t)
        return total
