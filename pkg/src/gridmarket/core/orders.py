"""Market orders, couplings and the cleared-position lookup."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

PURCHASE = 1
SALE = -1


class Divisibility(str, enum.Enum):
    DIVISIBLE = "divisible"
    INDIVISIBLE = "indivisible"
    PARTIAL = "partially_indivisible"


class CouplingKind(str, enum.Enum):
    EXCLUSION = "exclusion"
    PARENT_CHILD = "parent_child"
    IDENTICAL_VOLUME = "identical_volume"
    IDENTICAL_RATIO = "identical_ratio"
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class Order:
    """One bid. ``side`` is +1 for a purchase and -1 for a sale.

    ``t_start`` is a step index and ``steps`` the number of steps covered, so
    a multi-step block has ``steps > 1``. Quantities are MW per step.
    """

    id: str
    zone: str
    side: int
    price: float
    q_min: float
    q_max: float
    t_start: int = 0
    steps: int = 1
    divisibility: Divisibility = Divisibility.DIVISIBLE
    unit: str = ""
    market: str = "DA"

    def __post_init__(self):
        if self.side not in (PURCHASE, SALE):
            raise ValueError(f"order {self.id}: side must be +1 (purchase) or -1 (sale)")
        if not 0 <= self.q_min <= self.q_max:
            raise ValueError(f"order {self.id}: need 0 <= q_min <= q_max")
        if self.steps < 1:
            raise ValueError(f"order {self.id}: duration must be positive")
        if self.divisibility is Divisibility.INDIVISIBLE and not (
                self.q_min == self.q_max > 0):
            raise ValueError(f"order {self.id}: indivisible orders need q_min = q_max > 0")

    @property
    def t_end(self) -> int:
        return self.t_start + self.steps

    def covers(self, t: int) -> bool:
        return self.t_start <= t < self.t_end

    @property
    def needs_binary(self) -> bool:
        return self.divisibility is not Divisibility.DIVISIBLE

    @property
    def is_sale(self) -> bool:
        return self.side == SALE


@dataclass(frozen=True)
class Coupling:
    id: str
    kind: CouplingKind
    members: tuple[str, ...]
    parent: str = ""
    energy_cap: float | None = None   # MWh, complement only

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError(f"coupling {self.id}: needs at least two members")
        if self.kind is CouplingKind.PARENT_CHILD and self.parent not in self.members:
            raise ValueError(f"coupling {self.id}: parent must be one of the members")

    @property
    def children(self) -> tuple[str, ...]:
        return tuple(m for m in self.members if m != self.parent)


@dataclass
class OrderBook:
    """Orders and couplings of one unit (or one session) for one market."""

    market: str = "DA"
    orders: list[Order] = field(default_factory=list)
    couplings: list[Coupling] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def extend(self, other: "OrderBook") -> None:
        self.orders.extend(other.orders)
        self.couplings.extend(other.couplings)

    def __len__(self):
        return len(self.orders)

    def validate(self) -> None:
        ids = {o.id for o in self.orders}
        if len(ids) != len(self.orders):
            raise ValueError("duplicate order ids in book")
        zone = {o.id: o.zone for o in self.orders}
        for c in self.couplings:
            missing = [m for m in c.members if m not in ids]
            if missing:
                raise ValueError(f"coupling {c.id} references unknown orders {missing}")
            if len({zone[m] for m in c.members}) > 1:
                raise ValueError(f"coupling {c.id} spans several zones")


def cleared_quantity(orders: Iterable[Order], accepted: Mapping[str, float], unit: str,
                     t: int, market: str | None = None) -> float:
    """Net position (MW, production positive) cleared for ``unit`` by orders starting at ``t``."""
    total = 0.0
    for o in orders:
        if o.unit != unit or o.t_start != t:
            continue
        if market is not None and o.market != market:
            continue
        total += -o.side * accepted.get(o.id, 0.0)
    return total
