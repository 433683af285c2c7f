from __future__ import annotations

from dataclasses import dataclass, field

from ..core import CriticalBranch, MarketBorder, Zone

ATC = "atc"
FLOW_BASED = "fb"


@dataclass
class Network:
    """Zones plus the commercial (borders) and physical (critical branches) links between them."""

    zones: dict[str, Zone]
    borders: list[MarketBorder] = field(default_factory=list)
    branches: list[CriticalBranch] = field(default_factory=list)
    mode: str = ATC

    def __post_init__(self):
        if self.mode not in (ATC, FLOW_BASED):
            raise ValueError(f"unknown network mode {self.mode!r}")
        for b in self.borders:
            for z in (b.upstream, b.downstream):
                if z not in self.zones:
                    raise ValueError(f"border {b.id} references unknown zone {z}")
        for cb in self.branches:
            missing = set(self.zones) - set(cb.ptdf)
            if missing:
                raise ValueError(f"branch {cb.id} lacks PTDF entries for {sorted(missing)}")

    @classmethod
    def single(cls, zone: str = "Z", **kw) -> "Network":
        return cls({zone: Zone(zone, **kw)})

    def with_mode(self, mode: str) -> "Network":
        return Network(self.zones, self.borders, self.branches, mode)

    def incident(self, zone: str) -> list[MarketBorder]:
        return [b for b in self.borders if zone in (b.upstream, b.downstream)]
