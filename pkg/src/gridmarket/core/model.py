"""Geography, units and portfolios."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .timegrid import Durations, discretize_durations

Series = float | Sequence[float]

DEFAULT_FRAGMENT_MULTIPLIERS = (0.85, 0.90, 0.95, 1.00, 1.05, 1.10, 1.15)


def series_at(values: Series, t: int) -> float:
    """Value of a scalar-or-series parameter at step ``t`` (last value repeats)."""
    if np.isscalar(values):
        return float(values)
    if len(values) == 0:
        raise ValueError("empty series")
    return float(values[min(max(t, 0), len(values) - 1)])


def as_series(values: Series, n: int) -> np.ndarray:
    return np.array([series_at(values, t) for t in range(n)], dtype=float)


class Strategy(str, enum.Enum):
    BASE = "base"
    PEAK = "peak"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class Zone:
    id: str
    p_min: float = -500.0
    p_max: float = 3000.0
    control_area: str = ""

    def __post_init__(self):
        if not self.p_min < self.p_max:
            raise ValueError(f"zone {self.id}: price floor must be below price cap")


@dataclass(frozen=True)
class MarketBorder:
    """Commercial link from ``upstream`` to ``downstream``; positive flow goes downstream."""

    id: str
    upstream: str
    downstream: str
    ntc_min: Series = 0.0
    ntc_max: Series = 0.0
    lossy_dc: bool = False
    loss: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss < 1.0:
            raise ValueError(f"border {self.id}: loss factor must lie in [0, 1)")
        lo, hi = np.atleast_1d(self.ntc_min), np.atleast_1d(self.ntc_max)
        n = max(lo.size, hi.size)
        if np.any(as_series(self.ntc_min, n) > as_series(self.ntc_max, n)):
            raise ValueError(f"border {self.id}: minimum exchange exceeds maximum")

    def orientation(self, zone: str) -> int:
        if zone == self.upstream:
            return 1
        if zone == self.downstream:
            return -1
        return 0


@dataclass(frozen=True)
class CriticalBranch:
    id: str
    q_max: Series
    ptdf: dict[str, float]
    frm: Series = 0.0
    q_ref: Series = 0.0
    balance_ref: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.atleast_1d(self.frm) < 0):
            raise ValueError(f"branch {self.id}: reliability margin must be non-negative")


@dataclass(frozen=True)
class ProcuredReserves:
    """Contracted reserve volumes (MW); scalars or per-step series."""

    fcr_up: Series = 0.0
    fcr_down: Series = 0.0
    afrr_up: Series = 0.0
    afrr_down: Series = 0.0
    mfrr_up: Series = 0.0
    mfrr_down: Series = 0.0
    rr_up: Series = 0.0
    rr_down: Series = 0.0

    def automated(self, direction: str, t: int) -> float:
        return (series_at(getattr(self, f"fcr_{direction}"), t)
                + series_at(getattr(self, f"afrr_{direction}"), t))

    def manual(self, direction: str, t: int) -> float:
        return (series_at(getattr(self, f"mfrr_{direction}"), t)
                + series_at(getattr(self, f"rr_{direction}"), t))

    def any(self) -> bool:
        return any(np.any(np.atleast_1d(getattr(self, f)) > 0) for f in self.__dataclass_fields__)


@dataclass(frozen=True)
class Unit:
    id: str
    zone: str
    portfolio: str = ""

    technology = "unit"


@dataclass(frozen=True)
class ThermalUnit(Unit):
    p_min: Series = 0.0
    p_max: Series = 0.0
    ramp_max: float = 0.0          # MW per step, 0 = unconstrained
    c_var: float = 0.0             # EUR/MWh
    c_startup: float = 0.0         # EUR per start
    d_startup: float = 0.0         # hours
    d_shutdown: float = 0.0
    d_min_on: float = 0.0
    d_min_off: float = 0.0
    d_min_stable: float = 0.0
    max_daily_energy: Series | None = None   # MWh per calendar day
    reserves: ProcuredReserves = field(default_factory=ProcuredReserves)
    afrr_max: float = 0.0
    fcr_max: float = 0.0
    strategy: Strategy = Strategy.INTERMEDIATE
    history: tuple[float, ...] = ()    # power of past steps, most recent last

    technology = "thermal"

    def durations(self, delta_t: float) -> Durations:
        return discretize_durations(delta_t, min_on=self.d_min_on, min_off=self.d_min_off,
                                    startup=self.d_startup, shutdown=self.d_shutdown,
                                    min_stable=self.d_min_stable)


@dataclass(frozen=True)
class StorageUnit(Unit):
    p_min: float = 0.0          # <= 0, maximum charging power as a negative number
    p_max: float = 0.0          # >= 0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    e_min: float = 0.0
    e_max: float = 0.0
    e_init: float = 0.0
    is_ev: bool = False
    e_displacement: Series = 0.0   # MWh consumed by driving per step (EV only)
    kind: str = "battery"          # battery | pumped_hydro | ev

    technology = "storage"

    def __post_init__(self):
        if self.p_min > 0 or self.p_max < 0:
            raise ValueError(f"storage {self.id}: need p_min <= 0 <= p_max")
        for eta in (self.eta_charge, self.eta_discharge):
            if not 0 < eta <= 1:
                raise ValueError(f"storage {self.id}: efficiencies must lie in (0, 1]")
        if not self.e_min - 1e-9 <= self.e_init <= self.e_max + 1e-9:
            raise ValueError(f"storage {self.id}: initial energy outside [e_min, e_max]")

    @property
    def energy_floor(self) -> float:
        return 0.3 * self.e_max if self.is_ev else self.e_min

    @property
    def addl_key(self) -> str:
        return "ev" if self.is_ev else self.kind


@dataclass(frozen=True)
class HydroUnit(Unit):
    p_min: Series = 0.0
    p_max: Series = 0.0
    water_value: float = 0.0
    fragment_multipliers: tuple[float, ...] = DEFAULT_FRAGMENT_MULTIPLIERS
    e_max: float = 1e12          # reservoir size (MWh)
    e_init: float = 1e12
    inflow: Series = 0.0

    technology = "hydro"


@dataclass(frozen=True)
class RenewableUnit(Unit):
    """Wind or PV park; ``forecast`` maps execution step to a power series."""

    kind: str = "wind"
    curtailment: float = 0.0
    c_var: float = 0.0
    forecast: "object" = None

    technology = "renewable"


@dataclass(frozen=True)
class LoadUnit(Unit):
    p_load: float = 3000.0
    forecast: "object" = None

    technology = "load"


@dataclass(frozen=True)
class NonDispatchableUnit(Unit):
    """Must-run production (``producer=True``) or inflexible consumption."""

    c_var: float = 0.0
    producer: bool = True
    forecast: "object" = None

    technology = "nondispatchable"


@dataclass(frozen=True)
class FlexibleLoad(Unit):
    """Power-to-gas style consumer valued at a gas price."""

    p_min: Series = 0.0           # MW consumed, both bounds non-negative
    p_max: Series = 0.0
    efficiency: float = 1.0       # MWh of gas per MWh of electricity
    gas_price: Series = 0.0       # EUR/MWh of gas

    technology = "flexload"


@dataclass(frozen=True)
class ImbalancePricing:
    alpha_small: float = 1.0
    beta_small: float = 10.0
    alpha_large: float = 1.0
    beta_large: float = 50.0

    def small(self, forecast_price: float) -> float:
        return self.alpha_small * forecast_price + self.beta_small

    def large(self, forecast_price: float) -> float:
        return self.alpha_large * forecast_price + self.beta_large


@dataclass(frozen=True)
class Portfolio:
    id: str
    zone: str
    unit_ids: tuple[str, ...] = ()
    imbalance: ImbalancePricing = field(default_factory=ImbalancePricing)
    max_small_imbalance: float = 10.0
    max_total_imbalance: float = 1e4

    def __post_init__(self):
        if not 0 <= self.max_small_imbalance <= self.max_total_imbalance:
            raise ValueError(f"portfolio {self.id}: need 0 <= small cap <= total cap")
