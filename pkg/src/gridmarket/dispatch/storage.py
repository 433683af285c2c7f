"""Storage units: split charge/discharge power and an energy-level recursion."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import StorageUnit, TimeGrid, series_at
from ..optim import LinExpr, Model, quicksum


@dataclass
class StorageVars:
    unit: StorageUnit
    grid: TimeGrid
    buy: dict[int, object] = field(default_factory=dict)     # <= 0
    sell: dict[int, object] = field(default_factory=dict)    # >= 0
    selling: dict[int, object] = field(default_factory=dict)
    energy: dict[int, LinExpr] = field(default_factory=dict)

    def p(self, t: int) -> LinExpr:
        return self.buy[t] + self.sell[t]


def build_storage(m: Model, unit: StorageUnit, grid: TimeGrid, *, neutral: bool = True,
                  terminal_energy: float | None = None) -> StorageVars:
    """Add one storage unit over ``grid.opt``.

    ``neutral`` requires the energy drawn by discharging to equal the energy
    put in by charging over the horizon. ``terminal_energy`` instead puts a
    floor under the final energy level.
    """
    sv = StorageVars(unit, grid)
    uid, dt = unit.id, grid.delta_t
    eta_c, eta_d = unit.eta_charge, unit.eta_discharge
    floor, cap = unit.energy_floor, unit.e_max
    prev = LinExpr.of(unit.e_init)
    for t in grid.opt:
        b = m.add_var(f"{uid}_buy_{t}", unit.p_min, 0.0)
        s = m.add_var(f"{uid}_sell_{t}", 0.0, unit.p_max)
        sigma = m.add_var(f"{uid}_sigma_{t}", 0.0, 1.0, binary=True)
        m.add(s <= unit.p_max * sigma, f"{uid}_sell_gate_{t}")
        m.add(-1.0 * b <= -unit.p_min * (1 - sigma), f"{uid}_buy_gate_{t}")
        level = prev - eta_c * dt * b - (dt / eta_d) * s
        if unit.is_ev:
            level = level - series_at(unit.e_displacement, t)
        e = m.add_var(f"{uid}_E_{t}", floor, cap)
        m.add(e == level, f"{uid}_energy_{t}")
        sv.buy[t], sv.sell[t], sv.selling[t], sv.energy[t] = b, s, sigma, LinExpr.of(e)
        prev = LinExpr.of(e)
    if neutral:
        m.add(quicksum(sv.sell[t] * (1.0 / eta_d) for t in grid.opt)
              == quicksum(-eta_c * sv.buy[t] for t in grid.opt), f"{uid}_neutral")
    if terminal_energy is not None:
        m.add(prev >= min(max(terminal_energy, floor), cap), f"{uid}_terminal")
    return sv


def storage_value(sv: StorageVars, price) -> LinExpr:
    """Market value of the storage schedule at ``price`` (sales earn, purchases pay)."""
    dt = sv.grid.delta_t
    return quicksum(series_at(price, t) * dt * sv.p(t) for t in sv.grid.opt)


def replay_energy(unit: StorageUnit, power, delta_t: float) -> list[float]:
    """Energy levels implied by a power path (positive = discharge)."""
    e, out = unit.e_init, []
    for t, p in enumerate(power):
        if p >= 0:
            e -= p * delta_t / unit.eta_discharge
        else:
            e -= p * delta_t * unit.eta_charge
        if unit.is_ev:
            e -= series_at(unit.e_displacement, t)
        out.append(e)
    return out
