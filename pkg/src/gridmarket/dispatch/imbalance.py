"""Portfolio imbalance: deviation from the cleared position, split into small and large parts."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Portfolio, TimeGrid, series_at
from ..optim import LinExpr, Model, quicksum

PARTS = ("small_up", "small_down", "large_up", "large_down")


@dataclass
class ImbalanceVars:
    parts: dict[str, dict[int, object]] = field(default_factory=dict)
    prices: dict[str, list[float]] = field(default_factory=dict)
    cost: LinExpr = field(default_factory=LinExpr)

    def total(self, t: int) -> LinExpr:
        p = self.parts
        return (p["small_up"][t] + p["large_up"][t]) - (p["small_down"][t] + p["large_down"][t])


def imbalance_prices(portfolio: Portfolio, price, n: int) -> dict[str, list[float]]:
    # Clipped at zero: a negative price would reward opposite deviations that cancel out.
    pr = portfolio.imbalance
    small = [max(pr.small(series_at(price, t)), 0.0) for t in range(n)]
    large = [max(pr.large(series_at(price, t)), 0.0) for t in range(n)]
    return {"small_up": small, "small_down": small, "large_up": large, "large_down": large}


def build_imbalance(m: Model, portfolio: Portfolio, grid: TimeGrid,
                    net_power: dict[int, LinExpr], target, price) -> ImbalanceVars:
    """Tie the portfolio's net power to its target through four priced deviation variables."""
    iv = ImbalanceVars(prices=imbalance_prices(portfolio, price, grid.n_opt))
    caps = {"small_up": portfolio.max_small_imbalance, "small_down": portfolio.max_small_imbalance,
            "large_up": portfolio.max_total_imbalance, "large_down": portfolio.max_total_imbalance}
    pid = portfolio.id
    for part in PARTS:
        iv.parts[part] = {t: m.add_var(f"{pid}_I_{part}_{t}", 0.0, caps[part]) for t in grid.opt}
    for t in grid.opt:
        m.add(net_power[t] - series_at(target, t) == iv.total(t), f"{pid}_imbalance_{t}")
    iv.cost = quicksum(iv.prices[part][t] * grid.delta_t * iv.parts[part][t]
                       for part in PARTS for t in grid.opt)
    return iv
