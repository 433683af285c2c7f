from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from ..core import as_series


@dataclass
class ForecastMatrix:
    """Forecasts of one quantity issued at several execution steps.

    ``columns[t_ex][T]`` is the value for target step ``T`` seen at ``t_ex``.
    Targets before ``t_ex`` hold the realization (already observed).
    """

    realization: np.ndarray
    columns: dict[int, np.ndarray] = field(default_factory=dict)
    errors: np.ndarray | None = None   # real-time estimation error per target

    def execution_steps(self) -> list[int]:
        return sorted(self.columns)

    def at(self, t_ex: int) -> np.ndarray:
        """Latest column issued no later than ``t_ex``."""
        keys = self.execution_steps()
        i = bisect.bisect_right(keys, t_ex)
        if i == 0:
            raise KeyError(f"no forecast issued at or before step {t_ex}")
        return self.columns[keys[i - 1]]

    @classmethod
    def perfect(cls, values) -> "ForecastMatrix":
        v = np.asarray(values, dtype=float)
        return cls(v.copy(), {-10**9: v.copy()})

    def window(self, offset: int) -> "ForecastMatrix":
        """Same forecasts with targets and execution steps counted from ``offset``."""
        errors = None if self.errors is None else self.errors[offset:]
        return ForecastMatrix(self.realization[offset:],
                              {k - offset: v[offset:] for k, v in self.columns.items()}, errors)

    def to_rows(self):
        """(target, {t_ex: value}) rows for a wide CSV."""
        keys = self.execution_steps()
        for T in range(len(self.realization)):
            yield T, {k: float(self.columns[k][T]) for k in keys}


def forecast_values(source, t_ex: int, n: int, unit_id: str = "") -> np.ndarray:
    """Power or price path of length ``n`` visible at ``t_ex``."""
    if source is None:
        raise KeyError(f"unit {unit_id}: no forecast available")
    if isinstance(source, ForecastMatrix):
        try:
            col = source.at(t_ex)
        except KeyError as exc:
            raise KeyError(f"unit {unit_id}: {exc.args[0]}") from None
        return extend_periodic(col, n)
    return extend_periodic(as_series(source, max(n, len(np.atleast_1d(source)))), n)


def extend_periodic(values, n: int) -> np.ndarray:
    """First ``n`` values, repeating the series cyclically when it is shorter."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty series")
    if v.size >= n:
        return v[:n].copy()
    reps = -(-n // v.size)
    return np.tile(v, reps)[:n]
