from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OrderConfig:
    """Pricing and volume conventions shared by the order generators."""

    must_run_offset: float = 0.1      # EUR/MWh above the zone floor
    penalty_auto: float = 5000.0      # EUR/MWh subtracted from c_var on automated reserve volume
    penalty_manual: float = 2500.0
    # "minimum": q_min = Curt * P (as printed); "allowed": q_min = (1 - Curt) * P
    curtailment_reading: str = "minimum"
    tol: float = 1e-6
    min_volume: float = 0.01          # MW; smaller plan differences are solver noise

    def __post_init__(self):
        if self.curtailment_reading not in ("minimum", "allowed"):
            raise ValueError("curtailment_reading must be 'minimum' or 'allowed'")

    def snap(self, values) -> np.ndarray:
        """Plan volumes rounded to ``min_volume``, removing solver slack noise."""
        v = np.asarray(values, dtype=float)
        return np.round(v / self.min_volume) * self.min_volume
