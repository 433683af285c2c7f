"""Discretised durations and the time frames a unit is optimised over."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta

log = logging.getLogger(__name__)

# Extra look-ahead (hours) added after the simulated window, per technology.
ADDITIONAL_HOURS = {
    "thermal": 0,
    "battery": 24,
    "ev": 24,
    "pumped_hydro": 144,
    "hydro": 12,
    "wind": 0,
    "pv": 0,
    "load": 0,
    "nondispatchable": 0,
    "flexload": 0,
}


class TimeGridError(ValueError):
    pass


@dataclass(frozen=True)
class Durations:
    """Durations of a thermal unit expressed in whole time steps."""

    on: int
    off: int
    startup: int
    shutdown: int
    stable: int

    @property
    def traceback(self) -> int:
        return max(self.on + self.startup, self.off + self.shutdown) + 1

    @property
    def case(self) -> tuple[bool, bool, bool]:
        """(has STOP, has FLAT, has START): identifies one of the eight cases."""
        return self.shutdown >= 1, self.stable >= 2, self.startup >= 1


def _ceil(x: float) -> int:
    # Guard against 0.6/0.2 = 3.0000000000000004 style noise.
    return math.ceil(round(x, 9))


def _floor(x: float) -> int:
    return math.floor(round(x, 9))


def discretize_durations(delta_t: float, *, min_on: float = 0.0, min_off: float = 0.0,
                         startup: float = 0.0, shutdown: float = 0.0,
                         min_stable: float = 0.0) -> Durations:
    """Convert durations in hours to step counts for a step of ``delta_t`` hours."""
    if delta_t <= 0:
        raise TimeGridError("time step must be positive")
    for label, v in (("min_on", min_on), ("min_off", min_off), ("startup", startup),
                     ("shutdown", shutdown), ("min_stable", min_stable)):
        if v < 0:
            raise TimeGridError(f"{label} duration must be non-negative")
    if min_stable > min_on:
        log.warning("minimum stable time %.3gh exceeds minimum on time %.3gh; "
                    "raising minimum on time", min_stable, min_on)
        min_on = min_stable
    stable = _ceil(min_stable / delta_t)
    return Durations(
        on=max(1, _ceil(min_on / delta_t)),
        off=max(1, _ceil(min_off / delta_t)),
        startup=_floor(startup / delta_t),
        shutdown=_floor(shutdown / delta_t),
        stable=stable if stable >= 2 else 0,
    )


@dataclass(frozen=True)
class TimeGrid:
    """Step-indexed time frames.

    Step 0 is ``t_start``. ``sim`` is the simulated window, ``opt`` extends it by
    the technology look-ahead, ``prev`` holds the traceback steps before 0.
    """

    delta_t: float
    n_sim: int
    n_addl: int = 0
    traceback: int = 1
    n_post: int = 0
    t_start: datetime | None = None

    def __post_init__(self):
        if self.n_sim < 1:
            raise TimeGridError("simulation window must contain at least one step")
        if self.delta_t <= 0:
            raise TimeGridError("time step must be positive")

    @property
    def n_opt(self) -> int:
        return self.n_sim + self.n_addl

    @property
    def sim(self) -> range:
        return range(self.n_sim)

    @property
    def opt(self) -> range:
        return range(self.n_opt)

    @property
    def prev(self) -> range:
        return range(-self.traceback, 0)

    @property
    def ext(self) -> range:
        return range(-self.traceback, self.n_opt + self.n_post)

    @property
    def grad(self) -> list[int]:
        return [-1] + list(range(self.n_opt - 1))

    def timestamp(self, t: int) -> datetime:
        base = self.t_start or datetime(2000, 1, 1)
        return base + timedelta(hours=self.delta_t * t)

    def day_of(self, t: int) -> int:
        """Calendar-day index (relative to the day of ``t_start``) of step ``t``."""
        base = self.t_start or datetime(2000, 1, 1)
        ts = self.timestamp(t)
        return (ts.date() - base.date()).days


def build_time_grid(t_start: datetime, t_end: datetime, delta_t: float,
                    technology: str = "thermal", durations: Durations | None = None,
                    n_post: int = 0) -> TimeGrid:
    """Grid for one unit; ``t_end`` is exclusive."""
    if delta_t <= 0:
        raise TimeGridError("time step must be positive")
    if t_end < t_start + timedelta(hours=delta_t):
        raise TimeGridError("end of the simulation window lies before start + one time step")
    if technology not in ADDITIONAL_HOURS:
        raise TimeGridError(f"unknown technology {technology!r}")
    span = (t_end - t_start).total_seconds() / 3600.0
    n_sim = _floor(span / delta_t)
    n_addl = _ceil(ADDITIONAL_HOURS[technology] / delta_t)
    traceback = durations.traceback if durations is not None else 1
    return TimeGrid(delta_t, n_sim, n_addl, traceback, n_post if n_post else 0, t_start)
