"""Grammar check of thermal state sequences, written without reference to the MILP rows."""

from __future__ import annotations

from typing import Sequence

from ..core import Durations
from .history import DOWN, FLAT, OFF, ON, START, STOP, UP

ONLINE = {UP, DOWN, FLAT, ON}


def allowed_successors(state: str, dur: Durations) -> set[str]:
    has_stop, has_flat, has_start = dur.case
    online = {UP, DOWN, FLAT} if has_flat else {ON}
    if state == OFF:
        return {OFF, START} if has_start else {OFF} | online
    if state == START:
        return {START} | online
    if state == STOP:
        return {STOP, OFF}
    nxt = set(online) | ({STOP} if has_stop else {OFF})
    if has_flat:
        if state == UP:
            nxt.discard(DOWN)
            nxt.discard(STOP)
        elif state == DOWN:
            nxt.discard(UP)
    return nxt


def _is_on(s: str) -> bool:
    return s in ONLINE


def state_string_violations(seq: Sequence[str], dur: Durations, first: int) -> list[str]:
    """Rule breaches in ``seq``; only rules involving a step ``>= first`` are checked.

    ``seq`` covers the traceback window followed by the horizon. ``first`` is the
    index of step 0. Online steps carry a direction label when the stable state
    exists and the generic ``ON`` otherwise; the label of step ``-1`` is a
    decision, so label rules are checked from ``first - 1``.
    """
    has_stop, has_flat, has_start = dur.case
    n = len(seq)
    out: list[str] = []

    def decided(i: int) -> bool:
        return i >= first

    for i in range(1, n):
        a, b = seq[i - 1], seq[i]
        label_rule = has_flat and _is_on(a) and _is_on(b) and i >= first - 1
        if (decided(i) or label_rule) and b not in allowed_successors(a, dur):
            out.append(f"step {i - first}: {a} -> {b} not allowed")

    for i in range(1, n):
        # startup entries: OFF -> not OFF
        if seq[i - 1] == OFF and seq[i] != OFF:
            if has_start:
                for k in range(dur.startup):
                    j = i + k
                    if j < n and decided(j) and seq[j] != START:
                        out.append(f"step {j - first}: startup shorter than {dur.startup}")
                j = i + dur.startup
                if j < n and decided(j) and seq[j] == START:
                    out.append(f"step {j - first}: startup longer than {dur.startup}")
            for k in range(1, dur.on):
                j = i + dur.startup + k
                if j < n and decided(j) and not _is_on(seq[j]):
                    out.append(f"step {j - first}: online for fewer than {dur.on} steps")
        # shutdown entries
        if has_stop:
            entered = seq[i] == STOP and seq[i - 1] != STOP
        else:
            entered = seq[i] == OFF and seq[i - 1] != OFF
        if entered:
            if has_stop:
                for k in range(dur.shutdown):
                    j = i + k
                    if j < n and decided(j) and seq[j] != STOP:
                        out.append(f"step {j - first}: shutdown shorter than {dur.shutdown}")
                j = i + dur.shutdown
                if j < n and decided(j) and seq[j] == STOP:
                    out.append(f"step {j - first}: shutdown longer than {dur.shutdown}")
            for k in range(1, dur.off):
                j = i + dur.shutdown + k
                if j < n and decided(j) and seq[j] != OFF:
                    out.append(f"step {j - first}: offline for fewer than {dur.off} steps")
        if has_flat and seq[i] == FLAT and seq[i - 1] != FLAT:
            for k in range(1, max(1, dur.stable - 2) + 1):
                j = i + k
                if j < n and j >= first - 1 and seq[j] != FLAT:
                    out.append(f"step {j - first}: stable episode shorter than required")
    return out


def is_valid_state_string(seq: Sequence[str], dur: Durations, first: int) -> bool:
    return not state_string_violations(seq, dur, first)
