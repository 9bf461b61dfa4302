"""Mitigation mechanisms hooked into the controller at ACT/PRE time.

All mitigations share a two-hook interface: on_row_activate and on_row_close
return the (possibly empty) list of neighbor rows to refresh. Refresh-rate
scaling has no hooks; it rewrites the refresh window instead. The SECDED
codec lives in secded.py and is applied on the read path rather than via
these hooks.
"""

from __future__ import annotations

import numpy as np

from .dram import TimingParams


class Mitigation:
    """No-op base; also serves as the null mitigation."""

    def on_row_activate(self, bank: int, row: int, time: int) -> list[int]:
        return []

    def on_row_close(self, bank: int, row: int, time: int) -> list[int]:
        return []


class Para(Mitigation):
    """Probabilistic adjacent row activation.

    On every row close a biased coin with probability p decides whether to
    refresh a neighbor; each side is chosen with probability p/2. Edge rows
    fire their single existing neighbor with p/2 and nothing otherwise, so
    the per-victim protection rate stays uniform. Holds no per-row state:
    its memory footprint is constant in the number of rows.
    """

    def __init__(self, p: float, rows_per_bank: int, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        self.p = p
        self.rows_per_bank = rows_per_bank
        self.rng = np.random.default_rng(seed)

    def on_row_close(self, bank: int, row: int, time: int) -> list[int]:
        u = self.rng.random()
        if u < self.p / 2:
            neighbor = row - 1
        elif u < self.p:
            neighbor = row + 1
        else:
            return []
        if 0 <= neighbor < self.rows_per_bank:
            return [neighbor]
        return []

    def close_many(self, row: int, n: int) -> tuple[int, int]:
        """Vectorized diagnostic: outcome counts over n closes of one row.

        Returns (left_refreshes, right_refreshes), consuming the same RNG
        stream as n single-close draws would.
        """
        u = self.rng.random(n)
        left = int(np.count_nonzero(u < self.p / 2))
        right = int(np.count_nonzero((u >= self.p / 2) & (u < self.p)))
        if row - 1 < 0:
            left = 0
        if row + 1 >= self.rows_per_bank:
            right = 0
        return left, right


class CounterMitigation(Mitigation):
    """Per-row activation counters; refresh both neighbors at a threshold.

    Counters reset at every refresh-window boundary (aligned to window
    start) and individually when a row trips its threshold.
    """

    def __init__(self, act_threshold: int, rows_per_bank: int, t_refw: int):
        if act_threshold < 1:
            raise ValueError("act_threshold must be >= 1")
        self.act_threshold = act_threshold
        self.rows_per_bank = rows_per_bank
        self.t_refw = t_refw
        self.counters: dict[tuple[int, int], int] = {}
        self._window = 0

    def on_row_activate(self, bank: int, row: int, time: int) -> list[int]:
        window = time // self.t_refw
        if window != self._window:
            self.counters.clear()
            self._window = window
        key = (bank, row)
        count = self.counters.get(key, 0) + 1
        if count >= self.act_threshold:
            self.counters[key] = 0
            return [r for r in (row - 1, row + 1)
                    if 0 <= r < self.rows_per_bank]
        self.counters[key] = count
        return []


def refresh_scaling(timing: TimingParams, t_refw_new: int) -> TimingParams:
    """Refresh-rate scaling: same tRC, new refresh window."""
    if t_refw_new <= 0:
        raise ValueError("t_refw_new must be > 0")
    return TimingParams(t_rc=timing.t_rc, t_refw=t_refw_new)
