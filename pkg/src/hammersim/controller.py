"""Open-row memory controller: logical requests -> legal command traces.

Strict FCFS with an open-row policy: a request to the currently open row
issues no ACT/PRE; a row miss precharges (if open) and activates, with ACTs
to a bank spaced at least tRC apart. Every row close consults the attached
mitigation, whose neighbor refreshes are modeled as an ACT immediately
followed by a PRE charged against bank time. Time advances only with
ACT-bearing requests (read latency is not modeled).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .dram import ACT, PRE, RD, WR, Command, ModuleGeometry, SimulationError, TimingParams
from .mitigations import Mitigation


class AddressOutOfRange(SimulationError):
    pass


@dataclass(frozen=True)
class Request:
    kind: str  # "R" or "W"
    bank: int
    row: int
    col: int
    data: Optional[int] = None


def _check_request(req: Request, geometry: ModuleGeometry):
    if req.kind not in ("R", "W"):
        raise AddressOutOfRange(f"unknown request kind {req.kind!r}")
    if not (0 <= req.bank < geometry.banks
            and 0 <= req.row < geometry.rows_per_bank
            and 0 <= req.col < geometry.cols_per_row):
        raise AddressOutOfRange(
            f"request ({req.bank},{req.row},{req.col}) outside geometry")


class _Scheduler:
    """Shared ACT scheduling state for translate() and the run engine."""

    def __init__(self, geometry: ModuleGeometry, timing: TimingParams,
                 mitigation: Optional[Mitigation], act_spacing: Optional[int]):
        if act_spacing is None:
            act_spacing = timing.t_rc
        if act_spacing < timing.t_rc:
            raise ValueError("act_spacing must be >= t_rc")
        self.geometry = geometry
        self.timing = timing
        self.mitigation = mitigation
        self.spacing = act_spacing
        self.open_row: dict[int, Optional[int]] = {}
        self.last_act: dict[int, Optional[int]] = {}
        self.now = 0
        self.base_acts = 0
        self.mitigation_acts = 0
        self.closes = 0

    def _emit(self, cmd: Command):
        raise NotImplementedError

    def _act_time(self, bank: int, spacing: int) -> int:
        last = self.last_act.get(bank)
        t = self.now if last is None else max(self.now, last + spacing)
        return t

    def _neighbor_refresh(self, bank: int, rows, time: int):
        """ACT+PRE each mitigation-nominated neighbor row, tRC-legal.

        Mitigation-issued commands never re-enter the mitigation hooks."""
        for nrow in rows:
            if not 0 <= nrow < self.geometry.rows_per_bank:
                continue
            t = self._act_time(bank, self.timing.t_rc)
            self._emit(Command(ACT, bank, row=nrow, time=t))
            self._emit(Command(PRE, bank, row=nrow, time=t))
            self.last_act[bank] = t
            self.now = max(self.now, t)
            self.mitigation_acts += 1

    def close(self, bank: int, time: int):
        row = self.open_row.get(bank)
        if row is None:
            return
        self._emit(Command(PRE, bank, row=row, time=time))
        self.open_row[bank] = None
        self.closes += 1
        if self.mitigation is not None:
            rows = self.mitigation.on_row_close(bank, row, time)
            if rows:
                self._neighbor_refresh(bank, rows, time)

    def service(self, req: Request):
        _check_request(req, self.geometry)
        bank = req.bank
        mitigation_rows = None
        if self.open_row.get(bank) == req.row:
            t = self.now
        else:
            t = self._act_time(bank, self.spacing)
            self.now = t
            self.close(bank, t)
            t = self._act_time(bank, self.timing.t_rc)
            self._emit(Command(ACT, bank, row=req.row, time=t))
            self.open_row[bank] = req.row
            self.last_act[bank] = t
            self.now = t
            self.base_acts += 1
            if self.mitigation is not None:
                mitigation_rows = self.mitigation.on_row_activate(bank, req.row, t)
        kind = RD if req.kind == "R" else WR
        self._emit(Command(kind, bank, row=req.row, col=req.col,
                           data=req.data, time=self.now))
        if mitigation_rows:
            # counter-style mitigations refresh neighbors right away; close
            # the freshly opened row first to keep the bus legal. The bank is
            # left closed; a following same-row request re-activates.
            self.close(bank, self.now)
            self._neighbor_refresh(bank, mitigation_rows, self.now)

    def finish(self):
        for bank in list(self.open_row):
            if self.open_row.get(bank) is not None:
                self.close(bank, self.now)


class _TraceScheduler(_Scheduler):
    def __init__(self, *args):
        super().__init__(*args)
        self.trace: list[Command] = []

    def _emit(self, cmd: Command):
        self.trace.append(cmd)


def translate(requests, geometry: ModuleGeometry, timing: TimingParams,
              mitigation: Optional[Mitigation] = None,
              act_spacing: Optional[int] = None) -> list[Command]:
    """Translate a FCFS request stream into a legal command trace.

    act_spacing (>= tRC, default tRC) sets the interval between consecutive
    request-driven ACTs to a bank; hammer workloads use it to control the
    activation interval. Open rows are precharged at end of stream.
    """
    sched = _TraceScheduler(geometry, timing, mitigation, act_spacing)
    for req in requests:
        sched.service(req)
    sched.finish()
    return sched.trace


def hammer_rate(trace, t_refw: int) -> dict[tuple[int, int, int], int]:
    """ACT counts per (bank, row, refresh-window index). Diagnostic."""
    counts: dict[tuple[int, int, int], int] = {}
    for cmd in trace:
        if cmd.kind == ACT:
            key = (cmd.bank, cmd.row, cmd.time // t_refw)
            counts[key] = counts.get(key, 0) + 1
    return counts


def max_hammer_rate(trace, t_refw: int) -> int:
    counts = hammer_rate(trace, t_refw)
    return max(counts.values(), default=0)
