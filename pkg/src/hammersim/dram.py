"""DRAM module state: cells, per-bank state machines, refresh bookkeeping.

Single rank/channel; geometry is banks x rows x cols. Cells store *logical*
bit values; the physical charge state is derived from each row's cell
orientation (a true-cell holds '1' as charged, an anti-cell holds '1' as
discharged). Only tRC is enforced among timing constraints; data transport
latency is not modeled and time advances only via command timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MS = 1_000_000  # nanoseconds per millisecond

PATTERNS = ("solid0", "solid1", "rowstripe", "rowstripe_inv")

ACT = "ACT"
PRE = "PRE"
RD = "RD"
WR = "WR"
REF = "REF"


class SimulationError(Exception):
    """Base class for malformed-trace and state-machine errors."""


class IllegalCommand(SimulationError):
    """Command violates the bank state machine (e.g. RD on a closed bank)."""


class TimingViolation(SimulationError):
    """Two ACTs to one bank closer than tRC."""


@dataclass(frozen=True)
class ModuleGeometry:
    banks: int
    rows_per_bank: int
    cols_per_row: int

    def __post_init__(self):
        if self.banks < 1 or self.cols_per_row < 1:
            raise ValueError("banks and cols_per_row must be >= 1")
        if self.rows_per_bank < 3:
            # an aggressor row needs two neighbors
            raise ValueError("rows_per_bank must be >= 3")

    @property
    def cell_count(self) -> int:
        return self.banks * self.rows_per_bank * self.cols_per_row


@dataclass(frozen=True)
class TimingParams:
    """Timing in integer nanoseconds.

    t_rc: minimum interval between successive ACTs to the same bank.
    t_refw: refresh window; every row is refreshed once per window.
    """

    t_rc: int = 55
    t_refw: int = 64 * MS

    def __post_init__(self):
        if self.t_rc <= 0:
            raise ValueError("t_rc must be > 0")
        if self.t_refw < self.t_rc:
            raise ValueError("t_refw must be >= t_rc")

    def t_refi(self, rows_per_bank: int) -> int:
        """Interval between distributed per-row refresh events."""
        return self.t_refw // rows_per_bank


@dataclass(frozen=True)
class Command:
    kind: str
    bank: int
    row: Optional[int] = None
    col: Optional[int] = None
    data: Optional[int] = None
    time: int = 0


class EventSink:
    """Hooks invoked by the module on charge-affecting commands.

    The fault model implements these; the default implementation ignores
    everything so bare replays stay cheap.
    """

    def on_charge_restore(self, bank: int, row: int, time: int) -> None:
        pass

    def on_aggressor_activation(self, bank: int, row: int, time: int) -> None:
        pass


def default_row_orientation(rows: int, block: int = 8) -> np.ndarray:
    """Alternating per-row orientation blocks: rows 0..block-1 true-cells,
    the next block anti-cells, repeating. True in the returned array means
    true-cell."""
    if block < 1:
        raise ValueError("orientation block must be >= 1")
    return (np.arange(rows) // block) % 2 == 0


def pattern_value(pattern: str, row: int, col: int) -> int:
    """Logical bit a data pattern assigns to (row, col)."""
    if pattern == "solid0":
        return 0
    if pattern == "solid1":
        return 1
    if pattern == "rowstripe":
        return row & 1
    if pattern == "rowstripe_inv":
        return 1 - (row & 1)
    raise ValueError(f"unknown data pattern: {pattern!r}")


class DramModule:
    """Cells, per-bank open-row state, and per-row refresh timestamps."""

    def __init__(self, geometry: ModuleGeometry, timing: TimingParams,
                 row_is_true: Optional[np.ndarray] = None):
        self.geometry = geometry
        self.timing = timing
        if row_is_true is None:
            row_is_true = default_row_orientation(geometry.rows_per_bank)
        row_is_true = np.asarray(row_is_true, dtype=bool)
        if row_is_true.shape != (geometry.rows_per_bank,):
            raise ValueError("row_is_true must have one entry per row")
        self.row_is_true = row_is_true
        self.cells = np.zeros(
            (geometry.banks, geometry.rows_per_bank, geometry.cols_per_row),
            dtype=np.uint8)
        self.open_row: list[Optional[int]] = [None] * geometry.banks
        self.last_act_time: list[Optional[int]] = [None] * geometry.banks
        self.row_refresh_time = np.zeros(
            (geometry.banks, geometry.rows_per_bank), dtype=np.int64)
        self.now = 0

    # -- derived state -------------------------------------------------

    def is_charged(self, bank: int, row: int, col: int) -> bool:
        value = int(self.cells[bank, row, col])
        if self.row_is_true[row]:
            return value == 1
        return value == 0

    def _check_addr(self, bank, row=None, col=None):
        g = self.geometry
        if not 0 <= bank < g.banks:
            raise IllegalCommand(f"bank {bank} out of range")
        if row is not None and not 0 <= row < g.rows_per_bank:
            raise IllegalCommand(f"row {row} out of range")
        if col is not None and not 0 <= col < g.cols_per_row:
            raise IllegalCommand(f"col {col} out of range")

    # -- command execution ----------------------------------------------

    def apply_command(self, cmd: Command, sink: Optional[EventSink] = None):
        """Execute one command, enforcing bank-state legality and tRC.

        Returns the stored bit for RD, otherwise None. ACT and REF restore
        the charge of the affected row (row_refresh_time := cmd.time) and
        notify the sink; ACT additionally emits an aggressor-activation
        event for the fault model.
        """
        if cmd.time < self.now:
            raise IllegalCommand(
                f"timestamp {cmd.time} precedes current time {self.now}")
        self._check_addr(cmd.bank, cmd.row, cmd.col)
        self.now = cmd.time
        bank = cmd.bank

        if cmd.kind == ACT:
            if self.open_row[bank] is not None:
                raise IllegalCommand(
                    f"ACT to bank {bank} while row {self.open_row[bank]} open")
            if cmd.row is None:
                raise IllegalCommand("ACT requires a row")
            last = self.last_act_time[bank]
            if last is not None and cmd.time - last < self.timing.t_rc:
                raise TimingViolation(
                    f"ACT-ACT gap {cmd.time - last} < tRC {self.timing.t_rc}"
                    f" on bank {bank}")
            self.open_row[bank] = cmd.row
            self.last_act_time[bank] = cmd.time
            self.row_refresh_time[bank, cmd.row] = cmd.time
            if sink is not None:
                sink.on_charge_restore(bank, cmd.row, cmd.time)
                sink.on_aggressor_activation(bank, cmd.row, cmd.time)
            return None

        if cmd.kind == PRE:
            if self.open_row[bank] is None:
                raise IllegalCommand(f"PRE to closed bank {bank}")
            if cmd.row is not None and cmd.row != self.open_row[bank]:
                raise IllegalCommand(
                    f"PRE row {cmd.row} but row {self.open_row[bank]} open")
            self.open_row[bank] = None
            return None

        if cmd.kind in (RD, WR):
            if self.open_row[bank] is None or cmd.row != self.open_row[bank]:
                raise IllegalCommand(
                    f"{cmd.kind} to bank {bank} row {cmd.row} but open row is"
                    f" {self.open_row[bank]}")
            if cmd.col is None:
                raise IllegalCommand(f"{cmd.kind} requires a column")
            if cmd.kind == RD:
                return int(self.cells[bank, cmd.row, cmd.col])
            if cmd.data not in (0, 1):
                raise IllegalCommand("WR data must be 0 or 1")
            self.cells[bank, cmd.row, cmd.col] = cmd.data
            return None

        if cmd.kind == REF:
            if self.open_row[bank] is not None:
                raise IllegalCommand(f"REF to bank {bank} with a row open")
            if cmd.row is None:
                raise IllegalCommand("REF requires a row")
            self.row_refresh_time[bank, cmd.row] = cmd.time
            if sink is not None:
                sink.on_charge_restore(bank, cmd.row, cmd.time)
            return None

        raise IllegalCommand(f"unknown command kind {cmd.kind!r}")


def init_pattern(module: DramModule, pattern: str) -> DramModule:
    """Load a data pattern into every cell and restore all charge.

    rowstripe = even rows all '0', odd rows all '1'; rowstripe_inv reversed.
    Physical charge states follow from each row's orientation.
    """
    g = module.geometry
    if pattern == "solid0":
        module.cells[:] = 0
    elif pattern == "solid1":
        module.cells[:] = 1
    elif pattern in ("rowstripe", "rowstripe_inv"):
        rows = np.arange(g.rows_per_bank) & 1
        if pattern == "rowstripe_inv":
            rows = 1 - rows
        module.cells[:] = rows[None, :, None].astype(np.uint8)
    else:
        raise ValueError(f"unknown data pattern: {pattern!r}")
    module.row_refresh_time[:] = module.now
    return module


def read_out(module: DramModule) -> np.ndarray:
    """Logical values of all cells (orientation already decoded)."""
    return module.cells.copy()


def run_refresh_schedule(geometry: ModuleGeometry, timing: TimingParams,
                         start: int, end: int) -> list[Command]:
    """Distributed per-row refresh: row r is refreshed at r*t_refi + k*t_refw.

    Returns REF commands (all banks) with times in [start, end), sorted by
    time. Over any aligned window of length t_refw each row appears exactly
    once per bank.
    """
    if start > end:
        raise ValueError("start must be <= end")
    t_refi = timing.t_refi(geometry.rows_per_bank)
    cmds: list[Command] = []
    k = max(0, (start - (geometry.rows_per_bank - 1) * t_refi) // timing.t_refw)
    while True:
        base = k * timing.t_refw
        if base >= end:
            break
        for row in range(geometry.rows_per_bank):
            t = base + row * t_refi
            if t < start or t >= end:
                continue
            for bank in range(geometry.banks):
                cmds.append(Command(REF, bank, row=row, time=t))
        k += 1
    cmds.sort(key=lambda c: (c.time, c.row, c.bank))
    return cmds
