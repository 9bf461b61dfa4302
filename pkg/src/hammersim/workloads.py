"""Hammer workload generation and row-sweep characterization.

Two execution engines are provided. The event engine replays every command
through the DRAM state machine with the fault model attached and supports
mitigations and a running refresh schedule; it is the reference path and the
one checked against the brute-force recount oracle. The fast engine
evaluates the single-row characterization procedure in closed form (the
command stream of a row test is fully determined, so per-victim activation
counts between charge restores can be computed directly); it produces
bit-identical flip logs to the event engine and makes full sweeps at
realistic thresholds run in milliseconds.

Characterization follows a three-step loop per row: initialize the module
with a data pattern, activate the row back-to-back for one refresh window,
read the module out and diff. Each row test treats the window as one full
charge-retention period of the victim rows (restores at the window start,
read-out before the next restore), so a test at activation interval d
delivers exactly floor(t_refw / d) activations between restores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controller import Request, _Scheduler
from .dram import (
    ACT,
    PRE,
    REF,
    Command,
    DramModule,
    ModuleGeometry,
    TimingParams,
    init_pattern,
    pattern_value,
    read_out,
)
from .faults import FaultInjector, FaultMap, Flip
from .mitigations import Mitigation

PAIR_ALTERNATE = "pair"
SINGLE_ROW = "single"


@dataclass(frozen=True)
class HammerSpec:
    bank: int
    x_row: int
    act_interval: int  # ns between consecutive same-bank ACTs
    duration: int  # ns; one refresh window by default
    mode: str = PAIR_ALTERNATE
    y_row: Optional[int] = None
    col: int = 0

    def __post_init__(self):
        if self.mode not in (PAIR_ALTERNATE, SINGLE_ROW):
            raise ValueError(f"unknown hammer mode {self.mode!r}")
        if self.mode == PAIR_ALTERNATE:
            if self.y_row is None or self.y_row == self.x_row:
                raise ValueError("pair mode needs two distinct rows")
        if self.act_interval < 1 or self.duration < 0:
            raise ValueError("act_interval must be >= 1 and duration >= 0")


def gen_hammer(spec: HammerSpec) -> list[Request]:
    """Request stream realizing a hammer pattern.

    Pair mode alternates reads of X and Y (every request is a row miss, so
    the controller activates at act_interval spacing); single mode reads X
    only (one ACT total under the open-row policy). floor(duration /
    act_interval) requests are emitted.
    """
    n = spec.duration // spec.act_interval
    reqs = []
    for k in range(n):
        if spec.mode == PAIR_ALTERNATE and k % 2 == 1:
            row = spec.y_row
        else:
            row = spec.x_row
        reqs.append(Request("R", spec.bank, row, spec.col))
    return reqs


@dataclass
class ErrorReport:
    """Flips discovered by a run, plus enough metadata to reproduce it."""

    flips: list[Flip] = field(default_factory=list)
    hammered_rows: dict[int, int] = field(default_factory=dict)  # flip idx -> row
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.flips)

    @property
    def flips_1to0(self) -> int:
        return sum(1 for f in self.flips if f.direction == "1->0")

    @property
    def flips_0to1(self) -> int:
        return sum(1 for f in self.flips if f.direction == "0->1")

    @property
    def rows_affected(self) -> int:
        return len({(f.bank, f.row) for f in self.flips})

    def per_row_histogram(self) -> dict[tuple[int, int], int]:
        hist: dict[tuple[int, int], int] = {}
        for f in self.flips:
            key = (f.bank, f.row)
            hist[key] = hist.get(key, 0) + 1
        return hist


# -- event-driven engine -------------------------------------------------------


class _ModuleScheduler(_Scheduler):
    """Controller scheduler that applies commands straight to a module,
    interleaving the distributed refresh schedule by timestamp."""

    def __init__(self, module: DramModule, sink, mitigation, act_spacing,
                 refresh: bool, record: bool):
        super().__init__(module.geometry, module.timing, mitigation, act_spacing)
        self.module = module
        self.sink = sink
        self.commands: Optional[list[Command]] = [] if record else None
        self._refresh = refresh
        if refresh:
            self._t_refi = module.timing.t_refi(module.geometry.rows_per_bank)
            self._ref_idx = 0  # refresh events issued so far

    def _next_ref_time(self) -> int:
        rows = self.module.geometry.rows_per_bank
        window, row = divmod(self._ref_idx, rows)
        return window * self.module.timing.t_refw + row * self._t_refi

    def _emit(self, cmd: Command):
        if self.commands is not None:
            self.commands.append(cmd)
        self.module.apply_command(cmd, self.sink)

    def service(self, req: Request):
        # refresh events due before this request's earliest issue slot land
        # first; a refresh-forced close can turn a row hit into a miss
        if self._refresh:
            bank_gate = self._act_time(req.bank, self.spacing)
            self._drain_refresh(max(self.now, bank_gate))
        super().service(req)

    def finish(self):
        if self._refresh:
            self._drain_refresh(self.now)
        super().finish()

    def _drain_refresh(self, until: int):
        """Issue every scheduled REF due strictly before `until`. An open
        bank is precharged first (a close like any other, so the mitigation
        hook runs). A REF displaced by in-flight work slips to `now`."""
        while self._refresh:
            t = self._next_ref_time()
            if t >= until:
                break
            self._ref_idx += 1
            row = (self._ref_idx - 1) % self.module.geometry.rows_per_bank
            t = max(t, self.now)
            self.now = t
            for bank in range(self.module.geometry.banks):
                if self.open_row.get(bank) is not None:
                    self.close(bank, max(t, self.now))
            t = max(t, self.now)
            for bank in range(self.module.geometry.banks):
                cmd = Command(REF, bank, row=row, time=t)
                if self.commands is not None:
                    self.commands.append(cmd)
                self.module.apply_command(cmd, self.sink)
            self.now = t


@dataclass
class RunResult:
    report: ErrorReport
    base_acts: int
    mitigation_acts: int
    closes: int
    commands: Optional[list[Command]] = None

    @property
    def extra_act_fraction(self) -> float:
        if self.base_acts == 0:
            return 0.0
        return self.mitigation_acts / self.base_acts


def run_simulation(module: DramModule, fault_map: Optional[FaultMap],
                   requests, *, mitigation: Optional[Mitigation] = None,
                   act_spacing: Optional[int] = None, refresh: bool = True,
                   record_commands: bool = False) -> RunResult:
    """Drive a request stream through the controller into the module.

    The fault map (if any) is attached as the module's event sink; flips
    accumulate in its flip log. Open rows are precharged at end of stream.
    """
    sink = FaultInjector(module, fault_map) if fault_map is not None else None
    sched = _ModuleScheduler(module, sink, mitigation, act_spacing,
                             refresh, record_commands)
    for req in requests:
        sched.service(req)
    sched.finish()
    flips = list(fault_map.flip_log) if fault_map is not None else []
    report = ErrorReport(flips=flips)
    return RunResult(report=report, base_acts=sched.base_acts,
                     mitigation_acts=sched.mitigation_acts,
                     closes=sched.closes, commands=sched.commands)


# -- characterization ----------------------------------------------------------


def _fast_row_test(geometry: ModuleGeometry, row_is_true: np.ndarray,
                   fault_map: FaultMap, pattern: str, bank: int, row: int,
                   activations: int, act_interval: int) -> list[Flip]:
    """Closed-form evaluation of hammering one row for `activations` ACTs.

    Equivalent to the event engine for a fresh single-row test: every victim
    adjacent to the hammered row sees all activations inside one retention
    window, fires iff the count reaches its threshold while it holds charge
    and (with coupling) the same-column aggressor cell holds the opposite
    charge state. Nothing else in the module changes.
    """
    flips = []
    for v in fault_map.by_aggressor.get((bank, row), ()):
        if v.inert or activations < v.threshold:
            continue
        value = pattern_value(pattern, v.row, v.col)
        is_true = bool(row_is_true[v.row])
        charged = (value == 1) if is_true else (value == 0)
        if not charged:
            continue
        if fault_map.pattern_coupling:
            agg_value = pattern_value(pattern, row, v.col)
            agg_charged = ((agg_value == 1) if bool(row_is_true[row])
                           else (agg_value == 0))
            if agg_charged:
                continue
        fire_time = (v.threshold - 1) * act_interval
        direction = "1->0" if value == 1 else "0->1"
        flips.append(Flip(v.bank, v.row, v.col, direction, fire_time))
    flips.sort(key=lambda f: (f.time, f.bank, f.row, f.col))
    return flips


def _event_row_test(geometry: ModuleGeometry, timing: TimingParams,
                    row_is_true: np.ndarray, fault_map: FaultMap, pattern: str,
                    bank: int, row: int, act_interval: int,
                    duration: int) -> list[Flip]:
    """Reference path: back-to-back ACT/PRE pairs applied directly to the
    module (the characterization rig bypasses the open-row controller, which
    would merge same-row accesses into a single activation)."""
    module = DramModule(geometry, timing, row_is_true=row_is_true)
    init_pattern(module, pattern)
    fault_map.reset_state()
    before = read_out(module)
    sink = FaultInjector(module, fault_map)
    for k in range(duration // act_interval):
        t = k * act_interval
        module.apply_command(Command(ACT, bank, row=row, time=t), sink)
        module.apply_command(Command(PRE, bank, row=row, time=t), sink)
    after = read_out(module)
    diff = {tuple(int(x) for x in pos)
            for pos in np.argwhere(before != after)}
    logged = {(f.bank, f.row, f.col) for f in fault_map.flip_log}
    if diff != logged:
        raise AssertionError("read-out diff disagrees with the flip log")
    return list(fault_map.flip_log)


def characterize_row_sweep(geometry: ModuleGeometry, timing: TimingParams,
                           fault_map: FaultMap, pattern: str,
                           act_interval: int, *,
                           row_is_true: Optional[np.ndarray] = None,
                           engine: str = "fast",
                           repeat_noise: float = 0.0,
                           noise_rng: Optional[np.random.Generator] = None,
                           ) -> ErrorReport:
    """Test each row of each bank one by one and aggregate the flips.

    Per row: initialize the pattern, hammer the row for one refresh window
    at act_interval, read out and diff, then restore the module before the
    next row. Victim inertness (repeat_noise) is drawn once per sweep.
    """
    if act_interval < timing.t_rc:
        raise ValueError("act_interval must be >= t_rc")
    if engine not in ("fast", "event"):
        raise ValueError(f"unknown engine {engine!r}")
    if row_is_true is None:
        from .dram import default_row_orientation
        row_is_true = default_row_orientation(geometry.rows_per_bank)
    fault_map.draw_inert(repeat_noise, noise_rng)
    activations = timing.t_refw // act_interval
    report = ErrorReport(metadata={
        "pattern": pattern, "act_interval_ns": act_interval,
        "t_refw_ns": timing.t_refw, "engine": engine,
        "activations_per_row": activations,
    })
    for bank in range(geometry.banks):
        for row in range(geometry.rows_per_bank):
            if engine == "fast":
                flips = _fast_row_test(geometry, row_is_true, fault_map,
                                       pattern, bank, row, activations,
                                       act_interval)
            else:
                flips = _event_row_test(geometry, timing, row_is_true,
                                        fault_map, pattern, bank, row,
                                        act_interval, timing.t_refw)
            for f in flips:
                report.hammered_rows[len(report.flips)] = row
                report.flips.append(f)
    return report


# -- sweeps --------------------------------------------------------------------

SWEEP_AXES = ("refresh_interval", "activation_interval", "data_pattern",
              "mitigation_param")


def sweep_experiment(axis: str, points, geometry: ModuleGeometry,
                     timing: TimingParams, fault_map: FaultMap, pattern: str,
                     act_interval: int, *, para_seed: int = 0,
                     row_is_true: Optional[np.ndarray] = None,
                     engine: str = "fast") -> list[tuple]:
    """One characterize run per point, fault map and seeds held fixed.

    Returns rows of (axis_value, flips_total, flips_1to0, flips_0to1,
    rows_affected) in point order. Axes: refresh_interval (points in ms),
    activation_interval (ns), data_pattern (pattern names), mitigation_param
    (PARA probabilities, evaluated with the event engine on a pair hammer of
    the most-victimized aggressor pair).
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    rows = []
    for point in points:
        if axis == "refresh_interval":
            t = TimingParams(t_rc=timing.t_rc, t_refw=int(point * 1_000_000))
            rep = characterize_row_sweep(geometry, t, fault_map, pattern,
                                         act_interval, row_is_true=row_is_true,
                                         engine=engine)
        elif axis == "activation_interval":
            rep = characterize_row_sweep(geometry, timing, fault_map, pattern,
                                         int(point), row_is_true=row_is_true,
                                         engine=engine)
        elif axis == "data_pattern":
            rep = characterize_row_sweep(geometry, timing, fault_map,
                                         str(point), act_interval,
                                         row_is_true=row_is_true, engine=engine)
        else:
            rep = _mitigated_hammer_report(float(point), geometry, timing,
                                           fault_map, pattern, act_interval,
                                           para_seed, row_is_true)
        rows.append((point, rep.total, rep.flips_1to0, rep.flips_0to1,
                     rep.rows_affected))
    return rows


def _mitigated_hammer_report(p: float, geometry, timing, fault_map, pattern,
                             act_interval, para_seed, row_is_true) -> ErrorReport:
    from .mitigations import Para

    agg = _busiest_aggressor(fault_map, pattern, row_is_true)
    if agg is None:
        return ErrorReport()
    bank, row = agg
    y = row + 2 if row + 2 < geometry.rows_per_bank else row - 2
    module = DramModule(geometry, timing, row_is_true=row_is_true)
    init_pattern(module, pattern)
    fault_map.reset_state()
    spec = HammerSpec(bank=bank, x_row=row, y_row=y, act_interval=act_interval,
                      duration=timing.t_refw, mode=PAIR_ALTERNATE)
    mit = Para(p, geometry.rows_per_bank, seed=para_seed)
    result = run_simulation(module, fault_map, gen_hammer(spec),
                            mitigation=mit, act_spacing=act_interval)
    return result.report


def _busiest_aggressor(fault_map: FaultMap, pattern: Optional[str] = None,
                       row_is_true: Optional[np.ndarray] = None
                       ) -> Optional[tuple[int, int]]:
    """Aggressor (bank, row) with the most victims. When a pattern and
    orientation are given, only victims armed under them (holding charge,
    coupling satisfied) are counted, so hammer scenarios have something to
    flip."""

    def armed(agg_row: int, v) -> bool:
        if pattern is None or row_is_true is None:
            return True
        value = pattern_value(pattern, v.row, v.col)
        charged = (value == 1) if bool(row_is_true[v.row]) else (value == 0)
        if not charged:
            return False
        if fault_map.pattern_coupling:
            agg_value = pattern_value(pattern, agg_row, v.col)
            agg_charged = ((agg_value == 1) if bool(row_is_true[agg_row])
                           else (agg_value == 0))
            if agg_charged:
                return False
        return True

    best, best_count = None, 0
    for key, victims in sorted(fault_map.by_aggressor.items()):
        count = sum(1 for v in victims if armed(key[1], v))
        if count > best_count:
            best, best_count = key, count
    return best
