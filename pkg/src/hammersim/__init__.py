"""Deterministic simulator of DRAM disturbance (RowHammer) errors.

Provides a bank-level DRAM model with command legality checking, a seeded
empirical fault model for disturbance-vulnerable cells, an open-row memory
controller with pluggable mitigations (PARA, counter-based neighbor refresh,
refresh-rate scaling, SECDED ECC), workload generators for hammer patterns
and row-sweep characterization, and analytic / Monte Carlo evaluation of
PARA's failure rate.
"""

__version__ = "0.1.0"

from .dram import (
    Command,
    DramModule,
    IllegalCommand,
    ModuleGeometry,
    SimulationError,
    TimingParams,
    TimingViolation,
    init_pattern,
    read_out,
    run_refresh_schedule,
)
from .faults import FaultMap, FaultParams, VictimRecord, sample_fault_map
from .controller import AddressOutOfRange, Request, hammer_rate, translate
from .mitigations import CounterMitigation, Mitigation, Para, refresh_scaling
from .secded import secded_decode, secded_encode
from .workloads import ErrorReport, HammerSpec, characterize_row_sweep, gen_hammer

__all__ = [
    "AddressOutOfRange",
    "Command",
    "CounterMitigation",
    "DramModule",
    "ErrorReport",
    "FaultMap",
    "FaultParams",
    "HammerSpec",
    "IllegalCommand",
    "Mitigation",
    "ModuleGeometry",
    "Para",
    "Request",
    "SimulationError",
    "TimingParams",
    "TimingViolation",
    "VictimRecord",
    "characterize_row_sweep",
    "gen_hammer",
    "hammer_rate",
    "init_pattern",
    "read_out",
    "refresh_scaling",
    "run_refresh_schedule",
    "sample_fault_map",
    "secded_decode",
    "secded_encode",
    "translate",
]
