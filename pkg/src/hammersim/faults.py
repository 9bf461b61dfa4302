"""Empirical disturbance fault model.

A sampled population of vulnerable cells flips when the activation count of
an adjacent aggressor row exceeds the cell's threshold within one
charge-retention window (i.e. between two charge restores of the victim's
own row). Flip direction follows cell orientation: true-cells lose '1',
anti-cells lose '0'. Optional data-pattern coupling additionally requires
the same-column cell in the activating aggressor row to hold the opposite
charge state; this is a synthetic minimal rule that reproduces the
RowStripe >= Solid error ordering, not a measured mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

import numpy as np

from .dram import DramModule, EventSink, ModuleGeometry


@dataclass(frozen=True)
class FaultParams:
    victim_density: float = 5.9e-4
    threshold_min: int = 139_000
    threshold_max: Optional[int] = None  # defaults to 3 * threshold_min
    dual_aggressor_fraction: float = 1e-3
    pattern_coupling: bool = True
    repeat_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.victim_density <= 1.0:
            raise ValueError("victim_density must be in [0, 1]")
        if self.threshold_min < 1:
            raise ValueError("threshold_min must be >= 1")
        tmax = self.resolved_threshold_max
        if tmax < self.threshold_min:
            raise ValueError("threshold_max must be >= threshold_min")
        if not 0.0 <= self.dual_aggressor_fraction <= 1.0:
            raise ValueError("dual_aggressor_fraction must be in [0, 1]")
        if not 0.0 <= self.repeat_noise <= 1.0:
            raise ValueError("repeat_noise must be in [0, 1]")

    @property
    def resolved_threshold_max(self) -> int:
        return 3 * self.threshold_min if self.threshold_max is None else self.threshold_max


@dataclass
class VictimRecord:
    bank: int
    row: int
    col: int
    aggressors: tuple[int, ...]  # one or both of row-1, row+1
    threshold: int
    disturb_count: int = 0
    fired: bool = False  # at most one fire per charge-retention window
    inert: bool = False  # disabled for the current test iteration


@dataclass(frozen=True)
class Flip:
    bank: int
    row: int
    col: int
    direction: str  # "1->0" or "0->1"
    time: int


class FaultMap:
    """Sparse victim population indexed by aggressor row, plus a flip log."""

    def __init__(self, geometry: ModuleGeometry, victims: Iterable[VictimRecord],
                 pattern_coupling: bool = True):
        self.geometry = geometry
        self.pattern_coupling = pattern_coupling
        self.victims: list[VictimRecord] = list(victims)
        self.by_aggressor: dict[tuple[int, int], list[VictimRecord]] = {}
        self.by_row: dict[tuple[int, int], list[VictimRecord]] = {}
        for v in self.victims:
            for agg in v.aggressors:
                if abs(agg - v.row) != 1:
                    raise ValueError("aggressor rows must be adjacent to the victim")
                self.by_aggressor.setdefault((v.bank, agg), []).append(v)
            self.by_row.setdefault((v.bank, v.row), []).append(v)
        self.flip_log: list[Flip] = []

    def reset_state(self):
        """Clear counters, fired flags, and the flip log (new test iteration)."""
        for v in self.victims:
            v.disturb_count = 0
            v.fired = False
        self.flip_log = []

    def draw_inert(self, repeat_noise: float, rng: Optional[np.random.Generator]):
        """Mark each victim inert for this iteration with prob repeat_noise."""
        if repeat_noise <= 0.0 or rng is None:
            for v in self.victims:
                v.inert = False
            return
        draws = rng.random(len(self.victims))
        for v, u in zip(self.victims, draws):
            v.inert = bool(u < repeat_noise)


def sample_fault_map(geometry: ModuleGeometry, params: FaultParams,
                     seed: int) -> FaultMap:
    """Draw a synthetic victim population, deterministic in seed.

    Victim count is Binomial(cell_count, victim_density); thresholds are
    uniform in [threshold_min, threshold_max]; a dual_aggressor_fraction
    share of victims is sensitive to both neighbors, the rest to one chosen
    uniformly among the existing ones.
    """
    rng = np.random.default_rng(seed)
    n_cells = geometry.cell_count
    count = int(rng.binomial(n_cells, params.victim_density))
    idx = rng.choice(n_cells, size=count, replace=False)
    idx.sort()
    banks, rows, cols = np.unravel_index(
        idx, (geometry.banks, geometry.rows_per_bank, geometry.cols_per_row))
    thresholds = rng.integers(params.threshold_min,
                              params.resolved_threshold_max + 1, size=count)
    dual = rng.random(count) < params.dual_aggressor_fraction
    side = rng.random(count) < 0.5
    victims = []
    max_row = geometry.rows_per_bank - 1
    for i in range(count):
        row = int(rows[i])
        neighbors = [r for r in (row - 1, row + 1) if 0 <= r <= max_row]
        if dual[i] and len(neighbors) == 2:
            aggs = tuple(neighbors)
        elif len(neighbors) == 2:
            aggs = (neighbors[0],) if side[i] else (neighbors[1],)
        else:
            aggs = (neighbors[0],)
        victims.append(VictimRecord(
            bank=int(banks[i]), row=row, col=int(cols[i]),
            aggressors=aggs, threshold=int(thresholds[i])))
    return FaultMap(geometry, victims, pattern_coupling=params.pattern_coupling)


def on_charge_restore(fmap: FaultMap, bank: int, row: int, time: int) -> None:
    """Reset and re-arm every victim located in the restored row."""
    for v in fmap.by_row.get((bank, row), ()):
        v.disturb_count = 0
        v.fired = False


def on_aggressor_activation(fmap: FaultMap, module: DramModule, bank: int,
                            row: int, time: int) -> list[Flip]:
    """Account one activation of `row` against its adjacent victims.

    A victim fires when its accumulated count reaches its threshold, it is
    still holding charge, and (if coupling is enabled) the same-column cell
    in the activating aggressor row holds the opposite charge state. A fired
    victim stays quiet until its row's next charge restore.
    """
    fired: list[Flip] = []
    for v in fmap.by_aggressor.get((bank, row), ()):
        v.disturb_count += 1
        if v.fired or v.inert or v.disturb_count < v.threshold:
            continue
        if not module.is_charged(v.bank, v.row, v.col):
            continue
        if fmap.pattern_coupling and module.is_charged(bank, row, v.col):
            continue
        value = int(module.cells[v.bank, v.row, v.col])
        module.cells[v.bank, v.row, v.col] = 1 - value
        direction = "1->0" if value == 1 else "0->1"
        flip = Flip(v.bank, v.row, v.col, direction, time)
        fmap.flip_log.append(flip)
        fired.append(flip)
        v.fired = True
    return fired


class FaultInjector(EventSink):
    """Binds a FaultMap to a DramModule as the module's event sink."""

    def __init__(self, module: DramModule, fmap: FaultMap):
        self.module = module
        self.fmap = fmap

    def on_charge_restore(self, bank, row, time):
        on_charge_restore(self.fmap, bank, row, time)

    def on_aggressor_activation(self, bank, row, time):
        on_aggressor_activation(self.fmap, self.module, bank, row, time)


# -- text export / import ----------------------------------------------------

def export_fault_map(fmap: FaultMap, fh: TextIO) -> None:
    """One victim per line: bank row col aggressors threshold."""
    fh.write("# bank row col aggressors threshold\n")
    for v in fmap.victims:
        aggs = ",".join(str(a) for a in v.aggressors)
        fh.write(f"{v.bank} {v.row} {v.col} {aggs} {v.threshold}\n")


def import_fault_map(geometry: ModuleGeometry, fh: TextIO,
                     pattern_coupling: bool = True) -> FaultMap:
    victims = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"fault map line {lineno}: expected 5 fields")
        bank, row, col = int(parts[0]), int(parts[1]), int(parts[2])
        aggs = tuple(int(a) for a in parts[3].split(","))
        victims.append(VictimRecord(bank, row, col, aggs, int(parts[4])))
    return FaultMap(geometry, victims, pattern_coupling=pattern_coupling)
