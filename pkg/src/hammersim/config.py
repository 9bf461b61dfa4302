"""Experiment configuration: JSON file schema, validation, defaults.

Two default scales exist. Desk scale (the default) shrinks the refresh
window and thresholds 100x so full sweeps run in seconds; paper scale
restores the 139K-activation / 64 ms / 55 ns operating point for slower,
faithful runs. Unknown keys anywhere in the config are rejected by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .dram import MS, ModuleGeometry, TimingParams, default_row_orientation
from .faults import FaultParams

DESK_SCALE = {
    "t_refw_ns": 640_000,  # 0.64 ms
    "threshold_min": 1_390,
    "refresh_points_ms": [0.08, 0.16, 0.32, 0.64, 1.28],
}
PAPER_SCALE = {
    "t_refw_ns": 64 * MS,
    "threshold_min": 139_000,
    "refresh_points_ms": [8, 16, 32, 64, 128],
}


class ConfigError(Exception):
    pass


def _take(section: dict, name: str, allowed: dict[str, Any]) -> dict:
    """Overlay `section` on defaults, rejecting unknown keys by name."""
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    out = dict(allowed)
    for key, value in section.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {name}.{key}")
        out[key] = value
    return out


@dataclass
class ExperimentConfig:
    geometry: ModuleGeometry
    timing: TimingParams
    fault: FaultParams
    pattern: str
    orientation_block: int
    mitigation: dict
    sweep: dict
    hammer: dict
    analysis: dict
    seed: int
    fault_map_file: Optional[str]
    paper_scale: bool
    raw: dict = field(default_factory=dict)

    def row_orientation(self):
        return default_row_orientation(self.geometry.rows_per_bank,
                                       self.orientation_block)


_TOP_KEYS = ("geometry", "timing", "fault", "pattern", "orientation_block",
             "mitigation", "sweep", "hammer", "analysis", "seed",
             "fault_map_file")

_MITIGATION_KINDS = ("none", "para", "counter", "refresh", "ecc")


def build_config(data: Optional[dict] = None, *, seed: Optional[int] = None,
                 paper_scale: bool = False) -> ExperimentConfig:
    """Validate a parsed config dict and fill in scale-appropriate defaults."""
    data = dict(data or {})
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown config key {key}")
    scale = PAPER_SCALE if paper_scale else DESK_SCALE

    geo = _take(data.get("geometry", {}), "geometry",
                {"banks": 2, "rows_per_bank": 512, "cols_per_row": 4096})
    timing = _take(data.get("timing", {}), "timing",
                   {"t_rc_ns": 55, "t_refw_ns": scale["t_refw_ns"]})
    fault = _take(data.get("fault", {}), "fault", {
        "victim_density": 5.9e-4,
        "threshold_min": scale["threshold_min"],
        "threshold_max": None,
        "dual_aggressor_fraction": 1e-3,
        "pattern_coupling": True,
        "repeat_noise": 0.0,
    })
    mitigation = _take(data.get("mitigation", {}), "mitigation", {
        "kind": "none", "p": 0.001, "threshold": None, "t_refw_ms": None,
        "seed": None,
    })
    if mitigation["kind"] not in _MITIGATION_KINDS:
        raise ConfigError(f"unknown mitigation kind {mitigation['kind']!r}")
    sweep = _take(data.get("sweep", {}), "sweep",
                  {"axis": "refresh_interval",
                   "points": scale["refresh_points_ms"]})
    hammer = _take(data.get("hammer", {}), "hammer", {
        "mode": "pair", "bank": 0, "x_row": None, "y_row": None,
        "act_interval_ns": None, "duration_ns": None,
    })
    analysis = _take(data.get("analysis", {}), "analysis", {
        "p_grid": [0.01, 0.02, 0.05],
        "n_th_grid": [50, 200, 1000],
        "closes": 20_000,
        "trials": 400,
    })
    pattern = data.get("pattern", "rowstripe")
    if pattern not in ("solid0", "solid1", "rowstripe", "rowstripe_inv"):
        raise ConfigError(f"unknown pattern {pattern!r}")
    orientation_block = data.get("orientation_block", 8)
    if seed is None:
        seed = data.get("seed", 0)

    try:
        geometry = ModuleGeometry(geo["banks"], geo["rows_per_bank"],
                                  geo["cols_per_row"])
        timing_params = TimingParams(t_rc=timing["t_rc_ns"],
                                     t_refw=timing["t_refw_ns"])
        fault_params = FaultParams(
            victim_density=fault["victim_density"],
            threshold_min=fault["threshold_min"],
            threshold_max=fault["threshold_max"],
            dual_aggressor_fraction=fault["dual_aggressor_fraction"],
            pattern_coupling=fault["pattern_coupling"],
            repeat_noise=fault["repeat_noise"])
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err

    return ExperimentConfig(
        geometry=geometry, timing=timing_params, fault=fault_params,
        pattern=pattern, orientation_block=orientation_block,
        mitigation=mitigation, sweep=sweep, hammer=hammer, analysis=analysis,
        seed=int(seed), fault_map_file=data.get("fault_map_file"),
        paper_scale=paper_scale, raw=data)


def load_config(path: Optional[str], *, seed: Optional[int] = None,
                paper_scale: bool = False) -> ExperimentConfig:
    data = None
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
    return build_config(data, seed=seed, paper_scale=paper_scale)


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Full effective configuration, sufficient to reproduce a run."""
    return {
        "geometry": {"banks": cfg.geometry.banks,
                     "rows_per_bank": cfg.geometry.rows_per_bank,
                     "cols_per_row": cfg.geometry.cols_per_row},
        "timing": {"t_rc_ns": cfg.timing.t_rc, "t_refw_ns": cfg.timing.t_refw},
        "fault": {"victim_density": cfg.fault.victim_density,
                  "threshold_min": cfg.fault.threshold_min,
                  "threshold_max": cfg.fault.resolved_threshold_max,
                  "dual_aggressor_fraction": cfg.fault.dual_aggressor_fraction,
                  "pattern_coupling": cfg.fault.pattern_coupling,
                  "repeat_noise": cfg.fault.repeat_noise},
        "pattern": cfg.pattern,
        "orientation_block": cfg.orientation_block,
        "mitigation": cfg.mitigation,
        "sweep": cfg.sweep,
        "hammer": cfg.hammer,
        "analysis": cfg.analysis,
        "seed": cfg.seed,
        "fault_map_file": cfg.fault_map_file,
        "paper_scale": cfg.paper_scale,
    }
