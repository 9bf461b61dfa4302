"""Experiment runner CLI.

Subcommands: characterize, hammer, sweep, mitigate-eval, para-analysis.
Every run writes its artifacts as plain CSV plus a JSON metadata sidecar
(resolved config, seeds, tool version) sufficient to reproduce it exactly.
Exit codes: 0 success, 2 configuration error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    ParaAnalysisInput,
    expected_run_count,
    para_failure_rate_analytic,
    para_failure_rate_montecarlo,
)
from .config import ConfigError, ExperimentConfig, load_config, resolved_dict
from .dram import MS, DramModule, SimulationError, init_pattern
from .faults import import_fault_map, sample_fault_map
from .mitigations import CounterMitigation, Mitigation, Para, refresh_scaling
from .secded import secded_scrub
from .workloads import (
    PAIR_ALTERNATE,
    SINGLE_ROW,
    HammerSpec,
    _busiest_aggressor,
    characterize_row_sweep,
    gen_hammer,
    run_simulation,
    sweep_experiment,
)

EXIT_CONFIG_ERROR = 2
EXIT_SIMULATION_ERROR = 3

SWEEP_CSV_HEADER = ["axis_value", "flips_total", "flips_1to0", "flips_0to1",
                    "rows_affected"]


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_sidecar(out_path: Path, cfg: ExperimentConfig, command: str,
                   extra: dict | None = None):
    meta = {
        "tool": "hammersim",
        "version": __version__,
        "command": command,
        "config": resolved_dict(cfg),
        "seed": cfg.seed,
    }
    if extra:
        meta.update(extra)
    sidecar = out_path.with_suffix(out_path.suffix + ".meta.json")
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fault_map(cfg: ExperimentConfig):
    if cfg.fault_map_file:
        with open(cfg.fault_map_file) as fh:
            return import_fault_map(cfg.geometry, fh,
                                    pattern_coupling=cfg.fault.pattern_coupling)
    return sample_fault_map(cfg.geometry, cfg.fault, cfg.seed)


def _mitigation(cfg: ExperimentConfig) -> tuple[Mitigation | None, bool]:
    """Build the configured mitigation hook. Returns (hook, apply_ecc);
    refresh scaling rewrites cfg.timing in place of a hook."""
    kind = cfg.mitigation["kind"]
    seed = cfg.mitigation["seed"]
    if seed is None:
        seed = cfg.seed + 1  # dedicated stream, separate from fault sampling
    if kind == "para":
        return Para(cfg.mitigation["p"], cfg.geometry.rows_per_bank,
                    seed=seed), False
    if kind == "counter":
        threshold = cfg.mitigation["threshold"]
        if threshold is None:
            threshold = max(1, cfg.fault.threshold_min - 1)
        return CounterMitigation(threshold, cfg.geometry.rows_per_bank,
                                 cfg.timing.t_refw), False
    if kind == "ecc":
        return None, True
    return None, False


def _apply_refresh_scaling(cfg: ExperimentConfig):
    if cfg.mitigation["kind"] == "refresh":
        t_refw_ms = cfg.mitigation["t_refw_ms"]
        new = (int(t_refw_ms * MS) if t_refw_ms is not None
               else cfg.timing.t_refw // 8)
        cfg.timing = refresh_scaling(cfg.timing, new)


def _flip_rows(report):
    for i, f in enumerate(report.flips):
        yield (f.bank, f.row, f.col, f.direction, f.time,
               report.hammered_rows.get(i, ""))


def cmd_characterize(cfg: ExperimentConfig, out_dir: Path) -> int:
    fmap = _fault_map(cfg)
    act_interval = cfg.hammer["act_interval_ns"] or cfg.timing.t_rc
    report = characterize_row_sweep(
        cfg.geometry, cfg.timing, fmap, cfg.pattern, act_interval,
        row_is_true=cfg.row_orientation(),
        repeat_noise=cfg.fault.repeat_noise,
        noise_rng=None)
    out = out_dir / "characterize_flips.csv"
    _write_csv(out, ["bank", "row", "col", "direction", "time_ns",
                     "hammered_row"], _flip_rows(report))
    _write_sidecar(out, cfg, "characterize", {
        "flips_total": report.total,
        "flips_1to0": report.flips_1to0,
        "flips_0to1": report.flips_0to1,
        "rows_affected": report.rows_affected,
    })
    print(f"characterize: {report.total} flips "
          f"({report.flips_1to0} 1->0, {report.flips_0to1} 0->1) "
          f"across {report.rows_affected} rows -> {out}")
    return 0


def _hammer_spec(cfg: ExperimentConfig) -> HammerSpec:
    h = cfg.hammer
    fmap_hint = None
    if h["x_row"] is None:
        fmap_hint = _busiest_aggressor(_fault_map(cfg), cfg.pattern,
                                       cfg.row_orientation())
    bank, x_row = (h["bank"], h["x_row"]) if h["x_row"] is not None else (
        fmap_hint if fmap_hint else (0, 1))
    mode = PAIR_ALTERNATE if h["mode"] == "pair" else SINGLE_ROW
    y_row = h["y_row"]
    if mode == PAIR_ALTERNATE and y_row is None:
        y_row = (x_row + 2 if x_row + 2 < cfg.geometry.rows_per_bank
                 else x_row - 2)
    return HammerSpec(
        bank=bank, x_row=x_row, y_row=y_row,
        act_interval=h["act_interval_ns"] or cfg.timing.t_rc,
        duration=h["duration_ns"] or cfg.timing.t_refw,
        mode=mode)


def cmd_hammer(cfg: ExperimentConfig, out_dir: Path) -> int:
    _apply_refresh_scaling(cfg)
    fmap = _fault_map(cfg)
    mitigation, apply_ecc = _mitigation(cfg)
    spec = _hammer_spec(cfg)
    module = DramModule(cfg.geometry, cfg.timing,
                        row_is_true=cfg.row_orientation())
    init_pattern(module, cfg.pattern)
    result = run_simulation(module, fmap, gen_hammer(spec),
                            mitigation=mitigation,
                            act_spacing=spec.act_interval)
    report = result.report
    flips = report.flips
    if apply_ecc:
        _, flips = secded_scrub(flips)
    out = out_dir / "hammer_flips.csv"
    _write_csv(out, ["bank", "row", "col", "direction", "time_ns"],
               [(f.bank, f.row, f.col, f.direction, f.time) for f in flips])
    _write_sidecar(out, cfg, "hammer", {
        "hammer_spec": {"mode": spec.mode, "bank": spec.bank,
                        "x_row": spec.x_row, "y_row": spec.y_row,
                        "act_interval_ns": spec.act_interval,
                        "duration_ns": spec.duration},
        "flips_total": len(flips),
        "base_acts": result.base_acts,
        "mitigation_acts": result.mitigation_acts,
        "extra_act_fraction": result.extra_act_fraction,
    })
    print(f"hammer ({spec.mode}): {len(flips)} flips, "
          f"{result.base_acts} ACTs, "
          f"extra-activation fraction {result.extra_act_fraction:.6f} -> {out}")
    return 0


def _sweep_point(args):
    """Worker for one sweep point; rebuilt from config for process pools."""
    raw, seed, paper_scale, axis, point = args
    from .config import build_config

    cfg = build_config(raw, seed=seed, paper_scale=paper_scale)
    fmap = _fault_map(cfg)
    act_interval = cfg.hammer["act_interval_ns"] or cfg.timing.t_rc
    rows = sweep_experiment(axis, [point], cfg.geometry, cfg.timing, fmap,
                            cfg.pattern, act_interval,
                            para_seed=cfg.seed + 1,
                            row_is_true=cfg.row_orientation())
    return rows[0]


def cmd_sweep(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1) -> int:
    axis = cfg.sweep["axis"]
    points = cfg.sweep["points"]
    work = [(cfg.raw, cfg.seed, cfg.paper_scale, axis, p) for p in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, work))
    else:
        rows = [_sweep_point(w) for w in work]
    out = out_dir / f"sweep_{axis}.csv"
    _write_csv(out, SWEEP_CSV_HEADER, rows)
    _write_sidecar(out, cfg, "sweep", {"axis": axis, "points": points})
    print(f"sweep {axis}: {len(rows)} points -> {out}")
    return 0


def cmd_mitigate_eval(cfg: ExperimentConfig, out_dir: Path) -> int:
    """Compare flip counts and activation overheads across mitigations on
    one pinned fault map and an identical pair-hammer workload."""
    spec = _hammer_spec(cfg)
    rows = []
    for kind in ("none", "para", "counter", "refresh", "ecc"):
        timing = cfg.timing
        mitigation = None
        if kind == "para":
            mitigation = Para(cfg.mitigation["p"], cfg.geometry.rows_per_bank,
                              seed=cfg.seed + 1)
        elif kind == "counter":
            threshold = cfg.mitigation["threshold"]
            if threshold is None:
                threshold = max(1, cfg.fault.threshold_min - 1)
            mitigation = CounterMitigation(threshold,
                                           cfg.geometry.rows_per_bank,
                                           timing.t_refw)
        elif kind == "refresh":
            t_refw_ms = cfg.mitigation["t_refw_ms"]
            new = (int(t_refw_ms * MS) if t_refw_ms is not None
                   else cfg.timing.t_refw // 8)
            timing = refresh_scaling(cfg.timing, new)
        fmap = _fault_map(cfg)  # same seed -> identical population
        module = DramModule(cfg.geometry, timing,
                            row_is_true=cfg.row_orientation())
        init_pattern(module, cfg.pattern)
        result = run_simulation(module, fmap, gen_hammer(spec),
                                mitigation=mitigation,
                                act_spacing=spec.act_interval)
        flips = result.report.flips
        if kind == "ecc":
            _, flips = secded_scrub(flips)
        rows.append((kind, len(flips), result.base_acts,
                     result.mitigation_acts,
                     f"{result.extra_act_fraction:.6f}"))
    out = out_dir / "mitigate_eval.csv"
    _write_csv(out, ["mitigation", "flips", "base_acts", "mitigation_acts",
                     "extra_act_fraction"], rows)
    _write_sidecar(out, cfg, "mitigate-eval")
    print(f"mitigate-eval: {len(rows)} mechanisms -> {out}")
    return 0


def cmd_para_analysis(cfg: ExperimentConfig, out_dir: Path) -> int:
    a = cfg.analysis
    rows = []
    for p in a["p_grid"]:
        for n_th in a["n_th_grid"]:
            closes, trials = a["closes"], a["trials"]
            bound = para_failure_rate_analytic(ParaAnalysisInput(
                p=p, n_th=n_th, act_rate=float(closes), horizon=1.0))
            exact = expected_run_count(p, n_th, closes)
            mc = para_failure_rate_montecarlo(p, n_th, closes, trials,
                                              seed=cfg.seed)
            rows.append((p, n_th, closes, trials,
                         f"{bound:.9e}", f"{exact:.9e}",
                         f"{mc.mean:.9e}", f"{mc.ci_low:.9e}",
                         f"{mc.ci_high:.9e}"))
    out = out_dir / "para_analysis.csv"
    _write_csv(out, ["p", "n_th", "closes", "trials", "union_bound",
                     "exact_expected", "mc_mean", "mc_ci_low", "mc_ci_high"],
               rows)
    _write_sidecar(out, cfg, "para-analysis")
    print(f"para-analysis: {len(rows)} grid points -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hammersim",
        description="Deterministic DRAM disturbance-error simulator")
    parser.add_argument("--version", action="version",
                        version=f"hammersim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("characterize", "row-by-row disturbance characterization"),
        ("hammer", "single pair/single-row hammer run"),
        ("sweep", "parameter sweep producing a CSV"),
        ("mitigate-eval", "compare mitigations on one fault map"),
        ("para-analysis", "PARA failure-rate grid (bound/exact/Monte Carlo)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for sweep points")
        p.add_argument("--paper-scale", action="store_true",
                       help="139K-threshold / 64 ms defaults instead of the "
                            "100x-scaled desk defaults")
        p.add_argument("--mitigation", default=None,
                       choices=["none", "para", "counter", "refresh", "ecc"])
        p.add_argument("--p", type=float, default=None,
                       help="PARA close probability")
        p.add_argument("--threshold", type=int, default=None,
                       help="counter mitigation activation threshold")
        p.add_argument("--trefw-ms", type=float, default=None,
                       help="refresh-scaling window in ms")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed,
                          paper_scale=args.paper_scale)
        if args.mitigation is not None:
            cfg.mitigation["kind"] = args.mitigation
        if args.p is not None:
            cfg.mitigation["p"] = args.p
        if args.threshold is not None:
            cfg.mitigation["threshold"] = args.threshold
        if args.trefw_ms is not None:
            cfg.mitigation["t_refw_ms"] = args.trefw_ms
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        if args.command == "characterize":
            return cmd_characterize(cfg, out_dir)
        if args.command == "hammer":
            return cmd_hammer(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, jobs=args.jobs)
        if args.command == "mitigate-eval":
            return cmd_mitigate_eval(cfg, out_dir)
        if args.command == "para-analysis":
            return cmd_para_analysis(cfg, out_dir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (SimulationError, ValueError) as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIMULATION_ERROR
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
