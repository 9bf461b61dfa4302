import numpy as np
import pytest

from oracles import as_tuples, recount_flips
from hammersim.controller import Request
from hammersim.dram import (
    DramModule,
    ModuleGeometry,
    TimingParams,
    default_row_orientation,
    init_pattern,
)
from hammersim.faults import FaultMap, FaultParams, VictimRecord, sample_fault_map
from hammersim.workloads import (
    PAIR_ALTERNATE,
    SINGLE_ROW,
    HammerSpec,
    _busiest_aggressor,
    characterize_row_sweep,
    gen_hammer,
    run_simulation,
    sweep_experiment,
)

GEO = ModuleGeometry(banks=1, rows_per_bank=8, cols_per_row=16)
TIM = TimingParams(t_rc=55, t_refw=4_000)  # 72 ACT slots per window


def tiny_map(entries, coupling=False):
    victims = [VictimRecord(bank=b, row=r, col=c, aggressors=a, threshold=t)
               for (b, r, c, a, t) in entries]
    return FaultMap(GEO, victims, pattern_coupling=coupling)


class TestGenHammer:
    def test_pair_alternates(self):
        spec = HammerSpec(bank=0, x_row=2, y_row=4, act_interval=55,
                          duration=550, mode=PAIR_ALTERNATE)
        reqs = gen_hammer(spec)
        assert len(reqs) == 10
        assert [r.row for r in reqs] == [2, 4] * 5

    def test_single_row(self):
        spec = HammerSpec(bank=0, x_row=2, act_interval=100, duration=550,
                          mode=SINGLE_ROW)
        reqs = gen_hammer(spec)
        assert len(reqs) == 5
        assert all(r.row == 2 for r in reqs)

    def test_request_count_is_floor(self):
        spec = HammerSpec(bank=0, x_row=1, act_interval=60, duration=59,
                          mode=SINGLE_ROW)
        assert gen_hammer(spec) == []

    def test_pair_needs_two_rows(self):
        with pytest.raises(ValueError):
            HammerSpec(bank=0, x_row=2, act_interval=55, duration=100)
        with pytest.raises(ValueError):
            HammerSpec(bank=0, x_row=2, y_row=2, act_interval=55, duration=100)


class TestRunSimulation:
    def test_pair_hammer_flips_single_does_not(self):
        # victim row 3, both neighbors aggressors; open-row policy means the
        # single-row stream produces exactly one ACT and can never flip
        fmap = tiny_map([(0, 3, 0, (2,), 5)])
        pair = HammerSpec(bank=0, x_row=2, y_row=4, act_interval=55,
                          duration=TIM.t_refw, mode=PAIR_ALTERNATE)
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(pair),
                             act_spacing=55, refresh=False)
        assert res.report.total == 1

        fmap.reset_state()
        single = HammerSpec(bank=0, x_row=2, act_interval=55,
                            duration=TIM.t_refw, mode=SINGLE_ROW)
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(single),
                             act_spacing=55, refresh=False)
        assert res.report.total == 0
        assert res.base_acts == 1

    def test_refresh_schedule_prevents_low_rate_flips(self):
        # 36 ACTs per refresh window reach the victim, but its row is
        # refreshed mid-window, so a threshold above half the window holds
        fmap = tiny_map([(0, 3, 0, (2,), 30)])
        spec = HammerSpec(bank=0, x_row=2, y_row=4, act_interval=55,
                          duration=TIM.t_refw, mode=PAIR_ALTERNATE)
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(spec), act_spacing=55,
                             refresh=True)
        assert res.report.total == 0

        fmap.reset_state()
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(spec), act_spacing=55,
                             refresh=False)
        assert res.report.total == 1

    def test_recorded_commands_replayable(self):
        fmap = tiny_map([(0, 3, 0, (2,), 5)])
        spec = HammerSpec(bank=0, x_row=2, y_row=4, act_interval=60,
                          duration=TIM.t_refw, mode=PAIR_ALTERNATE)
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(spec), act_spacing=60,
                             record_commands=True)
        replay = init_pattern(DramModule(GEO, TIM), "solid1")
        for cmd in res.commands:
            replay.apply_command(cmd)

    def test_oracle_agreement_with_refresh_and_mitigation(self):
        from hammersim.mitigations import Para

        fmap = tiny_map([(0, 3, 0, (2, 4), 4), (0, 5, 2, (4,), 6)])
        spec = HammerSpec(bank=0, x_row=2, y_row=4, act_interval=55,
                          duration=3 * TIM.t_refw, mode=PAIR_ALTERNATE)
        module = init_pattern(DramModule(GEO, TIM), "solid1")
        res = run_simulation(module, fmap, gen_hammer(spec),
                             mitigation=Para(0.3, 8, seed=5),
                             act_spacing=55, record_commands=True)
        expected = sorted(recount_flips(module.row_is_true, "solid1",
                                        fmap.victims, res.commands,
                                        pattern_coupling=False),
                          key=lambda t: (t[4], t[0], t[1], t[2]))
        assert as_tuples(res.report.flips) == expected


class TestCharacterize:
    def test_activation_count_is_floor_of_window(self):
        # t_refw=4000, interval 55 -> 72 activations per row test
        for threshold, expect in [(72, 1), (73, 0)]:
            fmap = tiny_map([(0, 3, 0, (2,), threshold)])
            rep = characterize_row_sweep(GEO, TIM, fmap, "solid1", 55,
                                         row_is_true=np.ones(8, dtype=bool))
            assert rep.total == expect
            assert rep.metadata["activations_per_row"] == 72

    def test_fast_and_event_engines_agree(self):
        rng = np.random.default_rng(77)
        for trial in range(10):
            params = FaultParams(victim_density=0.05, threshold_min=2,
                                 threshold_max=40,
                                 dual_aggressor_fraction=0.2,
                                 pattern_coupling=bool(trial % 2))
            fmap = sample_fault_map(GEO, params, seed=trial)
            pattern = ["solid1", "rowstripe", "rowstripe_inv"][trial % 3]
            ori = default_row_orientation(8, block=int(rng.integers(1, 4)))
            fast = characterize_row_sweep(GEO, TIM, fmap, pattern, 55,
                                          row_is_true=ori, engine="fast")
            event = characterize_row_sweep(GEO, TIM, fmap, pattern, 55,
                                           row_is_true=ori, engine="event")
            assert as_tuples(fast.flips) == as_tuples(event.flips)
            assert fast.hammered_rows == event.hammered_rows

    def test_interval_below_trc_rejected(self):
        fmap = tiny_map([])
        with pytest.raises(ValueError):
            characterize_row_sweep(GEO, TIM, fmap, "solid1", 10)

    def test_repeat_noise_zero_is_stable(self):
        fmap = sample_fault_map(GEO, FaultParams(victim_density=0.05,
                                                 threshold_min=5), seed=1)
        a = characterize_row_sweep(GEO, TIM, fmap, "solid1", 55)
        b = characterize_row_sweep(GEO, TIM, fmap, "solid1", 55)
        assert as_tuples(a.flips) == as_tuples(b.flips)

    def test_repeat_noise_one_silences_everything(self):
        fmap = tiny_map([(0, 3, 0, (2,), 2)])
        rep = characterize_row_sweep(GEO, TIM, fmap, "solid1", 55,
                                     repeat_noise=1.0,
                                     noise_rng=np.random.default_rng(0))
        assert rep.total == 0

    def test_repeat_noise_drops_a_fraction(self):
        entries = [(0, 3, c, (2,), 2) for c in range(16)]
        fmap = tiny_map(entries)
        rep = characterize_row_sweep(GEO, TIM, fmap, "solid1", 55,
                                     row_is_true=np.ones(8, dtype=bool),
                                     repeat_noise=0.5,
                                     noise_rng=np.random.default_rng(3))
        assert 0 < rep.total < 16


class TestSweep:
    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            sweep_experiment("voltage", [1], GEO, TIM, tiny_map([]),
                             "solid1", 55)

    def test_activation_interval_axis_monotone(self):
        fmap = tiny_map([(0, 3, c, (2,), t)
                         for c, t in enumerate((10, 30, 60))])
        rows = sweep_experiment("activation_interval", [55, 100, 200, 400],
                                GEO, TIM, fmap, "solid1", 55,
                                row_is_true=np.ones(8, dtype=bool))
        totals = [r[1] for r in rows]
        assert totals == sorted(totals, reverse=True)
        assert totals[0] == 3  # 72 activations cover every threshold

    def test_refresh_interval_axis(self):
        fmap = tiny_map([(0, 3, 0, (2,), 72)])
        rows = sweep_experiment("refresh_interval", [0.002, 0.004], GEO, TIM,
                                fmap, "solid1", 55,
                                row_is_true=np.ones(8, dtype=bool))
        assert [r[1] for r in rows] == [0, 1]  # 36 vs 72 activations

    def test_data_pattern_axis(self):
        fmap = tiny_map([(0, 3, 0, (2,), 5)], coupling=True)
        rows = sweep_experiment("data_pattern", ["solid1", "rowstripe"],
                                GEO, TIM, fmap, "solid1", 55,
                                row_is_true=np.ones(8, dtype=bool))
        by_pattern = {r[0]: r[1] for r in rows}
        # victim row 3 holds '1' under both, but solid1 charges the
        # aggressor column too, which the coupling rule vetoes
        assert by_pattern == {"solid1": 0, "rowstripe": 1}


class TestBusiestAggressor:
    def test_prefers_most_victims(self):
        fmap = tiny_map([(0, 3, 0, (2,), 5), (0, 3, 1, (2,), 5),
                         (0, 5, 0, (6,), 5)])
        assert _busiest_aggressor(fmap) == (0, 2)

    def test_armed_filter_skips_discharged_victims(self):
        # row 2's victims hold '0' in true-cells (discharged); row 6's victim
        # holds '1' (charged), so the armed count prefers aggressor row 5
        fmap = tiny_map([(0, 2, 0, (1,), 5), (0, 2, 1, (1,), 5),
                         (0, 5, 0, (6,), 5)], coupling=False)
        ori = np.ones(8, dtype=bool)
        assert _busiest_aggressor(fmap, "rowstripe", ori) == (0, 6)

    def test_empty_map(self):
        assert _busiest_aggressor(tiny_map([])) is None
