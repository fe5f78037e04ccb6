"""Discrete-event simulator: determinism, cost models, bounds, presets."""

import numpy as np
import pytest

from ampsched import sim
from ampsched.runtime import (CATS, FAST, OBLIVIOUS, SLOW, VC, VC_POLICY,
                              Policy)
from ampsched.sim import (GTS, VC_VIEW, FixedCostModel, FlopsCostModel,
                          MachineModel, Resource, Table3CostModel, idle_stats,
                          lower_bounds, preset_exynos5422, simulate)
from ampsched.taskgraph import TaskGraphBuilder, TaskKind, build_cholesky_dag
from conftest import check_trace_legality, random_task_graph


def chain_graph(length):
    b = TaskGraphBuilder()
    for _ in range(length):
        b.register_task(TaskKind.G, reads={(0, 0)}, writes={(0, 0)})
    return b.build()


class TestMachineModel:
    def test_gts_exposes_each_core(self):
        m = MachineModel(((SLOW, 1.0), (FAST, 4.0)))
        rs = m.resources()
        assert [(r.id, r.kind, r.speed) for r in rs] == \
            [(0, SLOW, 1.0), (1, FAST, 4.0)]

    def test_vc_view_pairs_and_sums_speeds(self):
        m = MachineModel(((SLOW, 1.0), (SLOW, 1.0), (FAST, 4.0), (FAST, 4.0)),
                         VC_VIEW)
        rs = m.resources()
        assert [(r.kind, r.speed) for r in rs] == [(VC, 5.0), (VC, 5.0)]

    def test_vc_view_requires_equal_counts(self):
        with pytest.raises(ValueError):
            MachineModel(((SLOW, 1.0), (FAST, 4.0), (FAST, 4.0)),
                         VC_VIEW).resources()

    def test_resource_speed_positive(self):
        with pytest.raises(ValueError):
            Resource(0, FAST, 0.0)


class TestCostModels:
    def test_table3_cubic_scaling(self):
        full = Table3CostModel(448)
        half = Table3CostModel(224)
        g = build_cholesky_dag(2)
        r = Resource(0, FAST, 1.0)
        for t in g.tasks:
            assert half.duration_ns(t, r) == pytest.approx(
                full.duration_ns(t, r) / 8, rel=1e-6)

    def test_table3_minimum_one_ns(self):
        t = build_cholesky_dag(1).tasks[0]
        assert Table3CostModel(1).duration_ns(t, Resource(0, FAST, 1.0)) >= 1

    def test_flops_model_inverse_in_speed(self):
        m = FlopsCostModel(64)
        t = build_cholesky_dag(2).tasks[1]
        slow_d = m.duration_ns(t, Resource(0, SLOW, 1.0))
        fast_d = m.duration_ns(t, Resource(1, FAST, 4.0))
        assert slow_d == pytest.approx(4 * fast_d, rel=1e-6)

    def test_task_flops(self):
        assert sim.task_flops(TaskKind.C, 6) == 72.0
        assert sim.task_flops(TaskKind.G, 6) == 432.0
        assert sim.task_flops(TaskKind.T, 6) == 216.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Table3CostModel(0)
        with pytest.raises(ValueError):
            FlopsCostModel(4, 0.0)


class TestPreset:
    def test_gts_slow_cores_take_low_ids(self):
        machine, cost = preset_exynos5422(GTS, 448)
        rs = machine.resources()
        assert [r.kind for r in rs] == [SLOW] * 4 + [FAST] * 4
        assert cost.b == 448

    def test_vc_view_has_four_pairs(self):
        machine, _ = preset_exynos5422(VC_VIEW)
        rs = machine.resources()
        assert len(rs) == 4 and all(r.kind == VC for r in rs)
        assert rs[0].speed == pytest.approx(1.0 + sim.FAST_SLOW_RATIO)

    def test_unknown_view(self):
        with pytest.raises(ValueError):
            preset_exynos5422("weird")


class TestSimulate:
    def test_deterministic(self):
        g = build_cholesky_dag(6)
        machine, cost = preset_exynos5422(GTS, 448)
        r1 = simulate(g, machine, cost, Policy(CATS))
        r2 = simulate(g, machine, cost, Policy(CATS))
        assert r1.makespan_ns == r2.makespan_ns
        assert r1.trace.events == r2.trace.events

    @pytest.mark.parametrize("policy,view", [
        (Policy(OBLIVIOUS), GTS), (Policy(CATS), GTS),
        (Policy(VC_POLICY), VC_VIEW)])
    def test_legal_schedule(self, policy, view):
        g = build_cholesky_dag(5)
        machine, cost = preset_exynos5422(view, 448)
        res = simulate(g, machine, cost, policy)
        check_trace_legality(g, res.trace)
        assert res.makespan_ns == max(e.end_ns for e in res.trace.events)
        assert set(res.kind_means_ns) <= set(TaskKind)

    def test_single_resource_serializes(self):
        g = chain_graph(5)
        machine = MachineModel(((FAST, 1.0),))
        cost = FixedCostModel({FAST: 10})
        res = simulate(g, machine, cost, Policy(OBLIVIOUS))
        assert res.makespan_ns == 50
        assert res.idle_fraction == {0: 0.0}

    def test_parallel_width(self):
        # 6 independent unit tasks on 3 equal resources: two waves.
        b = TaskGraphBuilder()
        for i in range(6):
            b.register_task(TaskKind.G, reads=set(), writes={(i, 0)})
        g = b.build()
        machine = MachineModel(((FAST, 1.0),) * 3)
        res = simulate(g, machine, FixedCostModel({FAST: 7}),
                       Policy(OBLIVIOUS))
        assert res.makespan_ns == 14

    def test_view_policy_mismatch(self):
        g = build_cholesky_dag(2)
        machine, cost = preset_exynos5422(GTS)
        with pytest.raises(ValueError):
            simulate(g, machine, cost, Policy(VC_POLICY))
        vc_machine, _ = preset_exynos5422(VC_VIEW)
        with pytest.raises(ValueError):
            simulate(g, vc_machine, cost, Policy(OBLIVIOUS))

    def test_cats_needs_fast_resource(self):
        g = build_cholesky_dag(2)
        machine = MachineModel(((SLOW, 1.0),) * 2)
        with pytest.raises(ValueError):
            simulate(g, machine, Table3CostModel(), Policy(CATS))

    def test_cats_beats_oblivious_on_14x14_grid(self):
        g = build_cholesky_dag(14)
        machine, cost = preset_exynos5422(GTS, 448)
        rc = simulate(g, machine, cost, Policy(CATS))
        ro = simulate(g, machine, cost, Policy(OBLIVIOUS))
        assert rc.makespan_ns < ro.makespan_ns


class TestLowerBounds:
    def test_chain_equals_cp_bound(self):
        g = chain_graph(4)
        machine = MachineModel(((FAST, 1.0), (FAST, 1.0)))
        cost = FixedCostModel({FAST: 9})
        cp, work = lower_bounds(g, machine, cost)
        assert cp == 36 and work == 18
        res = simulate(g, machine, cost, Policy(OBLIVIOUS))
        assert res.makespan_ns == cp

    def test_fuzzed_dags_respect_bounds(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            g = random_task_graph(rng, max_nodes=40)
            nfast = int(rng.integers(1, 4))
            nslow = int(rng.integers(0, 4))
            cores = [(FAST, float(rng.uniform(1, 5)))] * nfast
            cores += [(SLOW, 1.0)] * nslow
            machine = MachineModel(tuple(cores))
            cost = FlopsCostModel(int(rng.integers(2, 9)), 1e6)
            policy = Policy(OBLIVIOUS) if rng.integers(2) else Policy(CATS)
            res = simulate(g, machine, cost, policy)
            cp, work = lower_bounds(g, machine, cost)
            assert res.makespan_ns >= max(cp, work) - 1
            check_trace_legality(g, res.trace)


class TestIdleStats:
    def test_fractions(self):
        from ampsched.runtime import Trace, TraceEvent
        t = Trace([TraceEvent(0, 0, "G", 0, 0, 0, 0, 60),
                   TraceEvent(1, 1, "G", 0, 0, 0, 0, 40)], 0, 100, [0, 1, 2])
        stats = idle_stats(t, 100)
        assert stats[0] == {"running": 0.6, "idle": 0.4}
        assert stats[1] == {"running": 0.4, "idle": 0.6}
        assert stats[2] == {"running": 0.0, "idle": 1.0}

    def test_horizon_must_cover_trace(self):
        from ampsched.runtime import Trace
        with pytest.raises(ValueError):
            idle_stats(Trace([], 0, 100, [0]), 50)


class TestModeledCrossover:
    def test_dual_lane_loses_small_wins_large(self):
        rows = sim.simulated_kernel_times([16, 448])
        assert rows[0]["asym_seconds"] > rows[0]["seq_seconds"]
        assert rows[1]["asym_seconds"] < rows[1]["seq_seconds"]

    def test_crossover_size_bracket(self):
        x = sim.simulated_crossover_size()
        assert x is not None and 64 < x <= 160

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sim.simulated_kernel_times([])
