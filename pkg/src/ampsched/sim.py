"""Deterministic discrete-event simulator for an asymmetric machine.

Replays a task graph under the same scheduling policies as the threaded
runtime, with task durations taken from a cost model instead of measured.
Time is integer nanoseconds; ready-task assignment within a simulation
tick processes resources in ascending id order, so identical inputs give
bitwise identical results.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from .runtime import (CATS, FAST, OBLIVIOUS, SLOW, VC, VC_POLICY, Policy,
                      ReadyPool, Trace, TraceEvent)
from .taskgraph import Task, TaskGraph, TaskKind, bottom_levels

GTS = "gts"
VC_VIEW = "vc"


@dataclass(frozen=True)
class Resource:
    id: int
    kind: str  # FAST, SLOW or VC
    speed: float

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("resource speed must be positive")


@dataclass(frozen=True)
class MachineModel:
    """Physical cores plus the view the scheduler sees.

    GTS exposes every core as its own resource; the VC view pairs each
    fast core with a slow core into one virtual-core resource whose speed
    is the pair sum.
    """

    cores: tuple  # of (kind, speed)
    view: str = GTS

    def resources(self) -> list[Resource]:
        if self.view == GTS:
            return [Resource(i, kind, speed)
                    for i, (kind, speed) in enumerate(self.cores)]
        if self.view != VC_VIEW:
            raise ValueError(f"unknown machine view {self.view!r}")
        fast = [c for c in self.cores if c[0] == FAST]
        slow = [c for c in self.cores if c[0] == SLOW]
        if len(fast) != len(slow):
            raise ValueError("VC view requires equal fast and slow core counts")
        return [Resource(i, VC, f[1] + s[1])
                for i, (f, s) in enumerate(zip(fast, slow))]


# Average per-task durations (ms) measured on the Exynos 5422 at block
# size 448: fast = Cortex-A15 lane, slow = Cortex-A7 lane, vc = A15+A7
# pair running the asymmetric kernels.
TABLE3_MS = {
    FAST: {TaskKind.G: 89.43, TaskKind.T: 48.27, TaskKind.S: 47.22,
           TaskKind.C: 94.49},
    SLOW: {TaskKind.G: 410.84, TaskKind.T: 216.70, TaskKind.S: 214.00,
           TaskKind.C: 137.65},
    VC: {TaskKind.G: 79.22, TaskKind.T: 42.99, TaskKind.S: 44.54,
         TaskKind.C: 83.96},
}

TABLE3_BLOCK = 448

# Fast/slow gemm throughput ratio implied by the table; used as the
# default lane speed ratio elsewhere.
FAST_SLOW_RATIO = TABLE3_MS[SLOW][TaskKind.G] / TABLE3_MS[FAST][TaskKind.G]


def task_flops(kind: TaskKind, b: int) -> float:
    """Nominal flop count of one b-sized task; all kinds scale as b^3."""
    if kind == TaskKind.C:
        return b ** 3 / 3.0
    if kind == TaskKind.G:
        return 2.0 * b ** 3
    return float(b ** 3)  # T and S


class Table3CostModel:
    """Durations from the measured per-kind, per-resource means.

    Block sizes other than 448 scale the measured means by (b/448)^3,
    a cubic-flop extrapolation: constant factors differ in reality but
    the fast/slow/vc ratios the comparisons need are preserved.
    """

    def __init__(self, b: int = TABLE3_BLOCK):
        if b < 1:
            raise ValueError("block size must be >= 1")
        self.b = b
        self._scale = (b / TABLE3_BLOCK) ** 3

    def duration_ns(self, task: Task, resource: Resource) -> int:
        ms = TABLE3_MS[resource.kind][task.kind] * self._scale
        return max(1, int(round(ms * 1e6)))


class FlopsCostModel:
    """duration = task flops / (resource speed * base rate)."""

    def __init__(self, b: int, base_flops_per_s: float = 1e9):
        if b < 1 or base_flops_per_s <= 0:
            raise ValueError("invalid flops cost model parameters")
        self.b = b
        self.base = base_flops_per_s

    def duration_ns(self, task: Task, resource: Resource) -> int:
        seconds = task_flops(task.kind, self.b) / (resource.speed * self.base)
        return max(1, int(round(seconds * 1e9)))


class FixedCostModel:
    """Per-(resource kind, task kind) durations in ns; test scaffolding."""

    def __init__(self, table: dict):
        self.table = table

    def duration_ns(self, task: Task, resource: Resource) -> int:
        entry = self.table[resource.kind]
        d = entry[task.kind] if isinstance(entry, dict) else entry
        if d <= 0:
            raise ValueError("durations must be positive")
        return int(d)


def preset_exynos5422(view: str = GTS, b: int = TABLE3_BLOCK,
                      ) -> tuple[MachineModel, Table3CostModel]:
    """4 slow + 4 fast cores with the measured per-task cost table.

    Slow cores take resource ids 0-3 in the GTS view, matching the Exynos
    5422 cpu numbering (the Cortex-A7 cluster is cpu0-3). The assignment
    tie rule (ascending id) therefore hands work to slow cores first when
    several cores are idle, which is what makes a resource-oblivious
    scheduler lose ground as the slow cluster is brought online.
    """
    if view not in (GTS, VC_VIEW):
        raise ValueError(f"unknown machine view {view!r}")
    cores = tuple([(SLOW, 1.0)] * 4 + [(FAST, FAST_SLOW_RATIO)] * 4)
    return MachineModel(cores, view), Table3CostModel(b)


@dataclass
class SimResult:
    makespan_ns: int
    trace: Trace
    idle_fraction: dict[int, float]
    kind_means_ns: dict[TaskKind, float]

    @property
    def makespan_s(self) -> float:
        return self.makespan_ns / 1e9


def _fastest_duration(task: Task, resources: list[Resource], cost) -> int:
    return min(cost.duration_ns(task, r) for r in resources)


def simulate(g: TaskGraph, machine: MachineModel, cost,
             policy: Policy) -> SimResult:
    """Event-driven replay of g on the modeled machine. Fully deterministic."""
    if (policy.kind == VC_POLICY) != (machine.view == VC_VIEW):
        raise ValueError("VC policy requires the VC machine view and vice versa")
    resources = machine.resources()
    if policy.kind == CATS and not any(r.kind == FAST for r in resources):
        raise ValueError("CATS requires at least one fast resource")

    priorities = None
    if policy.kind == CATS:
        fast_rs = [r for r in resources if r.kind == FAST]
        priorities = bottom_levels(
            g, lambda t: float(min(cost.duration_ns(t, r) for r in fast_rs)))

    pool = ReadyPool(policy, priorities)
    indegree = list(g.indegree)
    event_seq = 0
    for t in g.tasks:
        if indegree[t.id] == 0:
            pool.push(t.id, 0)

    free = {r.id for r in resources}
    by_id = {r.id: r for r in resources}
    running: list[tuple[int, int, int]] = []  # (finish, rid, tid) heap
    start_of: dict[int, int] = {}
    events: list[TraceEvent] = []
    busy = {r.id: 0 for r in resources}
    now = 0
    completed = 0
    total = len(g.tasks)

    while completed < total:
        for rid in sorted(free):
            res = by_id[rid]
            idle_fast = sum(1 for r in free
                            if r != rid and by_id[r].kind == FAST)
            tid = pool.select(res.kind, idle_fast)
            if tid is None:
                continue
            dur = cost.duration_ns(g.tasks[tid], res)
            if dur <= 0:
                raise ValueError("cost model produced a non-positive duration")
            start_of[tid] = now
            heapq.heappush(running, (now + dur, rid, tid))
            free.discard(rid)
        if not running:
            raise RuntimeError("no runnable task; inconsistent policy state")
        finish = running[0][0]
        batch = []
        while running and running[0][0] == finish:
            batch.append(heapq.heappop(running))
        now = finish
        for _, rid, tid in sorted(batch, key=lambda e: (e[1], e[2])):
            task = g.tasks[tid]
            events.append(TraceEvent(rid, tid, task.kind.value, task.k,
                                     task.i, task.j, start_of[tid], finish))
            busy[rid] += finish - start_of[tid]
            free.add(rid)
            completed += 1
            event_seq += 1
            for succ in g.successors[tid]:
                indegree[succ] -= 1
                if indegree[succ] == 0:
                    pool.push(succ, event_seq)

    makespan = now
    trace = Trace(sorted(events, key=lambda e: (e.start_ns, e.worker)),
                  0, makespan, [r.id for r in resources])
    idle = {rid: 1.0 - busy[rid] / makespan for rid in busy} if makespan else {}
    kind_totals: dict[TaskKind, list] = {}
    for e in trace.events:
        kind_totals.setdefault(TaskKind(e.kind), []).append(e.end_ns - e.start_ns)
    kind_means = {k: sum(v) / len(v) for k, v in kind_totals.items()}
    return SimResult(makespan, trace, idle, kind_means)


def lower_bounds(g: TaskGraph, machine: MachineModel, cost) -> tuple[int, int]:
    """(critical-path bound, work bound) valid for any schedule.

    Both use each task's duration on its fastest resource; the work bound
    divides the total by the resource count, which stays valid on
    asymmetric machines (each resource can only run one task at a time
    and no task runs faster than on its best resource).
    """
    resources = machine.resources()
    dmin = {t.id: _fastest_duration(t, resources, cost) for t in g.tasks}
    cp = 0
    bl = [0] * len(g.tasks)
    for t in reversed(g.tasks):
        succ_max = max((bl[q] for q in g.successors[t.id]), default=0)
        bl[t.id] = dmin[t.id] + succ_max
        cp = max(cp, bl[t.id])
    work = -(-sum(dmin.values()) // len(resources))
    return cp, work


def idle_stats(trace: Trace, horizon_ns: int) -> dict[int, dict[str, float]]:
    """Per-worker running/idle fractions of the given horizon."""
    span = trace.wall_end - trace.wall_start
    if horizon_ns < span:
        raise ValueError("horizon must cover the whole trace")
    busy: dict[int, int] = {w: 0 for w in trace.workers}
    for e in trace.events:
        busy.setdefault(e.worker, 0)
        busy[e.worker] += e.end_ns - e.start_ns
    return {w: {"running": b / horizon_ns, "idle": 1.0 - b / horizon_ns}
            for w, b in busy.items()}


# Per-task synchronization cost of the dual-lane kernels (thread wake-up
# and the two barriers per depth panel); calibration, not measured data.
PAIR_SYNC_OVERHEAD_MS = 0.25


def simulated_kernel_times(sizes: list[int]) -> list[dict]:
    """Deterministic analogue of the kernel crossover probe.

    Sequential gemm runs at the fast-core Table-3 rate; the dual-lane
    kernel runs at the VC-pair rate plus a fixed synchronization
    overhead, which is what produces the small-size crossover.
    """
    if not sizes:
        raise ValueError("sizes must be nonempty")
    rows = []
    for sz in sizes:
        scale = (sz / TABLE3_BLOCK) ** 3
        seq = TABLE3_MS[FAST][TaskKind.G] * scale / 1e3
        asym = (TABLE3_MS[VC][TaskKind.G] * scale
                + PAIR_SYNC_OVERHEAD_MS) / 1e3
        flops = 2.0 * sz ** 3
        rows.append({"size": sz, "flops": flops,
                     "seq_seconds": seq, "asym_seconds": asym,
                     "seq_gflops": flops / seq / 1e9,
                     "asym_gflops": flops / asym / 1e9})
    return rows


def simulated_crossover_size(max_size: int = 1024) -> Optional[int]:
    """Smallest size at which the dual-lane kernel beats the sequential one."""
    for sz in range(1, max_size + 1):
        row = simulated_kernel_times([sz])[0]
        if row["asym_seconds"] < row["seq_seconds"]:
            return sz
    return None
