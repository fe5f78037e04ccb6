"""Threaded execution of a task graph over a blocked matrix.

Three scheduling policies are supported:

* OBLIVIOUS — conventional FIFO over individually exposed lanes;
* CATS — criticality-aware dual queues: high-bottom-level tasks are
  reserved for fast lanes, with optional uni/bi-directional stealing;
* VC — one worker per fast+slow virtual-core pair, each task internally
  split across the pair by the asymmetric kernels.

Dependency release uses indegree counters under a single lock; the last
completing predecessor enqueues the successor. Trace events are recorded
per worker without locks and merged after join.
"""

from __future__ import annotations

import heapq
import json
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import dense, kernels
from .dense import BlockedMatrix, NotPositiveDefiniteError
from .kernels import DEFAULT_LANES, LaneConfig
from .taskgraph import Task, TaskGraph, TaskKind, bottom_levels

FAST = "fast"
SLOW = "slow"
VC = "vc"

OBLIVIOUS = "oblivious"
CATS = "cats"
VC_POLICY = "vc"


@dataclass(frozen=True)
class WorkerDescriptor:
    id: int
    resource: str  # FAST, SLOW or VC
    pin: Optional[int] = None  # advisory core hint; no-op by default


@dataclass(frozen=True)
class Policy:
    kind: str = OBLIVIOUS
    cats_threshold: float = 0.9
    stealing: str = "bi"  # none | uni | bi

    def __post_init__(self):
        if self.kind not in (OBLIVIOUS, CATS, VC_POLICY):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.cats_threshold <= 1.0:
            raise ValueError("cats_threshold must lie in [0, 1]")
        if self.stealing not in ("none", "uni", "bi"):
            raise ValueError(f"unknown stealing mode {self.stealing!r}")


@dataclass(frozen=True)
class TraceEvent:
    worker: int
    task: int
    kind: str
    k: int
    i: int
    j: int
    start_ns: int
    end_ns: int


@dataclass
class Trace:
    events: list[TraceEvent]
    wall_start: int
    wall_end: int
    workers: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "wall_start_ns": self.wall_start,
            "wall_end_ns": self.wall_end,
            "workers": self.workers,
            "events": [
                {"worker": e.worker, "task": e.task, "kind": e.kind,
                 "k": e.k, "i": e.i, "j": e.j,
                 "start_ns": e.start_ns, "end_ns": e.end_ns}
                for e in self.events
            ],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        doc = json.loads(text)
        events = [TraceEvent(r["worker"], r["task"], r["kind"],
                             r["k"], r["i"], r["j"],
                             r["start_ns"], r["end_ns"])
                  for r in doc["events"]]
        return cls(events, doc["wall_start_ns"], doc["wall_end_ns"],
                   list(doc.get("workers", [])))


class ReadyPool:
    """Policy-driven selection among ready tasks.

    Not thread-safe on its own; the runtime serializes access under its
    scheduler lock, the simulator is single-threaded.

    CATS classifies tasks statically: a task is critical iff its bottom
    level is at least threshold times the largest bottom level in the
    whole DAG (longest-path membership, the criticality notion of the
    criticality-aware scheduler this models). Critical tasks are reserved
    for fast lanes; stealing relaxes the split in one or both directions.
    """

    def __init__(self, policy: Policy, priorities: Optional[list[float]] = None):
        self.policy = policy
        self.priorities = priorities
        self._fifo: list[tuple[int, int]] = []  # (enable event, id) heap
        self._ready: dict[int, float] = {}  # id -> bottom level
        self._cut = 0.0
        if policy.kind == CATS:
            if priorities is None:
                raise ValueError("CATS requires bottom-level priorities")
            self._cut = policy.cats_threshold * max(priorities, default=0.0)

    def __len__(self) -> int:
        return len(self._ready)

    def is_critical(self, task_id: int) -> bool:
        return self.priorities is not None and self.priorities[task_id] >= self._cut

    def push(self, task_id: int, event_seq: int) -> None:
        bl = self.priorities[task_id] if self.priorities is not None else 0.0
        self._ready[task_id] = bl
        heapq.heappush(self._fifo, (event_seq, task_id))

    def _pop_fifo(self) -> Optional[int]:
        while self._fifo:
            _, tid = heapq.heappop(self._fifo)
            if tid in self._ready:
                del self._ready[tid]
                return tid
        return None

    def _pop_best(self, candidates) -> Optional[int]:
        # Highest bottom level first, ties by task id.
        best = min(candidates, key=lambda t: (-self._ready[t], t), default=None)
        if best is not None:
            del self._ready[best]
        return best

    def can_select(self, resource: str, idle_fast: int = 0) -> bool:
        """Whether select() would currently return a task; non-mutating."""
        if not self._ready:
            return False
        if self.policy.kind != CATS:
            return True
        has_crit = any(bl >= self._cut for bl in self._ready.values())
        has_noncrit = any(bl < self._cut for bl in self._ready.values())
        if resource == FAST:
            return has_crit or (has_noncrit
                                and self.policy.stealing in ("uni", "bi"))
        return has_noncrit or (has_crit and self.policy.stealing == "bi"
                               and idle_fast == 0)

    def select(self, resource: str, idle_fast: int = 0) -> Optional[int]:
        """Pick the next task for an idle worker of the given resource kind.

        OBLIVIOUS/VC pop in FIFO order of enabling, ties by task id. CATS
        serves fast lanes from the critical queue and slow lanes from the
        non-critical queue; uni-directional stealing lets fast lanes drain
        the non-critical queue, bi-directional stealing additionally lets
        a slow lane take critical work when no fast worker is idle.
        """
        if not self._ready:
            return None
        if self.policy.kind != CATS:
            return self._pop_fifo()
        crit = [t for t, bl in self._ready.items() if bl >= self._cut]
        noncrit = [t for t, bl in self._ready.items() if bl < self._cut]
        if resource == FAST:
            if crit:
                return self._pop_best(crit)
            if self.policy.stealing in ("uni", "bi"):
                return self._pop_best(noncrit)
            return None
        if noncrit:
            return self._pop_best(noncrit)
        if self.policy.stealing == "bi" and idle_fast == 0:
            return self._pop_best(crit)
        return None


def make_workers(policy_kind: str, count: int) -> list[WorkerDescriptor]:
    """Conventional worker set: VC pairs, or half fast / half slow lanes."""
    if count < 1:
        raise ValueError("worker count must be >= 1")
    if policy_kind == VC_POLICY:
        return [WorkerDescriptor(i, VC) for i in range(count)]
    nfast = (count + 1) // 2
    return [WorkerDescriptor(i, FAST if i < nfast else SLOW)
            for i in range(count)]


def default_priority_cost(b: int) -> Callable[[Task], float]:
    """Fast-core cost estimate used for CATS bottom levels."""
    from .sim import TABLE3_MS  # local import to avoid a cycle
    scale = (b / 448.0) ** 3
    return lambda t: TABLE3_MS[FAST][t.kind] * scale


def run(g: TaskGraph, bm: BlockedMatrix, policy: Policy,
        workers: list[WorkerDescriptor], lanes: LaneConfig = DEFAULT_LANES,
        priority_cost: Optional[Callable[[Task], float]] = None,
        task_hook: Optional[Callable[[Task, WorkerDescriptor], None]] = None,
        ) -> tuple[BlockedMatrix, Trace]:
    """Execute every task of g exactly once over bm's blocks.

    Returns the factored matrix (upper blocks hold U) and the trace. A
    non-positive-definite diagonal block aborts outstanding work and the
    raised error carries the partial trace.
    """
    if not workers:
        raise ValueError("at least one worker is required")
    kinds = {w.resource for w in workers}
    if policy.kind == VC_POLICY and kinds != {VC}:
        raise ValueError("VC policy requires vc-pair workers only")
    if policy.kind in (OBLIVIOUS, CATS) and not kinds <= {FAST, SLOW}:
        raise ValueError(f"{policy.kind} policy requires fast/slow lane workers")
    if policy.kind == CATS and FAST not in kinds:
        raise ValueError("CATS requires at least one fast worker")

    priorities = None
    if policy.kind == CATS:
        cost = priority_cost or default_priority_cost(bm.b)
        priorities = bottom_levels(g, cost)

    pool = ReadyPool(policy, priorities)
    lock = threading.Lock()
    cond = threading.Condition(lock)
    indegree = list(g.indegree)
    state = {"completed": 0, "event_seq": 1, "idle_fast": 0, "waiting": 0,
             "error": None}
    total = len(g.tasks)
    for t in g.tasks:
        if indegree[t.id] == 0:
            pool.push(t.id, 0)

    fast_single = lanes.fast
    slow_single = lanes.slow

    def body(task: Task, worker: WorkerDescriptor) -> None:
        blk = bm.blocks
        k, i, j = task.k, task.i, task.j
        if task_hook is not None:
            task_hook(task, worker)
        if task.kind == TaskKind.C:
            try:
                blk[k][k] = dense.ref_potrf(blk[k][k])
            except NotPositiveDefiniteError as exc:
                raise NotPositiveDefiniteError(
                    k * bm.b + exc.index,
                    f"block ({k},{k}) not positive definite at local pivot "
                    f"{exc.index}") from exc
        elif task.kind == TaskKind.T:
            if worker.resource == VC:
                kernels.trsm_asym(blk[k][k], blk[k][j], lanes)
            else:
                p = fast_single if worker.resource == FAST else slow_single
                kernels.trsm_blocked(blk[k][k], blk[k][j], p)
        elif task.kind == TaskKind.S:
            if worker.resource == VC:
                kernels.syrk_asym(blk[k][i], blk[i][i], lanes)
            else:
                p = fast_single if worker.resource == FAST else slow_single
                kernels.syrk_blocked(blk[k][i], blk[i][i], p)
        else:  # TaskKind.G
            if worker.resource == VC:
                kernels.gemm_asym(blk[k][i], blk[k][j], blk[i][j], lanes)
            else:
                p = fast_single if worker.resource == FAST else slow_single
                kernels.gemm_blocked(blk[k][i], blk[k][j], blk[i][j], p)

    events_per_worker: dict[int, list[TraceEvent]] = {w.id: [] for w in workers}

    def worker_loop(worker: WorkerDescriptor) -> None:
        my_events = events_per_worker[worker.id]
        while True:
            with cond:
                tid = None
                while True:
                    if state["error"] is not None or state["completed"] == total:
                        return
                    tid = pool.select(worker.resource, state["idle_fast"])
                    if tid is not None:
                        break
                    # If every worker is in the wait set, no completion
                    # is in flight and nothing new can become ready. If
                    # additionally no worker kind may take any ready
                    # task, the policy cannot schedule the rest on this
                    # worker set (e.g. CATS without stealing and no slow
                    # lane). A waiting worker that was just notified can
                    # still be counted here, so re-verify eligibility
                    # before declaring the stall.
                    state["waiting"] += 1
                    if state["waiting"] == len(workers):
                        n_fast = sum(w.resource == FAST for w in workers)
                        if not any(pool.can_select(kind, n_fast)
                                   for kind in {w.resource for w in workers}):
                            state["error"] = RuntimeError(
                                "scheduling stalled: no worker may take "
                                "any ready task under this policy")
                            cond.notify_all()
                            state["waiting"] -= 1
                            return
                    if worker.resource == FAST:
                        state["idle_fast"] += 1
                    cond.wait()
                    state["waiting"] -= 1
                    if worker.resource == FAST:
                        state["idle_fast"] -= 1
            task = g.tasks[tid]
            start = time.perf_counter_ns()
            try:
                body(task, worker)
            except Exception as exc:
                with cond:
                    if state["error"] is None:
                        state["error"] = exc
                    cond.notify_all()
                return
            end = time.perf_counter_ns()
            my_events.append(TraceEvent(worker.id, tid, task.kind.value,
                                        task.k, task.i, task.j, start, end))
            with cond:
                state["completed"] += 1
                state["event_seq"] += 1
                for succ in g.successors[tid]:
                    indegree[succ] -= 1
                    if indegree[succ] == 0:
                        pool.push(succ, state["event_seq"])
                cond.notify_all()

    wall_start = time.perf_counter_ns()
    threads = [threading.Thread(target=worker_loop, args=(w,)) for w in workers]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall_end = time.perf_counter_ns()

    events = sorted((e for evs in events_per_worker.values() for e in evs),
                    key=lambda e: (e.start_ns, e.worker))
    trace = Trace(events, wall_start, wall_end, [w.id for w in workers])
    if state["error"] is not None:
        err = state["error"]
        err.trace = trace
        raise err
    return bm, trace


def gflops(n: int, seconds: float) -> float:
    """Cholesky GFLOPS rate, (n^3 / 3) / seconds / 1e9."""
    if seconds <= 0:
        raise ValueError("seconds must be positive")
    return (n ** 3 / 3.0) / seconds / 1e9
