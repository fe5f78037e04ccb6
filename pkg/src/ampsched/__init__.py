"""Task-parallel blocked Cholesky with asymmetric-multicore scheduling.

A dense linear algebra scheduling laboratory: a dependency-tracked task
DAG for the blocked Cholesky factorization, cache-blocked BLAS-3 kernels
with a fast+slow dual-lane variant, a threaded runtime with three
scheduling policies, and a deterministic simulator of an asymmetric
big.LITTLE machine.
"""

from .dense import (BlockedMatrix, NotPositiveDefiniteError,
                    SingularTriangularError, make_spd, ref_gemm, ref_potrf,
                    ref_syrk, ref_trsm, residual)
from .kernels import (DEFAULT_LANES, FAST_PARAMS, SLOW_PARAMS, CacheParams,
                      LaneConfig, Loop3Split, gemm_asym, gemm_blocked,
                      kernel_crossover_probe, split_loop3, syrk_asym,
                      syrk_blocked, trsm_asym, trsm_blocked)
from .runtime import (CATS, FAST, OBLIVIOUS, SLOW, VC, VC_POLICY, Policy,
                      Trace, TraceEvent, WorkerDescriptor, gflops,
                      make_workers, run)
from .sim import (GTS, VC_VIEW, FixedCostModel, FlopsCostModel, MachineModel,
                  Resource, SimResult, Table3CostModel, idle_stats,
                  lower_bounds, preset_exynos5422, simulate)
from .taskgraph import (Task, TaskGraph, TaskGraphBuilder, TaskKind,
                        bottom_levels, build_cholesky_dag, critical_path,
                        export_dot, task_counts)

__version__ = "0.1.0"
