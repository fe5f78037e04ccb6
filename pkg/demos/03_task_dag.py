"""Inspect the blocked Cholesky task DAG.

Prints the per-kind task counts for growing grids, the unit-cost
critical path (3(s-1)+1 levels), and writes a Graphviz DOT file for the
4x4 grid -- 20 tasks: 4 factorizations, 6 triangular solves, 6 rank-k
updates on the diagonal, and 4 trailing matrix-matrix updates.
"""

from ampsched import (TaskKind, build_cholesky_dag, critical_path, export_dot,
                      task_counts)

OUT = "cholesky_s4.dot"


def main() -> None:
    print(f"{'s':>3} {'C':>4} {'T':>5} {'S':>5} {'G':>6} {'total':>6} {'cp':>4}")
    for s in range(1, 15):
        counts = task_counts(s)
        g = build_cholesky_dag(s)
        cp = critical_path(g, lambda t: 1.0)
        total = sum(counts.values())
        print(f"{s:>3} {counts[TaskKind.C]:>4} {counts[TaskKind.T]:>5} "
              f"{counts[TaskKind.S]:>5} {counts[TaskKind.G]:>6} "
              f"{total:>6} {cp:>4.0f}")

    g = build_cholesky_dag(4)
    with open(OUT, "w") as fh:
        fh.write(export_dot(g))
    print(f"\nwrote {OUT} ({len(g.tasks)} nodes, {len(g.edges)} edges)")
    print("render with: dot -Tpng cholesky_s4.dot -o cholesky_s4.png")


if __name__ == "__main__":
    main()
