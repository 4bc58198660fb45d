"""Randomized verification suites for the assignment mechanism.

Two batteries: an exhaustive misreport search on tiny instances, and a
stability / cutoff-consistency sweep over random markets of up to several
thousand students. Both return violation summaries instead of raising, so
the CLI can map them to exit codes and tests can inject faulty engines.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .market import (
    apply_cutoff_rule,
    check_stability,
    run_matching,
    verify_strategy_proofness,
)
from .records import (
    SCORE_MAX,
    SCORE_MIN,
    ProgramRecord,
    RankOrderedList,
    StudentRecord,
)

#: Test hook: suites clear markets through this callable. Swapping in a
#: deliberately broken engine must surface violations (and exit code 3 via
#: the command line); nothing in the package itself ever reassigns it.
ACTIVE_MECHANISM = run_matching


@dataclass
class SuiteResult:
    n_runs: int
    elapsed_seconds: float
    violation_counts: dict[str, int] = field(default_factory=dict)
    examples: list[str] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(self.violation_counts.values())

    @property
    def passed(self) -> bool:
        return self.total_violations == 0

    def record(self, kind: str, detail: str) -> None:
        self.violation_counts[kind] = self.violation_counts.get(kind, 0) + 1
        if len(self.examples) < 20:
            self.examples.append(f"{kind}: {detail}")


def random_market(
    rng: np.random.Generator,
    n_students: int,
    n_programs: int,
    capacity_ratio: float | None = None,
) -> tuple[list[StudentRecord], list[ProgramRecord], list[RankOrderedList]]:
    """Draw a random market with continuous scores (ties have measure zero)."""
    scores = rng.uniform(SCORE_MIN, SCORE_MAX, size=n_students)
    students = [StudentRecord(id=i, eligibility_score=float(s)) for i, s in enumerate(scores)]
    if capacity_ratio is None:
        capacity_ratio = float(rng.uniform(0.25, 1.2))
    base = max(1.0, capacity_ratio * n_students / n_programs)
    caps = np.maximum(1, rng.poisson(base, size=n_programs))
    programs = [ProgramRecord(id=j, capacity=int(c)) for j, c in enumerate(caps)]
    max_len = min(8, n_programs)
    lengths = rng.integers(1, max_len + 1, size=n_students)
    keys = rng.random((n_students, n_programs))
    ranked = np.argsort(keys, axis=1, kind="stable")[:, :max_len]
    rols = [
        RankOrderedList(i, tuple(int(p) for p in ranked[i, : lengths[i]]))
        for i in range(n_students)
    ]
    return students, programs, rols


def misreport_suite(
    n_instances: int,
    seed: int,
    max_students: int = 5,
    max_programs: int = 4,
    mechanism=None,
) -> SuiteResult:
    """Exhaustively search tiny random instances for profitable misreports."""
    mechanism = mechanism or ACTIVE_MECHANISM
    rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
    t0 = time.perf_counter()
    result = SuiteResult(n_runs=n_instances, elapsed_seconds=0.0)
    for k in range(n_instances):
        n = int(rng.integers(1, max_students + 1))
        m = int(rng.integers(1, max_programs + 1))
        students, programs, rols = random_market(rng, n, m)
        report = verify_strategy_proofness(
            students, programs, rols, mechanism=mechanism
        )
        for dev in report.violations:
            result.record(
                "profitable_misreport",
                f"instance {k}: student {dev.student_id} gains via {dev.alternative}",
            )
    result.elapsed_seconds = time.perf_counter() - t0
    return result


def _audit_outcome(result: SuiteResult, tag: str, students, programs, rols, outcome):
    """Feasibility, stability, and cutoff-consistency checks on one outcome."""
    capacity = {p.id: p.capacity for p in programs}
    listed = {rol.student_id: set(rol.entries) for rol in rols}
    loads = outcome.loads()
    for pid, load in loads.items():
        if load > capacity[pid]:
            result.record("capacity_exceeded", f"{tag}: program {pid} holds {load}")
    for sid, pid in outcome.assignment.items():
        if pid is not None and pid not in listed.get(sid, ()):
            result.record("assigned_unlisted", f"{tag}: student {sid} -> {pid}")
    for pid, cut in outcome.cutoffs.items():
        if cut is None and loads.get(pid, 0) >= capacity[pid]:
            result.record("open_but_full", f"{tag}: program {pid}")
        if cut is not None and loads.get(pid, 0) < capacity[pid]:
            result.record("priced_but_unfilled", f"{tag}: program {pid}")
    for pair in check_stability(students, programs, rols, outcome):
        result.record("blocking_pair", f"{tag}: {pair.student_id} -> {pair.program_id}")
    reassigned = apply_cutoff_rule(students, rols, outcome.cutoffs)
    for sid, pid in reassigned.items():
        if pid != outcome.assignment[sid]:
            result.record(
                "cutoff_rule_mismatch",
                f"{tag}: student {sid} held {outcome.assignment[sid]}, rule gives {pid}",
            )


def stability_suite(
    n_markets: int,
    seed: int,
    max_students: int = 10_000,
    max_programs: int = 80,
    mechanism=None,
) -> SuiteResult:
    """Clear random markets and audit every outcome.

    Market sizes are drawn log-uniformly up to the cap, with the cap itself
    forced in every so often so the largest size is always exercised.
    """
    mechanism = mechanism or ACTIVE_MECHANISM
    rng = np.random.default_rng(np.random.SeedSequence((seed, 102)))
    t0 = time.perf_counter()
    result = SuiteResult(n_runs=n_markets, elapsed_seconds=0.0)
    for k in range(n_markets):
        if n_markets >= 100 and k % (n_markets // 4) == 1:
            n = max_students
        else:
            n = min(max_students, int(10 ** rng.uniform(0.7, np.log10(max_students))))
        m = min(max_programs, max(1, int(10 ** rng.uniform(0.3, np.log10(max_programs)))))
        students, programs, rols = random_market(rng, n, m)
        outcome = mechanism(students, programs, rols)
        _audit_outcome(result, f"market {k} (n={n}, m={m})", students, programs, rols, outcome)
    result.elapsed_seconds = time.perf_counter() - t0
    return result
