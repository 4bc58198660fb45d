"""Score-based centralized assignment.

All programs rank applicants by one common eligibility score (ties broken by
ascending student id), so student-proposing deferred acceptance collapses to
a serial dictatorship: walk students from best score to worst and give each
her favourite program with a seat left. The outcome is the unique stable
matching, and each filled program's cutoff is the lowest admitted score.

The array-level engine (`clear_market`) is separated from the record-level
API (`run_matching`) so that resampling loops can skip validation and id
mapping.
"""

from __future__ import annotations

import math
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .records import (
    MAX_LIST_LEN,
    BlockingPair,
    Deviation,
    DominanceReport,
    MatchOutcome,
    ProgramRecord,
    RankOrderedList,
    StudentRecord,
)


def clears(score: float, cutoff: float | None) -> bool:
    """True when a score meets a cutoff; Open (None) admits everyone."""
    return cutoff is None or score >= cutoff


def clear_market(
    scores: Sequence[float],
    rols: Sequence[Sequence[int]],
    capacities: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Assign students to programs by score priority, index space.

    Args:
        scores: eligibility score per student.
        rols: per student, program indices in preference order (may be empty).
        capacities: seats per program.

    Returns:
        (assigned, cutoffs) where assigned[i] is a program index or -1, and
        cutoffs[j] is the lowest admitted score or NaN when seats were left
        over. NaN is the array-level spelling of Open; it never enters a
        comparison.
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    m = len(capacities)
    # descending score, ascending index on ties
    order = np.lexsort((np.arange(n), -scores)).tolist()
    score_list = scores.tolist()
    remaining = [int(c) for c in capacities]
    assigned = [-1] * n
    low = [math.nan] * m
    for i in order:
        for j in rols[i]:
            if remaining[j] > 0:
                remaining[j] -= 1
                assigned[i] = j
                low[j] = score_list[i]  # last admit in score order = minimum
                break
    cutoffs = np.array(
        [low[j] if remaining[j] == 0 else math.nan for j in range(m)], dtype=float
    )
    return np.asarray(assigned, dtype=np.int64), cutoffs


def _index_instance(
    students: Iterable[StudentRecord],
    programs: Iterable[ProgramRecord],
    rols: Iterable[RankOrderedList],
):
    """Validate an instance and map ids to dense indices."""
    students = list(students)
    programs = list(programs)
    sid_index: dict[int, int] = {}
    for i, s in enumerate(students):
        if s.id in sid_index:
            raise ValueError(f"duplicate student id {s.id}")
        sid_index[s.id] = i
    pid_index: dict[int, int] = {}
    for j, p in enumerate(programs):
        if p.id in pid_index:
            raise ValueError(f"duplicate program id {p.id}")
        pid_index[p.id] = j
    rol_by_student: dict[int, tuple[int, ...]] = {}
    for rol in rols:
        if rol.student_id not in sid_index:
            raise ValueError(f"list for unknown student {rol.student_id}")
        if rol.student_id in rol_by_student:
            raise ValueError(f"two lists for student {rol.student_id}")
        for pid in rol.entries:
            if pid not in pid_index:
                raise ValueError(
                    f"student {rol.student_id} ranks unknown program {pid}"
                )
        rol_by_student[rol.student_id] = rol.entries
    return students, programs, sid_index, pid_index, rol_by_student


def run_matching(
    students: Iterable[StudentRecord],
    programs: Iterable[ProgramRecord],
    rols: Iterable[RankOrderedList],
) -> MatchOutcome:
    """Clear the market and report assignment plus induced cutoffs.

    Students without a list stay unassigned. Raises ValueError on duplicate
    ids, unknown references, or duplicate lists.
    """
    students, programs, sid_index, pid_index, rol_by_student = _index_instance(
        students, programs, rols
    )
    scores = [s.eligibility_score for s in students]
    rol_idx: list[list[int]] = [[] for _ in students]
    for sid, entries in rol_by_student.items():
        rol_idx[sid_index[sid]] = [pid_index[pid] for pid in entries]
    assigned, cut = clear_market(scores, rol_idx, [p.capacity for p in programs])
    assignment = {
        s.id: (programs[a].id if a >= 0 else None)
        for s, a in zip(students, assigned.tolist())
    }
    cutoffs = {
        p.id: (None if math.isnan(c) else c) for p, c in zip(programs, cut.tolist())
    }
    return MatchOutcome(assignment=assignment, cutoffs=cutoffs)


def _check_outcome_matches(students, programs, outcome: MatchOutcome) -> None:
    sids = {s.id for s in students}
    pids = {p.id for p in programs}
    if set(outcome.assignment) != sids:
        raise ValueError("outcome assignment does not cover this instance's students")
    if set(outcome.cutoffs) != pids:
        raise ValueError("outcome cutoffs do not cover this instance's programs")
    for pid in outcome.assignment.values():
        if pid is not None and pid not in pids:
            raise ValueError(f"outcome assigns unknown program {pid}")


def check_stability(
    students: Iterable[StudentRecord],
    programs: Iterable[ProgramRecord],
    rols: Iterable[RankOrderedList],
    outcome: MatchOutcome,
) -> list[BlockingPair]:
    """List (student, program) pairs that block the outcome.

    A pair blocks when the student ranks the program above her assignment
    (any listed program beats being unassigned or holding an unlisted one)
    and either her score strictly exceeds the program's cutoff, or the
    cutoff is Open and the program has a seat to spare.
    """
    students = list(students)
    programs = list(programs)
    _check_outcome_matches(students, programs, outcome)
    capacity = {p.id: p.capacity for p in programs}
    loads = outcome.loads()
    rol_by_student = {}
    for rol in rols:
        if rol.student_id in rol_by_student:
            raise ValueError(f"two lists for student {rol.student_id}")
        rol_by_student[rol.student_id] = rol.entries
    pairs: list[BlockingPair] = []
    for s in sorted(students, key=lambda r: r.id):
        entries = rol_by_student.get(s.id, ())
        held = outcome.assignment[s.id]
        held_rank = entries.index(held) if held in entries else len(entries)
        for pid in entries[:held_rank]:
            cut = outcome.cutoffs[pid]
            if cut is None:
                if loads.get(pid, 0) < capacity[pid]:
                    pairs.append(BlockingPair(s.id, pid))
            elif s.eligibility_score > cut:
                pairs.append(BlockingPair(s.id, pid))
    return pairs


def apply_cutoff_rule(
    students: Iterable[StudentRecord],
    rols: Iterable[RankOrderedList],
    cutoffs: dict[int, float | None],
) -> dict[int, int | None]:
    """Assign each student her favourite listed program whose cutoff she meets.

    This is the demand side of the cutoff characterization: on an outcome's
    own cutoffs it must reproduce the matching exactly (capacities are not
    consulted).
    """
    rol_by_student = {rol.student_id: rol.entries for rol in rols}
    out: dict[int, int | None] = {}
    for s in students:
        out[s.id] = None
        for pid in rol_by_student.get(s.id, ()):
            if clears(s.eligibility_score, cutoffs[pid]):
                out[s.id] = pid
                break
    return out


# ---------------------------------------------------------------------------
# exhaustive dominance checking (small instances only)
# ---------------------------------------------------------------------------

_MAX_SP_STUDENTS = 5
_MAX_SP_PROGRAMS = 4


def _outcome_rank(entries: tuple[int, ...], assigned: int | None) -> int:
    """Position of an assignment in a student's true order.

    Listed programs rank by position, staying unassigned ranks just below the
    list, and landing an unlisted program is worst of all.
    """
    if assigned is None:
        return len(entries)
    try:
        return entries.index(assigned)
    except ValueError:
        return len(entries) + 1


def enumerate_lists(
    program_ids: Sequence[int], max_list_len: int
) -> list[tuple[int, ...]]:
    """Every ordering of every non-empty subset of programs, up to a length cap."""
    out: list[tuple[int, ...]] = []
    for size in range(1, max_list_len + 1):
        out.extend(permutations(program_ids, size))
    return out


def verify_strategy_proofness(
    students: Iterable[StudentRecord],
    programs: Iterable[ProgramRecord],
    rols: Iterable[RankOrderedList],
    max_list_len: int | None = None,
    mechanism=run_matching,
) -> DominanceReport:
    """Try every alternative list for every student, holding others fixed.

    Each submitted list is taken as that student's true ranking; a violation
    is any misreport that lands her a strictly better outcome under it. Only
    instances with at most 5 students and 4 programs are accepted, since the
    enumeration is exhaustive.
    """
    students = list(students)
    programs = list(programs)
    rols = list(rols)
    if len(students) > _MAX_SP_STUDENTS:
        raise ValueError(f"instance too large: more than {_MAX_SP_STUDENTS} students")
    if len(programs) > _MAX_SP_PROGRAMS:
        raise ValueError(f"instance too large: more than {_MAX_SP_PROGRAMS} programs")
    if max_list_len is None:
        max_list_len = min(len(programs), MAX_LIST_LEN)
    program_ids = [p.id for p in programs]
    truth = mechanism(students, programs, rols)
    alternatives = enumerate_lists(program_ids, max_list_len)

    report = DominanceReport(n_students=len(students), n_alternatives_checked=0)
    for rol in rols:
        sid = rol.student_id
        others = [r for r in rols if r.student_id != sid]
        base_rank = _outcome_rank(rol.entries, truth.assignment[sid])
        for alt in alternatives:
            if alt == rol.entries:
                continue
            report.n_alternatives_checked += 1
            deviant = mechanism(
                students, programs, others + [RankOrderedList(sid, alt)]
            )
            if _outcome_rank(rol.entries, deviant.assignment[sid]) < base_rank:
                report.violations.append(
                    Deviation(
                        student_id=sid,
                        alternative=alt,
                        truthful_assignment=truth.assignment[sid],
                        deviant_assignment=deviant.assignment[sid],
                    )
                )
    return report
