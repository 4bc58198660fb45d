"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

from admitsim.records import ProgramRecord, RankOrderedList, StudentRecord


def mk_students(scores) -> list[StudentRecord]:
    return [
        StudentRecord(id=i, eligibility_score=float(s)) for i, s in enumerate(scores)
    ]


def mk_programs(capacities) -> list[ProgramRecord]:
    return [ProgramRecord(id=j, capacity=int(c)) for j, c in enumerate(capacities)]


def rol(sid: int, *pids: int) -> RankOrderedList:
    return RankOrderedList(sid, tuple(pids))


def proposal_da(scores, rols, capacities):
    """Student-proposing deferred acceptance, written as proposal rounds.

    Serves as an independent oracle for the production engine, which walks
    students in score order instead. Programs rank applicants by score
    (descending) with ascending index as the tiebreak. Returns the assigned
    program index per student, or None.
    """
    n = len(scores)
    m = len(capacities)
    nxt = [0] * n
    held: list[list[int]] = [[] for _ in range(m)]
    queue = list(range(n))
    while queue:
        i = queue.pop()
        while nxt[i] < len(rols[i]):
            j = rols[i][nxt[i]]
            nxt[i] += 1
            pool = sorted(held[j] + [i], key=lambda k: (-scores[k], k))
            kept, bumped = pool[: capacities[j]], pool[capacities[j] :]
            if i in kept:
                held[j] = kept
                queue.extend(bumped)
                break
    assigned = [None] * n
    for j in range(m):
        for i in held[j]:
            assigned[i] = j
    cutoffs = [
        min(scores[i] for i in held[j]) if len(held[j]) == capacities[j] else None
        for j in range(m)
    ]
    return assigned, cutoffs


def naive_blocking_pairs(scores, rols, assigned, capacities):
    """Blocking pairs straight from the definition, no cutoffs involved.

    (i, j) blocks when i ranks j above what she holds and j either has a
    spare seat or holds someone with worse priority than i.
    """
    n = len(scores)
    pairs = []
    for i in range(n):
        cur = assigned[i]
        upto = rols[i].index(cur) if cur in rols[i] else len(rols[i])
        for j in rols[i][:upto]:
            holders = [k for k in range(n) if assigned[k] == j]
            if len(holders) < capacities[j]:
                pairs.append((i, j))
            elif any((-scores[k], k) > (-scores[i], i) for k in holders):
                pairs.append((i, j))
    return pairs
