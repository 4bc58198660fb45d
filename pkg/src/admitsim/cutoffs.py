"""Bootstrap distribution of cutoffs and rational admission chances.

Applicants (score plus submitted list) are resampled i.i.d. with
replacement, the market is cleared per draw, and every program's cutoff is
recorded, Open included. A student's rational admission chance at a program
is then the fraction of draws whose cutoff her score meets. Programs are
held fixed across draws; only the applicant pool varies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import ProgramRecord, RankOrderedList, StudentRecord

_STAGE_BOOTSTRAP = 51


@dataclass
class CutoffSampleTable:
    """Cutoff draws, shape (replications, programs); NaN encodes Open.

    NaN is storage only: consumers count it explicitly and the CSV layer
    writes the Open spelling, so no sentinel ever meets a comparison.
    """

    program_ids: list[int]
    samples: np.ndarray
    seed_ledger: list[tuple[int, int, int]]
    n_students: int

    @property
    def replications(self) -> int:
        return self.samples.shape[0]

    def column(self, program_id: int) -> np.ndarray:
        return self.samples[:, self.program_ids.index(program_id)]

    def open_share(self, program_id: int) -> float:
        col = self.column(program_id)
        return float(np.isnan(col).sum() / len(col))


def simulate_cutoffs(
    students: list[StudentRecord],
    programs: list[ProgramRecord],
    rols: list[RankOrderedList],
    replications: int,
    seed: int,
) -> CutoffSampleTable:
    """Resample the applicant pool and collect per-program cutoffs.

    Each replication r draws from its own substream keyed by (seed, r), so
    results do not depend on evaluation order and a single replication
    reproduces the direct matching of a resampled pool exactly.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    n = len(students)
    if n == 0:
        raise ValueError("cannot resample an empty applicant pool")
    m = len(programs)
    pid_index = {p.id: j for j, p in enumerate(programs)}
    scores = np.array([s.eligibility_score for s in students])
    rol_by_student = {r.student_id: r.entries for r in rols}
    flat: list[int] = []
    ptr = [0]
    for s in students:
        flat.extend(pid_index[pid] for pid in rol_by_student.get(s.id, ()))
        ptr.append(len(flat))

    # Students sorted once by (-score, id); a resampled pool is cleared by
    # walking draws in that precomputed priority order. Duplicate draws are
    # identical applicants, so their mutual order cannot matter.
    order = np.lexsort((np.arange(n), -scores))
    rank_of = np.empty(n, dtype=np.int64)
    rank_of[order] = np.arange(n)
    order_list = order.tolist()
    score_list = scores.tolist()
    capacities = [p.capacity for p in programs]

    samples = np.full((replications, m), np.nan)
    ledger: list[tuple[int, int, int]] = []
    for r in range(replications):
        key = (int(seed), _STAGE_BOOTSTRAP, r)
        ledger.append(key)
        rng = np.random.default_rng(np.random.SeedSequence(key))
        draw = rng.integers(0, n, size=n)
        ranks = np.sort(rank_of[draw]).tolist()
        remaining = capacities.copy()
        low = [np.nan] * m
        for rnk in ranks:
            i = order_list[rnk]
            for k in range(ptr[i], ptr[i + 1]):
                j = flat[k]
                if remaining[j] > 0:
                    remaining[j] -= 1
                    low[j] = score_list[i]
                    break
        for j in range(m):
            if remaining[j] == 0:
                samples[r, j] = low[j]
    return CutoffSampleTable(
        program_ids=[p.id for p in programs],
        samples=samples,
        seed_ledger=ledger,
        n_students=n,
    )


def rational_admission_prob(score: float, samples: np.ndarray) -> float:
    """Fraction of cutoff draws that admit the score (Open always admits)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or len(samples) == 0:
        raise ValueError("samples must be a non-empty 1-D array of cutoff draws")
    is_open = np.isnan(samples)
    admits = int(is_open.sum()) + int((samples[~is_open] <= score).sum())
    return admits / len(samples)


def rational_prob_matrix(scores, table: CutoffSampleTable) -> np.ndarray:
    """Admission chance for every (score, program) pair, shape (n, m)."""
    scores = np.asarray(scores, dtype=float)
    R, m = table.samples.shape
    out = np.empty((len(scores), m))
    for j in range(m):
        col = table.samples[:, j]
        finite = np.sort(col[~np.isnan(col)])
        n_open = R - len(finite)
        out[:, j] = (n_open + np.searchsorted(finite, scores, side="right")) / R
    return out
