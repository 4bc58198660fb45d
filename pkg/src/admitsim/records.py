"""Domain records shared across the package.

Plain dataclasses, no behaviour beyond validation. Identifiers are opaque
ints; eligibility scores live on a bounded real scale with higher = better.
A program's cutoff is either a real score (seats filled) or Open (seats left
over), and Open is represented as ``None`` rather than a sentinel score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

#: Hard cap on rank-ordered list length accepted by the clearinghouse.
MAX_LIST_LEN = 8

#: Bounds of the eligibility-score scale (inclusive).
SCORE_MIN = -3.0
SCORE_MAX = 12.2


@dataclass(frozen=True)
class StudentRecord:
    """One applicant with survey covariates.

    Only ``id`` and ``eligibility_score`` matter to the clearinghouse; the
    remaining fields feed the generator and the regressions. Defaults keep
    mechanism-only uses lightweight.
    """

    id: int
    eligibility_score: float
    middle_school_gpa: float = 0.0
    age: float = 20.0
    female: int = 0
    parents_income_pct: float = 0.5
    parents_edu_years: float = 13.0
    confidence: float = 5.0
    risk_willingness: float = 5.0
    postpone_willing: int = 0
    rejection_is_failure: int = 0
    difficult_to_comprehend: int = 0
    understands_sp: int = 0
    wave2021: int = 0
    loc_x: float = 0.0
    loc_y: float = 0.0

    def __post_init__(self) -> None:
        if not SCORE_MIN <= self.eligibility_score <= SCORE_MAX:
            raise ValueError(
                f"eligibility_score {self.eligibility_score} outside "
                f"[{SCORE_MIN}, {SCORE_MAX}] for student {self.id}"
            )


@dataclass(frozen=True)
class ProgramRecord:
    """One study program with capacity and peer-composition attributes."""

    id: int
    capacity: int
    loc_x: float = 0.0
    loc_y: float = 0.0
    peer_quality: float = 0.0
    same_gender_share_female: float = 0.5
    peer_parents_income: float = 0.5

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"program {self.id}: capacity must be >= 1")
        if not 0.0 <= self.same_gender_share_female <= 1.0:
            raise ValueError(f"program {self.id}: same_gender_share_female outside [0, 1]")
        if not 0.0 <= self.peer_parents_income <= 1.0:
            raise ValueError(f"program {self.id}: peer_parents_income outside [0, 1]")


@dataclass(frozen=True)
class RankOrderedList:
    """A student's submitted preference list, best first.

    Between 1 and ``MAX_LIST_LEN`` distinct program ids.
    """

    student_id: int
    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.entries) <= MAX_LIST_LEN:
            raise ValueError(
                f"student {self.student_id}: list length {len(self.entries)} "
                f"outside [1, {MAX_LIST_LEN}]"
            )
        if len(set(self.entries)) != len(self.entries):
            raise ValueError(f"student {self.student_id}: duplicate program in list")


class BlockingPair(NamedTuple):
    student_id: int
    program_id: int


@dataclass
class MatchOutcome:
    """Assignment plus the cutoffs it induces.

    ``assignment`` maps student id -> program id or None (unassigned).
    ``cutoffs`` maps program id -> lowest admitted score, or None for Open
    (the program ended with spare seats).
    """

    assignment: dict[int, int | None]
    cutoffs: dict[int, float | None]

    def loads(self) -> dict[int, int]:
        """Seats filled per program, recomputed from the assignment."""
        out: dict[int, int] = {pid: 0 for pid in self.cutoffs}
        for pid in self.assignment.values():
            if pid is not None:
                out[pid] = out.get(pid, 0) + 1
        return out


@dataclass(frozen=True)
class Deviation:
    """A profitable misreport found by the dominance checker."""

    student_id: int
    alternative: tuple[int, ...]
    truthful_assignment: int | None
    deviant_assignment: int | None


@dataclass
class DominanceReport:
    """Result of exhaustive misreport enumeration on one instance."""

    n_students: int
    n_alternatives_checked: int
    violations: list[Deviation] = field(default_factory=list)

    @property
    def is_strategy_proof(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class TruthFlags:
    """Reporting-behaviour flags for one student.

    Omitting the most-preferred program implies reporting non-truthfully;
    construction enforces that.
    """

    student_id: int
    reports_non_truthfully: int
    omits_most_preferred: int
    true_top_program: int

    def __post_init__(self) -> None:
        if self.omits_most_preferred and not self.reports_non_truthfully:
            raise ValueError(
                f"student {self.student_id}: omission flagged on a truthful report"
            )


@dataclass(frozen=True)
class BeliefRecord:
    """Subjective vs simulated admission chance for one (student, program)."""

    student_id: int
    program_id: int
    subjective: float
    rational: float
    error: float
    label: str
    subjective_alt: float | None = None


@dataclass(frozen=True)
class OmissionVerdict:
    """Whether an omitted favourite program would actually have admitted."""

    student_id: int
    program_id: int
    payoff_relevant: bool
    realized_cutoff: float | None
