"""Belief accuracy: errors, pessimism labels, payoff-relevant omissions.

Belief error is subjective minus simulated admission chance, so pessimists
sit below zero. An omitted favourite program is payoff-relevant when the
realized cutoff (not a counterfactual re-clearing) would have admitted the
student, with Open counting as admitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import clears
from .records import BeliefRecord, OmissionVerdict, StudentRecord, TruthFlags

PESSIMISTIC = "pessimistic"
CALIBRATED = "calibrated"
OPTIMISTIC = "optimistic"


def _check_unit_interval(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def belief_error(subjective, rational):
    """Subjective minus simulated admission chance; negative = pessimistic."""
    s = _check_unit_interval("subjective belief", subjective)
    r = _check_unit_interval("rational probability", rational)
    out = s - r
    return float(out) if out.ndim == 0 else out


def combined_belief(primary, alternative):
    """Chance of admission through either of two independent tracks.

    Equals 1 - (1 - p)(1 - q), computed in the complement form that keeps
    the identity exact to float round-off.
    """
    p = _check_unit_interval("primary belief", primary)
    q = _check_unit_interval("alternative belief", alternative)
    out = p + (1.0 - p) * q
    return float(out) if out.ndim == 0 else out


def classify_pessimism(error, band: float = 0.05) -> str:
    """Label a belief error, treating +/- band as calibrated."""
    if band < 0:
        raise ValueError("band must be >= 0")
    e = float(error)
    if not -1.0 <= e <= 1.0:
        raise ValueError(f"belief error {e} outside [-1, 1]")
    if e < -band:
        return PESSIMISTIC
    if e > band:
        return OPTIMISTIC
    return CALIBRATED


def detect_payoff_relevant_omission(
    student: StudentRecord,
    flags: TruthFlags,
    realized_cutoffs: dict[int, float | None],
) -> OmissionVerdict:
    """Would the omitted favourite actually have admitted this student?

    Only meaningful for omitters; anyone else is rejected. The check uses
    the cutoffs the market actually produced.
    """
    if flags.student_id != student.id:
        raise ValueError("flags belong to a different student")
    if not flags.omits_most_preferred:
        raise ValueError(f"student {student.id} did not omit her favourite program")
    pid = flags.true_top_program
    if pid not in realized_cutoffs:
        raise ValueError(f"no realized cutoff for program {pid}")
    cut = realized_cutoffs[pid]
    return OmissionVerdict(
        student_id=student.id,
        program_id=pid,
        payoff_relevant=clears(student.eligibility_score, cut),
        realized_cutoff=cut,
    )


def build_belief_records(
    students: list[StudentRecord],
    flags: list[TruthFlags],
    subjective_top: np.ndarray,
    rational_top: np.ndarray,
    band: float = 0.05,
    subjective_alt: np.ndarray | None = None,
) -> list[BeliefRecord]:
    """One record per student for her favourite program."""
    if not (len(students) == len(flags) == len(subjective_top) == len(rational_top)):
        raise ValueError("inputs must align one row per student")
    records = []
    for i, (s, f) in enumerate(zip(students, flags)):
        err = belief_error(float(subjective_top[i]), float(rational_top[i]))
        records.append(
            BeliefRecord(
                student_id=s.id,
                program_id=f.true_top_program,
                subjective=float(subjective_top[i]),
                rational=float(rational_top[i]),
                error=err,
                label=classify_pessimism(err, band),
                subjective_alt=None if subjective_alt is None else float(subjective_alt[i]),
            )
        )
    return records


@dataclass(frozen=True)
class OutcomeRates:
    """Headline reporting-behaviour shares plus conditional slices."""

    n_students: int
    share_non_truthful: float
    share_omits_top: float
    share_payoff_relevant: float
    payoff_relevant_among_omitters: float
    payoff_relevant_among_non_truthful: float

    def to_dict(self) -> dict:
        return {
            "n_students": self.n_students,
            "share_non_truthful": self.share_non_truthful,
            "share_omits_top": self.share_omits_top,
            "share_payoff_relevant": self.share_payoff_relevant,
            "payoff_relevant_among_omitters": self.payoff_relevant_among_omitters,
            "payoff_relevant_among_non_truthful": self.payoff_relevant_among_non_truthful,
        }


def outcome_rates(
    flags: list[TruthFlags], verdicts: list[OmissionVerdict]
) -> OutcomeRates:
    """Population shares of non-truthful reports, omissions, and losses.

    ``verdicts`` covers the omitters; students without a verdict count as
    not payoff-relevant.
    """
    n = len(flags)
    if n == 0:
        raise ValueError("no students")
    by_student = {v.student_id: v for v in verdicts}
    n_nt = sum(f.reports_non_truthfully for f in flags)
    n_om = sum(f.omits_most_preferred for f in flags)
    n_pr = 0
    n_pr_nt = 0
    for f in flags:
        v = by_student.get(f.student_id)
        if v is not None and v.payoff_relevant:
            n_pr += 1
            if f.reports_non_truthfully:
                n_pr_nt += 1
    return OutcomeRates(
        n_students=n,
        share_non_truthful=n_nt / n,
        share_omits_top=n_om / n,
        share_payoff_relevant=n_pr / n,
        payoff_relevant_among_omitters=(n_pr / n_om) if n_om else float("nan"),
        payoff_relevant_among_non_truthful=(n_pr_nt / n_nt) if n_nt else float("nan"),
    )
