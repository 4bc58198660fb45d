"""Exhaustive misreport enumeration and the randomized suites."""

import pytest

from admitsim.harness import misreport_suite, stability_suite
from admitsim.market import enumerate_lists, run_matching, verify_strategy_proofness
from admitsim.records import MatchOutcome, RankOrderedList

from conftest import mk_programs, mk_students, rol


def test_enumerate_lists_counts():
    # 3 + 3*2 + 3*2*1 orderings of non-empty subsets of three programs.
    assert len(enumerate_lists([0, 1, 2], 3)) == 15
    assert len(enumerate_lists([0, 1, 2], 2)) == 9
    assert enumerate_lists([4], 1) == [(4,)]


def test_truthful_instance_has_no_profitable_deviation():
    students = mk_students([10.0, 8.0, 6.0])
    programs = mk_programs([1, 1])
    rols = [rol(0, 0, 1), rol(1, 0, 1), rol(2, 0, 1)]
    report = verify_strategy_proofness(students, programs, rols)
    assert report.is_strategy_proof
    # Four orderings of non-empty subsets of two programs; each student
    # faced all of them except her own list.
    assert report.n_alternatives_checked == 3 * (4 - 1)


def test_size_caps_enforced():
    students = mk_students(range(6))
    programs = mk_programs([1])
    with pytest.raises(ValueError, match="more than 5 students"):
        verify_strategy_proofness(students, programs, [])
    with pytest.raises(ValueError, match="more than 4 programs"):
        verify_strategy_proofness(mk_students([1.0]), mk_programs([1] * 5), [])


def _boston(students, programs, rols):
    """Immediate acceptance: seats are committed round by round.

    The classic manipulable benchmark. Cutoffs are filled in only to
    satisfy the outcome interface; the dominance checker ignores them.
    """
    remaining = {p.id: p.capacity for p in programs}
    assignment = {s.id: None for s in students}
    by_sid = {r.student_id: r.entries for r in rols}
    score = {s.id: s.eligibility_score for s in students}
    max_rounds = max((len(e) for e in by_sid.values()), default=0)
    for rnd in range(max_rounds):
        applicants: dict[int, list[int]] = {}
        for sid, entries in by_sid.items():
            if assignment[sid] is None and rnd < len(entries):
                applicants.setdefault(entries[rnd], []).append(sid)
        for pid, sids in applicants.items():
            sids.sort(key=lambda sid: (-score[sid], sid))
            take = sids[: remaining[pid]]
            remaining[pid] -= len(take)
            for sid in take:
                assignment[sid] = pid
    return MatchOutcome(
        assignment=assignment, cutoffs={p.id: None for p in programs}
    )


def test_boston_mechanism_is_caught():
    # Student 1 loses program 0 to the higher score in round one, and by
    # then program 1 is gone too. Ranking program 1 first would have
    # secured it, so the checker must flag a profitable deviation.
    students = mk_students([9.0, 8.0, 7.0])
    programs = mk_programs([1, 1])
    rols = [rol(0, 0), rol(1, 0, 1), rol(2, 1)]
    sanity = _boston(students, programs, rols)
    assert sanity.assignment == {0: 0, 1: None, 2: 1}
    report = verify_strategy_proofness(students, programs, rols, mechanism=_boston)
    assert not report.is_strategy_proof
    deviants = {d.student_id for d in report.violations}
    assert 1 in deviants
    assert any(d.alternative[0] == 1 for d in report.violations if d.student_id == 1)


def test_misreport_suite_clean_on_real_mechanism():
    result = misreport_suite(25, seed=2024)
    assert result.passed
    assert result.n_runs == 25


def test_misreport_suite_flags_injected_fault():
    result = misreport_suite(20, seed=1, mechanism=_boston)
    assert not result.passed
    assert "profitable_misreport" in result.violation_counts


def test_stability_suite_clean_and_audits_everything():
    result = stability_suite(30, seed=9, max_students=400, max_programs=12)
    assert result.passed
    assert result.elapsed_seconds < 60


def test_stability_suite_flags_broken_engine():
    def drop_everyone(students, programs, rols):
        out = run_matching(students, programs, rols)
        return MatchOutcome(
            assignment={sid: None for sid in out.assignment},
            cutoffs=out.cutoffs,
        )

    result = stability_suite(5, seed=9, max_students=60, max_programs=6,
                             mechanism=drop_everyone)
    assert not result.passed
    # An emptied market shows up both as blocking pairs and as cutoff-rule
    # mismatches.
    assert "blocking_pair" in result.violation_counts
    assert "cutoff_rule_mismatch" in result.violation_counts


def test_deviation_report_carries_context():
    students = mk_students([9.0, 8.0, 7.0])
    programs = mk_programs([1, 1])
    rols = [rol(0, 0), rol(1, 0, 1), rol(2, 1)]
    report = verify_strategy_proofness(students, programs, rols, mechanism=_boston)
    dev = next(d for d in report.violations if d.student_id == 1)
    assert dev.truthful_assignment is None
    assert dev.deviant_assignment == 1


def test_unlisted_assignment_counts_as_worst():
    # A mechanism that dumps a student into an unlisted program must not
    # count that as an improvement over staying unassigned.
    students = mk_students([5.0])
    programs = mk_programs([1, 1])
    rols = [rol(0, 0)]

    def dumper(students_, programs_, rols_):
        return MatchOutcome(
            assignment={0: 1}, cutoffs={0: None, 1: None}
        )

    report = verify_strategy_proofness(students, programs, rols, mechanism=dumper)
    assert report.is_strategy_proof
