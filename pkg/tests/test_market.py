"""Clearing engine: hand instances, oracle equivalence, stability checks."""

import math

import numpy as np
import pytest

from admitsim.market import (
    apply_cutoff_rule,
    check_stability,
    clear_market,
    clears,
    run_matching,
)
from admitsim.records import MatchOutcome, RankOrderedList

from conftest import mk_programs, mk_students, naive_blocking_pairs, proposal_da, rol


def test_two_students_two_programs_hand_checked():
    # Both want program 0 first; the higher score takes it, the other
    # falls to program 1. Each fills, so each cutoff is its single
    # admitted score.
    students = mk_students([10.0, 8.0])
    programs = mk_programs([1, 1])
    rols = [rol(0, 0, 1), rol(1, 0, 1)]
    out = run_matching(students, programs, rols)
    assert out.assignment == {0: 0, 1: 1}
    assert out.cutoffs == {0: 10.0, 1: 8.0}


def test_leftover_seats_mean_open_cutoff():
    students = mk_students([5.0, 3.0])
    programs = mk_programs([5])
    out = run_matching(students, programs, [rol(0, 0), rol(1, 0)])
    assert out.assignment == {0: 0, 1: 0}
    assert out.cutoffs[0] is None


def test_student_without_list_stays_unassigned():
    students = mk_students([7.0, 6.0])
    programs = mk_programs([1])
    out = run_matching(students, programs, [rol(1, 0)])
    assert out.assignment == {0: None, 1: 0}
    assert out.cutoffs[0] == 6.0


def test_equal_scores_break_by_ascending_id():
    students = mk_students([4.0, 4.0])
    programs = mk_programs([1])
    out = run_matching(students, programs, [rol(0, 0), rol(1, 0)])
    assert out.assignment == {0: 0, 1: None}


def test_full_first_choice_falls_through():
    # Highest score takes the single seat at 0; the next student's list
    # continues to program 1.
    students = mk_students([9.0, 8.0])
    programs = mk_programs([1, 3])
    out = run_matching(students, programs, [rol(0, 0), rol(1, 0, 1)])
    assert out.assignment == {0: 0, 1: 1}
    assert out.cutoffs == {0: 9.0, 1: None}


def test_clear_market_array_level():
    assigned, cutoffs = clear_market(
        [1.0, 2.0, 3.0], [[0], [0], [0]], [2]
    )
    # Students with scores 3 and 2 fill the two seats; score 1 is rejected.
    assert assigned.tolist() == [-1, 0, 0]
    assert cutoffs[0] == 2.0


def test_clear_market_open_is_nan():
    _, cutoffs = clear_market([1.0], [[0]], [2])
    assert math.isnan(cutoffs[0])


def test_clears_convention():
    assert clears(5.0, None)
    assert clears(5.0, 5.0)
    assert not clears(4.999, 5.0)


@pytest.mark.parametrize(
    "bad_rols, message",
    [
        ([rol(0, 0), rol(0, 1)], "two lists"),
        ([rol(5, 0)], "unknown student"),
        ([rol(0, 9)], "unknown program"),
    ],
)
def test_run_matching_validates_references(bad_rols, message):
    students = mk_students([1.0, 2.0])
    programs = mk_programs([1, 1])
    with pytest.raises(ValueError, match=message):
        run_matching(students, programs, bad_rols)


def test_duplicate_student_ids_rejected():
    students = mk_students([1.0, 2.0])
    students[1] = students[1].__class__(id=0, eligibility_score=2.0)
    with pytest.raises(ValueError, match="duplicate student id"):
        run_matching(students, mk_programs([1]), [])


def _random_instance(rng):
    n = int(rng.integers(1, 9))
    m = int(rng.integers(1, 5))
    scores = rng.uniform(-3, 12.2, size=n).round(3).tolist()
    caps = rng.integers(1, 4, size=m).tolist()
    rols = []
    for i in range(n):
        k = int(rng.integers(0, m + 1))
        rols.append(rng.permutation(m)[:k].tolist())
    return scores, rols, caps


def test_matches_proposal_da_on_random_instances():
    """The score-order walk must agree with textbook deferred acceptance."""
    rng = np.random.default_rng(7)
    for _ in range(300):
        scores, rols, caps = _random_instance(rng)
        assigned, cutoffs = clear_market(scores, rols, caps)
        want_assigned, want_cutoffs = proposal_da(scores, rols, caps)
        got = [None if a < 0 else int(a) for a in assigned.tolist()]
        assert got == want_assigned
        for j, want in enumerate(want_cutoffs):
            if want is None:
                assert math.isnan(cutoffs[j])
            else:
                assert cutoffs[j] == want


def test_no_blocking_pairs_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(200):
        scores, rols, caps = _random_instance(rng)
        assigned, _ = clear_market(scores, rols, caps)
        got = [None if a < 0 else int(a) for a in assigned.tolist()]
        assert naive_blocking_pairs(scores, rols, got, caps) == []


def test_check_stability_flags_a_planted_block():
    # Hand-build an outcome where student 0 (score 9) holds nothing while
    # program 0's cutoff is 5: she blocks with it.
    students = mk_students([9.0, 5.0])
    programs = mk_programs([1])
    rols = [rol(0, 0), rol(1, 0)]
    bad = MatchOutcome(assignment={0: None, 1: 0}, cutoffs={0: 5.0})
    pairs = check_stability(students, programs, rols, bad)
    assert [(p.student_id, p.program_id) for p in pairs] == [(0, 0)]


def test_check_stability_passes_true_outcome():
    students = mk_students([9.0, 5.0])
    programs = mk_programs([1])
    rols = [rol(0, 0), rol(1, 0)]
    out = run_matching(students, programs, rols)
    assert check_stability(students, programs, rols, out) == []


def test_check_stability_open_program_with_spare_seat_blocks():
    students = mk_students([2.0])
    programs = mk_programs([1])
    bad = MatchOutcome(assignment={0: None}, cutoffs={0: None})
    pairs = check_stability(students, programs, [rol(0, 0)], bad)
    assert pairs and pairs[0].program_id == 0


def test_outcome_must_cover_instance():
    students = mk_students([2.0])
    programs = mk_programs([1])
    alien = MatchOutcome(assignment={7: None}, cutoffs={0: None})
    with pytest.raises(ValueError, match="does not cover"):
        check_stability(students, programs, [], alien)


def test_cutoff_rule_reproduces_assignment():
    """Feasibility applied to an outcome's own cutoffs is the assignment."""
    rng = np.random.default_rng(23)
    for _ in range(200):
        scores, rol_idx, caps = _random_instance(rng)
        students = mk_students(scores)
        programs = mk_programs(caps)
        rols = [
            RankOrderedList(i, tuple(int(p) for p in entries))
            for i, entries in enumerate(rol_idx)
            if entries
        ]
        out = run_matching(students, programs, rols)
        redo = apply_cutoff_rule(students, rols, out.cutoffs)
        assert redo == out.assignment


def test_loads_recomputed_from_assignment():
    out = MatchOutcome(assignment={0: 1, 1: 1, 2: None}, cutoffs={0: None, 1: 3.0})
    assert out.loads() == {0: 0, 1: 2}
