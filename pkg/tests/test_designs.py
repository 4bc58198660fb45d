"""Survey regression designs: columns, subsamples, belief encodings."""

import numpy as np
import pandas as pd
import pytest

from admitsim.regression import (
    BACKGROUND,
    PERSONALITY,
    build_designs,
    ols_fit,
)


def _frame(n=240, seed=7):
    rng = np.random.default_rng(seed)
    belief = rng.integers(0, 21, size=n) / 20.0
    alt = rng.integers(0, 21, size=n) / 20.0
    omits = (rng.random(n) < 0.3).astype(int)
    err = belief - rng.integers(0, 21, size=n) / 20.0
    return pd.DataFrame(
        {
            "student_id": np.arange(n),
            "eligibility_score": rng.normal(8.0, 2.0, size=n),
            "middle_school_gpa": rng.normal(7.0, 1.5, size=n),
            "age": rng.normal(20.0, 1.0, size=n),
            "female": rng.integers(0, 2, size=n),
            "parents_income_pct": rng.random(n),
            "parents_edu_years": rng.normal(14, 2, size=n),
            "confidence": rng.integers(0, 11, size=n).astype(float),
            "risk_willingness": rng.integers(0, 11, size=n).astype(float),
            "postpone_willing": rng.integers(0, 2, size=n),
            "rejection_is_failure": rng.integers(0, 2, size=n),
            "difficult_to_comprehend": rng.integers(0, 2, size=n),
            "understands_sp": rng.integers(0, 2, size=n),
            "wave2021": rng.integers(0, 2, size=n),
            "non_truthful": np.maximum(omits, (rng.random(n) < 0.1).astype(int)),
            "omits_top": omits,
            "true_top_program": rng.integers(0, 5, size=n),
            "payoff_relevant": (omits & (rng.random(n) < 0.2)).astype(int),
            "belief": belief,
            "belief_alt": alt,
            "belief_combined": belief + (1 - belief) * alt,
            "belief_error": err,
            "pessimistic": (err < 0).astype(int),
            "optimistic": (err > 0).astype(int),
        }
    )


def test_belief_only_columns():
    d = build_designs(_frame(), "belief_only")
    assert d.names == ["const", "belief", "wave2021"]
    assert d.model_id == "belief_only"


def test_full_columns_in_order():
    d = build_designs(_frame(), "full")
    want = ["const", "belief", *BACKGROUND, *PERSONALITY, "wave2021"]
    assert d.names == want
    assert d.X.shape == (240, len(want))


def test_full_z_scores_continuous_but_not_indicators():
    frame = _frame()
    d = build_designs(frame, "full")
    age = d.X[:, d.names.index("age")]
    female = d.X[:, d.names.index("female")]
    assert age.mean() == pytest.approx(0.0, abs=1e-10)
    assert age.std(ddof=1) == pytest.approx(1.0, rel=1e-10)
    assert set(np.unique(female)) <= {0.0, 1.0}
    # Belief stays in natural units.
    np.testing.assert_array_equal(
        d.X[:, d.names.index("belief")], frame["belief"].to_numpy()
    )


def test_pessimism_runs_on_omitter_subsample():
    frame = _frame()
    d = build_designs(frame, "pessimism")
    assert d.X.shape[0] == int(frame["omits_top"].sum())
    assert d.names[:3] == ["const", "pessimistic", "optimistic"]
    assert "belief" not in d.names
    # Outcome is payoff relevance, not general truthfulness.
    omitters = frame[frame["omits_top"] == 1]
    np.testing.assert_array_equal(d.y, omitters["payoff_relevant"].to_numpy(float))


def test_interactions_add_belief_products():
    d = build_designs(_frame(), "interactions")
    inter = [n for n in d.names if n.startswith("belief_x_")]
    assert len(inter) == len(BACKGROUND) + len(PERSONALITY)
    assert "belief_x_confidence" in inter


def test_comprehension_spec_swaps_wave_for_understanding():
    frame = _frame()
    d = build_designs(frame, "comprehension_2021")
    assert "wave2021" not in d.names
    assert d.names[-1] == "understands_sp"
    assert d.X.shape[0] == int((frame["wave2021"] == 1).sum())


def test_combined_belief_switch():
    d = build_designs(_frame(), "full", combined_belief=True)
    assert "belief_combined" in d.names
    assert "belief" not in d.names


def test_categorical_belief_encoding():
    d = build_designs(_frame(), "belief_only", belief_encoding="categorical")
    bins = [n for n in d.names if n.startswith("belief_bin_")]
    # Five bins, lowest dropped as the reference.
    assert len(bins) == 4
    assert "belief" not in d.names


def test_default_outcomes_per_spec():
    frame = _frame()
    np.testing.assert_array_equal(
        build_designs(frame, "full").y, frame["omits_top"].to_numpy(float)
    )
    later = frame[frame["wave2021"] == 1]
    np.testing.assert_array_equal(
        build_designs(frame, "comprehension_2021").y,
        later["non_truthful"].to_numpy(float),
    )


def test_custom_outcome_override():
    d = build_designs(_frame(), "full", outcome="non_truthful")
    frame = _frame()
    np.testing.assert_array_equal(d.y, frame["non_truthful"].to_numpy(float))


def test_fits_run_on_every_spec():
    frame = _frame()
    for spec in ("belief_only", "full", "pessimism", "interactions",
                 "comprehension_2021"):
        fit = ols_fit(build_designs(frame, spec))
        assert fit.nobs > 0


def test_unknown_spec_rejected():
    with pytest.raises(ValueError, match="unknown design spec"):
        build_designs(_frame(), "made_up")


def test_missing_columns_reported():
    frame = _frame().drop(columns=["confidence"])
    with pytest.raises(ValueError, match="confidence"):
        build_designs(frame, "full")


def test_empty_subsample_rejected():
    frame = _frame()
    frame["omits_top"] = 0
    with pytest.raises(ValueError, match="no usable rows"):
        build_designs(frame, "pessimism")


def test_model_id_override():
    d = build_designs(_frame(), "full", model_id="renamed")
    assert d.model_id == "renamed"
