"""End-to-end experiment pipeline and its manifest.

Stages communicate through CSV files in one output directory, so each can
also be run alone from the command line against artifacts produced
earlier. Order: generate -> match -> cutoffs -> beliefs -> estimate. A
failing stage aborts the run with its name while keeping everything
already written.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from pathlib import Path

import numpy as np
import pandas as pd

from . import io as aio
from .beliefs import (
    OPTIMISTIC,
    PESSIMISTIC,
    build_belief_records,
    combined_belief,
    detect_payoff_relevant_omission,
    outcome_rates,
)
from .clogit import MODES, fit_demand
from .config import ExperimentConfig
from .cutoffs import rational_prob_matrix, simulate_cutoffs
from .market import run_matching
from .population import (
    anticipated_cutoffs,
    application_kink_curve,
    generate_population,
    generate_reports,
    kink_break_test,
    max_slope_change_bin,
    subjective_beliefs,
    utilities_for,
)
from .records import StudentRecord, TruthFlags
from .regression import ols_fit, wls_fit, build_designs


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


LINEAR_SPECS = ("belief_only", "full", "pessimism", "interactions", "comprehension_2021")


def stage_generate(cfg: ExperimentConfig, out: Path) -> None:
    """Population, preferences, beliefs, submitted lists, kink curve."""
    students, programs = generate_population(cfg)
    utilities = utilities_for(cfg, students, programs)
    prior = anticipated_cutoffs(
        students, programs, utilities, behavior=cfg.behavior, seed=cfg.seed
    )
    beliefs = subjective_beliefs(students, programs, prior, cfg.behavior, cfg.seed)
    rols, flags = generate_reports(students, utilities, beliefs, cfg.behavior)

    aio.write_students(out / "students.csv", students)
    aio.write_programs(out / "programs.csv", programs)
    aio.write_rols(out / "rols.csv", rols)
    aio.write_truth_flags(out / "truth_flags.csv", flags)
    aio.write_cutoffs(out / "anticipated_cutoffs.csv", prior)
    aio.write_rational_probs(
        out / "subjective_beliefs.csv",
        [s.id for s in students],
        [p.id for p in programs],
        beliefs.matrix,
    )
    pd.DataFrame(
        {"student_id": [s.id for s in students], "p_hat_alt": beliefs.alt}
    ).to_csv(out / "alt_track_beliefs.csv", index=False)
    curve = application_kink_curve(
        rols,
        students,
        prior,
        cfg.analysis.kink_bins,
        x_range=cfg.analysis.kink_range,
        min_cutoff=cfg.analysis.kink_min_prior_cutoff,
    )
    aio.write_kink_curve(out / "kink_curve.csv", curve)


def stage_match(cfg: ExperimentConfig, out: Path) -> None:
    """Clear the market on the submitted lists."""
    students = aio.read_students(out / "students.csv")
    programs = aio.read_programs(out / "programs.csv")
    rols = aio.read_rols(out / "rols.csv")
    outcome = run_matching(students, programs, rols)
    aio.write_outcome(out, outcome)


def stage_cutoffs(cfg: ExperimentConfig, out: Path) -> None:
    """Bootstrap the cutoff distribution and rational admission chances."""
    students = aio.read_students(out / "students.csv")
    programs = aio.read_programs(out / "programs.csv")
    rols = aio.read_rols(out / "rols.csv")
    table = simulate_cutoffs(students, programs, rols, cfg.replications, cfg.seed)
    aio.write_cutoff_samples(out / "cutoff_samples.csv", table)
    probs = rational_prob_matrix([s.eligibility_score for s in students], table)
    aio.write_rational_probs(
        out / "rational_probs.csv",
        [s.id for s in students],
        table.program_ids,
        probs,
    )


def _rational_top(students, flags, probs_frame: pd.DataFrame) -> np.ndarray:
    lookup = {
        (int(r["student_id"]), int(r["program_id"])): float(r["p"])
        for r in probs_frame.to_dict("records")
    }
    return np.array([lookup[(s.id, f.true_top_program)] for s, f in zip(students, flags)])


def _subjective_top(students, flags, beliefs_frame: pd.DataFrame) -> np.ndarray:
    lookup = {
        (int(r["student_id"]), int(r["program_id"])): float(r["p"])
        for r in beliefs_frame.rename(columns={"p_hat": "p"}).to_dict("records")
    }
    return np.array([lookup[(s.id, f.true_top_program)] for s, f in zip(students, flags)])


def stage_beliefs(cfg: ExperimentConfig, out: Path) -> None:
    """Belief errors at the favourite program and omission verdicts."""
    students = aio.read_students(out / "students.csv")
    flags = aio.read_truth_flags(out / "truth_flags.csv")
    realized = aio.read_cutoffs(out / "cutoffs.csv")
    beliefs_frame = pd.read_csv(out / "subjective_beliefs.csv")
    probs_frame = pd.read_csv(out / "rational_probs.csv")
    alt = pd.read_csv(out / "alt_track_beliefs.csv")["p_hat_alt"].to_numpy()

    subj = _subjective_top(students, flags, beliefs_frame)
    rat = _rational_top(students, flags, probs_frame)
    records = build_belief_records(
        students, flags, subj, rat, band=cfg.analysis.pessimism_band, subjective_alt=alt
    )
    aio.write_belief_records(out / "belief_records.csv", records)

    verdicts = [
        detect_payoff_relevant_omission(s, f, realized)
        for s, f in zip(students, flags)
        if f.omits_most_preferred
    ]
    aio.write_verdicts(out / "omission_verdicts.csv", verdicts)
    rates = outcome_rates(flags, verdicts)
    (out / "outcome_rates.json").write_text(json.dumps(rates.to_dict(), indent=2))


def build_analysis_frame(
    students: list[StudentRecord],
    flags: list[TruthFlags],
    belief_top: np.ndarray,
    alt_top: np.ndarray,
    rational_top: np.ndarray,
    band: float,
    verdict_by_student: dict[int, bool],
) -> pd.DataFrame:
    """Per-student table feeding the survey regressions."""
    rows = []
    for i, (s, f) in enumerate(zip(students, flags)):
        err = float(belief_top[i] - rational_top[i])
        rows.append(
            {
                "student_id": s.id,
                "eligibility_score": s.eligibility_score,
                "middle_school_gpa": s.middle_school_gpa,
                "age": s.age,
                "female": s.female,
                "parents_income_pct": s.parents_income_pct,
                "parents_edu_years": s.parents_edu_years,
                "confidence": s.confidence,
                "risk_willingness": s.risk_willingness,
                "postpone_willing": s.postpone_willing,
                "rejection_is_failure": s.rejection_is_failure,
                "difficult_to_comprehend": s.difficult_to_comprehend,
                "understands_sp": s.understands_sp,
                "wave2021": s.wave2021,
                "non_truthful": f.reports_non_truthfully,
                "omits_top": f.omits_most_preferred,
                "true_top_program": f.true_top_program,
                "payoff_relevant": int(verdict_by_student.get(s.id, False)),
                "belief": float(belief_top[i]),
                "belief_alt": float(alt_top[i]),
                "belief_combined": combined_belief(float(belief_top[i]), float(alt_top[i])),
                "belief_error": err,
                "pessimistic": int(err < -band),
                "optimistic": int(err > band),
            }
        )
    return pd.DataFrame(rows)


def analysis_frame_from_dir(cfg: ExperimentConfig, out: Path) -> pd.DataFrame:
    students = aio.read_students(out / "students.csv")
    flags = aio.read_truth_flags(out / "truth_flags.csv")
    beliefs_frame = pd.read_csv(out / "subjective_beliefs.csv")
    probs_frame = pd.read_csv(out / "rational_probs.csv")
    alt = pd.read_csv(out / "alt_track_beliefs.csv")["p_hat_alt"].to_numpy()
    verdicts = pd.read_csv(out / "omission_verdicts.csv")
    verdict_by_student = {
        int(r["student_id"]): bool(r["payoff_relevant"])
        for r in verdicts.to_dict("records")
    }
    subj = _subjective_top(students, flags, beliefs_frame)
    rat = _rational_top(students, flags, probs_frame)
    return build_analysis_frame(
        students,
        flags,
        subj,
        alt,
        rat,
        cfg.analysis.pessimism_band,
        verdict_by_student,
    )


def stage_estimate(cfg: ExperimentConfig, out: Path, mode: str | None = None) -> None:
    """Survey regressions plus demand fits; writes fits and comparisons."""
    frame = analysis_frame_from_dir(cfg, out)
    fits = []
    for spec in cfg.models:
        if spec not in LINEAR_SPECS:
            continue
        design = build_designs(frame, spec)
        fits.append(wls_fit(design) if design.weights is not None else ols_fit(design))
        if spec == "comprehension_2021":
            design_c = build_designs(
                frame, spec, combined_belief=True, model_id="comprehension_2021_combined"
            )
            fits.append(ols_fit(design_c))

    students = aio.read_students(out / "students.csv")
    programs = aio.read_programs(out / "programs.csv")
    rols = aio.read_rols(out / "rols.csv")
    flags = aio.read_truth_flags(out / "truth_flags.csv")
    realized = aio.read_cutoffs(out / "cutoffs.csv")
    wanted = [m for m in MODES if f"demand_{m}" in cfg.models]
    if mode is not None:
        wanted = [mode]
    demand_fits = {}
    for m in wanted:
        fit = fit_demand(students, programs, flags, rols, m, realized_cutoffs=realized)
        demand_fits[m] = fit
        fits.append(fit)

    aio.write_fits_json(out / "fits.json", fits)
    aio.write_coefficients_csv(out / "coefficients.csv", fits)
    if demand_fits:
        _write_demand_comparison(cfg, out, demand_fits)


def _write_demand_comparison(cfg, out: Path, demand_fits) -> None:
    """Side-by-side taste and intercept estimates across sampling modes."""
    truth = {
        "peer_quality": cfg.utility.taste_peer_quality,
        "same_gender_share": cfg.utility.taste_same_gender,
        "peer_parents_income": cfg.utility.taste_peer_income,
    }
    terms: list[str] = []
    for fit in demand_fits.values():
        for name in fit.names:
            if name not in terms:
                terms.append(name)
    rows = []
    for term in terms:
        row: dict = {"term": term, "truth": truth.get(term, np.nan)}
        for m, fit in demand_fits.items():
            if term in fit.names:
                row[f"{m}_estimate"] = fit[term]
                row[f"{m}_se"] = fit.se_of(term)
            else:
                row[f"{m}_estimate"] = np.nan
                row[f"{m}_se"] = np.nan
        rows.append(row)
    pd.DataFrame(rows).to_csv(out / "demand_comparison.csv", index=False)


STAGES = {
    "generate": stage_generate,
    "match": stage_match,
    "cutoffs": stage_cutoffs,
    "beliefs": stage_beliefs,
    "estimate": stage_estimate,
}


def run_all(cfg: ExperimentConfig, out: Path | str) -> dict:
    """Run every stage in order and write the manifest; returns it."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    for name in ("generate", "match", "cutoffs", "beliefs", "estimate"):
        t0 = time.perf_counter()
        try:
            STAGES[name](cfg, out)
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
    manifest = write_manifest(cfg, out, timings)
    return manifest


def _summary(cfg: ExperimentConfig, out: Path) -> dict:
    summary: dict = {}
    rates_file = out / "outcome_rates.json"
    if rates_file.exists():
        summary["outcome_rates"] = json.loads(rates_file.read_text())
    kink_file = out / "kink_curve.csv"
    if kink_file.exists():
        frame = pd.read_csv(kink_file)
        from .population import KinkCurve  # local import to avoid cycle at module load

        curve = KinkCurve(
            edges=np.append(frame["bin_lo"].to_numpy(), frame["bin_hi"].iloc[-1]),
            centers=frame["center"].to_numpy(),
            rate=frame["application_rate"].to_numpy(),
            counts=frame["n_pairs"].to_numpy(float),
        )
        try:
            test = kink_break_test(curve, seed=cfg.seed)
            summary["kink"] = {
                "zero_bin": curve.zero_bin,
                "max_slope_change_bin": max_slope_change_bin(curve),
                "break_statistic": test.statistic,
                "break_p_value": test.p_value,
            }
        except ValueError:
            summary["kink"] = {"error": "curve too sparse"}
    return summary


def write_manifest(cfg: ExperimentConfig, out: Path, timings: dict[str, float]) -> dict:
    """Config hash, artifact checksums, versions, timings, and summary."""
    files = {}
    for f in sorted(out.glob("*")):
        if f.name == "manifest.json" or not f.is_file():
            continue
        digest = hashlib.sha256(f.read_bytes()).hexdigest()
        files[f.name] = {"bytes": f.stat().st_size, "sha256": digest}
    import importlib.metadata as md

    def _ver(pkg: str) -> str:
        try:
            return md.version(pkg)
        except md.PackageNotFoundError:
            return "unknown"

    manifest = {
        "config_hash": cfg.hash(),
        "preset": cfg.preset,
        "seed": cfg.seed,
        "replications": cfg.replications,
        "files": files,
        "versions": {
            "python": platform.python_version(),
            "admitsim": _ver("admitsim"),
            "numpy": _ver("numpy"),
            "scipy": _ver("scipy"),
            "pandas": _ver("pandas"),
        },
        "timings_seconds": {k: round(v, 4) for k, v in timings.items()},
        "summary": _summary(cfg, out),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
