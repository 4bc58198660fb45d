"""CSV and JSON interchange for every pipeline artifact.

Cutoff cells spell Open as the literal ``OPEN``; unassigned students get an
empty program cell. Floats are written at full repr precision so reruns
with the same config produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .cutoffs import CutoffSampleTable
from .population import KinkCurve
from .records import (
    BeliefRecord,
    MatchOutcome,
    OmissionVerdict,
    ProgramRecord,
    RankOrderedList,
    StudentRecord,
    TruthFlags,
)
from .regression import ModelFit

OPEN_CELL = "OPEN"

STUDENT_COLUMNS = [
    "id",
    "eligibility_score",
    "middle_school_gpa",
    "age",
    "female",
    "parents_income_pct",
    "parents_edu_years",
    "confidence",
    "risk_willingness",
    "postpone_willing",
    "rejection_is_failure",
    "difficult_to_comprehend",
    "understands_sp",
    "wave2021",
    "loc_x",
    "loc_y",
]

PROGRAM_COLUMNS = [
    "id",
    "capacity",
    "loc_x",
    "loc_y",
    "peer_quality",
    "same_gender_share_female",
    "peer_parents_income",
]


def _cutoff_cell(c: float | None) -> str:
    return OPEN_CELL if c is None else repr(float(c))


def _cell_cutoff(v) -> float | None:
    if isinstance(v, str) and v.strip().upper() == OPEN_CELL:
        return None
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return None
    return float(v)


def write_students(path: Path | str, students: list[StudentRecord]) -> None:
    frame = pd.DataFrame([{c: getattr(s, c) for c in STUDENT_COLUMNS} for s in students])
    frame.to_csv(path, index=False)


def read_students(path: Path | str) -> list[StudentRecord]:
    frame = pd.read_csv(path)
    missing = {"id", "eligibility_score"} - set(frame.columns)
    if missing:
        raise ValueError(f"students file lacks columns {sorted(missing)}")
    out = []
    for row in frame.to_dict("records"):
        kwargs = {c: row[c] for c in STUDENT_COLUMNS if c in row}
        kwargs["id"] = int(kwargs["id"])
        for flag in (
            "female",
            "postpone_willing",
            "rejection_is_failure",
            "difficult_to_comprehend",
            "understands_sp",
            "wave2021",
        ):
            if flag in kwargs:
                kwargs[flag] = int(kwargs[flag])
        out.append(StudentRecord(**kwargs))
    return out


def write_programs(path: Path | str, programs: list[ProgramRecord]) -> None:
    frame = pd.DataFrame([{c: getattr(p, c) for c in PROGRAM_COLUMNS} for p in programs])
    frame.to_csv(path, index=False)


def read_programs(path: Path | str) -> list[ProgramRecord]:
    frame = pd.read_csv(path)
    missing = {"id", "capacity"} - set(frame.columns)
    if missing:
        raise ValueError(f"programs file lacks columns {sorted(missing)}")
    out = []
    for row in frame.to_dict("records"):
        kwargs = {c: row[c] for c in PROGRAM_COLUMNS if c in row}
        kwargs["id"] = int(kwargs["id"])
        kwargs["capacity"] = int(kwargs["capacity"])
        out.append(ProgramRecord(**kwargs))
    return out


def write_rols(path: Path | str, rols: list[RankOrderedList]) -> None:
    rows = [
        {"student_id": r.student_id, "rank": k + 1, "program_id": pid}
        for r in rols
        for k, pid in enumerate(r.entries)
    ]
    pd.DataFrame(rows, columns=["student_id", "rank", "program_id"]).to_csv(path, index=False)


def read_rols(path: Path | str) -> list[RankOrderedList]:
    frame = pd.read_csv(path)
    need = {"student_id", "rank", "program_id"}
    if not need <= set(frame.columns):
        raise ValueError(f"rank-list file lacks columns {sorted(need - set(frame.columns))}")
    out = []
    for sid, grp in frame.sort_values(["student_id", "rank"]).groupby("student_id", sort=True):
        ranks = grp["rank"].tolist()
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"student {sid}: ranks must be 1..k without gaps")
        out.append(RankOrderedList(int(sid), tuple(int(p) for p in grp["program_id"])))
    return out


def write_assignment(path: Path | str, assignment: dict[int, int | None]) -> None:
    rows = [
        {"student_id": sid, "program_id": "" if pid is None else pid}
        for sid, pid in sorted(assignment.items())
    ]
    pd.DataFrame(rows, columns=["student_id", "program_id"]).to_csv(path, index=False)


def read_assignment(path: Path | str) -> dict[int, int | None]:
    frame = pd.read_csv(path)
    out: dict[int, int | None] = {}
    for row in frame.to_dict("records"):
        pid = row["program_id"]
        out[int(row["student_id"])] = None if pd.isna(pid) else int(pid)
    return out


def write_cutoffs(path: Path | str, cutoffs: dict[int, float | None]) -> None:
    rows = [
        {"program_id": pid, "cutoff": _cutoff_cell(c)} for pid, c in sorted(cutoffs.items())
    ]
    pd.DataFrame(rows, columns=["program_id", "cutoff"]).to_csv(path, index=False)


def read_cutoffs(path: Path | str) -> dict[int, float | None]:
    frame = pd.read_csv(path, dtype={"cutoff": str})
    return {int(r["program_id"]): _cell_cutoff(r["cutoff"]) for r in frame.to_dict("records")}


def write_outcome(dirpath: Path | str, outcome: MatchOutcome) -> tuple[Path, Path]:
    d = Path(dirpath)
    a, c = d / "outcome.csv", d / "cutoffs.csv"
    write_assignment(a, outcome.assignment)
    write_cutoffs(c, outcome.cutoffs)
    return a, c


def write_truth_flags(path: Path | str, flags: list[TruthFlags]) -> None:
    rows = [
        {
            "student_id": f.student_id,
            "non_truthful": f.reports_non_truthfully,
            "omits_top": f.omits_most_preferred,
            "true_top_program": f.true_top_program,
        }
        for f in flags
    ]
    pd.DataFrame(rows).to_csv(path, index=False)


def read_truth_flags(path: Path | str) -> list[TruthFlags]:
    frame = pd.read_csv(path)
    return [
        TruthFlags(
            student_id=int(r["student_id"]),
            reports_non_truthfully=int(r["non_truthful"]),
            omits_most_preferred=int(r["omits_top"]),
            true_top_program=int(r["true_top_program"]),
        )
        for r in frame.to_dict("records")
    ]


def write_cutoff_samples(path: Path | str, table: CutoffSampleTable) -> None:
    rows = []
    for r in range(table.replications):
        for j, pid in enumerate(table.program_ids):
            v = table.samples[r, j]
            rows.append(
                {
                    "program_id": pid,
                    "replication": r,
                    "cutoff": OPEN_CELL if np.isnan(v) else repr(float(v)),
                }
            )
    pd.DataFrame(rows, columns=["program_id", "replication", "cutoff"]).to_csv(path, index=False)


def read_cutoff_samples(path: Path | str) -> CutoffSampleTable:
    frame = pd.read_csv(path, dtype={"cutoff": str})
    pids = sorted(frame["program_id"].unique())
    reps = int(frame["replication"].max()) + 1
    samples = np.full((reps, len(pids)), np.nan)
    pidx = {pid: j for j, pid in enumerate(pids)}
    for row in frame.to_dict("records"):
        c = _cell_cutoff(row["cutoff"])
        if c is not None:
            samples[int(row["replication"]), pidx[row["program_id"]]] = c
    return CutoffSampleTable(
        program_ids=[int(p) for p in pids],
        samples=samples,
        seed_ledger=[],
        n_students=0,
    )


def write_rational_probs(
    path: Path | str, student_ids, program_ids, matrix: np.ndarray
) -> None:
    n, m = matrix.shape
    frame = pd.DataFrame(
        {
            "student_id": np.repeat(student_ids, m),
            "program_id": np.tile(program_ids, n),
            "p": matrix.ravel(),
        }
    )
    frame.to_csv(path, index=False)


def read_rational_probs(path: Path | str) -> pd.DataFrame:
    return pd.read_csv(path)


def write_belief_records(path: Path | str, records: list[BeliefRecord]) -> None:
    rows = [
        {
            "student_id": r.student_id,
            "program_id": r.program_id,
            "subjective": r.subjective,
            "subjective_alt": "" if r.subjective_alt is None else r.subjective_alt,
            "rational": r.rational,
            "error": r.error,
            "label": r.label,
        }
        for r in records
    ]
    pd.DataFrame(rows).to_csv(path, index=False)


def write_verdicts(path: Path | str, verdicts: list[OmissionVerdict]) -> None:
    rows = [
        {
            "student_id": v.student_id,
            "omitted_program_id": v.program_id,
            "payoff_relevant": int(v.payoff_relevant),
            "realized_cutoff": _cutoff_cell(v.realized_cutoff),
        }
        for v in verdicts
    ]
    pd.DataFrame(
        rows, columns=["student_id", "omitted_program_id", "payoff_relevant", "realized_cutoff"]
    ).to_csv(path, index=False)


def write_kink_curve(path: Path | str, curve: KinkCurve) -> None:
    frame = pd.DataFrame(
        {
            "bin_lo": curve.edges[:-1],
            "bin_hi": curve.edges[1:],
            "center": curve.centers,
            "n_pairs": curve.counts.astype(int),
            "application_rate": curve.rate,
        }
    )
    frame.to_csv(path, index=False)


def write_fits_json(path: Path | str, fits: list[ModelFit]) -> None:
    payload = {fit.model_id: fit.to_dict() for fit in fits}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def write_coefficients_csv(path: Path | str, fits: list[ModelFit]) -> None:
    frames = [fit.coefficient_frame() for fit in fits]
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)
