"""Linear probability models with robust covariance, plus design builders.

Fitting is ordinary or weighted least squares through a single QR path, so
unit weights reproduce the unweighted fit bit for bit. Covariance is the
HC1 sandwich (its weighted analogue under WLS). Design builders assemble
the survey regressions: z-scored continuous covariates (sample sd, ddof 1),
raw indicators, and the belief term in natural [0, 1] units so its
coefficient reads as the effect of moving from certain rejection to certain
admission.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.special import stdtr


class RankDeficientError(ValueError):
    """Design matrix is rank deficient; names the offending columns."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__(f"design matrix is rank deficient in columns: {columns}")


@dataclass
class Design:
    """A ready-to-fit regression: outcome, matrix, names, optional weights."""

    y: np.ndarray
    X: np.ndarray
    names: list[str]
    weights: np.ndarray | None = None
    model_id: str = "model"

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be 2-D with one row per outcome")
        if self.X.shape[1] != len(self.names):
            raise ValueError("one name per column required")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.y.shape:
                raise ValueError("weights must align with y")
            if np.any(self.weights <= 0):
                raise ValueError("weights must be strictly positive")


@dataclass
class ModelFit:
    """Estimates with a sandwich covariance; se is sqrt(diag(cov))."""

    model_id: str
    names: list[str]
    params: np.ndarray
    cov: np.ndarray
    nobs: int
    df_resid: int
    r_squared: float | None = None
    loglik: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def zvalues(self) -> np.ndarray:
        return self.params / self.se

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def z_of(self, name: str) -> float:
        return float(self.zvalues[self.names.index(name)])

    def to_dict(self) -> dict:
        se = self.se
        terms = {
            name: {
                "estimate": float(b),
                "se": float(s),
                "z": float(b / s) if s > 0 else float("nan"),
                "ci_lo": float(b - 1.96 * s),
                "ci_hi": float(b + 1.96 * s),
            }
            for name, b, s in zip(self.names, self.params, se)
        }
        out = {
            "model_id": self.model_id,
            "n": self.nobs,
            "terms": terms,
            "diagnostics": self.diagnostics,
        }
        if self.r_squared is not None:
            out["r_squared"] = self.r_squared
        if self.loglik is not None:
            out["loglik"] = self.loglik
        return out

    def coefficient_frame(self) -> pd.DataFrame:
        se = self.se
        return pd.DataFrame(
            {
                "term": self.names,
                "estimate": self.params,
                "se": se,
                "ci_lo": self.params - 1.96 * se,
                "ci_hi": self.params + 1.96 * se,
                "model_id": self.model_id,
            }
        )


def _check_rank(Xw: np.ndarray, names: list[str]) -> None:
    _, r, piv = scipy.linalg.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        raise RankDeficientError(list(names))
    tol = diag[0] * max(Xw.shape) * np.finfo(float).eps
    rank = int((diag > tol).sum())
    if rank < Xw.shape[1]:
        bad = [names[j] for j in sorted(piv[rank:])]
        raise RankDeficientError(bad)


def wls_fit(design: Design) -> ModelFit:
    """Weighted least squares with an HC1-style sandwich covariance.

    With unit (or absent) weights this is exactly `ols_fit`.
    """
    y, X = design.y, design.X
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more rows ({n}) than columns ({k})")
    w = np.ones(n) if design.weights is None else design.weights
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    yw = y * sw
    _check_rank(Xw, design.names)
    params, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = y - X @ params
    bread = np.linalg.inv(Xw.T @ Xw)
    meat = (X * (w * resid)[:, None]).T @ (X * (w * resid)[:, None])
    cov = bread @ meat @ bread * (n / (n - k))
    ybar = np.average(y, weights=w)
    tss = float(w @ (y - ybar) ** 2)
    rss = float(w @ resid**2)
    r2 = 1.0 - rss / tss if tss > 0 else float("nan")
    return ModelFit(
        model_id=design.model_id,
        names=list(design.names),
        params=params,
        cov=cov,
        nobs=n,
        df_resid=n - k,
        r_squared=r2,
        diagnostics={"weighted": design.weights is not None},
    )


def ols_fit(design: Design) -> ModelFit:
    """Least squares with HC1 robust covariance."""
    if design.weights is not None:
        raise ValueError("ols_fit takes an unweighted design; use wls_fit")
    return wls_fit(design)


def zscore(values) -> np.ndarray:
    """Standardize by sample mean and sd (ddof 1)."""
    arr = np.asarray(values, dtype=float)
    sd = arr.std(ddof=1)
    if sd == 0:
        raise ValueError("cannot z-score a constant column")
    return (arr - arr.mean()) / sd


@dataclass(frozen=True)
class WelchResult:
    statistic: float
    df: float
    p_value: float


def welch_t_test(a, b) -> WelchResult:
    """Unequal-variance two-sample t test.

    Degrees of freedom follow the usual variance-ratio approximation; two
    degenerate samples with equal means count as perfectly compatible
    (p = 1) rather than undefined.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if diff == 0.0:
            return WelchResult(statistic=0.0, df=float(na + nb - 2), p_value=1.0)
        return WelchResult(statistic=float(np.sign(diff) * np.inf), df=float(na + nb - 2), p_value=0.0)
    t = diff / np.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return WelchResult(statistic=float(t), df=float(df), p_value=p)


# ---------------------------------------------------------------------------
# survey regression designs
# ---------------------------------------------------------------------------

#: background characteristics (continuous ones get z-scored)
BACKGROUND = (
    "eligibility_score",
    "middle_school_gpa",
    "age",
    "female",
    "parents_income_pct",
    "parents_edu_years",
)
#: self-assessed personality block
PERSONALITY = (
    "confidence",
    "risk_willingness",
    "postpone_willing",
    "rejection_is_failure",
    "difficult_to_comprehend",
)
_INDICATORS = {
    "female",
    "postpone_willing",
    "rejection_is_failure",
    "difficult_to_comprehend",
    "understands_sp",
    "wave2021",
    "pessimistic",
    "optimistic",
}

DESIGN_SPECS = ("belief_only", "full", "pessimism", "interactions", "comprehension_2021")

_BELIEF_BIN_EDGES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def _characteristic_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    col = frame[name].to_numpy(dtype=float)
    return col if name in _INDICATORS else zscore(col)


def _belief_columns(frame, combined: bool, encoding: str):
    source = "belief_combined" if combined else "belief"
    vals = frame[source].to_numpy(dtype=float)
    if encoding == "continuous":
        return [vals], [source]
    if encoding != "categorical":
        raise ValueError(f"unknown belief encoding {encoding!r}")
    cols, names = [], []
    edges = _BELIEF_BIN_EDGES
    for lo, hi in zip(edges[1:-1], edges[2:]):
        inside = (vals > lo) & (vals <= hi)
        cols.append(inside.astype(float))
        names.append(f"{source}_bin_{lo:.1f}_{hi:.1f}")
    return cols, names


def build_designs(
    frame: pd.DataFrame,
    spec: str,
    outcome: str | None = None,
    combined_belief: bool = False,
    belief_encoding: str = "continuous",
    program_fe: bool = False,
    model_id: str | None = None,
) -> Design:
    """Assemble one of the survey regressions from an analysis table.

    Specs: ``belief_only`` (belief + wave), ``full`` (belief, background,
    personality, wave), ``pessimism`` (belief-error labels on the omitter
    subsample, payoff relevance as outcome), ``interactions`` (full plus
    belief x characteristic products on the z scale), and
    ``comprehension_2021`` (full on the later wave only, with the
    understands-the-mechanism indicator instead of the wave dummy).
    The default outcome is ``omits_top`` for the belief designs,
    ``non_truthful`` for the comprehension design, and ``payoff_relevant``
    for the pessimism design; ``outcome`` overrides all three.
    Rows with missing values in the used columns are dropped.
    """
    if spec not in DESIGN_SPECS:
        raise ValueError(f"unknown design spec {spec!r}; choose from {DESIGN_SPECS}")
    work = frame
    if spec == "pessimism":
        work = frame[frame["omits_top"] == 1]
        outcome = outcome or "payoff_relevant"
    elif spec == "comprehension_2021":
        # The comprehension hypothesis is about truthfulness overall.
        work = frame[frame["wave2021"] == 1]
        outcome = outcome or "non_truthful"
    # The belief hypotheses concern dropping the favourite program, the
    # outcome its admission belief speaks to directly; pass ``outcome`` to
    # run the same design on overall non-truthfulness instead.
    outcome = outcome or "omits_top"

    used: list[str] = [outcome]
    if spec in ("belief_only", "full", "interactions", "comprehension_2021"):
        used.append("belief_combined" if combined_belief else "belief")
    if spec == "pessimism":
        used += ["pessimistic", "optimistic"]
    if spec != "belief_only":
        used += list(BACKGROUND) + list(PERSONALITY)
    if spec == "comprehension_2021":
        used.append("understands_sp")
    elif spec != "comprehension_2021":
        used.append("wave2021")
    if program_fe:
        used.append("true_top_program")
    work = work.dropna(subset=[c for c in used if c in work.columns])
    missing = [c for c in used if c not in work.columns]
    if missing:
        raise ValueError(f"analysis table lacks columns {missing}")
    if len(work) == 0:
        raise ValueError(f"no usable rows for spec {spec!r}")

    cols: list[np.ndarray] = [np.ones(len(work))]
    names: list[str] = ["const"]
    if spec in ("belief_only", "full", "interactions", "comprehension_2021"):
        bcols, bnames = _belief_columns(work, combined_belief, belief_encoding)
        cols += bcols
        names += bnames
    if spec == "pessimism":
        cols += [work["pessimistic"].to_numpy(float), work["optimistic"].to_numpy(float)]
        names += ["pessimistic", "optimistic"]
    if spec != "belief_only":
        for name in BACKGROUND + PERSONALITY:
            cols.append(_characteristic_column(work, name))
            names.append(name)
    if spec == "interactions":
        zbelief = zscore(
            work["belief_combined" if combined_belief else "belief"].to_numpy(float)
        )
        for name in BACKGROUND + PERSONALITY:
            cols.append(zbelief * _characteristic_column(work, name))
            names.append(f"belief_x_{name}")
    if spec == "comprehension_2021":
        cols.append(work["understands_sp"].to_numpy(float))
        names.append("understands_sp")
    else:
        cols.append(work["wave2021"].to_numpy(float))
        names.append("wave2021")
    if program_fe:
        dummies = pd.get_dummies(work["true_top_program"], prefix="top_program", drop_first=True)
        keep = [c for c in dummies.columns if dummies[c].to_numpy().any()]
        for c in keep:
            cols.append(dummies[c].to_numpy(dtype=float))
            names.append(str(c))

    weights = work["weight"].to_numpy(dtype=float) if "weight" in work.columns else None
    return Design(
        y=work[outcome].to_numpy(dtype=float),
        X=np.column_stack(cols),
        names=names,
        weights=weights,
        model_id=model_id or spec,
    )
