"""Conditional logit estimation of program demand.

Utility is program intercept + tastes on the peer-composition features,
with distance (thousands of km) entering as a fixed -1 offset, so no
distance coefficient is estimated and the first retained program's
intercept is normalized to zero. The log likelihood, gradient, and Hessian
are analytic; group log-sum-exp terms subtract the per-group maximum before
exponentiating. Newton steps are damped by halving until the likelihood
does not fall, which under a concave likelihood makes the trace monotone.

Three sampling modes map submitted behaviour into choices: ``revealed``
takes the surveyed favourite against all programs, ``stated`` takes the
first listed program against all programs, and ``stability`` keeps the
stated pick but restricts each student's set to programs whose realized
cutoff she meets, dropping (and counting) students whose pick was
infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .market import clears
from .population import FEATURE_NAMES, build_distances, build_features
from .records import ProgramRecord, RankOrderedList, StudentRecord, TruthFlags
from .regression import ModelFit

MODES = ("revealed", "stated", "stability")


class ConvergenceError(RuntimeError):
    """Newton failed to converge; carries the final gradient norm."""

    def __init__(self, message: str, grad_norm: float):
        self.grad_norm = grad_norm
        super().__init__(f"{message} (gradient max-norm {grad_norm:.3e})")


@dataclass
class ChoiceData:
    """Long-format choice sets ready for the likelihood.

    Rows are (student, alternative) pairs in student-major order.
    ``program_of_row`` indexes the retained-program list; the first retained
    program is the normalized reference. ``cluster`` holds each student's
    chosen program id for the clustered sandwich.
    """

    program_of_row: np.ndarray
    X: np.ndarray
    offset: np.ndarray
    ptr: np.ndarray
    chosen_row: np.ndarray
    program_ids: list[int]
    cluster: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    n_dropped_infeasible: int = 0
    dropped_programs: list[int] = field(default_factory=list)

    @property
    def n_students(self) -> int:
        return len(self.chosen_row)

    @property
    def n_params(self) -> int:
        return len(self.program_ids) - 1 + self.X.shape[1]

    @property
    def param_names(self) -> list[str]:
        return [f"program_effect:{pid}" for pid in self.program_ids[1:]] + list(
            self.feature_names
        )

    @property
    def row_group(self) -> np.ndarray:
        counts = np.diff(self.ptr)
        return np.repeat(np.arange(len(counts)), counts)


def build_choice_data(
    students: list[StudentRecord],
    programs: list[ProgramRecord],
    chosen: np.ndarray,
    include: np.ndarray | None = None,
) -> ChoiceData:
    """Assemble long-format data from chosen program ids and set masks.

    ``include`` is an (n, m) boolean mask of available alternatives (all
    True when omitted). Students whose chosen program is excluded from
    their own set are dropped and counted. Programs never chosen by anyone
    remaining in the sample are removed from every set: their intercepts
    have no finite maximizer.
    """
    n, m = len(students), len(programs)
    pid_index = {p.id: j for j, p in enumerate(programs)}
    chosen_idx = np.array([pid_index[int(c)] for c in chosen])
    if include is None:
        include = np.ones((n, m), dtype=bool)
    include = include.copy()
    feasible_pick = include[np.arange(n), chosen_idx]
    dropped = int((~feasible_pick).sum())
    keep_students = np.flatnonzero(feasible_pick)

    counts = np.bincount(chosen_idx[keep_students], minlength=m)
    retained = np.flatnonzero(counts > 0)
    dropped_programs = [programs[j].id for j in np.flatnonzero(counts == 0)]
    include[:, counts == 0] = False

    feats = build_features(students, programs)
    offs = -build_distances(students, programs)
    new_index = np.full(m, -1)
    new_index[retained] = np.arange(len(retained))

    rows_student, rows_program = np.nonzero(include[keep_students])
    ptr = np.concatenate([[0], np.cumsum(np.bincount(rows_student, minlength=len(keep_students)))])
    X = feats[keep_students[rows_student], rows_program]
    offset = offs[keep_students[rows_student], rows_program]
    program_of_row = new_index[rows_program]

    # chosen row index inside the flattened layout
    chosen_row = np.empty(len(keep_students), dtype=np.int64)
    for gi, si in enumerate(keep_students):
        block = rows_program[ptr[gi] : ptr[gi + 1]]
        chosen_row[gi] = ptr[gi] + int(np.nonzero(block == chosen_idx[si])[0][0])

    return ChoiceData(
        program_of_row=program_of_row,
        X=X,
        offset=offset,
        ptr=ptr,
        chosen_row=chosen_row,
        program_ids=[programs[j].id for j in retained],
        cluster=np.array([programs[j].id for j in chosen_idx[keep_students]]),
        n_dropped_infeasible=dropped,
        dropped_programs=dropped_programs,
    )


def choice_sets_for_mode(
    mode: str,
    students: list[StudentRecord],
    programs: list[ProgramRecord],
    flags: list[TruthFlags],
    rols: list[RankOrderedList],
    realized_cutoffs: dict[int, float | None] | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Chosen program per student and the availability mask for a mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    by_sid = {r.student_id: r for r in rols}
    if mode == "revealed":
        chosen = np.array([f.true_top_program for f in flags])
        return chosen, None
    chosen = np.array([by_sid[f.student_id].entries[0] for f in flags])
    if mode == "stated":
        return chosen, None
    if realized_cutoffs is None:
        raise ValueError("stability mode requires realized cutoffs")
    score = np.array([s.eligibility_score for s in students])
    include = np.empty((len(students), len(programs)), dtype=bool)
    for j, p in enumerate(programs):
        cut = realized_cutoffs[p.id]
        include[:, j] = True if cut is None else (score >= cut)
    return chosen, include


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------


def _utilities(params: np.ndarray, data: ChoiceData) -> np.ndarray:
    J = len(data.program_ids)
    theta = np.concatenate([[0.0], params[: J - 1]])
    gamma = params[J - 1 :]
    return theta[data.program_of_row] + data.X @ gamma + data.offset


def clogit_probs(params: np.ndarray, data: ChoiceData) -> np.ndarray:
    """Per-row choice probabilities at the given parameters."""
    u = _utilities(params, data)
    starts = data.ptr[:-1]
    gmax = np.maximum.reduceat(u, starts)
    ex = np.exp(u - gmax[data.row_group])
    denom = np.add.reduceat(ex, starts)
    return ex / denom[data.row_group]


def clogit_loglik(
    params: np.ndarray, data: ChoiceData
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log likelihood with analytic gradient and Hessian.

    Parameters stack the retained-program intercepts (reference omitted)
    and then the feature tastes.
    """
    J = len(data.program_ids)
    u = _utilities(params, data)
    starts = data.ptr[:-1]
    gmax = np.maximum.reduceat(u, starts)
    ex = np.exp(u - gmax[data.row_group])
    denom = np.add.reduceat(ex, starts)
    ll = float(np.sum(u[data.chosen_row] - (gmax + np.log(denom))))
    P = ex / denom[data.row_group]

    n = data.n_students
    group = data.row_group
    # expected one-hot / feature values per student
    M_theta = np.zeros((n, J))
    np.add.at(M_theta, (group, data.program_of_row), P)
    M_x = np.zeros((n, data.X.shape[1]))
    np.add.at(M_x, group, data.X * P[:, None])

    chosen_prog = data.program_of_row[data.chosen_row]
    ones_chosen = np.zeros((n, J))
    ones_chosen[np.arange(n), chosen_prog] = 1.0
    g_theta = (ones_chosen - M_theta)[:, 1:].sum(axis=0)
    g_x = (data.X[data.chosen_row] - M_x).sum(axis=0)
    grad = np.concatenate([g_theta, g_x])

    # curvature: sum_rows P z z' - sum_students m m'
    w = P
    A_tt = np.zeros((J, J))
    np.fill_diagonal(A_tt, np.bincount(data.program_of_row, weights=w, minlength=J))
    A_tx = np.zeros((J, data.X.shape[1]))
    np.add.at(A_tx, data.program_of_row, data.X * w[:, None])
    A_xx = (data.X * w[:, None]).T @ data.X
    B_tt = M_theta.T @ M_theta
    B_tx = M_theta.T @ M_x
    B_xx = M_x.T @ M_x
    k = J - 1 + data.X.shape[1]
    H = np.empty((k, k))
    H[: J - 1, : J - 1] = -(A_tt - B_tt)[1:, 1:]
    H[: J - 1, J - 1 :] = -(A_tx - B_tx)[1:, :]
    H[J - 1 :, : J - 1] = H[: J - 1, J - 1 :].T
    H[J - 1 :, J - 1 :] = -(A_xx - B_xx)
    return ll, grad, H


def _student_scores(params: np.ndarray, data: ChoiceData) -> np.ndarray:
    """Per-student score contributions at the given parameters."""
    J = len(data.program_ids)
    P = clogit_probs(params, data)
    n = data.n_students
    group = data.row_group
    M_theta = np.zeros((n, J))
    np.add.at(M_theta, (group, data.program_of_row), P)
    M_x = np.zeros((n, data.X.shape[1]))
    np.add.at(M_x, group, data.X * P[:, None])
    chosen_prog = data.program_of_row[data.chosen_row]
    ones_chosen = np.zeros((n, J))
    ones_chosen[np.arange(n), chosen_prog] = 1.0
    return np.column_stack(
        [(ones_chosen - M_theta)[:, 1:], data.X[data.chosen_row] - M_x]
    )


def _clustered_cov(
    params: np.ndarray, data: ChoiceData, bread: np.ndarray
) -> tuple[np.ndarray, int]:
    scores = _student_scores(params, data)
    labels = data.cluster
    uniq = np.unique(labels)
    G = len(uniq)
    k = scores.shape[1]
    meat = np.zeros((k, k))
    for c in uniq:
        sc = scores[labels == c].sum(axis=0)
        meat += np.outer(sc, sc)
    n = data.n_students
    if G < 2 or n <= k:
        return bread, G
    factor = (G / (G - 1)) * ((n - 1) / (n - k))
    return factor * bread @ meat @ bread, G


def clogit_fit(
    data: ChoiceData,
    grad_tol: float = 1e-8,
    max_iter: int = 200,
    start: np.ndarray | None = None,
) -> ModelFit:
    """Damped-Newton maximum likelihood on prepared choice data.

    Reports program-clustered standard errors (cluster = chosen program);
    the inverse observed information is kept in diagnostics. Raises
    ConvergenceError with the gradient norm when the iteration cap is hit
    or a step cannot improve the likelihood.
    """
    params = np.zeros(data.n_params) if start is None else np.asarray(start, float).copy()
    ll, grad, H = clogit_loglik(params, data)
    trace = [ll]
    converged = False
    for _ in range(max_iter):
        gnorm = float(np.abs(grad).max())
        if gnorm < grad_tol:
            converged = True
            break
        try:
            step = np.linalg.solve(-H, grad)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Hessian", gnorm)
        scale = 1.0
        for _ in range(60):
            cand = params + scale * step
            ll_new, grad_new, H_new = clogit_loglik(cand, data)
            if ll_new >= ll - 1e-12:
                params, ll, grad, H = cand, ll_new, grad_new, H_new
                trace.append(ll)
                break
            scale *= 0.5
        else:
            raise ConvergenceError("step halving exhausted", gnorm)
    else:
        raise ConvergenceError("iteration cap reached", float(np.abs(grad).max()))
    if not converged and float(np.abs(grad).max()) >= grad_tol:
        raise ConvergenceError("iteration cap reached", float(np.abs(grad).max()))

    bread = np.linalg.inv(-H)
    cov, n_clusters = _clustered_cov(params, data, bread)
    return ModelFit(
        model_id="clogit",
        names=data.param_names,
        params=params,
        cov=cov,
        nobs=data.n_students,
        df_resid=data.n_students - data.n_params,
        loglik=ll,
        diagnostics={
            "converged": True,
            "n_iterations": len(trace) - 1,
            "grad_max_norm": float(np.abs(grad).max()),
            "loglik_trace": [float(v) for v in trace],
            "cov_classical": bread.tolist(),
            "n_clusters": n_clusters,
            "n_dropped_infeasible": data.n_dropped_infeasible,
            "dropped_programs": data.dropped_programs,
            "reference_program": data.program_ids[0],
        },
    )


def fit_demand(
    students: list[StudentRecord],
    programs: list[ProgramRecord],
    flags: list[TruthFlags],
    rols: list[RankOrderedList],
    mode: str,
    realized_cutoffs: dict[int, float | None] | None = None,
    grad_tol: float = 1e-8,
    max_iter: int = 200,
) -> ModelFit:
    """Mode-aware wrapper: build choice sets, fit, tag the result."""
    chosen, include = choice_sets_for_mode(
        mode, students, programs, flags, rols, realized_cutoffs
    )
    data = build_choice_data(students, programs, chosen, include)
    fit = clogit_fit(data, grad_tol=grad_tol, max_iter=max_iter)
    fit.model_id = f"demand_{mode}"
    return fit
