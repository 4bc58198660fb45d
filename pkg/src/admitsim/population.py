"""Synthetic applicant populations, preferences, beliefs, and reports.

The generator draws covariates through a Gaussian copula (configurable
pairwise correlations, bounded marginals), endows programs with capacity
and peer composition, realizes random utilities over programs, forms
subjective admission beliefs around anticipated cutoffs, and finally turns
true preferences into submitted lists under a configurable omission rule.

Everything is keyed by a single seed; each stage pulls its own substream,
so regenerating any one stage never perturbs the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, ndtr
from scipy.stats import beta as beta_dist
from scipy.stats import truncnorm

from .config import BehaviorConfig, ConfigError, ExperimentConfig
from .market import clear_market
from .records import (
    MAX_LIST_LEN,
    SCORE_MAX,
    SCORE_MIN,
    ProgramRecord,
    RankOrderedList,
    StudentRecord,
    TruthFlags,
)

# substream tags (hashed together with the root seed)
_STAGE_STUDENTS = 11
_STAGE_PROGRAMS = 12
_STAGE_UTILITY = 21
_STAGE_BELIEFS = 31


def _rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), stage)))


@lru_cache(maxsize=None)
def _trunc_loc(mean: float, sd: float, lo: float, hi: float) -> float:
    """Location parameter whose truncated-normal mean equals ``mean``.

    Truncation drags the mean toward the midpoint of the bounds, so using
    the configured mean as the location would miss it. Solving for the
    location keeps the config honest: the field's sample mean converges to
    the number written in the config.
    """
    if not lo < mean < hi:
        raise ConfigError(f"mean {mean} must lie inside bounds ({lo}, {hi})")

    def gap(loc: float) -> float:
        a, b = (lo - loc) / sd, (hi - loc) / sd
        return truncnorm.mean(a, b, loc=loc, scale=sd) - mean

    return brentq(gap, lo - 8.0 * sd, hi + 8.0 * sd, xtol=1e-9)


def _trunc_ppf(u, mean, sd, bounds):
    lo, hi = bounds
    loc = _trunc_loc(float(mean), float(sd), float(lo), float(hi))
    a, b = (lo - loc) / sd, (hi - loc) / sd
    return truncnorm.ppf(u, a, b, loc=loc, scale=sd)


#: copula field order; correlations in the config refer to these names
_COPULA_FIELDS = (
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
)


def _copula_matrix(correlations) -> np.ndarray:
    k = len(_COPULA_FIELDS)
    idx = {name: i for i, name in enumerate(_COPULA_FIELDS)}
    corr = np.eye(k)
    for a, b, rho in correlations:
        if a not in idx or b not in idx:
            raise ConfigError(f"correlation names unknown: ({a}, {b})")
        corr[idx[a], idx[b]] = corr[idx[b], idx[a]] = rho
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise ConfigError("correlation matrix is not positive definite")
    return chol


def generate_population(
    config: ExperimentConfig, seed: int | None = None
) -> tuple[list[StudentRecord], list[ProgramRecord]]:
    """Draw applicants and programs for one market.

    Ids are dense: students 0..N-1, programs 0..M-1. Identical (config,
    seed) pairs reproduce byte-identical populations.
    """
    pop = config.population
    beh = config.behavior
    pop.validate()
    beh.validate()
    seed = config.seed if seed is None else seed
    n = pop.n_students

    rng = _rng(seed, _STAGE_STUDENTS)
    chol = _copula_matrix(pop.correlations)
    z = rng.standard_normal((n, len(_COPULA_FIELDS))) @ chol.T
    u = ndtr(z)
    col = {name: u[:, i] for i, name in enumerate(_COPULA_FIELDS)}

    score = _trunc_ppf(col["eligibility_score"], pop.score_mean, pop.score_sd, (SCORE_MIN, SCORE_MAX))
    gpa = _trunc_ppf(col["middle_school_gpa"], pop.gpa_mean, pop.gpa_sd, pop.gpa_bounds)
    age = _trunc_ppf(col["age"], pop.age_mean, pop.age_sd, pop.age_bounds)
    female = (col["female"] < pop.female_share).astype(int)
    income = beta_dist.ppf(col["parents_income_pct"], *pop.income_beta)
    edu = _trunc_ppf(col["parents_edu_years"], pop.edu_mean, pop.edu_sd, pop.edu_bounds)
    conf = _trunc_ppf(col["confidence"], pop.confidence_mean, pop.confidence_sd, (0.0, 10.0))
    risk = _trunc_ppf(col["risk_willingness"], pop.risk_mean, pop.risk_sd, (0.0, 10.0))
    postpone = (col["postpone_willing"] < beh.share_postponers).astype(int)
    failure = (col["rejection_is_failure"] < pop.failure_share).astype(int)
    comprehend = (col["difficult_to_comprehend"] < pop.comprehend_share).astype(int)
    understands = (col["understands_sp"] < pop.understands_share).astype(int)
    wave = (col["wave2021"] < beh.wave2021_share).astype(int)
    loc = rng.uniform(0.0, pop.region_km, size=(n, 2))

    students = [
        StudentRecord(
            id=i,
            eligibility_score=float(score[i]),
            middle_school_gpa=float(gpa[i]),
            age=float(age[i]),
            female=int(female[i]),
            parents_income_pct=float(income[i]),
            parents_edu_years=float(edu[i]),
            confidence=float(conf[i]),
            risk_willingness=float(risk[i]),
            postpone_willing=int(postpone[i]),
            rejection_is_failure=int(failure[i]),
            difficult_to_comprehend=int(comprehend[i]),
            understands_sp=int(understands[i]),
            wave2021=int(wave[i]),
            loc_x=float(loc[i, 0]),
            loc_y=float(loc[i, 1]),
        )
        for i in range(n)
    ]

    rng_p = _rng(seed, _STAGE_PROGRAMS)
    m = pop.n_programs
    total_seats = pop.capacity_ratio * n
    if pop.capacity_spread > 0:
        weights = rng_p.lognormal(0.0, pop.capacity_spread, size=m)
    else:
        weights = np.ones(m)
    quality = _trunc_ppf(rng_p.random(m), pop.program_quality_mean, pop.program_quality_sd, (2.0, SCORE_MAX))
    shaped = pop.capacity_quality_weight != 0.0 or pop.capacity_quality_curvature != 0.0
    if shaped and m > 1 and quality.std() > 0:
        zq = (quality - quality.mean()) / quality.std()
        weights = weights * np.exp(
            pop.capacity_quality_weight * zq + pop.capacity_quality_curvature * zq**2
        )
    weights = weights / weights.sum()
    caps = np.maximum(1, np.round(total_seats * weights).astype(int))
    gender = beta_dist.ppf(rng_p.random(m), *pop.program_gender_beta)
    pinc = beta_dist.ppf(rng_p.random(m), *pop.program_income_beta)
    ploc = rng_p.uniform(0.0, pop.region_km, size=(m, 2))
    programs = [
        ProgramRecord(
            id=j,
            capacity=int(caps[j]),
            loc_x=float(ploc[j, 0]),
            loc_y=float(ploc[j, 1]),
            peer_quality=float(quality[j]),
            same_gender_share_female=float(gender[j]),
            peer_parents_income=float(pinc[j]),
        )
        for j in range(m)
    ]
    return students, programs


# ---------------------------------------------------------------------------
# utilities
# ---------------------------------------------------------------------------


def build_features(students, programs) -> np.ndarray:
    """Peer-composition interactions, shape (n, m, 3).

    Channels: own score x program mean peer score (scaled by 1/100), share
    of own gender among the program's peers, own parental income percentile
    x peers' parental income percentile.
    """
    score = np.array([s.eligibility_score for s in students])
    female = np.array([s.female for s in students])
    inc = np.array([s.parents_income_pct for s in students])
    quality = np.array([p.peer_quality for p in programs])
    sgsf = np.array([p.same_gender_share_female for p in programs])
    pinc = np.array([p.peer_parents_income for p in programs])
    x_quality = np.outer(score, quality) / 100.0
    x_gender = np.outer(female, sgsf) + np.outer(1 - female, 1.0 - sgsf)
    x_income = np.outer(inc, pinc)
    return np.stack([x_quality, x_gender, x_income], axis=2)


FEATURE_NAMES = ("peer_quality", "same_gender_share", "peer_parents_income")


def build_distances(students, programs) -> np.ndarray:
    """Straight-line student-program distances in thousands of km."""
    sxy = np.array([[s.loc_x, s.loc_y] for s in students])
    pxy = np.array([[p.loc_x, p.loc_y] for p in programs])
    diff = sxy[:, None, :] - pxy[None, :, :]
    return np.sqrt((diff**2).sum(axis=2)) / 1000.0


def program_effects(programs, config: ExperimentConfig, seed: int | None = None) -> np.ndarray:
    """Common popularity terms, increasing in peer quality plus noise."""
    ut = config.utility
    seed = config.seed if seed is None else seed
    rng = _rng(seed, _STAGE_UTILITY)
    quality = np.array([p.peer_quality for p in programs])
    zq = (quality - quality.mean()) / (quality.std() if quality.std() > 0 else 1.0)
    eff = ut.program_effect_quality_slope * zq
    if ut.program_effect_sd > 0:
        eff = eff + ut.program_effect_sd * rng.standard_normal(len(programs))
    return eff


@dataclass
class UtilityMatrix:
    """Realized utilities: deterministic part and taste shocks, (n, m).

    ``outside`` holds each student's outside-option draw (or None when the
    consideration device is off, making every program acceptable).
    """

    deterministic: np.ndarray
    shocks: np.ndarray
    outside: np.ndarray | None = None

    @property
    def total(self) -> np.ndarray:
        return self.deterministic + self.shocks

    def preference_orders(self) -> np.ndarray:
        """Programs per student, best first; ties resolve to lower index."""
        return np.argsort(-self.total, axis=1, kind="stable")


def realize_utilities(
    students,
    programs,
    taste,
    effects,
    seed: int,
    shock_scale: float = 1.0,
    outside_option: tuple[float, float] | None = None,
) -> UtilityMatrix:
    """Draw U = effect - distance + taste . features + Gumbel shock.

    Distance enters with a fixed -1 coefficient (thousands of km); ``taste``
    has one weight per feature channel. ``shock_scale`` 0 suppresses shocks.
    """
    feats = build_features(students, programs)
    dist = build_distances(students, programs)
    det = np.asarray(effects)[None, :] - dist + feats @ np.asarray(taste, dtype=float)
    rng = _rng(seed, _STAGE_UTILITY + 1)
    n, m = det.shape
    if shock_scale > 0:
        shocks = rng.gumbel(0.0, shock_scale, size=(n, m))
    else:
        shocks = np.zeros((n, m))
    outside = None
    if outside_option is not None:
        o_loc, o_scale = outside_option
        outside = o_loc + rng.gumbel(0.0, 1.0, size=n) * o_scale
    return UtilityMatrix(deterministic=det, shocks=shocks, outside=outside)


def utilities_for(config: ExperimentConfig, students, programs, seed: int | None = None) -> UtilityMatrix:
    """Config-driven wrapper around `realize_utilities`."""
    seed = config.seed if seed is None else seed
    eff = program_effects(programs, config, seed)
    return realize_utilities(
        students,
        programs,
        config.utility.taste,
        eff,
        seed,
        shock_scale=config.utility.shock_scale,
        outside_option=config.utility.outside_option,
    )


def acceptable_lists(utilities: UtilityMatrix) -> list[list[int]]:
    """True preference order over acceptable programs, per student.

    A program is acceptable when its utility beats the outside option; the
    best program always is, so nobody's list is empty.
    """
    orders = utilities.preference_orders()
    total = utilities.total
    n = total.shape[0]
    out = []
    for i in range(n):
        order = orders[i]
        if utilities.outside is None:
            out.append(order.tolist())
            continue
        k = int((total[i] > utilities.outside[i]).sum())
        out.append(order[: max(1, k)].tolist())
    return out


def truthful_reports(utilities: UtilityMatrix) -> list[RankOrderedList]:
    """Submit the acceptable set in true order, truncated at the list cap."""
    return [
        RankOrderedList(i, tuple(entries[:MAX_LIST_LEN]))
        for i, entries in enumerate(acceptable_lists(utilities))
    ]


def anticipated_cutoffs(
    students,
    programs,
    utilities: UtilityMatrix,
    behavior: BehaviorConfig | None = None,
    seed: int | None = None,
) -> dict[int, float | None]:
    """Published prior-year cutoff table that applicants anchor on.

    Round zero clears the market on truthful reports. When a behavior
    config is supplied, ``behavior.anchor_rounds`` further admission years
    are simulated (beliefs around last year's cutoffs, same omission rule,
    same persistent student traits) and the final year's cutoffs are
    returned. Truthful cutoffs overstate selectivity relative to what a
    strategic applicant pool actually produces; iterating settles the table
    near its steady state, the analogue of a published cutoff history.
    """
    scores = [s.eligibility_score for s in students]
    caps = [p.capacity for p in programs]
    rols = truthful_reports(utilities)
    _, cut = clear_market(scores, [list(r.entries) for r in rols], caps)
    if behavior is None or behavior.anchor_rounds <= 0:
        return {p.id: (None if np.isnan(c) else float(c)) for p, c in zip(programs, cut)}
    if seed is None:
        raise ValueError("a seed is required when anchor_rounds > 0")
    # Successive years are averaged on the score scale (a program open in
    # both years stays open; an open year counts as the scale floor), the
    # way a published multi-year table smooths one-off swings. The damping
    # stops the all-strategic feedback loop from overshooting: hedging
    # lowers next year's cutoffs, which invites aggression the year after.
    anchored = np.where(np.isnan(cut), SCORE_MIN, cut)
    for _ in range(behavior.anchor_rounds):
        table = {
            p.id: (None if anchored[j] <= SCORE_MIN + 1e-9 else float(anchored[j]))
            for j, p in enumerate(programs)
        }
        beliefs = subjective_beliefs(students, programs, table, behavior, seed)
        rols, _flags = generate_reports(students, utilities, beliefs, behavior)
        _, cut = clear_market(scores, [list(r.entries) for r in rols], caps)
        newest = np.where(np.isnan(cut), SCORE_MIN, cut)
        anchored = (1.0 - behavior.anchor_damping) * anchored + behavior.anchor_damping * newest
    return {
        p.id: (None if anchored[j] <= SCORE_MIN + 1e-9 else float(anchored[j]))
        for j, p in enumerate(programs)
    }


# ---------------------------------------------------------------------------
# beliefs and reports
# ---------------------------------------------------------------------------


#: Survey beliefs are reported on this grid (probability steps of 5 points),
#: the way a slider or percent question coarsens a continuous judgement.
BELIEF_GRID = 0.05


@dataclass
class BeliefSet:
    """Subjective admission chances, (n, m), plus the per-student tilt.

    ``alt`` is the stated chance of getting the favourite program through
    the secondary (non-score) admission track; it feeds the combined-belief
    regressions and nothing else.
    """

    matrix: np.ndarray
    tilt: np.ndarray
    alt: np.ndarray


def subjective_beliefs(
    students,
    programs,
    prior_cutoffs: dict[int, float | None],
    behavior: BehaviorConfig,
    seed: int,
) -> BeliefSet:
    """Logistic beliefs around anticipated cutoffs with per-student caution.

    A program whose anticipated cutoff is Open is believed certain. The
    tilt is one-sided: ``belief_mean_shift`` minus a half-normal draw with
    scale ``belief_dispersion``, so students hedge downward by varying
    amounts but never talk themselves above the logistic anchor, apart
    from an optional symmetric wobble (``belief_noise_sd``) that lets a
    few land on the confident side. Stated probabilities are rounded to
    the survey grid before use, which is what lets a stated and a
    simulated chance agree exactly (both zero, say) rather than only up
    to noise.
    """
    rng = _rng(seed, _STAGE_BELIEFS)
    n = len(students)
    tilt = behavior.belief_mean_shift - behavior.belief_dispersion * np.abs(
        rng.standard_normal(n)
    )
    if behavior.belief_noise_sd > 0:
        tilt = tilt + behavior.belief_noise_sd * rng.standard_normal(n)
    score = np.array([s.eligibility_score for s in students])
    cut = np.array(
        [np.nan if prior_cutoffs[p.id] is None else prior_cutoffs[p.id] for p in programs]
    )
    gap = (score[:, None] - cut[None, :]) / behavior.belief_slope
    with np.errstate(invalid="ignore"):
        mat = expit(gap + tilt[:, None])
    mat[:, np.isnan(cut)] = 1.0
    mat = np.round(mat / BELIEF_GRID) * BELIEF_GRID
    alt = beta_dist.ppf(rng.random(n), *behavior.alt_belief_beta)
    alt = np.round(alt / BELIEF_GRID) * BELIEF_GRID
    return BeliefSet(matrix=mat, tilt=tilt, alt=alt)


def _personal_thresholds(students, behavior: BehaviorConfig) -> np.ndarray:
    """Omission threshold per student: base plus small personality shifts.

    Fearing rejection and finding the system hard to grasp raise it; risk
    willingness, confidence, willingness to postpone, and knowing the
    mechanism is safe lower it.
    """
    base = behavior.belief_threshold
    t = behavior.personality_tilt
    if t == 0.0:
        return np.full(len(students), base)
    shift = np.array(
        [
            (s.rejection_is_failure + s.difficult_to_comprehend)
            - (s.postpone_willing + s.understands_sp)
            - (s.confidence - 5.0) / 5.0
            - (s.risk_willingness - 5.0) / 5.0
            for s in students
        ]
    )
    return np.clip(base + t * shift, 0.0, 0.99)


def generate_reports(
    students,
    utilities: UtilityMatrix,
    beliefs: BeliefSet,
    behavior: BehaviorConfig,
    seed: int | None = None,
) -> tuple[list[RankOrderedList], list[TruthFlags]]:
    """Turn true preferences into submitted lists under the omission rule.

    belief-threshold: drop acceptable programs believed below the personal
    threshold. expected-utility: drop programs whose belief-weighted gain
    over the outside option falls below the listing cost. Either way a
    student whose whole list would vanish submits her best believed option,
    and lists are truncated at the cap after omission. With
    ``behavior.comprehension_truthful`` on, students who understand the
    mechanism's list-honestly advice submit their truthful prefix no matter
    what they believe; everyone else follows the omission rule.
    Deterministic given beliefs; ``seed`` is accepted for interface
    symmetry.
    """
    del seed
    total = utilities.total
    acceptable = acceptable_lists(utilities)
    thresholds = _personal_thresholds(students, behavior)
    outside = (
        utilities.outside
        if utilities.outside is not None
        else total.min(axis=1) - 1.0
    )
    rols: list[RankOrderedList] = []
    flags: list[TruthFlags] = []
    for i, entries in enumerate(acceptable):
        p_hat = beliefs.matrix[i]
        if behavior.comprehension_truthful and students[i].understands_sp:
            kept = list(entries)
        elif behavior.omission_rule == "belief-threshold":
            kept = [j for j in entries if p_hat[j] >= thresholds[i]]
            # max() keeps the first maximum, so belief ties resolve in
            # preference order; a student with no real chance anywhere
            # simply names her favourite.
            best_fallback = max(entries, key=lambda j: p_hat[j])
        else:
            gain = np.maximum(total[i] - outside[i], 1e-9)
            kept = [j for j in entries if p_hat[j] * gain[j] >= behavior.utility_cost]
            best_fallback = max(entries, key=lambda j: p_hat[j] * gain[j])
        if not kept:
            kept = [best_fallback]
        submitted = tuple(kept[:MAX_LIST_LEN])
        truthful = tuple(entries[:MAX_LIST_LEN])
        non_truthful = int(submitted != truthful)
        omits = int(non_truthful and submitted[0] != entries[0])
        rols.append(RankOrderedList(i, submitted))
        flags.append(
            TruthFlags(
                student_id=i,
                reports_non_truthfully=non_truthful,
                omits_most_preferred=omits,
                true_top_program=int(entries[0]),
            )
        )
    return rols, flags


# ---------------------------------------------------------------------------
# application kink diagnostic
# ---------------------------------------------------------------------------


@dataclass
class KinkCurve:
    """Binned application rate against (own score - anticipated cutoff)."""

    edges: np.ndarray      # len bins + 1
    centers: np.ndarray    # len bins
    rate: np.ndarray       # len bins, NaN where a bin holds no pairs
    counts: np.ndarray     # len bins

    @property
    def zero_bin(self) -> int:
        """Index of the bin containing zero distance-to-cutoff."""
        return int(np.searchsorted(self.edges, 0.0, side="right") - 1)


def application_kink_curve(
    rols,
    students,
    prior_cutoffs: dict[int, float | None],
    n_bins: int,
    x_range: tuple[float, float] = (-3.0, 3.0),
    min_cutoff: float | None = None,
) -> KinkCurve:
    """Pool (student, priced program) pairs and bin the application rate.

    Open programs carry no cutoff distance and are excluded; ``min_cutoff``
    optionally restricts to more selective programs. Empty bins yield NaN
    rates rather than zeros.
    """
    listed = {rol.student_id: set(rol.entries) for rol in rols}
    pids = [
        pid
        for pid, c in prior_cutoffs.items()
        if c is not None and (min_cutoff is None or c >= min_cutoff)
    ]
    cuts = np.array([prior_cutoffs[pid] for pid in pids])
    score = np.array([s.eligibility_score for s in students])
    x = (score[:, None] - cuts[None, :]).ravel()
    applied = np.array(
        [[1.0 if pid in listed.get(s.id, ()) else 0.0 for pid in pids] for s in students]
    ).ravel()
    edges = np.linspace(x_range[0], x_range[1], n_bins + 1)
    which = np.digitize(x, edges) - 1
    ok = (which >= 0) & (which < n_bins)
    counts = np.bincount(which[ok], minlength=n_bins).astype(float)
    hits = np.bincount(which[ok], weights=applied[ok], minlength=n_bins)
    with np.errstate(invalid="ignore"):
        rate = np.where(counts > 0, hits / np.maximum(counts, 1.0), np.nan)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return KinkCurve(edges=edges, centers=centers, rate=rate, counts=counts)


def max_slope_change_bin(curve: KinkCurve) -> int:
    """Interior bin where the binned slope changes the most.

    Uses centered second differences of the bin means, each standardized by
    its sampling error (binomial per-bin variance). Without the
    standardization a thin outer bin's noise wiggle can out-score a real
    slope break sitting on thousands of pairs. Bins touching a NaN
    neighbour are skipped.
    """
    r = curve.rate
    n = np.maximum(curve.counts, 1.0)
    var = np.clip(r * (1.0 - r), 1e-4, None) / n
    second = np.full_like(r, np.nan)
    second[1:-1] = (r[2:] - r[1:-1]) - (r[1:-1] - r[:-2])
    se = np.full_like(r, np.nan)
    se[1:-1] = np.sqrt(var[2:] + 4.0 * var[1:-1] + var[:-2])
    score = np.abs(second) / se
    if np.all(np.isnan(score)):
        raise ValueError("kink curve has no three adjacent populated bins")
    return int(np.nanargmax(score))


@dataclass
class KinkTestResult:
    statistic: float
    p_value: float
    n_permutations: int


def kink_break_test(
    curve: KinkCurve, n_permutations: int = 500, seed: int = 0
) -> KinkTestResult:
    """Permutation test for a slope break at zero distance-to-cutoff.

    Fits a cubic plus a hinge at zero to the bin means (weighted by bin
    counts); the hinge coefficient is the break statistic. The null
    distribution comes from refitting after permuting the cubic fit's
    residuals across bins, so any smooth score-cutoff relation stays in
    the null.
    """
    ok = np.isfinite(curve.rate) & (curve.counts > 0)
    x = curve.centers[ok]
    y = curve.rate[ok]
    w = np.sqrt(curve.counts[ok])
    hinge = np.maximum(x, 0.0)
    base = np.column_stack([np.ones_like(x), x, x**2, x**3])
    full = np.column_stack([base, hinge])

    def _wfit(design, target):
        coef, *_ = np.linalg.lstsq(design * w[:, None], target * w, rcond=None)
        return coef

    null_coef = _wfit(base, y)
    resid = y - base @ null_coef
    stat = abs(_wfit(full, y)[-1])
    rng = np.random.default_rng(np.random.SeedSequence((seed, 7001)))
    hits = 0
    for _ in range(n_permutations):
        y_star = base @ null_coef + rng.permutation(resid)
        if abs(_wfit(full, y_star)[-1]) >= stat:
            hits += 1
    p = (1 + hits) / (n_permutations + 1)
    return KinkTestResult(statistic=float(stat), p_value=float(p), n_permutations=n_permutations)
