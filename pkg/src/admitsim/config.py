"""Experiment configuration: dataclasses, presets, JSON loading.

A config file is a JSON object with optional sections ``population``,
``behavior``, ``utility``, ``analysis``, plus top-level ``seed``,
``preset``, ``replications``, ``models``. Unknown keys are rejected so
typos fail loudly. The seed is mandatory: every random stage derives its
own substream from it, so one integer pins the whole pipeline down.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass
class PopulationConfig:
    n_students: int = 1000
    n_programs: int = 20
    # applicant covariates (marginals; correlations below couple them)
    score_mean: float = 8.65
    score_sd: float = 2.03
    gpa_mean: float = 8.75
    gpa_sd: float = 1.88
    gpa_bounds: tuple[float, float] = (-3.0, 12.2)
    age_mean: float = 21.7
    age_sd: float = 4.0
    age_bounds: tuple[float, float] = (17.0, 60.0)
    female_share: float = 0.64
    income_beta: tuple[float, float] = (1.68, 1.22)
    edu_mean: float = 14.9
    edu_sd: float = 2.64
    edu_bounds: tuple[float, float] = (7.0, 25.0)
    confidence_mean: float = 6.72
    confidence_sd: float = 2.15
    risk_mean: float = 5.56
    risk_sd: float = 2.17
    failure_share: float = 0.55
    comprehend_share: float = 0.38
    understands_share: float = 0.62
    region_km: float = 300.0
    #: pairwise Gaussian-copula correlations, (field_a, field_b, rho)
    correlations: tuple[tuple[str, str, float], ...] = (
        ("eligibility_score", "middle_school_gpa", 0.6),
    )
    # program side
    capacity_ratio: float = 0.6
    capacity_spread: float = 0.8
    #: log-capacity loading on standardised peer quality; positive values
    #: make prestigious programs large (flagship pattern), negative makes
    #: them boutique-small. 0 keeps size independent of quality.
    capacity_quality_weight: float = 0.0
    #: quadratic term of the same loading. A negative value concentrates
    #: seats in strong-but-not-top programs, leaving the very best ones
    #: boutique-sized even when the linear weight is positive.
    capacity_quality_curvature: float = 0.0
    program_quality_mean: float = 8.5
    program_quality_sd: float = 1.2
    program_gender_beta: tuple[float, float] = (8.0, 5.0)
    program_income_beta: tuple[float, float] = (6.0, 4.5)

    def validate(self) -> None:
        if self.n_students < 1:
            raise ConfigError("empty population: n_students must be >= 1")
        if self.n_programs < 1:
            raise ConfigError("empty population: n_programs must be >= 1")
        for name in ("female_share", "failure_share", "comprehend_share", "understands_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.score_sd <= 0 or self.gpa_sd <= 0:
            raise ConfigError("score_sd and gpa_sd must be positive")
        if self.capacity_ratio <= 0:
            raise ConfigError("capacity_ratio must be positive")
        for a, b, rho in self.correlations:
            if not -1.0 < rho < 1.0:
                raise ConfigError(f"correlation({a}, {b}) = {rho} outside (-1, 1)")


@dataclass
class BehaviorConfig:
    """Reporting behaviour and belief formation.

    ``belief_threshold`` is the subjective admission chance below which a
    listed program is dropped; 0 turns omission off. Belief noise is a
    per-student tilt with the given mean shift and half-normal dispersion
    applied inside a logistic map of
    (score - anticipated cutoff) / ``belief_slope``.

    ``anchor_rounds`` controls the published cutoff table students anchor
    on: 0 uses the truthful counterfactual, k > 0 simulates k further
    admission years under the same behaviour so the table settles near the
    strategic steady state.

    ``comprehension_truthful`` makes students with ``understands_sp`` set
    submit their truthful prefix regardless of beliefs, the rest following
    the omission rule. Off by default so the bare rule is what the
    documentation describes.
    """

    omission_rule: str = "belief-threshold"
    belief_threshold: float = 0.5
    utility_cost: float = 0.05
    belief_mean_shift: float = 0.0
    belief_dispersion: float = 0.4
    belief_slope: float = 0.25
    #: sd of a symmetric normal added to the per-student tilt. Keep it
    #: well below belief_dispersion or the one-sided caution story stops
    #: holding; a small value mainly guarantees a few optimists exist.
    belief_noise_sd: float = 0.0
    alt_belief_beta: tuple[float, float] = (1.2, 6.0)
    personality_tilt: float = 0.0
    anchor_rounds: int = 0
    #: weight on the newest simulated year when anticipated cutoffs are
    #: averaged across rounds. 1.0 means each round replaces the anchor
    #: outright; smaller values smooth oscillating markets.
    anchor_damping: float = 0.5
    comprehension_truthful: bool = False
    share_postponers: float = 0.70
    wave2021_share: float = 0.45

    def validate(self) -> None:
        if self.omission_rule not in ("belief-threshold", "expected-utility"):
            raise ConfigError(f"unknown omission_rule {self.omission_rule!r}")
        if not 0.0 <= self.belief_threshold <= 1.0:
            raise ConfigError("belief_threshold must lie in [0, 1]")
        if self.belief_dispersion < 0:
            raise ConfigError("belief_dispersion must be >= 0")
        if self.belief_noise_sd < 0:
            raise ConfigError("belief_noise_sd must be >= 0")
        if self.belief_slope <= 0:
            raise ConfigError("belief_slope must be positive")
        if self.anchor_rounds < 0:
            raise ConfigError("anchor_rounds must be >= 0")
        if not 0.0 < self.anchor_damping <= 1.0:
            raise ConfigError("anchor_damping must lie in (0, 1]")
        for name in ("share_postponers", "wave2021_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")


@dataclass
class UtilityConfig:
    """Random-utility parameters for program demand.

    Utility is program effect - distance (thousands of km) + tastes on the
    three peer-composition interactions + a Gumbel shock. The outside
    option, when enabled, truncates each student's acceptable set; her best
    program always stays acceptable.
    """

    taste_peer_quality: float = 2.5
    taste_same_gender: float = 1.0
    taste_peer_income: float = 1.5
    program_effect_quality_slope: float = 1.0
    program_effect_sd: float = 0.5
    shock_scale: float = 1.0
    outside_option: tuple[float, float] | None = None  # (location, scale)

    def validate(self) -> None:
        if self.shock_scale < 0:
            raise ConfigError("shock_scale must be >= 0")
        if self.program_effect_sd < 0:
            raise ConfigError("program_effect_sd must be >= 0")

    @property
    def taste(self) -> tuple[float, float, float]:
        return (self.taste_peer_quality, self.taste_same_gender, self.taste_peer_income)


@dataclass
class AnalysisConfig:
    pessimism_band: float = 0.05
    kink_bins: int = 33
    kink_range: tuple[float, float] = (-3.0, 3.0)
    kink_min_prior_cutoff: float | None = None

    def validate(self) -> None:
        if self.pessimism_band < 0:
            raise ConfigError("pessimism_band must be >= 0")
        if self.kink_bins < 5 or self.kink_bins % 2 == 0:
            raise ConfigError("kink_bins must be an odd number >= 5")


DEFAULT_MODELS = (
    "belief_only",
    "full",
    "pessimism",
    "interactions",
    "comprehension_2021",
    "demand_revealed",
    "demand_stated",
    "demand_stability",
)


@dataclass
class ExperimentConfig:
    seed: int
    population: PopulationConfig = field(default_factory=PopulationConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    utility: UtilityConfig = field(default_factory=UtilityConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    replications: int = 100
    models: tuple[str, ...] = DEFAULT_MODELS
    preset: str = "custom"

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("missing seed: every run requires an explicit seed")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        self.population.validate()
        self.behavior.validate()
        self.utility.validate()
        self.analysis.validate()
        known = set(DEFAULT_MODELS)
        for m in self.models:
            if m not in known:
                raise ConfigError(f"unknown model spec {m!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Stable hash of the full configuration (lists/tuples normalized)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()


def _apply_section(obj, section: str, values: dict) -> None:
    valid = {f.name for f in dataclasses.fields(obj)}
    for key, val in values.items():
        if key not in valid:
            raise ConfigError(f"unknown key {key!r} in section {section!r}")
        current = getattr(obj, key)
        if isinstance(current, tuple) and isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        setattr(obj, key, val)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _paper_like(seed: int) -> ExperimentConfig:
    """Behavioural market calibrated to the headline reporting rates.

    Roughly one student in five edits her list, one in eight drops her
    favourite program, and one in fifty drops a favourite that would in
    fact have admitted her.
    """
    cfg = ExperimentConfig(seed=seed, preset="paper-like")
    cfg.population = PopulationConfig(
        n_students=8000,
        n_programs=40,
        # Prestigious programs are large (flagship pattern), so the elite
        # tier absorbs most of the score distribution and hedging
        # concentrates among applicants near the bottom of it.
        capacity_ratio=1.9,
        capacity_spread=0.5,
        capacity_quality_weight=2.6,
        program_quality_sd=1.6,
        region_km=2200.0,
    )
    cfg.behavior = BehaviorConfig(
        omission_rule="belief-threshold",
        belief_threshold=0.5,
        # The survey grid snaps the effective cutoff to 0.475; the -0.10
        # shift cancels logit(0.475) so hedging starts exactly at zero
        # distance rather than a fraction of a bin below it.
        belief_mean_shift=-0.10,
        belief_dispersion=0.75,
        belief_slope=0.15,
        personality_tilt=0.03,
        anchor_rounds=6,
        comprehension_truthful=False,
    )
    cfg.utility = UtilityConfig(
        # Everyone shares the pull toward selective programs; distance is
        # what keeps a cheaper local option on the list, so a hedge is a
        # real step down in peer quality.
        taste_peer_quality=16.0,
        taste_same_gender=1.0,
        taste_peer_income=1.5,
        program_effect_quality_slope=1.5,
        program_effect_sd=0.45,
        shock_scale=1.0,
        outside_option=(14.0, 0.8),
    )
    cfg.analysis = AnalysisConfig(kink_min_prior_cutoff=8.0)
    return cfg


def _truthful(seed: int) -> ExperimentConfig:
    """Same market as paper-like with omission switched off."""
    cfg = _paper_like(seed)
    cfg.preset = "truthful"
    cfg.behavior.belief_threshold = 0.0
    cfg.behavior.personality_tilt = 0.0
    # Nobody omits, so the omitter-subsample regression has no rows.
    cfg.models = tuple(m for m in DEFAULT_MODELS if m != "pessimism")
    return cfg


def _recovery(seed: int) -> ExperimentConfig:
    """Truthful market with slack capacity everywhere, for estimator checks."""
    cfg = ExperimentConfig(seed=seed, preset="recovery")
    cfg.population = PopulationConfig(
        n_students=5000,
        n_programs=20,
        capacity_ratio=25.0,  # no program ever fills
        capacity_spread=0.0,
    )
    cfg.behavior = BehaviorConfig(
        belief_threshold=0.0,
        personality_tilt=0.0,
        belief_mean_shift=0.0,
        belief_dispersion=0.3,
    )
    cfg.utility = UtilityConfig(
        taste_peer_quality=2.5,
        taste_same_gender=1.0,
        taste_peer_income=1.5,
        program_effect_quality_slope=1.1,
        program_effect_sd=0.45,
        outside_option=None,
    )
    return cfg


def _tiny(seed: int) -> ExperimentConfig:
    """Small behavioural market for smoke tests and demos."""
    cfg = _paper_like(seed)
    cfg.preset = "tiny"
    cfg.population.n_students = 300
    cfg.population.n_programs = 12
    cfg.replications = 30
    # The omitter subsample is far too small at this scale for the
    # wide designs, so keep only the lean ones.
    cfg.models = ("belief_only", "full", "demand_revealed")
    return cfg


PRESETS = {
    "paper-like": _paper_like,
    "truthful": _truthful,
    "recovery": _recovery,
    "tiny": _tiny,
}

#: Seed used when a preset is requested without an explicit one.
DEFAULT_SEED = 20260401


def preset_config(name: str, seed: int | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[name](DEFAULT_SEED if seed is None else seed)
    cfg.validate()
    return cfg


def load_config(
    path: str | Path | None = None,
    preset: str | None = None,
    seed: int | None = None,
    replications: int | None = None,
) -> ExperimentConfig:
    """Build a config from an optional JSON file plus command-line overrides.

    Precedence: explicit arguments > file values > preset defaults. A bare
    preset name works without a file; a file may itself name a preset to
    start from.
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")

    base = preset or raw.get("preset")
    file_seed = raw.get("seed")
    effective_seed = seed if seed is not None else file_seed
    if effective_seed is None:
        raise ConfigError("missing seed: pass --seed or set \"seed\" in the config")
    if base is not None:
        cfg = preset_config(base, int(effective_seed))
    else:
        cfg = ExperimentConfig(seed=int(effective_seed))

    sections = {
        "population": cfg.population,
        "behavior": cfg.behavior,
        "utility": cfg.utility,
        "analysis": cfg.analysis,
    }
    for key, val in raw.items():
        if key in ("preset", "seed"):
            continue
        if key == "replications":
            cfg.replications = int(val)
        elif key == "models":
            cfg.models = tuple(val)
        elif key in sections:
            if not isinstance(val, dict):
                raise ConfigError(f"section {key!r} must be a JSON object")
            _apply_section(sections[key], key, val)
        else:
            raise ConfigError(f"unknown top-level key {key!r}")

    if replications is not None:
        cfg.replications = int(replications)
    cfg.validate()
    return cfg
