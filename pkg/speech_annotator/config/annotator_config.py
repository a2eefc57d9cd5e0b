"""
Configuration for the annotation cascade, training and evaluation
"""
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, FrozenSet, Mapping, Tuple

from speech_annotator.errors import ConfigError

from .constants import (
    CONVERGENCE_TOL,
    DEFAULT_FALSE_START_MARKER,
    DEFAULT_FILLED_PAUSES,
    DEFAULT_FOLDS,
    DEFAULT_IGNORE_STRINGS,
    DEFAULT_INTRA_WORD_PAUSE_MARKER,
    DEFAULT_PAUSE_SYMBOL,
    DEFAULT_SEED,
    DISCOURSE_LABEL,
    DISCOURSE_THRESHOLD,
    L2_SIGMA,
    LENGTHENING_K,
    MAX_ITERATIONS,
    MAX_REPETITION_LENGTH,
    PSU_THRESHOLD_MS,
    SHORT_PAUSE_MAX_MS,
)

if TYPE_CHECKING:
    from speech_annotator.preprocessing.tokenizer import SplitRule

PAUSE_MODES = ("threshold", "distribution")


def _split_list(value: str) -> FrozenSet[str]:
    return frozenset(item.strip() for item in value.split(",") if item.strip())


@dataclass(frozen=True)
class TokenizerConfig:
    """Transcription conventions and pause settings"""
    filled_pause_forms: FrozenSet[str] = frozenset(DEFAULT_FILLED_PAUSES)
    false_start_marker: str = DEFAULT_FALSE_START_MARKER
    intra_word_pause_marker: str = DEFAULT_INTRA_WORD_PAUSE_MARKER
    ignore_strings: FrozenSet[str] = frozenset(DEFAULT_IGNORE_STRINGS)
    pause_symbol: str = DEFAULT_PAUSE_SYMBOL
    split_rules: Tuple["SplitRule", ...] = ()
    short_pause_max_ms: int = SHORT_PAUSE_MAX_MS
    psu_threshold_ms: int = PSU_THRESHOLD_MS
    pause_mode: str = "threshold"

    def __post_init__(self):
        markers = (self.false_start_marker, self.intra_word_pause_marker, self.pause_symbol)
        if any(not marker for marker in markers):
            raise ConfigError("transcription markers must be non-empty")
        if len(set(markers)) != len(markers):
            raise ConfigError(f"transcription markers must be distinct: {markers}")
        if self.pause_mode not in PAUSE_MODES:
            raise ConfigError(f"pause_mode must be one of {PAUSE_MODES}, got {self.pause_mode!r}")
        if self.short_pause_max_ms <= 0 or self.psu_threshold_ms <= 0:
            raise ConfigError("pause thresholds must be positive")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], split_rules: Tuple["SplitRule", ...] = ()) -> 'TokenizerConfig':
        """Build a config from `key = value` pairs, unknown keys are rejected"""
        known = {
            "filled_pauses", "false_start_marker", "intra_word_pause_marker", "ignore",
            "pause_symbol", "short_pause_max_ms", "psu_threshold_ms", "pause_mode", "rules",
        }
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown tokenizer config keys: {sorted(unknown)}")
        kwargs = {"split_rules": tuple(split_rules)}
        try:
            if "filled_pauses" in values:
                kwargs["filled_pause_forms"] = _split_list(values["filled_pauses"])
            if "ignore" in values:
                kwargs["ignore_strings"] = _split_list(values["ignore"])
            for key in ("false_start_marker", "intra_word_pause_marker", "pause_symbol", "pause_mode"):
                if key in values:
                    kwargs[key] = values[key].strip()
            for key in ("short_pause_max_ms", "psu_threshold_ms"):
                if key in values:
                    kwargs[key] = int(values[key])
        except ValueError as e:
            raise ConfigError(f"invalid tokenizer config value: {e}") from e
        return cls(**kwargs)


@dataclass(frozen=True)
class DisfluencyConfig:
    """Simple and structured disfluency detection settings"""
    detect_lengthening: bool = True
    lengthening_k: float = LENGTHENING_K
    max_repetition: int = MAX_REPETITION_LENGTH

    def __post_init__(self):
        if self.lengthening_k <= 0:
            raise ConfigError("lengthening_k must be positive")
        if not 1 <= self.max_repetition <= 8:
            raise ConfigError("max_repetition must be between 1 and 8")


@dataclass(frozen=True)
class TrainingConfig:
    """CRF optimisation settings"""
    l2_sigma: float = L2_SIGMA
    max_iterations: int = MAX_ITERATIONS
    convergence_tol: float = CONVERGENCE_TOL
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.l2_sigma <= 0:
            raise ConfigError("l2_sigma must be > 0")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.convergence_tol <= 0:
            raise ConfigError("convergence_tol must be > 0")


@dataclass(frozen=True)
class PipelineConfig:
    """Complete cascade configuration"""
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    disfluency: DisfluencyConfig = field(default_factory=DisfluencyConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    discourse_label: str = DISCOURSE_LABEL
    discourse_value: str = DISCOURSE_LABEL
    discourse_threshold: float = DISCOURSE_THRESHOLD

    @property
    def psu_threshold_ms(self) -> int:
        return self.tokenizer.psu_threshold_ms

    def with_tokenizer(self, tokenizer: TokenizerConfig) -> 'PipelineConfig':
        return replace(self, tokenizer=tokenizer)

    @classmethod
    def default(cls) -> 'PipelineConfig':
        """Sound-aligned transcriptions (timing available)"""
        return cls()

    @classmethod
    def without_timing(cls) -> 'PipelineConfig':
        """Transcriptions used without the sound signal: duration cues are ignored"""
        return cls(disfluency=DisfluencyConfig(detect_lengthening=False))


@dataclass(frozen=True)
class EvaluationConfig:
    """Cross-validation protocol"""
    k: int = DEFAULT_FOLDS
    seed: int = DEFAULT_SEED
    psu_threshold_ms: int = PSU_THRESHOLD_MS
    jobs: int = 1
    pipeline: PipelineConfig = field(default_factory=PipelineConfig.default)

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
