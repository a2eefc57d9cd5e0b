"""
Lexicon, models, rules and tokenizer settings used by the cascade
"""
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

from speech_annotator.annotation.tagset import DATA_DIR, TagRegistry, default_registry, disfluency_code, parse_tag_value
from speech_annotator.config import (
    DISCOURSE_MODEL_FILE, DISFLUENCY_MODEL_FILE, FINAL_MODEL_FILE, LEXICON_FILE, MWU_FILE, OUTSIDE_LABEL,
    POST_RULES_FILE, PRELIM_MODEL_FILE, RESOURCE_DIR_ENV, TOKENIZER_CONFIG_FILE, TokenizerConfig,
)
from speech_annotator.errors import ConfigError, LabelOutsideRegistry, TagError
from speech_annotator.preprocessing.lexicon import Lexicon, load_lexicon
from speech_annotator.preprocessing.tokenizer import load_tokenizer_config
from speech_annotator.tagging.crf import CrfModel
from speech_annotator.tagging.model_io import read_model, write_model
from speech_annotator.tagging.training import TrainingResult

from .rules import PostRule, load_post_rules

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def resource_home() -> Path:
    """Directory holding the default lexicon, rules and models"""
    configured = os.environ.get(RESOURCE_DIR_ENV)
    return Path(configured) if configured else DATA_DIR


def check_pos_labels(model: CrfModel, name: str, registry: Optional[TagRegistry] = None) -> None:
    for label in model.labels:
        try:
            parse_tag_value(label, registry)
        except TagError as e:
            raise LabelOutsideRegistry(f"{name} model label {label!r}: {e}") from None


def check_disfluency_labels(model: CrfModel, name: str) -> None:
    for label in model.labels:
        if label != OUTSIDE_LABEL and disfluency_code(label) is None:
            raise LabelOutsideRegistry(f"{name} model label {label!r} is not a disfluency label")


@dataclass
class PipelineResources:
    lexicon: Lexicon
    prelim_model: CrfModel
    final_model: CrfModel
    disfluency_model: Optional[CrfModel] = None
    discourse_model: Optional[CrfModel] = None
    post_rules: Tuple[PostRule, ...] = ()
    tokenizer_config: TokenizerConfig = field(default_factory=TokenizerConfig)
    training_results: Dict[str, TrainingResult] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.post_rules = tuple(self.post_rules)

    def validate(self, registry: Optional[TagRegistry] = None) -> 'PipelineResources':
        registry = registry or default_registry()
        check_pos_labels(self.prelim_model, "preliminary", registry)
        check_pos_labels(self.final_model, "final", registry)
        if self.disfluency_model is not None:
            check_disfluency_labels(self.disfluency_model, "disfluency")
        return self

    def models(self) -> Dict[str, CrfModel]:
        files = {PRELIM_MODEL_FILE: self.prelim_model, FINAL_MODEL_FILE: self.final_model,
                 DISFLUENCY_MODEL_FILE: self.disfluency_model, DISCOURSE_MODEL_FILE: self.discourse_model}
        return {name: model for name, model in files.items() if model is not None}


def default_lexicon_files(home: Optional[Path] = None) -> Sequence[Path]:
    home = home or resource_home()
    return [path for path in (home / LEXICON_FILE, home / MWU_FILE) if path.exists()]


def load_resources(model_dir: PathLike, lexicon_files: Optional[Sequence[PathLike]] = None,
                   rules_path: Optional[PathLike] = None,
                   tokenizer_config_path: Optional[PathLike] = None) -> PipelineResources:
    """
    Models come from `model_dir`; lexicon, post-rules and tokenizer settings
    default to the resource home directory.
    """
    model_dir = Path(model_dir)
    home = resource_home()
    lexicon = load_lexicon(lexicon_files if lexicon_files is not None else default_lexicon_files(home))

    rules_path = Path(rules_path) if rules_path is not None else home / POST_RULES_FILE
    post_rules = load_post_rules(rules_path) if rules_path.exists() else []
    config_path = Path(tokenizer_config_path) if tokenizer_config_path is not None else home / TOKENIZER_CONFIG_FILE
    tokenizer_config = load_tokenizer_config(config_path) if config_path.exists() else TokenizerConfig()

    for name in (PRELIM_MODEL_FILE, FINAL_MODEL_FILE):
        if not (model_dir / name).is_file():
            raise ConfigError(f"model directory {model_dir} has no {name}")
    optional = {}
    for name in (DISFLUENCY_MODEL_FILE, DISCOURSE_MODEL_FILE):
        path = model_dir / name
        optional[name] = read_model(path) if path.exists() else None

    resources = PipelineResources(
        lexicon=lexicon,
        prelim_model=read_model(model_dir / PRELIM_MODEL_FILE),
        final_model=read_model(model_dir / FINAL_MODEL_FILE),
        disfluency_model=optional[DISFLUENCY_MODEL_FILE],
        discourse_model=optional[DISCOURSE_MODEL_FILE],
        post_rules=tuple(post_rules),
        tokenizer_config=tokenizer_config,
    )
    logger.info(f"Loaded resources: {len(lexicon)} lexicon forms, {lexicon.mwu_count} MWUs, "
                f"models {sorted(resources.models())} from {model_dir}")
    return resources.validate()


def save_resources(resources: PipelineResources, model_dir: PathLike) -> None:
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    for name, model in resources.models().items():
        write_model(model, model_dir / name)
