from .constants import *
from .annotator_config import (
    DisfluencyConfig,
    EvaluationConfig,
    PipelineConfig,
    TokenizerConfig,
    TrainingConfig,
)
