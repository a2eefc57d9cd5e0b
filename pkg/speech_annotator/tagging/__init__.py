from .features import (
    DEFAULT_TEMPLATES,
    FINAL_TEMPLATES,
    TRANSITION,
    Arity,
    FeatureTemplate,
    LabeledSequence,
    extract_features,
    position_attributes,
    word_shape,
)
from .crf import (
    CrfModel,
    EncodedBatch,
    decode,
    encode,
    forward_backward,
    marginals,
    objective_and_gradient,
    sequence_score,
)
from .training import TrainingResult, fit, train
from .model_io import load_model, read_model, save_model, write_model
