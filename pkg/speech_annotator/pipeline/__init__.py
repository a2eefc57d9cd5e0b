from .attributes import mwu_attributes, token_sequence
from .cascade import (
    EXCLUDED_CODES, annotate, detect_boundaries, detect_discourse_markers, excluded_from_final,
    final_pos_mwu, group_units, preliminary_pos, preprocess, run_cascade,
)
from .disfluency import MODEL_CODES, detect_simple_disfluencies, detect_structured_disfluencies
from .resources import PipelineResources, load_resources, resource_home, save_resources
from .rules import PostRule, apply_post_rules, load_post_rules, parse_post_rule, parse_post_rules
from .state import AnnotationState, StructuredDisfluency
from .training import train_resources
