from .tagset import (
    DisfluencyCode,
    DisfluencyLabel,
    DisfluencyMarker,
    PosTag,
    TagRegistry,
    default_registry,
    disfluency_code,
    format_disfluency_label,
    format_pos_tag,
    parse_disfluency_label,
    parse_pos_tag,
    parse_tag_value,
    project_pos_tag,
    project_tag_value,
)
from .document import (
    Document,
    DocumentMetadata,
    Segment,
    TierValue,
    Token,
    Violation,
    ViolationRule,
    group_mwu,
    new_document,
    psu_segments,
    slice_document,
    validate,
)
