from .textgrid import (
    Interval,
    IntervalTier,
    check_tier,
    decode_textgrid,
    fill_gaps,
    format_time,
    read_textgrid,
    write_textgrid,
)
from .tiers import (
    document_from_tiers,
    document_to_tiers,
    find_tier,
    speaker_intervals,
    speakers_in,
    tier_name,
)
from .tsv import COLUMNS, read_tsv, write_tsv
