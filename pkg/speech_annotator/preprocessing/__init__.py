from .tokenizer import (
    SplitRule,
    classify_pauses,
    detokenize,
    load_split_rules,
    load_tokenizer_config,
    order_rules,
    split_word,
    tokenize,
)
from .lexicon import (
    Candidates,
    Lexicon,
    MwuMatch,
    dump_lexicon,
    load_lexicon,
    lookup,
    mwu_matches,
)
