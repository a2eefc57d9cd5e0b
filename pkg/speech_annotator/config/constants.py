"""
Constants used throughout the speech annotator
"""

# Output tiers
TOK_MIN = "tok-min"
POS_MIN = "pos-min"
DISFLUENCY = "disfluency"
TOK_MWU = "tok-mwu"
POS_MWU = "pos-mwu"
DISCOURSE = "discourse"
OUTPUT_TIERS = (TOK_MIN, POS_MIN, DISFLUENCY, TOK_MWU, POS_MWU, DISCOURSE)
# tok-min is carried by the token list itself
VALUE_TIERS = (POS_MIN, DISFLUENCY, TOK_MWU, POS_MWU, DISCOURSE)

# Transcription conventions
DEFAULT_PAUSE_SYMBOL = "_"
DEFAULT_FALSE_START_MARKER = "/"
DEFAULT_INTRA_WORD_PAUSE_MARKER = "="
DEFAULT_FILLED_PAUSES = ("euh", "heu", "hum", "hm", "mh")
DEFAULT_IGNORE_STRINGS = ("(rires)", "(rire)", "(toux)", "(bruit)")

# Pauses and boundaries
SHORT_PAUSE_MAX_MS = 250
PSU_THRESHOLD_MS = 500
PAUSE_SHORT = "short"
PAUSE_LONG = "long"

# Disfluency detection
LENGTHENING_K = 3.0
MAX_REPETITION_LENGTH = 4
SILENCE_LABEL = "SIL"

# Discourse markers
DISCOURSE_LABEL = "DM"
OUTSIDE_LABEL = "O"
DISCOURSE_THRESHOLD = 0.5

# CRF training
L2_SIGMA = 1.0
MAX_ITERATIONS = 200
CONVERGENCE_TOL = 1e-5
WINDOW_RADIUS = 2

# Model files
MODEL_MAGIC = "speech-annotator-crf"
MODEL_FORMAT_VERSION = 1
PRELIM_MODEL_FILE = "prelim.crf"
FINAL_MODEL_FILE = "final.crf"
DISFLUENCY_MODEL_FILE = "disfluency.crf"
DISCOURSE_MODEL_FILE = "discourse.crf"
TRAINING_LOG_FILE = "train.log"

# Resources
RESOURCE_DIR_ENV = "SPEECH_ANNOTATOR_HOME"
LEXICON_FILE = "lexicon.tsv"
MWU_FILE = "mwu.tsv"
TOKENIZER_CONFIG_FILE = "tokenizer.conf"
POST_RULES_FILE = "post_rules.txt"
TAGSET_FILE = "tagset.tsv"

# Evaluation
DEFAULT_FOLDS = 10
DEFAULT_SEED = 7
