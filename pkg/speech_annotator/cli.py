"""
Command-line entry point

    speech-annotator annotate --in s.TextGrid --transcription-tier transcription --models m/ --out o/
    speech-annotator train --gold g/ --out m/
    speech-annotator evaluate --gold g/ --k 10 --psu-threshold 500 --seed 7
    speech-annotator convert --in s.TextGrid --out s.tsv
    speech-annotator validate --in o/s.TextGrid

Every flag can also be set in a ``key = value`` file given with --config
(keys are the long flag names without dashes prefix); flags win over the file.
Exit status: 0 on success, 1 on data errors, 2 on usage errors.
"""
import argparse
import configparser
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from speech_annotator.annotation.document import Document, DocumentMetadata, new_document, validate
from speech_annotator.config import (
    DEFAULT_FOLDS, DEFAULT_SEED, TOKENIZER_CONFIG_FILE, TRAINING_LOG_FILE, EvaluationConfig,
    PipelineConfig, TokenizerConfig, TrainingConfig,
)
from speech_annotator.corpus_io.textgrid import IntervalTier, read_textgrid, write_textgrid
from speech_annotator.corpus_io.tiers import (
    document_from_tiers, document_to_tiers, speaker_intervals, speakers_in, tier_name,
)
from speech_annotator.corpus_io.tsv import read_tsv, write_tsv
from speech_annotator.errors import AnnotatorError, ConfigError, FormatError, InvariantError
from speech_annotator.evaluation.cross_validation import cross_validate
from speech_annotator.evaluation.report import format_confusion, format_report
from speech_annotator.evaluation.synthetic import generate_corpus
from speech_annotator.observability import configure_logging
from speech_annotator.pipeline.cascade import annotate
from speech_annotator.pipeline.resources import (
    PipelineResources, default_lexicon_files, load_resources, resource_home, save_resources,
)
from speech_annotator.pipeline.rules import load_post_rules
from speech_annotator.pipeline.training import train_resources
from speech_annotator.preprocessing.lexicon import load_lexicon
from speech_annotator.preprocessing.tokenizer import load_tokenizer_config, tokenize

logger = logging.getLogger(__name__)

COMMANDS = ("annotate", "train", "evaluate", "convert", "validate")
FORMATS = ("textgrid", "tsv")
SUFFIXES = {".textgrid": "textgrid", ".tsv": "tsv"}
CONFIG_SECTION = "speech-annotator"


@dataclass
class CliConfig:
    """Flags merged over the config file"""
    command: str
    inputs: List[Path] = field(default_factory=list)
    out: Optional[Path] = None
    format: Optional[str] = None
    transcription_tier: str = "transcription"
    speaker_tier: Optional[str] = None
    lexicon: List[Path] = field(default_factory=list)
    models: Optional[Path] = None
    rules: Optional[Path] = None
    tokenizer_config: Optional[Path] = None
    gold: Optional[Path] = None
    seed: int = DEFAULT_SEED
    k: int = DEFAULT_FOLDS
    psu_threshold: Optional[int] = None
    jobs: int = 1
    no_timing: bool = False
    max_iterations: Optional[int] = None
    l2_sigma: Optional[float] = None
    synthetic: Optional[int] = None
    confusion: bool = False

    def tokenizer(self) -> TokenizerConfig:
        path = self.tokenizer_config or resource_home() / TOKENIZER_CONFIG_FILE
        tokenizer = load_tokenizer_config(path) if path.exists() else TokenizerConfig()
        return self.with_threshold(tokenizer)

    def with_threshold(self, tokenizer: TokenizerConfig) -> TokenizerConfig:
        if self.psu_threshold is not None:
            tokenizer = replace(tokenizer, psu_threshold_ms=self.psu_threshold)
        return tokenizer

    def pipeline(self, tokenizer: TokenizerConfig) -> PipelineConfig:
        base = PipelineConfig.without_timing() if self.no_timing else PipelineConfig.default()
        training = TrainingConfig(seed=self.seed)
        if self.max_iterations is not None:
            training = replace(training, max_iterations=self.max_iterations)
        if self.l2_sigma is not None:
            training = replace(training, l2_sigma=self.l2_sigma)
        return replace(base, tokenizer=tokenizer, training=training)


# flag name -> (CliConfig field, converter for config-file values)
_FILE_KEYS: Dict[str, Tuple[str, Callable[[str], object]]] = {
    "in": ("inputs", lambda v: [Path(p) for p in v.split()]),
    "out": ("out", Path),
    "format": ("format", str.strip),
    "transcription-tier": ("transcription_tier", str.strip),
    "speaker-tier": ("speaker_tier", str.strip),
    "lexicon": ("lexicon", lambda v: [Path(p) for p in v.split()]),
    "models": ("models", Path),
    "rules": ("rules", Path),
    "tokenizer-config": ("tokenizer_config", Path),
    "gold": ("gold", Path),
    "seed": ("seed", int),
    "k": ("k", int),
    "psu-threshold": ("psu_threshold", int),
    "jobs": ("jobs", int),
    "no-timing": ("no_timing", lambda v: v.strip().lower() in ("1", "true", "yes", "on")),
    "max-iterations": ("max_iterations", int),
    "l2-sigma": ("l2_sigma", float),
    "synthetic": ("synthetic", int),
}


def read_config_file(path: Path) -> Dict[str, object]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string(f"[{CONFIG_SECTION}]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from None
    values = {}
    for key, raw in parser[CONFIG_SECTION].items():
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        name, convert = _FILE_KEYS[key]
        try:
            values[name] = convert(raw)
        except ValueError as e:
            raise ConfigError(f"{path}: bad value for {key!r}: {e}") from None
    return values


def _add_common(parser: argparse.ArgumentParser, *flags: str) -> None:
    options = {
        "in": dict(dest="inputs", nargs="+", type=Path, help="input TextGrid or TSV files"),
        "out": dict(type=Path, help="output directory (file for convert and evaluate)"),
        "format": dict(choices=FORMATS, help="output format (default: same as input)"),
        "transcription-tier": dict(help="name of the orthographic transcription tier"),
        "speaker-tier": dict(help="name of the speaker identification tier"),
        "lexicon": dict(nargs="+", type=Path, help="lexicon and MWU files"),
        "models": dict(type=Path, help="directory of trained models"),
        "rules": dict(type=Path, help="post-rule file"),
        "tokenizer-config": dict(type=Path, help="tokenizer config file"),
        "gold": dict(type=Path, help="gold-annotated file or directory"),
        "seed": dict(type=int),
        "k": dict(type=int, help="number of folds"),
        "psu-threshold": dict(type=int, help="PSU pause threshold in ms"),
        "jobs": dict(type=int, help="parallel workers"),
        "no-timing": dict(action="store_true", default=None, help="ignore durations (no lengthening detection)"),
        "max-iterations": dict(type=int),
        "l2-sigma": dict(type=float),
        "synthetic": dict(type=int, metavar="N", help="evaluate on a synthetic corpus of N tokens"),
        "confusion": dict(action="store_true", default=None, help="append the most frequent tag confusions"),
    }
    for flag in flags:
        parser.add_argument(f"--{flag}", **options[flag])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speech-annotator",
                                     description="Six-tier POS, MWU and disfluency annotation of speech transcriptions")
    parser.add_argument("--config", type=Path, help="key = value file with default flag values")
    parser.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    commands = parser.add_subparsers(dest="command", required=True)

    resources = ("lexicon", "rules", "tokenizer-config", "psu-threshold", "no-timing")
    _add_common(commands.add_parser("annotate", help="annotate transcriptions"),
                "in", "out", "format", "transcription-tier", "speaker-tier", "models", "jobs", *resources)
    _add_common(commands.add_parser("train", help="train the cascade models from gold data"),
                "gold", "out", "seed", "max-iterations", "l2-sigma", *resources)
    _add_common(commands.add_parser("evaluate", help="k-fold cross-validation"),
                "gold", "out", "k", "seed", "jobs", "synthetic", "max-iterations", "l2-sigma", "confusion", *resources)
    _add_common(commands.add_parser("convert", help="convert between six-tier TextGrid and TSV"),
                "in", "out", "format")
    _add_common(commands.add_parser("validate", help="check tier congruence of annotated files"), "in")
    return parser


def merge_config(args: argparse.Namespace) -> CliConfig:
    values = read_config_file(args.config) if args.config else {}
    for name in CliConfig.__dataclass_fields__:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    values["command"] = args.command
    return CliConfig(**values)


def _format_of(path: Path) -> str:
    try:
        return SUFFIXES[path.suffix.lower()]
    except KeyError:
        raise ConfigError(f"{path}: unsupported file type (expected .TextGrid or .tsv)") from None


def _suffix(output_format: str) -> str:
    return ".TextGrid" if output_format == "textgrid" else ".tsv"


def _require(value, flag: str, command: str):
    if value is None or value == []:
        raise _Usage(f"{command} requires --{flag}")
    return value


class _Usage(Exception):
    pass


# reading

def read_documents(path: Path, tokenizer: Optional[TokenizerConfig] = None, transcription_tier: Optional[str] = None,
                   speaker_tier: Optional[str] = None, subcorpus: str = "",
                   timed: bool = True, repair: bool = True) -> Tuple[List[Document], Tuple[float, float]]:
    """
    Documents of a file, one per speaker, plus the time bounds of the file.
    TextGrids with the transcription tier are tokenized; otherwise the
    six-tier output layout is expected, read as written when `repair` is off.
    """
    data = path.read_bytes()
    sample = path.stem
    if _format_of(path) == "tsv":
        doc = read_tsv(data, source=str(path))
        metadata = replace(doc.metadata, sample_id=doc.metadata.sample_id or sample,
                           subcorpus_id=doc.metadata.subcorpus_id or subcorpus)
        doc = replace(doc, metadata=metadata, timed=doc.timed and timed)
        bounds = (doc.tokens[0].t_min, doc.tokens[-1].t_max) if doc.tokens else (0.0, 0.0)
        return [doc], bounds

    tiers = read_textgrid(data, source=str(path))
    bounds = (min((t.xmin for t in tiers), default=0.0), max((t.xmax for t in tiers), default=0.0))
    names = {tier.name for tier in tiers}
    tokenizer = tokenizer or TokenizerConfig()
    if transcription_tier and transcription_tier in names:
        documents = []
        for speaker, intervals in sorted(speaker_intervals(tiers, transcription_tier, speaker_tier, str(path)).items()):
            metadata = DocumentMetadata(sample, subcorpus, tokenizer.pause_symbol)
            tokens = tokenize(intervals, tokenizer, speaker)
            documents.append(new_document(tokens, metadata, timed))
        return documents, bounds

    speakers = speakers_in(tiers)
    if not speakers:
        raise FormatError(f"{path}: neither a {transcription_tier!r} tier nor six-tier output")
    multi = speakers != [""]
    documents = [
        document_from_tiers(tiers, DocumentMetadata(sample, subcorpus, tokenizer.pause_symbol), speaker, multi, repair)
        for speaker in speakers
    ]
    return [replace(doc, timed=timed) for doc in documents], bounds


def gold_files(path: Path) -> List[Tuple[Path, str]]:
    """(file, sub-corpus) pairs; the sub-corpus is the directory below `path` holding the file"""
    if path.is_file():
        return [(path, "")]
    if not path.is_dir():
        raise ConfigError(f"{path}: no such file or directory")
    files = []
    for candidate in sorted(path.rglob("*")):
        if candidate.is_file() and candidate.suffix.lower() in SUFFIXES:
            relative = candidate.relative_to(path)
            files.append((candidate, relative.parts[0] if len(relative.parts) > 1 else ""))
    if not files:
        raise ConfigError(f"{path}: no .TextGrid or .tsv files")
    return files


def read_gold(path: Path, tokenizer: TokenizerConfig) -> List[Document]:
    documents = []
    for file, subcorpus in gold_files(path):
        documents.extend(read_documents(file, tokenizer, subcorpus=subcorpus)[0])
    logger.info(f"Read {len(documents)} gold documents from {path}")
    return documents


# writing

def render(documents: Sequence[Document], output_format: str, bounds: Tuple[float, float]) -> Dict[str, bytes]:
    """File suffix (``@speaker`` for per-speaker TSV) -> content"""
    multi = len(documents) > 1
    if output_format == "textgrid":
        tiers: List[IntervalTier] = []
        for doc in documents:
            tiers.extend(document_to_tiers(doc, bounds[0], bounds[1], multi_speaker=multi))
        return {"": write_textgrid(tiers, bounds[0], bounds[1])}
    outputs = {}
    for doc in documents:
        speaker = doc.tokens[0].speaker if doc.tokens else ""
        outputs[tier_name("", speaker, multi)] = write_tsv(doc)
    return outputs


def write_outputs(source: Path, out_dir: Path, outputs: Dict[str, bytes], output_format: str) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for speaker_suffix, content in outputs.items():
        target = out_dir / f"{source.stem}{speaker_suffix}{_suffix(output_format)}"
        if target.resolve() == source.resolve():
            raise ConfigError(f"refusing to overwrite the input file {source}")
        target.write_bytes(content)
        written.append(target)
    return written


# commands

def run_annotate(cfg: CliConfig) -> int:
    inputs = _require(cfg.inputs, "in", "annotate")
    out_dir = _require(cfg.out, "out", "annotate")
    resources = load_resources(cfg.models or resource_home() / "models",
                               lexicon_files=cfg.lexicon or None, rules_path=cfg.rules,
                               tokenizer_config_path=cfg.tokenizer_config)
    pipeline = cfg.pipeline(cfg.with_threshold(resources.tokenizer_config))

    def process(path: Path) -> List[Path]:
        documents, bounds = read_documents(path, pipeline.tokenizer, cfg.transcription_tier, cfg.speaker_tier,
                                           timed=not cfg.no_timing)
        annotated = [annotate(doc, resources, pipeline) for doc in documents]
        written = write_outputs(path, out_dir, render(annotated, cfg.format or _format_of(path), bounds),
                                cfg.format or _format_of(path))
        logger.info(f"Annotated {path}: {sum(len(d.tokens) for d in annotated)} tokens -> "
                    f"{', '.join(str(p) for p in written)}")
        return written

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as executor:
        list(executor.map(process, inputs))
    return 0


def _lexicon_files(cfg: CliConfig) -> List[Path]:
    return list(cfg.lexicon) if cfg.lexicon else list(default_lexicon_files())


def training_log(resources: PipelineResources) -> str:
    """Per-model optimisation trace, free of timestamps"""
    lines = []
    for name, result in sorted(resources.training_results.items()):
        lines.append(f"model\t{name}")
        lines.append(f"labels\t{result.model.n_labels}\tparameters\t{result.model.n_parameters}")
        lines.append(f"iterations\t{result.iterations}\tconverged\t{str(result.converged).lower()}")
        lines.append(f"message\t{result.message}")
        lines.extend(f"objective\t{k}\t{value!r}" for k, value in enumerate(result.objective_history))
    return "\n".join(lines) + "\n"


def run_train(cfg: CliConfig) -> int:
    gold_path = _require(cfg.gold, "gold", "train")
    out_dir = _require(cfg.out, "out", "train")
    tokenizer = cfg.tokenizer()
    pipeline = cfg.pipeline(tokenizer)
    lexicon = load_lexicon(_lexicon_files(cfg))
    rules = load_post_rules(cfg.rules) if cfg.rules else []
    resources = train_resources(read_gold(gold_path, tokenizer), lexicon, pipeline, rules)
    save_resources(resources, out_dir)
    (out_dir / TRAINING_LOG_FILE).write_text(training_log(resources), encoding="utf-8")
    logger.info(f"Trained {len(resources.models())} models into {out_dir}")
    return 0


def run_evaluate(cfg: CliConfig) -> int:
    tokenizer = cfg.tokenizer()
    pipeline = cfg.pipeline(tokenizer)
    if cfg.synthetic:
        corpus = generate_corpus(cfg.synthetic, seed=cfg.seed)
        documents, lexicon = corpus.documents, corpus.lexicon
    else:
        documents = read_gold(_require(cfg.gold, "gold", "evaluate"), tokenizer)
        lexicon = load_lexicon(_lexicon_files(cfg))
    rules = load_post_rules(cfg.rules) if cfg.rules else []
    evaluation = EvaluationConfig(k=cfg.k, seed=cfg.seed, psu_threshold_ms=pipeline.psu_threshold_ms,
                                  jobs=max(1, cfg.jobs), pipeline=pipeline)
    result = cross_validate(documents, lexicon, evaluation, rules)
    report = format_report(result)
    if cfg.confusion:
        report += "\n" + format_confusion(result)
    if cfg.out:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(report, encoding="utf-8")
        logger.info(f"Wrote metrics report to {cfg.out}")
    else:
        sys.stdout.write(report)
    return 0


def run_convert(cfg: CliConfig) -> int:
    inputs = _require(cfg.inputs, "in", "convert")
    out = _require(cfg.out, "out", "convert")
    if len(inputs) != 1:
        raise _Usage("convert takes exactly one --in file")
    source = inputs[0]
    source_format = _format_of(source)
    target_format = cfg.format or ("tsv" if source_format == "textgrid" else "textgrid")
    documents, bounds = read_documents(source)
    outputs = render(documents, target_format, bounds)
    if out.suffix.lower() in SUFFIXES:
        if len(outputs) != 1:
            raise ConfigError(f"{source} holds {len(outputs)} speakers; give an output directory")
        if out.resolve() == source.resolve():
            raise ConfigError(f"refusing to overwrite the input file {source}")
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(next(iter(outputs.values())))
    else:
        write_outputs(source, out, outputs, target_format)
    return 0


def run_validate(cfg: CliConfig) -> int:
    status = 0
    for path in _require(cfg.inputs, "in", "validate"):
        try:
            documents, _ = read_documents(path, repair=False)
        except InvariantError as e:
            # intervals off the tok-min boundaries cannot become spans
            print(f"{path}: {e}")
            status = 1
            continue
        for doc in documents:
            violations = validate(doc)
            speaker = doc.tokens[0].speaker if doc.tokens else ""
            name = f"{path}{'@' + speaker if speaker else ''}"
            for violation in violations:
                print(f"{name}: {violation}")
            if violations:
                status = 1
            else:
                print(f"{name}: ok ({len(doc.tokens)} tokens)")
    return status


HANDLERS = {
    "annotate": run_annotate,
    "train": run_train,
    "evaluate": run_evaluate,
    "convert": run_convert,
    "validate": run_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(getattr(logging, args.log_level))
    try:
        cfg = merge_config(args)
        return HANDLERS[cfg.command](cfg)
    except _Usage as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2
    except AnnotatorError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except OSError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return 1
