import pytest

from speech_annotator.cli import build_parser, main, merge_config
from speech_annotator.config import POS_MIN
from speech_annotator.corpus_io.textgrid import Interval, IntervalTier, read_textgrid, write_textgrid
from speech_annotator.corpus_io.tsv import read_tsv, write_tsv
from speech_annotator.evaluation.synthetic import generate_corpus
from speech_annotator.preprocessing.lexicon import dump_lexicon


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Gold TSV files by sub-corpus, their lexicon and models trained through the CLI"""
    root = tmp_path_factory.mktemp("cli")
    corpus = generate_corpus(800, seed=3, document_tokens=200)
    for doc in corpus.documents:
        directory = root / "gold" / doc.metadata.subcorpus_id
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{doc.metadata.sample_id}.tsv").write_bytes(write_tsv(doc))
    lexicon = root / "lexicon.tsv"
    lexicon.write_text(dump_lexicon(corpus.lexicon), encoding="utf-8")
    status = main(["train", "--gold", str(root / "gold"), "--out", str(root / "models"),
                   "--lexicon", str(lexicon), "--max-iterations", "30"])
    assert status == 0
    return root


@pytest.fixture
def transcription(tmp_path):
    path = tmp_path / "interview.TextGrid"
    tiers = [
        IntervalTier("transcription", 0.0, 3.0, [
            Interval(0.0, 1.2, "il mange le pain"),
            Interval(1.2, 2.0, ""),
            Interval(2.0, 3.0, "elle est euh elle est contente"),
        ]),
        IntervalTier("speaker", 0.0, 3.0, [Interval(0.0, 1.6, "A"), Interval(1.6, 3.0, "B")]),
    ]
    path.write_bytes(write_textgrid(tiers))
    return path


def annotate_args(workspace, source, out, *extra):
    return ["annotate", "--in", str(source), "--out", str(out), "--models", str(workspace / "models"),
            "--lexicon", str(workspace / "lexicon.tsv"), *extra]


def test_train_writes_models_and_log(workspace):
    models = workspace / "models"
    assert {path.name for path in models.iterdir()} == {"prelim.crf", "final.crf", "discourse.crf", "train.log"}
    log = (models / "train.log").read_text(encoding="utf-8").splitlines()
    assert log[0] == "model\tdiscourse.crf"
    assert log[1].startswith("labels\t2\tparameters\t")
    assert any(line.startswith("objective\t0\t") for line in log)


def test_annotate_textgrid_and_validate(workspace, transcription, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(annotate_args(workspace, transcription, out)) == 0
    result = out / "interview.TextGrid"
    names = {tier.name for tier in read_textgrid(result.read_bytes())}
    assert {"tok-min", "pos-min", "disfluency", "tok-mwu", "pos-mwu", "discourse"} <= names

    assert main(["validate", "--in", str(result)]) == 0
    assert "ok (" in capsys.readouterr().out


def test_annotate_per_speaker_tsv(workspace, transcription, tmp_path):
    out = tmp_path / "out"
    assert main(annotate_args(workspace, transcription, out, "--speaker-tier", "speaker", "--format", "tsv")) == 0
    assert sorted(path.name for path in out.iterdir()) == ["interview@A.tsv", "interview@B.tsv"]
    doc = read_tsv((out / "interview@B.tsv").read_bytes())
    assert [token.text for token in doc.tokens] == ["elle", "est", "euh", "elle", "est", "contente"]
    assert doc.values("disfluency")[2] == "FIL"
    assert all(token.speaker == "B" for token in doc.tokens)


def test_convert_both_ways(workspace, transcription, tmp_path):
    out = tmp_path / "out"
    assert main(annotate_args(workspace, transcription, out)) == 0
    converted = tmp_path / "converted.tsv"
    assert main(["convert", "--in", str(out / "interview.TextGrid"), "--out", str(converted)]) == 0
    assert main(["convert", "--in", str(converted), "--out", str(tmp_path / "back")]) == 0
    first = read_tsv(converted.read_bytes())
    back = tmp_path / "again.tsv"
    assert main(["convert", "--in", str(tmp_path / "back" / "converted.TextGrid"), "--out", str(back)]) == 0
    assert read_tsv(back.read_bytes()).values(POS_MIN) == first.values(POS_MIN)


def test_refuses_to_overwrite_the_input(workspace, tmp_path):
    source = next((workspace / "gold" / "conversation").iterdir())
    copy = tmp_path / source.name
    copy.write_bytes(source.read_bytes())
    assert main(annotate_args(workspace, copy, tmp_path)) == 1
    assert copy.read_bytes() == source.read_bytes()
    assert main(["convert", "--in", str(copy), "--out", str(copy)]) == 1


def test_evaluate_gold_directory(workspace, capsys):
    status = main(["evaluate", "--gold", str(workspace / "gold"), "--lexicon", str(workspace / "lexicon.tsv"),
                   "--k", "2", "--max-iterations", "10", "--confusion"])
    assert status == 0
    report = capsys.readouterr().out
    assert 'speech_annotator_eval_pos_precision_full{fold="2"}' in report
    assert "gold\tpredicted\tcount" in report


def test_evaluate_synthetic_corpus(tmp_path):
    report = tmp_path / "reports" / "cv.txt"
    assert main(["evaluate", "--synthetic", "500", "--k", "2", "--max-iterations", "5", "--out", str(report)]) == 0
    assert "speech_annotator_eval_folds 2.0" in report.read_text(encoding="utf-8")


@pytest.mark.parametrize("argv", [[], ["transcribe"], ["annotate", "--out", "x"], ["train", "--out", "x"],
                                  ["convert", "--in", "a.tsv", "b.tsv", "--out", "c"]])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_data_errors(transcription, tmp_path):
    out = str(tmp_path / "out")
    assert main(["annotate", "--in", str(transcription), "--out", out, "--models", str(tmp_path / "none")]) == 1
    notes = tmp_path / "notes.txt"
    notes.write_text("il mange\n", encoding="utf-8")
    assert main(["validate", "--in", str(notes)]) == 1
    assert main(["validate", "--in", str(tmp_path / "missing.tsv")]) == 1
    other = tmp_path / "other.TextGrid"
    other.write_bytes(write_textgrid([IntervalTier("words", 0.0, 1.0, [Interval(0.0, 1.0, "oui")])]))
    assert main(["validate", "--in", str(other)]) == 1


def write_six_tiers(path, pos_min, tok_mwu):
    words = [Interval(0.0, 0.3, "le"), Interval(0.3, 0.6, "chat"), Interval(0.6, 0.9, "dort")]
    path.write_bytes(write_textgrid([
        IntervalTier("tok-min", 0.0, 0.9, words),
        IntervalTier("pos-min", 0.0, 0.9, pos_min),
        IntervalTier("tok-mwu", 0.0, 0.9, tok_mwu),
    ]))
    return path


def test_validate_lists_a_gap_in_the_units(tmp_path, capsys):
    path = write_six_tiers(
        tmp_path / "gap.TextGrid",
        [Interval(0.0, 0.3, "DET:def"), Interval(0.3, 0.6, "NOM"), Interval(0.6, 0.9, "VER:pres")],
        [Interval(0.0, 0.3, "le"), Interval(0.3, 0.6, "chat"), Interval(0.6, 0.9, "")],
    )
    assert main(["validate", "--in", str(path)]) == 1
    out = capsys.readouterr().out
    assert "partition violation on tok-mwu at 2: units cover [0, 2) of 3 tokens" in out
    assert "ok (" not in out


def test_validate_lists_a_tag_over_two_tokens(tmp_path, capsys):
    path = write_six_tiers(
        tmp_path / "wide.TextGrid",
        [Interval(0.0, 0.6, "DET:def"), Interval(0.6, 0.9, "VER:pres")],
        [Interval(0.0, 0.3, "le"), Interval(0.3, 0.6, "chat"), Interval(0.6, 0.9, "dort")],
    )
    assert main(["validate", "--in", str(path)]) == 1
    out = capsys.readouterr().out
    assert "congruence violation on pos-min at 0: span (0, 2)" in out
    assert "tok-mwu" not in out


def test_validate_reports_intervals_off_the_token_boundaries(tmp_path, capsys):
    path = write_six_tiers(
        tmp_path / "shifted.TextGrid",
        [Interval(0.0, 0.45, "DET:def"), Interval(0.45, 0.9, "NOM")],
        [Interval(0.0, 0.9, "le chat dort")],
    )
    assert main(["validate", "--in", str(path)]) == 1
    assert "not aligned with tok-min" in capsys.readouterr().out


def test_config_file_under_flags(tmp_path):
    config = tmp_path / "annotator.conf"
    config.write_text("# defaults\nseed = 3\nk = 4\npsu-threshold = 300\nno-timing = yes\n", encoding="utf-8")
    args = build_parser().parse_args(["--config", str(config), "evaluate", "--k", "6"])
    cfg = merge_config(args)
    assert (cfg.seed, cfg.k, cfg.psu_threshold, cfg.no_timing, cfg.jobs) == (3, 6, 300, True, 1)
    assert cfg.pipeline(cfg.tokenizer()).psu_threshold_ms == 300
    assert not cfg.pipeline(cfg.tokenizer()).disfluency.detect_lengthening


def test_bad_config_file(tmp_path):
    config = tmp_path / "annotator.conf"
    config.write_text("colour = red\n", encoding="utf-8")
    assert main(["--config", str(config), "validate", "--in", "x.tsv"]) == 1
    config.write_text("seed = many\n", encoding="utf-8")
    assert main(["--config", str(config), "validate", "--in", "x.tsv"]) == 1


def test_identical_runs_give_identical_bytes(workspace, transcription, tmp_path):
    again = tmp_path / "models"
    assert main(["train", "--gold", str(workspace / "gold"), "--out", str(again),
                 "--lexicon", str(workspace / "lexicon.tsv"), "--max-iterations", "30"]) == 0
    for path in (workspace / "models").iterdir():
        assert (again / path.name).read_bytes() == path.read_bytes()

    outputs = []
    for run in ("first", "second"):
        assert main(annotate_args(workspace, transcription, tmp_path / run, "--format", "tsv")) == 0
        outputs.append((tmp_path / run / "interview.tsv").read_bytes())
    assert outputs[0] == outputs[1]
