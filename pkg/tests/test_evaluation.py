import json

import numpy as np
import pytest

import oracles
from templar.dtw import DtwOptions
from templar.errors import ConfigError, ProtocolError
from templar.evaluation import (
    Corpus,
    EvalReport,
    Trial,
    Utterance,
    corpus_features,
    load_corpus,
    run_all_pairs,
    run_cross_speaker,
    run_same_speaker,
    synthesize_corpus,
    write_corpus,
)
from templar.mfcc import MfccConfig


@pytest.fixture(scope="module")
def default_corpus():
    return synthesize_corpus(seed=0)


@pytest.fixture(scope="module")
def clean_corpus():
    return synthesize_corpus(seed=3, noise_level=0.0, speaker_spread=0.0, max_stretch=0.0)


@pytest.fixture(scope="module")
def default_report(default_corpus):
    return run_all_pairs(default_corpus)


def test_synth_shape(default_corpus):
    assert len(default_corpus) == 160
    assert len(default_corpus.speakers) == 4
    assert len(default_corpus.words) == 10
    assert {u.repetition_index for u in default_corpus.utterances} == {0, 1, 2, 3}


def test_synth_deterministic():
    a = synthesize_corpus(seed=11, num_speakers=2, num_words=3, num_reps=2)
    b = synthesize_corpus(seed=11, num_speakers=2, num_words=3, num_reps=2)
    c = synthesize_corpus(seed=12, num_speakers=2, num_words=3, num_reps=2)
    assert [u.audio.samples.tobytes() for u in a.utterances] == [
        u.audio.samples.tobytes() for u in b.utterances
    ]
    assert a.utterances[0].audio != c.utterances[0].audio


def test_synth_degenerate_is_identical_across_speakers(clean_corpus):
    for w in clean_corpus.words:
        ref = clean_corpus.get("speaker1", w, 0).audio
        for s in clean_corpus.speakers:
            for r in range(4):
                assert clean_corpus.get(s, w, r).audio == ref


def test_synth_words_differ(clean_corpus):
    audios = [clean_corpus.get("speaker1", w, 0).audio for w in clean_corpus.words]
    assert all(audios[i] != audios[j] for i in range(10) for j in range(i + 1, 10))


@pytest.mark.parametrize(
    "kwargs",
    [{"num_speakers": 0}, {"num_reps": 0}, {"noise_level": -0.1}, {"speaker_spread": -1.0}],
)
def test_synth_rejects_bad_params(kwargs):
    with pytest.raises(ConfigError):
        synthesize_corpus(**kwargs)


def test_same_speaker_trial_count(default_corpus):
    report = run_same_speaker(default_corpus, "speaker2")
    assert report.total == 30
    assert {t.repetition_index for t in report.trials} == {1, 2, 3}
    assert all(t.reference_speaker == t.test_speaker == "speaker2" for t in report.trials)


def test_cross_speaker_trial_count(default_corpus):
    report = run_cross_speaker(default_corpus, "speaker3", "speaker2")
    assert report.total == 40
    assert {t.repetition_index for t in report.trials} == {0, 1, 2, 3}


def test_confusion_reconciles(default_report):
    for report in default_report.same_speaker + default_report.cross_speaker:
        conf = report.confusion
        assert conf.sum() == report.total
        for i, w in enumerate(report.words):
            assert conf[i].sum() == sum(t.true_label == w for t in report.trials)
        assert report.accuracy_percent == 100.0 * np.trace(conf) / report.total
        assert 0.0 <= report.accuracy_percent <= 100.0


def test_accuracy_arithmetic():
    trials = [Trial("a", "a" if k < 35 else "b", 0.0, "r", "t", k) for k in range(40)]
    report = EvalReport("cross-speaker", "r", "t", ("a", "b"), tuple(trials))
    assert report.accuracy_percent == 87.5
    assert report.confusion.tolist() == [[35, 5], [0, 0]]


def test_forced_35_of_40(clean_corpus):
    words = clean_corpus.words
    swapped = []
    for u in clean_corpus.utterances:
        if u.speaker_id == "speaker2" and u.repetition_index == 1 and words.index(u.word_label) < 5:
            other = words[words.index(u.word_label) + 5]
            u = Utterance(u.speaker_id, u.word_label, 1, clean_corpus.get("speaker1", other, 0).audio)
        swapped.append(u)
    corpus = Corpus(swapped, clean_corpus.words, clean_corpus.speakers)
    report = run_cross_speaker(corpus, "speaker3", "speaker2")
    assert (report.correct, report.total) == (35, 40)
    assert report.accuracy_percent == 87.5


def test_clean_corpus_is_perfect(clean_corpus):
    report = run_all_pairs(clean_corpus)
    assert report.same_speaker_mean == 100.0
    assert report.cross_speaker_mean == 100.0
    assert all(t.distance == 0.0 for r in report.same_speaker for t in r.trials)


def test_identical_speakers_give_100(default_corpus):
    dup = [
        Utterance("copy", u.word_label, u.repetition_index, u.audio)
        for u in default_corpus.for_speaker("speaker1")
    ]
    corpus = Corpus(default_corpus.for_speaker("speaker1") + dup, default_corpus.words, ("speaker1", "copy"))
    assert run_cross_speaker(corpus, "speaker1", "copy").accuracy_percent == 100.0
    both = run_all_pairs(corpus)
    assert len(both.same_speaker) == 2 and len(both.cross_speaker) == 2


def test_same_speaker_beats_cross_speaker(default_report):
    assert default_report.same_speaker_mean >= default_report.cross_speaker_mean
    assert default_report.cross_speaker_mean < 100.0
    assert len(default_report.same_speaker) == 4
    assert len(default_report.cross_speaker) == 12


def test_high_spread_not_better_than_same_speaker():
    corpus = synthesize_corpus(seed=5, num_words=6, num_reps=3, speaker_spread=0.3)
    report = run_all_pairs(corpus)
    for s, same in zip(corpus.speakers, report.same_speaker):
        cross = [r for r in report.cross_speaker if r.test_speaker == s]
        assert all(r.accuracy_percent <= same.accuracy_percent for r in cross)


def test_argmin_matches_reference_dp(default_corpus):
    # first two test words of speaker1, scored against all references in plain Python
    cfg = MfccConfig()
    feats = corpus_features(Corpus(default_corpus.for_speaker("speaker1"), default_corpus.words, ("speaker1",)), cfg)
    report = run_same_speaker(default_corpus, "speaker1", cfg, features=feats)
    refs = {w: feats[("speaker1", w, 0)].frames.astype(np.float32).astype(float).tolist() for w in default_corpus.words}
    for trial in report.trials[:4]:
        q = feats[("speaker1", trial.true_label, trial.repetition_index)].frames
        q = q.astype(np.float32).astype(float).tolist()
        scores = {w: oracles.recurrence_dtw(q, r, "euclidean") for w, r in refs.items()}
        best = min(scores, key=scores.get)
        assert trial.predicted_label == best
        assert trial.distance == pytest.approx(scores[best], rel=1e-9)


def test_reports_deterministic(default_corpus, default_report, monkeypatch):
    monkeypatch.setenv("TEMPLAR_THREADS", "4")
    again = run_all_pairs(default_corpus)
    assert json.dumps(again.to_dict()) == json.dumps(default_report.to_dict())
    assert again.to_text() == default_report.to_text()


def test_report_serialization(default_report):
    doc = json.loads(json.dumps(default_report.to_dict()))
    assert len(doc["same_speaker"]) == 4 and len(doc["cross_speaker"]) == 12
    assert doc["same_speaker"][0]["total"] == 30
    text = default_report.to_text()
    assert "Experiment 1" in text and "Experiment 2" in text
    single = default_report.cross_speaker[0].to_text()
    assert "confusion" in single


def test_protocol_errors(default_corpus):
    with pytest.raises(ProtocolError):
        run_cross_speaker(default_corpus, "speaker1", "speaker1")
    with pytest.raises(ProtocolError):
        run_same_speaker(default_corpus, "nobody")
    no_ref = Corpus(
        [u for u in default_corpus.utterances if not (u.speaker_id == "speaker1" and u.repetition_index == 0)],
        default_corpus.words,
        default_corpus.speakers,
    )
    with pytest.raises(ProtocolError):
        run_same_speaker(no_ref, "speaker1")
    with pytest.raises(ProtocolError):
        run_cross_speaker(no_ref, "speaker1", "speaker2")
    one_rep = Corpus(
        [u for u in default_corpus.utterances if u.repetition_index == 0], default_corpus.words, default_corpus.speakers
    )
    with pytest.raises(ProtocolError):
        run_same_speaker(one_rep, "speaker1")
    single = Corpus(default_corpus.for_speaker("speaker1"), default_corpus.words, ("speaker1",))
    with pytest.raises(ProtocolError):
        run_all_pairs(single)


def test_corpus_invariants(default_corpus):
    u = default_corpus.utterances[0]
    with pytest.raises(ProtocolError):
        Corpus([u, u], default_corpus.words, default_corpus.speakers)
    with pytest.raises(ProtocolError):
        Corpus([u], ("other",), default_corpus.speakers)


def test_corpus_disk_roundtrip(tmp_path):
    corpus = synthesize_corpus(seed=2, num_speakers=2, num_words=3, num_reps=2)
    assert write_corpus(corpus, tmp_path) == 12
    assert (tmp_path / "speaker1" / "word01_0.wav").is_file()
    (tmp_path / "speaker1" / "notes.txt").write_text("ignored")
    loaded = load_corpus(tmp_path)
    assert loaded.speakers == corpus.speakers
    assert loaded.words == corpus.words
    for u in corpus.utterances:
        v = loaded.get(*u.key)
        # 16-bit quantization on disk
        np.testing.assert_allclose(v.audio.samples, u.audio.samples, atol=1 / 32768)


def test_load_corpus_errors(tmp_path):
    with pytest.raises(ProtocolError):
        load_corpus(tmp_path / "missing")
    with pytest.raises(ProtocolError):
        load_corpus(tmp_path)


def test_band_option_flows_through(clean_corpus):
    report = run_same_speaker(clean_corpus, "speaker1", opts=DtwOptions(band_radius=50))
    assert report.accuracy_percent == 100.0
