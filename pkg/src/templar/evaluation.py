"""Experiment protocols, accuracy reports and a synthetic word corpus.

Experiment 1 (same speaker): repetition 0 of each word is the reference,
every other repetition of the same speaker is a test trial.

Experiment 2 (cross speaker): repetition 0 of each word of the reference
speaker is the reference, *every* repetition of the test speaker is a trial.

A trial is correct when the predicted word label equals the true label,
regardless of which speaker's template won.
"""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, TrimConfig, read_wav, write_wav
from .dtw import DtwOptions
from .errors import ConfigError, ProtocolError
from .mfcc import FeatureMatrix, MfccConfig
from .recognizer import recognize_features, thread_count, utterance_features
from .template_store import Template, TemplateStore, add_template

SYNTH_RATE_HZ = 16000


@dataclass(frozen=True)
class Utterance:
    speaker_id: str
    word_label: str
    repetition_index: int
    audio: AudioBuffer

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.speaker_id, self.word_label, self.repetition_index)


def natural_key(s: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", s)]


@dataclass(frozen=True)
class Corpus:
    utterances: tuple[Utterance, ...]
    words: tuple[str, ...]
    speakers: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "speakers", tuple(self.speakers))
        keys = set()
        vocab = set(self.words)
        for u in self.utterances:
            if u.key in keys:
                raise ProtocolError(f"duplicate utterance {u.key}")
            if u.word_label not in vocab:
                raise ProtocolError(f"word {u.word_label!r} is not in the vocabulary")
            keys.add(u.key)

    @classmethod
    def from_utterances(cls, utterances) -> "Corpus":
        """Build a corpus whose word and speaker order is first-seen order."""
        utterances = tuple(utterances)
        words = tuple(dict.fromkeys(u.word_label for u in utterances))
        speakers = tuple(dict.fromkeys(u.speaker_id for u in utterances))
        return cls(utterances, words, speakers)

    def __len__(self):
        return len(self.utterances)

    def for_speaker(self, speaker_id: str) -> list[Utterance]:
        return [u for u in self.utterances if u.speaker_id == speaker_id]

    def get(self, speaker_id: str, word_label: str, repetition_index: int) -> Utterance | None:
        for u in self.utterances:
            if u.key == (speaker_id, word_label, repetition_index):
                return u
        return None


@dataclass(frozen=True)
class Trial:
    true_label: str
    predicted_label: str
    distance: float
    reference_speaker: str
    test_speaker: str
    repetition_index: int

    @property
    def correct(self) -> bool:
        return self.true_label == self.predicted_label


@dataclass(frozen=True)
class EvalReport:
    experiment: str
    reference_speaker: str
    test_speaker: str
    words: tuple[str, ...]
    trials: tuple[Trial, ...]

    @property
    def total(self) -> int:
        return len(self.trials)

    @property
    def correct(self) -> int:
        return sum(t.correct for t in self.trials)

    @property
    def accuracy_percent(self) -> float:
        return 100.0 * self.correct / self.total

    @property
    def confusion(self) -> np.ndarray:
        """Counts indexed ``[true word, predicted word]`` in vocabulary order."""
        index = {w: i for i, w in enumerate(self.words)}
        mat = np.zeros((len(self.words), len(self.words)), dtype=int)
        for t in self.trials:
            mat[index[t.true_label], index[t.predicted_label]] += 1
        return mat

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "reference_speaker": self.reference_speaker,
            "test_speaker": self.test_speaker,
            "total": self.total,
            "correct": self.correct,
            "accuracy_percent": self.accuracy_percent,
            "words": list(self.words),
            "confusion": self.confusion.tolist(),
            "trials": [
                {
                    "true_label": t.true_label,
                    "predicted_label": t.predicted_label,
                    "distance": _json_float(t.distance),
                    "reference_speaker": t.reference_speaker,
                    "test_speaker": t.test_speaker,
                    "repetition_index": t.repetition_index,
                }
                for t in self.trials
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"{self.experiment}: reference={self.reference_speaker} test={self.test_speaker}",
            f"accuracy {self.correct}/{self.total} = {self.accuracy_percent:.2f}%",
            "",
            "confusion (rows: true word, columns: predicted word)",
        ]
        width = max(len(w) for w in self.words) + 2
        lines.append(" " * width + "".join(f"{i:>4d}" for i in range(len(self.words))))
        for i, (w, row) in enumerate(zip(self.words, self.confusion)):
            lines.append(f"{w:<{width}}" + "".join(f"{c:>4d}" for c in row) + f"   [{i}]")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AllPairsReport:
    same_speaker: tuple[EvalReport, ...]
    cross_speaker: tuple[EvalReport, ...]

    @property
    def same_speaker_mean(self) -> float:
        return float(np.mean([r.accuracy_percent for r in self.same_speaker]))

    @property
    def cross_speaker_mean(self) -> float:
        return float(np.mean([r.accuracy_percent for r in self.cross_speaker]))

    def to_dict(self) -> dict:
        return {
            "same_speaker": [r.to_dict() for r in self.same_speaker],
            "cross_speaker": [r.to_dict() for r in self.cross_speaker],
            "same_speaker_mean": self.same_speaker_mean,
            "cross_speaker_mean": self.cross_speaker_mean,
        }

    def to_text(self) -> str:
        lines = ["Experiment 1: same speaker", f"{'SPEAKER':<14}{'CORRECT':>10}{'ACCURACY':>11}"]
        for r in self.same_speaker:
            lines.append(
                f"{r.test_speaker:<14}{f'{r.correct}/{r.total}':>10}{r.accuracy_percent:>10.2f}%"
            )
        lines.append(f"{'average':<24}{self.same_speaker_mean:>10.2f}%")
        lines += [
            "",
            "Experiment 2: cross speaker",
            f"{'REFERENCE':<14}{'TEST':<14}{'CORRECT':>10}{'ACCURACY':>11}",
        ]
        for r in self.cross_speaker:
            lines.append(
                f"{r.reference_speaker:<14}{r.test_speaker:<14}"
                f"{f'{r.correct}/{r.total}':>10}{r.accuracy_percent:>10.2f}%"
            )
        lines.append(f"{'average':<38}{self.cross_speaker_mean:>10.2f}%")
        return "\n".join(lines) + "\n"


def _json_float(x: float):
    return None if math.isinf(x) else x


def corpus_features(
    corpus: Corpus, cfg: MfccConfig, trim: TrimConfig | None = TrimConfig()
) -> dict[tuple[str, str, int], FeatureMatrix]:
    """Extract features for every utterance, keyed by (speaker, word, repetition)."""
    return {u.key: utterance_features(u.audio, cfg, trim) for u in corpus.utterances}


def _reference_store(corpus, speaker_id, features) -> TemplateStore:
    store = TemplateStore()
    for w in corpus.words:
        key = (speaker_id, w, 0)
        if key not in features:
            raise ProtocolError(f"speaker {speaker_id!r} has no repetition 0 of word {w!r}")
        store = add_template(store, Template(*key, features[key]))
    return store


def _run(experiment, corpus, ref, test, tests, store, features, opts) -> EvalReport:
    if not tests:
        raise ProtocolError(f"no test utterances for speaker {test!r}")

    def one(u: Utterance) -> Trial:
        best = recognize_features(features[u.key], store, opts, workers=1).best
        return Trial(u.word_label, best.word_label, best.distance, ref, test, u.repetition_index)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trials = list(pool.map(one, tests))
    else:
        trials = [one(u) for u in tests]
    return EvalReport(experiment, ref, test, corpus.words, tuple(trials))


def _ordered(utterances, words):
    rank = {w: i for i, w in enumerate(words)}
    return sorted(utterances, key=lambda u: (rank[u.word_label], u.repetition_index))


def _features(corpus, cfg, trim, features):
    return corpus_features(corpus, cfg, trim) if features is None else features


def run_same_speaker(
    corpus: Corpus,
    speaker_id: str,
    cfg: MfccConfig = MfccConfig(),
    opts: DtwOptions = DtwOptions(),
    trim: TrimConfig | None = TrimConfig(),
    features: dict | None = None,
) -> EvalReport:
    """Experiment 1 for one speaker; ``num_words * (num_reps - 1)`` trials."""
    if speaker_id not in corpus.speakers:
        raise ProtocolError(f"unknown speaker {speaker_id!r}")
    own = corpus.for_speaker(speaker_id)
    for w in corpus.words:
        if sum(u.word_label == w for u in own) < 2:
            raise ProtocolError(f"speaker {speaker_id!r} needs >= 2 repetitions of {w!r}")
    sub = Corpus(own, corpus.words, (speaker_id,))
    features = _features(sub, cfg, trim, features)
    store = _reference_store(corpus, speaker_id, features)
    tests = _ordered([u for u in own if u.repetition_index != 0], corpus.words)
    return _run("same-speaker", corpus, speaker_id, speaker_id, tests, store, features, opts)


def run_cross_speaker(
    corpus: Corpus,
    reference_speaker: str,
    test_speaker: str,
    cfg: MfccConfig = MfccConfig(),
    opts: DtwOptions = DtwOptions(),
    trim: TrimConfig | None = TrimConfig(),
    features: dict | None = None,
) -> EvalReport:
    """Experiment 2 for one ordered pair; every test-speaker repetition is a trial."""
    if reference_speaker == test_speaker:
        raise ProtocolError("reference and test speaker must differ (use run_same_speaker)")
    for s in (reference_speaker, test_speaker):
        if s not in corpus.speakers:
            raise ProtocolError(f"unknown speaker {s!r}")
    sub = Corpus(
        corpus.for_speaker(reference_speaker) + corpus.for_speaker(test_speaker),
        corpus.words,
        (reference_speaker, test_speaker),
    )
    features = _features(sub, cfg, trim, features)
    store = _reference_store(corpus, reference_speaker, features)
    tests = _ordered(corpus.for_speaker(test_speaker), corpus.words)
    return _run(
        "cross-speaker", corpus, reference_speaker, test_speaker, tests, store, features, opts
    )


def run_all_pairs(
    corpus: Corpus,
    cfg: MfccConfig = MfccConfig(),
    opts: DtwOptions = DtwOptions(),
    trim: TrimConfig | None = TrimConfig(),
) -> AllPairsReport:
    """Experiment 1 per speaker plus Experiment 2 per ordered speaker pair."""
    if len(corpus.speakers) < 2:
        raise ProtocolError("need at least two speakers")
    features = corpus_features(corpus, cfg, trim)
    same = tuple(
        run_same_speaker(corpus, s, cfg, opts, trim, features) for s in corpus.speakers
    )
    cross = tuple(
        run_cross_speaker(corpus, r, t, cfg, opts, trim, features)
        for r in corpus.speakers
        for t in corpus.speakers
        if r != t
    )
    return AllPairsReport(same, cross)


# --- synthetic corpus -------------------------------------------------------


@dataclass(frozen=True)
class SynthParams:
    """Generator knobs.

    ``noise_level`` is the standard deviation of additive white noise in
    normalized amplitude units. ``speaker_spread`` bounds the per-speaker
    frequency scale factor to ``1 +/- speaker_spread``. ``max_stretch``
    bounds the per-repetition time stretch the same way.
    """

    seed: int = 0
    num_speakers: int = 4
    num_words: int = 10
    num_reps: int = 4
    noise_level: float = 0.02
    speaker_spread: float = 0.15
    max_stretch: float = 0.1
    amplitude: float = 0.5
    freq_range_hz: tuple[float, float] = (350.0, 3000.0)
    segment_s: tuple[float, float] = (0.08, 0.16)
    pad_s: float = 0.1
    ramp_s: float = 0.01

    def __post_init__(self):
        if min(self.num_speakers, self.num_words, self.num_reps) < 1:
            raise ConfigError("speaker, word and repetition counts must be >= 1")
        if self.noise_level < 0 or self.speaker_spread < 0 or self.max_stretch < 0:
            raise ConfigError("noise_level, speaker_spread and max_stretch must be >= 0")
        if self.speaker_spread >= 1 or self.max_stretch >= 1:
            raise ConfigError("speaker_spread and max_stretch must be < 1")
        if not 0 < self.amplitude <= 1:
            raise ConfigError("amplitude must lie in (0, 1]")


def word_label(index: int) -> str:
    return f"word{index + 1:02d}"


def speaker_label(index: int) -> str:
    return f"speaker{index + 1}"


def _word_signature(params: SynthParams, w: int):
    rng = np.random.default_rng([params.seed, 0, w])
    n_seg = int(rng.integers(2, 4))
    freqs = rng.uniform(*params.freq_range_hz, size=n_seg)
    durations = rng.uniform(*params.segment_s, size=n_seg)
    return freqs, durations


def _speaker_factors(params: SynthParams) -> np.ndarray:
    # stratified draw: one factor per equal-width slice of [1 - spread, 1 + spread]
    n = params.num_speakers
    rng = np.random.default_rng([params.seed, 1])
    slots = (rng.permutation(n) + rng.uniform(size=n)) / n
    return 1.0 + params.speaker_spread * (2.0 * slots - 1.0)


def _render(params: SynthParams, freqs, durations, factor, stretch, noise_rng) -> np.ndarray:
    sr = SYNTH_RATE_HZ
    counts = np.maximum(1, np.round(durations * stretch * sr).astype(int))
    inst_freq = np.repeat(freqs * factor, counts)
    # integrate frequency so segment joins are phase-continuous
    phase = 2.0 * np.pi * np.cumsum(inst_freq) / sr
    tone = params.amplitude * np.sin(phase)
    ramp = min(int(params.ramp_s * sr), tone.size // 2)
    if ramp:
        env = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        tone[:ramp] *= env
        tone[-ramp:] *= env[::-1]
    pad = np.zeros(int(round(params.pad_s * sr)))
    x = np.concatenate([pad, tone, pad])
    if params.noise_level > 0:
        x = x + params.noise_level * noise_rng.standard_normal(x.size)
    return np.clip(x, -1.0, 1.0)


def synthesize_corpus(
    seed: int = 0,
    num_speakers: int = 4,
    num_words: int = 10,
    num_reps: int = 4,
    noise_level: float = 0.02,
    speaker_spread: float = 0.15,
    max_stretch: float = 0.1,
) -> Corpus:
    """Deterministic corpus of frequency-signature "words".

    Word ``w`` is 2-3 concatenated sinusoid segments with frequencies and
    durations drawn from ``(seed, w)``. Each speaker scales every frequency
    by its own factor; the factors are a stratified draw over
    ``1 +/- speaker_spread`` so speakers never bunch together. Repetition ``r`` applies a random
    time stretch and additive noise drawn from ``(seed, s, w, r)``. Identical
    arguments give bit-identical audio.
    """
    params = SynthParams(
        seed=seed,
        num_speakers=num_speakers,
        num_words=num_words,
        num_reps=num_reps,
        noise_level=noise_level,
        speaker_spread=speaker_spread,
        max_stretch=max_stretch,
    )
    return synthesize(params)


def synthesize(params: SynthParams) -> Corpus:
    signatures = [_word_signature(params, w) for w in range(params.num_words)]
    utterances = []
    for s, factor in enumerate(_speaker_factors(params)):
        for w, (freqs, durations) in enumerate(signatures):
            for r in range(params.num_reps):
                rng = np.random.default_rng([params.seed, 2, s, w, r])
                stretch = 1.0 + params.max_stretch * rng.uniform(-1.0, 1.0)
                x = _render(params, freqs, durations, factor, stretch, rng)
                audio = AudioBuffer(x, SYNTH_RATE_HZ)
                utterances.append(Utterance(speaker_label(s), word_label(w), r, audio))
    return Corpus(
        tuple(utterances),
        tuple(word_label(w) for w in range(params.num_words)),
        tuple(speaker_label(s) for s in range(params.num_speakers)),
    )


# --- corpus on disk ---------------------------------------------------------

_WAV_NAME = re.compile(r"^(?P<word>.+)_(?P<rep>\d+)\.wav$")


def write_corpus(corpus: Corpus, root) -> int:
    """Write ``<root>/<speaker>/<word>_<rep>.wav`` files; returns the file count."""
    root = Path(root)
    for u in corpus.utterances:
        d = root / u.speaker_id
        d.mkdir(parents=True, exist_ok=True)
        write_wav(d / f"{u.word_label}_{u.repetition_index}.wav", u.audio)
    return len(corpus.utterances)


def load_corpus(root) -> Corpus:
    """Read a corpus directory tree. Speakers and words are ordered naturally."""
    root = Path(root)
    if not root.is_dir():
        raise ProtocolError(f"corpus directory {os.fspath(root)!r} does not exist")
    utterances = []
    for spk_dir in sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: natural_key(p.name)):
        for wav in sorted(spk_dir.iterdir(), key=lambda p: natural_key(p.name)):
            m = _WAV_NAME.match(wav.name)
            if m is None or not wav.is_file():
                continue
            utterances.append(
                Utterance(spk_dir.name, m["word"], int(m["rep"]), read_wav(wav))
            )
    if not utterances:
        raise ProtocolError(f"no <word>_<rep>.wav files under {os.fspath(root)!r}")
    words = sorted({u.word_label for u in utterances}, key=natural_key)
    speakers = sorted({u.speaker_id for u in utterances}, key=natural_key)
    return Corpus(tuple(utterances), tuple(words), tuple(speakers))
