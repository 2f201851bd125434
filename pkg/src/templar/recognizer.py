"""Enrollment and nearest-template recognition."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, TrimConfig, trim_endpoints
from .dtw import DtwOptions, dtw_distance
from .errors import EmptyStoreError, IncompatibleFeaturesError, InfeasibleBandError
from .mfcc import FeatureMatrix, MfccConfig, extract_mfcc
from .template_store import Template, TemplateStore, add_template

THREADS_ENV = "TEMPLAR_THREADS"


def thread_count() -> int:
    """Worker threads requested through ``TEMPLAR_THREADS`` (0 or unset: 1)."""
    try:
        n = int(os.environ.get(THREADS_ENV, "0"))
    except ValueError:
        n = 0
    return max(1, n)


@dataclass(frozen=True)
class Match:
    word_label: str
    speaker_id: str
    repetition_index: int
    distance: float


@dataclass(frozen=True)
class RecognitionResult:
    ranking: tuple[Match, ...]

    @property
    def best(self) -> Match:
        return self.ranking[0]

    @property
    def margin(self) -> float | None:
        """Distance gap to the runner-up; ``None`` with a single template."""
        if len(self.ranking) < 2:
            return None
        return self.ranking[1].distance - self.ranking[0].distance


def utterance_features(
    audio: AudioBuffer, cfg: MfccConfig, trim: TrimConfig | None = TrimConfig()
) -> FeatureMatrix:
    """Trim silence (unless ``trim`` is None) and extract MFCCs."""
    if trim is not None:
        audio = trim_endpoints(audio, trim)
    return extract_mfcc(audio, cfg)


def enroll(
    audio: AudioBuffer,
    speaker_id: str,
    word_label: str,
    repetition_index: int,
    cfg: MfccConfig,
    store: TemplateStore,
    trim: TrimConfig | None = TrimConfig(),
) -> TemplateStore:
    if store.config_fingerprint is not None and cfg.fingerprint() != store.config_fingerprint:
        raise IncompatibleFeaturesError("MFCC config does not match the store's fingerprint")
    features = utterance_features(audio, cfg, trim)
    return add_template(store, Template(speaker_id, word_label, repetition_index, features))


def _score(features: FeatureMatrix, template: Template, opts: DtwOptions) -> float:
    try:
        return dtw_distance(features, template.features, opts).distance
    except InfeasibleBandError:
        return math.inf


def recognize_features(
    features: FeatureMatrix,
    store: TemplateStore,
    opts: DtwOptions = DtwOptions(),
    workers: int | None = None,
) -> RecognitionResult:
    """Rank every stored template by DTW distance to ``features``.

    The query is rounded to float32 first so it is compared at the same
    precision the templates are stored in. Equal distances keep store order.
    Templates the Sakoe-Chiba band cannot reach score ``inf``.
    """
    if not store.templates:
        raise EmptyStoreError("template store is empty")
    if features.config_fingerprint != store.config_fingerprint:
        raise IncompatibleFeaturesError(
            f"features fingerprint {features.config_fingerprint:016x} does not match "
            f"store {store.config_fingerprint:016x}"
        )
    query = FeatureMatrix(features.frames.astype(np.float32), features.config_fingerprint)
    workers = thread_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            distances = list(pool.map(lambda t: _score(query, t, opts), store.templates))
    else:
        distances = [_score(query, t, opts) for t in store.templates]
    if all(math.isinf(d) for d in distances):
        raise InfeasibleBandError("band radius excludes every stored template")
    matches = [
        Match(t.word_label, t.speaker_id, t.repetition_index, d)
        for t, d in zip(store.templates, distances)
    ]
    return RecognitionResult(tuple(sorted(matches, key=lambda m: m.distance)))


def recognize(
    audio: AudioBuffer,
    store: TemplateStore,
    cfg: MfccConfig,
    opts: DtwOptions = DtwOptions(),
    trim: TrimConfig | None = TrimConfig(),
) -> RecognitionResult:
    if not store.templates:
        raise EmptyStoreError("template store is empty")
    if cfg.fingerprint() != store.config_fingerprint:
        raise IncompatibleFeaturesError("MFCC config does not match the store's fingerprint")
    return recognize_features(utterance_features(audio, cfg, trim), store, opts)
