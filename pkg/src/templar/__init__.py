"""Template-based isolated-word recognition: MFCC features matched by DTW."""

from .audio_io import AudioBuffer, TrimConfig, decode_wav, encode_wav, read_wav, trim_endpoints, write_wav
from .dtw import DtwOptions, DtwResult, Metric, Normalize, dtw_distance, local_distance
from .errors import TemplarError
from .evaluation import (
    AllPairsReport,
    Corpus,
    EvalReport,
    Utterance,
    load_corpus,
    run_all_pairs,
    run_cross_speaker,
    run_same_speaker,
    synthesize_corpus,
    write_corpus,
)
from .mfcc import FeatureMatrix, MfccConfig, Window, extract_mfcc, hz_to_mel, mel_to_hz
from .recognizer import Match, RecognitionResult, enroll, recognize
from .template_store import Template, TemplateStore, add_template, load_store, save_store

__version__ = "0.1.0"
