import numpy as np
import pytest

from templar.audio_io import AudioBuffer

RATE = 16000

_acceptance_lines = []


def record_criterion(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def tone(freq_hz, seconds, amplitude=0.5, rate=RATE):
    t = np.arange(int(round(seconds * rate))) / rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t)


def padded_tone(freq_hz, seconds=0.2, pad_s=0.1, amplitude=0.5):
    pad = np.zeros(int(pad_s * RATE))
    return AudioBuffer(np.concatenate([pad, tone(freq_hz, seconds, amplitude), pad]), RATE)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
