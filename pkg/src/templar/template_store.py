"""Reference templates and their on-disk ``TMPL`` format.

Layout (all integers little-endian)::

    magic           4s   b"TMPL"
    version         u16  1
    fingerprint     u64  MfccConfig fingerprint (0 for an unbound empty store)
    num_ceps        u16
    template_count  u32
    per template:
        speaker_id        u16 length + UTF-8
        word_label        u16 length + UTF-8
        repetition_index  u32
        frame_count       u32
        features          frame_count * num_ceps f32, frame-major
    crc32           u32  IEEE CRC-32 of every preceding byte

Features are held as float32 inside a store, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import io
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateTemplateError,
    IncompatibleFeaturesError,
    StoreCorruptionError,
    StoreFormatError,
    StoreVersionError,
)
from .mfcc import FeatureMatrix

MAGIC = b"TMPL"
VERSION = 1
_HEADER = struct.Struct("<4sHQHI")
_TEMPLATE_FIXED = struct.Struct("<II")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class Template:
    speaker_id: str
    word_label: str
    repetition_index: int
    features: FeatureMatrix

    def __post_init__(self):
        if not self.word_label:
            raise ValueError("word_label must be non-empty")
        if self.repetition_index < 0:
            raise ValueError("repetition_index must be non-negative")
        for name in ("speaker_id", "word_label"):
            if len(getattr(self, name).encode("utf-8")) > 0xFFFF:
                raise ValueError(f"{name} is too long to store")

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.speaker_id, self.word_label, self.repetition_index)


def _as_stored(t: Template) -> Template:
    if t.features.frames.dtype == np.float32:
        return t
    fm = FeatureMatrix(t.features.frames.astype(np.float32), t.features.config_fingerprint)
    return Template(t.speaker_id, t.word_label, t.repetition_index, fm)


@dataclass(frozen=True)
class TemplateStore:
    """Immutable ordered collection of templates sharing one config fingerprint."""

    config_fingerprint: int | None = None
    templates: tuple[Template, ...] = field(default_factory=tuple)

    def __post_init__(self):
        templates = tuple(_as_stored(t) for t in self.templates)
        object.__setattr__(self, "templates", templates)
        seen = set()
        for t in templates:
            if t.features.config_fingerprint != self.config_fingerprint:
                raise IncompatibleFeaturesError(
                    f"template {t.key} fingerprint differs from the store's"
                )
            if t.features.num_ceps != templates[0].features.num_ceps:
                raise IncompatibleFeaturesError(f"template {t.key} has a different num_ceps")
            if t.key in seen:
                raise DuplicateTemplateError(f"duplicate template {t.key}")
            seen.add(t.key)

    def __len__(self):
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    @property
    def num_ceps(self) -> int:
        return self.templates[0].features.num_ceps if self.templates else 0

    @property
    def words(self) -> list[str]:
        return list(dict.fromkeys(t.word_label for t in self.templates))


def add_template(store: TemplateStore, t: Template) -> TemplateStore:
    """Return a new store with ``t`` appended.

    An unbound empty store adopts ``t``'s fingerprint. Features are cast to
    float32, the storage precision.

    Raises:
        IncompatibleFeaturesError: fingerprint or coefficient count differs.
        DuplicateTemplateError: the (speaker, word, repetition) key exists.
    """
    fp = t.features.config_fingerprint
    if store.config_fingerprint is not None and fp != store.config_fingerprint:
        raise IncompatibleFeaturesError(
            f"template fingerprint {fp:016x} does not match store "
            f"{store.config_fingerprint:016x}"
        )
    if store.templates and t.features.num_ceps != store.num_ceps:
        raise IncompatibleFeaturesError(
            f"template has {t.features.num_ceps} coefficients, store has {store.num_ceps}"
        )
    if any(existing.key == t.key for existing in store.templates):
        raise DuplicateTemplateError(f"duplicate template {t.key}")
    return TemplateStore(fp, store.templates + (t,))


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def dumps(store: TemplateStore) -> bytes:
    out = io.BytesIO()
    out.write(
        _HEADER.pack(MAGIC, VERSION, store.config_fingerprint or 0, store.num_ceps, len(store))
    )
    for t in store.templates:
        out.write(_pack_str(t.speaker_id))
        out.write(_pack_str(t.word_label))
        out.write(_TEMPLATE_FIXED.pack(t.repetition_index, t.features.num_frames))
        out.write(np.ascontiguousarray(t.features.frames, dtype="<f4").tobytes())
    body = out.getvalue()
    return body + _CRC.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, buf: bytes, pos: int):
        self.buf = buf
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise StoreCorruptionError("truncated store file")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def string(self) -> str:
        (n,) = struct.unpack("<H", self.take(2))
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StoreCorruptionError("invalid UTF-8 in string field") from exc


def loads(data: bytes) -> TemplateStore:
    """Parse ``TMPL`` bytes.

    Raises:
        StoreFormatError: bad magic.
        StoreVersionError: unsupported version.
        StoreCorruptionError: truncation, checksum mismatch, or inconsistent content.
    """
    data = bytes(data)
    if data[:4] != MAGIC[: len(data)]:
        raise StoreFormatError("bad magic: not a TMPL file")
    if len(data) < _HEADER.size + _CRC.size:
        raise StoreCorruptionError("truncated store file")
    _, version, fingerprint, num_ceps, count = _HEADER.unpack_from(data)
    if version != VERSION:
        raise StoreVersionError(f"unsupported TMPL version {version}")
    body, (crc,) = data[:-4], _CRC.unpack(data[-4:])
    if zlib.crc32(body) != crc:
        raise StoreCorruptionError("CRC-32 mismatch")

    rd = _Reader(body, _HEADER.size)
    templates = []
    for _ in range(count):
        speaker = rd.string()
        word = rd.string()
        rep, frames = rd.unpack(_TEMPLATE_FIXED)
        if frames == 0 or num_ceps == 0:
            raise StoreCorruptionError("template with no features")
        values = np.frombuffer(rd.take(4 * frames * num_ceps), dtype="<f4")
        if not np.all(np.isfinite(values)):
            raise StoreCorruptionError("non-finite feature value")
        try:
            fm = FeatureMatrix(values.astype(np.float32).reshape(frames, num_ceps), fingerprint)
            templates.append(Template(speaker, word, rep, fm))
        except ValueError as exc:
            raise StoreCorruptionError(str(exc)) from exc
    if rd.pos != len(body):
        raise StoreCorruptionError(f"{len(body) - rd.pos} unexpected trailing bytes")
    try:
        return TemplateStore(fingerprint if count or fingerprint else None, templates)
    except DuplicateTemplateError as exc:
        raise StoreCorruptionError(str(exc)) from exc


def save_store(store: TemplateStore, destination) -> int:
    """Write ``store`` to a path or binary file object; returns bytes written."""
    data = dumps(store)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def load_store(source) -> TemplateStore:
    if hasattr(source, "read"):
        return loads(source.read())
    with open(os.fspath(source), "rb") as fh:
        return loads(fh.read())
