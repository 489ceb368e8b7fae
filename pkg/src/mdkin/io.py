"""On-disk formats: binary signature container and line-oriented JSON records.

Signature file layout (all integers little-endian)::

    b"MDSG"                 magic
    uint32                  header length H in bytes
    H bytes                 UTF-8 JSON header
    rows * cols * 4 bytes   float32 LE power, row-major (rows = Doppler bins)

The header carries ``format_version``, ``rows``, ``cols``, ``payload_nbytes``,
``dtype`` (always ``"<f4"``), ``radar``, ``window``, ``class_label``,
``sample_id``, ``freq_axis_hz``, ``time_axis_s`` and a free-form ``extra``
object. Lexicons, profiles and reports are JSON Lines: one object per line.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from mdkin.errors import DomainError, ParseError, ShapeError
from mdkin.radar_sim import RadarConfig
from mdkin.sifter import Sample, SignLexeme
from mdkin.tf_analysis import Spectrogram, WindowMeta

MAGIC = b"MDSG"
FORMAT_VERSION = 1
SUFFIX = ".mdsig"
_LEN = struct.Struct("<I")


class SignatureFormatError(ParseError):
    code = "malformed"


class TruncatedFileError(SignatureFormatError):
    code = "truncated"


class HeaderPayloadMismatchError(SignatureFormatError):
    code = "header-payload-mismatch"


class UnknownVersionError(SignatureFormatError):
    code = "unknown-version"


class BadMagicError(SignatureFormatError):
    code = "bad-magic"


class LexiconFormatError(ParseError):
    code = "lexicon"


@dataclass(frozen=True)
class SignatureFile:
    spectrogram: Spectrogram
    class_label: str = ""
    sample_id: str = ""
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_sample(self) -> Sample:
        return Sample(self.sample_id, self.class_label, self.spectrogram)


def _header(sig: SignatureFile) -> dict:
    spec = sig.spectrogram
    rows, cols = spec.shape
    return {
        "format_version": FORMAT_VERSION,
        "rows": rows,
        "cols": cols,
        "payload_nbytes": rows * cols * 4,
        "dtype": "<f4",
        "radar": None if spec.radar is None else spec.radar.to_dict(),
        "window": spec.window.to_dict(),
        "class_label": sig.class_label,
        "sample_id": sig.sample_id,
        "freq_axis_hz": [float(f) for f in spec.freq_axis_hz],
        "time_axis_s": [float(t) for t in spec.time_axis_s],
        "extra": sig.extra,
    }


def encode_signature(sig: SignatureFile) -> bytes:
    header = json.dumps(_header(sig), sort_keys=True, allow_nan=False).encode("utf-8")
    payload = np.ascontiguousarray(sig.spectrogram.power, dtype="<f4").tobytes()
    return MAGIC + _LEN.pack(len(header)) + header + payload


def decode_signature(data: bytes) -> SignatureFile:
    if len(data) < len(MAGIC) + _LEN.size:
        if MAGIC.startswith(data[: len(MAGIC)]):
            raise TruncatedFileError("file ends inside the preamble")
        raise BadMagicError("not a signature file")
    if data[:4] != MAGIC:
        raise BadMagicError("not a signature file")
    (hlen,) = _LEN.unpack_from(data, 4)
    start = 4 + _LEN.size
    if len(data) < start + hlen:
        raise TruncatedFileError(f"header needs {hlen} bytes, {len(data) - start} present")
    try:
        header = json.loads(data[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SignatureFormatError(f"header is not valid JSON: {exc}") from None
    if not isinstance(header, dict) or "format_version" not in header:
        raise SignatureFormatError("header lacks format_version")
    if header["format_version"] != FORMAT_VERSION:
        raise UnknownVersionError(f"unsupported format_version {header['format_version']!r}")

    try:
        rows, cols = int(header["rows"]), int(header["cols"])
        declared = int(header["payload_nbytes"])
        freq = np.asarray(header["freq_axis_hz"], dtype=float)
        times = np.asarray(header["time_axis_s"], dtype=float)
        window = WindowMeta.from_dict(header["window"])
        radar = None if header.get("radar") is None else RadarConfig.from_dict(header["radar"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SignatureFormatError(f"bad header field: {exc}") from None
    if header.get("dtype", "<f4") != "<f4":
        raise SignatureFormatError(f"unsupported dtype {header['dtype']!r}")
    if rows < 0 or cols < 0 or declared != rows * cols * 4:
        raise HeaderPayloadMismatchError(
            f"header declares {rows}x{cols} but payload_nbytes={declared}"
        )

    payload = data[start + hlen :]
    if len(payload) < declared:
        raise TruncatedFileError(f"payload has {len(payload)} of {declared} bytes")
    if len(payload) > declared:
        raise HeaderPayloadMismatchError(f"payload has {len(payload) - declared} trailing bytes")
    if freq.shape != (rows,) or times.shape != (cols,):
        raise HeaderPayloadMismatchError("axis lengths disagree with rows/cols")

    power = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(float)
    try:
        spec = Spectrogram(power, freq, times, window, radar)
    except (DomainError, ShapeError) as exc:
        raise SignatureFormatError(f"invalid spectrogram content: {exc}") from None
    return SignatureFile(
        spectrogram=spec,
        class_label=str(header.get("class_label", "")),
        sample_id=str(header.get("sample_id", "")),
        extra=header.get("extra") or {},
        format_version=header["format_version"],
    )


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_signature(path, sig: SignatureFile) -> None:
    atomic_write_bytes(path, encode_signature(sig))


def read_signature(path) -> SignatureFile:
    with open(path, "rb") as fh:
        return decode_signature(fh.read())


# ---------------------------------------------------------------------------
# JSON Lines


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def dumps_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, allow_nan=False) + "\n" for r in records)


def write_jsonl(path, records: Iterable[dict]) -> None:
    atomic_write_bytes(path, dumps_jsonl(records).encode("utf-8"))


def read_lexicon(path) -> list[SignLexeme]:
    """Read ``{"gloss", "handedness", "strokes"}`` records; glosses must be unique."""
    out, seen = [], set()
    for lineno, rec in iter_jsonl(path):
        try:
            gloss = rec["gloss"]
            hands = rec["handedness"]
            strokes = rec["strokes"]
        except KeyError as exc:
            raise LexiconFormatError(f"{path}:{lineno}: missing field {exc}") from None
        if not isinstance(gloss, str) or type(hands) is not int or type(strokes) is not int:
            raise LexiconFormatError(f"{path}:{lineno}: wrong field types")
        if gloss in seen:
            raise LexiconFormatError(f"{path}:{lineno}: duplicate gloss {gloss!r}")
        try:
            out.append(SignLexeme(gloss, hands, strokes))
        except DomainError as exc:
            raise LexiconFormatError(f"{path}:{lineno}: {exc}") from None
        seen.add(gloss)
    return out


def write_lexicon(path, lexicon: Iterable[SignLexeme]) -> None:
    write_jsonl(
        path,
        ({"gloss": x.gloss, "handedness": x.expected_handedness, "strokes": x.expected_strokes} for x in lexicon),
    )


def signature_paths(inputs: Iterable) -> list[Path]:
    """Expand files and directories (``*.mdsig``, sorted) into a path list."""
    out = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(p.glob(f"*{SUFFIX}")))
        else:
            out.append(p)
    return out
