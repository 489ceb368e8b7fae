import json
import struct

import numpy as np
import pytest

from mdkin import io
from mdkin.radar_sim import RadarConfig
from mdkin.sifter import SignLexeme
from mdkin.tf_analysis import Spectrogram, WindowMeta


def make_sig(rows=64, cols=100, seed=0, **kw):
    rng = np.random.default_rng(seed)
    power = rng.exponential(size=(rows, cols)).astype(np.float32).astype(float)
    spec = Spectrogram(
        power,
        (np.arange(rows) - rows // 2) * 31.25,
        np.arange(cols) * 0.008,
        WindowMeta("hann", rows, 8, rows),
        RadarConfig(),
    )
    return io.SignatureFile(spec, kw.get("label", "HELLO"), kw.get("sid", "s1"), kw.get("extra", {"k": 1}))


def split(data):
    (hlen,) = struct.unpack_from("<I", data, 4)
    return json.loads(data[8 : 8 + hlen]), data[8 + hlen :]


def rebuild(header, payload):
    h = json.dumps(header).encode()
    return io.MAGIC + struct.pack("<I", len(h)) + h + payload


def test_round_trip_is_bit_exact(tmp_path):
    sig = make_sig()
    path = tmp_path / "a.mdsig"
    io.write_signature(path, sig)
    back = io.read_signature(path)
    assert back.spectrogram.power.tobytes() == sig.spectrogram.power.tobytes()
    np.testing.assert_array_equal(back.spectrogram.freq_axis_hz, sig.spectrogram.freq_axis_hz)
    np.testing.assert_array_equal(back.spectrogram.time_axis_s, sig.spectrogram.time_axis_s)
    assert back.spectrogram.window == sig.spectrogram.window
    assert back.spectrogram.radar == sig.spectrogram.radar
    assert (back.class_label, back.sample_id, back.extra) == ("HELLO", "s1", {"k": 1})
    assert io.encode_signature(back) == path.read_bytes()


def test_layout():
    data = io.encode_signature(make_sig(4, 3))
    assert data[:4] == b"MDSG"
    header, payload = split(data)
    assert header["format_version"] == 1
    assert (header["rows"], header["cols"], header["payload_nbytes"]) == (4, 3, 48)
    assert len(payload) == 48
    assert np.frombuffer(payload, "<f4").reshape(4, 3).tolist() == make_sig(4, 3).spectrogram.power.tolist()


def test_truncated_by_one_byte():
    data = io.encode_signature(make_sig())
    with pytest.raises(io.TruncatedFileError) as exc:
        io.decode_signature(data[:-1])
    assert exc.value.code == "truncated"


@pytest.mark.parametrize("cut", [0, 2, 6, 20])
def test_truncated_inside_preamble_or_header(cut):
    data = io.encode_signature(make_sig())
    with pytest.raises(io.TruncatedFileError):
        io.decode_signature(data[:cut] if cut else b"")


def test_header_claims_more_columns_than_payload():
    sig = make_sig(8, 9)
    header, payload = split(io.encode_signature(sig))
    header["cols"] = 10
    with pytest.raises(io.HeaderPayloadMismatchError) as exc:
        io.decode_signature(rebuild(header, payload))
    assert exc.value.code == "header-payload-mismatch"


def test_trailing_bytes_and_axis_mismatch():
    header, payload = split(io.encode_signature(make_sig(8, 9)))
    with pytest.raises(io.HeaderPayloadMismatchError):
        io.decode_signature(rebuild(header, payload + b"\0\0\0\0"))
    header["time_axis_s"] = header["time_axis_s"][:-1]
    with pytest.raises(io.HeaderPayloadMismatchError):
        io.decode_signature(rebuild(header, payload))


def test_unknown_version_and_bad_magic():
    header, payload = split(io.encode_signature(make_sig(4, 4)))
    header["format_version"] = 2
    with pytest.raises(io.UnknownVersionError) as exc:
        io.decode_signature(rebuild(header, payload))
    assert exc.value.code == "unknown-version"
    with pytest.raises(io.BadMagicError) as exc:
        io.decode_signature(b"PNG\x89" + b"\0" * 40)
    assert exc.value.code == "bad-magic"


def test_malformed_header():
    bad = io.MAGIC + struct.pack("<I", 5) + b"{nope"
    with pytest.raises(io.SignatureFormatError) as exc:
        io.decode_signature(bad)
    assert exc.value.code == "malformed"
    header, payload = split(io.encode_signature(make_sig(4, 4)))
    del header["window"]
    with pytest.raises(io.SignatureFormatError):
        io.decode_signature(rebuild(header, payload))


def test_negative_power_payload_rejected():
    sig = make_sig(4, 4)
    header, payload = split(io.encode_signature(sig))
    arr = np.frombuffer(payload, "<f4").copy()
    arr[0] = -1.0
    with pytest.raises(io.SignatureFormatError):
        io.decode_signature(rebuild(header, arr.tobytes()))


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out.bin"
    target.write_bytes(b"old")
    with pytest.raises(TypeError):
        io.atomic_write_bytes(target, "not bytes")  # type: ignore[arg-type]
    assert target.read_bytes() == b"old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.bin"]


def test_lexicon_round_trip_and_errors(tmp_path):
    lex = [SignLexeme("A", 1, 2), SignLexeme("B", 2, 1)]
    path = tmp_path / "lex.jsonl"
    io.write_lexicon(path, lex)
    assert io.read_lexicon(path) == lex

    cases = {
        "dup": '{"gloss": "A", "handedness": 1, "strokes": 1}\n{"gloss": "A", "handedness": 2, "strokes": 1}\n',
        "missing": '{"gloss": "A", "handedness": 1}\n',
        "types": '{"gloss": "A", "handedness": "1", "strokes": 1}\n',
        "range": '{"gloss": "A", "handedness": 3, "strokes": 1}\n',
    }
    for name, text in cases.items():
        p = tmp_path / f"{name}.jsonl"
        p.write_text(text)
        with pytest.raises(io.LexiconFormatError):
            io.read_lexicon(p)


def test_jsonl_skips_blank_and_comment_lines(tmp_path):
    p = tmp_path / "x.jsonl"
    p.write_text('# comment\n\n{"a": 1}\n')
    assert list(io.iter_jsonl(p)) == [(3, {"a": 1})]
    p.write_text("[1, 2]\n")
    with pytest.raises(io.ParseError):
        list(io.iter_jsonl(p))


def test_signature_paths_expand_directories(tmp_path):
    for name in ("b.mdsig", "a.mdsig", "c.txt"):
        (tmp_path / name).write_bytes(b"")
    extra = tmp_path / "z.mdsig"
    assert [p.name for p in io.signature_paths([tmp_path, extra])] == ["a.mdsig", "b.mdsig", "z.mdsig"]
