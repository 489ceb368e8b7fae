import json

import pytest

from mdkin import io
from mdkin.cli import main

CLASSES = [("ONE", 1, 1, 0.5), ("TWO", 2, 2, 0.45)]


def write_specs(path, per_class=3, extra=None):
    lines = []
    for gloss, hands, strokes, peak in CLASSES:
        for i in range(per_class):
            rec = {
                "sample_id": f"{gloss}-{i}",
                "class_label": gloss,
                "hands": hands,
                "strokes": strokes,
                "peak_speed_mps": peak * (0.85 + 0.15 * i),
                "hand_amplitude": 0.9 + 0.1 * i,
                "torso_amplitude": 0.05 * (0.9 + 0.1 * i),
            }
            lines.append(json.dumps({**rec, **(extra or {})}))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_lexicon(path):
    path.write_text(
        "".join(json.dumps({"gloss": g, "handedness": h, "strokes": s}) + "\n" for g, h, s, _ in CLASSES)
    )
    return path


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    specs = write_specs(root / "specs.jsonl")
    out = root / "sigs"
    assert main(["simulate", str(specs), "--out-dir", str(out), "--paper-compat"]) == 0
    return root, out


def read_jsonl(path):
    return [rec for _, rec in io.iter_jsonl(path)]


def test_simulate_writes_one_file_per_spec(corpus):
    _, out = corpus
    files = sorted(p.name for p in out.iterdir())
    assert files == sorted(f"{g}-{i}.mdsig" for g, *_ in CLASSES for i in range(3))
    sig = io.read_signature(out / "ONE-0.mdsig")
    assert sig.class_label == "ONE" and sig.extra["synthetic"]["strokes"] == 1


def test_simulate_is_deterministic_with_noise(tmp_path):
    specs = write_specs(tmp_path / "s.jsonl", per_class=1)
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        argv = ["--workers", "2", "simulate", str(specs), "--out-dir", str(d), "--seed", "5", "--noise-power", "0.01"]
        assert main(argv) == 0
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert outs[0] == outs[1]
    d = tmp_path / "c"
    main(["simulate", str(specs), "--out-dir", str(d), "--seed", "6", "--noise-power", "0.01"])
    assert {p.name: p.read_bytes() for p in d.iterdir()} != outs[0]


def test_analyze_records_compat_resolutions(corpus):
    root, out = corpus
    dest = root / "profiles.jsonl"
    assert main(["analyze", str(out), "--out", str(dest), "--lexicon", str(write_lexicon(root / "lex.jsonl"))]) == 0
    recs = read_jsonl(dest)
    assert len(recs) == 6
    for r in recs:
        assert r["range_resolution_m"] == pytest.approx(0.0375, abs=1e-4)
        assert r["velocity_resolution_mps"] == pytest.approx(0.0487, abs=1e-4)
        expected_hands = 1 if r["class_label"] == "ONE" else 2
        assert r["handedness"] == expected_hands
        assert r["stroke_count"] == expected_hands  # ONE: 1 stroke, TWO: 2 strokes
    assert max(r["normalized_energy"] for r in recs) == 1.0


def test_analyze_worker_pool_preserves_order(corpus):
    root, out = corpus
    a, b = root / "serial.jsonl", root / "pool.jsonl"
    assert main(["analyze", str(out), "--out", str(a)]) == 0
    assert main(["--workers", "4", "analyze", str(out), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_stats_and_sift_self_consistency(corpus):
    root, out = corpus
    profiles = root / "p.jsonl"
    main(["analyze", str(out), "--out", str(profiles)])
    stats = root / "stats.jsonl"
    assert main(["stats", str(profiles), "--out", str(stats)]) == 0
    recs = {r["class_label"]: r for r in read_jsonl(stats)}
    assert set(recs) == {"ONE", "TWO"} and recs["ONE"]["sample_count"] == 3
    assert recs["ONE"]["std_dtw"] is not None

    report = root / "report.jsonl"
    lex = write_lexicon(root / "lex2.jsonl")
    argv = ["sift", "--candidates", str(out), "--reference", str(out), "--lexicon", str(lex), "--out", str(report)]
    assert main(argv) == 0
    recs = read_jsonl(report)
    assert recs[0]["record"] == "summary" and recs[0]["n_candidates"] == 6
    verdicts = [r for r in recs if r["record"] == "verdict"]
    assert len(verdicts) == 6 and all(v["rule1_pass"] for v in verdicts)


def test_export_plot(corpus, tmp_path):
    _, out = corpus
    dest = tmp_path / "grid.txt"
    assert main(["export-plot", str(out / "ONE-0.mdsig"), "--out", str(dest), "--dynamic-range", "40"]) == 0
    lines = dest.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    grid = [list(map(float, l.split())) for l in lines if not l.startswith("#")]
    sig = io.read_signature(out / "ONE-0.mdsig")
    assert len(grid) == sig.spectrogram.n_bins and len(grid[0]) == sig.spectrogram.n_frames
    top = max(max(row) for row in grid)
    assert min(min(row) for row in grid) >= top - 40 - 1e-3
    assert any("freq_axis_hz" in h for h in header)


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_bad_flag_values_are_usage_errors(corpus, tmp_path):
    _, out = corpus
    assert main(["analyze", str(out), "--out", str(tmp_path / "x"), "--alpha", "2"]) == 1
    assert main(["analyze", str(out), "--out", str(tmp_path / "x"), "--min-height", "-1"]) == 1
    assert not (tmp_path / "x").exists()


def test_data_errors_exit_2_without_partial_output(tmp_path, capsys):
    bad = tmp_path / "bad.mdsig"
    bad.write_bytes(b"MDSG\x05\x00\x00\x00{nope")
    dest = tmp_path / "out.jsonl"
    assert main(["analyze", str(bad), "--out", str(dest)]) == 2
    assert "malformed" in capsys.readouterr().err
    assert not dest.exists()
    assert main(["analyze", str(tmp_path / "missing.mdsig"), "--out", str(dest)]) == 2
    specs = tmp_path / "specs.jsonl"
    specs.write_text('{"strokes": 0}\n')
    assert main(["simulate", str(specs), "--out-dir", str(tmp_path / "o")]) == 2


def test_truncated_signature_reports_code(corpus, tmp_path, capsys):
    _, out = corpus
    data = (out / "ONE-0.mdsig").read_bytes()
    bad = tmp_path / "cut.mdsig"
    bad.write_bytes(data[:-1])
    assert main(["analyze", str(bad), "--out", str(tmp_path / "o.jsonl")]) == 2
    assert "[truncated]" in capsys.readouterr().err


def test_rule_configuration_error_exit_3(corpus, tmp_path):
    _, out = corpus
    lex = write_lexicon(tmp_path / "lex.jsonl")
    single = [str(out / "ONE-0.mdsig"), str(out / "TWO-0.mdsig"), str(out / "TWO-1.mdsig")]
    dest = tmp_path / "r.jsonl"
    argv = ["sift", "--candidates", str(out / "ONE-1.mdsig"), "--reference", *single, "--lexicon", str(lex), "--out", str(dest)]
    assert main(argv) == 3
    assert not dest.exists()
