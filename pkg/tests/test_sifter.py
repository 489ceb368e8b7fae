import json
from dataclasses import replace

import numpy as np
import pytest

from corpora import sift_lexicon
from mdkin.errors import ConfigurationError, DomainError, UsageError
from mdkin.kinematics import ClassStats, KinematicProfile
from mdkin.sifter import (
    SiftConfig,
    SignLexeme,
    lexicon_index,
    mean_reference_distance,
    rule_energy,
    rule_envelope,
    rule_strokes,
    sift_corpus,
)


def profile(strokes=3, energy=10.0, label="G"):
    return KinematicProfile(0.4, strokes, 1, energy, "s", label)


def stats(mean_e=10.0, std_e=2.0, mean_d=None, std_d=None, n=5):
    return ClassStats("G", mean_e, std_e, mean_d, std_d, 0.4, 0.05, n)


# --- individual rules --------------------------------------------------------------


def test_rule_strokes():
    lex = SignLexeme("G", 1, 3)
    assert rule_strokes(profile(3), lex)
    assert not rule_strokes(profile(4), lex)
    with pytest.raises(UsageError):
        rule_strokes(profile(3, label="H"), lex)


def test_rule_energy_inclusive_interval():
    s = stats(10.0, 2.0)
    assert rule_energy(profile(energy=10.0), s)
    assert rule_energy(profile(energy=12.0), s)
    assert rule_energy(profile(energy=8.0), s)
    assert not rule_energy(profile(energy=13.0), s)
    assert rule_energy(profile(energy=13.0), s, std_scale=1.5)
    with pytest.raises(ConfigurationError):
        rule_energy(profile(), replace(s, std_total_energy=None, sample_count=1))


def test_rule_envelope_constructed_reference():
    refs = [[0.0], [2.0], [4.0]]  # pairwise distances 2, 4, 2
    s = stats(mean_d=8 / 3, std_d=np.sqrt(4 / 3))
    # interval [1.512, 3.821]
    assert mean_reference_distance([0.0], refs) == pytest.approx(2.0)
    assert rule_envelope([0.0], refs, s)
    assert mean_reference_distance([2.0], refs) == pytest.approx(4 / 3)
    assert not rule_envelope([2.0], refs, s)
    assert not rule_envelope([10.0], refs, s)  # mean distance 8


def test_rule_envelope_identical_pair_class():
    refs = [[1.0, 2.0], [1.0, 2.0]]
    s = stats(mean_d=0.0, std_d=0.0)
    assert rule_envelope([1.0, 2.0], refs, s)
    assert not rule_envelope([1.0, 2.5], refs, s)


def test_rule_envelope_errors():
    with pytest.raises(ConfigurationError):
        rule_envelope([0.0], [], stats(mean_d=1.0, std_d=0.1))
    with pytest.raises(ConfigurationError):
        rule_envelope([0.0], [[0.0]], stats())


def test_lexicon_validation():
    with pytest.raises(DomainError):
        SignLexeme("", 1, 1)
    with pytest.raises(DomainError):
        SignLexeme("A", 3, 1)
    with pytest.raises(DomainError):
        SignLexeme("A", 1, 0)
    with pytest.raises(DomainError):
        lexicon_index([SignLexeme("A", 1, 1), SignLexeme("A", 2, 1)])


# --- corpus sifting ---------------------------------------------------------------------


def test_empty_candidate_list(reference_items):
    report = sift_corpus([], [r.sample for r in reference_items], sift_lexicon())
    assert report.verdicts == [] and report.n_sifted == 0
    assert report.summary()["n_candidates"] == 0


def test_reference_as_candidates_passes_rule_one(reference_items):
    samples = [r.sample for r in reference_items]
    report = sift_corpus(samples, samples, sift_lexicon())
    assert all(v.rule1_pass for v in report.verdicts)


def test_verdict_invariants(injected_report):
    for v in injected_report.verdicts:
        assert v.accepted == (v.rule1_pass and v.rule2_pass and v.rule3_pass)
    assert injected_report.n_sifted + injected_report.n_accepted == len(injected_report.verdicts)
    summary = injected_report.summary()
    for key in ("pct_wrong_strokes", "pct_wrong_handedness"):
        assert 0 <= summary[key] <= 100
        assert 0 <= summary["pre_sift"][key] <= 100


def test_reference_stats_cached_in_report(injected_report):
    records = injected_report.records()
    ref = [r for r in records if r["record"] == "reference_stats"]
    assert sorted(r["class_label"] for r in ref) == sorted(g.gloss for g in sift_lexicon())
    assert all(r["sample_count"] == 8 for r in ref)


def test_unknown_class_gets_error_verdict(reference_items, injected_items):
    stray = replace(injected_items[0].sample, class_label="NOPE", sample_id="stray")
    report = sift_corpus([stray, injected_items[1].sample], [r.sample for r in reference_items], sift_lexicon())
    bad = report.verdicts[0]
    assert bad.error and not bad.accepted and bad.measured_profile is None
    assert report.verdicts[1].error is None
    assert report.per_class["NOPE"]["errors"] == 1


def test_single_sample_reference_class_is_a_configuration_error(reference_items, injected_items):
    refs = [r.sample for r in reference_items if r.sample.class_label != "ONE"]
    refs.append(next(r.sample for r in reference_items if r.sample.class_label == "ONE"))
    one = next(c.sample for c in injected_items if c.sample.class_label == "ONE")
    with pytest.raises(ConfigurationError):
        sift_corpus([one], refs, sift_lexicon())


def test_deterministic_report(reference_items, injected_items):
    cands = [c.sample for c in injected_items[:12]]
    refs = [r.sample for r in reference_items]
    a = sift_corpus(cands, refs, sift_lexicon()).to_jsonl()
    b = sift_corpus(cands, refs, sift_lexicon()).to_jsonl()
    assert a == b
    for line in a.splitlines():
        json.loads(line)


def test_relaxing_intervals_never_rejects_more(reference_items, injected_items):
    cands = [c.sample for c in injected_items]
    refs = [r.sample for r in reference_items]
    base = sift_corpus(cands, refs, sift_lexicon())
    wide = sift_corpus(cands, refs, sift_lexicon(), SiftConfig(std_scale=1.7))
    for a, b in zip(base.verdicts, wide.verdicts):
        assert b.rule2_pass >= a.rule2_pass
        assert b.rule3_pass >= a.rule3_pass
        assert b.rule1_pass == a.rule1_pass
    assert wide.n_sifted <= base.n_sifted


def test_explicit_threshold_is_used(reference_items, injected_items):
    cands = [c.sample for c in injected_items[:5]]
    report = sift_corpus(cands, [r.sample for r in reference_items], sift_lexicon(), SiftConfig(handedness_threshold=0.674))
    assert report.handedness_threshold == 0.674
    for v in report.verdicts:
        assert v.measured_profile.handedness == (2 if v.measured_profile.normalized_energy >= 0.674 else 1)
