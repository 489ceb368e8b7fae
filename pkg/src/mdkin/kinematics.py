"""Sign kinematics from velocity envelopes: hand speed, strokes, handedness."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from mdkin.dtw import pairwise_dtw_stats
from mdkin.envelopes import EnvelopePair
from mdkin.errors import CalibrationError, DomainError
from mdkin.radar_sim import SPEED_OF_LIGHT, RadarConfig, velocity_resolution

#: threshold reported for max-normalised total energy on real recordings;
#: corpus specific, recalibrate whenever a labelled reference is available
DEFAULT_HANDEDNESS_THRESHOLD = 0.674

#: strokes closer than this are one stroke whose envelope plateau wobbles
#: across a Doppler bin; repetition faster than ~7 Hz is not produced by hands
MIN_STROKE_INTERVAL_S = 0.15


@dataclass(frozen=True)
class KinematicProfile:
    avg_speed_mps: float
    stroke_count: int
    handedness: int
    total_energy: float
    sample_id: str = ""
    class_label: str = ""
    normalized_energy: float | None = None

    def __post_init__(self):
        if self.avg_speed_mps < 0 or self.stroke_count < 0 or self.handedness not in (1, 2):
            raise DomainError(f"invalid kinematic profile {self!r}")

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "class_label": self.class_label,
            "avg_speed_mps": self.avg_speed_mps,
            "stroke_count": self.stroke_count,
            "handedness": self.handedness,
            "total_energy": self.total_energy,
            "normalized_energy": self.normalized_energy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KinematicProfile":
        ne = d.get("normalized_energy")
        return cls(
            avg_speed_mps=float(d["avg_speed_mps"]),
            stroke_count=int(d["stroke_count"]),
            handedness=int(d["handedness"]),
            total_energy=float(d["total_energy"]),
            sample_id=str(d.get("sample_id", "")),
            class_label=str(d.get("class_label", "")),
            normalized_energy=None if ne is None else float(ne),
        )


@dataclass(frozen=True)
class PeakConfig:
    """Peak-picking thresholds for stroke counting (velocities in m/s).

    ``None`` fields take resolution-scaled defaults in :meth:`resolve`:
    height 2 v_res, prominence 1 v_res, and a spacing covering
    ``MIN_STROKE_INTERVAL_S`` (4 frames when the frame interval is unknown).
    """

    min_height_mps: float | None = None
    min_prominence_mps: float | None = None
    min_separation_frames: int | None = None

    def __post_init__(self):
        for v in (self.min_height_mps, self.min_prominence_mps, self.min_separation_frames):
            if v is not None and v < 0:
                raise DomainError("peak thresholds must be >= 0")

    def resolve(self, config: RadarConfig | None = None, frame_interval_s: float | None = None) -> "PeakConfig":
        v_res = velocity_resolution(config or RadarConfig())
        frames = 4
        if frame_interval_s is not None:
            if not frame_interval_s > 0:
                raise DomainError("frame interval must be > 0")
            frames = max(1, math.ceil(MIN_STROKE_INTERVAL_S / frame_interval_s - 1e-9))
        return PeakConfig(
            2.0 * v_res if self.min_height_mps is None else self.min_height_mps,
            v_res if self.min_prominence_mps is None else self.min_prominence_mps,
            frames if self.min_separation_frames is None else self.min_separation_frames,
        )

    @classmethod
    def for_radar(cls, config: RadarConfig | None = None, frame_interval_s: float | None = None) -> "PeakConfig":
        return cls().resolve(config, frame_interval_s)


@dataclass(frozen=True)
class ClassStats:
    class_label: str
    mean_total_energy: float
    std_total_energy: float | None
    mean_dtw: float | None
    std_dtw: float | None
    mean_speed_mps: float
    std_speed_mps: float | None
    sample_count: int

    @property
    def has_std(self) -> bool:
        return self.sample_count >= 2

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "ClassStats":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def average_hand_speed(env: EnvelopePair, carrier_hz: float, c: float = SPEED_OF_LIGHT) -> float:
    """Mean over frames of ``(|v_upper| + |v_lower|) / 2``."""
    if len(env) == 0:
        raise DomainError("envelope is empty")
    up, lo = env.velocities(carrier_hz, c)
    return float(np.mean(0.5 * (np.abs(up) + np.abs(lo))))


def find_peaks(x: Sequence[float], min_height=0.0, min_prominence=0.0, min_separation=0) -> np.ndarray:
    """Indices of local maxima passing height, prominence and spacing tests.

    A flat maximal run counts once and is reported at its first sample.
    Runs touching either end of the series are not peaks. Heights must
    exceed ``min_height`` strictly; prominence (peak height minus the higher
    of the two flanking minima, each taken up to the nearest higher sample)
    must be >= ``min_prominence``. Survivors are then thinned greedily from
    the tallest down so that kept peaks are at least ``min_separation``
    samples apart.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    candidates = []
    i = 1
    while i < n - 1:
        if x[i - 1] < x[i]:
            r = i
            while r + 1 < n and x[r + 1] == x[i]:
                r += 1
            if r + 1 < n and x[r + 1] < x[i]:
                candidates.append((i, r))
            i = r + 1
        else:
            i += 1

    kept = []
    for left, right in candidates:
        h = x[left]
        if not h > min_height:
            continue
        lmin = h
        k = left - 1
        while k >= 0 and x[k] <= h:
            lmin = min(lmin, x[k])
            k -= 1
        rmin = h
        k = right + 1
        while k < n and x[k] <= h:
            rmin = min(rmin, x[k])
            k += 1
        if h - max(lmin, rmin) >= min_prominence:
            kept.append(left)

    if min_separation > 1 and len(kept) > 1:
        order = sorted(kept, key=lambda p: (-x[p], p))
        chosen = []
        for p in order:
            if all(abs(p - q) >= min_separation for q in chosen):
                chosen.append(p)
        kept = sorted(chosen)
    return np.asarray(kept, dtype=int)


def count_strokes(
    env: EnvelopePair,
    carrier_hz: float,
    cfg: PeakConfig | None = None,
    c: float = SPEED_OF_LIGHT,
) -> int:
    """Number of positive peaks in the upper velocity envelope."""
    if len(env) == 0:
        raise DomainError("envelope is empty")
    cfg = (cfg or PeakConfig()).resolve()
    up, _ = env.velocities(carrier_hz, c)
    return int(find_peaks(up, cfg.min_height_mps, cfg.min_prominence_mps, cfg.min_separation_frames).size)


def classify_handedness(total_energy: float, threshold: float = DEFAULT_HANDEDNESS_THRESHOLD) -> int:
    """Two-handed when the (normalised) energy reaches the threshold."""
    if not threshold > 0:
        raise DomainError("threshold must be > 0")
    if total_energy < 0:
        raise DomainError("total energy must be >= 0")
    return 2 if total_energy >= threshold else 1


def normalize_energies(energies: Sequence[float], scale: float | None = None) -> np.ndarray:
    """Divide by ``scale`` (default: the corpus maximum)."""
    e = np.asarray(energies, dtype=float)
    scale = float(e.max()) if scale is None else scale
    if not scale > 0:
        raise DomainError("energy scale must be > 0")
    return e / scale


@dataclass(frozen=True)
class HandednessCalibration:
    threshold: float
    accuracy: float
    energy_scale: float = 1.0


def calibrate_threshold(energies: Sequence[float], handedness: Sequence[int]) -> tuple[float, float]:
    """Best 0/1-accuracy threshold over midpoints of sorted distinct energies.

    The scan also includes the smallest energy (all two-handed) and the next
    float above the largest (all one-handed), so accuracy never falls below
    the majority-class rate. Ties resolve to the smallest threshold.
    """
    e = np.asarray(energies, dtype=float)
    y = np.asarray(handedness, dtype=int)
    if e.shape != y.shape or e.size == 0:
        raise CalibrationError("energies and labels must be non-empty and aligned")
    if not (np.any(y == 1) and np.any(y == 2)):
        raise CalibrationError("calibration needs at least one sample of each handedness")
    u = np.unique(e)
    cands = np.concatenate([[u[0]], 0.5 * (u[:-1] + u[1:]), [np.nextafter(u[-1], np.inf)]])
    cands = cands[cands > 0]
    if cands.size == 0:
        raise CalibrationError("no positive threshold separates the energies")
    correct = ((e[None, :] >= cands[:, None]) == (y[None, :] == 2)).sum(axis=1)
    best = int(np.argmax(correct))  # first max == smallest threshold
    return float(cands[best]), float(correct[best] / e.size)


def _expected_handedness(lexicon, label):
    entry = lexicon[label]
    return int(getattr(entry, "expected_handedness", entry))


def calibrate_handedness_threshold(
    profiles: Sequence[KinematicProfile],
    lexicon: Mapping,
    energy_scale: float | None = None,
) -> HandednessCalibration:
    """Calibrate on max-normalised total energies against lexicon labels.

    ``lexicon`` maps class label to an object with ``expected_handedness``
    (or directly to 1/2). Profiles whose class is not in the lexicon are
    ignored.
    """
    usable = [p for p in profiles if p.class_label in lexicon]
    if not usable:
        raise CalibrationError("no profile has a lexicon entry")
    raw = [p.total_energy for p in usable]
    scale = float(max(raw)) if energy_scale is None else float(energy_scale)
    if not scale > 0:
        raise CalibrationError("all energies are zero")
    labels = [_expected_handedness(lexicon, p.class_label) for p in usable]
    thr, acc = calibrate_threshold(normalize_energies(raw, scale), labels)
    return HandednessCalibration(thr, acc, scale)


def _mean_std(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), (float(v.std(ddof=1)) if v.size >= 2 else None)


def corpus_kinematic_stats(
    profiles: Iterable[KinematicProfile],
    curves: Mapping[str, Sequence[float]] | None = None,
) -> dict[str, ClassStats]:
    """Per-class mean/std of total energy, hand speed and pairwise DTW.

    ``curves`` maps sample id to the envelope curve used for DTW; when it is
    omitted the DTW fields are ``None``. Std fields (and DTW statistics) are
    ``None`` for classes with fewer than two samples.
    """
    groups: dict[str, list[KinematicProfile]] = defaultdict(list)
    for p in profiles:
        groups[p.class_label].append(p)
    out = {}
    for label in sorted(groups):
        members = groups[label]
        e_mean, e_std = _mean_std([p.total_energy for p in members])
        v_mean, v_std = _mean_std([p.avg_speed_mps for p in members])
        d_mean = d_std = None
        if curves is not None and len(members) >= 2:
            d_mean, d_std = pairwise_dtw_stats([curves[p.sample_id] for p in members])
        out[label] = ClassStats(label, e_mean, e_std, d_mean, d_std, v_mean, v_std, len(members))
    return out
