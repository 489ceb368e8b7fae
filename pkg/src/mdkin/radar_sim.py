"""FMCW slow-time return simulation from point-scatterer range tracks.

Only the slow-time phase history is modelled: the received sample for pulse
``n`` is the coherent sum of ``a_i * exp(-j 4 pi f_c R_i[n] / c)`` over all
scatterers, i.e. one range-gated complex stream per recording.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mdkin.errors import DomainError, ShapeError

SPEED_OF_LIGHT = 299_792_458.0
#: rounded value that reproduces the commonly quoted 0.0375 m / 0.0487 m/s figures
COMPAT_SPEED_OF_LIGHT = 3.0e8


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RadarConfig:
    """Transmit waveform and frame parameters.

    The pulse repetition interval equals the chirp duration, so the slow-time
    sample rate is ``1 / chirp_duration_s``. Defaults follow a 77 GHz / 4 GHz
    sensor with a 40 ms CPI; the 500 us chirp (2 kHz PRF) is this package's
    choice, not a measured hardware setting.
    """

    center_frequency_hz: float = 77e9
    bandwidth_hz: float = 4e9
    chirp_duration_s: float = 500e-6
    pulses_per_cpi: int = 80
    paper_compat: bool = False

    def __post_init__(self):
        for name in ("center_frequency_hz", "bandwidth_hz", "chirp_duration_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if int(self.pulses_per_cpi) != self.pulses_per_cpi or self.pulses_per_cpi < 1:
            raise DomainError(f"pulses_per_cpi must be an integer >= 1, got {self.pulses_per_cpi!r}")
        object.__setattr__(self, "pulses_per_cpi", int(self.pulses_per_cpi))

    @property
    def c(self) -> float:
        return COMPAT_SPEED_OF_LIGHT if self.paper_compat else SPEED_OF_LIGHT

    @property
    def cpi_duration_s(self) -> float:
        return self.pulses_per_cpi * self.chirp_duration_s

    @property
    def slow_time_sample_rate_hz(self) -> float:
        return 1.0 / self.chirp_duration_s

    @property
    def chirp_slope_hz_per_s(self) -> float:
        return self.bandwidth_hz / self.chirp_duration_s

    @property
    def wavelength_m(self) -> float:
        return self.c / self.center_frequency_hz

    @property
    def max_unambiguous_velocity_mps(self) -> float:
        # |f_D| < PRF / 2
        return 0.5 * self.slow_time_sample_rate_hz * self.c / (2.0 * self.center_frequency_hz)

    def to_dict(self) -> dict:
        return {
            "center_frequency_hz": self.center_frequency_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "chirp_duration_s": self.chirp_duration_s,
            "pulses_per_cpi": self.pulses_per_cpi,
            "paper_compat": self.paper_compat,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RadarConfig":
        return cls(
            center_frequency_hz=float(d["center_frequency_hz"]),
            bandwidth_hz=float(d["bandwidth_hz"]),
            chirp_duration_s=float(d["chirp_duration_s"]),
            pulses_per_cpi=int(d["pulses_per_cpi"]),
            paper_compat=bool(d.get("paper_compat", False)),
        )


@dataclass(frozen=True)
class ScattererTrajectory:
    """One point scatterer: linear amplitude and range per pulse (metres)."""

    amplitude: float
    range_track: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise DomainError(f"amplitude must be finite and >= 0, got {self.amplitude!r}")
        track = np.asarray(self.range_track, dtype=float)
        if track.ndim != 1 or track.size == 0:
            raise ShapeError("range_track must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(track)) or np.any(track <= 0):
            raise DomainError("range_track samples must be finite and > 0")
        object.__setattr__(self, "range_track", _frozen(track, float))

    def __len__(self):
        return self.range_track.size


@dataclass(frozen=True)
class IQSeries:
    """Complex slow-time samples ``I[n] + jQ[n]``, one per pulse."""

    samples: np.ndarray
    sample_interval_s: float
    config: RadarConfig

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=complex)
        if x.ndim != 1 or x.size < 1:
            raise ShapeError("IQ samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(x)):
            raise DomainError("IQ samples must be finite")
        object.__setattr__(self, "samples", _frozen(x, complex))

    def __len__(self):
        return self.samples.size

    @property
    def slow_time_s(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_interval_s


def transmit_chirp_phase(config: RadarConfig, fast_time_s):
    """Normalised FMCW transmit sample ``exp{j 2 pi (f_c t + k t^2 / 2)}``.

    ``fast_time_s`` may be a scalar or an array; every value must lie within
    the chirp window ``|t| <= tau / 2``.
    """
    t = np.asarray(fast_time_s, dtype=float)
    half = 0.5 * config.chirp_duration_s
    if not np.all(np.isfinite(t)) or np.any(np.abs(t) > half):
        raise DomainError(f"fast time must satisfy |t| <= {half!r} s")
    cycles = config.center_frequency_hz * t + 0.5 * config.chirp_slope_hz_per_s * t * t
    # reduce before scaling by 2*pi to keep precision at large f_c * t
    out = np.exp(2j * np.pi * np.mod(cycles, 1.0))
    return complex(out) if out.ndim == 0 else out


def simulate_returns(
    config: RadarConfig,
    scatterers: Sequence[ScattererTrajectory],
    noise_power: float | None = None,
    seed: int | None = None,
) -> IQSeries:
    """Superpose point-scatterer returns on the slow-time grid.

    Additive circularly-symmetric complex Gaussian noise of linear power
    ``noise_power`` is added only when both ``noise_power`` and ``seed`` are
    given.
    """
    if len(scatterers) == 0:
        raise ShapeError("at least one scatterer is required")
    n = len(scatterers[0])
    if any(len(s) != n for s in scatterers):
        raise ShapeError("all range tracks must share one slow-time grid")
    if (noise_power is None) != (seed is None):
        raise DomainError("noise requires both noise_power and seed")

    two_over_lambda = 2.0 * config.center_frequency_hz / config.c
    x = np.zeros(n, dtype=complex)
    for s in scatterers:
        # round-trip phase in cycles, reduced mod 1 for precision
        cycles = np.mod(two_over_lambda * s.range_track, 1.0)
        x += s.amplitude * np.exp(-2j * np.pi * cycles)

    if noise_power is not None:
        if not (math.isfinite(noise_power) and noise_power >= 0):
            raise DomainError("noise_power must be finite and >= 0")
        rng = np.random.default_rng(seed)
        scale = math.sqrt(noise_power / 2.0)
        x = x + scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    return IQSeries(x, config.chirp_duration_s, config)


def range_resolution(config: RadarConfig) -> float:
    return config.c / (2.0 * config.bandwidth_hz)


def velocity_resolution(config: RadarConfig) -> float:
    return config.wavelength_m / (2.0 * config.cpi_duration_s)


def doppler_shift(radial_velocity_mps, carrier_hz: float, c: float = SPEED_OF_LIGHT):
    """Doppler shift in Hz; approaching targets (v > 0) give positive shifts."""
    if not carrier_hz > 0:
        raise DomainError("carrier_hz must be > 0")
    return 2.0 * np.asarray(radial_velocity_mps, dtype=float)[()] * carrier_hz / c


def beat_to_range(beat_hz: float, config: RadarConfig) -> float:
    if beat_hz < 0:
        raise DomainError("beat frequency must be >= 0")
    return config.c * config.chirp_duration_s * beat_hz / (2.0 * config.bandwidth_hz)


# ---------------------------------------------------------------------------
# synthetic signs with known kinematics


@dataclass(frozen=True)
class SyntheticSignSpec:
    """Ground-truth kinematics for a synthetic sign.

    Each stroke is a raised-cosine lobe towards the radar (peak
    ``peak_speed_mps``) followed by a raised-cosine retraction lobe whose
    peak is ``retraction_ratio * peak_speed_mps``; the retraction duration is
    chosen so the hand returns to its start range. ``gap_s`` of rest follows
    every retraction. ``stroke_scales`` optionally multiplies the peak speed
    of each stroke individually. A second hand, when present, moves with
    ``second_hand_speed_ratio`` times the first hand's velocity.
    """

    hands: int = 1
    strokes: int = 1
    peak_speed_mps: float = 0.5
    duration_s: float = 2.0
    hand_amplitude: float = 1.0
    torso_amplitude: float = 0.05
    hand_range_m: float = 1.2
    torso_range_m: float = 1.5
    second_hand_speed_ratio: float = 0.9
    second_hand_range_offset_m: float = 0.07
    retraction_ratio: float = 1.0
    gap_s: float = 0.0
    stroke_scales: tuple | None = None

    def __post_init__(self):
        if self.hands not in (1, 2):
            raise DomainError(f"hands must be 1 or 2, got {self.hands!r}")
        if int(self.strokes) != self.strokes or self.strokes < 1:
            raise DomainError(f"strokes must be an integer >= 1, got {self.strokes!r}")
        if not self.peak_speed_mps > 0:
            raise DomainError("peak_speed_mps must be > 0")
        if not self.duration_s > 0:
            raise DomainError("duration_s must be > 0")
        if not 0 < self.second_hand_speed_ratio <= 1:
            raise DomainError("second_hand_speed_ratio must lie in (0, 1]")
        if not self.retraction_ratio > 0:
            raise DomainError("retraction_ratio must be > 0")
        if self.gap_s < 0 or self.hand_amplitude < 0 or self.torso_amplitude < 0:
            raise DomainError("gap and amplitudes must be >= 0")
        if self.stroke_duration_s <= 0:
            raise DomainError("gap_s leaves no time for the strokes")
        if self.stroke_scales is not None:
            scales = tuple(float(x) for x in self.stroke_scales)
            if len(scales) != self.strokes or any(not x > 0 for x in scales):
                raise DomainError("stroke_scales needs one positive factor per stroke")
            object.__setattr__(self, "stroke_scales", scales)

    @property
    def scales(self) -> np.ndarray:
        """Per-stroke multiplier of the peak speed (all ones by default)."""
        if self.stroke_scales is None:
            return np.ones(self.strokes)
        return np.asarray(self.stroke_scales)

    @property
    def cycle_s(self) -> float:
        return self.duration_s / self.strokes

    @property
    def stroke_duration_s(self) -> float:
        """Duration of one approach lobe."""
        return (self.cycle_s - self.gap_s) / (1.0 + 1.0 / self.retraction_ratio)

    @property
    def retraction_duration_s(self) -> float:
        return self.stroke_duration_s / self.retraction_ratio

    @property
    def max_speed_mps(self) -> float:
        return self.peak_speed_mps * max(1.0, self.retraction_ratio) * float(self.scales.max())

    def mean_envelope_speed(self) -> float:
        """Closed-form time average of ``(|max_h v_h| + |min_h v_h|) / 2``.

        For one hand this is the mean of ``|v|``; with two hands moving in
        the same direction it is the mean of the two hands' speeds.
        """
        # each raised-cosine lobe has mean peak/2; rT_r == T_p per cycle
        mean_abs = self.peak_speed_mps * float(self.scales.mean()) * self.stroke_duration_s / self.cycle_s
        if self.hands == 2:
            mean_abs *= 0.5 * (1.0 + self.second_hand_speed_ratio)
        return mean_abs

    @classmethod
    def with_mean_speed(cls, mean_speed_mps: float, **kwargs) -> "SyntheticSignSpec":
        """Build a spec whose :meth:`mean_envelope_speed` equals ``mean_speed_mps``."""
        unit = cls(peak_speed_mps=1.0, **kwargs)
        return cls(peak_speed_mps=mean_speed_mps / unit.mean_envelope_speed(), **kwargs)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if d["stroke_scales"] is not None:
            d["stroke_scales"] = list(d["stroke_scales"])
        return d


def _hand_kinematics(spec: SyntheticSignSpec, t: np.ndarray):
    """Velocity (towards radar) and displacement of the lead hand at times t."""
    t = np.asarray(t, dtype=float)
    r = spec.retraction_ratio
    tp, tr = spec.stroke_duration_s, spec.retraction_duration_s
    cycle = spec.cycle_s
    idx = np.clip(np.floor(t / cycle), 0, spec.strokes - 1)
    u = t - idx * cycle
    peak = spec.peak_speed_mps * spec.scales[idx.astype(int)]
    inside = (t >= 0) & (t < spec.strokes * cycle)

    v = np.zeros_like(t)
    d = np.zeros_like(t)

    approach = inside & (u < tp)
    ua, p = u[approach], peak[approach]
    v[approach] = 0.5 * p * (1.0 - np.cos(2 * np.pi * ua / tp))
    d[approach] = 0.5 * p * (ua - tp / (2 * np.pi) * np.sin(2 * np.pi * ua / tp))

    retract = inside & (u >= tp) & (u < tp + tr)
    w, p = u[retract] - tp, peak[retract]
    v[retract] = -0.5 * r * p * (1.0 - np.cos(2 * np.pi * w / tr))
    d[retract] = 0.5 * p * tp - 0.5 * r * p * (w - tr / (2 * np.pi) * np.sin(2 * np.pi * w / tr))
    return v, d


@dataclass(frozen=True)
class SyntheticSign:
    """Scatterer tracks of a synthetic sign plus its analytic kinematics."""

    spec: SyntheticSignSpec
    config: RadarConfig
    scatterers: list = field(repr=False)
    slow_time_s: np.ndarray = field(repr=False)

    def velocity_at(self, t) -> np.ndarray:
        """Analytic radial velocity of each hand, shape ``(hands, len(t))``."""
        v, _ = _hand_kinematics(self.spec, np.atleast_1d(t))
        rows = [v]
        if self.spec.hands == 2:
            rows.append(self.spec.second_hand_speed_ratio * v)
        return np.vstack(rows)

    @property
    def hand_velocity_mps(self) -> np.ndarray:
        return self.velocity_at(self.slow_time_s)

    def extreme_velocities(self, t):
        """Analytic (upper, lower) envelope truth: max and min over the hands."""
        vel = self.velocity_at(t)
        return vel.max(axis=0), vel.min(axis=0)

    def envelope_speed(self, t) -> float:
        upper, lower = self.extreme_velocities(t)
        return float(np.mean(0.5 * (np.abs(upper) + np.abs(lower))))

    def simulate(self, noise_power=None, seed=None) -> IQSeries:
        return simulate_returns(self.config, self.scatterers, noise_power=noise_power, seed=seed)


def synth_sign_trajectory(spec: SyntheticSignSpec, config: RadarConfig | None = None) -> SyntheticSign:
    """Scatterer tracks for a sign: one or two hands over a static torso.

    Raises :class:`DomainError` when the fastest hand motion would alias,
    i.e. its Doppler shift reaches half the pulse repetition frequency.
    """
    config = config or RadarConfig()
    f_max = abs(doppler_shift(spec.max_speed_mps, config.center_frequency_hz, config.c))
    if f_max >= 0.5 * config.slow_time_sample_rate_hz:
        raise DomainError(
            f"peak speed {spec.max_speed_mps} m/s exceeds the unambiguous velocity "
            f"{config.max_unambiguous_velocity_mps:.4g} m/s"
        )
    n = int(round(spec.duration_s / config.chirp_duration_s))
    if n < 1:
        raise DomainError("duration shorter than one pulse")
    t = np.arange(n) * config.chirp_duration_s
    _, disp = _hand_kinematics(spec, t)

    tracks = [ScattererTrajectory(spec.hand_amplitude, spec.hand_range_m - disp)]
    if spec.hands == 2:
        q = spec.second_hand_speed_ratio
        r0 = spec.hand_range_m + spec.second_hand_range_offset_m
        tracks.append(ScattererTrajectory(spec.hand_amplitude, r0 - q * disp))
    tracks.append(ScattererTrajectory(spec.torso_amplitude, np.full(n, spec.torso_range_m)))
    return SyntheticSign(spec=spec, config=config, scatterers=tracks, slow_time_s=_frozen(t, float))
