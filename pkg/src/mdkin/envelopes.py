"""Upper/lower Doppler envelopes by energy-based thresholding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import medfilt

from mdkin.errors import DomainError
from mdkin.radar_sim import SPEED_OF_LIGHT
from mdkin.tf_analysis import Spectrogram, column_energy

DEFAULT_SCALE_FACTOR = 0.01


@dataclass(frozen=True)
class EnvelopePair:
    """Per-column extreme Doppler frequencies (Hz) tagged by thresholding."""

    upper_hz: np.ndarray
    lower_hz: np.ndarray
    scale_factor: float = DEFAULT_SCALE_FACTOR
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        up = np.asarray(self.upper_hz, dtype=float)
        lo = np.asarray(self.lower_hz, dtype=float)
        if up.shape != lo.shape or up.ndim != 1:
            raise DomainError("upper and lower envelopes must be 1-D with equal length")
        up.setflags(write=False)
        lo.setflags(write=False)
        object.__setattr__(self, "upper_hz", up)
        object.__setattr__(self, "lower_hz", lo)

    def __len__(self):
        return self.upper_hz.size

    def velocities(self, carrier_hz: float, c: float = SPEED_OF_LIGHT):
        return envelope_to_velocity(self.upper_hz, carrier_hz, c), envelope_to_velocity(self.lower_hz, carrier_hz, c)

    def velocity_curve(self, carrier_hz: float, c: float = SPEED_OF_LIGHT) -> np.ndarray:
        """Upper then lower velocity envelope concatenated into one curve."""
        up, lo = self.velocities(carrier_hz, c)
        return np.concatenate([up, lo])


def extract_envelopes(
    spec: Spectrogram,
    scale_factor: float = DEFAULT_SCALE_FACTOR,
    smooth: bool = False,
) -> EnvelopePair:
    """Tag per-column envelope pixels against ``scale_factor * column energy``.

    The upper envelope is the first bin with power >= threshold scanning down
    from the highest frequency; the lower envelope scans up from the lowest.
    A side with no qualifying bin (including all-zero columns) reads 0 Hz.
    ``smooth`` applies a 3-tap median filter to both series.
    """
    if not 0 < scale_factor < 1:
        raise DomainError(f"scale factor must lie in (0, 1), got {scale_factor!r}")
    power = spec.power
    energy = column_energy(spec)
    hits = (power >= scale_factor * energy[None, :]) & (energy[None, :] > 0)
    any_hit = hits.any(axis=0)
    nb = power.shape[0]
    first_from_top = nb - 1 - np.argmax(hits[::-1, :], axis=0)
    first_from_bottom = np.argmax(hits, axis=0)

    freq = spec.freq_axis_hz
    upper = np.where(any_hit, freq[first_from_top], 0.0)
    lower = np.where(any_hit, freq[first_from_bottom], 0.0)
    if smooth and upper.size >= 3:
        upper = medfilt(upper, 3)
        lower = medfilt(lower, 3)
    meta = {"window": spec.window.to_dict(), "n_frames": spec.n_frames}
    return EnvelopePair(upper, lower, scale_factor, meta)


def envelope_to_velocity(env_hz, carrier_hz: float, c: float = SPEED_OF_LIGHT) -> np.ndarray:
    """Invert the Doppler relation: ``v = f * c / (2 f_c)``, sign preserved."""
    if not carrier_hz > 0:
        raise DomainError("carrier_hz must be > 0")
    return np.asarray(env_hz, dtype=float) * c / (2.0 * carrier_hz)
