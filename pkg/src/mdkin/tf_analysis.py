"""Micro-Doppler spectrograms (squared-magnitude STFT) and energy sums.

No clutter filtering is applied: at 77 GHz the slow hand motion overlaps the
zero-Doppler band, so notch filters would remove signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from mdkin.errors import DomainError, ShapeError
from mdkin.radar_sim import IQSeries, RadarConfig

WINDOW_KINDS = ("hann", "hamming", "rectangular", "gaussian")


@dataclass(frozen=True)
class WindowMeta:
    kind: str = "hann"
    length: int = 64
    hop: int = 8
    nfft: int = 64
    gaussian_std: float | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "length": self.length,
            "hop": self.hop,
            "nfft": self.nfft,
            "gaussian_std": self.gaussian_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WindowMeta":
        std = d.get("gaussian_std")
        return cls(
            kind=str(d["kind"]),
            length=int(d["length"]),
            hop=int(d["hop"]),
            nfft=int(d["nfft"]),
            gaussian_std=None if std is None else float(std),
        )


@dataclass(frozen=True)
class Spectrogram:
    """Linear power ``|STFT|^2`` with rows = Doppler bins, columns = frames.

    ``freq_axis_hz`` is ascending with 0 Hz at index ``nfft // 2``. For even
    FFT lengths the grid runs from ``-PRF/2`` to ``PRF/2 - df``: every bin
    except the ``-PRF/2`` (Nyquist) bin has its mirror image on the grid.
    ``time_axis_s`` holds the centre time of each frame.
    """

    power: np.ndarray
    freq_axis_hz: np.ndarray
    time_axis_s: np.ndarray
    window: WindowMeta = field(default_factory=WindowMeta)
    radar: RadarConfig | None = None

    def __post_init__(self):
        p = np.asarray(self.power, dtype=float)
        f = np.asarray(self.freq_axis_hz, dtype=float)
        t = np.asarray(self.time_axis_s, dtype=float)
        if p.ndim != 2:
            raise ShapeError("power must be a 2-D matrix")
        if f.shape != (p.shape[0],) or t.shape != (p.shape[1],):
            raise ShapeError(f"axes {f.shape}/{t.shape} do not match power {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("power entries must be finite and >= 0")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise DomainError("freq_axis_hz must be strictly increasing")
        for name, arr in (("power", p), ("freq_axis_hz", f), ("time_axis_s", t)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return self.power.shape

    @property
    def n_bins(self) -> int:
        return self.power.shape[0]

    @property
    def n_frames(self) -> int:
        return self.power.shape[1]

    @property
    def bin_width_hz(self) -> float:
        return float(self.freq_axis_hz[1] - self.freq_axis_hz[0]) if self.n_bins > 1 else 0.0

    def scaled(self, factor: float) -> "Spectrogram":
        return Spectrogram(self.power * factor, self.freq_axis_hz, self.time_axis_s, self.window, self.radar)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def make_window(kind: str, length: int, gaussian_std: float | None = None) -> np.ndarray:
    """Periodic (DFT-even) analysis window."""
    if kind not in WINDOW_KINDS:
        raise DomainError(f"window kind must be one of {WINDOW_KINDS}, got {kind!r}")
    if kind == "rectangular":
        return np.ones(length)
    if kind == "gaussian":
        std = gaussian_std if gaussian_std is not None else length / 8.0
        return get_window(("gaussian", std), length, fftbins=True)
    return get_window(kind, length, fftbins=True)


def stft_spectrogram(
    iq: IQSeries,
    window_kind: str = "hann",
    window_len: int = 64,
    hop: int = 8,
    nfft: int | None = None,
    gaussian_std: float | None = None,
) -> Spectrogram:
    """Spectrogram of a slow-time series: windowed DFT per frame, squared.

    Only full windows produce columns, so the frame count is
    ``(N - window_len) // hop + 1``. The FFT length defaults to the next
    power of two >= ``window_len`` (zero padding). With this unnormalised DFT,
    a rectangular window satisfies ``sum(column) == nfft * sum(|x_frame|^2)``.
    """
    x = iq.samples
    n = x.size
    if window_len < 1 or hop < 1:
        raise DomainError("window_len and hop must be >= 1")
    if window_len > n:
        raise ShapeError(f"window of {window_len} pulses exceeds signal length {n}")
    nfft = _next_pow2(window_len) if nfft is None else int(nfft)
    if nfft < window_len:
        raise DomainError("nfft must be >= window_len")
    win = make_window(window_kind, window_len, gaussian_std)

    n_frames = (n - window_len) // hop + 1
    starts = np.arange(n_frames) * hop
    frames = x[starts[:, None] + np.arange(window_len)[None, :]] * win[None, :]
    spec = np.fft.fftshift(np.fft.fft(frames, n=nfft, axis=1), axes=1)
    power = (spec.real**2 + spec.imag**2).T

    dt = iq.sample_interval_s
    freq = np.fft.fftshift(np.fft.fftfreq(nfft, d=dt))
    times = (starts + 0.5 * (window_len - 1)) * dt
    meta = WindowMeta(
        kind=window_kind,
        length=window_len,
        hop=hop,
        nfft=nfft,
        gaussian_std=(gaussian_std if gaussian_std is not None else window_len / 8.0)
        if window_kind == "gaussian"
        else None,
    )
    return Spectrogram(power, freq, times, meta, iq.config)


def column_energy(spec: Spectrogram) -> np.ndarray:
    """Energy per slow-time column: sum of linear power over Doppler bins."""
    return spec.power.sum(axis=0)


def total_energy(spec: Spectrogram) -> float:
    return float(column_energy(spec).sum())
