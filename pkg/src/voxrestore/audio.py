"""Core audio containers, WAV I/O, STFT analysis/synthesis, resampling and VAD."""

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.io import wavfile


@dataclass
class AudioBuffer:
    """A mono floating-point signal with its sample rate.

    Samples live in (nominally) [-1, 1] as float64. Values slightly
    outside are tolerated; NaN/inf are not.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {a.shape}")
        if a.size == 0:
            raise ValueError("empty audio buffer")
        if not np.all(np.isfinite(a)):
            raise ValueError("audio contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        self.samples = a
        self.sample_rate = int(self.sample_rate)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class FrameParams:
    """Short-time analysis geometry, stored in milliseconds so a single
    value works across sample rates."""

    window_ms: float = 25.0
    hop_ms: float = 15.0
    fft_size: Optional[int] = None   # None: next power of two >= window length
    window: str = "hann"

    def __post_init__(self):
        if self.window_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("window_ms and hop_ms must be positive")
        if self.hop_ms > self.window_ms:
            raise ValueError("hop must not exceed window")
        if self.window not in ("hann", "hamming", "rect"):
            raise ValueError(f"unknown window {self.window!r}")

    def window_length(self, sample_rate: int) -> int:
        return int(round(self.window_ms * sample_rate / 1000.0))

    def hop_length(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def fft_length(self, sample_rate: int) -> int:
        if self.fft_size is not None:
            n = int(self.fft_size)
            if n < self.window_length(sample_rate):
                raise ValueError("fft_size smaller than the analysis window")
            return n
        n = 1
        while n < self.window_length(sample_rate):
            n *= 2
        return n

    def window_array(self, sample_rate: int) -> np.ndarray:
        n = self.window_length(sample_rate)
        if self.window == "rect":
            return np.ones(n)
        k = np.arange(n)
        if self.window == "hann":
            return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / n)   # periodic form
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / n)


DEFAULT_FRAME = FrameParams()


@dataclass
class Spectrogram:
    """Magnitudes (and optionally phases) of a short-time Fourier analysis.

    magnitudes: (n_frames, n_bins) non-negative float64
    phases: same shape in radians, or None for magnitude-only data
    """

    magnitudes: np.ndarray
    phases: Optional[np.ndarray]
    params: FrameParams
    sample_rate: int

    def __post_init__(self):
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("magnitudes must be 2-D (frames x bins)")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("magnitudes must be finite and non-negative")
        expected = self.params.fft_length(self.sample_rate) // 2 + 1
        if m.shape[1] != expected:
            raise ValueError(
                f"bin count {m.shape[1]} inconsistent with fft size "
                f"({expected} expected)")
        if self.phases is not None:
            p = np.asarray(self.phases, dtype=np.float64)
            if p.shape != m.shape:
                raise ValueError("phases shape differs from magnitudes")
            if not np.all(np.isfinite(p)):
                raise ValueError("phases must be finite")
            self.phases = p
        self.magnitudes = m

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]


def load_wav(path) -> AudioBuffer:
    """Read a WAV file as a mono float64 AudioBuffer.

    Integer PCM is scaled by the type's full-scale positive range
    (e.g. int16 by 32768); float data is taken as-is. Multi-channel
    input is averaged down to mono after scaling.
    """
    try:
        sr, data = wavfile.read(os.fspath(path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ValueError(f"cannot read WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"WAV file {path} contains no samples")
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioBuffer(x, int(sr))


def save_wav(path, buf: AudioBuffer, encoding: str = "pcm16") -> None:
    """Write an AudioBuffer to disk as PCM16 or float32 WAV.

    Refuses non-finite data and missing parent directories before
    touching the filesystem, so a failed call leaves no partial file.
    """
    if not np.all(np.isfinite(buf.samples)):
        raise ValueError("refusing to write non-finite samples")
    parent = os.path.dirname(os.path.abspath(os.fspath(path)))
    if not os.path.isdir(parent):
        raise FileNotFoundError(f"directory does not exist: {parent}")
    if encoding == "pcm16":
        q = np.rint(buf.samples * 32768.0)
        data = np.clip(q, -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = buf.samples.astype(np.float32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    wavfile.write(os.fspath(path), buf.sample_rate, data)


def _frame_signal(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    if x.size < win:
        raise ValueError(
            f"signal of {x.size} samples is shorter than one "
            f"{win}-sample analysis window")
    n_frames = 1 + (x.size - win) // hop
    view = np.lib.stride_tricks.sliding_window_view(x, win)[::hop]
    return view[:n_frames]


def stft(buf: AudioBuffer, params: FrameParams = DEFAULT_FRAME) -> Spectrogram:
    """Windowed short-time Fourier analysis.

    Frames start at multiples of the hop; a trailing partial window is
    dropped rather than padded, so n_frames = 1 + (len - win) // hop.
    """
    sr = buf.sample_rate
    win = params.window_length(sr)
    hop = params.hop_length(sr)
    nfft = params.fft_length(sr)
    frames = _frame_signal(buf.samples, win, hop) * params.window_array(sr)
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    return Spectrogram(np.abs(spec), np.angle(spec), params, sr)


def istft(spec: Spectrogram) -> AudioBuffer:
    """Weighted overlap-add inverse of `stft`.

    Each synthesized frame is re-windowed and the sum is normalized by
    the accumulated squared window, which makes interior samples exact
    for any window/hop combination. Requires phases.
    """
    if spec.phases is None:
        raise ValueError("cannot invert a magnitude-only spectrogram")
    sr = spec.sample_rate
    win = spec.params.window_length(sr)
    hop = spec.params.hop_length(sr)
    nfft = spec.params.fft_length(sr)
    w = spec.params.window_array(sr)
    frames = np.fft.irfft(spec.magnitudes * np.exp(1j * spec.phases),
                          n=nfft, axis=1)[:, :win]
    n_out = (spec.n_frames - 1) * hop + win
    y = np.zeros(n_out)
    den = np.zeros(n_out)
    for i in range(spec.n_frames):
        start = i * hop
        y[start:start + win] += frames[i] * w
        den[start:start + win] += w * w
    # normalize only where the window sum carries real weight; at the
    # extreme edges the raw tapered sum is kept, avoiding huge gains
    good = den > 1e-3 * den.max()
    y[good] /= den[good]
    return AudioBuffer(y, sr)


def _spectral_distance(target_mag: np.ndarray, mag: np.ndarray) -> float:
    num = np.linalg.norm(target_mag - mag)
    den = np.linalg.norm(target_mag)
    return float(num / den) if den > 0 else 0.0


def griffin_lim(spec: Spectrogram, iterations: int = 32) -> AudioBuffer:
    """Estimate a waveform from magnitudes alone by alternating
    projection between the time and magnitude domains.

    Starts from zero phase; each iteration re-analyzes the current
    signal and swaps in the target magnitudes. The magnitude mismatch
    is non-increasing in the iteration count. Deterministic.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    target = spec.magnitudes
    if not np.any(target > 0):
        sr = spec.sample_rate
        win = spec.params.window_length(sr)
        hop = spec.params.hop_length(sr)
        n_out = (spec.n_frames - 1) * hop + win
        return AudioBuffer(np.zeros(n_out) if n_out else np.zeros(1), sr)
    work = Spectrogram(target, np.zeros_like(target), spec.params,
                       spec.sample_rate)
    x = istft(work)
    for _ in range(iterations):
        est = stft(x, spec.params)
        work = Spectrogram(target, est.phases, spec.params, spec.sample_rate)
        x = istft(work)
    return x


def resample(buf: AudioBuffer, ratio: float) -> AudioBuffer:
    """Band-limited resampling by an arbitrary rate ratio.

    ratio > 1 shortens the signal (reads faster), ratio < 1 stretches
    it. The sample rate of the result is unchanged, so all content
    moves up or down in frequency by `ratio`. Uses a Kaiser-windowed
    sinc kernel with the cutoff lowered for downward shifts to prevent
    aliasing. ratio == 1 returns the samples untouched.
    """
    if not np.isfinite(ratio) or not (0.1 <= ratio <= 10.0):
        raise ValueError(f"resampling ratio {ratio} out of supported range")
    x = buf.samples
    if ratio == 1.0:
        return AudioBuffer(x.copy(), buf.sample_rate)
    n_out = max(1, int(round(x.size / ratio)))
    fc = min(1.0, 1.0 / ratio)          # anti-alias cutoff, Nyquist = 1
    half = int(np.ceil(16.0 / fc))      # taps per side, widened when fc < 1
    beta = 8.0
    i0_beta = np.i0(beta)
    offsets = np.arange(-half + 1, half + 1, dtype=np.float64)
    out = np.empty(n_out)
    block = 1 << 16
    for start in range(0, n_out, block):
        stop = min(start + block, n_out)
        pos = np.arange(start, stop, dtype=np.float64) * ratio
        base = np.floor(pos).astype(np.int64)
        frac = pos - base
        t = offsets[None, :] - frac[:, None]
        u = t / half
        kb = np.where(np.abs(u) <= 1.0,
                      np.i0(beta * np.sqrt(np.maximum(0.0, 1.0 - u * u))),
                      0.0) / i0_beta
        h = fc * np.sinc(fc * t) * kb
        h /= h.sum(axis=1, keepdims=True)
        idx = base[:, None] + offsets.astype(np.int64)[None, :]
        valid = (idx >= 0) & (idx < x.size)
        gathered = x[np.clip(idx, 0, x.size - 1)] * valid
        out[start:stop] = (h * gathered).sum(axis=1)
    return AudioBuffer(out, buf.sample_rate)


def vad(buf: AudioBuffer, params: FrameParams = DEFAULT_FRAME,
        threshold_db: float = 40.0) -> np.ndarray:
    """Frame-level energy gate.

    A frame is active when its mean-square energy is within
    `threshold_db` of the loudest frame in the utterance, which makes
    the decision invariant to overall gain. All-silent input yields an
    all-False mask. The framing matches `stft` exactly.
    """
    sr = buf.sample_rate
    frames = _frame_signal(buf.samples, params.window_length(sr),
                           params.hop_length(sr))
    energy = np.mean(frames * frames, axis=1)
    peak = energy.max()
    if peak <= 0.0:
        return np.zeros(energy.size, dtype=bool)
    return energy > peak * (10.0 ** (-threshold_db / 10.0))
