"""Cepstral features, statistics-pooling speaker embeddings, cosine
scoring, and sidecar files for embeddings computed elsewhere."""

import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.fft import dct

from .audio import AudioBuffer, DEFAULT_FRAME, FrameParams, stft, vad

N_MELS = 26
N_CEPSTRA = 24
PREEMPHASIS = 0.97
DELTA_SPAN = 2
FEATURE_DIM = 3 * N_CEPSTRA        # statics + deltas + delta-deltas
EMBED_DIM = 2 * FEATURE_DIM        # mean and std pooling
MIN_ACTIVE_FRAMES = 3


@dataclass
class FeatureMatrix:
    """Frame-level features, FEATURE_DIM columns per frame."""

    data: np.ndarray
    params: FrameParams
    vad_applied: bool = True

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] != FEATURE_DIM:
            raise ValueError(
                f"feature matrix must be (frames, {FEATURE_DIM}), got {d.shape}")
        if d.shape[0] == 0:
            raise ValueError("feature matrix has no frames")
        if not np.all(np.isfinite(d)):
            raise ValueError("feature matrix contains non-finite values")
        self.data = d

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass
class Embedding:
    """A fixed-length utterance representation."""

    vector: np.ndarray
    source: str = "builtin"
    utterance_id: str = ""

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("embedding vector must be non-empty and 1-D")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding vector contains non-finite values")
        self.vector = v

    @property
    def dim(self) -> int:
        return self.vector.size


@dataclass
class ScorerConfig:
    """Choice of embedding backend for trial scoring.

    mode "builtin" computes embeddings from audio; "external" looks
    utterance ids up in a preloaded table and never touches the
    waveform beyond what the restoration step itself needs.
    """

    mode: str = "builtin"
    table: Optional[Dict[str, Embedding]] = None

    def __post_init__(self):
        if self.mode not in ("builtin", "external"):
            raise ValueError(f"unknown scorer mode {self.mode!r}")
        if self.mode == "external" and not self.table:
            raise ValueError("external scorer requires an embedding table")

    def lookup(self, utterance_id: str) -> Embedding:
        if self.mode != "external":
            raise ValueError("lookup is only valid for external scorers")
        try:
            return self.table[utterance_id]
        except KeyError:
            raise KeyError(
                f"utterance {utterance_id!r} missing from external "
                f"embedding table") from None


def mel_filterbank(sample_rate: int, fft_size: int,
                   n_mels: int = N_MELS) -> np.ndarray:
    """Triangular filters spaced uniformly on the mel scale from 0 Hz
    to Nyquist, returned as (n_mels, fft_size // 2 + 1)."""
    def to_mel(hz):
        return 2595.0 * np.log10(1.0 + hz / 700.0)

    def to_hz(mel):
        return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)

    edges_hz = to_hz(np.linspace(0.0, to_mel(sample_rate / 2.0), n_mels + 2))
    bins = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    fb = np.zeros((n_mels, bins.size))
    for m in range(n_mels):
        left, center, right = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bins - left) / max(center - left, 1e-12)
        falling = (right - bins) / max(right - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def _delta(c: np.ndarray, span: int = DELTA_SPAN) -> np.ndarray:
    padded = np.concatenate([np.repeat(c[:1], span, axis=0), c,
                             np.repeat(c[-1:], span, axis=0)], axis=0)
    num = np.zeros_like(c)
    for j in range(1, span + 1):
        num += j * (padded[span + j:padded.shape[0] - span + j]
                    - padded[span - j:c.shape[0] + span - j])
    return num / (2.0 * sum(j * j for j in range(1, span + 1)))


def features_from_magnitudes(magnitudes: np.ndarray, sample_rate: int,
                             fft_size: int) -> np.ndarray:
    """Cepstral features straight from STFT magnitude frames.

    Pre-emphasis is a per-bin power weighting (the squared magnitude
    response of the usual first-order difference), so features computed
    from warped magnitudes and from re-analyzed audio share one code
    path. The log floor is relative to the loudest filter output,
    keeping a pure gain change a constant shift of the first cepstrum.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    if mags.ndim != 2 or mags.shape[0] == 0:
        raise ValueError("need a non-empty (frames, bins) magnitude array")
    omega = 2.0 * np.pi * np.arange(mags.shape[1]) / fft_size
    preemph = 1.0 + PREEMPHASIS ** 2 - 2.0 * PREEMPHASIS * np.cos(omega)
    power = (mags * mags) * preemph
    fb = mel_filterbank(sample_rate, fft_size)
    mel = power @ fb.T
    floor = max(float(mel.max()) * 1e-12, 1e-300)
    logmel = np.log(np.maximum(mel, floor))
    ceps = dct(logmel, type=2, norm="ortho", axis=1)[:, :N_CEPSTRA]
    d1 = _delta(ceps)
    d2 = _delta(d1)
    return np.concatenate([ceps, d1, d2], axis=1)


def mfcc(buf: AudioBuffer, params: FrameParams = DEFAULT_FRAME) -> FeatureMatrix:
    """Voice-activity-gated cepstral features for one utterance.

    Raises ValueError when fewer than MIN_ACTIVE_FRAMES frames pass the
    energy gate (e.g. silence).
    """
    spectrum = stft(buf, params)
    mask = vad(buf, params)
    if int(mask.sum()) < MIN_ACTIVE_FRAMES:
        raise ValueError("insufficient voiced content for features")
    fft_size = params.fft_length(buf.sample_rate)
    data = features_from_magnitudes(spectrum.magnitudes[mask],
                                    buf.sample_rate, fft_size)
    return FeatureMatrix(data, params, vad_applied=True)


def embed(features: FeatureMatrix, utterance_id: str = "") -> Embedding:
    """Mean and standard deviation of each feature column, concatenated."""
    mu = features.data.mean(axis=0)
    sigma = features.data.std(axis=0)
    return Embedding(np.concatenate([mu, sigma]), source="builtin",
                     utterance_id=utterance_id)


def distance(a: Embedding, b: Embedding) -> float:
    """Cosine distance, 1 - cos(a, b), in [0, 2]. Lower is more similar."""
    if a.dim != b.dim:
        raise ValueError(f"embedding dims differ: {a.dim} vs {b.dim}")
    na = np.linalg.norm(a.vector)
    nb = np.linalg.norm(b.vector)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cannot score a zero-norm embedding")
    cos = float(np.dot(a.vector, b.vector) / (na * nb))
    return 1.0 - max(-1.0, min(1.0, cos))


def load_external_embeddings(path) -> Dict[str, Embedding]:
    """Read an embedding sidecar: one utterance per line, the id then
    whitespace-separated float components. All lines must agree on the
    dimension; duplicate ids and unparsable values are rejected with
    the offending line number."""
    table: Dict[str, Embedding] = {}
    dim = None
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            utt, comps = parts[0], parts[1:]
            if not comps:
                raise ValueError(f"line {lineno}: no embedding components")
            if utt in table:
                raise ValueError(f"line {lineno}: duplicate utterance id {utt!r}")
            try:
                vec = np.array([float(c) for c in comps])
            except ValueError:
                raise ValueError(
                    f"line {lineno}: non-numeric embedding component")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValueError(
                    f"line {lineno}: dimension {vec.size} differs from "
                    f"{dim} seen earlier")
            table[utt] = Embedding(vec, source="external", utterance_id=utt)
    if not table:
        raise ValueError(f"no embeddings found in {path}")
    return table


def write_embeddings(path, table: Dict[str, Embedding]) -> None:
    """Write embeddings in the sidecar format `load_external_embeddings`
    reads, one line per utterance, ids sorted."""
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        for utt in sorted(table):
            comps = " ".join(format(v, ".17g") for v in table[utt].vector)
            fh.write(f"{utt} {comps}\n")
