"""Blind voice restoration: undo an unknown disguise by exhaustive
parameter search against an enrolled speaker, or from the F0 ratio."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .audio import (AudioBuffer, DEFAULT_FRAME, FrameParams, Spectrogram,
                    istft, stft, vad)
from .disguise import (DisguiseFamily, DisguiseSpec, IDENTITY_PARAMS,
                       PARAM_RANGES, apply_spectral_warp, build_warp,
                       parse_family)
from .pitch import estimate_f0, f0_ratio_alpha, mean_f0
from .speaker import (Embedding, FeatureMatrix, MIN_ACTIVE_FRAMES,
                      ScorerConfig, distance, embed, features_from_magnitudes,
                      mfcc)

_GRID_DEFS = {
    DisguiseFamily.PITCH_FREQ: (-11.0, 11.0, 1.0),
    DisguiseFamily.PITCH_TIME: (-11.0, 11.0, 1.0),
    DisguiseFamily.VTLN_BILINEAR: (-0.3, 0.3, 0.02),
    DisguiseFamily.VTLN_QUADRATIC: (-2.0, 2.0, 0.2),
    DisguiseFamily.VTLN_POWER: (-0.5, 0.5, 0.05),
    DisguiseFamily.VTLN_PIECEWISE: (0.5, 1.5, 0.05),
}


@dataclass(frozen=True)
class GridSpec:
    """Candidate parameter values for one disguise family.

    Values must be strictly increasing, lie inside the family's
    parameter range, and include the family's no-op parameter so a
    search over undisguised audio can settle on "no disguise".
    """

    family: DisguiseFamily
    values: Tuple[float, ...]

    def __post_init__(self):
        fam = parse_family(self.family)
        object.__setattr__(self, "family", fam)
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("grid has no candidate values")
        if any(not np.isfinite(v) for v in vals):
            raise ValueError("grid values must be finite")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid values must be strictly increasing")
        lo, hi = PARAM_RANGES[fam]
        if vals[0] < lo or vals[-1] > hi:
            raise ValueError(
                f"grid values outside [{lo}, {hi}] for {fam.value}")
        ident = IDENTITY_PARAMS[fam]
        if not any(v == ident for v in vals):
            raise ValueError(
                f"grid for {fam.value} must include the no-op value {ident}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def default_grid(family) -> GridSpec:
    """The stock search grid for a family (integer semitones for the
    pitch families, fixed-step sweeps for the warp families)."""
    fam = parse_family(family)
    lo, hi, step = _GRID_DEFS[fam]
    count = int(round((hi - lo) / step)) + 1
    vals = np.round(lo + step * np.arange(count), 10)
    return GridSpec(fam, tuple(float(v) for v in vals))


def nearest_grid_value(grid: GridSpec, alpha: float) -> float:
    vals = np.asarray(grid.values)
    return float(vals[int(np.argmin(np.abs(vals - alpha)))])


@dataclass
class RestorationResult:
    """Outcome of one restoration attempt against one enrolled speaker."""

    alpha_hat: float
    d_hat: float
    family: DisguiseFamily
    method: str
    per_candidate: List[Tuple[float, float]]
    restored_features: Optional[FeatureMatrix] = None
    restored_audio: Optional[AudioBuffer] = None

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "method": self.method,
            "alpha_hat": self.alpha_hat,
            "d_hat": self.d_hat,
            "per_candidate": [[a, d] for a, d in self.per_candidate],
        }


def _candidate_token(test_id: str, family: DisguiseFamily,
                     alpha: float) -> str:
    return f"{test_id}#{family.value}:{alpha:g}"


class _RestorationContext:
    """STFT, VAD mask and geometry of one disguised utterance, computed
    once and shared across every candidate parameter."""

    def __init__(self, disguised: AudioBuffer, params: FrameParams):
        self.params = params
        self.sample_rate = disguised.sample_rate
        self.fft_size = params.fft_length(disguised.sample_rate)
        self.spectrum = stft(disguised, params)
        self.mask = vad(disguised, params)
        if int(self.mask.sum()) < MIN_ACTIVE_FRAMES:
            raise ValueError("insufficient voiced content for restoration")

    def warped(self, alpha: float, family: DisguiseFamily) -> Spectrogram:
        warp_family = (DisguiseFamily.PITCH_FREQ
                       if family is DisguiseFamily.PITCH_TIME else family)
        warp = build_warp(DisguiseSpec(warp_family, alpha))
        return apply_spectral_warp(self.spectrum, warp, "inverse")

    def features(self, alpha: float, family: DisguiseFamily) -> FeatureMatrix:
        spec = self.warped(alpha, family)
        data = features_from_magnitudes(spec.magnitudes[self.mask],
                                        self.sample_rate, self.fft_size)
        return FeatureMatrix(data, self.params, vad_applied=True)


def restore_with(disguised: AudioBuffer, alpha: float, family,
                 params: FrameParams = DEFAULT_FRAME,
                 with_audio: bool = False):
    """Undo a disguise of known family and parameter in the spectral
    domain and return features of the restored utterance.

    The disguise's own frequency map is applied in the inverse
    direction to the STFT of the disguised audio; features come
    straight from the warped magnitudes, so alpha equal to the no-op
    parameter reproduces `mfcc(disguised)` exactly. With `with_audio`
    the warped frames are also resynthesized and an
    (features, audio) pair is returned.
    """
    fam = parse_family(family)
    DisguiseSpec(DisguiseFamily.PITCH_FREQ
                 if fam is DisguiseFamily.PITCH_TIME else fam, alpha)
    ctx = _RestorationContext(disguised, params)
    feats = ctx.features(alpha, fam)
    if not with_audio:
        return feats
    return feats, istft(ctx.warped(alpha, fam))


def _search(ctx: Optional[_RestorationContext], reference: Embedding,
            grid: GridSpec, scorer: ScorerConfig, test_id: str):
    ident = IDENTITY_PARAMS[grid.family]
    per_candidate = []
    for alpha in grid.values:
        if scorer.mode == "external":
            cand = scorer.lookup(_candidate_token(test_id, grid.family, alpha))
        else:
            cand = embed(ctx.features(alpha, grid.family))
        per_candidate.append((float(alpha), distance(reference, cand)))
    best = min(per_candidate,
               key=lambda ad: (ad[1], abs(ad[0] - ident), ad[0]))
    return best[0], best[1], per_candidate


def grid_search_restore(enrolled: AudioBuffer, disguised: AudioBuffer,
                        grid: Optional[GridSpec] = None,
                        family=DisguiseFamily.PITCH_FREQ,
                        scorer: Optional[ScorerConfig] = None,
                        params: FrameParams = DEFAULT_FRAME,
                        enroll_id: str = "", test_id: str = "",
                        with_audio: bool = False) -> RestorationResult:
    """Estimate the disguise parameter by trying every grid value,
    inverting with it, and keeping the candidate whose restored
    embedding lands closest to the enrolled speaker.

    Ties prefer the candidate nearest the no-op parameter (then the
    smaller value), so undisguised input maps to "no disguise". The
    analysis of the disguised utterance is computed once and shared by
    all candidates.
    """
    scorer = scorer or ScorerConfig()
    grid = grid or default_grid(family)
    if scorer.mode == "external":
        reference = scorer.lookup(enroll_id)
        ctx = _RestorationContext(disguised, params)
    else:
        reference = embed(mfcc(enrolled, params))
        ctx = _RestorationContext(disguised, params)
    alpha_hat, d_hat, per_candidate = _search(ctx, reference, grid,
                                              scorer, test_id)
    feats = ctx.features(alpha_hat, grid.family)
    audio = istft(ctx.warped(alpha_hat, grid.family)) if with_audio else None
    return RestorationResult(alpha_hat, d_hat, grid.family, "grid",
                             per_candidate, feats, audio)


def f0_ratio_restore(enrolled: AudioBuffer, disguised: AudioBuffer,
                     family=DisguiseFamily.PITCH_FREQ,
                     grid: Optional[GridSpec] = None,
                     scorer: Optional[ScorerConfig] = None,
                     params: FrameParams = DEFAULT_FRAME,
                     enroll_id: str = "", test_id: str = "",
                     with_audio: bool = False) -> RestorationResult:
    """Estimate a pitch disguise from mean F0s alone.

    The semitone offset implied by the two utterances' mean F0 is
    snapped to the family grid and a single inversion is scored. Only
    the pitch families carry semitone parameters, so others are
    rejected. Raises UnvoicedUtteranceError when either side has no
    voiced frames.
    """
    fam = parse_family(family)
    if fam not in (DisguiseFamily.PITCH_FREQ, DisguiseFamily.PITCH_TIME):
        raise ValueError(
            "F0-ratio restoration estimates semitones; family must be "
            "pitch-freq or pitch-time")
    scorer = scorer or ScorerConfig()
    grid = grid or default_grid(fam)
    f_x = mean_f0(estimate_f0(enrolled))
    f_y = mean_f0(estimate_f0(disguised))
    alpha_hat = nearest_grid_value(grid, f0_ratio_alpha(f_x, f_y))
    ctx = _RestorationContext(disguised, params)
    if scorer.mode == "external":
        reference = scorer.lookup(enroll_id)
        cand = scorer.lookup(_candidate_token(test_id, fam, alpha_hat))
        d_hat = distance(reference, cand)
    else:
        reference = embed(mfcc(enrolled, params))
        d_hat = distance(reference, embed(ctx.features(alpha_hat, fam)))
    feats = ctx.features(alpha_hat, fam)
    audio = istft(ctx.warped(alpha_hat, fam)) if with_audio else None
    return RestorationResult(alpha_hat, d_hat, fam, "f0-ratio",
                             [(alpha_hat, d_hat)], feats, audio)
