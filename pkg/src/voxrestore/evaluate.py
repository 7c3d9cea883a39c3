"""Synthetic speaker corpus, trial generation, EER computation and the
disguise x restoration evaluation matrix."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer, DEFAULT_FRAME, FrameParams
from .disguise import (VTLN_FAMILIES, DisguiseFamily, DisguiseSpec,
                       IDENTITY_PARAMS, disguise, parse_family)
from .pitch import UnvoicedUtteranceError, estimate_f0, f0_ratio_alpha, mean_f0
from .restore import (GridSpec, _RestorationContext, _search, default_grid,
                      nearest_grid_value)
from .speaker import Embedding, ScorerConfig, distance, embed, mfcc


def _pmap(fn, items, jobs: int) -> list:
    """Order-preserving map, threaded when jobs > 1. Results do not
    depend on the worker count."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# corpus synthesis


@dataclass(frozen=True)
class CorpusConfig:
    n_speakers: int = 8
    utts_per_speaker: int = 5
    seed: int = 0
    sample_rate: int = 16000
    duration_s: float = 2.0

    def __post_init__(self):
        if self.n_speakers < 2 or self.utts_per_speaker < 2:
            raise ValueError(
                "need at least two speakers and two utterances each")
        if self.sample_rate < 8000:
            raise ValueError("sample rate below 8 kHz leaves no formant room")
        if self.duration_s < 0.5:
            raise ValueError("utterances shorter than 0.5 s are too thin "
                             "for stable statistics")


@dataclass
class Corpus:
    utterances: Dict[str, AudioBuffer]
    speaker_of: Dict[str, str]
    config: CorpusConfig

    def by_speaker(self) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {}
        for utt, spk in self.speaker_of.items():
            out.setdefault(spk, []).append(utt)
        return out


def _resonator(x: np.ndarray, freq: float, bandwidth: float,
               sample_rate: int) -> np.ndarray:
    freq = min(freq, 0.45 * sample_rate)   # keep poles below Nyquist
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2.0 * np.pi * freq / sample_rate
    return lfilter([1.0], [1.0, -2.0 * r * np.cos(theta), r * r], x)


def _synth_utterance(rng: np.random.Generator, base_f0: float,
                     formants: Sequence[float], bandwidths: Sequence[float],
                     hiss_freq: float, hiss_bw: float, hiss_level: float,
                     sample_rate: int, duration_s: float) -> AudioBuffer:
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    # utterance-level pitch offset plus slow vibrato; formants also get a
    # small per-utterance drift so same-speaker pairs are not trivially equal
    f0_offset = 2.0 ** rng.uniform(-0.2, 0.2)
    vib_rate = rng.uniform(2.5, 4.5)
    vib_phase = rng.uniform(0.0, 2.0 * np.pi)
    vib_depth = rng.uniform(0.005, 0.02)
    f0_t = base_f0 * f0_offset * (
        1.0 + vib_depth * np.sin(2.0 * np.pi * vib_rate * t + vib_phase))
    phase = np.cumsum(f0_t / sample_rate)
    excitation = np.zeros(n)
    excitation[np.diff(np.floor(phase), prepend=0.0) >= 1.0] = 1.0
    x = lfilter([1.0], [1.0, -0.95], excitation)   # glottal spectral tilt
    for freq, bw in zip(formants, bandwidths):
        drift = 2.0 ** rng.uniform(-0.02, 0.02)
        x = _resonator(x, freq * drift, bw, sample_rate)
    # frication fills the top octave; its center is shared across
    # speakers (warping it to match another speaker buys nothing) while
    # its bandwidth and level carry identity
    voiced_rms = np.sqrt(np.mean(x * x))
    hiss = _resonator(rng.standard_normal(n), hiss_freq, hiss_bw, sample_rate)
    x = x + hiss * (voiced_rms * hiss_level / np.sqrt(np.mean(hiss * hiss)))
    x = x + rng.standard_normal(n) * (voiced_rms * 0.003)
    fade = int(round(0.05 * sample_rate))
    if 2 * fade < n:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        x[:fade] *= ramp
        x[-fade:] *= ramp[::-1]
    x *= 0.3 / np.max(np.abs(x))
    return AudioBuffer(x, sample_rate)


def synth_corpus(config: CorpusConfig = CorpusConfig()) -> Corpus:
    """Generate a deterministic toy corpus of vowel-like utterances.

    Each speaker is a random draw of base pitch and three formant
    resonances; each utterance re-jitters pitch and formants slightly.
    Seeding is hierarchical, so utterance (i, j) does not depend on how
    many other speakers or utterances are generated.
    """
    utterances: Dict[str, AudioBuffer] = {}
    speaker_of: Dict[str, str] = {}
    for si in range(config.n_speakers):
        srng = np.random.default_rng([config.seed, si])
        base_f0 = srng.uniform(90.0, 250.0)
        formants = [srng.uniform(300.0, 900.0),
                    srng.uniform(1100.0, 2300.0),
                    srng.uniform(2500.0, 3400.0),
                    srng.uniform(3600.0, 4400.0)]
        bandwidths = [srng.uniform(60.0, 120.0),
                      srng.uniform(80.0, 160.0),
                      srng.uniform(100.0, 200.0),
                      srng.uniform(150.0, 250.0)]
        hiss_freq = srng.uniform(5100.0, 5300.0)
        hiss_bw = srng.uniform(400.0, 1000.0)
        hiss_level = srng.uniform(0.05, 0.13)
        spk = f"spk{si:02d}"
        for ui in range(config.utts_per_speaker):
            urng = np.random.default_rng([config.seed, si, ui])
            utt = f"{spk}_u{ui:02d}"
            utterances[utt] = _synth_utterance(
                urng, base_f0, formants, bandwidths, hiss_freq, hiss_bw,
                hiss_level, config.sample_rate, config.duration_s)
            speaker_of[utt] = spk
    return Corpus(utterances, speaker_of, config)


# ---------------------------------------------------------------------------
# trials


@dataclass
class Trial:
    """One verification trial: an enrolled utterance, a test utterance,
    the ground-truth label (True = same speaker) and, when the test side
    was disguised, the transform that produced it."""

    enroll_id: str
    test_id: str
    label: Optional[bool]
    disguise_meta: Optional[DisguiseSpec] = None


DISGUISE_POLICIES = ("none", "vtln-all") + tuple(f.value for f in DisguiseFamily)


def gen_trials(corpus: Corpus, n_trials: int, policy: str = "none",
               seed: int = 0,
               params: FrameParams = DEFAULT_FRAME
               ) -> Tuple[List[Trial], Dict[str, AudioBuffer]]:
    """Draw a label-balanced trial list, optionally disguising every
    test utterance.

    policy "none" leaves test audio untouched; a family name draws the
    parameter uniformly from that family's default grid; "vtln-all"
    additionally draws the family uniformly from the four warp
    families. Returns the trials plus the newly created disguised
    audio, keyed by ids that encode the source utterance and transform.
    Same-speaker trials always pair two distinct utterances.
    """
    if policy not in DISGUISE_POLICIES:
        raise ValueError(
            f"unknown disguise policy {policy!r} (one of: "
            f"{', '.join(DISGUISE_POLICIES)})")
    if n_trials < 2:
        raise ValueError("need at least two trials")
    by_spk = corpus.by_speaker()
    speakers = sorted(by_spk)
    n_same = n_trials // 2
    if n_same and any(len(v) < 2 for v in by_spk.values()):
        raise ValueError(
            "same-speaker trials need at least two utterances per speaker")
    if len(speakers) < 2:
        raise ValueError("impostor trials need at least two speakers")
    rng = np.random.default_rng([seed, 0x7261])
    labels = np.array([True] * n_same + [False] * (n_trials - n_same))
    rng.shuffle(labels)
    trials: List[Trial] = []
    extra: Dict[str, AudioBuffer] = {}
    for label in labels:
        if label:
            spk = speakers[rng.integers(len(speakers))]
            utts = by_spk[spk]
            i, j = rng.choice(len(utts), size=2, replace=False)
            enroll, probe = utts[i], utts[j]
        else:
            a, b = rng.choice(len(speakers), size=2, replace=False)
            ua = by_spk[speakers[a]]
            ub = by_spk[speakers[b]]
            enroll = ua[rng.integers(len(ua))]
            probe = ub[rng.integers(len(ub))]
        meta = None
        test_id = probe
        if policy != "none":
            if policy == "vtln-all":
                family = VTLN_FAMILIES[rng.integers(len(VTLN_FAMILIES))]
            else:
                family = parse_family(policy)
            grid = default_grid(family)
            meta = DisguiseSpec(family, grid.values[rng.integers(len(grid))])
            test_id = f"{probe}~{meta.spec_string()}"
            if test_id not in extra:
                extra[test_id] = disguise(corpus.utterances[probe], meta,
                                          params)
        trials.append(Trial(enroll, test_id, bool(label), meta))
    return trials, extra


# ---------------------------------------------------------------------------
# EER


@dataclass
class EerReport:
    eer_percent: float
    threshold: float
    n_same: int
    n_diff: int
    roc_points: List[Tuple[float, float, float]]   # (threshold, FAR, FRR)

    def to_dict(self) -> dict:
        return {"eer_percent": self.eer_percent,
                "threshold": self.threshold,
                "n_same": self.n_same,
                "n_diff": self.n_diff}


def compute_eer(same_scores, diff_scores) -> EerReport:
    """Equal error rate for a distance-like score (accept iff score <=
    threshold).

    Thresholds sweep the sorted union of the observed scores; the one
    minimizing |FAR - FRR| wins, ties broken toward the smaller mean
    error and then the smaller threshold. EER is reported as the mean
    of FAR and FRR there, in percent.
    """
    same = np.sort(np.asarray(same_scores, dtype=np.float64))
    diff = np.sort(np.asarray(diff_scores, dtype=np.float64))
    if same.size == 0 or diff.size == 0:
        raise ValueError("need at least one score of each class")
    if not (np.all(np.isfinite(same)) and np.all(np.isfinite(diff))):
        raise ValueError("scores must be finite")
    thresholds = np.unique(np.concatenate([same, diff]))
    n_rej = same.size - np.searchsorted(same, thresholds, side="right")
    frr = n_rej / same.size
    far = np.searchsorted(diff, thresholds, side="right") / diff.size
    gap = np.abs(far - frr)
    mean_err = 0.5 * (far + frr)
    order = np.lexsort((thresholds, mean_err, gap))
    pick = order[0]
    roc = list(zip(thresholds.tolist(), far.tolist(), frr.tolist()))
    return EerReport(float(mean_err[pick] * 100.0),
                     float(thresholds[pick]),
                     int(same.size), int(diff.size), roc)


# ---------------------------------------------------------------------------
# bias of recovered parameters


@dataclass
class BiasStats:
    """Error statistics of recovered disguise parameters, overall and
    bucketed by the true value."""

    mean_error: float
    std_error: float
    count: int
    buckets: List[Tuple[float, float, float, int]]   # (alpha, mean, std, n)

    def to_dict(self) -> dict:
        return {"mean_error": self.mean_error,
                "std_error": self.std_error,
                "count": self.count,
                "buckets": [{"alpha": a, "mean_error": m,
                             "std_error": s, "count": n}
                            for a, m, s, n in self.buckets]}


def alpha_bias(pairs: Sequence[Tuple[float, float]]) -> BiasStats:
    """Statistics of (estimated - true) over (true, estimated) pairs,
    bucketed by distinct true values."""
    if not pairs:
        raise ValueError("no parameter pairs to analyze")
    true = np.array([p[0] for p in pairs], dtype=np.float64)
    est = np.array([p[1] for p in pairs], dtype=np.float64)
    err = est - true
    buckets = []
    for a in np.unique(true):
        sel = err[true == a]
        buckets.append((float(a), float(sel.mean()), float(sel.std()),
                        int(sel.size)))
    return BiasStats(float(err.mean()), float(err.std()), int(err.size),
                     buckets)


# ---------------------------------------------------------------------------
# evaluation matrix


@dataclass
class MatrixRow:
    restoration: str
    eer: EerReport
    bias: Optional[BiasStats]
    per_alpha: List[dict]


@dataclass
class MatrixReport:
    rows: List[MatrixRow]
    n_trials: int
    trial_summary: Dict[str, int]
    disguise_label: str = "none"

    def to_dict(self) -> dict:
        matrix = [{"disguise": self.disguise_label,
                   "restoration": r.restoration,
                   "eer": r.eer.eer_percent,
                   "threshold": r.eer.threshold,
                   "n_same": r.eer.n_same,
                   "n_diff": r.eer.n_diff} for r in self.rows]
        bias = [dict(restoration=r.restoration, **r.bias.to_dict())
                for r in self.rows if r.bias is not None]
        per_alpha = [dict(restoration=r.restoration, **entry)
                     for r in self.rows for entry in r.per_alpha]
        return {"matrix": matrix, "bias": bias, "per_alpha": per_alpha,
                "n_trials": self.n_trials,
                "trial_summary": self.trial_summary}

    def row(self, restoration: str) -> MatrixRow:
        for r in self.rows:
            if r.restoration == restoration:
                return r
        raise KeyError(f"no matrix row for restoration {restoration!r}")


def _disguise_label(trial_summary: Dict[str, int]) -> str:
    kinds = sorted(k for k in trial_summary if k != "none")
    if not kinds:
        return "none"
    if len(kinds) == 1:
        return kinds[0]
    if all(parse_family(k) in VTLN_FAMILIES for k in kinds):
        return "vtln-all"
    return "mixed"


def _parse_restoration(name: str):
    """Restoration method id -> (kind, family). Accepted: "none",
    "f0ratio", a family name (grid search over its default grid), or
    "grid:<family>"."""
    if name == "none":
        return "none", None
    if name == "f0ratio":
        return "f0ratio", DisguiseFamily.PITCH_FREQ
    if name.startswith("grid:"):
        return "grid", parse_family(name[len("grid:"):])
    return "grid", parse_family(name)


def _semitone_like(family: DisguiseFamily) -> bool:
    return family in (DisguiseFamily.PITCH_FREQ, DisguiseFamily.PITCH_TIME)


def _same_units(a: DisguiseFamily, b: DisguiseFamily) -> bool:
    if _semitone_like(a) and _semitone_like(b):
        return True
    return a is b


def run_matrix(audio: Dict[str, AudioBuffer], trials: Sequence[Trial],
               restorations: Sequence[str],
               scorer: Optional[ScorerConfig] = None,
               params: FrameParams = DEFAULT_FRAME,
               jobs: int = 1) -> MatrixReport:
    """Score every trial under every requested restoration method and
    report per-method EER, parameter-recovery bias and per-parameter
    EER breakdowns.

    Restoration methods are blind: they never read a trial's
    disguise_meta, which is used only to organize the report. The
    heavy per-utterance analysis is cached across methods and
    candidates; `jobs` parallelizes across utterances and trials
    without changing any output.
    """
    scorer = scorer or ScorerConfig()
    trials = list(trials)
    if not trials:
        raise ValueError("no trials to evaluate")
    if any(t.label is None for t in trials):
        raise ValueError("every trial needs a ground-truth label")
    methods = [(name, *_parse_restoration(name)) for name in restorations]
    if not methods:
        raise ValueError("no restoration methods requested")

    enroll_ids = list(dict.fromkeys(t.enroll_id for t in trials))
    test_ids = list(dict.fromkeys(t.test_id for t in trials))
    need_ctx = scorer.mode == "builtin" and any(
        kind in ("grid", "f0ratio") for _, kind, _ in methods)
    need_f0 = any(kind == "f0ratio" for _, kind, _ in methods)

    def _require_audio(utt: str) -> AudioBuffer:
        try:
            return audio[utt]
        except KeyError:
            raise KeyError(f"no audio for utterance {utt!r}") from None

    if scorer.mode == "builtin":
        enroll_emb = dict(zip(enroll_ids, _pmap(
            lambda u: embed(mfcc(_require_audio(u), params), u),
            enroll_ids, jobs)))
        if need_ctx:
            contexts = dict(zip(test_ids, _pmap(
                lambda u: _RestorationContext(_require_audio(u), params),
                test_ids, jobs)))
            plain_emb = {
                u: embed(ctx.features(0.0, DisguiseFamily.PITCH_FREQ), u)
                for u, ctx in contexts.items()}
        else:
            contexts = {}
            plain_emb = dict(zip(test_ids, _pmap(
                lambda u: embed(mfcc(_require_audio(u), params), u),
                test_ids, jobs)))
    else:
        enroll_emb = {u: scorer.lookup(u) for u in enroll_ids}
        contexts = {}
        plain_emb = {u: scorer.lookup(u) for u in test_ids}

    f0_mean: Dict[str, Optional[float]] = {}
    if need_f0:
        def _safe_mean_f0(utt: str) -> Optional[float]:
            try:
                return mean_f0(estimate_f0(_require_audio(utt)))
            except UnvoicedUtteranceError:
                return None
        all_ids = list(dict.fromkeys(enroll_ids + test_ids))
        f0_mean = dict(zip(all_ids, _pmap(_safe_mean_f0, all_ids, jobs)))

    trial_summary: Dict[str, int] = {}
    for t in trials:
        key = "none" if t.disguise_meta is None else t.disguise_meta.family.value
        trial_summary[key] = trial_summary.get(key, 0) + 1

    rows: List[MatrixRow] = []
    for name, kind, family in methods:
        grid = default_grid(family) if kind in ("grid", "f0ratio") else None

        def _score(trial: Trial):
            ref = enroll_emb[trial.enroll_id]
            if kind == "none":
                return distance(ref, plain_emb[trial.test_id]), None
            if kind == "grid":
                if scorer.mode == "external":
                    a_hat, d_hat, _ = _search(None, ref, grid, scorer,
                                              trial.test_id)
                else:
                    a_hat, d_hat, _ = _search(contexts[trial.test_id], ref,
                                              grid, scorer, trial.test_id)
                return d_hat, a_hat
            fe = f0_mean.get(trial.enroll_id)
            ft = f0_mean.get(trial.test_id)
            if fe is None or ft is None:
                a_hat = IDENTITY_PARAMS[family]   # no pitch to compare
            else:
                a_hat = nearest_grid_value(grid, f0_ratio_alpha(fe, ft))
            if scorer.mode == "external":
                cand = scorer.lookup(f"{trial.test_id}#{family.value}:{a_hat:g}")
            else:
                cand = embed(contexts[trial.test_id].features(a_hat, family))
            return distance(ref, cand), a_hat

        results = _pmap(_score, trials, jobs)
        scores = np.array([r[0] for r in results])
        labels = np.array([t.label for t in trials], dtype=bool)
        eer = compute_eer(scores[labels], scores[~labels])

        bias = None
        if kind in ("grid", "f0ratio"):
            pairs = [(t.disguise_meta.param, r[1])
                     for t, r in zip(trials, results)
                     if t.label and t.disguise_meta is not None
                     and _same_units(t.disguise_meta.family, family)]
            if pairs:
                bias = alpha_bias(pairs)

        per_alpha: List[dict] = []
        groups: Dict[Tuple[str, float], List[int]] = {}
        for i, t in enumerate(trials):
            if t.disguise_meta is not None:
                key = (t.disguise_meta.family.value, t.disguise_meta.param)
                groups.setdefault(key, []).append(i)
        for key in sorted(groups):
            idx = np.array(groups[key])
            g_labels = labels[idx]
            if g_labels.all() or not g_labels.any():
                continue   # EER undefined with a single class
            g = compute_eer(scores[idx][g_labels], scores[idx][~g_labels])
            per_alpha.append({"family": key[0], "param": key[1],
                              "eer_percent": g.eer_percent,
                              "n_same": g.n_same, "n_diff": g.n_diff})
        rows.append(MatrixRow(name, eer, bias, per_alpha))
    return MatrixReport(rows, len(trials), trial_summary,
                        _disguise_label(trial_summary))
