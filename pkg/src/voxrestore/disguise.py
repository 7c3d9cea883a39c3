"""Voice disguise transforms: pitch scaling and four spectral-warping
families, each invertible from its parameter alone."""

import enum
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, DEFAULT_FRAME, FrameParams, Spectrogram, istft
from .audio import resample as _resample
from .audio import stft as _stft

WARP_KNOTS = 4097


class DisguiseFamily(str, enum.Enum):
    PITCH_FREQ = "pitch-freq"
    PITCH_TIME = "pitch-time"
    VTLN_BILINEAR = "vtln-bilinear"
    VTLN_QUADRATIC = "vtln-quadratic"
    VTLN_POWER = "vtln-power"
    VTLN_PIECEWISE = "vtln-piecewise"

    def __str__(self) -> str:
        return self.value


# inclusive parameter bounds and the value that makes each family a no-op
PARAM_RANGES = {
    DisguiseFamily.PITCH_FREQ: (-12.0, 12.0),
    DisguiseFamily.PITCH_TIME: (-12.0, 12.0),
    DisguiseFamily.VTLN_BILINEAR: (-0.3, 0.3),
    DisguiseFamily.VTLN_QUADRATIC: (-2.0, 2.0),
    DisguiseFamily.VTLN_POWER: (-0.5, 0.5),
    DisguiseFamily.VTLN_PIECEWISE: (0.5, 1.5),
}

IDENTITY_PARAMS = {
    DisguiseFamily.PITCH_FREQ: 0.0,
    DisguiseFamily.PITCH_TIME: 0.0,
    DisguiseFamily.VTLN_BILINEAR: 0.0,
    DisguiseFamily.VTLN_QUADRATIC: 0.0,
    DisguiseFamily.VTLN_POWER: 0.0,
    DisguiseFamily.VTLN_PIECEWISE: 1.0,
}

VTLN_FAMILIES = (
    DisguiseFamily.VTLN_BILINEAR,
    DisguiseFamily.VTLN_QUADRATIC,
    DisguiseFamily.VTLN_POWER,
    DisguiseFamily.VTLN_PIECEWISE,
)


def parse_family(name) -> DisguiseFamily:
    if isinstance(name, DisguiseFamily):
        return name
    try:
        return DisguiseFamily(str(name))
    except ValueError:
        valid = ", ".join(f.value for f in DisguiseFamily)
        raise ValueError(f"unknown disguise family {name!r} (one of: {valid})")


def semitone_to_scale(alpha: float) -> float:
    """Semitone offset -> frequency scale factor, s = 2**(alpha/12)."""
    if not np.isfinite(alpha):
        raise ValueError("semitone offset must be finite")
    return float(2.0 ** (alpha / 12.0))


def scale_to_semitone(scale: float) -> float:
    """Frequency scale factor -> semitone offset, alpha = 12*log2(s)."""
    if not (np.isfinite(scale) and scale > 0):
        raise ValueError(f"scale factor must be positive, got {scale}")
    return float(12.0 * np.log2(scale))


@dataclass(frozen=True)
class DisguiseSpec:
    """One disguise transform: a family plus its single parameter."""

    family: DisguiseFamily
    param: float

    def __post_init__(self):
        fam = parse_family(self.family)
        object.__setattr__(self, "family", fam)
        p = float(self.param)
        if not np.isfinite(p):
            raise ValueError("disguise parameter must be finite")
        lo, hi = PARAM_RANGES[fam]
        if not (lo <= p <= hi):
            raise ValueError(
                f"parameter {p} outside [{lo}, {hi}] for family {fam.value}")
        object.__setattr__(self, "param", p)

    @property
    def is_identity(self) -> bool:
        return self.param == IDENTITY_PARAMS[self.family]

    def spec_string(self) -> str:
        return f"{self.family.value}:{self.param:g}"

    @classmethod
    def from_string(cls, text: str) -> "DisguiseSpec":
        head, sep, tail = str(text).partition(":")
        if not sep or not tail:
            raise ValueError(
                f"disguise spec {text!r} not of the form family:param")
        try:
            param = float(tail)
        except ValueError:
            raise ValueError(f"non-numeric disguise parameter {tail!r}")
        return cls(parse_family(head.strip()), param)


class WarpFunction:
    """A monotone frequency map stored as a dense piecewise-linear table.

    Evaluation interpolates the (knots, values) pairs; the inverse
    interpolates the swapped pairs, which inverts the interpolant
    exactly, so composing a warp with its own inverse is identity up
    to float rounding at any point of the domain.
    """

    def __init__(self, knots: np.ndarray, values: np.ndarray,
                 family=None, param=None, is_identity: bool = False):
        knots = np.asarray(knots, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if knots.ndim != 1 or knots.shape != values.shape:
            raise ValueError("knots and values must be 1-D arrays of equal length")
        if knots.size < 1024:
            raise ValueError("warp table needs at least 1024 knots")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ValueError("warp table must be finite")
        if np.any(np.diff(knots) <= 0) or np.any(np.diff(values) <= 0):
            raise ValueError("warp table must be strictly increasing")
        self.knots = knots
        self.values = values
        self.family = family
        self.param = param
        self.is_identity = bool(is_identity)

    def __call__(self, omega):
        return np.interp(omega, self.knots, self.values)

    def inverse(self, omega):
        return np.interp(omega, self.values, self.knots)

    def inverted(self) -> "WarpFunction":
        return WarpFunction(self.values.copy(), self.knots.copy(),
                            family=self.family, param=None,
                            is_identity=self.is_identity)

    def __repr__(self) -> str:
        fam = getattr(self.family, "value", self.family)
        return (f"WarpFunction(family={fam}, param={self.param}, "
                f"knots={self.knots.size})")


def _warp_values(family: DisguiseFamily, param: float,
                 omega: np.ndarray) -> np.ndarray:
    u = omega / np.pi
    if family is DisguiseFamily.PITCH_FREQ:
        # linear scaling; deliberately not clipped at pi so that the
        # map stays strictly monotone and exactly invertible
        return semitone_to_scale(param) * omega
    if family is DisguiseFamily.VTLN_BILINEAR:
        z = np.exp(1j * omega)
        out = np.angle((z - param) / (1.0 - param * z))
        out[0], out[-1] = 0.0, np.pi
        return out
    if family is DisguiseFamily.VTLN_QUADRATIC:
        out = omega + param * (u - u * u)
        out[0], out[-1] = 0.0, np.pi
        return out
    if family is DisguiseFamily.VTLN_POWER:
        out = np.pi * u ** (1.0 + param)
        out[0], out[-1] = 0.0, np.pi
        return out
    if family is DisguiseFamily.VTLN_PIECEWISE:
        lam = param
        omega0 = 7.0 * np.pi / 8.0 if lam <= 1.0 else 7.0 * np.pi / (8.0 * lam)
        upper = lam * omega0 + (np.pi - lam * omega0) / (np.pi - omega0) \
            * (omega - omega0)
        out = np.where(omega <= omega0, lam * omega, upper)
        out[0], out[-1] = 0.0, np.pi
        return out
    raise ValueError(f"family {family.value} has no spectral warp")


def build_warp(spec: DisguiseSpec, n_knots: int = WARP_KNOTS) -> WarpFunction:
    """Tabulate the frequency map of a spectral disguise family.

    The time-domain pitch family is rejected here; its spectral effect
    is the same linear map as the frequency-domain one, so callers
    needing a warp for it should build one for that family instead.
    """
    if spec.family is DisguiseFamily.PITCH_TIME:
        raise ValueError(
            "pitch-time operates on the waveform; build a pitch-freq warp "
            "for its spectral equivalent")
    if n_knots < 1024:
        raise ValueError("n_knots must be at least 1024")
    knots = np.linspace(0.0, np.pi, n_knots)
    if spec.is_identity:
        return WarpFunction(knots, knots.copy(), spec.family, spec.param,
                            is_identity=True)
    values = _warp_values(spec.family, spec.param, knots)
    return WarpFunction(knots, values, spec.family, spec.param)


def apply_spectral_warp(spec: Spectrogram, warp: WarpFunction,
                        direction: str = "forward") -> Spectrogram:
    """Resample every spectral frame along a warped frequency axis.

    "forward" builds output bin w from the input at warp^-1(w);
    "inverse" reads from warp(w). Source positions falling outside
    [0, pi] replicate the nearest in-range bin. Phases, when present,
    are moved with the same interpolation as magnitudes. An identity
    warp copies the input bit for bit.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be forward or inverse, got {direction!r}")
    if warp.is_identity:
        phases = None if spec.phases is None else spec.phases.copy()
        return Spectrogram(spec.magnitudes.copy(), phases, spec.params,
                           spec.sample_rate)
    n_bins = spec.n_bins
    omega = np.linspace(0.0, np.pi, n_bins)
    src = warp.inverse(omega) if direction == "forward" else warp(omega)
    coord = np.clip(src / np.pi * (n_bins - 1), 0.0, n_bins - 1.0)
    lo = np.minimum(coord.astype(np.int64), n_bins - 2)
    frac = coord - lo
    mags = spec.magnitudes[:, lo] * (1.0 - frac) + spec.magnitudes[:, lo + 1] * frac
    phases = None
    if spec.phases is not None:
        phases = spec.phases[:, lo] * (1.0 - frac) + spec.phases[:, lo + 1] * frac
    return Spectrogram(mags, phases, spec.params, spec.sample_rate)


def disguise(buf: AudioBuffer, spec: DisguiseSpec,
             params: FrameParams = DEFAULT_FRAME) -> AudioBuffer:
    """Apply one disguise transform to an utterance.

    Pitch-time resamples the waveform; every other family round-trips
    through STFT, warps each frame and resynthesizes. Output peaks are
    rescaled to 0.999 only if they exceed it.
    """
    if spec.family is DisguiseFamily.PITCH_TIME:
        out = _resample(buf, semitone_to_scale(spec.param))
    else:
        spectrum = _stft(buf, params)
        warped = apply_spectral_warp(spectrum, build_warp(spec), "forward")
        out = istft(warped)
    peak = np.max(np.abs(out.samples))
    if peak > 0.999:
        return AudioBuffer(out.samples * (0.999 / peak), out.sample_rate)
    return out


def invert_spec(spec: DisguiseSpec):
    """Exact inverse of a disguise transform.

    Pitch families and the bilinear warp invert within their own family
    by negating the parameter. The other warp families have no such
    parameter, so the numerically inverted warp table is returned.
    """
    if spec.family in (DisguiseFamily.PITCH_FREQ, DisguiseFamily.PITCH_TIME,
                       DisguiseFamily.VTLN_BILINEAR):
        return DisguiseSpec(spec.family, -spec.param)
    return build_warp(spec).inverted()
