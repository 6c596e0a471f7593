"""From latent grid to per-dimension rotary scaling.

Pipeline: center the grid, take one 2D FFT, fold the power spectrum into
axis-wise profiles (marginalized over the orthogonal frequency axis) and a
radial profile (ring averages). Per axis, each rotary dimension looks up the
band matching its wavelength; log-energies are standardized across dimensions
and pushed through tanh with the mean subtracted, giving a strictly zero-sum
correction s_d. The radial profile's spectral flatness gates the correction
strength sigma, and a resolution-ratio anchor m_ref sets the shared magnitude:

    m_d = m_ref * (1 - sigma * s_d)

High-energy bands get s_d > 0 and thus weaker scaling; flat (structureless)
spectra drive sigma toward 0, switching the correction off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .rope import RopeSchedule
from .tensorio import CenteredMap, LatentGrid, center_map

logger = logging.getLogger(__name__)

REF_FORMS = ("power", "log")

# Positivity floor for the modulator; 1 - sigma*s_d can in principle approach
# -1, so clamp and log rather than emit a nonpositive scaling.
MODULATOR_FLOOR = 0.05


@dataclass(frozen=True)
class SegaConfig:
    """Tuning knobs for the scaling pipeline."""

    kappa: float = 0.08
    gamma: float = 1.5
    ref_form: str = "power"
    eps: float = 1e-12
    n_bins_iso: int | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")
        if self.ref_form not in REF_FORMS:
            raise ValueError(f"ref_form must be one of {REF_FORMS}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.n_bins_iso is not None and self.n_bins_iso < 2:
            raise ValueError("n_bins_iso must be >= 2")

    def bins_for(self, height: int, width: int) -> int:
        if self.n_bins_iso is not None:
            return self.n_bins_iso
        return max(2, min(height, width) // 2)


@dataclass(frozen=True, eq=False)
class SpectralProfiles:
    """Axis-marginalized and radial energy profiles of one latent."""

    axis_h: np.ndarray
    axis_w: np.ndarray
    radial: np.ndarray
    occupied: np.ndarray

    def __post_init__(self):
        for name in ("axis_h", "axis_w", "radial"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError(f"{name} must be a nonempty 1D array")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} entries must be finite and nonnegative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        occ = np.ascontiguousarray(self.occupied, dtype=bool)
        if occ.shape != self.radial.shape:
            raise ValueError("occupied mask must match radial profile length")
        object.__setattr__(self, "occupied", occ)


@dataclass(frozen=True, eq=False)
class ScalingVector:
    """Per-dimension scaling magnitudes for one axis, plus the pieces they came from."""

    axis: str
    m: np.ndarray
    sigma: float
    m_ref: float
    s_corr: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.m, dtype=np.float64)
        s = np.ascontiguousarray(self.s_corr, dtype=np.float64)
        if m.shape != s.shape or m.ndim != 1:
            raise ValueError("m and s_corr must be 1D arrays of equal length")
        if not np.all(m > 0):
            raise ValueError("all scaling magnitudes must be positive")
        if abs(float(s.sum())) > 1e-9 * s.size:
            raise ValueError("correction vector must be zero-sum")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("sigma must lie in [0, 1]")
        m.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "s_corr", s)


def power_spectrum_2d(cmap: CenteredMap) -> np.ndarray:
    """|FFT2(map)|^2 on the full (wrapped) frequency grid."""
    return np.abs(np.fft.fft2(cmap.values)) ** 2


def axis_profiles(spectrum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Marginalize the power spectrum onto each axis, folding conjugate halves.

    Bin i of the H profile sums rows i and H-i of the spectrum (row 0 alone
    for i = 0); profile lengths are floor(H/2) and floor(W/2).
    """
    h, w = spectrum.shape

    def one_axis(spec: np.ndarray, length: int) -> np.ndarray:
        rows = spec.sum(axis=1)
        bins = np.empty(length // 2, dtype=np.float64)
        bins[0] = rows[0]
        for i in range(1, length // 2):
            bins[i] = rows[i] + rows[length - i]
        return bins

    return one_axis(spectrum, h), one_axis(spectrum.T, w)


def radial_profile(spectrum: np.ndarray, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Ring-average the power spectrum over normalized isotropic frequency.

    Sample (i, j) has normalized radius rho = sqrt(u^2 + v^2) / sqrt(0.5) with
    u = min(i, H-i)/H and v = min(j, W-j)/W, so the grid corner lands at
    rho = 1 regardless of aspect ratio. The DC sample is excluded. Returns the
    per-bin means and an occupancy mask; empty bins hold 0.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    h, w = spectrum.shape
    i = np.arange(h, dtype=np.float64)[:, None]
    j = np.arange(w, dtype=np.float64)[None, :]
    u = np.minimum(i, h - i) / h
    v = np.minimum(j, w - j) / w
    rho = np.sqrt(u**2 + v**2) / math.sqrt(0.5)
    bins = np.minimum((rho * n_bins).astype(np.int64), n_bins - 1)
    flat_bins = bins.ravel()
    flat_spec = spectrum.ravel()
    keep = np.ones(flat_bins.shape, dtype=bool)
    keep[0] = False  # DC sits at flat index 0
    counts = np.bincount(flat_bins[keep], minlength=n_bins)
    sums = np.bincount(flat_bins[keep], weights=flat_spec[keep], minlength=n_bins)
    occupied = counts > 0
    e_iso = np.zeros(n_bins, dtype=np.float64)
    e_iso[occupied] = sums[occupied] / counts[occupied]
    return e_iso, occupied


def band_lookup(theta_d: float, axis_len: int) -> int:
    """Profile bin matching one rotary frequency.

    The frequency in cycles/token is theta_d / (2*pi); the bin is its cycle
    count over the axis, rounded to nearest and clamped to the profile range.
    Wavelengths longer than the axis map to bin 0.
    """
    if theta_d <= 0:
        raise ValueError("theta_d must be positive")
    cycles = theta_d * axis_len / (2.0 * np.pi)
    if cycles < 1.0:
        return 0
    top = max(axis_len // 2 - 1, 0)
    return min(int(math.floor(cycles + 0.5)), top)


def per_dim_correction(
    profile: np.ndarray,
    schedule: RopeSchedule,
    eps: float = 1e-12,
    axis_len: int | None = None,
) -> np.ndarray:
    """Zero-sum correction over rotary dimensions from banded log-energies.

    Log-energies ln(E[band(theta_d)] + eps) are standardized across d (all
    zeros when degenerate), passed through tanh, and mean-centered.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if profile.size < 1:
        raise ValueError("profile must be nonempty")
    if axis_len is None:
        axis_len = 2 * profile.size
    banded = np.array(
        [profile[band_lookup(t, axis_len)] for t in schedule.theta], dtype=np.float64
    )
    log_e = np.log(banded + eps)
    mu = log_e.mean()
    nu = log_e.std()
    z = np.zeros_like(log_e) if nu < 1e-12 else (log_e - mu) / nu
    t = np.tanh(z)
    return t - t.mean()


def spectral_flatness(e_iso: np.ndarray, occupied: np.ndarray, eps: float = 1e-12) -> float:
    """Geometric over arithmetic mean of the occupied radial bins, floored at eps."""
    e_iso = np.asarray(e_iso, dtype=np.float64)
    occupied = np.asarray(occupied, dtype=bool)
    if not occupied.any():
        raise ValueError("flatness needs at least one occupied bin")
    vals = np.maximum(e_iso[occupied], eps)
    return float(np.exp(np.mean(np.log(vals))) / np.mean(vals))


def amplitude_factor(flatness: float, gamma: float) -> float:
    """sigma = 1 - flatness**gamma, clipped into [0, 1] against roundoff."""
    if not 0.0 < flatness <= 1.0:
        raise ValueError("flatness must lie in (0, 1]")
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    return min(max(1.0 - flatness**gamma, 0.0), 1.0)


def reference_scale(ratio: float, cfg: SegaConfig) -> float:
    """Shared anchor magnitude: ratio**kappa, or 1 + kappa*ln(ratio) for the log form."""
    if ratio < 1.0:
        raise ValueError("ratio must be >= 1")
    if cfg.ref_form == "power":
        return ratio**cfg.kappa
    return 1.0 + cfg.kappa * math.log(ratio)


def analyze(grid: LatentGrid, n_bins: int | None = None) -> SpectralProfiles:
    """Centered map -> power spectrum -> axis and radial profiles."""
    spectrum = power_spectrum_2d(center_map(grid))
    e_h, e_w = axis_profiles(spectrum)
    if n_bins is None:
        n_bins = max(2, min(grid.height, grid.width) // 2)
    e_iso, occupied = radial_profile(spectrum, n_bins)
    return SpectralProfiles(axis_h=e_h, axis_w=e_w, radial=e_iso, occupied=occupied)


@dataclass(frozen=True, eq=False)
class ModulationResult:
    """Both axis scaling vectors plus shared diagnostics."""

    vec_h: ScalingVector
    vec_w: ScalingVector
    flatness: float
    profiles: SpectralProfiles


def _scaling_vector(axis, profile, axis_len, schedule, sigma, m_ref, eps) -> ScalingVector:
    s = per_dim_correction(profile, schedule, eps=eps, axis_len=axis_len)
    modulator = 1.0 - sigma * s
    floored = np.maximum(modulator, MODULATOR_FLOOR)
    n_clamped = int(np.count_nonzero(floored != modulator))
    if n_clamped:
        logger.warning(
            "axis %s: clamped %d modulator value(s) at floor %.2f; "
            "mean scaling is no longer exactly m_ref",
            axis,
            n_clamped,
            MODULATOR_FLOOR,
        )
    return ScalingVector(axis=axis, m=m_ref * floored, sigma=sigma, m_ref=m_ref, s_corr=s)


def modulate_detailed(
    grid: LatentGrid,
    sched_h: RopeSchedule,
    sched_w: RopeSchedule,
    ratio: float,
    cfg: SegaConfig | None = None,
) -> ModulationResult:
    """Full pipeline on one latent, returning vectors plus diagnostics."""
    cfg = cfg or SegaConfig()
    profiles = analyze(grid, cfg.bins_for(grid.height, grid.width))
    flatness = spectral_flatness(profiles.radial, profiles.occupied, cfg.eps)
    sigma = amplitude_factor(flatness, cfg.gamma)
    m_ref = reference_scale(ratio, cfg)
    vec_h = _scaling_vector("H", profiles.axis_h, grid.height, sched_h, sigma, m_ref, cfg.eps)
    vec_w = _scaling_vector("W", profiles.axis_w, grid.width, sched_w, sigma, m_ref, cfg.eps)
    return ModulationResult(vec_h=vec_h, vec_w=vec_w, flatness=flatness, profiles=profiles)


def modulate(
    grid: LatentGrid,
    sched_h: RopeSchedule,
    sched_w: RopeSchedule,
    ratio: float,
    cfg: SegaConfig | None = None,
) -> tuple[ScalingVector, ScalingVector]:
    """Per-axis scaling vectors for one latent under the given schedules."""
    result = modulate_detailed(grid, sched_h, sched_w, ratio, cfg)
    return result.vec_h, result.vec_w
