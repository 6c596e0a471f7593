"""Latent grids, the SEGL binary file format, and synthetic latent generators.

A latent grid is an H x W x C real field standing in for transformer hidden
states laid out on a 2D token grid. Grids are stored and serialized as
float32; all downstream analysis promotes to float64.

SEGL format (little-endian throughout)::

    bytes 0..3    magic "SEGL"
    byte  4       version, currently 0x01
    bytes 5..16   H, W, C as uint32
    rest          H*W*C float32 values, row-major (h outer, w middle, c inner)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

MAGIC = b"SEGL"
VERSION = 1

STRUCTURE_KINDS = ("sinusoid", "band_limited", "checker", "file")
BLEND_KINDS = ("linear", "constant", "table")

# Sub-stream tags so noise, structure and feature draws never collide.
_STREAM_NOISE = 0
_STREAM_STRUCTURE = 1
_STREAM_FEATURES = 2


class LatentIOError(Exception):
    """Base class for SEGL read/write failures."""


class BadMagicError(LatentIOError):
    pass


class VersionMismatchError(LatentIOError):
    pass


class TruncatedPayloadError(LatentIOError):
    pass


class NonFiniteValuesError(LatentIOError):
    pass


@dataclass(frozen=True, eq=False)
class LatentGrid:
    """An H x W x C float32 field with H, W >= 2 and C >= 1, all values finite."""

    height: int
    width: int
    channels: int
    values: np.ndarray

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.height}x{self.width}")
        if self.channels < 1:
            raise ValueError("grid needs at least one channel")
        vals = np.ascontiguousarray(self.values, dtype=np.float32)
        if vals.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"values shape {vals.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "LatentGrid":
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"expected 2D or 3D array, got ndim={arr.ndim}")
        h, w, c = arr.shape
        return cls(h, w, c, arr.astype(np.float32))

    def tokens(self) -> np.ndarray:
        """Row-major (H*W, C) float64 view of the grid."""
        return self.values.reshape(-1, self.channels).astype(np.float64)


@dataclass(frozen=True, eq=False)
class CenteredMap:
    """A zero-centered H x W map obtained by channel-averaging a latent grid."""

    height: int
    width: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.height, self.width):
            raise ValueError(f"map shape {vals.shape} != ({self.height}, {self.width})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("map values must be finite")
        scale = float(np.mean(np.abs(vals)))
        if abs(float(vals.sum())) > 1e-6 * self.height * self.width * (scale + 1e-300):
            raise ValueError("map is not zero-centered")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def center_map(grid: LatentGrid) -> CenteredMap:
    """Average a grid across channels and remove the spatial mean."""
    mean_field = grid.values.astype(np.float64).mean(axis=2)
    centered = mean_field - mean_field.mean()
    return CenteredMap(grid.height, grid.width, centered)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Shape, seed and noise/structure blend of a simulated denoising run.

    ``noise_blend`` maps step t to a mixing weight alpha(t) in [0, 1] and must
    be non-increasing: noise dominates early steps, structure late ones.
    Supported descriptors: ``{"kind": "linear"}`` (1 at step 0 down to 0 at the
    final step), ``{"kind": "constant", "value": a}``, and
    ``{"kind": "table", "values": [...]}`` with one entry per step.
    """

    steps: int
    seed: int
    height: int = 64
    width: int = 64
    channels: int = 4
    structure_kind: str = "sinusoid"
    structure_params: dict = field(default_factory=dict)
    noise_blend: dict = field(default_factory=lambda: {"kind": "linear"})

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.height < 2 or self.width < 2 or self.channels < 1:
            raise ValueError("grid must be at least 2x2x1")
        if self.structure_kind not in STRUCTURE_KINDS:
            raise ValueError(f"unknown structure_kind {self.structure_kind!r}")
        alphas = [self._blend_at(t) for t in range(self.steps)]
        if any(a < 0.0 or a > 1.0 for a in alphas):
            raise ValueError("blend weights must lie in [0, 1]")
        if any(b > a + 1e-12 for a, b in zip(alphas, alphas[1:])):
            raise ValueError("blend weights must be non-increasing in step index")

    def _blend_at(self, step: int) -> float:
        kind = self.noise_blend.get("kind", "linear")
        if kind == "linear":
            if self.steps == 1:
                return 1.0
            return 1.0 - step / (self.steps - 1)
        if kind == "constant":
            return float(self.noise_blend["value"])
        if kind == "table":
            values = self.noise_blend["values"]
            if len(values) != self.steps:
                raise ValueError("blend table length must equal steps")
            return float(values[step])
        raise ValueError(f"unknown blend kind {kind!r}")

    def alpha(self, step: int) -> float:
        self._check_step(step)
        return self._blend_at(step)

    def time(self, step: int) -> float:
        """Denoising time coordinate: 1.0 at the pure-noise end, 0.0 at the last step."""
        self._check_step(step)
        if self.steps == 1:
            return 1.0
        return 1.0 - step / (self.steps - 1)

    def _check_step(self, step: int) -> None:
        if not 0 <= step < self.steps:
            raise ValueError(f"step {step} outside [0, {self.steps})")

    def with_shape(self, height: int, width: int) -> "TrajectoryConfig":
        return replace(self, height=height, width=width)


def _normalize_field(arr: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance normalization; degenerate fields collapse to zeros."""
    arr = arr - arr.mean()
    sd = arr.std()
    if sd > 1e-12:
        arr = arr / sd
    else:
        arr = np.zeros_like(arr)
    return arr


def structure_field(cfg: TrajectoryConfig) -> np.ndarray:
    """The deterministic structure component, normalized, shape (H, W, C)."""
    h_idx = np.arange(cfg.height, dtype=np.float64)[:, None]
    w_idx = np.arange(cfg.width, dtype=np.float64)[None, :]
    params = cfg.structure_params
    kind = cfg.structure_kind

    if kind == "sinusoid":
        cyc_h = float(params.get("cycles_h", 0.0))
        cyc_w = float(params.get("cycles_w", 4.0))
        phase = float(params.get("phase", 0.0))
        plane = np.cos(2.0 * np.pi * (cyc_h * h_idx / cfg.height + cyc_w * w_idx / cfg.width) + phase)
        field2d = plane
    elif kind == "checker":
        bh = int(params.get("block_h", 1))
        bw = int(params.get("block_w", 1))
        if bh < 1 or bw < 1:
            raise ValueError("checker blocks must be >= 1")
        parity = (h_idx.astype(int) // bh + w_idx.astype(int) // bw) % 2
        field2d = np.where(parity == 0, 1.0, -1.0)
    elif kind == "band_limited":
        low = float(params.get("low", 0.0))
        high = float(params.get("high", 0.25))
        if not 0.0 <= low < high <= 1.0:
            raise ValueError("band edges must satisfy 0 <= low < high <= 1")
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_STRUCTURE]))
        noise = rng.standard_normal((cfg.height, cfg.width))
        spec = np.fft.fft2(noise)
        u = np.minimum(h_idx, cfg.height - h_idx) / cfg.height
        v = np.minimum(w_idx, cfg.width - w_idx) / cfg.width
        rho = np.sqrt(u**2 + v**2) / np.sqrt(0.5)
        mask = (rho >= low) & (rho <= high)
        field2d = np.fft.ifft2(spec * mask).real
    elif kind == "file":
        path = params.get("path")
        if path is None:
            raise ValueError("structure_kind 'file' requires a 'path' parameter")
        grid = read_latent(path)
        if (grid.height, grid.width, grid.channels) != (cfg.height, cfg.width, cfg.channels):
            raise LatentIOError(
                f"structure file shape {grid.height}x{grid.width}x{grid.channels} does not "
                f"match config {cfg.height}x{cfg.width}x{cfg.channels}"
            )
        return _normalize_field(grid.values.astype(np.float64))
    else:  # pragma: no cover - guarded by TrajectoryConfig
        raise ValueError(f"unknown structure_kind {kind!r}")

    field3d = np.broadcast_to(field2d[:, :, None], (cfg.height, cfg.width, cfg.channels)).copy()
    return _normalize_field(field3d)


def generate_latent(cfg: TrajectoryConfig, step: int) -> LatentGrid:
    """alpha(step) * seeded Gaussian noise + (1 - alpha(step)) * structure.

    Noise is drawn from an independent stream keyed by (seed, step), so any
    single step is reproducible in isolation.
    """
    a = cfg.alpha(step)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_NOISE, step]))
    noise = rng.standard_normal((cfg.height, cfg.width, cfg.channels))
    blended = a * noise + (1.0 - a) * structure_field(cfg)
    return LatentGrid.from_array(blended)


def token_features(grid: LatentGrid, feature_dim: int, seed: int, step: int) -> np.ndarray:
    """Seeded Gaussian projection of grid channels to (H*W, feature_dim) token features."""
    if feature_dim < 1:
        raise ValueError("feature_dim must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _STREAM_FEATURES, step]))
    proj = rng.standard_normal((grid.channels, feature_dim)) / np.sqrt(grid.channels)
    return grid.tokens() @ proj


def write_latent(grid: LatentGrid, path) -> None:
    header = MAGIC + bytes([VERSION]) + struct.pack("<III", grid.height, grid.width, grid.channels)
    payload = grid.values.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(header + payload)


def read_latent(path) -> LatentGrid:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a SEGL file")
    if len(raw) < 5 or raw[4] != VERSION:
        got = raw[4] if len(raw) >= 5 else None
        raise VersionMismatchError(f"{path}: unsupported version {got!r}")
    if len(raw) < 17:
        raise TruncatedPayloadError(f"{path}: header truncated")
    h, w, c = struct.unpack("<III", raw[5:17])
    if h < 2 or w < 2 or c < 1:
        raise LatentIOError(f"{path}: invalid dimensions {h}x{w}x{c}")
    expected = h * w * c * 4
    payload = raw[17:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload) // 4} floats, header declares {h * w * c}"
        )
    vals = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValuesError(f"{path}: payload contains NaN or Inf")
    return LatentGrid(h, w, c, vals.astype(np.float32))
