"""Simulated denoising trajectories driving per-step scaling and entropy traces.

Real diffusion latents are out of reach here, so each step blends seeded
Gaussian noise with a deterministic structure field (noise-heavy early,
structure-heavy late). Every step is analyzed spectrally, each configured
method gets its schedules and scaling vectors, and attention entropy is
measured on seeded Gaussian token features so it responds to positional
scaling without a learned model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .attention import attend_rotary, attention_entropy, grid_positions
from .rope import METHODS, RopeSchedule, YarnParams, make_schedule, yarn_temperature
from .spectral import SegaConfig, reference_scale
from .tensorio import TrajectoryConfig, generate_latent, token_features
from .fmtio import canonical_json

SCALING_MODES = ("none", "fixed", "sega")
GRID_KINDS = ("target", "train")


@dataclass(frozen=True)
class MethodSpec:
    """One configuration under comparison: a rope method plus a scaling mode.

    scaling: "none" leaves rotary magnitudes at 1, "fixed" applies the uniform
    anchor m_ref to every dimension, "sega" applies the spectral modulator.
    grid "train" evaluates at the training-scale grid (ratio 1), which is how
    the baseline for entropy deltas is defined.
    """

    name: str
    rope: str = "ntk_strong"
    scaling: str = "sega"
    temperature: bool = False
    grid: str = "target"

    def __post_init__(self):
        if not self.name:
            raise ValueError("method needs a name")
        if self.rope not in METHODS:
            raise ValueError(f"unknown rope method {self.rope!r}")
        if self.scaling not in SCALING_MODES:
            raise ValueError(f"unknown scaling mode {self.scaling!r}")
        if self.grid not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {self.grid!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rope": self.rope,
            "scaling": self.scaling,
            "temperature": self.temperature,
            "grid": self.grid,
        }


@dataclass(frozen=True)
class RopeParams:
    """Experiment-level rotary settings shared by all methods."""

    dim: int = 64
    base: float = 10000.0
    ratio_h: float = 2.0
    ratio_w: float = 2.0
    yarn_alpha: float = 1.0
    yarn_beta: float = 32.0
    dype_p: float = 1.0
    dype_strong: bool = False

    def __post_init__(self):
        if self.dim < 4 or self.dim % 2 != 0:
            raise ValueError("dim must be an even integer >= 4")
        if self.ratio_h < 1.0 or self.ratio_w < 1.0:
            raise ValueError("ratios must be >= 1")

    @property
    def ratio_scalar(self) -> float:
        """Single resolution ratio feeding m_ref; geometric mean when axes differ."""
        return math.sqrt(self.ratio_h * self.ratio_w)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "base": self.base,
            "ratio_h": self.ratio_h,
            "ratio_w": self.ratio_w,
            "yarn_alpha": self.yarn_alpha,
            "yarn_beta": self.yarn_beta,
            "dype_p": self.dype_p,
            "dype_strong": self.dype_strong,
        }


@dataclass
class MethodStepRecord:
    m_ref: float
    m_h: np.ndarray
    m_w: np.ndarray
    mean_entropy: float | None

    def to_dict(self) -> dict:
        return {
            "m_ref": self.m_ref,
            "m_h": [float(x) for x in self.m_h],
            "m_w": [float(x) for x in self.m_w],
            "mean_entropy": self.mean_entropy,
        }


@dataclass
class StepRecord:
    step: int
    alpha: float
    time: float
    flatness: float
    sigma: float
    methods: dict

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "alpha": self.alpha,
            "time": self.time,
            "flatness": self.flatness,
            "sigma": self.sigma,
            "methods": {name: rec.to_dict() for name, rec in self.methods.items()},
        }


@dataclass
class TrajectoryRecord:
    config: dict
    steps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "steps": [s.to_dict() for s in self.steps]}

    def to_json_bytes(self) -> bytes:
        return (canonical_json(self.to_dict()) + "\n").encode("utf-8")


def _axis_schedule(axis, axis_ratio, train_len, method_name, rope: RopeParams, t) -> RopeSchedule:
    yarn = None
    if method_name == "yarn":
        yarn = YarnParams(alpha=rope.yarn_alpha, beta=rope.yarn_beta, train_len=train_len)
    return make_schedule(
        axis=axis,
        dim=rope.dim,
        base=rope.base,
        method=method_name,
        ratio=axis_ratio,
        yarn=yarn,
        dype_time=t,
        dype_p=rope.dype_p,
        dype_strong=rope.dype_strong,
    )


def _train_shape(cfg: TrajectoryConfig, rope: RopeParams) -> tuple[int, int]:
    th = max(2, round(cfg.height / rope.ratio_h))
    tw = max(2, round(cfg.width / rope.ratio_w))
    return th, tw


def method_schedules(
    method: MethodSpec, cfg: TrajectoryConfig, rope: RopeParams, step: int
) -> tuple[RopeSchedule, RopeSchedule]:
    """Per-axis schedules for one method at one step (time feeds dype)."""
    t = cfg.time(step)
    if method.grid == "train":
        rh = rw = 1.0
        lh, lw = _train_shape(cfg, rope)
    else:
        rh, rw = rope.ratio_h, rope.ratio_w
        lh = cfg.height / rope.ratio_h
        lw = cfg.width / rope.ratio_w
    sched_h = _axis_schedule("H", rh, lh, method.rope, rope, t)
    sched_w = _axis_schedule("W", rw, lw, method.rope, rope, t)
    return sched_h, sched_w


def run_trajectory(
    cfg: TrajectoryConfig,
    methods: list,
    sega_cfg: SegaConfig | None = None,
    rope: RopeParams | None = None,
    with_attention: bool = True,
) -> TrajectoryRecord:
    """Evaluate every method at every step of one simulated denoising run."""
    sega_cfg = sega_cfg or SegaConfig()
    rope = rope or RopeParams()
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ValueError("method names must be unique")

    train_h, train_w = _train_shape(cfg, rope)
    train_cfg = cfg.with_shape(train_h, train_w)
    record = TrajectoryRecord(
        config={
            "trajectory": {
                "steps": cfg.steps,
                "seed": cfg.seed,
                "height": cfg.height,
                "width": cfg.width,
                "channels": cfg.channels,
                "structure_kind": cfg.structure_kind,
                "structure_params": dict(cfg.structure_params),
                "noise_blend": dict(cfg.noise_blend),
            },
            "rope": rope.to_dict(),
            "sega": {
                "kappa": sega_cfg.kappa,
                "gamma": sega_cfg.gamma,
                "ref_form": sega_cfg.ref_form,
                "eps": sega_cfg.eps,
                "n_bins_iso": sega_cfg.n_bins_iso,
            },
            "methods": [m.to_dict() for m in methods],
            "with_attention": with_attention,
        }
    )

    for step in range(cfg.steps):
        latents = {"target": generate_latent(cfg, step)}
        if any(m.grid == "train" for m in methods):
            latents["train"] = generate_latent(train_cfg, step)

        profiles = spectral.analyze(
            latents["target"], sega_cfg.bins_for(cfg.height, cfg.width)
        )
        flatness = spectral.spectral_flatness(profiles.radial, profiles.occupied, sega_cfg.eps)
        step_rec = StepRecord(
            step=step,
            alpha=cfg.alpha(step),
            time=cfg.time(step),
            flatness=flatness,
            sigma=spectral.amplitude_factor(flatness, sega_cfg.gamma),
            methods={},
        )

        for method in methods:
            latent = latents[method.grid]
            sched_h, sched_w = method_schedules(method, cfg, rope, step)
            ratio = rope.ratio_scalar if method.grid == "target" else 1.0
            m_ref = reference_scale(ratio, sega_cfg)
            half = rope.dim // 2
            if method.scaling == "none":
                m_h = np.ones(half)
                m_w = np.ones(half)
                rec_m_ref = 1.0
            elif method.scaling == "fixed":
                m_h = np.full(half, m_ref)
                m_w = np.full(half, m_ref)
                rec_m_ref = m_ref
            else:
                result = spectral.modulate_detailed(latent, sched_h, sched_w, ratio, sega_cfg)
                m_h, m_w = result.vec_h.m, result.vec_w.m
                rec_m_ref = m_ref

            mean_entropy = None
            if with_attention:
                feats = token_features(latent, 2 * rope.dim, cfg.seed, step)
                positions = grid_positions(latent.height, latent.width)
                tau = yarn_temperature(ratio) if method.temperature else 1.0
                _, fld = attend_rotary(
                    feats, feats, feats, positions, sched_h, sched_w, m_h, m_w, tau
                )
                mean_entropy = attention_entropy(fld)[1]

            step_rec.methods[method.name] = MethodStepRecord(
                m_ref=rec_m_ref, m_h=m_h, m_w=m_w, mean_entropy=mean_entropy
            )
        record.steps.append(step_rec)
    return record


def spectral_heatmap(
    cfg: TrajectoryConfig, n_bins: int | None = None
) -> tuple[np.ndarray, list]:
    """Per-step radial profiles, each row normalized to sum 1.

    Rows with no spectral energy at all (possible for degenerate structure
    fields) are left as zeros and their step indices returned as flags.
    """
    if n_bins is None:
        n_bins = max(2, min(cfg.height, cfg.width) // 2)
    rows = np.zeros((cfg.steps, n_bins), dtype=np.float64)
    degenerate = []
    for step in range(cfg.steps):
        profiles = spectral.analyze(generate_latent(cfg, step), n_bins)
        total = profiles.radial.sum()
        if total <= 0.0:
            degenerate.append(step)
            continue
        rows[step] = profiles.radial / total
    return rows, degenerate


def entropy_trace(
    cfg: TrajectoryConfig,
    methods: list,
    baseline: MethodSpec,
    sega_cfg: SegaConfig | None = None,
    rope: RopeParams | None = None,
) -> tuple[np.ndarray, list, TrajectoryRecord]:
    """Per-step mean-entropy deltas of each method against the baseline.

    The baseline is usually evaluated at the training-scale grid; deltas are
    method minus baseline, so positive means the method is more diffuse.
    """
    record = run_trajectory(cfg, [*methods, baseline], sega_cfg, rope, with_attention=True)
    deltas = np.zeros((cfg.steps, len(methods)), dtype=np.float64)
    for t, step_rec in enumerate(record.steps):
        base_e = step_rec.methods[baseline.name].mean_entropy
        for j, m in enumerate(methods):
            deltas[t, j] = step_rec.methods[m.name].mean_entropy - base_e
    return deltas, [m.name for m in methods], record
