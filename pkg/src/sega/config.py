"""Experiment configuration: JSON in, validated dataclasses out.

Every field has a default; unknown keys are rejected so a typo cannot
silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .harness import MethodSpec, RopeParams
from .rope import METHODS
from .spectral import SegaConfig
from .tensorio import TrajectoryConfig


class ConfigError(ValueError):
    """Raised for malformed or contradictory experiment configs."""


_ROPE_KEYS = {
    "dim", "base", "method", "ratio", "ratio_h", "ratio_w",
    "yarn_alpha", "yarn_beta", "dype_p", "dype_strong",
}
_SEGA_KEYS = {"kappa", "gamma", "ref_form", "eps", "n_bins_iso"}
_TRAJ_KEYS = {
    "steps", "seed", "height", "width", "channels",
    "structure_kind", "structure_params", "noise_blend", "methods", "baseline",
}
_METHOD_KEYS = {"name", "rope", "scaling", "temperature", "grid"}
_OUTPUT_KEYS = {"dir"}
_TOP_KEYS = {"rope", "sega", "trajectory", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    trajectory: TrajectoryConfig
    sega: SegaConfig
    rope: RopeParams
    rope_method: str
    methods: tuple
    baseline: MethodSpec
    output_dir: str

    def snapshot(self) -> dict:
        """Fully resolved config echo for summaries."""
        return {
            "rope": {**self.rope.to_dict(), "method": self.rope_method},
            "sega": {
                "kappa": self.sega.kappa,
                "gamma": self.sega.gamma,
                "ref_form": self.sega.ref_form,
                "eps": self.sega.eps,
                "n_bins_iso": self.sega.n_bins_iso,
            },
            "trajectory": {
                "steps": self.trajectory.steps,
                "seed": self.trajectory.seed,
                "height": self.trajectory.height,
                "width": self.trajectory.width,
                "channels": self.trajectory.channels,
                "structure_kind": self.trajectory.structure_kind,
                "structure_params": dict(self.trajectory.structure_params),
                "noise_blend": dict(self.trajectory.noise_blend),
                "methods": [m.to_dict() for m in self.methods],
                "baseline": self.baseline.to_dict(),
            },
            "output": {"dir": self.output_dir},
        }


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _method_spec(raw: dict, default_rope: str, where: str) -> MethodSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(raw, _METHOD_KEYS, where)
    try:
        return MethodSpec(
            name=raw.get("name", ""),
            rope=raw.get("rope", default_rope),
            scaling=raw.get("scaling", "sega"),
            temperature=bool(raw.get("temperature", False)),
            grid=raw.get("grid", "target"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_experiment_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path or an already-parsed dict."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")

    rope_raw = dict(raw.get("rope", {}))
    sega_raw = dict(raw.get("sega", {}))
    traj_raw = dict(raw.get("trajectory", {}))
    out_raw = dict(raw.get("output", {}))
    _check_keys(rope_raw, _ROPE_KEYS, "rope")
    _check_keys(sega_raw, _SEGA_KEYS, "sega")
    _check_keys(traj_raw, _TRAJ_KEYS, "trajectory")
    _check_keys(out_raw, _OUTPUT_KEYS, "output")

    ratio = float(rope_raw.get("ratio", 2.0))
    rope_method = rope_raw.get("method", "ntk_strong")
    if rope_method not in METHODS:
        raise ConfigError(f"rope.method must be one of {METHODS}")
    try:
        rope = RopeParams(
            dim=int(rope_raw.get("dim", 64)),
            base=float(rope_raw.get("base", 10000.0)),
            ratio_h=float(rope_raw.get("ratio_h", ratio)),
            ratio_w=float(rope_raw.get("ratio_w", ratio)),
            yarn_alpha=float(rope_raw.get("yarn_alpha", 1.0)),
            yarn_beta=float(rope_raw.get("yarn_beta", 32.0)),
            dype_p=float(rope_raw.get("dype_p", 1.0)),
            dype_strong=bool(rope_raw.get("dype_strong", False)),
        )
        sega = SegaConfig(
            kappa=float(sega_raw.get("kappa", 0.08)),
            gamma=float(sega_raw.get("gamma", 1.5)),
            ref_form=sega_raw.get("ref_form", "power"),
            eps=float(sega_raw.get("eps", 1e-12)),
            n_bins_iso=(
                None if sega_raw.get("n_bins_iso") is None else int(sega_raw["n_bins_iso"])
            ),
        )
        trajectory = TrajectoryConfig(
            steps=int(traj_raw.get("steps", 8)),
            seed=int(traj_raw.get("seed", 0)),
            height=int(traj_raw.get("height", 64)),
            width=int(traj_raw.get("width", 64)),
            channels=int(traj_raw.get("channels", 4)),
            structure_kind=traj_raw.get("structure_kind", "sinusoid"),
            structure_params=dict(traj_raw.get("structure_params", {"cycles_w": 4.0})),
            noise_blend=dict(traj_raw.get("noise_blend", {"kind": "linear"})),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    methods_raw = traj_raw.get(
        "methods",
        [
            {"name": "sega", "scaling": "sega"},
            {"name": "fixed", "scaling": "fixed"},
        ],
    )
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("trajectory.methods must be a nonempty list")
    methods = tuple(
        _method_spec(m, rope_method, f"trajectory.methods[{i}]") for i, m in enumerate(methods_raw)
    )
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError("method names must be unique")
    baseline = _method_spec(
        traj_raw.get(
            "baseline",
            {"name": "baseline", "rope": "none", "scaling": "none", "grid": "train"},
        ),
        "none",
        "trajectory.baseline",
    )
    if baseline.name in names:
        raise ConfigError("baseline name collides with a method name")

    return ExperimentConfig(
        trajectory=trajectory,
        sega=sega,
        rope=rope,
        rope_method=rope_method,
        methods=methods,
        baseline=baseline,
        output_dir=str(out_raw.get("dir", "out")),
    )
