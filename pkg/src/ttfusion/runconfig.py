"""Flat key=value experiment configuration.

One ``key = value`` per line, ``#`` starts a comment, unknown keys are
rejected.  A run reads frames either from a directory (``frames_dir``) or
from a synthetic recipe (``synth_frames`` plus the ``synth_*`` knobs);
exactly one of the two must be present.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .detection import ATTENTION_MODES
from .fusion import SELECTION_MODES, FusionConfig
from .synthetic import SynthSpec

ATTENTION_SOURCE_TOY = "toy"
ATTENTION_SOURCE_TENSOR_FILES = "tensor_files"
ATTENTION_SOURCES = (ATTENTION_SOURCE_TOY, ATTENTION_SOURCE_TENSOR_FILES)


class ConfigError(ValueError):
    """Invalid configuration file or parameter value."""


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise ConfigError(f"expected true/false, got {raw!r}")


def _parse_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected integer, got {raw!r}") from exc


def _parse_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"expected number, got {raw!r}") from exc


_PARSERS = {
    "frames_dir": str,
    "synth_frames": _parse_int,
    "synth_change_fraction": _parse_float,
    "synth_walker": _parse_bool,
    "synth_noise": _parse_float,
    "seed": _parse_int,
    "output_dir": str,
    "attention_source": str,
    "attention_dir": str,
    "emit_masks": _parse_bool,
    "emit_tokens": _parse_bool,
    "keyframe_interval": _parse_int,
    "pixel_threshold": _parse_float,
    "top_k": _parse_int,
    "attention_mode": str,
    "selection_mode": str,
    "target_reuse_rate": _parse_float,
    "width": _parse_int,
    "height": _parse_int,
    "token_dim": _parse_int,
    "enable_pixel": _parse_bool,
    "enable_attention": _parse_bool,
    "text_tokens": _parse_int,
    "heads": _parse_int,
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved experiment configuration."""

    fusion: FusionConfig
    frames_dir: str | None
    synth: SynthSpec | None
    seed: int
    output_dir: str
    attention_source: str
    attention_dir: str | None
    emit_masks: bool
    emit_tokens: bool
    text_tokens: int
    heads: int

    def __post_init__(self) -> None:
        if (self.frames_dir is None) == (self.synth is None):
            raise ConfigError("exactly one of frames_dir / synth_frames must be set")
        if self.attention_source not in ATTENTION_SOURCES:
            raise ConfigError(f"unknown attention source {self.attention_source!r}")
        if self.attention_source == ATTENTION_SOURCE_TENSOR_FILES and not self.attention_dir:
            raise ConfigError("attention_source = tensor_files requires attention_dir")
        if self.seed < 0 or self.seed >= (1 << 64):
            raise ConfigError("seed must fit in 64 bits")


def parse_config_text(text: str) -> dict:
    """Parse config text into a raw key/value dict (typed values)."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from exc
    return values


def build_run_config(values: dict) -> RunConfig:
    """Resolve raw values into a validated RunConfig with defaults."""
    unknown = set(values) - set(_PARSERS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        fusion = FusionConfig(
            keyframe_interval=values.get("keyframe_interval", 3),
            pixel_threshold=values.get("pixel_threshold", 0.03),
            top_k=values.get("top_k", 70),
            attention_mode=values.get("attention_mode", "text_to_vision"),
            selection_mode=values.get("selection_mode", "top_k"),
            target_reuse_rate=values.get("target_reuse_rate", 0.3),
            width=values.get("width", 224),
            height=values.get("height", 224),
            token_dim=values.get("token_dim", 64),
            enable_pixel=values.get("enable_pixel", True),
            enable_attention=values.get("enable_attention", True),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if fusion.attention_mode not in ATTENTION_MODES or fusion.selection_mode not in SELECTION_MODES:
        raise ConfigError("invalid attention or selection mode")

    seed = values.get("seed", 0)
    synth = None
    if "synth_frames" in values:
        try:
            synth = SynthSpec(
                frame_count=values["synth_frames"],
                width=fusion.width,
                height=fusion.height,
                change_fraction=values.get("synth_change_fraction", 0.0),
                walker=values.get("synth_walker", False),
                noise_amplitude=values.get("synth_noise", 0.0),
                seed=seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return RunConfig(
        fusion=fusion,
        frames_dir=values.get("frames_dir"),
        synth=synth,
        seed=seed,
        output_dir=values.get("output_dir", "out"),
        attention_source=values.get("attention_source", ATTENTION_SOURCE_TOY),
        attention_dir=values.get("attention_dir"),
        emit_masks=values.get("emit_masks", False),
        emit_tokens=values.get("emit_tokens", False),
        text_tokens=values.get("text_tokens", 8),
        heads=values.get("heads", 4),
    )


def load_config_file(path: str | os.PathLike) -> RunConfig:
    with open(path, "r", encoding="ascii") as fh:
        return build_run_config(parse_config_text(fh.read()))


# Sweep parameter aliases; canonical name first.
SWEEP_PARAMETERS = {
    "keyframe_interval": ("keyframe_interval", _parse_int),
    "K": ("keyframe_interval", _parse_int),
    "pixel_threshold": ("pixel_threshold", _parse_float),
    "tau_pixel": ("pixel_threshold", _parse_float),
    "top_k": ("top_k", _parse_int),
    "k": ("top_k", _parse_int),
}


def apply_parameter(config: RunConfig, name: str, value) -> RunConfig:
    """A copy of the config with one sweepable fusion parameter replaced."""
    if name not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {name!r} (expected one of K, tau_pixel, k)")
    canonical, _ = SWEEP_PARAMETERS[name]
    try:
        fusion = replace(config.fusion, **{canonical: value})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return replace(config, fusion=fusion)


def parse_sweep_values(name: str, raw_values: str) -> list:
    """Parse a comma-separated sweep value list for the given parameter."""
    if name not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {name!r} (expected one of K, tau_pixel, k)")
    _, parser = SWEEP_PARAMETERS[name]
    parts = [part.strip() for part in raw_values.split(",") if part.strip()]
    if not parts:
        raise ConfigError("sweep values list is empty")
    return [parser(part) for part in parts]


def config_echo(config: RunConfig) -> dict:
    """JSON-ready echo of the experiment-defining settings.

    The output directory is deliberately omitted: it does not influence
    results, and leaving it out keeps reports byte-comparable across runs
    written to different places.
    """
    fusion = config.fusion
    return {
        "frames_dir": config.frames_dir,
        "synth_frames": config.synth.frame_count if config.synth else None,
        "synth_change_fraction": config.synth.change_fraction if config.synth else None,
        "synth_walker": config.synth.walker if config.synth else None,
        "synth_noise": config.synth.noise_amplitude if config.synth else None,
        "seed": config.seed,
        "attention_source": config.attention_source,
        "attention_dir": config.attention_dir,
        "emit_masks": config.emit_masks,
        "emit_tokens": config.emit_tokens,
        "keyframe_interval": fusion.keyframe_interval,
        "pixel_threshold": fusion.pixel_threshold,
        "top_k": fusion.top_k,
        "attention_mode": fusion.attention_mode,
        "selection_mode": fusion.selection_mode,
        "target_reuse_rate": fusion.target_reuse_rate,
        "width": fusion.width,
        "height": fusion.height,
        "token_dim": fusion.token_dim,
        "enable_pixel": fusion.enable_pixel,
        "enable_attention": fusion.enable_attention,
        "text_tokens": config.text_tokens,
        "heads": config.heads,
    }
