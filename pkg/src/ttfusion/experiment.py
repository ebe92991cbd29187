"""Experiment orchestration: load or synthesize frames, run the fusion
loop, verify projection reuse, and write deterministic outputs.

This is the layer behind the command-line front end; everything here is
importable so scripts and tests can drive runs directly.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .detection import AttentionSlice
from .frames import FrameObservation, load_frame, read_pgm, write_pgm
from .fusion import SequenceResult, run_sequence
from .projection import EquivalenceCheck, ProjectionSet, equivalence_failures, verify_equivalence
from .report import build_report, load_report, write_report
from .runconfig import ATTENTION_SOURCE_TENSOR_FILES, RunConfig, config_echo
from .synthetic import FRAME_NAME, generate_frames
from .tensor_io import read_tensor, write_tensor
from .toy_encoder import EncoderSpec, ToyEncoder, encode

logger = logging.getLogger("ttfusion")

MASK_DIR = "masks"
MASK_NAME = "mask_{:06d}.pgm"
TOKEN_DIR = "tokens"
TOKEN_NAME = "fused_{:06d}.ttft"
TEXT_ATTENTION_NAME = "attn_text_{:06d}.ttft"
ACTION_ATTENTION_NAME = "attn_action_{:06d}.ttft"
REPORT_NAME = "report.json"


@dataclass
class ExperimentResult:
    config: RunConfig
    sequence: SequenceResult
    checks: list[EquivalenceCheck]
    report: dict


def load_frames_dir(path: str | os.PathLike) -> list[FrameObservation]:
    """Load frame_%06d.ppm files starting at index 0."""
    if not os.path.isdir(path):
        raise FileNotFoundError(f"frames directory not found: {path}")
    frames = []
    t = 0
    while True:
        frame_path = os.path.join(path, FRAME_NAME.format(t))
        if not os.path.exists(frame_path):
            break
        frames.append(load_frame(frame_path, t))
        t += 1
    if not frames:
        raise FileNotFoundError(f"no frame_000000.ppm in {path}: first frame missing")
    return frames


@dataclass
class TensorFileAttentionEncoder:
    """Toy tokens with attention slices read from tensor files.

    Each timestep t needs attn_text_%06d.ttft (heads x text tokens x
    patches) and/or attn_action_%06d.ttft (heads x patches) under the
    attention directory; the file matching the configured mode must exist.
    """

    spec: EncoderSpec
    attention_dir: str
    required: str  # "text" or "action"

    def __call__(self, frame: FrameObservation):
        tokens = encode(frame, self.spec)
        text_path = os.path.join(self.attention_dir, TEXT_ATTENTION_NAME.format(frame.timestep))
        action_path = os.path.join(
            self.attention_dir, ACTION_ATTENTION_NAME.format(frame.timestep)
        )
        text_rows = read_tensor(text_path) if os.path.exists(text_path) else None
        action_row = read_tensor(action_path) if os.path.exists(action_path) else None
        if self.required == "text" and text_rows is None:
            raise FileNotFoundError(f"attention tensor not found: {text_path}")
        if self.required == "action" and action_row is None:
            raise FileNotFoundError(f"attention tensor not found: {action_path}")
        slice_ = AttentionSlice(
            text_rows=text_rows, action_row=action_row, source_timestep=frame.timestep
        )
        return tokens, slice_


def build_encoder(config: RunConfig):
    spec = EncoderSpec(
        token_dim=config.fusion.token_dim,
        seed=config.seed,
        text_token_count=config.text_tokens,
        head_count=config.heads,
    )
    if config.attention_source == ATTENTION_SOURCE_TENSOR_FILES:
        required = "text" if config.fusion.attention_mode == "text_to_vision" else "action"
        return TensorFileAttentionEncoder(
            spec=spec, attention_dir=config.attention_dir, required=required
        )
    return ToyEncoder(spec)


def materialize_frames(config: RunConfig) -> list[FrameObservation]:
    if config.frames_dir is not None:
        return load_frames_dir(config.frames_dir)
    return generate_frames(config.synth)


def run_experiment(
    config: RunConfig,
    frames: list[FrameObservation] | None = None,
    timing: dict | None = None,
) -> ExperimentResult:
    """One full run: fusion loop plus Q/K/V reuse verification."""
    if frames is None:
        frames = materialize_frames(config)
    encoder = build_encoder(config)
    sequence = run_sequence(frames, encoder, config.fusion, timing=timing)
    projections = ProjectionSet.generate(config.fusion.token_dim, config.seed)
    checks = verify_equivalence(sequence.steps, projections)
    report = build_report(config_echo(config), sequence, checks)
    logger.info(
        "run: %d steps, mean fusion rate %.4f (all) / %.4f (non-keyframe), max reuse error %g",
        len(sequence.steps),
        sequence.mean_fusion_rate_all,
        sequence.mean_fusion_rate_non_keyframe,
        max((c.max_error for c in checks), default=0.0),
    )
    return ExperimentResult(config=config, sequence=sequence, checks=checks, report=report)


def write_run_outputs(result: ExperimentResult, out_dir: str | os.PathLike) -> str:
    """Write report.json plus optional mask/token artifacts; returns the
    report path."""
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, REPORT_NAME)
    write_report(report_path, result.report)
    config = result.config
    grid = config.fusion.grid
    if config.emit_masks:
        mask_dir = os.path.join(out_dir, MASK_DIR)
        os.makedirs(mask_dir, exist_ok=True)
        for step in result.sequence.steps:
            if step.is_keyframe:
                continue
            image = (step.fusion_mask.reshape(grid.rows, grid.cols) * 255).astype(np.uint8)
            write_pgm(os.path.join(mask_dir, MASK_NAME.format(step.timestep)), image)
    if config.emit_tokens:
        token_dir = os.path.join(out_dir, TOKEN_DIR)
        os.makedirs(token_dir, exist_ok=True)
        for step in result.sequence.steps:
            write_tensor(
                os.path.join(token_dir, TOKEN_NAME.format(step.timestep)),
                step.fused_tokens.values,
            )
    return report_path


def run_sweep(
    config: RunConfig, parameter: str, values: list, frames: list[FrameObservation] | None = None
) -> tuple[dict, list[ExperimentResult]]:
    """Run the same frames once per parameter value.

    Returns the sweep summary (value -> fusion-rate means) and the per-value
    results in order.
    """
    from .report import build_sweep_summary
    from .runconfig import apply_parameter

    if not values:
        raise ValueError("sweep values list is empty")
    if frames is None:
        frames = materialize_frames(config)
    points = []
    results = []
    for value in values:
        varied = apply_parameter(config, parameter, value)
        result = run_experiment(varied, frames=frames)
        results.append(result)
        points.append(
            {
                "value": value,
                "mean_fusion_rate_all": result.sequence.mean_fusion_rate_all,
                "mean_fusion_rate_non_keyframe": result.sequence.mean_fusion_rate_non_keyframe,
            }
        )
        logger.info("sweep %s=%s: mean fusion rate %.4f", parameter, value, points[-1]["mean_fusion_rate_all"])
    return build_sweep_summary(parameter, points), results


def replay_run_dir(run_dir: str | os.PathLike) -> tuple[dict, list[EquivalenceCheck]]:
    """Re-check a recorded run from its report, token dumps, and mask files.

    The run must have been written with ``emit_tokens`` (and ``emit_masks``
    unless every step was a keyframe); projection weights are regenerated
    from the config echo.
    """
    report = load_report(os.path.join(run_dir, REPORT_NAME))
    config = report["config"]
    grid_patches = (config["width"] // 14) * (config["height"] // 14)
    items = []
    for record in report["steps"]:
        t = record["t"]
        token_path = os.path.join(run_dir, TOKEN_DIR, TOKEN_NAME.format(t))
        if not os.path.exists(token_path):
            raise FileNotFoundError(
                f"token dump not found: {token_path} (run with emit_tokens = true)"
            )
        tokens = read_tensor(token_path).astype(np.float64)
        if record["is_keyframe"]:
            mask = np.ones(grid_patches, dtype=np.uint8)
        else:
            mask_path = os.path.join(run_dir, MASK_DIR, MASK_NAME.format(t))
            if not os.path.exists(mask_path):
                raise FileNotFoundError(
                    f"mask file not found: {mask_path} (run with emit_masks = true)"
                )
            mask = (read_pgm(mask_path).ravel() > 0).astype(np.uint8)
        items.append((tokens, mask))
    projections = ProjectionSet.generate(config["token_dim"], config["seed"])
    checks = verify_equivalence(items, projections)
    return report, checks


def qreuse_failures(checks: list[EquivalenceCheck]) -> list[str]:
    return equivalence_failures(checks)
