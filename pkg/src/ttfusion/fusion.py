"""Per-timestep hard token fusion with keyframe anchoring.

Each step decides patch-by-patch whether to keep the freshly encoded token
or splice in the previous step's fused token.  The decision ORs the pixel
and attention masks; keyframes (every K steps, or whenever history is empty)
recompute everything and reset reuse chains.  The rolling state stores the
*fused* tokens, so reuse chains extend until a keyframe cuts them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import detection
from .detection import ATTENTION_MODES, AttentionSlice
from .frames import FrameObservation, GrayscaleImage, PatchGrid, to_grayscale

SELECTION_TOP_K = "top_k"
SELECTION_RATE_TARGET = "rate_target"
SELECTION_MODES = (SELECTION_TOP_K, SELECTION_RATE_TARGET)


@dataclass
class TokenMatrix:
    """N x d patch-token matrix; row i is the token of patch i."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("token matrix must be 2-D")
        if not np.isfinite(self.values).all():
            raise ValueError("token matrix contains non-finite values")

    @property
    def patch_count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FusionConfig:
    """Knobs of the fusion loop.

    Defaults follow the simulation configuration (keyframe interval 3,
    attention budget 70, pixel threshold 0.03, text-to-vision attention).
    Disabling a detection dimension removes it from the OR combination.
    """

    keyframe_interval: int = 3
    pixel_threshold: float = 0.03
    top_k: int = 70
    attention_mode: str = detection.TEXT_TO_VISION
    selection_mode: str = SELECTION_TOP_K
    target_reuse_rate: float = 0.3
    width: int = 224
    height: int = 224
    token_dim: int = 64
    enable_pixel: bool = True
    enable_attention: bool = True

    def __post_init__(self) -> None:
        if self.keyframe_interval < 1:
            raise ValueError("keyframe interval must be at least 1")
        if self.pixel_threshold < 0.0:
            raise ValueError("pixel threshold must be non-negative")
        if self.top_k < 0:
            raise ValueError("attention budget must be non-negative")
        if self.attention_mode not in ATTENTION_MODES:
            raise ValueError(f"unknown attention mode {self.attention_mode!r}")
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"unknown selection mode {self.selection_mode!r}")
        if not 0.0 <= self.target_reuse_rate <= 1.0:
            raise ValueError("target reuse rate must lie in [0, 1]")
        if self.token_dim < 1:
            raise ValueError("token dim must be positive")
        PatchGrid.from_dims(self.width, self.height)

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid.from_dims(self.width, self.height)


@dataclass
class FusionState:
    """Rolling memory between steps: previous frame, fused tokens, attention.

    At timestep 0 every ``prev_*`` field is absent; afterwards
    ``prev_tokens`` always holds the fused tokens just emitted.
    """

    prev_frame: FrameObservation | None = None
    prev_gray: GrayscaleImage | None = None
    prev_tokens: TokenMatrix | None = None
    prev_attention: AttentionSlice | None = None
    timestep: int = 0

    @classmethod
    def initial(cls) -> "FusionState":
        return cls()


@dataclass
class StepResult:
    """Outcome of one fusion step.

    On keyframes every mask is recorded as all-ones, ``diffs`` is zero, and
    the fusion rate is 0.  ``fusion_rate`` counts the fraction of patches
    whose token was reused from history.
    """

    timestep: int
    is_keyframe: bool
    fused_tokens: TokenMatrix
    pixel_mask: np.ndarray
    attention_mask: np.ndarray
    fusion_mask: np.ndarray
    fusion_rate: float
    diffs: np.ndarray


@dataclass
class SequenceResult:
    """Per-step results plus the two fusion-rate means.

    ``mean_fusion_rate_all`` includes keyframes (which contribute 0);
    ``mean_fusion_rate_non_keyframe`` averages the remaining steps and is
    0.0 when every step was a keyframe.
    """

    steps: list[StepResult]
    mean_fusion_rate_all: float
    mean_fusion_rate_non_keyframe: float

    @property
    def fusion_rates(self) -> list[float]:
        return [s.fusion_rate for s in self.steps]


def is_keyframe(t: int, state: FusionState, keyframe_interval: int) -> bool:
    """True when all patches are unconditionally recomputed at step t."""
    if t != state.timestep:
        raise ValueError(f"step timestep {t} does not match state timestep {state.timestep}")
    return (t % keyframe_interval == 0) or state.prev_tokens is None


def combine_masks(
    pixel_mask: np.ndarray, attention_mask: np.ndarray, config: FusionConfig
) -> np.ndarray:
    """OR the two masks; a disabled dimension contributes all-zeros."""
    pixel_mask = np.asarray(pixel_mask, dtype=np.uint8)
    attention_mask = np.asarray(attention_mask, dtype=np.uint8)
    if pixel_mask.shape != attention_mask.shape:
        raise ValueError(f"mask lengths differ: {pixel_mask.shape} vs {attention_mask.shape}")
    if not config.enable_pixel:
        pixel_mask = np.zeros_like(pixel_mask)
    if not config.enable_attention:
        attention_mask = np.zeros_like(attention_mask)
    return (pixel_mask | attention_mask).astype(np.uint8)


def fuse_tokens(
    current: TokenMatrix, previous: TokenMatrix, fusion_mask: np.ndarray
) -> TokenMatrix:
    """Row-wise hard selection: mask 1 takes the current row, 0 the previous.

    Rows are copied bit-exactly; no blending.
    """
    if current.values.shape != previous.values.shape:
        raise ValueError(
            f"token shapes differ: {current.values.shape} vs {previous.values.shape}"
        )
    mask = np.asarray(fusion_mask, dtype=np.uint8)
    if mask.shape != (current.patch_count,):
        raise ValueError(f"mask length {mask.shape} does not match {current.patch_count} patches")
    fused = np.where(mask[:, None] == 1, current.values, previous.values)
    return TokenMatrix(fused)


def _attention_mask(
    prev_attention: AttentionSlice | None, n: int, config: FusionConfig
) -> np.ndarray:
    if prev_attention is None:
        # No usable attention from the prior step: recompute everything
        # rather than risk reusing stale tokens.
        return np.ones(n, dtype=np.uint8)
    scores = detection.relevance_scores(prev_attention, config.attention_mode)
    if scores.shape[0] != n:
        raise ValueError(f"attention slice covers {scores.shape[0]} patches, expected {n}")
    if config.selection_mode == SELECTION_TOP_K:
        selected = detection.top_k_mask(scores, config.top_k, mode=config.attention_mode)
    else:
        selected = detection.rate_target_mask(
            scores, config.target_reuse_rate, mode=config.attention_mode
        )
    return selected.mask


def step(
    state: FusionState,
    frame: FrameObservation,
    encoder,
    config: FusionConfig,
    timing: dict | None = None,
) -> tuple[StepResult, FusionState]:
    """Run one timestep of the fusion loop.

    ``encoder`` is any callable mapping a frame to ``(TokenMatrix,
    AttentionSlice | None)``.  The returned state carries the fused tokens,
    this frame's grayscale, and the attention captured this step (consumed
    by the next step).  ``timing`` optionally accumulates phase seconds
    under ``encode`` / ``pixel_detect`` / ``fuse``.
    """
    t = frame.timestep
    if t != state.timestep:
        raise ValueError(f"frame timestep {t} does not match state timestep {state.timestep}")
    if frame.width != config.width or frame.height != config.height:
        raise ValueError(
            f"frame is {frame.width}x{frame.height}, config expects {config.width}x{config.height}"
        )
    grid = config.grid
    n = grid.patch_count
    gray = to_grayscale(frame)

    started = time.perf_counter()
    tokens, attention = encoder(frame)
    if timing is not None:
        timing["encode"] = timing.get("encode", 0.0) + time.perf_counter() - started
    if tokens.patch_count != n:
        raise ValueError(f"encoder produced {tokens.patch_count} tokens, expected {n}")

    if is_keyframe(t, state, config.keyframe_interval):
        ones = np.ones(n, dtype=np.uint8)
        result = StepResult(
            timestep=t,
            is_keyframe=True,
            fused_tokens=tokens,
            pixel_mask=ones,
            attention_mask=ones.copy(),
            fusion_mask=ones.copy(),
            fusion_rate=0.0,
            diffs=np.zeros(n),
        )
    else:
        if config.enable_pixel:
            if state.prev_gray is None:
                raise ValueError("non-keyframe step needs the previous frame's grayscale")
            started = time.perf_counter()
            pd = detection.pixel_diff(gray, state.prev_gray, grid, config.pixel_threshold)
            if timing is not None:
                timing["pixel_detect"] = (
                    timing.get("pixel_detect", 0.0) + time.perf_counter() - started
                )
            pixel_mask, diffs = pd.mask, pd.diffs
        else:
            pixel_mask, diffs = np.zeros(n, dtype=np.uint8), np.zeros(n)
        if config.enable_attention:
            attention_mask = _attention_mask(state.prev_attention, n, config)
        else:
            attention_mask = np.zeros(n, dtype=np.uint8)
        fusion_mask = combine_masks(pixel_mask, attention_mask, config)

        started = time.perf_counter()
        fused = fuse_tokens(tokens, state.prev_tokens, fusion_mask)
        if timing is not None:
            timing["fuse"] = timing.get("fuse", 0.0) + time.perf_counter() - started
        result = StepResult(
            timestep=t,
            is_keyframe=False,
            fused_tokens=fused,
            pixel_mask=pixel_mask,
            attention_mask=attention_mask,
            fusion_mask=fusion_mask,
            fusion_rate=int(np.count_nonzero(fusion_mask == 0)) / n,
            diffs=diffs,
        )

    new_state = FusionState(
        prev_frame=frame,
        prev_gray=gray,
        prev_tokens=result.fused_tokens,
        prev_attention=attention,
        timestep=t + 1,
    )
    return result, new_state


def run_sequence(
    frames,
    encoder,
    config: FusionConfig,
    timing: dict | None = None,
) -> SequenceResult:
    """Drive the fusion loop over an episode of contiguous frames.

    Frames must start at timestep 0 and increase by 1; gaps or an empty
    sequence are rejected.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("sequence is empty: first frame missing")
    state = FusionState.initial()
    steps: list[StepResult] = []
    for index, frame in enumerate(frames):
        if frame.timestep != index:
            raise ValueError(
                f"timestep gap: frame at position {index} has timestep {frame.timestep}"
            )
        result, state = step(state, frame, encoder, config, timing=timing)
        steps.append(result)
    rates = [s.fusion_rate for s in steps]
    non_keyframe = [s.fusion_rate for s in steps if not s.is_keyframe]
    return SequenceResult(
        steps=steps,
        mean_fusion_rate_all=sum(rates) / len(rates),
        mean_fusion_rate_non_keyframe=(
            sum(non_keyframe) / len(non_keyframe) if non_keyframe else 0.0
        ),
    )
