"""Training-free temporal token fusion for frame sequences.

The library fuses each frame's patch tokens with the previous step's fused
tokens: patches flagged by pixel-difference or attention-relevance
detection are recomputed, the rest are reused bit-exactly, and periodic
keyframes reset the reuse chains.  Because reused token rows are exact
copies, the matching rows of the query/key/value projections can be reused
too; :mod:`ttfusion.projection` verifies that shortcut and counts the
arithmetic it avoids.
"""

from .detection import (
    ACTION_TO_VISION,
    TEXT_TO_VISION,
    AttentionSlice,
    PixelDiffResult,
    RelevanceScores,
    action_to_vision_scores,
    auto_threshold,
    pixel_diff,
    rate_target_mask,
    text_to_vision_scores,
    top_k_mask,
)
from .frames import (
    PATCH_SIDE,
    FrameError,
    FrameObservation,
    GrayscaleImage,
    PatchGrid,
    load_frame,
    patch_region,
    save_frame,
    to_grayscale,
)
from .fusion import (
    FusionConfig,
    FusionState,
    SequenceResult,
    StepResult,
    TokenMatrix,
    combine_masks,
    fuse_tokens,
    is_keyframe,
    run_sequence,
    step,
)
from .projection import (
    EquivalenceCheck,
    ProjectionSet,
    ReuseLedger,
    project_full,
    project_selective,
    verify_equivalence,
)
from .prng import SplitMix64
from .runconfig import ConfigError, RunConfig, load_config_file
from .synthetic import SynthSpec, generate_frames, walker_patch, write_sequence
from .tensor_io import TensorFormatError, read_tensor, write_tensor
from .toy_encoder import EncoderSpec, ToyEncoder, encode, synth_attention

__version__ = "0.1.0"

__all__ = [
    "ACTION_TO_VISION",
    "TEXT_TO_VISION",
    "PATCH_SIDE",
    "AttentionSlice",
    "ConfigError",
    "EncoderSpec",
    "EquivalenceCheck",
    "FrameError",
    "FrameObservation",
    "FusionConfig",
    "FusionState",
    "GrayscaleImage",
    "PatchGrid",
    "PixelDiffResult",
    "ProjectionSet",
    "RelevanceScores",
    "ReuseLedger",
    "RunConfig",
    "SequenceResult",
    "SplitMix64",
    "StepResult",
    "SynthSpec",
    "TensorFormatError",
    "TokenMatrix",
    "ToyEncoder",
    "action_to_vision_scores",
    "auto_threshold",
    "combine_masks",
    "encode",
    "fuse_tokens",
    "generate_frames",
    "is_keyframe",
    "load_config_file",
    "load_frame",
    "patch_region",
    "pixel_diff",
    "project_full",
    "project_selective",
    "rate_target_mask",
    "read_tensor",
    "run_sequence",
    "save_frame",
    "step",
    "synth_attention",
    "text_to_vision_scores",
    "to_grayscale",
    "top_k_mask",
    "verify_equivalence",
    "walker_patch",
    "write_sequence",
    "write_tensor",
]
