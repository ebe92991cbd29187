import numpy as np
import pytest

from ttfusion.experiment import (
    TensorFileAttentionEncoder,
    load_frames_dir,
    materialize_frames,
    run_experiment,
    write_run_outputs,
)
from ttfusion.runconfig import build_run_config
from ttfusion.synthetic import SynthSpec, write_sequence
from ttfusion.tensor_io import write_tensor
from ttfusion.toy_encoder import EncoderSpec


def small_values(**overrides):
    values = {
        "synth_frames": 5,
        "width": 28,
        "height": 28,
        "token_dim": 8,
        "top_k": 1,
        "seed": 3,
        "keyframe_interval": 100,
    }
    values.update(overrides)
    return values


def write_attention_files(path, frame_count, heads=2, text_tokens=2, patches=4, hot=3):
    path.mkdir(parents=True, exist_ok=True)
    text = np.zeros((heads, text_tokens, patches), dtype=np.float32)
    text[:, :, hot] = 1.0
    action = np.zeros((heads, patches), dtype=np.float32)
    action[:, hot] = 1.0
    for t in range(frame_count):
        write_tensor(path / f"attn_text_{t:06d}.ttft", text)
        write_tensor(path / f"attn_action_{t:06d}.ttft", action)


class TestTensorFileAttention:
    def test_file_attention_drives_the_mask(self, tmp_path):
        attention_dir = tmp_path / "attn"
        write_attention_files(attention_dir, frame_count=5)
        config = build_run_config(
            small_values(
                attention_source="tensor_files",
                attention_dir=str(attention_dir),
                text_tokens=2,
                heads=2,
            )
        )
        result = run_experiment(config)
        for step in result.sequence.steps[1:]:
            # File attention concentrates on patch 3; budget is 1.
            assert list(step.attention_mask) == [0, 0, 0, 1]

    def test_action_mode_reads_action_files(self, tmp_path):
        attention_dir = tmp_path / "attn"
        write_attention_files(attention_dir, frame_count=5, hot=2)
        config = build_run_config(
            small_values(
                attention_source="tensor_files",
                attention_dir=str(attention_dir),
                attention_mode="action_to_vision",
            )
        )
        result = run_experiment(config)
        assert list(result.sequence.steps[2].attention_mask) == [0, 0, 1, 0]

    def test_missing_required_file_raises(self, tmp_path):
        attention_dir = tmp_path / "attn"
        write_attention_files(attention_dir, frame_count=2)
        config = build_run_config(
            small_values(
                attention_source="tensor_files", attention_dir=str(attention_dir)
            )
        )
        with pytest.raises(FileNotFoundError, match="attn_text_000002"):
            run_experiment(config)

    def test_encoder_widens_float32_to_float64(self, tmp_path):
        attention_dir = tmp_path / "attn"
        write_attention_files(attention_dir, frame_count=1)
        encoder = TensorFileAttentionEncoder(
            spec=EncoderSpec(token_dim=8, seed=0, text_token_count=2, head_count=2),
            attention_dir=str(attention_dir),
            required="text",
        )
        frames = materialize_frames(
            build_run_config(small_values(synth_frames=1))
        )
        _, slice_ = encoder(frames[0])
        assert slice_.text_rows.dtype == np.float64
        assert slice_.action_row is not None


class TestFrameDirectory:
    def test_loads_written_sequence_in_order(self, tmp_path):
        write_sequence(SynthSpec(frame_count=4, width=28, height=28, seed=9), tmp_path / "f")
        frames = load_frames_dir(tmp_path / "f")
        assert [f.timestep for f in frames] == [0, 1, 2, 3]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="frames directory"):
            load_frames_dir(tmp_path / "nope")

    def test_empty_directory_means_first_frame_missing(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(FileNotFoundError, match="first frame missing"):
            load_frames_dir(tmp_path / "empty")


class TestOutputs:
    def test_token_dumps_written_for_every_step(self, tmp_path):
        config = build_run_config(small_values(emit_tokens=True))
        result = run_experiment(config)
        write_run_outputs(result, tmp_path / "out")
        names = sorted(p.name for p in (tmp_path / "out" / "tokens").iterdir())
        assert names == [f"fused_{t:06d}.ttft" for t in range(5)]
