import pytest

from ttfusion.runconfig import (
    ConfigError,
    apply_parameter,
    build_run_config,
    config_echo,
    load_config_file,
    parse_config_text,
    parse_sweep_values,
)

MINIMAL = "synth_frames = 6\n"


def config_from(text):
    return build_run_config(parse_config_text(text))


class TestParsing:
    def test_comments_and_blank_lines_ignored(self):
        text = """
        # run settings
        synth_frames = 6   # six frames
        seed = 42

        keyframe_interval = 5
        """
        config = config_from(text)
        assert config.synth.frame_count == 6
        assert config.seed == 42
        assert config.fusion.keyframe_interval == 5

    def test_defaults_follow_simulation_settings(self):
        config = config_from(MINIMAL)
        fusion = config.fusion
        assert fusion.keyframe_interval == 3
        assert fusion.pixel_threshold == 0.03
        assert fusion.top_k == 70
        assert fusion.attention_mode == "text_to_vision"
        assert (fusion.width, fusion.height, fusion.token_dim) == (224, 224, 64)
        assert config.attention_source == "toy"
        assert not config.emit_masks

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("bogus = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("seed = 1\nseed = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("synth_frames 6\n")

    def test_bad_bool_rejected(self):
        with pytest.raises(ConfigError):
            config_from("synth_frames = 6\nemit_masks = maybe\n")

    def test_bad_int_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("synth_frames = six\n")


class TestValidation:
    def test_both_sources_rejected(self):
        with pytest.raises(ConfigError, match="exactly one"):
            config_from("synth_frames = 6\nframes_dir = frames\n")

    def test_neither_source_rejected(self):
        with pytest.raises(ConfigError, match="exactly one"):
            config_from("seed = 1\n")

    def test_tensor_files_requires_attention_dir(self):
        with pytest.raises(ConfigError, match="attention_dir"):
            config_from("synth_frames = 6\nattention_source = tensor_files\n")

    def test_unknown_attention_source_rejected(self):
        with pytest.raises(ConfigError):
            config_from("synth_frames = 6\nattention_source = oracle\n")

    def test_bad_dimensions_rejected(self):
        with pytest.raises(ConfigError):
            config_from("synth_frames = 6\nwidth = 225\n")

    def test_synth_spec_inherits_dims_and_seed(self):
        config = config_from(
            "synth_frames = 9\nwidth = 112\nheight = 56\nseed = 77\nsynth_walker = true\n"
        )
        assert (config.synth.width, config.synth.height) == (112, 56)
        assert config.synth.seed == 77
        assert config.synth.walker

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("synth_frames = 4\noutput_dir = results\n")
        config = load_config_file(path)
        assert config.output_dir == "results"


class TestSweepParameters:
    def test_aliases_map_to_canonical_fields(self):
        config = config_from(MINIMAL)
        assert apply_parameter(config, "K", 7).fusion.keyframe_interval == 7
        assert apply_parameter(config, "keyframe_interval", 7).fusion.keyframe_interval == 7
        assert apply_parameter(config, "tau_pixel", 0.5).fusion.pixel_threshold == 0.5
        assert apply_parameter(config, "k", 10).fusion.top_k == 10

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ConfigError, match="unknown sweep parameter"):
            apply_parameter(config_from(MINIMAL), "width", 112)

    def test_invalid_value_rejected(self):
        with pytest.raises(ConfigError):
            apply_parameter(config_from(MINIMAL), "K", 0)

    def test_parse_values_csv(self):
        assert parse_sweep_values("K", "2, 3,5") == [2, 3, 5]
        assert parse_sweep_values("tau_pixel", "0.0,0.03") == [0.0, 0.03]

    def test_empty_values_rejected(self):
        with pytest.raises(ConfigError, match="empty"):
            parse_sweep_values("K", " , ")


class TestEcho:
    def test_echo_round_trips_key_settings(self):
        config = config_from("synth_frames = 6\nseed = 5\ntop_k = 12\n")
        echo = config_echo(config)
        assert echo["synth_frames"] == 6
        assert echo["seed"] == 5
        assert echo["top_k"] == 12
        assert echo["frames_dir"] is None
