import pytest

from llmrs.config import (CONFIG_FILENAME, EngineConfig, load_config,
                          parse_config_file)


class TestParseConfigFile:
    def test_parses_keys_and_comments(self, tmp_path):
        path = tmp_path / CONFIG_FILENAME
        path.write_text(
            "# engine settings\n"
            "seed = 9\n"
            "embed_endpoint = http://localhost:9999/embed\n"
            "display_x100 = off\n"
            "\n")
        values = parse_config_file(path)
        assert values == {"seed": 9,
                          "embed_endpoint": "http://localhost:9999/embed",
                          "display_x100": False}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / CONFIG_FILENAME
        path.write_text("mystery = 1\n")
        with pytest.raises(ValueError, match="mystery"):
            parse_config_file(path)

    def test_non_integer_rejected(self, tmp_path):
        path = tmp_path / CONFIG_FILENAME
        path.write_text("seed = nine\n")
        with pytest.raises(ValueError, match="seed"):
            parse_config_file(path)

    def test_line_without_equals_rejected(self, tmp_path):
        path = tmp_path / CONFIG_FILENAME
        path.write_text("just words\n")
        with pytest.raises(ValueError):
            parse_config_file(path)


class TestPrecedence:
    def test_defaults(self, tmp_path):
        config = load_config(env={}, cwd=tmp_path)
        assert config.seed == 42
        assert config.k_clusters == 5
        assert config.preselect_m == 50

    def test_file_overrides_defaults(self, tmp_path):
        (tmp_path / CONFIG_FILENAME).write_text("seed = 7\n")
        config = load_config(env={}, cwd=tmp_path)
        assert config.seed == 7

    def test_env_overrides_file(self, tmp_path):
        (tmp_path / CONFIG_FILENAME).write_text("seed = 7\n")
        config = load_config(env={"LLMRS_SEED": "8"}, cwd=tmp_path)
        assert config.seed == 8

    def test_flags_override_env(self, tmp_path):
        config = load_config(overrides={"seed": 9},
                             env={"LLMRS_SEED": "8"}, cwd=tmp_path)
        assert config.seed == 9

    def test_none_overrides_are_ignored(self, tmp_path):
        config = load_config(overrides={"seed": None}, env={"LLMRS_SEED": "8"},
                             cwd=tmp_path)
        assert config.seed == 8

    def test_explicit_config_path_via_env(self, tmp_path):
        conf = tmp_path / "elsewhere.conf"
        conf.write_text("k_clusters = 3\n")
        config = load_config(env={"LLMRS_CONFIG": str(conf)}, cwd=tmp_path)
        assert config.k_clusters == 3

    def test_endpoint_env_vars(self, tmp_path):
        config = load_config(env={"LLMRS_EMBED_ENDPOINT": "http://e/",
                                  "LLMRS_SENTIMENT_ENDPOINT": "http://s/"},
                             cwd=tmp_path)
        assert config.embed_endpoint == "http://e/"
        assert config.sentiment_endpoint == "http://s/"

    def test_bad_env_seed_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            load_config(env={"LLMRS_SEED": "many"}, cwd=tmp_path)


class TestValidation:
    def test_k_clusters_floor(self):
        with pytest.raises(ValueError):
            EngineConfig(k_clusters=1).validate()

    def test_bad_provider(self):
        with pytest.raises(ValueError):
            EngineConfig(embed_provider="carrier-pigeon").validate()

    def test_embed_dim_floor(self):
        with pytest.raises(ValueError):
            EngineConfig(embed_dim=4).validate()
