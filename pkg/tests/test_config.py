import pytest

from secjam.config import ConfigError, dump_config, load_config, parse_config


class TestDefaults:
    def test_empty_text_gives_defaults(self):
        cfg = parse_config("")
        assert cfg.scenario.p_max == 1.0
        assert cfg.training.episodes == 2000
        assert cfg.reward_weight == 1.0
        assert cfg.algorithms == ("moe_gdm", "gdm", "ddpg")
        assert cfg.seeds == (1, 2, 3)
        assert cfg.workers == 1
        assert cfg.freeze_channel is False

    def test_partial_sections_keep_other_defaults(self):
        cfg = parse_config("[training]\nepisodes = 10\n")
        assert cfg.training.episodes == 10
        assert cfg.training.gamma == 0.95
        assert cfg.scenario.n_aps == 3


class TestParsing:
    def test_full_round_trip(self):
        text = """
[scenario]
ap_positions = 0,0; 60,0; 0,60
user_positions = 10,0; 50,0; 0,50
eve_positions = 20,20; 40,10
user_to_ap = 0, 1, 2
p_max = 2.0
noise_power = 1e-8

[training]
episodes = 50
gamma = 0.9
actor_hidden = 32, 32
n_experts = 2

[reward]
weight = 0.5

[run]
algorithms = gdm, ddpg
seeds = 4, 5
out_dir = /tmp/x
workers = 2
freeze_channel = true
"""
        cfg = parse_config(text)
        assert cfg.scenario.p_max == 2.0
        assert cfg.scenario.noise_power == 1e-8
        assert cfg.training.episodes == 50
        assert cfg.training.actor_hidden == (32, 32)
        assert cfg.training.n_experts == 2
        assert cfg.reward_weight == 0.5
        assert cfg.algorithms == ("gdm", "ddpg")
        assert cfg.seeds == (4, 5)
        assert cfg.out_dir == "/tmp/x"
        assert cfg.workers == 2
        assert cfg.freeze_channel is True

        cfg2 = parse_config(dump_config(cfg))
        assert cfg2 == cfg

    def test_dump_parse_round_trip_of_defaults(self):
        cfg = parse_config("")
        assert parse_config(dump_config(cfg)) == cfg

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[training]\nepisodes = 7\nwarmup_steps = 10\n")
        assert load_config(str(path)).training.episodes == 7

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/run.ini")


class TestErrors:
    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("[mystery]\nx = 1\n", "unknown section"),
            ("[scenario]\nvolume = 3\n", "unknown scenario key"),
            ("[training]\nmomentum = 0.9\n", "unknown training key"),
            ("[reward]\nscale = 2\n", "unknown reward key"),
            ("[run]\nthreads = 4\n", "unknown run key"),
            ("[run]\nalgorithms = sac\n", "unknown algorithm"),
            ("[scenario]\np_max = fast\n", "p_max"),
            ("[scenario]\nap_positions = 1;2\n", "ap_positions"),
            ("[scenario]\nuser_to_ap = a, b\n", "user_to_ap"),
            ("[training]\nepisodes = many\n", "episodes"),
            ("[run]\nfreeze_channel = maybe\n", "freeze_channel"),
            ("not an ini file [", "malformed"),
        ],
    )
    def test_bad_inputs_name_the_problem(self, text, fragment):
        with pytest.raises(ConfigError, match=fragment):
            parse_config(text)

    def test_invalid_value_names_key(self):
        # Values that parse but fail validation surface the key name.
        with pytest.raises(ConfigError, match="p_max"):
            parse_config("[scenario]\np_max = -1\n")
        with pytest.raises(ConfigError, match="gamma"):
            parse_config("[training]\ngamma = 2.0\n")
