"""Run configuration: flat INI-style key=value sections.

Sections: [scenario] (geometry and propagation), [training]
(hyperparameters), [reward] (objective weight), [run] (sweep layout).
Every key has a documented default; unknown keys are rejected by name.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .channel import ScenarioConfig
from .trainer import ALGORITHMS, TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    reward_weight: float = 1.0
    algorithms: tuple[str, ...] = ("moe_gdm", "gdm", "ddpg")
    seeds: tuple[int, ...] = (1, 2, 3)
    out_dir: str = "runs"
    workers: int = 1
    freeze_channel: bool = False


def _parse_points(text: str, key: str) -> tuple[tuple[float, float], ...]:
    """Parse '0,0; 60,0; 0,60' into coordinate pairs."""
    points = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        coords = [c for c in part.split(",")]
        if len(coords) != 2:
            raise ConfigError(f"{key}: expected 'x,y' pairs separated by ';'")
        try:
            points.append((float(coords[0]), float(coords[1])))
        except ValueError:
            raise ConfigError(f"{key}: non-numeric coordinate in {part!r}")
    if not points:
        raise ConfigError(f"{key}: no points given")
    return tuple(points)


def _parse_ints(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{key}: expected a list of integers")


def _parse_bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


_SCENARIO_KEYS = {
    "ap_positions", "user_positions", "eve_positions", "user_to_ap",
    "p_max", "noise_power", "path_loss_exponent", "ref_distance", "ref_gain",
}
_TRAINING_FLOAT = {
    "gamma", "tau", "lr_actor", "lr_critic", "lr_gate",
    "explore_sigma_start", "explore_sigma_end", "beta_start", "beta_end",
    "load_balance",
}
_TRAINING_INT = {
    "episodes", "episode_length", "batch_size", "buffer_capacity",
    "warmup_steps", "seed", "diffusion_steps", "n_experts", "fixed_expert",
}
_TRAINING_HIDDEN = {"critic_hidden", "actor_hidden", "gate_hidden"}
_RUN_KEYS = {"algorithms", "seeds", "out_dir", "workers", "freeze_channel"}


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}")

    known_sections = {"scenario", "training", "reward", "run"}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]")

    scen_kwargs = {}
    if parser.has_section("scenario"):
        for key, value in parser.items("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown scenario key {key!r}")
            if key in ("ap_positions", "user_positions", "eve_positions"):
                scen_kwargs[key] = _parse_points(value, key)
            elif key == "user_to_ap":
                scen_kwargs[key] = _parse_ints(value, key)
            else:
                try:
                    scen_kwargs[key] = float(value)
                except ValueError:
                    raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        scenario = ScenarioConfig(**scen_kwargs)
    except ValueError as e:
        # name the offending key where the dataclass check tells us
        raise ConfigError(f"scenario: {e}")

    train_kwargs = {}
    if parser.has_section("training"):
        for key, value in parser.items("training"):
            if key in _TRAINING_FLOAT:
                try:
                    train_kwargs[key] = float(value)
                except ValueError:
                    raise ConfigError(f"{key}: expected a number, got {value!r}")
            elif key in _TRAINING_INT:
                try:
                    train_kwargs[key] = int(value)
                except ValueError:
                    raise ConfigError(f"{key}: expected an integer, got {value!r}")
            elif key in _TRAINING_HIDDEN:
                train_kwargs[key] = _parse_ints(value, key)
            else:
                raise ConfigError(f"unknown training key {key!r}")
    try:
        training = TrainConfig(**train_kwargs)
    except ValueError as e:
        raise ConfigError(f"training: {e}")

    weight = 1.0
    if parser.has_section("reward"):
        for key, value in parser.items("reward"):
            if key != "weight":
                raise ConfigError(f"unknown reward key {key!r}")
            try:
                weight = float(value)
            except ValueError:
                raise ConfigError(f"weight: expected a number, got {value!r}")

    run_kwargs: dict = {}
    if parser.has_section("run"):
        for key, value in parser.items("run"):
            if key not in _RUN_KEYS:
                raise ConfigError(f"unknown run key {key!r}")
            if key == "algorithms":
                algos = tuple(a for a in value.replace(",", " ").split())
                for a in algos:
                    if a not in ALGORITHMS:
                        raise ConfigError(f"algorithms: unknown algorithm {a!r}")
                run_kwargs["algorithms"] = algos
            elif key == "seeds":
                run_kwargs["seeds"] = _parse_ints(value, key)
            elif key == "workers":
                try:
                    run_kwargs["workers"] = int(value)
                except ValueError:
                    raise ConfigError(f"workers: expected an integer")
            elif key == "freeze_channel":
                run_kwargs["freeze_channel"] = _parse_bool(value, key)
            else:
                run_kwargs[key] = value

    return RunConfig(
        scenario=scenario,
        training=training,
        reward_weight=weight,
        **run_kwargs,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return parse_config(text)


def _fmt_points(points) -> str:
    return "; ".join(f"{x:g},{y:g}" for x, y in points)


def dump_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig; parse_config(dump_config(c)) round-trips."""
    s, t = cfg.scenario, cfg.training
    out = io.StringIO()
    out.write("[scenario]\n")
    out.write(f"ap_positions = {_fmt_points(s.ap_positions)}\n")
    out.write(f"user_positions = {_fmt_points(s.user_positions)}\n")
    out.write(f"eve_positions = {_fmt_points(s.eve_positions)}\n")
    out.write(f"user_to_ap = {', '.join(str(i) for i in s.user_to_ap)}\n")
    out.write(f"p_max = {s.p_max!r}\n")
    out.write(f"noise_power = {s.noise_power!r}\n")
    out.write(f"path_loss_exponent = {s.path_loss_exponent!r}\n")
    out.write(f"ref_distance = {s.ref_distance!r}\n")
    out.write(f"ref_gain = {s.ref_gain!r}\n")
    out.write("\n[training]\n")
    for f in fields(t):
        v = getattr(t, f.name)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
            out.write(f"{f.name} = {v}\n")
        else:
            out.write(f"{f.name} = {v!r}\n")
    out.write("\n[reward]\n")
    out.write(f"weight = {cfg.reward_weight!r}\n")
    out.write("\n[run]\n")
    out.write(f"algorithms = {', '.join(cfg.algorithms)}\n")
    out.write(f"seeds = {', '.join(str(s) for s in cfg.seeds)}\n")
    out.write(f"out_dir = {cfg.out_dir}\n")
    out.write(f"workers = {cfg.workers}\n")
    out.write(f"freeze_channel = {str(cfg.freeze_channel).lower()}\n")
    return out.getvalue()
