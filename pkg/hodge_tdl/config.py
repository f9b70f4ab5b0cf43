from dataclasses import asdict, fields
from typing import Any, Callable, Dict, Optional

import yaml

from hodge_tdl.constants import CFGSTR
from hodge_tdl.exceptions import ConfigError
from hodge_tdl.learner import LearnConfig
from hodge_tdl.synth import SynthConfig

# config file key -> (dataclass field, converter)
LEARN_KEYS: Dict[str, tuple] = {
    CFGSTR.METHOD: ("method", str),
    CFGSTR.K0: ("k0", int),
    CFGSTR.J: ("J", int),
    CFGSTR.M: ("M", int),
    CFGSTR.GAMMA: ("gamma", float),
    CFGSTR.LAMBDA: ("lam", float),
    CFGSTR.MU: ("mu", float),
    CFGSTR.IMAX: ("imax", int),
    CFGSTR.RTDL_ITERS: ("rtdl_iters", int),
    CFGSTR.D: ("d", float),
    CFGSTR.EPS: ("eps", float),
    CFGSTR.BOUNDS: ("bounds", str),
    CFGSTR.SEED: ("seed", int),
    CFGSTR.TOL_ZERO: ("tol_zero", float),
    CFGSTR.KKT_TOL: ("kkt_tol", float),
    CFGSTR.RES_TOL: ("res_tol", float),
    CFGSTR.EARLY_EXIT_TOL: ("early_exit_tol", float),
    CFGSTR.CRITERION: ("criterion", str),
    CFGSTR.FREEZE_UPPER: ("freeze_upper", bool),
    CFGSTR.MAX_LEN: ("max_len", int),
    CFGSTR.REFIT_ROUNDS: ("refit_rounds", int),
}

SYNTH_KEYS: Dict[str, tuple] = {
    CFGSTR.N_VERTICES: ("n_vertices", int),
    CFGSTR.N_EDGES: ("n_edges", int),
    CFGSTR.Q_TR: ("q_tr", float),
    CFGSTR.T: ("T", int),
    CFGSTR.T_TRAIN: ("t_train", int),
    CFGSTR.T_TEST: ("t_test", int),
    CFGSTR.K0_GEN: ("k0_gen", int),
    CFGSTR.M: ("M", int),
    CFGSTR.J: ("J", int),
    CFGSTR.N_DATASETS: ("n_datasets", int),
    CFGSTR.SEED: ("seed", int),
}


def load_file(file: Optional[str]) -> Dict[str, Any]:
    """
    Reads a YAML (or JSON) mapping; no file means an empty config.
    """

    if file is None:
        return {}

    try:
        with open(file, "r", encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except yaml.YAMLError as err:
        raise ConfigError("<file>", f"{file} is not valid YAML/JSON: {err}") from err

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("<file>", f"{file} must hold a mapping of config keys")
    return data


def _convert(key: str, value: Any, cast: Callable) -> Any:
    if value is None:
        return None
    if cast is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true or false, got {value!r}")
        return value
    if cast is int and isinstance(value, float) and not value.is_integer():
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if cast in (int, float) and isinstance(value, bool):
        raise ConfigError(key, f"expected a number, got {value!r}")
    try:
        return cast(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(key, f"cannot read {value!r} as {cast.__name__}") from err


def _build(keys: Dict[str, tuple], data: Dict[str, Any], overrides: Dict[str, Any]):
    unknown = sorted(set(data) - set(keys) - {CFGSTR.VERSION})
    if unknown:
        raise ConfigError(unknown[0], "unknown config key")

    kwargs = {}
    for key, (name, cast) in keys.items():
        value = data.get(key)
        if value is not None:
            kwargs[name] = _convert(key, value, cast)

    for name, value in overrides.items():
        if value is not None:
            kwargs[name] = value

    return kwargs


def convert_to_learn_config(file: Optional[str] = None, **overrides) -> LearnConfig:
    """
    Converts a yaml file into a LearnConfig. Keyword overrides (CLI flags)
    take precedence over the file.
    """

    return LearnConfig(**_build(LEARN_KEYS, load_file(file), overrides))


def convert_to_synth_config(file: Optional[str] = None, **overrides) -> SynthConfig:
    """
    Converts a yaml file into a SynthConfig. Keyword overrides (CLI flags)
    take precedence over the file.
    """

    return SynthConfig(**_build(SYNTH_KEYS, load_file(file), overrides))


def to_file_keys(cfg) -> Dict[str, Any]:
    """
    The config as a mapping of file keys, the inverse of the convert
    functions.
    """

    keys = LEARN_KEYS if isinstance(cfg, LearnConfig) else SYNTH_KEYS
    by_field = {name: key for key, (name, _) in keys.items()}
    values = asdict(cfg)

    out = {}
    for f in fields(cfg):
        value = values[f.name]
        out[by_field[f.name]] = getattr(value, "value", value)
    return out
