"""Layered configuration for the CLI.

Values resolve in precedence order: built-in defaults, then the TOML config
file, then explicitly passed flags, then environment variables. Environment
wins over flags so a deployment can pin a value (say, a worker count) without
editing every invocation; the unusual ordering is deliberate and load-bearing
for containerized runs.

Defaults reproduce the reference training configuration: viewer-scale
conditioning, 2 anchors, anchor probability 0.5, gating threshold 1.0,
500 DDIM steps at guidance scale 3.0, final max noise 0.025.

Environment variables spell section and key as CONDKIT_<SECTION>__<KEY>
(double underscore between the parts, single underscores inside a key), e.g.
CONDKIT_ANCHORING__ANCHOR_PROBABILITY=0.4 or CONDKIT_SEED=7.
"""

from __future__ import annotations

import copy
import math
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib as tomli
else:
    import tomli

from .errors import ConfigError

ENV_PREFIX = "CONDKIT_"

DEFAULTS = {
    "seed": 0,
    "conditioning": {
        "variant": "sixdof_viewer",
        "quantile_method": "linear",
        "viewer_scale_heuristic": 0.7,
    },
    "dataset": {
        "rate": 4.0,
        "workers": 1,
        "queue_size": 64,
        "scenes_per_shard": 100,
    },
    "anchoring": {
        "k": 2,
        "anchor_probability": 0.5,
        "gating_threshold": 1.0,
        "ddim_steps": 500,
        "guidance_scale": 3.0,
        "max_noise_start": 0.98,
        "max_noise_end": 0.025,
        "anisotropy_beta": 1.0,
        "total_steps": 10000,
        "stage1_fraction": 0.5,
        "azimuth_window_start_deg": 30.0,
        "elevation_min_deg": -10.0,
        "elevation_max_deg": 30.0,
        "camera_radius": 1.0,
        "input_elevation_deg": 0.0,
        "fov_deg": 50.0,
    },
    "metrics": {
        "metrics": ["psnr", "ssim"],
        "lpips_cmd": "",
    },
}


def _check_value(section: str, key: str, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = isinstance(value, str)
    if not ok:
        where = f"{section}.{key}" if section else key
        raise ConfigError(f"{where}: expected {type(default).__name__}, got {value!r}")
    return value


def _merge(config: dict, incoming: dict, origin: str) -> None:
    for key, value in incoming.items():
        if key not in config:
            raise ConfigError(f"unknown config key {key!r} ({origin})")
        if isinstance(config[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a table ({origin})")
            for sub, sub_value in value.items():
                if sub not in config[key]:
                    raise ConfigError(f"unknown config key {key}.{sub} ({origin})")
                config[key][sub] = _check_value(key, sub, sub_value, DEFAULTS[key][sub])
        else:
            config[key] = _check_value("", key, value, DEFAULTS[key])


def _parse_env_value(raw: str):
    try:
        return tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        return raw


def _env_overrides(env) -> dict:
    out: dict = {}
    for name, raw in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        dotted = name[len(ENV_PREFIX) :].lower()
        value = _parse_env_value(raw)
        if "__" in dotted:
            section, _, key = dotted.partition("__")
            out.setdefault(section, {})[key] = value
        else:
            out[dotted] = value
    return out


def load_config(path=None, env=None) -> tuple[dict, set]:
    """Resolve defaults + file + environment.

    Returns the effective config plus the set of ("section", "key") pairs the
    environment pinned, so flag handling can honor env-beats-flags.
    """
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                document = tomli.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        _merge(config, document, str(path))
    env_map = os.environ if env is None else env
    overrides = _env_overrides(env_map)
    _merge(config, overrides, "environment")
    pinned = set()
    for key, value in overrides.items():
        if isinstance(value, dict):
            pinned.update((key, sub) for sub in value)
        else:
            pinned.add(("", key))
    return config, pinned


def resolve(config: dict, pinned: set, section: str, key: str, flag_value):
    """One value under full precedence: env-pinned beats flag beats file/default."""
    stored = config[section][key] if section else config[key]
    if (section, key) in pinned or flag_value is None:
        return stored
    return _check_value(section, key, flag_value, DEFAULTS[section][key] if section else DEFAULTS[key])


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"cannot serialize non-finite float {value}")
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def dump_config(config: dict) -> str:
    """Deterministic TOML text; reloading it reproduces the config exactly."""
    lines = []
    for key in sorted(k for k, v in config.items() if not isinstance(v, dict)):
        lines.append(f"{key} = {_toml_value(config[key])}")
    for section in sorted(k for k, v in config.items() if isinstance(v, dict)):
        lines.append("")
        lines.append(f"[{section}]")
        for key in sorted(config[section]):
            lines.append(f"{key} = {_toml_value(config[section][key])}")
    return "\n".join(lines) + "\n"
