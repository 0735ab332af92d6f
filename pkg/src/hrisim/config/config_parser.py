from typing import Any, Dict, MutableMapping, Optional
import copy
import logging
import pathlib

import toml
import attr
from attr.validators import instance_of
from appdirs import user_config_dir

SHIPPED_CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"
DEFAULT_CONFIG = SHIPPED_CONFIGS / "default.toml"


class ConfigError(ValueError):
    """ Invalid configuration: unknown key, wrong type or violated constraint """


def _check_leaf(default: Any, value: Any, path: str) -> Any:
    """ Validate a single value against the type of its default and normalize it """
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"'{path}' must be a boolean, got {value!r}.")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{path}' must be an integer, got {value!r}.")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'{path}' must be a number, got {value!r}.")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"'{path}' must be a string, got {value!r}.")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"'{path}' must be a list, got {value!r}.")
        if default:
            return [
                _check_leaf(default[0], item, f"{path}[{idx}]")
                for idx, item in enumerate(value)
            ]
        return list(value)
    raise ConfigError(f"'{path}' has an unsupported type.")


def merge_strict(
    base: MutableMapping[str, Any], override: MutableMapping[str, Any], prefix: str = ""
) -> Dict[str, Any]:
    """
    Recursively merge ``override`` into a copy of ``base``. Every key of ``override``
    must exist in ``base`` with a compatible type.

    :param dict base: Reference configuration, usually the defaults
    :param dict override: User values
    :param str prefix: Dotted path of ``base`` inside the full document
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"Unknown configuration key '{path}'.")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{path}' must be a table.")
            merged[key] = merge_strict(base[key], value, prefix=f"{path}.")
        else:
            merged[key] = _check_leaf(base[key], value, path)
    return merged


def parse_assignment(assignment: str) -> Dict[str, Any]:
    """
    Turn ``"section.key=value"`` into a nested dictionary. The value is read as a
    TOML value, and taken verbatim as a string if that fails.
    """
    if "=" not in assignment:
        raise ConfigError(f"Expected key=value, got '{assignment}'.")
    dotted, raw = assignment.split("=", 1)
    keys = [key.strip() for key in dotted.strip().split(".")]
    if not all(keys):
        raise ConfigError(f"Malformed key '{dotted}'.")
    try:
        value = toml.loads(f"value = {raw.strip()}")["value"]
    except toml.TomlDecodeError:
        value = raw.strip()
    nested: Dict[str, Any] = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        nested = {key: nested}
    return nested


def _load_toml(fname: pathlib.Path) -> Dict[str, Any]:
    with open(fname, "r") as f:
        try:
            return toml.load(f)
        except toml.TomlDecodeError as e:
            raise ConfigError(f"Can't parse {fname}: {e}") from e


def user_config_path(name: str) -> pathlib.Path:
    return pathlib.Path(user_config_dir("hrisim")) / (name + ".toml")


@attr.s
class Config:
    """
    Load, merge, dump and save a TOML config file. Every document is validated
    against the shipped defaults, so ``config_data`` always holds the complete,
    effective configuration.
    """

    config_data = attr.ib(validator=instance_of(dict))

    @classmethod
    def default(cls) -> "Config":
        return cls(_load_toml(DEFAULT_CONFIG))

    @classmethod
    def from_disk(cls, fname: pathlib.Path) -> "Config":
        """ Defaults overridden by the given file """
        user_data = _load_toml(pathlib.Path(fname))
        return cls.default().merge(user_data)

    @classmethod
    def from_name(cls, name: str) -> "Config":
        """
        A configuration previously saved with :meth:`to_disk`, or else one shipped
        with the package under the same name
        """
        fname = user_config_path(name)
        if not fname.exists():
            fname = SHIPPED_CONFIGS / (name + ".toml")
        if not fname.exists():
            raise ConfigError(
                f"No saved configuration named '{name}' in {user_config_path(name).parent}."
            )
        return cls.from_disk(fname)

    @classmethod
    def from_path_or_name(cls, path_or_name: Optional[str]) -> "Config":
        if not path_or_name:
            return cls.default()
        if pathlib.Path(path_or_name).exists():
            return cls.from_disk(pathlib.Path(path_or_name))
        return cls.from_name(path_or_name)

    def merge(self, overrides: MutableMapping[str, Any]) -> "Config":
        return Config(merge_strict(self.config_data, overrides))

    def set_values(self, assignments) -> "Config":
        """ Apply a sequence of ``key=value`` strings, in order """
        config = self
        for assignment in assignments:
            config = config.merge(parse_assignment(assignment))
        return config

    def get(self, dotted: str) -> Any:
        value: Any = self.config_data
        for key in dotted.split("."):
            value = value[key]
        return value

    def dumps(self) -> str:
        return toml.dumps(self.config_data)

    def to_disk(self, name: Optional[str] = None) -> pathlib.Path:
        """ Write the config_data object to the user's config directory """
        if name is not None:
            self.config_data["cfg_title"] = name
        full_cfg_fname = user_config_path(self.config_data["cfg_title"])
        full_cfg_fname.parent.mkdir(parents=True, exist_ok=True)
        with full_cfg_fname.open("w") as f:
            toml.dump(self.config_data, f)
        logging.info(f"Configuration saved to {full_cfg_fname}.")
        return full_cfg_fname
