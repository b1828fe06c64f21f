"""
Flat ``key=value`` files (hyperparameters, scenarios, pipeline runs).

Files are parsed with python-decouple so casting follows the same rules as
the project settings. An environment variable with the same name as a key
takes precedence over the file.
"""

import logging
from pathlib import Path

from decouple import Config, RepositoryEnv, UndefinedValueError

from ..exceptions import ConfigKeyError

logger = logging.getLogger(__name__)


class KeyValueFile:
    """Read access to one ``key=value`` file restricted to a known key set."""

    def __init__(self, path, allowed_keys=None):
        self.path = Path(path)
        if not self.path.is_file():
            raise ConfigKeyError(
                f"Config file {self.path} does not exist", code="missing_config"
            )
        self._repository = RepositoryEnv(str(self.path))
        self._config = Config(self._repository)

        if allowed_keys is not None:
            unknown = sorted(set(self.keys()) - set(allowed_keys))
            if unknown:
                raise ConfigKeyError(
                    f"Unknown keys in {self.path}: {', '.join(unknown)}",
                    params={"keys": unknown},
                )

    def keys(self):
        return list(self._repository.data.keys())

    def __contains__(self, key):
        return key in self._repository.data

    def get(self, key, default=None, cast=None):
        try:
            if cast is None:
                return self._config(key, default=default)
            return self._config(key, default=default, cast=cast)
        except UndefinedValueError:
            return default
        except ValueError as e:
            raise ConfigKeyError(
                f"Invalid value for '{key}' in {self.path}: {e}",
                code="invalid_value",
                params={"key": key},
            )

    def resolve_path(self, key, default=None):
        """Return a path value, relative entries being taken from the file's folder."""
        value = self.get(key, default=default)
        if value in (None, ""):
            return None
        path = Path(value)
        return path if path.is_absolute() else (self.path.parent / path)


def write_key_value(path, items):
    """Write ``items`` as ``key=value`` lines in iteration order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={_format_value(value)}" for key, value in items.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {len(lines)} keys to {path}")
    return path


def _format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)
