"""
Experiment configuration: sectioned INI files, CLI overrides and the
canonical rendering that config_hash is computed from.
"""

from __future__ import annotations

import configparser
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from django.conf import settings

from core.exceptions import ConfigError, InvalidParams
from core.models import Params

logger = logging.getLogger(__name__)

SECTIONS = ('params', 'wave', 'simulation', 'tracking', 'verify', 'sweep')


def lab_default(section: str, key: str) -> Any:
    """Laboratory default from settings.LV_LAB"""
    try:
        return settings.LV_LAB[section][key]
    except KeyError as exc:
        raise ConfigError(f"No laboratory default for [{section}] {key}",
                          {'section': section, 'key': key}) from exc


def _format_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ', '.join(_format_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ExperimentConfig:
    """Sectioned key/value configuration of one run"""

    def __init__(self, parser: Optional[configparser.ConfigParser] = None):
        self._parser = parser or configparser.ConfigParser(interpolation=None)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}", {'path': str(path)})
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding='utf-8')
        except configparser.Error as exc:
            raise ConfigError(f"Malformed config file {path}: {exc}", {'path': str(path)}) from exc
        unknown = [name for name in parser.sections() if name not in SECTIONS]
        if unknown:
            raise ConfigError(f"Unknown config sections: {unknown}", {'sections': unknown})
        return cls(parser)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Mapping[str, Any]]) -> "ExperimentConfig":
        config = cls()
        config.apply_overrides(data)
        return config

    def apply_overrides(self, overrides: Mapping[str, Mapping[str, Any]]) -> "ExperimentConfig":
        """CLI flags win over file values; None means the flag was not given"""
        for section, values in overrides.items():
            for key, value in values.items():
                if value is None:
                    continue
                if not self._parser.has_section(section):
                    self._parser.add_section(section)
                self._parser.set(section, key, _format_value(value))
        return self

    def has(self, section: str, key: str) -> bool:
        return self._parser.has_option(section, key)

    def get(self, section: str, key: str, default: Optional[str] = None) -> Optional[str]:
        return self._parser.get(section, key, fallback=default)

    def get_float(self, section: str, key: str, default: Optional[float] = None) -> Optional[float]:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} is not a number: {raw!r}",
                              {'section': section, 'key': key}) from exc

    def get_int(self, section: str, key: str, default: Optional[int] = None) -> Optional[int]:
        value = self.get_float(section, key)
        return default if value is None else int(value)

    def get_floats(self, section: str, key: str) -> Tuple[float, ...]:
        raw = self.get(section, key)
        if raw is None:
            return ()
        try:
            return tuple(float(item) for item in raw.split(',') if item.strip())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} is not a list of numbers: {raw!r}",
                              {'section': section, 'key': key}) from exc

    def params(self) -> Params:
        missing = [name for name in ('a', 'b', 'd', 'r') if not self.has('params', name)]
        if missing:
            raise ConfigError(f"Missing parameters: {', '.join(missing)}", {'missing': missing})
        try:
            return Params(*(self.get_float('params', name) for name in ('a', 'b', 'd', 'r')))
        except InvalidParams as exc:
            raise ConfigError(exc.message, exc.details) from exc

    def section(self, name: str) -> Dict[str, str]:
        return dict(self._parser.items(name)) if self._parser.has_section(name) else {}

    def to_dict(self) -> Dict[str, Dict[str, str]]:
        return {name: self.section(name) for name in sorted(self._parser.sections())}

    def render(self) -> str:
        """Canonical text: sections and keys sorted, one key per line"""
        lines: List[str] = []
        for name in sorted(self._parser.sections()):
            lines.append(f'[{name}]')
            for key, value in sorted(self._parser.items(name)):
                lines.append(f'{key} = {value}')
            lines.append('')
        return '\n'.join(lines)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.render().encode('utf-8')).hexdigest()
