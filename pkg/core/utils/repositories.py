from __future__ import annotations

import json
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from django.conf import settings

from core.exceptions import ConfigError, UnknownRun
from core.models import RunManifest, generate_cuid

MANIFEST_NAME = 'manifest.json'


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


class RunRepository(ABC):
    @abstractmethod
    def create(self, command: str, config_hash: str, params: Optional[Dict[str, float]] = None,
               versions: Optional[Dict[str, str]] = None) -> RunManifest:
        raise NotImplementedError

    @abstractmethod
    def get_manifest(self, run_id: str) -> RunManifest:
        raise NotImplementedError

    @abstractmethod
    def save_manifest(self, manifest: RunManifest) -> None:
        raise NotImplementedError

    @abstractmethod
    def path_for(self, run_id: str, relative: str) -> Path:
        raise NotImplementedError

    @abstractmethod
    def register(self, manifest: RunManifest, relative: str) -> Path:
        raise NotImplementedError

    @abstractmethod
    def exists(self, run_id: str) -> bool:
        raise NotImplementedError


class FilesystemRunRepository(RunRepository):
    """Run directories under <root>/<run_id>/ with every written file listed in the manifest"""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        self.root = Path(root if root is not None else settings.RUNS_ROOT)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / MANIFEST_NAME).is_file()

    def create(self, command: str, config_hash: str, params: Optional[Dict[str, float]] = None,
               versions: Optional[Dict[str, str]] = None) -> RunManifest:
        run_id = generate_cuid()
        for sub in ('data', 'plots'):
            (self.run_dir(run_id) / sub).mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            run_id=run_id,
            command=command,
            config_hash=config_hash,
            params=params,
            versions=versions or {},
            created_at=utc_now(),
        )
        self.save_manifest(manifest)
        return manifest

    def get_manifest(self, run_id: str) -> RunManifest:
        path = self.run_dir(run_id) / MANIFEST_NAME
        if not path.is_file():
            raise UnknownRun(f"No run directory for {run_id!r} under {self.root}", {'run_id': run_id})
        return RunManifest.from_dict(json.loads(path.read_text(encoding='utf-8')))

    def save_manifest(self, manifest: RunManifest) -> None:
        path = self.run_dir(manifest.run_id) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + '\n', encoding='utf-8')

    def path_for(self, run_id: str, relative: str) -> Path:
        base = self.run_dir(run_id).resolve()
        target = (base / relative).resolve()
        if target == base or base not in target.parents:
            raise ConfigError(f"Refusing to write outside the run directory: {relative}",
                              {'run_id': run_id, 'path': relative})
        return target

    def register(self, manifest: RunManifest, relative: str) -> Path:
        """Reserve a path inside the run directory and list it in the manifest"""
        path = self.path_for(manifest.run_id, relative)
        path.parent.mkdir(parents=True, exist_ok=True)
        relative = path.relative_to(self.run_dir(manifest.run_id).resolve()).as_posix()
        if relative not in manifest.files:
            manifest.files.append(relative)
        return path

    def write_text(self, manifest: RunManifest, relative: str, text: str) -> Path:
        path = self.register(manifest, relative)
        path.write_text(text, encoding='utf-8')
        return path

    def write_json(self, manifest: RunManifest, relative: str, data: Any) -> Path:
        return self.write_text(manifest, relative, json.dumps(data, indent=2, sort_keys=True, default=str) + '\n')

    def write_with(self, manifest: RunManifest, relative: str, writer: Callable[[Path], None]) -> Path:
        """Let an exporter write to a registered path"""
        path = self.register(manifest, relative)
        writer(path)
        return path
