"""Run directories: resolved configuration, outputs and the manifest."""

from __future__ import annotations

import json
import sys
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as package_version
from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from typing import Self

from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape

from .config import Config, default_output_dir, load_config
from .models import RunManifest

MANIFEST_NAME = "manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def get_package_version() -> str:
    try:
        return package_version("mls-ecology")
    except PackageNotFoundError:
        return "0+unknown"


def format_validation_error(error: ValidationError, section: str | None = None) -> str:
    """One ``section.field: message`` line per problem."""
    lines = []
    for problem in error.errors():
        loc = [str(part) for part in problem["loc"]]
        if section is not None:
            loc.insert(0, section)
        lines.append(f"  {'.'.join(loc) or '<root>'}: {problem['msg']}")
    return "\n".join(lines)


def resolve_config(
    console: Console,
    config_file: Path | None,
    overrides: dict[str, dict[str, Any]] | None = None,
) -> Config:
    """Resolve defaults < file < environment < flags, or exit with status 1."""
    try:
        config = load_config(config_file)
    except json.JSONDecodeError as e:
        console.print(f"[red]Invalid JSON in {config_file}:[/red] {escape(str(e))}")
        raise SystemExit(1)
    except ValidationError as e:
        console.print("[red]Invalid configuration:[/red]")
        console.print(escape(format_validation_error(e)))
        raise SystemExit(1)

    for section, values in (overrides or {}).items():
        try:
            config = config.with_overrides(section, **values)
        except ValidationError as e:
            console.print("[red]Invalid configuration:[/red]")
            console.print(escape(format_validation_error(e, section)))
            raise SystemExit(1)
    return config


class RunDirectory:
    """An output directory holding exactly one manifest."""

    def __init__(self, path: Path, manifest: RunManifest) -> None:
        self.path = path
        self.manifest = manifest

    @classmethod
    def create(
        cls,
        command: str,
        out: Path | None,
        config: Config,
        seeds: list[int],
        threads: int = 1,
    ) -> Self:
        path = out or default_output_dir(command)
        path.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            package_version=get_package_version(),
            command=command,
            argv=sys.argv[1:],
            config=config.model_dump(mode="json", by_alias=True),
            seeds=seeds,
            threads=threads,
            started_at=_now(),
        )
        return cls(path, manifest)

    def file(self, name: str) -> Path:
        """Path of an output file, recorded in the manifest."""
        self.manifest.outputs.append(name)
        return self.path / name

    def checkpoint(self, name: str) -> Path:
        if name not in self.manifest.checkpoints:
            self.manifest.checkpoints.append(name)
        return self.path / name

    def finish(self) -> Path:
        self.manifest.finished_at = _now()
        path = self.path / MANIFEST_NAME
        path.write_text(json.dumps(self.manifest.model_dump(), indent=2))
        return path
