"""Access to the ``.lagr`` models shipped in the catalog directory."""
from __future__ import annotations

import functools
from importlib import resources
from pathlib import Path
from typing import Optional

from .dsl import LagrangianModel, parse
from .errors import UnknownScenarioError


def builtin_names() -> list:
    root = resources.files("fieldlint") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".lagr"))


@functools.lru_cache(maxsize=None)
def _builtin_text(name: str) -> str:
    path = resources.files("fieldlint") / "catalog" / f"{name}.lagr"
    if not path.is_file():
        raise UnknownScenarioError(f"no built-in model named {name!r}")
    return path.read_text(encoding="utf-8")


def builtin_text(name: str) -> str:
    return _builtin_text(name)


def load_builtin(name: str) -> LagrangianModel:
    return parse(_builtin_text(name), name)


def load_model(name: str, directory: Optional[Path] = None) -> LagrangianModel:
    """Model ``name`` from ``directory`` if it has one, else the built-in."""
    if directory is not None:
        path = Path(directory) / f"{name}.lagr"
        if path.is_file():
            return parse(path.read_text(encoding="utf-8"), name)
    return load_builtin(name)


def load_file(path) -> LagrangianModel:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), path.stem)
