"""CSV emission and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from importlib import metadata
from pathlib import Path

import numpy as np


def fmt(value: float) -> str:
    return f"{value:.17g}"


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class OutputDir:
    """Tracks every file written under ``root`` so the manifest lists exactly those."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def _register(self, name: str) -> Path:
        if name in self.files:
            raise ValueError(f"output {name!r} written twice")
        self.files.append(name)
        return self.path(name)

    def write_csv(self, name: str, header: list[str], columns) -> Path:
        """``columns`` is a sequence of equal-length 1-D arrays; integer arrays stay integral."""
        cols = [np.asarray(c) for c in columns]
        if len({c.shape[0] for c in cols}) > 1:
            raise ValueError("CSV columns have different lengths")
        path = self._register(name)
        formatters = [str if np.issubdtype(c.dtype, np.integer) else fmt for c in cols]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([f(v) for f, v in zip(formatters, row)])
        return path

    def write_json(self, name: str, payload) -> Path:
        path = self._register(name)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    def adopt(self, name: str) -> Path:
        """Register a file produced by some other writer."""
        return self._register(name)

    def write_manifest(self, command: str, config: dict, inputs, wall_time: float) -> Path:
        missing = [f for f in self.files if not self.path(f).is_file()]
        if missing:
            raise FileNotFoundError(f"declared outputs missing: {missing}")
        manifest = {
            "command": command,
            "config": config,
            "inputs": {os.fspath(p): sha256(p) for p in inputs},
            "outputs": list(self.files),
            "wall_time_s": wall_time,
            "version": version(),
        }
        path = self.path("manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
