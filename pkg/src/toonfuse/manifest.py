"""Run manifests: a JSON record of what a CLI command did, written atomically
next to its primary output.  Digests are 64-bit FNV-1a of the file bytes;
fast, dependency-free, and explicitly not a security boundary.  Manifests
carry no timestamps so identical runs produce identical bytes."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from . import __version__
from .formats import write_atomic
from .rng import fnv1a64


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return f"{fnv1a64(f.read()):016x}"


def digest_map(paths: list[str]) -> dict[str, str]:
    """basename -> digest; keyed by basename so runs in different directories
    with the same layout produce identical manifests."""
    return {os.path.basename(p): file_digest(p) for p in paths}


def manifest_path_for(output_path: str) -> str:
    return output_path + ".manifest.json"


def write_manifest(manifest: RunManifest, primary_output: str) -> str:
    path = manifest_path_for(primary_output)
    write_atomic(path, manifest.to_json().encode("utf-8"))
    return path
