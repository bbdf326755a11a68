# /src/core/run_manager.py

import hashlib
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

import numpy as np
import psutil
import pydantic
import scipy

from src.utils.config.settings import settings
from src.utils.resources.logger import logger
from src.utils.resources.output import to_jsonable


def _package_version() -> str:
    try:
        return metadata.version("iontrap-decoherence")
    except metadata.PackageNotFoundError:
        return settings.get("app.version", "0+unknown")


def library_versions() -> Dict[str, str]:
    return {
        "iontrap-decoherence": _package_version(),
        "numpy": np.__version__,
        "pydantic": pydantic.VERSION,
        "python": platform.python_version(),
        "scipy": scipy.__version__,
    }


def _dumps(record: Dict[str, Any], **kwargs: Any) -> str:
    """Strict JSON: non-finite floats become "inf"/"nan" strings."""
    return json.dumps(to_jsonable(record), sort_keys=True, allow_nan=False, default=str, **kwargs)


class RunManager:
    """
    Keeps one record per command invocation: the validated inputs, seed,
    library versions and the files written. Run ids hash the command and
    inputs, so identical runs produce identical manifests.
    """

    def __init__(self):
        self.runs: Dict[str, Dict[str, Any]] = {}

    def create_run(self, command: str, inputs: Dict[str, Any], seed: Optional[int] = None, threads: Optional[int] = None) -> str:
        canonical = json.dumps({"command": command, "inputs": inputs, "seed": seed}, sort_keys=True, default=str)
        run_id = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
        self.runs[run_id] = {
            "run_id": run_id,
            "command": command,
            "inputs": inputs,
            "seed": seed,
            "threads": threads,
            "cpu_count": psutil.cpu_count(),
            "versions": library_versions(),
            "files": [],
        }
        logger.debug("run_created", run_id=run_id, command=command)
        return run_id

    def add_file_to_run(self, run_id: str, file_path: Path) -> None:
        if run_id in self.runs:
            self.runs[run_id]["files"].append(str(file_path))

    def manifest(self, run_id: str) -> Dict[str, Any]:
        return self.runs[run_id]

    def finish_run(
        self,
        run_id: str,
        summary: Optional[Dict[str, Any]] = None,
        out_path: Optional[Path] = None,
        stream: Optional[TextIO] = None,
    ) -> Dict[str, Any]:
        """
        Emit the manifest: as a sidecar JSON next to ``out_path`` when output went
        to a file, otherwise as one JSON line on ``stream``. Always logged too.
        """
        record = self.runs.pop(run_id)
        if summary is not None:
            record["summary"] = summary
        if out_path is not None:
            sidecar = Path(f"{out_path}.manifest.json")
            sidecar.parent.mkdir(parents=True, exist_ok=True)
            with open(sidecar, "w") as f:
                f.write(_dumps(record, indent=2))
                f.write("\n")
            record = {**record, "manifest_path": str(sidecar)}
        elif stream is not None:
            stream.write(_dumps(record) + "\n")
        logger.info("run_manifest", run_id=run_id, manifest=_dumps(record))
        return record


def create_run_manager() -> RunManager:
    return RunManager()
