"""Run manifests: what ran, on which bytes, producing which files.

The run id is a digest of (command, config, seed), so replaying the same
invocation lands on the same id. Input digests let a reload detect that the
data a run claims to have used has changed underneath it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _run_id(command: str, config: dict, seed: int) -> str:
    canon = json.dumps(
        {"command": command, "config": config, "seed": seed},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    run_id: str = ""
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: dict[str, str] = field(default_factory=dict)  # name -> relative path
    timings: dict[str, float] = field(default_factory=dict)  # name -> seconds

    def __post_init__(self):
        if not self.run_id:
            self.run_id = _run_id(self.command, self.config, self.seed)

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, name: str, run_dir: str | Path, path: str | Path) -> None:
        self.outputs[name] = str(Path(path).relative_to(run_dir))

    def write(self, run_dir: str | Path) -> Path:
        """Write manifest.json; every recorded output must already exist."""
        run_dir = Path(run_dir)
        for name, rel in self.outputs.items():
            if not (run_dir / rel).exists():
                raise ConfigError(f"manifest output {name} missing: {rel}")
        payload = {
            "run_id": self.run_id,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings": self.timings,
        }
        path = run_dir / MANIFEST_NAME
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return path

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunManifest":
        path = Path(run_dir) / MANIFEST_NAME
        if not path.exists():
            raise ConfigError(f"no {MANIFEST_NAME} in {run_dir}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(
            command=data["command"],
            config=data["config"],
            seed=int(data["seed"]),
            run_id=data["run_id"],
            inputs=dict(data["inputs"]),
            outputs=dict(data["outputs"]),
            timings={k: float(v) for k, v in data["timings"].items()},
        )

    def verify_inputs(self) -> None:
        """Recompute input digests; raise if any file changed or vanished."""
        for path, digest in self.inputs.items():
            if not Path(path).exists():
                raise DataError(f"manifest input vanished: {path}")
            now = sha256_file(path)
            if now != digest:
                raise DataError(
                    f"manifest input changed: {path} ({digest[:10]} -> {now[:10]})"
                )
