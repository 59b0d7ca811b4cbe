"""Config-file parsing and the run manifest.

The config format is flat and diff-friendly: ``[section]`` headers,
``key = value`` pairs, ``#`` comments, and multi-line matrix values given
as indented rows after a bare ``key =`` line.  See docs/config-format.md
for the schema.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from .bodies import Conformation, EulerAngles, Pose, recenter, rotation_from_euler
from .errors import ConfigError
from .harness import ExperimentConfig, Scenario, paper_table1
from .translation import SolverOptions

__all__ = [
    "parse_config",
    "build_scenario",
    "build_experiment_config",
    "RunManifest",
    "write_manifest",
    "config_digest",
]

TOOL_VERSION = "0.1.0"


def parse_config(text: str) -> dict[str, dict[str, str]]:
    """Parse the sectioned key-value format into nested dicts.

    Raises :class:`ConfigError` with a line number on malformed input.
    """
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    pending_key: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.startswith(("\t", " ")):
            if pending_key is None or current is None:
                raise ConfigError(f"line {lineno}: continuation line without a key")
            current[pending_key] = (current[pending_key] + "\n" + line.strip()).strip()
            continue
        pending_key = None
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        current[key] = value.strip()
        if not value.strip():
            pending_key = key
    return sections


def _parse_matrix(value: str, key: str) -> np.ndarray:
    try:
        rows = [[float(x) for x in line.split()] for line in value.splitlines() if line.strip()]
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: could not parse matrix ({exc})") from exc
    if arr.ndim != 2:
        raise ConfigError(f"field {key!r}: expected a matrix with equal-length rows")
    return arr


def _parse_floats(value: str, key: str) -> list[float]:
    try:
        return [float(x) for x in value.split()]
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: expected numbers, got {value!r}") from exc


def _parse_switch(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"field {key!r}: expected on/off, got {value!r}")


def build_scenario(sections: dict[str, dict[str, str]], recenter_override: bool | None = None) -> Scenario:
    """Construct the scenario from the ``[scenario]`` section."""
    scn = sections.get("scenario")
    if scn is None:
        raise ConfigError("missing required section [scenario]")
    do_recenter = _parse_switch(scn.get("recenter", "off"), "recenter")
    if recenter_override is not None:
        do_recenter = recenter_override
    name = scn.get("name")
    if name is not None:
        if name != "paper-table1":
            raise ConfigError(f"unknown built-in scenario {name!r}")
        return paper_table1(recenter_bodies=do_recenter)
    for required in ("c1", "c2", "translation", "rotation-deg"):
        if required not in scn:
            raise ConfigError(f"missing required field {required!r} in [scenario]")
    c1 = Conformation(_parse_matrix(scn["c1"], "c1"))
    c2 = Conformation(_parse_matrix(scn["c2"], "c2"))
    if do_recenter:
        c1, c2 = recenter(c1), recenter(c2)
    t = _parse_floats(scn["translation"], "translation")
    if len(t) != 3:
        raise ConfigError("field 'translation': expected 3 numbers")
    ang = _parse_floats(scn["rotation-deg"], "rotation-deg")
    if len(ang) != 3:
        raise ConfigError("field 'rotation-deg': expected 3 numbers")
    pose2 = Pose(rotation_from_euler(EulerAngles.from_degrees(*ang)), np.array(t))
    return Scenario(c1, c2, pose2, label=scn.get("label", "custom"))


def build_experiment_config(
    sections: dict[str, dict[str, str]],
    *,
    recenter_override: bool | None = None,
    sigma_grid_override: list[float] | None = None,
    methods_override: list[str] | None = None,
    completeness_override: list[str] | None = None,
    trials_override: int | None = None,
    seed_override: int | None = None,
    completion_override: bool | None = None,
) -> ExperimentConfig:
    """Construct an :class:`ExperimentConfig` from config sections plus CLI overrides."""
    scenario = build_scenario(sections, recenter_override)
    noise = sections.get("noise", {})
    sweep = sections.get("sweep", {})

    if sigma_grid_override is not None:
        sigma_grid = [float(s) for s in sigma_grid_override]
    elif "sigma-grid" in noise:
        sigma_grid = _parse_floats(noise["sigma-grid"], "sigma-grid")
    elif "sigma" in noise:
        sigma_grid = _parse_floats(noise["sigma"], "sigma")
    else:
        raise ConfigError("missing required field 'sigma-grid' in [noise]")

    methods = methods_override if methods_override is not None else sweep.get("methods", "").split()
    if not methods:
        raise ConfigError("missing or empty field 'methods' in [sweep]")

    raw_completeness = (
        completeness_override
        if completeness_override is not None
        else sweep.get("completeness", "full").split()
    )
    completeness: list[int | None] = []
    for tok in raw_completeness:
        if tok == "full":
            completeness.append(None)
        else:
            try:
                completeness.append(int(tok))
            except ValueError as exc:
                raise ConfigError(
                    f"field 'completeness': expected integers or 'full', got {tok!r}"
                ) from exc

    trials = trials_override if trials_override is not None else int(sweep.get("trials", "1000"))
    seed = seed_override if seed_override is not None else int(noise.get("seed", "0"))
    completion = (
        completion_override
        if completion_override is not None
        else _parse_switch(sweep.get("completion", "off"), "completion")
    )

    return ExperimentConfig(
        scenario=scenario,
        sigma_grid=tuple(float(s) for s in sigma_grid),
        completeness_grid=tuple(completeness),
        methods=tuple(methods),
        trials=trials,
        base_seed=seed,
        completion_enabled=completion,
        solver=SolverOptions(),
    )


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    config_path: str
    output_dir: str
    tool_version: str
    config_digest: str
    timestamp: str


def write_manifest(path, config_path: str, output_dir: str, digest: str) -> RunManifest:
    manifest = RunManifest(
        config_path=str(config_path),
        output_dir=str(output_dir),
        tool_version=TOOL_VERSION,
        config_digest=digest,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.__dict__, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
