"""Run configuration: a TOML document checked against the bundled JSON schema.

Unknown keys anywhere are rejected. Missing optional keys take the defaults
below, which reproduce the bundled two-cavity example. Relative input paths
(``target.csv``, ``verify.design_csv``) are resolved against the config
file's directory; the output directory is resolved against the working
directory.
"""
from __future__ import annotations

import copy
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "etalon": {"unit_length": 0.01, "lambda0": 1.55e-6, "group_index": 1.45},
    "grid": {"count": 4096, "fsr_count": 25, "padding_fsr": 4, "align": True},
    "target": {"factor": 15, "mask_floor": -40.0, "rolloff": 1.0, "lobe_depth": 0.5},
    "sysid": {"orders": [25, 50, 100, 200, 400, 600], "max_iter": 30, "tol": 1e-6,
              "select_tolerance": 0.01, "real": False},
    "synth": {"estimate": "model", "pr_goal": -30.0, "inventory": [], "gain_fit": False,
              "threads": 1},
    "verify": {"windows": 3, "row": 1},
    "output": {"dir": "out", "plot": False},
}


def schema() -> dict:
    text = resources.files("etalon_forge").joinpath("data/config.schema.json").read_text()
    return json.loads(text)


def example_path() -> Path:
    return Path(str(resources.files("etalon_forge").joinpath("data/example.toml")))


def _key(error) -> str:
    path = ".".join(str(p) for p in error.absolute_path)
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        name = ".".join(filter(None, [path] + extra[:1]))
        return f"unknown key '{name}'"
    if error.validator == "required":
        return f"'{path or '<root>'}': {error.message}"
    return f"'{path or '<root>'}': {error.message}"


@dataclass(frozen=True)
class RunConfig:
    data: dict
    base_dir: Path

    def section(self, name: str) -> dict:
        out = copy.deepcopy(DEFAULTS.get(name, {}))
        out.update(copy.deepcopy(self.data.get(name, {})))
        return out

    def has(self, name: str) -> bool:
        return name in self.data

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self.data:
                raise ConfigError(f"missing section '[{name}]'")

    def input_path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def validate(data: dict) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema()).iter_errors(data),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("invalid config: " + "; ".join(_key(e) for e in errors))
    etalon = data["etalon"]
    if len(etalon["reflectivities"]) != len(etalon["x"]) + 1:
        raise ConfigError("'etalon.reflectivities' must have one more entry than 'etalon.x'")
    for i, s in enumerate(data.get("synth", {}).get("search", [])):
        if len(s["ranges"]) != s["cavities"]:
            raise ConfigError(f"'synth.search.{i}.ranges' needs {s['cavities']} entries")
        for j, (lo, hi, _) in enumerate(s["ranges"]):
            if hi < lo:
                raise ConfigError(f"'synth.search.{i}.ranges.{j}' is empty (max < min)")
        for t in s.get("ties", []):
            if any(a > s["cavities"] for a in t):
                raise ConfigError(f"'synth.search.{i}.ties' refers to a cavity beyond "
                                  f"{s['cavities']}")


def loads(text: str, base_dir=".") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    validate(data)
    return RunConfig(data, Path(base_dir))


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return loads(text, path.parent)
