"""Run configuration: INI sections per stage, a stable hash, the output directory.

Every key has a default, so an empty file is a valid config.  The hash is
taken over the resolved values (sorted sections and keys), so two files that
differ only in comments or key order hash alike.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

OUT_DIR_ENV = "LAWSON_OUT_DIR"

try:
    VERSION = metadata.version("artifact")
except metadata.PackageNotFoundError:
    VERSION = "0.1.0"

DEFAULTS = {
    "run": {"seed": "0"},
    "theta": {"terms": "12", "points": "100"},
    "au": {"grid": "8", "exclusion": "0.02", "tol": "1e-11"},
    "solve": {
        "truncation": "4",
        "n_points": "16",
        "quad_nodes": "64",
        "tol": "1e-8",
        "max_iter": "40",
        "closing_weight": "1.0",
        "refine": "",
        "x_coeffs": "",
        "a_coeffs": "",
    },
    "sym": {"lambda_1": "1", "lambda_2": "-1"},
    "mesh": {"side": "8", "levels": "12", "nodes": "128", "workers": "1", "pole": "auto", "seam_tol": "1e-4"},
    "dress": {"lambda_0": "0.5+0.2j"},
    "output": {"dir": "out"},
}


class ConfigError(ValueError):
    pass


def _complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise ConfigError(f"not a complex number: {s!r}") from e


def _complex_list(s: str):
    return tuple(_complex(v) for v in s.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULTS.items()})

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, overrides: dict | None = None) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.read_dict(DEFAULTS)
        if path is not None:
            if not Path(path).is_file():
                raise FileNotFoundError(f"config file not found: {path}")
            parser.read(path, encoding="utf-8")
        for section, kv in (overrides or {}).items():
            for k, v in kv.items():
                if v is not None:
                    parser.set(section, k, str(v))
        values = {s: dict(parser[s]) for s in parser.sections()}
        cfg = cls(values)
        cfg.validate()
        return cfg

    def get(self, section, key) -> str:
        return self.values[section][key]

    def int(self, section, key) -> int:
        try:
            return int(self.get(section, key))
        except ValueError as e:
            raise ConfigError(f"[{section}] {key} must be an integer") from e

    def float(self, section, key) -> float:
        try:
            return float(self.get(section, key))
        except ValueError as e:
            raise ConfigError(f"[{section}] {key} must be a number") from e

    def complex(self, section, key) -> complex:
        return _complex(self.get(section, key))

    def complex_list(self, section, key):
        return _complex_list(self.get(section, key))

    def int_list(self, section, key):
        s = self.get(section, key)
        try:
            return tuple(int(v) for v in s.split(",") if v.strip())
        except ValueError as e:
            raise ConfigError(f"[{section}] {key} must be a comma-separated list of integers") from e

    def refine_stages(self):
        """[solve] refine as (truncation, quad_nodes) pairs, written 16:256, 32:512."""
        out = []
        for item in self.get("solve", "refine").split(","):
            if not item.strip():
                continue
            try:
                n, q = (int(v) for v in item.split(":"))
            except ValueError as e:
                raise ConfigError(f"[solve] refine entries look like 16:256, got {item.strip()!r}") from e
            if n < 1 or q < 1:
                raise ConfigError("[solve] refine entries must be positive")
            out.append((n, q))
        return tuple(out)

    def validate(self):
        for section, key in (("au", "tol"), ("solve", "tol"), ("mesh", "seam_tol"), ("au", "exclusion")):
            if self.float(section, key) <= 0:
                raise ConfigError(f"[{section}] {key} must be positive")
        for section, key in (("theta", "terms"), ("theta", "points"), ("au", "grid"), ("solve", "truncation"),
                             ("solve", "n_points"), ("solve", "quad_nodes"), ("mesh", "side"),
                             ("mesh", "levels"), ("mesh", "nodes"), ("mesh", "workers")):
            if self.int(section, key) < 1:
                raise ConfigError(f"[{section}] {key} must be at least 1")
        for key in ("lambda_1", "lambda_2"):
            if abs(abs(self.complex("sym", key)) - 1) > 1e-12:
                raise ConfigError(f"[sym] {key} must be unimodular")
        if abs(self.complex("sym", "lambda_1") - self.complex("sym", "lambda_2")) < 1e-12:
            raise ConfigError("[sym] Sym points must differ")
        self.complex_list("solve", "x_coeffs")
        self.complex_list("solve", "a_coeffs")
        self.refine_stages()
        self.complex("dress", "lambda_0")

    def canonical(self) -> str:
        return "\n".join(f"[{s}]\n" + "\n".join(f"{k}={v}" for k, v in sorted(self.values[s].items()))
                         for s in sorted(self.values))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"version": VERSION, "config_hash": self.hash}

    def out_dir(self) -> Path:
        d = Path(os.environ.get(OUT_DIR_ENV) or self.get("output", "dir"))
        d.mkdir(parents=True, exist_ok=True)
        return d
