"""JSON configuration for the command-line tool.

The document is validated against a JSON schema with ``additionalProperties``
disabled everywhere, so a misspelt key is an error rather than a silent
default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import jsonschema

from .bench import ExperimentConfig
from .errors import CorrFilterError, InvalidParameter
from .estimators import ESTIMATOR_NAMES, EstimatorSpec, default_estimators
from .losses import ALL_LOSSES, LossKind
from .models import ModelSpec, paper_preset

__all__ = ["CONFIG_SCHEMA", "CliConfig", "ConfigError", "PRESETS"]

PRESETS = {"case1": 1, "case2": 2, "case3": 3}
OUTPUT_FORMATS = ("csv", "json", "text")


class ConfigError(CorrFilterError):
    """The configuration document is unreadable or violates the schema."""


_BLOCK = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "size"],
    "properties": {
        "start": {"type": "integer", "minimum": 0},
        "size": {"type": "integer", "minimum": 1},
        "loading": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

_AUTOCORR = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"const": "identity"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "tau"],
            "properties": {"kind": {"const": "exponential"}, "tau": {"type": "number", "exclusiveMinimum": 0}},
        },
    ]
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["preset"],
                    "properties": {
                        "preset": {"enum": sorted(PRESETS)},
                        "loading": {"type": "number", "minimum": 0, "maximum": 1},
                        "tau": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["blocks"],
                    "properties": {
                        "name": {"type": "string"},
                        "p": {"type": "integer", "minimum": 1},
                        "blocks": {"type": "array", "items": _BLOCK},
                        "autocorr": _AUTOCORR,
                    },
                },
            ]
        },
        "sample": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 2},
                "m": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "standardize": {"type": "boolean"},
                "pairing": {"enum": ["disjoint", "all"]},
            },
        },
        "estimators": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"enum": list(ESTIMATOR_NAMES)},
                    "params": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "q": {"type": "number", "exclusiveMinimum": 0},
                            "tau": {"type": "number", "exclusiveMinimum": 0},
                            "epsilon": {"type": "number", "exclusiveMinimum": 0},
                            "bandwidth": {"enum": ["relative", "absolute"]},
                            "exclude_self": {"type": "boolean"},
                        },
                    },
                },
            },
        },
        "losses": {"type": "array", "items": {"enum": [k.value for k in ALL_LOSSES]}, "uniqueItems": True},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": list(OUTPUT_FORMATS)}, "minItems": 1},
            },
        },
        "mwcv": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T_total_multiplier": {"type": "integer", "minimum": 2},
                "T_out": {"type": ["integer", "null"], "minimum": 1},
            },
        },
    },
}


@dataclass
class CliConfig:
    """Normalised configuration; ``to_dict`` output re-parses to an equal object."""

    model: dict[str, Any] = field(default_factory=lambda: {"preset": "case1"})
    p: int = 100
    n: int = 200
    m: int = 1000
    seed: int = 0
    standardize: bool = False
    pairing: str = "disjoint"
    estimators: list[dict[str, Any]] | None = None
    losses: list[str] = field(default_factory=lambda: [k.value for k in ALL_LOSSES])
    out_dir: str = "."
    formats: list[str] = field(default_factory=lambda: ["csv"])
    mwcv_multiplier: int = 10
    mwcv_test: int | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CliConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        sample = data.get("sample", {})
        output = data.get("output", {})
        mwcv = data.get("mwcv", {})
        model = dict(data.get("model", {"preset": "case1"}))
        p = sample.get("p", model.get("p", 100))
        if "blocks" in model:
            model.setdefault("p", p)
            if model["p"] != p:
                raise ConfigError(f"model.p = {model['p']} disagrees with sample.p = {p}")
        estimators = data.get("estimators")
        return cls(
            model=model,
            p=p,
            n=sample.get("n", 200),
            m=sample.get("m", 1000),
            seed=sample.get("seed", 0),
            standardize=sample.get("standardize", False),
            pairing=sample.get("pairing", "disjoint"),
            estimators=[{"name": e["name"], "params": dict(e.get("params", {}))} for e in estimators]
            if estimators is not None
            else None,
            losses=list(data.get("losses", [k.value for k in ALL_LOSSES])),
            out_dir=output.get("dir", "."),
            formats=list(output.get("formats", ["csv"])),
            mwcv_multiplier=mwcv.get("T_total_multiplier", 10),
            mwcv_test=mwcv.get("T_out"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "CliConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "model": dict(self.model),
            "sample": {
                "p": self.p,
                "n": self.n,
                "m": self.m,
                "seed": self.seed,
                "standardize": self.standardize,
                "pairing": self.pairing,
            },
            "losses": list(self.losses),
            "output": {"dir": self.out_dir, "formats": list(self.formats)},
            "mwcv": {"T_total_multiplier": self.mwcv_multiplier, "T_out": self.mwcv_test},
        }
        if self.estimators is not None:
            out["estimators"] = [dict(e) for e in self.estimators]
        return out

    def with_overrides(self, **overrides: Any) -> "CliConfig":
        """Apply command-line overrides; ``None`` values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        preset = changes.pop("preset", None)
        tau = changes.pop("tau", None)
        epsilon = changes.pop("epsilon", None)
        cfg = replace(self, **changes)
        if preset is not None:
            cfg.model = {"preset": preset}
        if tau is not None:
            if "preset" in cfg.model:
                cfg.model = {**cfg.model, "tau": tau}
            elif cfg.model.get("autocorr", {}).get("kind") == "exponential":
                cfg.model = {**cfg.model, "autocorr": {"kind": "exponential", "tau": tau}}
        if epsilon is not None:
            specs = cfg.estimators if cfg.estimators is not None else [e.to_dict() for e in cfg._defaults()]
            cfg.estimators = [
                {**e, "params": {**e.get("params", {}), "epsilon": epsilon}}
                if e["name"] in ("lp", "bj", "two-step-ii", "two-step-iii")
                else e
                for e in specs
            ]
        return cfg

    @property
    def label(self) -> str:
        """Short model name used in output file names."""
        return self.model.get("preset") or self.model.get("name") or "custom"

    def model_spec(self) -> ModelSpec:
        if "preset" in self.model:
            kwargs = {k: self.model[k] for k in ("loading", "tau") if k in self.model}
            return paper_preset(PRESETS[self.model["preset"]], self.p, **kwargs)
        data = {"name": "custom", "autocorr": {"kind": "identity"}, **self.model, "p": self.p}
        return ModelSpec.from_dict(data)

    def _defaults(self) -> list[EstimatorSpec]:
        spec = self.model_spec()
        tau = getattr(spec.autocorr, "tau", None)
        return default_estimators(tau is not None, tau if tau is not None else 3.0)

    def experiment(self, workers: int | None = None) -> ExperimentConfig:
        if self.m < 2:
            raise InvalidParameter(f"m must be >= 2 so stability has at least one pair, got {self.m}")
        specs = (
            [EstimatorSpec(e["name"], dict(e.get("params", {}))) for e in self.estimators]
            if self.estimators is not None
            else self._defaults()
        )
        return ExperimentConfig(
            model=self.model_spec(),
            n=self.n,
            m=self.m,
            seed=self.seed,
            estimators=specs,
            losses=[LossKind.parse(l) for l in self.losses],
            standardize=self.standardize,
            pairing=self.pairing,
            workers=workers if workers is not None else 0,
            mwcv_multiplier=self.mwcv_multiplier,
            mwcv_test=self.mwcv_test,
        )
