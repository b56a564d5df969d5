import json

import pytest

from corrfilter.config import CliConfig, ConfigError
from corrfilter.models import Exponential

FULL = {
    "model": {"preset": "case3", "tau": 2.0},
    "sample": {"p": 30, "n": 60, "m": 10, "seed": 5, "standardize": True, "pairing": "disjoint"},
    "estimators": [{"name": "lp", "params": {"epsilon": 0.1}}, {"name": "bj", "params": {"tau": 2.0}}],
    "losses": ["kl", "frobenius"],
    "output": {"dir": "out", "formats": ["csv", "json"]},
    "mwcv": {"T_total_multiplier": 5, "T_out": 30},
}


def test_round_trip_fixed_point():
    cfg = CliConfig.from_dict(FULL)
    once = cfg.to_dict()
    assert CliConfig.from_dict(once) == cfg
    assert CliConfig.from_dict(json.loads(json.dumps(once))).to_dict() == once
    default = CliConfig().to_dict()
    assert CliConfig.from_dict(default).to_dict() == default


@pytest.mark.parametrize(
    "patch",
    [
        {"extra": 1},
        {"sample": {"p": 30, "rows": 4}},
        {"model": {"preset": "case9"}},
        {"estimators": [{"name": "lp", "params": {"gamma": 1}}]},
        {"sample": {"m": 1}},
        {"output": {"formats": ["xml"]}},
        {"losses": ["kl", "kl"]},
    ],
)
def test_schema_rejections(patch):
    with pytest.raises(ConfigError):
        CliConfig.from_dict({**FULL, **patch})


def test_explicit_model():
    data = {
        "model": {"blocks": [{"start": 0, "size": 4}], "autocorr": {"kind": "exponential", "tau": 1.5}},
        "sample": {"p": 8, "n": 20, "m": 4},
    }
    cfg = CliConfig.from_dict(data)
    spec = cfg.model_spec()
    assert spec.p == 8 and spec.autocorr == Exponential(1.5)
    exp = cfg.experiment(1)
    assert "bj" in [e.name for e in exp.estimators]
    with pytest.raises(ConfigError):
        CliConfig.from_dict({**data, "model": {**data["model"], "p": 9}})


def test_overrides():
    cfg = CliConfig.from_dict(FULL).with_overrides(preset="case1", m=4, tau=None, epsilon=0.2)
    assert cfg.model == {"preset": "case1"} and cfg.m == 4
    assert cfg.estimators[0]["params"]["epsilon"] == 0.2
    cfg = CliConfig().with_overrides(preset="case3", tau=4.0, epsilon=0.3)
    assert cfg.model_spec().autocorr == Exponential(4.0)
    names = {e["name"]: e["params"] for e in cfg.estimators}
    assert names["lp"] == {"epsilon": 0.3} and names["naive"] == {}


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        CliConfig.load(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        CliConfig.load(tmp_path / "missing.json")
