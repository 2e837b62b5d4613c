"""Named experiment presets with the published defaults baked in."""
from __future__ import annotations

from .dgp import TIERS
from .errors import ConfigError
from .harness import ExperimentConfig


def _table_preset(kind: str, example: str, tier=None) -> dict:
    return {"kind": kind, "reps": 1000,
            "tiers": [list(tier)] if tier is not None
            else [list(t) for t in TIERS[example]]}


def _build() -> dict[str, dict]:
    presets: dict[str, dict] = {
        "table1": _table_preset("table1", "ex41"),
        "table2": _table_preset("table2", "ex42"),
        "table_s5": _table_preset("table_s5", "ex_s5"),
        "example21": {"kind": "example21", "reps": 200,
                      "params": {"a": 0.3, "n": 500, "p": 1000}},
        "example22": {"kind": "example22", "reps": 500,
                      "params": {"n": 2000, "n_lambda": 25}},
        "example31": {"kind": "example31", "reps": 5000,
                      "params": {"k": 2, "n": 2000}},
        "housing-demo": {
            "kind": "forecast",
            "csv": {"path": "data/synthetic_housing.csv", "y_col": "starts",
                    "x_cols": [f"permits_{i}" for i in range(1, 9)] + ["rate"],
                    "date_col": "date",
                    "transforms": {**{f"permits_{i}": "log+seasonal_diff(12)+diff"
                                      for i in range(1, 9)},
                                   "rate": "diff", "starts": "log"}},
            "fhtd": {"r": 12, "q": 12, "k_max": 20},
            "params": {"train_window": 150, "n_windows": 40,
                       "intercept": True, "tune": True},
        },
    }
    for example, kind in (("ex41", "table1"), ("ex42", "table2"),
                          ("ex_s5", "table_s5")):
        for tier in TIERS[example]:
            presets[f"{example}-n{tier[0]}"] = _table_preset(kind, example, tier)
    return presets


PRESETS = _build()


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Instantiate a named preset, applying flat overrides (reps, seed, ...)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    d = {k: (dict(v) if isinstance(v, dict) else v)
         for k, v in PRESETS[name].items()}
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)
