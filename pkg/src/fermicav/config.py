"""Run configuration documents (YAML) and their validation."""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field

import yaml

from .model import SystemParams

MODES = ("coeffs", "steady", "sweep-atoms", "sweep-pump", "dynamics", "basins",
         "stability-check")


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


# (type, default); a default of _REQ marks a required key
_REQ = object()

PARAM_KEYS = {
    "u0": (float, _REQ),
    "delta_c": (float, _REQ),
    "eta": (float, _REQ),
    "kappa": (float, _REQ),
    "n_atoms": (int, 0),
    "n_sites": (int, _REQ),
    "s": (int, _REQ),
    "y_max": (float, 0.5),
}

_BRANCH_KEYS = {
    "y_lo": (float, None),
    "y_hi": (float, 1.0),
    "n_scan": (int, 4000),
    "commutator": (str, "derivative"),
    "classify": (bool, True),
    "epsilon": (float, 0.01),
    "band": (float, 0.01),
    "t_max": (float, None),
    "dt": (float, 0.001),
}

_TRAJ_KEYS = {
    "dt": (float, 0.001),
    "t_max": (float, 200.0),
    "stride": (int, 100),
    "commutator": (str, "exact"),
    "rtol": (float, 0.001),
    "window": (float, 10.0),
    "detect_convergence": (bool, True),
}

MODE_KEYS = {
    "coeffs": {"y_start": (float, 0.01), "y_stop": (float, 1.0), "count": (int, 100)},
    "steady": dict(_BRANCH_KEYS),
    "sweep-atoms": {"n_list": (list, _REQ), **_BRANCH_KEYS},
    "sweep-pump": {"eta_list": (list, _REQ), **_BRANCH_KEYS},
    "dynamics": {"n0": (float, _REQ), **_TRAJ_KEYS},
    "basins": {"n0_list": (list, _REQ), "merge_rtol": (float, 0.01), **_TRAJ_KEYS},
    "stability-check": {"n_bar": (float, _REQ), "trials": (int, 1000)},
}

_LIST_ITEM = {"n_list": int, "eta_list": float, "n0_list": float}

TOP_KEYS = ("mode", "seed", "output", "params")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: SystemParams
    options: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return (self.mode, self.params, self.options, self.seed, self.output) == (
            other.mode, other.params, other.options, other.seed, other.output)


def _coerce(key, value, kind):
    if value is None:
        return None
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(key, f"expected {kind.__name__}, got a boolean")
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        if not value:
            raise ConfigError(key, "list must be nonempty")
        item = _LIST_ITEM[key.rsplit(".", 1)[-1]]
        return [_coerce(f"{key}[{i}]", v, item) for i, v in enumerate(value)]
    raise AssertionError(kind)


def _fill(section, data, schema):
    if not isinstance(data, dict):
        raise ConfigError(section, "expected a mapping")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{section}.{unknown[0]}", "unknown key")
    out = {}
    for key, (kind, default) in schema.items():
        name = f"{section}.{key}"
        if key in data and data[key] is not None:
            out[key] = _coerce(name, data[key], kind)
        elif default is _REQ:
            raise ConfigError(name, "required key missing")
        else:
            out[key] = default
    return out


def _check_options(mode, opts, params):
    block = mode
    pos = {"dt", "t_max", "epsilon", "band", "rtol", "window", "merge_rtol", "count",
           "trials", "stride", "n_bar", "n0", "y_start", "y_stop", "y_hi", "y_lo"}
    for key in pos & set(opts):
        if opts[key] is not None and opts[key] <= 0:
            raise ConfigError(f"{block}.{key}", "must be > 0")
    if opts.get("commutator") not in (None, "exact", "derivative"):
        raise ConfigError(f"{block}.commutator", "must be 'exact' or 'derivative'")
    if "n_scan" in opts and opts["n_scan"] < 100:
        raise ConfigError(f"{block}.n_scan", "must be >= 100")
    if "epsilon" in opts and opts["epsilon"] >= 1:
        raise ConfigError(f"{block}.epsilon", "must be < 1")
    if mode == "coeffs" and opts["y_start"] >= opts["y_stop"]:
        raise ConfigError("coeffs.y_stop", "must exceed y_start")
    for i, n in enumerate(opts.get("n_list") or []):
        if not 0 <= n <= params.n_sites:
            raise ConfigError(f"{block}.n_list[{i}]", f"must lie in [0, n_sites={params.n_sites}]")
    for i, v in enumerate(opts.get("eta_list") or []):
        if v < 0:
            raise ConfigError(f"{block}.eta_list[{i}]", "must be >= 0")
    for i, v in enumerate(opts.get("n0_list") or []):
        if v <= 0:
            raise ConfigError(f"{block}.n0_list[{i}]", "must be > 0")
    if mode in ("coeffs", "stability-check") and params.u0 == 0:
        raise ConfigError("params.u0", "must be nonzero for this mode")


def from_mapping(doc) -> RunConfig:
    """Validate a parsed document and fill every default."""
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a mapping")
    mode = doc.get("mode")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
    blocks = [k for k in doc if k in MODES]
    unknown = sorted(k for k in doc if k not in TOP_KEYS and k not in MODES)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if blocks and blocks != [mode]:
        raise ConfigError(blocks[0] if blocks[0] != mode else blocks[1],
                          f"only the '{mode}' block may be present")
    if "params" not in doc:
        raise ConfigError("params", "required key missing")
    pdata = _fill("params", doc["params"], PARAM_KEYS)
    try:
        params = SystemParams(**pdata)
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from None
    opts = _fill(mode, doc.get(mode) or {}, MODE_KEYS[mode])
    _check_options(mode, opts, params)
    seed = _coerce("seed", doc.get("seed", 0), int)
    seed = 0 if seed is None else seed
    if seed < 0:
        raise ConfigError("seed", "must be >= 0")
    output = _coerce("output", doc.get("output"), str)
    return RunConfig(mode=mode, params=params, options=opts, seed=seed, output=output)


def parse_config(text: str) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"malformed YAML: {exc}") from None
    return from_mapping(doc)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def to_mapping(cfg: RunConfig) -> dict:
    doc = {"mode": cfg.mode, "seed": cfg.seed}
    if cfg.output is not None:
        doc["output"] = cfg.output
    doc["params"] = asdict(cfg.params)
    doc[cfg.mode] = copy.deepcopy(cfg.options)
    return doc


def emit_config(cfg: RunConfig) -> str:
    """Canonical YAML for ``cfg``; every default is written out."""
    return yaml.safe_dump(to_mapping(cfg), sort_keys=False, default_flow_style=None, width=100)
