"""Run configuration: JSON schema, defaults, overrides and validation."""

import copy
import hashlib
import json

import jsonschema

from .errors import ConfigError
from .meshkit import PlateSpec, parse_length

SCHEMA_VERSION = 1

DEFAULT_BETAS = [0.0, -0.5, -1.0, -2.0, -4.0, -8.0, 0.5, 1.0, 2.0, 4.0, 8.0]
DEFAULT_FAN = [15.0 * k for k in range(12)]

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "material": {"E": 1.0e5, "nu": 0.3, "beta_list": DEFAULT_BETAS},
    "geometry": {"plate": {"L": 0.10, "t": 0.01, "a": 0.02, "nx": 40, "ny": 40, "nz": 4,
                           "refinement_levels": 1}},
    "bcs": {"y_min": [0.0, -0.001, 0.0], "y_max": [0.0, 0.001, 0.0],
            "constrain_only_y": False, "pins": []},
    "solver": {"tol": 1e-3, "max_iter": 1000, "linear_rel_tol": 1e-10, "linear_method": "cg"},
    "probes": {"tip": "A", "angles": DEFAULT_FAN, "length": 0.02, "samples": 80,
               "compare_tips": ["A", "B", "C", "D"]},
    "outputs": {"directory": "out", "formats": ["csv", "vtk", "json"]},
}

_length = {"type": ["number", "string"]}
_vector = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "material"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "material": {
            "type": "object",
            "additionalProperties": False,
            "required": ["E", "nu"],
            "properties": {
                "E": {"type": "number", "exclusiveMinimum": 0},
                "nu": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 0.5},
                "beta": {"type": "number"},
                "beta_list": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "delta1": {"type": "number"},
                "delta2": {"type": "number"},
                "delta3": {"type": "number"},
            },
        },
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "plate": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "L": _length, "t": _length, "a": _length,
                        "nx": {"type": "integer", "minimum": 2},
                        "ny": {"type": "integer", "minimum": 2},
                        "nz": {"type": "integer", "minimum": 1},
                        "refinement_levels": {"type": "integer", "minimum": 0},
                    },
                },
                "mesh": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["path"],
                    "properties": {
                        "path": {"type": "string"},
                        "require_crack": {"type": "boolean"},
                        "tips": {"type": "object", "additionalProperties": _vector},
                    },
                },
            },
        },
        "bcs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "y_min": _vector,
                "y_max": _vector,
                "constrain_only_y": {"type": "boolean"},
                "pins": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["point", "components"],
                        "properties": {
                            "point": _vector,
                            "components": {"type": "array", "minItems": 1,
                                           "items": {"enum": [0, 1, 2]}},
                        },
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "linear_rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "linear_method": {"enum": ["cg", "amg", "direct"]},
            },
        },
        "probes": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tip": {"type": "string"},
                "angles": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "length": _length,
                "samples": {"type": "integer", "minimum": 2},
                "compare_tips": {"type": "array", "items": {"type": "string"}},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "vtk", "json"]}},
            },
        },
    },
}


def _pointer(parts):
    return "/" + "/".join(str(p) for p in parts) if parts else "/"


def validate(cfg):
    """Raise :class:`ConfigError` with a JSON pointer to the first violation."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(e.path), e.message))
    if errors:
        err = errors[0]
        path = list(err.path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            path.append(missing[0])
            raise ConfigError(_pointer(path), "required key is missing")
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            path.append(extra[0])
            raise ConfigError(_pointer(path), "unknown key")
        raise ConfigError(_pointer(path), err.message)
    geometry = cfg.get("geometry", {})
    for key in ("L", "t", "a"):
        value = geometry.get("plate", {}).get(key)
        if value is not None:
            try:
                parse_length(value)
            except ValueError:
                raise ConfigError(f"/geometry/plate/{key}", f"cannot parse length {value!r}")
    bcs = cfg.get("bcs", {})
    if bcs.get("constrain_only_y") and not bcs.get("pins"):
        raise ConfigError("/bcs/pins", "constrain_only_y needs extra pin constraints")
    return cfg


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_overrides(cfg, overrides):
    """Apply ``a.b.c=value`` overrides; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError("/", f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(_pointer(parts), "override path crosses a non-object")
        node[parts[-1]] = value
    return cfg


def load(path=None, overrides=None):
    """Read, override and validate a config; absent optional sections take defaults."""
    if path is None:
        user = copy.deepcopy(DEFAULT_CONFIG)
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError("/", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("/", f"invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("/", "config must be a JSON object")
    user = apply_overrides(user, overrides)
    validate(user)
    cfg = _merge({k: v for k, v in DEFAULT_CONFIG.items() if k != "geometry"}, user)
    if "geometry" not in cfg:
        cfg["geometry"] = copy.deepcopy(DEFAULT_CONFIG["geometry"])
    if "plate" in cfg["geometry"]:
        cfg["geometry"]["plate"] = _merge(DEFAULT_CONFIG["geometry"]["plate"],
                                          cfg["geometry"]["plate"])
    if "beta" in user.get("material", {}) and "beta_list" not in user.get("material", {}):
        cfg["material"].pop("beta_list", None)
    return cfg


def plate_spec(cfg):
    plate = cfg["geometry"]["plate"]
    return PlateSpec(L=parse_length(plate["L"]), t=parse_length(plate["t"]),
                     a=parse_length(plate["a"]), nx=plate["nx"], ny=plate["ny"], nz=plate["nz"],
                     refinement_levels=plate["refinement_levels"])


def digest(cfg):
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
