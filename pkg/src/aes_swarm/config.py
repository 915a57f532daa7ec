"""Flat ``key = value`` scenario files.

Example::

    # linear drive plus rotation
    v0 = 0.05
    tf = 30
    N = 10*10
    d_init = 0.2
    v_d = -1.0, 0.0
    w_l = 0.8
    omega = 0.7

Unknown keys are errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .core import ConfigurationError, ModelParams
from .scenario import ScenarioConfig, setup_config

# file key -> (target, attribute); target is "params" or "config"
_FLOAT_KEYS = {
    "v0": ("params", "v0"),
    "w_l": ("params", "w_l"),
    "omega": ("params", "omega"),
    "w_r": ("params", "w_r"),
    "D_r": ("params", "D_r"),
    "D_theta": ("params", "D_theta"),
    "dt": ("params", "dt"),
    "alpha": ("params", "alpha"),
    "beta": ("params", "beta"),
    "k": ("params", "k"),
    "tf": ("config", "t_f"),
    "d_init": ("config", "d_init"),
    "jitter": ("config", "jitter"),
    "eps": ("config", "eps"),
    "w1": ("config", "w1"),
    "w2": ("config", "w2"),
    "link_radius": ("config", "link_radius"),
}
_INT_KEYS = {"rows", "cols", "seed", "n_mc"}
KNOWN_KEYS = frozenset(_FLOAT_KEYS) | _INT_KEYS | {"N", "v_d", "sign_convention", "heading_mode", "rotation_center", "setup"}


def _vector(text: str, key: str) -> tuple[float, float]:
    parts = [p for p in text.replace("[", " ").replace("]", " ").replace(",", " ").split()]
    if len(parts) != 2:
        raise ConfigurationError(f"{key} needs two components, got {text!r}")
    return float(parts[0]), float(parts[1])


def parse_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    """Build a ScenarioConfig from ``key = value`` lines; defaults follow setup 3."""
    values: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = (lineno, value)
    return config_from_mapping({k: v for k, (_, v) in values.items()}, source)


def config_from_mapping(values: dict, source: str = "<config>") -> ScenarioConfig:
    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise ConfigurationError(f"{source}: unknown keys {sorted(unknown)}")
    try:
        base = setup_config(int(values.get("setup", 3)))
        params: dict = {}
        config: dict = {}
        for key, raw in values.items():
            raw = str(raw)
            if key in _FLOAT_KEYS:
                target, attr = _FLOAT_KEYS[key]
                value = None if raw.lower() == "none" else float(raw)
                (params if target == "params" else config)[attr] = value
            elif key in _INT_KEYS:
                config[key] = int(raw)
            elif key == "N":
                r, _, c = raw.replace("x", "*").partition("*")
                if not c:
                    raise ConfigurationError(f"{source}: N must look like 'rows*cols', got {raw!r}")
                config["rows"], config["cols"] = int(r), int(c)
            elif key == "v_d":
                params["v_d_hat"] = _vector(raw, key)
            elif key == "sign_convention":
                params["sign_convention"] = raw
            elif key == "rotation_center":
                params["rotation_center"] = "centroid" if raw == "centroid" else _vector(raw, key)
            elif key == "heading_mode":
                config["heading_mode"] = "random" if raw == "random" else float(raw)
        return replace(base, params=replace(base.params, **params), **config)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{source}: {exc}") from exc


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def config_to_mapping(config: ScenarioConfig) -> dict:
    """Inverse of ``config_from_mapping``; values round-trip exactly."""
    p: ModelParams = config.params
    return {
        "rows": config.rows,
        "cols": config.cols,
        "d_init": config.d_init,
        "jitter": config.jitter,
        "heading_mode": config.heading_mode,
        "tf": config.t_f,
        "seed": config.seed,
        "n_mc": config.n_mc,
        "w1": config.w1,
        "w2": config.w2,
        "eps": config.eps,
        "link_radius": config.link_radius,
        "alpha": p.alpha,
        "beta": p.beta,
        "k": p.k,
        "v0": p.v0,
        "D_r": p.D_r,
        "D_theta": p.D_theta,
        "dt": p.dt,
        "w_l": p.w_l,
        "v_d": list(p.v_d_hat),
        "w_r": p.w_r,
        "omega": p.omega,
        "rotation_center": p.rotation_center if p.rotation_center == "centroid" else list(p.rotation_center),
        "sign_convention": p.sign_convention,
    }


def format_config(config: ScenarioConfig) -> str:
    lines = []
    for key, value in config_to_mapping(config).items():
        if isinstance(value, list):
            value = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
