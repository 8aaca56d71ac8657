"""Line-oriented `key = value` run configuration.

Blank lines and '#' comments are ignored; unknown keys are a hard error.
Every stochastic stage of the pipeline draws its seed from here, so a config
plus a corpus fully determines a run.
"""

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import BadConfigValue, IoFailure, UnknownConfigKey


@dataclass
class Config:
    smooth_width: int = 5
    valley_frac: float = 0.05
    diacritic_area_ratio: float = 0.08
    canvas_height: int = 100
    canvas_width: int = 200
    grid_frames: int = 3
    grid_cells: int = 2
    zernike_order: int = 8
    standardize: bool = True
    codebook_size: int = 24
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    n_states: int = 13
    n_substates: int = 3
    topology: str = "left-right"
    em_max_iter: int = 100
    em_tol: float = 1e-4
    seed: int = 0

    def replace(self, **kwargs) -> "Config":
        return dataclasses.replace(self, **kwargs)


def _parse_bool(text: str) -> bool:
    if text == "on":
        return True
    if text == "off":
        return False
    raise ValueError("expected 'on' or 'off'")


def _parse_topology(text: str) -> str:
    if text not in ("ergodic", "left-right"):
        raise ValueError("expected 'ergodic' or 'left-right'")
    return text


# config key -> (Config attribute, value parser)
CONFIG_KEYS = {
    "smooth.width": ("smooth_width", int),
    "segment.valley_frac": ("valley_frac", float),
    "diacritic.area_ratio": ("diacritic_area_ratio", float),
    "canvas.height": ("canvas_height", int),
    "canvas.width": ("canvas_width", int),
    "grid.frames": ("grid_frames", int),
    "grid.cells": ("grid_cells", int),
    "features.zernike_order": ("zernike_order", int),
    "features.standardize": ("standardize", _parse_bool),
    "codebook.size": ("codebook_size", int),
    "codebook.max_iter": ("kmeans_max_iter", int),
    "codebook.tol": ("kmeans_tol", float),
    "model.states": ("n_states", int),
    "model.substates": ("n_substates", int),
    "model.topology": ("topology", _parse_topology),
    "em.max_iter": ("em_max_iter", int),
    "em.tol": ("em_tol", float),
    "seed": ("seed", int),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in CONFIG_KEYS.items()}


def parse_config_text(text: str, base: Config | None = None) -> Config:
    cfg = base or Config()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfigValue(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in CONFIG_KEYS:
            raise UnknownConfigKey(f"line {lineno}: unknown key {key!r}")
        attr, parser = CONFIG_KEYS[key]
        try:
            values[attr] = parser(value)
        except ValueError as exc:
            raise BadConfigValue(f"line {lineno}: bad value for {key}: {exc}") from exc
    return cfg.replace(**values)


def load_config(path, base: Config | None = None) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    return parse_config_text(text, base)


def dump_config(cfg: Config) -> str:
    """Render a config back to the `key = value` text format."""
    lines = []
    for key, (attr, parser) in CONFIG_KEYS.items():
        value = getattr(cfg, attr)
        if parser is _parse_bool:
            value = "on" if value else "off"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save_config(cfg: Config, path) -> None:
    try:
        Path(path).write_text(dump_config(cfg))
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
