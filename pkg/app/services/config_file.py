"""
Flat key=value experiment files.

Top-level keys describe the model, grid and run; ``[ic]`` holds the initial
condition and every ``[ic.patch]`` section adds one crystallite patch::

    model = allen_cahn
    epsilon = 0.01
    lx = 2*pi
    ly = 2*pi
    nx = 256
    ny = 256
    dt = 0.01
    t_end = 1

    [ic]
    kind = coscos
    amplitude = 0.5

Numbers may be written as products and quotients of literals and ``pi``.
"""
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

MODEL_KEYS = ("epsilon", "beta", "g")
GRID_KEYS = ("lx", "ly", "nx", "ny")
STRING_KEYS = ("model", "scheme", "output_dir", "kind")

_INT = re.compile(r"^[+-]?\d+$")
_SECTION = re.compile(r"^\[\s*([A-Za-z_.]+)\s*\]$")

Path_ = Tuple[Union[str, int], ...]


def parse_number(text: str) -> Union[int, float]:
    """
    Parse an integer, a float, or a product/quotient chain such as ``-pi/4``.

    Raises:
        ValueError: Not a number
    """
    text = text.strip()
    if _INT.match(text):
        return int(text)
    parts = re.split(r"([*/])", text.replace(" ", ""))
    value: Optional[float] = None
    op = "*"
    for i, part in enumerate(parts):
        if i % 2:
            op = part
            continue
        sign = -1.0 if part.startswith("-") else 1.0
        body = part.lstrip("+-")
        if body == "pi":
            factor = sign * math.pi
        else:
            factor = float(part)
        if value is None:
            value = factor
        elif op == "*":
            value *= factor
        else:
            value /= factor
    if value is None:
        raise ValueError(f"not a number: {text!r}")
    return value


def _value(key: str, raw: str) -> Any:
    if key in STRING_KEYS:
        return raw
    if key == "snapshot_times":
        return [parse_number(t) for t in raw.split(",") if t.strip()]
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return parse_number(raw)
    except ValueError:
        # left to the schema, which reports the type error with this line
        return raw


def _read_entries(text: str) -> Tuple[Dict[str, Any], Dict[Path_, int]]:
    data: Dict[str, Any] = {}
    lines: Dict[Path_, int] = {}
    model: Dict[str, Any] = {}
    grid: Dict[str, Any] = {}
    ic: Optional[Dict[str, Any]] = None
    patches: List[Dict[str, Any]] = []
    section = ""
    target: Dict[str, Any] = data
    target_path: Path_ = ()

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(("#", ";")):
            continue

        header = _SECTION.match(line)
        if header:
            section = header.group(1)
            if section == "ic":
                if ic is not None:
                    raise ConfigError("duplicate [ic] section", line=lineno)
                ic = {}
                target, target_path = ic, ("ic",)
            elif section == "ic.patch":
                patches.append({})
                target, target_path = patches[-1], ("ic", "patches", len(patches) - 1)
            else:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            lines[target_path] = lineno
            continue

        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)

        if section:
            dest, path = target, target_path + (key,)
        elif key == "model":
            dest, path, key = model, ("model", "kind"), "kind"
        elif key in MODEL_KEYS:
            dest, path = model, ("model", key)
        elif key in GRID_KEYS:
            dest, path = grid, ("grid", key)
        else:
            dest, path = data, (key,)

        if key in dest:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        try:
            dest[key] = _value(key, raw)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}", line=lineno) from e
        lines[path] = lineno
        if path == ("model", "kind"):
            lines[("model",)] = lineno

    if model:
        data["model"] = model
    if grid:
        data["grid"] = grid
    if ic is not None:
        if patches:
            ic["patches"] = patches
        data["ic"] = ic
    elif patches:
        raise ConfigError("[ic.patch] given without an [ic] section", line=lines[("ic", "patches", 0)])
    return data, lines


def _line_for(loc: Path_, data: Dict[str, Any], lines: Dict[Path_, int]) -> Optional[int]:
    path = list(loc)
    # discriminated unions insert the tag after the field name
    if len(path) > 1 and path[0] in ("model", "ic") and isinstance(data.get(path[0]), dict):
        if path[1] == data[path[0]].get("kind"):
            del path[1]
    for end in range(len(path), 0, -1):
        line = lines.get(tuple(path[:end]))
        if line is not None:
            return line
    return None


def parse_config_text(text: str) -> ExperimentConfig:
    """
    Parse the contents of an experiment file.

    Raises:
        ConfigError: Missing or unknown keys, malformed lines, invalid values
    """
    data, lines = _read_entries(text)

    missing = [] if "kind" in data.get("model", {}) else ["model"]
    missing += [k for k in GRID_KEYS if k not in data.get("grid", {})]
    missing += [k for k in ("dt", "t_end") if k not in data]
    if "ic" not in data:
        missing.append("[ic]")
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(err["loc"])
        where = ".".join(str(p) for p in loc) or "config"
        line = _line_for(loc, data, lines)
        raise ConfigError(f"{where}: {err['msg']}", line=line) from e


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load an ExperimentConfig from a key=value file.

    Args:
        path: File to read

    Returns:
        Validated configuration with defaults filled in

    Raises:
        ConfigError: The file is unreadable or invalid
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    try:
        config = parse_config_text(text)
    except ConfigError as e:
        logger.error(f"Invalid configuration {path}: {e}")
        raise
    logger.info(f"Loaded configuration from {path}")
    return config


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def emit_config(config: ExperimentConfig) -> str:
    """Render a configuration so that parse_config_text reproduces it exactly."""
    dumped = config.model_dump()
    out = [f"model = {dumped['model'].pop('kind')}"]
    out += [f"{k} = {_format(v)}" for k, v in dumped.pop("model").items()]
    out += [f"{k} = {_format(v)}" for k, v in dumped.pop("grid").items()]
    ic = dumped.pop("ic")
    for key, value in dumped.items():
        if value is None:
            continue
        out.append(f"{key} = {_format(value)}")

    patches = ic.pop("patches", [])
    out += ["", "[ic]", f"kind = {ic.pop('kind')}"]
    out += [f"{k} = {_format(v)}" for k, v in ic.items()]
    for patch in patches:
        out += ["", "[ic.patch]"]
        out += [f"{k} = {_format(v)}" for k, v in patch.items()]
    return "\n".join(out) + "\n"


def write_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_config(config), encoding="utf-8")
    return path
