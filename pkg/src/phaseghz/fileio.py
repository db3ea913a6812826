"""Config loading, deterministic JSON/CSV writers and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import re
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .experiment import ConfigError, ExperimentConfig, ScanRow

SCAN_HEADER = ("theta", "S", "sigma_S", "quantum_prediction", "classical_bound")

_ANGLE = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$", re.I)


def parse_angle(text: str | float) -> float:
    """Parse ``0.5``, ``pi``, ``pi/4``, ``3pi/4`` or ``-2*pi/3`` into radians."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE.match(text)
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        return c * np.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig JSON file.

    OSError propagates for unreadable files; malformed content raises ConfigError.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("theta"), str):
        try:
            data["theta"] = parse_angle(data["theta"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return ExperimentConfig.from_dict(data)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(canonical_json(obj))


def config_hash(config: ExperimentConfig | dict | None) -> str | None:
    if config is None:
        return None
    d = config.to_dict() if isinstance(config, ExperimentConfig) else config
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def scan_csv_text(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for r in rows:
        w.writerow([repr(float(getattr(r, h))) for h in SCAN_HEADER])
    return buf.getvalue()


def write_scan_csv(rows: Sequence[ScanRow], path: str | Path) -> None:
    Path(path).write_text(scan_csv_text(rows))


def read_scan_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def write_manifest(
    subcommand: str,
    config: ExperimentConfig | None,
    seed: int | None,
    outputs: Sequence[str | Path],
    out: str | Path,
    timestamp: str | None = None,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config_hash": config_hash(config),
        "seed": seed,
        "tool_version": __version__,
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    path = manifest_path(out)
    write_json(manifest, path)
    return path


def load_schema(name: str) -> dict:
    """Shipped JSON schema by short name, e.g. ``"witness"``."""
    text = resources.files("phaseghz").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
