"""Configuration schema, bit-stable file formats and run manifests.

Numbers are serialized as Python's shortest round-trip decimal repr, so
identical inputs reproduce byte-identical CSV/JSON payloads.  Timestamps
appear only in the run manifest.  All files are written atomically
(temporary file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .core import EnvironmentSpec, MaterialSpec, ParameterError, TargetSpec
from .excitation import Loop, PulseWaveform, TimeSeries, UniformField
from .pipeline import RunConfig


class ConfigError(ValueError):
    """Configuration problem; carries the offending schema path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DataError(ValueError):
    """Malformed data file; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _get(d: dict, path: str, required=True, default=None):
    node = d
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            if required:
                raise ConfigError(path, "missing required field")
            return default
        node = node[key]
    return node


def _number(d: dict, path: str, positive=False, required=True, default=None):
    val = _get(d, path, required=required, default=default)
    if val is default and not required:
        return default
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ConfigError(path, "must be a number")
    if positive and val <= 0:
        raise ConfigError(path, "must be > 0")
    return float(val)


def _material(d: dict, prefix: str) -> MaterialSpec:
    rho = _number(d, f"{prefix}.resistivity_ohm_m", positive=True)
    mu = _number(d, f"{prefix}.mu_r", required=False, default=1.0)
    if mu < 1.0:
        raise ConfigError(f"{prefix}.mu_r", "must be >= 1")
    return MaterialSpec(conductivity_s_per_m=1.0 / rho, relative_permeability=mu)


def _loop(d: dict, prefix: str) -> Loop:
    kind = _get(d, f"{prefix}.kind", required=False, default="circular")
    if kind == "circular":
        return Loop(
            kind="circular",
            radius_m=_number(d, f"{prefix}.radius_m", positive=True),
            height_m=_number(d, f"{prefix}.height_m", required=False, default=0.0),
            windings=int(_number(d, f"{prefix}.windings", required=False, default=1)),
        )
    if kind == "polygon":
        verts = _get(d, f"{prefix}.vertices_m")
        try:
            vertices = tuple(tuple(float(c) for c in v) for v in verts)
        except (TypeError, ValueError):
            raise ConfigError(f"{prefix}.vertices_m", "must be a list of 3-vectors")
        return Loop(
            kind="polygon",
            vertices=vertices,
            windings=int(_number(d, f"{prefix}.windings", required=False, default=1)),
        )
    raise ConfigError(f"{prefix}.kind", f"unknown loop kind {kind!r}")


def parse_config(data: dict) -> RunConfig:
    """Validate a config dict; errors name the offending schema path."""
    try:
        target = TargetSpec(
            radius_m=_number(data, "target.radius_m", positive=True),
            material=_material(data, "target"),
        )
    except ParameterError as exc:
        raise ConfigError("target", str(exc)) from exc
    env = EnvironmentSpec(
        background=_material(data, "background"),
        standoff_m=_number(data, "standoff_m", positive=True),
    )
    ramp = _get(data, "pulse.ramp", required=False, default="step")
    table = _get(data, "pulse.table", required=False, default=())
    try:
        pulse = PulseWaveform(
            base_current_a=_number(data, "pulse.base_current_a", positive=True),
            windings=int(_number(data, "pulse.windings", required=False, default=1)),
            ramp=ramp,
            tau_r_s=_number(data, "pulse.tau_r_s", required=False, default=0.0),
            t0_s=_number(data, "pulse.t0_s", required=False, default=0.0),
            table=tuple(tuple(row) for row in table) if table else (),
        )
    except ParameterError as exc:
        raise ConfigError("pulse", str(exc)) from exc
    tx_kind = _get(data, "loops.transmitter.kind", required=False, default="circular")
    if tx_kind == "uniform":
        tx = UniformField(
            amplitude_a_per_m=_number(
                data, "loops.transmitter.amplitude_a_per_m", required=False, default=1.0
            )
        )
    else:
        tx = _loop(data, "loops.transmitter")
    rx = _loop(data, "loops.receiver")
    options = data.get("options", {})
    max_l = int(_number(data, "options.max_l", required=False, default=1.0) or 1)
    max_n = int(_number(data, "options.max_n", required=False, default=500.0) or 500)
    if not 1 <= max_l <= 12:
        raise ConfigError("options.max_l", "must lie in 1..12")
    if max_n < 1:
        raise ConfigError("options.max_n", "must be >= 1")
    collapse = bool(options.get("collapse_transient", True))
    regime_tol = _number(data, "options.regime_tol", required=False, default=1e-2)
    return RunConfig(
        target=target,
        environment=env,
        pulse=pulse,
        transmitter=tx,
        receiver=rx,
        max_l=max_l,
        max_n=max_n,
        collapse_transient=collapse,
        regime_tol=regime_tol,
        raw=data,
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return parse_config(data)


def config_hash(data: dict) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def write_timeseries_csv(path: str, series: TimeSeries, extra_columns: dict | None = None) -> None:
    """CSV with header t_s,value[,...]; shortest-round-trip decimals."""
    cols = {"t_s": series.times_s, "value": series.values}
    for name, arr in (extra_columns or {}).items():
        cols[name] = arr
    header = ",".join(cols)
    lines = [header]
    n = series.times_s.size
    for i in range(n):
        cells = []
        for arr in cols.values():
            v = arr[i]
            cells.append(_fmt(v) if isinstance(v, (float, np.floating)) else str(v))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_timeseries_csv(path: str) -> TimeSeries:
    """Read a t_s,value CSV; malformed rows raise DataError with line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(1, "empty file")
    header = lines[0].split(",")
    if header[:2] != ["t_s", "value"]:
        raise DataError(1, "header must start with t_s,value")
    times, values = [], []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) < 2:
            raise DataError(idx, "expected at least 2 comma-separated fields")
        try:
            times.append(float(cells[0]))
            values.append(float(cells[1]))
        except ValueError:
            raise DataError(idx, f"non-numeric value in {cells[:2]}")
    if not times:
        raise DataError(2, "no data rows")
    try:
        return TimeSeries(times_s=np.array(times), values=np.array(values))
    except ParameterError as exc:
        raise DataError(2, str(exc)) from exc


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record for one CLI invocation."""

    command: str
    config_sha256: str
    tool_version: str
    seed: int
    created_utc: str
    inputs: dict
    outputs: dict

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "created_utc": self.created_utc,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }


def build_manifest(command: str, config: dict, seed: int, inputs: dict, outputs: dict) -> RunManifest:
    from . import __version__

    return RunManifest(
        command=command,
        config_sha256=config_hash(config),
        tool_version=__version__,
        seed=seed,
        created_utc=datetime.now(timezone.utc).isoformat(),
        inputs=inputs,
        outputs=outputs,
    )


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")
