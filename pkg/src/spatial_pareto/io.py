"""Presets and file formats.

Every file starts with ``#`` metadata lines (``# key: value``) so results can
be traced to their configuration.  Nothing time-dependent is written, which
keeps repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .model import Field, Grids, ModelSpec, SpecError, UtilitySpec, validate_spec

PRESETS = ("paper-baseline", "paper-linear")
PRESET_RHO = 0.03


def load_preset(name: str) -> ModelSpec:
    """Named model configurations.

    ``paper-baseline`` uses the shifted power utility, ``paper-linear`` the
    linear one.  The discount rate is not part of the published setup and is
    filled with ``PRESET_RHO``.
    """
    base = ModelSpec(rho=PRESET_RHO)
    if name == "paper-baseline":
        spec = base
    elif name == "paper-linear":
        spec = replace(base, utility=UtilitySpec(kind="linear"))
    else:
        raise SpecError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return validate_spec(spec)


def load_spec(path: str | os.PathLike) -> ModelSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return validate_spec(ModelSpec.from_dict(data))


def save_spec(spec: ModelSpec, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(meta: Mapping[str, Any] | None) -> str:
    if not meta:
        return ""
    return "".join(f"# {k}: {_num(v) if not isinstance(v, str) else v}\n" for k, v in meta.items())


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence[Any]], meta=None):
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_metadata(path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        key, _, val = line[1:].strip().partition(":")
        meta[key.strip()] = val.strip()
    return meta


def _data_lines(path):
    return [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]


def write_field_csv(path, fld: Field, meta=None) -> None:
    """Grid CSV: header row holds ``x``, first column holds ``t``."""
    g = fld.grids
    header = ["t\\x"] + [_num(x) for x in g.x]
    rows = ([t, *row] for t, row in zip(g.t, fld.values))
    _write_rows(path, header, rows, {**(meta or {}), "role": fld.role})


def read_field_csv(path, role: str | None = None) -> Field:
    lines = list(csv.reader(_data_lines(path)))
    x = np.array([float(v) for v in lines[0][1:]])
    body = np.array([[float(v) for v in r] for r in lines[1:]])
    t, vals = body[:, 0], body[:, 1:]
    grids = Grids(x.size, t.size - 1, float(x[0]), float(x[-1]), float(t[-1]))
    role = role or read_metadata(path).get("role", "capital")
    return Field(grids, vals, role)


def write_frontier_csv(path, frontier, meta=None) -> None:
    header = ["theta", "J1", "J2", "iterations", "termination_reason", "dominated"]
    rows = []
    for p in frontier.points:
        j1, j2 = (p.criteria.j1, p.criteria.j2) if p.criteria is not None else ("nan", "nan")
        rows.append([p.theta, j1, j2, p.iterations, p.termination_reason, p.dominated])
    _write_rows(path, header, rows, meta)


def read_frontier_csv(path) -> list[dict[str, str]]:
    return list(csv.DictReader(_data_lines(path)))


def write_log_csv(path, log, meta=None) -> None:
    _write_rows(path, ["iter", "J", "delta"],
                ([r.iteration, r.objective, r.delta] for r in log), meta)


def write_cloud_csv(path, cls, rows, meta=None) -> None:
    header = ["control_id"] + [f"c_t{t}_x{s}" for t in range(cls.time_blocks)
                               for s in range(cls.space_blocks)] + ["J1", "J2", "nondominated"]
    _write_rows(path, header, rows, meta)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: Mapping[str, Any], meta=None) -> None:
    out = {"metadata": dict(meta or {}), **payload}
    Path(path).write_text(json.dumps(_clean(out), indent=2) + "\n")
