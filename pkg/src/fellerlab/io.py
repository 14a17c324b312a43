"""Plain-text formats: key/value parameter files, measure files and compact
measure strings used on the command line.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Union

import numpy as np

from .boundary import ZERO, AtomMeasure, FellerParams, P4Measure, PowerDensity
from .brw import JumpingMeasure

MEASURE_HEADER = "index,probability"
_POWER = re.compile(r"^power\((.*)\)$")


def read_kv(path: Union[str, Path]) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_atoms(text: str) -> AtomMeasure:
    """``"x:mass, x:mass, ..."``."""
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        x, m = item.split(":")
        pairs.append((float(x), float(m)))
    return AtomMeasure.of(pairs)


def parse_power(text: str) -> PowerDensity:
    """``"power(c=1, alpha=0.5, M=1)"``; ``M`` may be ``inf``."""
    m = _POWER.match(text.replace(" ", ""))
    if not m:
        raise ValueError(f"cannot parse density {text!r}")
    kw = dict(part.split("=") for part in m.group(1).split(",") if part)
    unknown = set(kw) - {"c", "alpha", "M"}
    if unknown:
        raise ValueError(f"unknown density keys {sorted(unknown)}")
    return PowerDensity(float(kw["c"]), float(kw["alpha"]), float(kw.get("M", 1.0)))


def p4_from_kv(kv: dict) -> P4Measure:
    kind = kv.get("p4.kind", "zero")
    if kind == "zero":
        return ZERO
    if kind == "atoms":
        return parse_atoms(kv["p4.atoms"])
    if kind == "power":
        return parse_power(kv["p4.density"])
    raise ValueError(f"unknown p4.kind {kind!r}")


def params_from_kv(kv: dict) -> FellerParams:
    known = {"p1", "p2", "p3", "p4.kind", "p4.atoms", "p4.density"}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown parameter keys {sorted(unknown)}")
    return FellerParams(float(kv.get("p1", 0)), float(kv.get("p2", 0)), float(kv.get("p3", 0)), p4_from_kv(kv))


def read_params(path: Union[str, Path]) -> FellerParams:
    return params_from_kv(read_kv(path))


def write_params(params: FellerParams, path: Union[str, Path]) -> None:
    lines = [f"p1 = {params.p1!r}", f"p2 = {params.p2!r}", f"p3 = {params.p3!r}"]
    m = params.p4
    if isinstance(m, AtomMeasure):
        lines += ["p4.kind = atoms",
                  "p4.atoms = " + ", ".join(f"{x!r}:{w!r}" for x, w in zip(m.locations, m.masses))]
    elif isinstance(m, PowerDensity):
        lines += ["p4.kind = power", f"p4.density = power(c={m.c!r}, alpha={m.alpha!r}, M={m.M!r})"]
    elif not m.is_zero:
        raise ValueError(f"cannot serialize p4 of kind {m.kind!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def format_measure(measure: JumpingMeasure) -> str:
    """``index,probability`` rows for the nonzero entries, preceded by the kill row."""
    rows = [MEASURE_HEADER, f"kill,{measure.kill!r}"]
    for j in np.flatnonzero(measure.probs):
        rows.append(f"{int(j)},{float(measure.probs[j])!r}")
    return "\n".join(rows) + "\n"


def parse_measure(text: str) -> JumpingMeasure:
    entries, kill = {}, 0.0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line == MEASURE_HEADER:
            continue
        key, val = (s.strip() for s in line.split(","))
        if key == "kill":
            kill = float(val)
        else:
            entries[int(key)] = float(val)
    return JumpingMeasure.from_dict(entries, kill)


def write_measure(measure: JumpingMeasure, path: Union[str, Path]) -> None:
    Path(path).write_text(format_measure(measure))


def read_measure(path: Union[str, Path]) -> JumpingMeasure:
    return parse_measure(Path(path).read_text())


def parse_measure_spec(text: str) -> JumpingMeasure:
    """Compact form ``"0:0.5, 3:0.25, kill:0.25"``."""
    entries, kill = {}, 0.0
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        k, v = (s.strip() for s in item.split(":"))
        if k in ("kill", "D", "Δ"):
            kill = float(v)
        else:
            entries[int(k)] = float(v)
    return JumpingMeasure.from_dict(entries, kill)
