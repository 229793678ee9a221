"""Run configuration files (INI), frozen CSV schemas, and summary/meta emission.

CSV schemas (headers are part of the external contract):
  trajectory.csv  t,l2,hs,I1,I2,control_energy
  spectrum.csv    t,k,amplitude
  control.csv     t,h_l2
  gramian.csv     index,eigenvalue
Floats are serialized with 17 significant digits so a round trip is bit exact.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DiagnosticsRecord
from .errors import ConfigError

TRAJECTORY_HEADER = "t,l2,hs,I1,I2,control_energy"
SPECTRUM_HEADER = "t,k,amplitude"
CONTROL_HEADER = "t,h_l2"
GRAMIAN_HEADER = "index,eigenvalue"

_ENV_OUT = "BENCTRL_OUTPUT_DIR"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def resolve_out_dir(requested: str | None) -> Path:
    base = requested or os.environ.get(_ENV_OUT) or "runs"
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectory_csv(path, traj) -> None:
    with open(path, "w") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for r in traj.records:
            f.write(
                ",".join(fmt(v) for v in (r.t, r.l2, r.hs, r.I1, r.I2, r.control_energy)) + "\n"
            )


def read_trajectory_csv(path) -> list[DiagnosticsRecord]:
    with open(path) as f:
        header = f.readline().strip()
        if header != TRAJECTORY_HEADER:
            raise ConfigError(f"unexpected trajectory header {header!r}")
        out = []
        for line in f:
            t, l2, hs, i1, i2, ce = (float(v) for v in line.strip().split(","))
            out.append(DiagnosticsRecord(t=t, l2=l2, hs=hs, I1=i1, I2=i2, control_energy=ce))
    return out


def write_spectrum_csv(path, traj) -> None:
    n = traj.states[0].mode_count
    ks = range(n // 2)
    with open(path, "w") as f:
        f.write(SPECTRUM_HEADER + "\n")
        for t, u in zip(traj.times, traj.states):
            amp = np.abs(u.coeffs)
            for k in ks:
                f.write(f"{fmt(t)},{k},{fmt(amp[k])}\n")


def write_control_csv(path, signal) -> None:
    norms = 2.0 * np.pi * np.sum(np.abs(signal.values) ** 2, axis=1)
    with open(path, "w") as f:
        f.write(CONTROL_HEADER + "\n")
        for t, sq in zip(signal.times, norms):
            f.write(f"{fmt(t)},{fmt(np.sqrt(sq))}\n")


def write_gramian_csv(path, eigenvalues) -> None:
    with open(path, "w") as f:
        f.write(GRAMIAN_HEADER + "\n")
        for i, ev in enumerate(np.sort(np.asarray(eigenvalues))):
            f.write(f"{i},{fmt(ev)}\n")


def write_summary(path, entries: dict) -> None:
    with open(path, "w") as f:
        for key, value in entries.items():
            if isinstance(value, float):
                value = fmt(value)
            f.write(f"{key} = {value}\n")


def read_summary(path) -> dict[str, str]:
    out = {}
    with open(path) as f:
        for line in f:
            if "=" in line:
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def write_meta(path, resolved: dict) -> None:
    entries = {"version": __version__}
    entries.update(resolved)
    write_summary(path, entries)


def load_config(path) -> dict[str, dict[str, str]]:
    """Flat INI sections -> nested string dict; unknown files raise ConfigError."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return {section: dict(parser.items(section)) for section in parser.sections()}
