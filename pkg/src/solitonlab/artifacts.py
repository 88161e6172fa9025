"""Run artifacts: field snapshots, observable tables, plot scripts.

One snapshot format per dimensionality. 1D snapshots are plain text: a
single '#' header line declaring the grid, the time, the transform
convention, and the physical parameters, then a CSV table with columns
x, re_psi, im_psi, phi. 3D snapshots keep the same header line (plus an
explicit axis-ordering declaration) and follow it with the three field
arrays flattened in C order as little-endian float64, since a 3D CSV
would be both huge and ambiguous.

Observable tables are RFC-4180-style CSV with a header row; floats are
written with repr so a round trip through the file is exact.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from .diagnostics import ObservableRecord
from .model import FieldState, PhysicalParams, make_grid

SNAPSHOT_MAGIC = "solitonlab-snapshot"
_BINARY_DTYPE = "<f8"  # little endian, explicit on every platform


def _header_line(state: FieldState) -> str:
    g, p = state.grid, state.params
    fields = [
        SNAPSHOT_MAGIC,
        f"dim={g.dim}",
        f"n={g.n}",
        f"length={g.length!r}",
        f"spacing={g.spacing!r}",
        f"t={float(state.t)!r}",
        "transform=unitary-norm fft (forward 1/N)",
        f"M={p.M!r}", f"m={p.m!r}", f"v={p.v!r}",
    ]
    if g.transverse_mode is not None:
        gam, eps = g.transverse_mode
        fields.append(f"transverse=gamma:{gam!r},eps:{eps!r}")
    if g.dim == 3:
        fields.append(f"layout=C-order axes (x,y,z), arrays "
                      f"re_psi,im_psi,phi concatenated, dtype {_BINARY_DTYPE}")
    else:
        fields.append("columns=x,re_psi,im_psi,phi")
    return "# " + " | ".join(fields)


def write_snapshot(path: str, state: FieldState) -> None:
    """Write a field snapshot; format is chosen by the grid dimension."""
    header = _header_line(state)
    if state.grid.dim == 1:
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "re_psi", "im_psi", "phi"])
            for x, re, im, ph in zip(state.grid.axis,
                                     state.psi.real, state.psi.imag,
                                     state.phi):
                writer.writerow([repr(float(x)), repr(float(re)),
                                 repr(float(im)), repr(float(ph))])
        return
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        for arr in (state.psi.real, state.psi.imag, state.phi):
            fh.write(np.ascontiguousarray(arr, dtype=_BINARY_DTYPE).tobytes())


def _parse_header(line: str) -> dict[str, str]:
    body = line.lstrip("#").strip()
    parts = [p.strip() for p in body.split("|")]
    if not parts or parts[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"not a snapshot header: {line[:60]!r}")
    out: dict[str, str] = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_snapshot(path: str) -> FieldState:
    """Inverse of write_snapshot (phi_prev is not stored and reads None)."""
    with open(path, "rb") as fh:
        header = _parse_header(fh.readline().decode("utf-8"))
        payload = fh.read()
    dim, n = int(header["dim"]), int(header["n"])
    transverse = None
    if "transverse" in header:
        gam, eps = (float(tok.split(":")[1])
                    for tok in header["transverse"].split(","))
        transverse = (gam, eps)
    grid = make_grid(dim, n, float(header["length"]),
                     transverse_mode=transverse)
    params = PhysicalParams(M=float(header["M"]), m=float(header["m"]),
                            v=float(header["v"]))
    if dim == 1:
        text = payload.decode("utf-8")
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(c) for c in row] for row in rows[1:]])
        if data.shape != (n, 4):
            raise ValueError(f"snapshot table has shape {data.shape}, "
                             f"expected ({n}, 4)")
        psi = data[:, 1] + 1j * data[:, 2]
        phi = data[:, 3]
    else:
        flat = np.frombuffer(payload, dtype=_BINARY_DTYPE)
        if flat.size != 3 * n**3:
            raise ValueError(f"snapshot payload holds {flat.size} values, "
                             f"expected {3 * n**3}")
        re, im, phi = flat.reshape(3, n, n, n)
        psi = re + 1j * im
        phi = np.ascontiguousarray(phi)
    return FieldState(t=float(header["t"]), psi=psi, phi=phi,
                      params=params, grid=grid)


def write_observables_csv(path: str,
                          records: Sequence[ObservableRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ObservableRecord.field_names())
        for rec in records:
            writer.writerow([
                repr(float(rec.t)), repr(float(rec.norm)),
                repr(float(rec.centroid)), repr(float(rec.width)),
                repr(float(rec.peak_pos)), repr(float(rec.phi_min)),
                "true" if rec.valid else "false",
            ])


def read_observables_csv(path: str) -> list[ObservableRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != ObservableRecord.field_names():
        raise ValueError(f"unexpected observables header in {path}")
    out = []
    for row in rows[1:]:
        out.append(ObservableRecord(
            t=float(row[0]), norm=float(row[1]), centroid=float(row[2]),
            width=float(row[3]), peak_pos=float(row[4]),
            phi_min=float(row[5]), valid=(row[6] == "true")))
    return out


# Column numbers below follow ObservableRecord.field_names() order
# (1-based, as gnuplot counts them): t=1, norm=2, centroid=3, width=4,
# peak_pos=5, phi_min=6.
_PLOT_PANELS = (
    ("norm", 2, "field norm"),
    ("width", 4, "density width"),
    ("peak_pos", 5, "density peak position"),
    ("phi_min", 6, "scalar field minimum"),
)


def write_plot_script(path: str, csv_name: str, title: str) -> None:
    """Declarative gnuplot commands against the observables CSV.

    The run itself never renders anything; this file documents which
    columns mean what and can be fed to gnuplot as-is.
    """
    lines = [
        f"# observables from {csv_name}: columns "
        + ", ".join(f"{i + 1}={name}"
                    for i, name in enumerate(ObservableRecord.field_names())),
        "set datafile separator comma",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 't'",
        "set terminal pngcairo size 1200,800",
        "set output 'observables.png'",
        "set multiplot layout 2,2",
    ]
    for name, col, label in _PLOT_PANELS:
        lines.append(f"set ylabel '{label}'")
        lines.append(f"plot '{csv_name}' using 1:{col} with lines "
                     f"title '{name}'")
    lines.append("unset multiplot")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
