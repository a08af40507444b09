"""Plot-ready output: CSV line samples, legacy VTK structured grids, tables."""
from __future__ import annotations

import csv
import os

import numpy as np

from .euler import pressure


def sample_points(disc, U, x, y=None):
    """Conservative state at arbitrary physical points by element-local basis evaluation.

    Returns (states, element index); points outside the mesh get NaN and -1.
    """
    mesh = disc.mesh
    basis = disc.ops.basis
    elem, xi, eta = mesh.locate(x, y)
    out = np.full((elem.size, disc.d + 2), np.nan)
    ok = elem >= 0
    if not np.any(ok):
        return out, elem
    Lx = basis.evaluate(xi[ok])
    if disc.d == 1:
        out[ok] = np.einsum("na,nav->nv", Lx, U[elem[ok], 0])
    else:
        Ly = basis.evaluate(eta[ok])
        out[ok] = np.einsum("nb,na,nbav->nv", Ly, Lx, U[elem[ok]])
    return out, elem


def line_samples(disc, U, c, start, end, n: int = 2048):
    """Columns s, x, y, rho, P, c along the straight segment ``start`` -> ``end``."""
    s = np.linspace(0.0, 1.0, n)
    x = start[0] + s * (end[0] - start[0])
    y = start[1] + s * (end[1] - start[1]) if disc.d == 2 else None
    states, elem = sample_points(disc, U, x, y)
    cvals = np.where(elem >= 0, np.asarray(c)[np.maximum(elem, 0)], np.nan)
    with np.errstate(invalid="ignore"):
        p = pressure(states, disc.gamma)
    ys = y if y is not None else np.zeros_like(x)
    return np.column_stack([s * np.hypot(end[0] - start[0], end[1] - start[1] if disc.d == 2 else 0.0),
                            x, ys, states[:, 0], p, cvals])


def nodal_line_1d(disc, U, c):
    """Columns x, rho, P, c at every solution node of a 1D field, sorted by x."""
    X, _ = disc.node_coordinates()
    u = U[:, 0]
    x = X[:, 0].ravel()
    rho = u[..., 0].ravel()
    p = pressure(u, disc.gamma).ravel()
    cc = np.repeat(np.asarray(c), u.shape[1])
    order = np.argsort(x, kind="stable")
    return np.column_stack([x, rho, p, cc])[order]


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def write_vtk_blocks(path_prefix, mesh, cell_fields: dict) -> list:
    """One legacy-VTK ASCII STRUCTURED_GRID file per mesh block with per-element data."""
    paths = []
    start = 0
    for k, blk in enumerate(mesh.blocks):
        n = blk.nx * blk.ny
        sl = slice(start, start + n)
        start += n
        xs = blk.x0 + np.arange(blk.nx + 1) * blk.lx / blk.nx
        if mesh.d == 2:
            ys = blk.y0 + np.arange(blk.ny + 1) * blk.ly / blk.ny
        else:
            ys = np.zeros(1)
        path = f"{path_prefix}_block{k}.vtk"
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("element fields\nASCII\nDATASET STRUCTURED_GRID\n")
            fh.write(f"DIMENSIONS {xs.size} {ys.size} 1\n")
            fh.write(f"POINTS {xs.size * ys.size} double\n")
            for y in ys:
                for x in xs:
                    fh.write(f"{x:.12g} {y:.12g} 0\n")
            fh.write(f"CELL_DATA {n}\n")
            for name, values in cell_fields.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in np.asarray(values)[sl]:
                    fh.write(f"{v:.12g}\n")
        paths.append(path)
    return paths


def read_vtk_cell_data(path) -> dict:
    """Minimal reader for files written by :func:`write_vtk_blocks`."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    fields = {}
    i = 0
    ncell = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("CELL_DATA"):
            ncell = int(line.split()[1])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            fields[name] = np.array([float(v) for v in lines[i + 2 : i + 2 + ncell]])
            i += 1 + ncell
        i += 1
    return fields
