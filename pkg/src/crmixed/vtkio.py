"""Legacy-ASCII VTK export of meshes and per-level solution fields."""

import numpy as np


def write_vtk(path, mesh, cell_data=None, point_data=None, title="crmixed"):
    """Write an unstructured-grid legacy VTK file.

    ``cell_data``/``point_data`` map names to flat arrays of length T / V.
    """
    cell_data = cell_data or {}
    point_data = point_data or {}
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.num_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.12g} {y:.12g} 0\n")
        fh.write(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {mesh.num_triangles}\n")
        fh.write("5\n" * mesh.num_triangles)
        if cell_data:
            fh.write(f"CELL_DATA {mesh.num_triangles}\n")
            for name, values in cell_data.items():
                _write_scalars(fh, name, values, mesh.num_triangles)
        if point_data:
            fh.write(f"POINT_DATA {mesh.num_vertices}\n")
            for name, values in point_data.items():
                _write_scalars(fh, name, values, mesh.num_vertices)


def _write_scalars(fh, name, values, expected):
    values = np.asarray(values, dtype=float).ravel()
    if len(values) != expected:
        raise ValueError(f"field {name!r} has {len(values)} values, "
                         f"expected {expected}")
    fh.write(f"SCALARS {name} double 1\n")
    fh.write("LOOKUP_TABLE default\n")
    for v in values:
        fh.write(f"{v:.9g}\n")


def solution_vtk(path, mesh, sigma_h, u_h, title="crmixed"):
    """Export u_h as cell data and |sigma_h| as cell and corner data.

    |sigma_h| is affine per triangle; the cell value is taken at the
    centroid and the point values average the per-corner values of the
    adjacent triangles (the field itself is discontinuous across edges).
    """
    cell_data = {}
    uvals = u_h.tri_values()
    if uvals.shape[1] == 1:
        cell_data["u_h"] = uvals[:, 0]
    else:
        for c in range(uvals.shape[1]):
            cell_data[f"u_h_{c}"] = uvals[:, c]

    tris = np.arange(mesh.num_triangles)
    cent = mesh.tri_centroids()
    mag_cent = np.linalg.norm(sigma_h.eval_at(tris, cent), axis=-1)
    cell_data["sigma_mag"] = mag_cent

    corners = mesh.vertices[mesh.triangles]          # (T, 3, 2)
    vals = sigma_h.eval_at(tris[:, None], corners)   # (T, 3, ncomp)
    mag = np.linalg.norm(vals, axis=-1)
    acc = np.zeros(mesh.num_vertices)
    cnt = np.zeros(mesh.num_vertices)
    np.add.at(acc, mesh.triangles.ravel(), mag.ravel())
    np.add.at(cnt, mesh.triangles.ravel(), 1.0)
    point_data = {"sigma_mag": acc / np.maximum(cnt, 1.0)}

    write_vtk(path, mesh, cell_data=cell_data, point_data=point_data,
              title=title)
