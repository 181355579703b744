"""Voxelization of the finite body and material binding.

The body is discretized on an axis-aligned cubic lattice by center-in-
shape membership (no partial-volume weighting); the lattice is centered
on the bounding box of the declared shapes so symmetric bodies get
symmetric grids.  Voxels are ordered lexicographically by (z, y, x),
z slowest, matching the mask file layout.

Mask files are plain text:

    nx ny nz voxel_edge origin_x origin_y origin_z
    <nx*ny*nz region ids, whitespace separated, z-major order>

Region id 0 marks an absent voxel; any other id must resolve to a
material of the scene.  Voxel centers sit at origin + (index + 1/2) * edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .permittivity import PermittivityModel, eval_eps


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float
    region_id: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0.0:
            raise GridError("sphere radius must be positive")

    def bounding_box(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points):
        return np.linalg.norm(np.atleast_2d(points) - np.asarray(self.center), axis=1) <= self.radius


@dataclass(frozen=True)
class Box:
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]
    region_id: int = 1

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min_corner)
        hi = tuple(float(v) for v in self.max_corner)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        if not all(h > l for l, h in zip(lo, hi)):
            raise GridError("box must have positive extent along every axis")

    def bounding_box(self):
        return np.asarray(self.min_corner), np.asarray(self.max_corner)

    def contains(self, points):
        p = np.atleast_2d(points)
        lo, hi = self.bounding_box()
        return np.all((p >= lo) & (p <= hi), axis=1)


@dataclass(frozen=True)
class MaskShape:
    path: str

    def bounding_box(self):
        centers, edge, _ = read_mask(self.path)
        return centers.min(axis=0) - 0.5 * edge, centers.max(axis=0) + 0.5 * edge


Shape = Sphere | Box | MaskShape


class VoxelGrid:
    """Immutable cubical voxelization: centers, edge length, material ids."""

    def __init__(self, centers, voxel_edge: float, material_ids):
        centers = np.array(centers, dtype=float).reshape(-1, 3)
        material_ids = np.array(material_ids, dtype=int).reshape(-1)
        if len(centers) == 0:
            raise GridError("no voxel center falls inside the body")
        if len(centers) != len(material_ids):
            raise GridError("centers and material ids disagree in length")
        if not voxel_edge > 0.0:
            raise GridError("voxel edge must be positive")
        if len(np.unique(np.round(centers / voxel_edge, 6), axis=0)) != len(centers):
            raise GridError("duplicate voxel centers")
        centers.flags.writeable = False
        material_ids.flags.writeable = False
        self.centers = centers
        self.voxel_edge = float(voxel_edge)
        self.material_ids = material_ids

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def voxel_volume(self) -> float:
        return self.voxel_edge**3

    @property
    def total_volume(self) -> float:
        return self.n * self.voxel_volume

    def bounding_box(self):
        h = 0.5 * self.voxel_edge
        return self.centers.min(axis=0) - h, self.centers.max(axis=0) + h

    def index_of(self, point, rtol: float = 1e-9):
        """Index of the voxel whose center coincides with point, else None."""
        d = np.linalg.norm(self.centers - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= rtol * self.voxel_edge else None

    def nearest_center(self, point) -> int:
        return int(np.argmin(np.linalg.norm(self.centers - np.asarray(point, float), axis=1)))


def _lattice_centers(lo, hi, h: float):
    """Symmetric lattice of cell centers covering [lo, hi], (z,y,x) ordering."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    counts = np.maximum(1, np.ceil((hi - lo) / h - 1e-9).astype(int))
    axes = [lo[i] + 0.5 * (hi[i] - lo[i]) - 0.5 * counts[i] * h + (np.arange(counts[i]) + 0.5) * h
            for i in range(3)]
    Z, Y, X = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)


def build_grid(shapes, voxel_edge: float | None = None) -> VoxelGrid:
    """Voxelize one shape or an ordered list of shapes.

    Geometric shapes use center-in-shape membership on a lattice spanning
    the union bounding box; when several shapes claim a voxel the later
    one wins (painter's order).  A mask shape carries its own lattice and
    ids and cannot be combined with other shapes.
    """
    if isinstance(shapes, (Sphere, Box, MaskShape)):
        shapes = [shapes]
    shapes = list(shapes)
    if not shapes:
        raise GridError("no shapes declared")

    if any(isinstance(s, MaskShape) for s in shapes):
        if len(shapes) != 1:
            raise GridError("a mask shape must be the only shape of the scene")
        centers, edge, ids = read_mask(shapes[0].path)
        if voxel_edge is not None and abs(edge - voxel_edge) > 1e-12 * edge:
            raise GridError(f"mask voxel edge {edge} conflicts with requested {voxel_edge}")
        return VoxelGrid(centers, edge, ids)

    if voxel_edge is None:
        raise GridError("voxel_edge is required for geometric shapes")
    diam = min(float(np.max(s.bounding_box()[1] - s.bounding_box()[0])) for s in shapes)
    if voxel_edge > diam:
        raise GridError("voxel edge exceeds the shape diameter")

    los, his = zip(*(s.bounding_box() for s in shapes))
    pts = _lattice_centers(np.min(los, axis=0), np.max(his, axis=0), voxel_edge)
    ids = np.zeros(len(pts), dtype=int)
    for s in shapes:
        inside = s.contains(pts)
        ids[inside] = s.region_id
    keep = ids != 0
    return VoxelGrid(pts[keep], voxel_edge, ids[keep])


def eps_on_grid(grid: VoxelGrid, materials, omega: float):
    """Per-voxel eps(x_i, omega) and beta(x_i, omega) = omega^2 (eps - 1).

    materials: mapping region_id -> PermittivityModel.  Unknown region
    ids raise; vacuum regions (empty pole list) give beta = 0.
    """
    eps = np.empty(grid.n, dtype=complex)
    for rid in np.unique(grid.material_ids):
        if rid not in materials:
            raise KeyError(f"region id {rid} has no material definition")
        eps[grid.material_ids == rid] = eval_eps(materials[rid], omega)
    beta = omega**2 * (eps - 1.0)
    return eps, beta


def read_mask(path):
    """Parse a mask file; returns (centers (N,3), voxel_edge, region_ids (N,))."""
    text = Path(path).read_text().split()
    if len(text) < 7:
        raise GridError(f"mask file {path}: truncated header")
    nx, ny, nz = (int(v) for v in text[:3])
    edge = float(text[3])
    origin = np.array([float(v) for v in text[4:7]])
    vals = np.array([int(v) for v in text[7:]], dtype=int)
    if len(vals) != nx * ny * nz:
        raise GridError(f"mask file {path}: expected {nx * ny * nz} ids, found {len(vals)}")
    ids = vals.reshape(nz, ny, nx)
    iz, iy, ix = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    centers = origin + (np.stack([ix, iy, iz], axis=-1).reshape(-1, 3) + 0.5) * edge
    flat = ids.reshape(-1)
    keep = flat != 0
    if not keep.any():
        raise GridError(f"mask file {path}: all voxels absent")
    return centers[keep], edge, flat[keep]


def write_mask(path, shape_zyx, voxel_edge: float, origin, ids_zyx):
    """Write a mask file (inverse of read_mask); ids_zyx is (nz, ny, nx)."""
    nz, ny, nx = shape_zyx
    ids = np.asarray(ids_zyx, dtype=int).reshape(nz, ny, nx)
    lines = [f"{nx} {ny} {nz} {voxel_edge!r} " + " ".join(repr(float(v)) for v in origin)]
    lines += [" ".join(str(v) for v in row) for row in ids.reshape(nz * ny, nx)]
    Path(path).write_text("\n".join(lines) + "\n")
