"""Convex polytope tables consumed by the contact kernel.

Every shape becomes a convex polyhedron (boxes exactly, cylinders as
``segments``-sided prisms).  Tables are padded to common maxima so a whole
world packs into a handful of dense arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Box, Cylinder, Shape, local_points


def _box_loops() -> list[list[int]]:
    # vertex index = 4*ix + 2*iy + iz, matching geometry.local_points
    def v(ix, iy, iz):
        return 4 * ix + 2 * iy + iz

    return [
        [v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)],
        [v(0, 0, 0), v(0, 0, 1), v(0, 1, 1), v(0, 1, 0)],
        [v(0, 1, 0), v(0, 1, 1), v(1, 1, 1), v(1, 1, 0)],
        [v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)],
        [v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)],
        [v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)],
    ]


def _prism_loops(k: int) -> list[list[int]]:
    loops = [[i, (i + 1) % k, k + (i + 1) % k, k + i] for i in range(k)]
    loops.append(list(range(k, 2 * k)))
    loops.append(list(range(k - 1, -1, -1)))
    return loops


@dataclass
class ConvexMesh:
    vertices: np.ndarray
    loops: list[list[int]]
    normals: np.ndarray
    offsets: np.ndarray
    edges: np.ndarray
    edge_faces: np.ndarray

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())


def convex_mesh(shape: Shape, segments: int = 32) -> ConvexMesh:
    verts = local_points(shape, segments)
    if isinstance(shape, Box):
        loops = _box_loops()
    elif isinstance(shape, Cylinder):
        loops = _prism_loops(segments)
    else:
        raise TypeError(f"unsupported shape {shape!r}")

    normals, offsets = [], []
    for loop in loops:
        p = verts[loop]
        # Newell normal
        n = np.zeros(3)
        for i in range(len(p)):
            a, b = p[i], p[(i + 1) % len(p)]
            n += np.array([(a[1] - b[1]) * (a[2] + b[2]), (a[2] - b[2]) * (a[0] + b[0]), (a[0] - b[0]) * (a[1] + b[1])])
        n /= np.linalg.norm(n)
        if n @ p.mean(axis=0) < 0:
            raise AssertionError("face loop wound inwards")
        normals.append(n)
        offsets.append(float(n @ p[0]))

    owner: dict[tuple[int, int], int] = {}
    for f, loop in enumerate(loops):
        for i in range(len(loop)):
            owner[(loop[i], loop[(i + 1) % len(loop)])] = f
    edges, edge_faces = [], []
    for (u, v), f in owner.items():
        if u < v:
            edges.append((u, v))
            edge_faces.append((f, owner[(v, u)]))
    return ConvexMesh(
        vertices=verts,
        loops=loops,
        normals=np.array(normals),
        offsets=np.array(offsets),
        edges=np.array(edges, dtype=np.int64),
        edge_faces=np.array(edge_faces, dtype=np.int64),
    )


@dataclass
class ShapeTables:
    nv: np.ndarray
    verts: np.ndarray
    nf: np.ndarray
    fnorm: np.ndarray
    foff: np.ndarray
    fnv: np.ndarray
    floop: np.ndarray
    ne: np.ndarray
    edges: np.ndarray
    eface: np.ndarray
    radius: np.ndarray

    def as_tuple(self):
        return (
            self.nv, self.verts, self.nf, self.fnorm, self.foff, self.fnv,
            self.floop, self.ne, self.edges, self.eface, self.radius,
        )


def build_tables(shapes: list[Shape], segments: int = 32) -> ShapeTables:
    meshes = [convex_mesh(s, segments) for s in shapes]
    n = len(meshes)
    vmax = max([len(m.vertices) for m in meshes] + [1])
    fmax = max([len(m.loops) for m in meshes] + [1])
    kmax = max([len(l) for m in meshes for l in m.loops] + [1])
    emax = max([len(m.edges) for m in meshes] + [1])
    t = ShapeTables(
        nv=np.zeros(n, np.int64),
        verts=np.zeros((n, vmax, 3)),
        nf=np.zeros(n, np.int64),
        fnorm=np.zeros((n, fmax, 3)),
        foff=np.zeros((n, fmax)),
        fnv=np.zeros((n, fmax), np.int64),
        floop=np.zeros((n, fmax, kmax), np.int64),
        ne=np.zeros(n, np.int64),
        edges=np.zeros((n, emax, 2), np.int64),
        eface=np.zeros((n, emax, 2), np.int64),
        radius=np.zeros(n),
    )
    for i, m in enumerate(meshes):
        t.nv[i] = len(m.vertices)
        t.verts[i, : len(m.vertices)] = m.vertices
        t.nf[i] = len(m.loops)
        t.fnorm[i, : len(m.loops)] = m.normals
        t.foff[i, : len(m.loops)] = m.offsets
        for f, loop in enumerate(m.loops):
            t.fnv[i, f] = len(loop)
            t.floop[i, f, : len(loop)] = loop
        t.ne[i] = len(m.edges)
        t.edges[i, : len(m.edges)] = m.edges
        t.eface[i, : len(m.edges)] = m.edge_faces
        t.radius[i] = m.radius
    return t


def inverse_inertia(shape: Shape, mass: float) -> np.ndarray:
    """Diagonal of the body-frame inverse inertia tensor."""
    if isinstance(shape, Box):
        a, b, c = (2.0 * h for h in shape.half_extents)
        inertia = mass / 12.0 * np.array([b * b + c * c, a * a + c * c, a * a + b * b])
    elif isinstance(shape, Cylinder):
        r, h = shape.radius, 2.0 * shape.half_height
        side = mass * (3.0 * r * r + h * h) / 12.0
        inertia = np.array([side, side, 0.5 * mass * r * r])
    else:
        raise TypeError(f"unsupported shape {shape!r}")
    return 1.0 / inertia
