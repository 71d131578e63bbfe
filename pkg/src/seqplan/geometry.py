"""Poses, primitive shapes, point clouds and convex hulls.

Quaternions are stored scalar-first as ``(w, x, y, z)``.  Point clouds are
plain ``(N, 3)`` float arrays in world coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Pose",
    "Box",
    "Cylinder",
    "Shape",
    "Polyhedron",
    "DegenerateInput",
    "CYLINDER_SEGMENTS",
    "sample_shape",
    "convex_hull",
    "hull_volume",
    "transform_cloud",
    "quat_multiply",
    "quat_conjugate",
    "quat_to_matrix",
    "quat_from_axis_angle",
    "quat_angle",
]

CYLINDER_SEGMENTS = 32
QUAT_NORM_TOL = 1e-9


class DegenerateInput(ValueError):
    """Raised when a point set spans less than three dimensions."""


# ---------------------------------------------------------------------------
# quaternion helpers
# ---------------------------------------------------------------------------


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]], dtype=float)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(0.5 * angle)
    return np.array([math.cos(0.5 * angle), *(axis * s)])


def quat_angle(a, b) -> float:
    """Angle in radians of the rotation taking ``a`` to ``b``."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * math.acos(min(1.0, d))


# ---------------------------------------------------------------------------
# poses and shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pose:
    """Rigid pose: position in meters, unit quaternion orientation."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        quat = tuple(float(v) for v in self.orientation)
        if len(pos) != 3 or len(quat) != 4:
            raise ValueError("pose needs a 3-vector position and a 4-vector quaternion")
        if not all(math.isfinite(v) for v in pos + quat):
            raise ValueError("pose components must be finite")
        norm = math.sqrt(sum(v * v for v in quat))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"orientation is not a unit quaternion (norm {norm!r})")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def from_arrays(cls, position, orientation) -> "Pose":
        q = np.asarray(orientation, dtype=float)
        q = q / np.linalg.norm(q)
        return cls(tuple(np.asarray(position, dtype=float)), tuple(q))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def translated(self, offset) -> "Pose":
        return Pose(tuple(np.add(self.position, offset)), self.orientation)

    def compose(self, other: "Pose") -> "Pose":
        """``self * other``: apply ``other`` first, then ``self``."""
        pos = np.asarray(self.position) + self.rotation @ np.asarray(other.position)
        return Pose.from_arrays(pos, quat_multiply(self.orientation, other.orientation))

    def inverse(self) -> "Pose":
        qc = quat_conjugate(self.orientation)
        pos = -(quat_to_matrix(qc) @ np.asarray(self.position))
        return Pose.from_arrays(pos, qc)


@dataclass(frozen=True)
class Box:
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        he = tuple(float(v) for v in self.half_extents)
        if len(he) != 3 or not all(math.isfinite(v) and v > 0 for v in he):
            raise ValueError(f"box half extents must be three positive numbers, got {he}")
        object.__setattr__(self, "half_extents", he)

    @property
    def volume(self) -> float:
        hx, hy, hz = self.half_extents
        return 8.0 * hx * hy * hz

    def support_extent(self, axis: int) -> float:
        return self.half_extents[axis]


@dataclass(frozen=True)
class Cylinder:
    """Cylinder with its axis along local z."""

    radius: float
    half_height: float

    def __post_init__(self):
        for name in ("radius", "half_height"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"cylinder {name} must be positive, got {v}")
            object.__setattr__(self, name, v)

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * 2.0 * self.half_height

    def support_extent(self, axis: int) -> float:
        return self.half_height if axis == 2 else self.radius


Shape = Union[Box, Cylinder]


def local_points(shape: Shape, segments: int = CYLINDER_SEGMENTS) -> np.ndarray:
    """Hull-defining points of a shape in its own frame."""
    if isinstance(shape, Box):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        return signs * np.asarray(shape.half_extents)
    if isinstance(shape, Cylinder):
        theta = 2.0 * np.pi * np.arange(segments) / segments
        ring = np.column_stack([shape.radius * np.cos(theta), shape.radius * np.sin(theta)])
        bottom = np.column_stack([ring, np.full(segments, -shape.half_height)])
        top = np.column_stack([ring, np.full(segments, shape.half_height)])
        return np.vstack([bottom, top])
    raise TypeError(f"unsupported shape {shape!r}")


def sample_shape(shape: Shape, pose: Pose, segments: int = CYLINDER_SEGMENTS) -> np.ndarray:
    """World-frame point cloud whose convex hull is the (sampled) shape."""
    pts = local_points(shape, segments)
    return pts @ pose.rotation.T + np.asarray(pose.position)


def transform_cloud(cloud, from_pose: Pose, to_pose: Pose) -> np.ndarray:
    """Move a cloud rigidly so that ``from_pose`` lands on ``to_pose``."""
    cloud = np.asarray(cloud, dtype=float)
    if from_pose == to_pose:
        return cloud.copy()
    rot = to_pose.rotation @ from_pose.rotation.T
    return (cloud - np.asarray(from_pose.position)) @ rot.T + np.asarray(to_pose.position)


# ---------------------------------------------------------------------------
# convex hull
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polyhedron:
    """Closed triangle mesh with outward (counter-clockwise) winding."""

    vertices: np.ndarray
    faces: np.ndarray

    def face_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit outward normals and offsets such that ``n . x <= d`` inside."""
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        n = np.cross(b - a, c - a)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        return n, np.einsum("ij,ij->i", n, a)

    def signed_distance(self, points) -> np.ndarray:
        """Max over face planes; negative inside, positive outside."""
        n, d = self.face_planes()
        return (np.asarray(points, dtype=float) @ n.T - d).max(axis=1)

    def is_watertight(self) -> bool:
        edges = {}
        for f in self.faces:
            for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                if (u, v) in edges:
                    return False
                edges[(u, v)] = True
        return all((v, u) in edges for (u, v) in edges)


def _plane(pts: np.ndarray, a: int, b: int, c: int):
    n = np.cross(pts[b] - pts[a], pts[c] - pts[a])
    length = np.linalg.norm(n)
    if length == 0.0:
        return None, None
    n = n / length
    return n, float(n @ pts[a])


def convex_hull(cloud, tol: float | None = None) -> Polyhedron:
    """Quickhull in 3-D.

    Deterministic for a given input order: every argmax/argmin breaks ties
    towards the lowest index and faces are processed in creation order.
    Points closer than ``tol`` to the current hull surface are treated as
    inside.
    """
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("point cloud must have shape (N, 3)")
    if len(pts) < 4:
        raise DegenerateInput("need at least 4 points for a 3-D hull")
    scale = float(np.abs(pts).max()) if len(pts) else 1.0
    extent = float((pts.max(axis=0) - pts.min(axis=0)).max())
    if tol is None:
        tol = 1e-10 * max(1.0, scale)
    if extent <= tol:
        raise DegenerateInput("points are coincident")

    # initial simplex
    axis = int(np.argmax(pts.max(axis=0) - pts.min(axis=0)))
    i0 = int(np.argmin(pts[:, axis]))
    i1 = int(np.argmax(pts[:, axis]))
    line = pts[i1] - pts[i0]
    line /= np.linalg.norm(line)
    rel = pts - pts[i0]
    dist_line = np.linalg.norm(rel - np.outer(rel @ line, line), axis=1)
    i2 = int(np.argmax(dist_line))
    if dist_line[i2] <= tol:
        raise DegenerateInput("points are collinear")
    n012, d012 = _plane(pts, i0, i1, i2)
    dist_plane = pts @ n012 - d012
    i3 = int(np.argmax(np.abs(dist_plane)))
    if abs(dist_plane[i3]) <= tol:
        raise DegenerateInput("points are coplanar")

    faces: list[tuple[int, int, int] | None] = []
    normals: list[np.ndarray] = []
    offsets: list[float] = []
    outside: list[np.ndarray] = []
    edge_face: dict[tuple[int, int], int] = {}

    def add_face(a: int, b: int, c: int) -> int:
        n, d = _plane(pts, a, b, c)
        if n is None:
            # zero-area sliver; keep topology, never sees points
            n, d = np.zeros(3), 0.0
        fid = len(faces)
        faces.append((a, b, c))
        normals.append(n)
        offsets.append(d)
        outside.append(np.empty(0, dtype=np.int64))
        edge_face[(a, b)] = fid
        edge_face[(b, c)] = fid
        edge_face[(c, a)] = fid
        return fid

    if dist_plane[i3] > 0:
        # i3 above (i0, i1, i2): flip base so that its normal points away from i3
        base = (i0, i2, i1)
    else:
        base = (i0, i1, i2)
    a, b, c = base
    add_face(a, b, c)
    add_face(a, i3, b)
    add_face(b, i3, c)
    add_face(c, i3, a)

    def assign(candidates: np.ndarray, fids: list[int]) -> None:
        if len(candidates) == 0 or not fids:
            return
        nmat = np.array([normals[f] for f in fids])
        dvec = np.array([offsets[f] for f in fids])
        dist = pts[candidates] @ nmat.T - dvec
        best = np.argmax(dist, axis=1)
        above = dist[np.arange(len(candidates)), best] > tol
        for k, f in enumerate(fids):
            sel = candidates[above & (best == k)]
            if len(sel):
                outside[f] = sel

    simplex = {i0, i1, i2, i3}
    rest = np.array([i for i in range(len(pts)) if i not in simplex], dtype=np.int64)
    assign(rest, [0, 1, 2, 3])

    cursor = 0
    while cursor < len(faces):
        f = cursor
        if faces[f] is None or len(outside[f]) == 0:
            cursor += 1
            continue
        cand = outside[f]
        dist = pts[cand] @ normals[f] - offsets[f]
        eye = int(cand[int(np.argmax(dist))])
        p = pts[eye]

        # visible region by flood fill from f
        visible = {f}
        stack = [f]
        while stack:
            g = stack.pop()
            ga, gb, gc = faces[g]
            for u, v in ((ga, gb), (gb, gc), (gc, ga)):
                h = edge_face.get((v, u))
                if h is None or h in visible:
                    continue
                if float(normals[h] @ p - offsets[h]) > tol:
                    visible.add(h)
                    stack.append(h)

        horizon = []
        for g in sorted(visible):
            ga, gb, gc = faces[g]
            for u, v in ((ga, gb), (gb, gc), (gc, ga)):
                if edge_face.get((v, u)) not in visible:
                    horizon.append((u, v))

        orphans = []
        for g in sorted(visible):
            ga, gb, gc = faces[g]
            for u, v in ((ga, gb), (gb, gc), (gc, ga)):
                if edge_face.get((u, v)) == g:
                    del edge_face[(u, v)]
            orphans.append(outside[g])
            outside[g] = np.empty(0, dtype=np.int64)
            faces[g] = None

        new_faces = [add_face(u, v, eye) for (u, v) in horizon]
        pool = np.concatenate(orphans) if orphans else np.empty(0, dtype=np.int64)
        pool = np.unique(pool[pool != eye])
        assign(pool, new_faces)

    live = [fc for fc in faces if fc is not None]
    used = sorted({i for fc in live for i in fc})
    remap = {old: new for new, old in enumerate(used)}
    tri = np.array([[remap[i] for i in fc] for fc in live], dtype=np.int64)
    return Polyhedron(vertices=pts[used].copy(), faces=tri)


def hull_volume(poly: Polyhedron) -> float:
    """Volume by summing signed tetrahedra against the vertex centroid."""
    if len(poly.faces) == 0:
        return 0.0
    ref = poly.vertices.mean(axis=0)
    a = poly.vertices[poly.faces[:, 0]] - ref
    b = poly.vertices[poly.faces[:, 1]] - ref
    c = poly.vertices[poly.faces[:, 2]] - ref
    vol = float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum()) / 6.0
    return max(vol, 0.0)


def cloud_volume(cloud) -> float:
    """Hull volume of a cloud; zero for degenerate (planar, linear) sets."""
    try:
        return hull_volume(convex_hull(cloud))
    except DegenerateInput:
        return 0.0


def centroid_distance(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.linalg.norm(np.subtract(a, b)))
