import re
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

import pc_errors
from point_cloud import PointCloud
from seeded_rng import Rng

_header = re.compile(r"^OFF(.*)$")


@dataclass(frozen=True)
class TriangleMesh:
    """
    Attributes:
        vertices (np.ndarray): (V, 3) float64 coordinates.
        faces (np.ndarray): (F, 3) int64 vertex indices.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise pc_errors.InvalidMesh("Face index out of range")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TriangleMesh)
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.faces, other.faces)
        )

    def face_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yields (line number, content) with comments and blank lines dropped."""
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if content:
            yield number, content


def _numbers(line_no: int, tokens: list[str], kind, what: str) -> list:
    try:
        return [kind(t) for t in tokens]
    except ValueError:
        raise pc_errors.ParseError(line_no, f"non-numeric token in {what}: {' '.join(tokens)}")


def parse_off(text: str) -> TriangleMesh:
    """
    Parses an OFF mesh.

    The "OFF" header is optional and may be fused with the counts
    ("OFF492 1000 0", a known ModelNet40 quirk). Polygons are fan
    triangulated: (v0, v1, v2), (v0, v2, v3), ...

    Raises:
        pc_errors.ParseError: With the offending line number on malformed
            counts, non-numeric tokens, bad arity or out-of-range indices.
    """
    lines = _content_lines(text)
    last_line = 0

    def next_line(what: str) -> tuple[int, str]:
        nonlocal last_line
        try:
            last_line, content = next(lines)
        except StopIteration:
            raise pc_errors.ParseError(last_line + 1, f"unexpected end of file, expected {what}")
        return last_line, content

    line_no, content = next_line("header or counts")
    if match := _header.match(content):
        remainder = match.group(1).strip()
        if not remainder:
            line_no, remainder = next_line("counts")
        content = remainder
    tokens = content.split()
    if len(tokens) < 2:
        raise pc_errors.ParseError(line_no, f"malformed counts line: {content!r}")
    counts = _numbers(line_no, tokens[:3], int, "counts")
    n_vertices, n_faces = counts[0], counts[1]
    if n_vertices < 0 or n_faces < 0:
        raise pc_errors.ParseError(line_no, "negative vertex or face count")

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        line_no, content = next_line(f"vertex {i}")
        tokens = content.split()
        if len(tokens) < 3:
            raise pc_errors.ParseError(line_no, f"vertex needs 3 coordinates: {content!r}")
        vertices[i] = _numbers(line_no, tokens[:3], float, "vertex")

    triangles = []
    for i in range(n_faces):
        line_no, content = next_line(f"face {i}")
        tokens = content.split()
        arity = _numbers(line_no, tokens[:1], int, "face")[0]
        if arity < 3 or len(tokens) < arity + 1:
            raise pc_errors.ParseError(line_no, f"malformed face: {content!r}")
        indices = _numbers(line_no, tokens[1 : arity + 1], int, "face")
        if min(indices) < 0 or max(indices) >= n_vertices:
            raise pc_errors.ParseError(line_no, f"face index out of range: {content!r}")
        for j in range(1, arity - 1):
            triangles.append((indices[0], indices[j], indices[j + 1]))

    faces = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(vertices, faces)


def serialize_off(mesh: TriangleMesh) -> str:
    """Writes `mesh` as OFF text with round-trip exact coordinates."""
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} 0"]
    lines.extend(" ".join(repr(float(c)) for c in v) for v in mesh.vertices)
    lines.extend("3 " + " ".join(str(int(i)) for i in f) for f in mesh.faces)
    return "\n".join(lines) + "\n"


def sample_surface(
    mesh: TriangleMesh,
    n: int,
    rng: Rng,
    return_faces: bool = False,
    label: Optional[int] = None,
):
    """
    Samples `n` points on the mesh surface: faces with probability
    proportional to area, then uniform barycentric coordinates in the face.

    Returns:
        PointCloud, or (PointCloud, face indices) with `return_faces`.

    Raises:
        pc_errors.InvalidMesh: If the mesh has no faces or zero total area.
    """
    if n < 1:
        raise pc_errors.InvalidRequest("Cannot sample fewer than one point")
    if len(mesh.faces) == 0:
        raise pc_errors.InvalidMesh("Mesh has no faces to sample")
    areas = mesh.face_areas()
    total = areas.sum()
    if not total > 0:
        raise pc_errors.InvalidMesh("Mesh has zero surface area")
    cumulative = np.cumsum(areas) / total
    face_ids = np.searchsorted(cumulative, rng.random(n), side="right")
    face_ids = np.minimum(face_ids, len(areas) - 1)
    uv = rng.random((n, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    a, b, c = (mesh.vertices[mesh.faces[face_ids, i]] for i in range(3))
    points = a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)
    cloud = PointCloud(points, label)
    return (cloud, face_ids) if return_faces else cloud
