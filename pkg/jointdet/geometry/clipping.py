"""
Convex clipping of box footprints. The kernel clips the footprint of box A successively against the four half-planes
of box B and records, for every output vertex, the two lines it lies on: lines 0-3 are the edges of A (edge i runs from
corner i to corner i + 1), lines 4-7 the edges of B. The provenance lets the differentiable IoU rebuild the
intersection polygon from the box parameters.

For License information see the LICENSE file.

"""
from typing import Tuple

import numpy as np
from numba import njit

MAX_VERTICES: int = 16

COLLINEAR_TOLERANCE: float = 1e-9

SLIVER_AREA: float = 1e-12


@njit(cache=True)
def _clip_pair(a: np.ndarray, b: np.ndarray, lines: np.ndarray) -> Tuple[int, float]:
    px = np.empty(MAX_VERTICES)
    py = np.empty(MAX_VERTICES)
    p_in = np.empty(MAX_VERTICES, dtype=np.int64)
    p_out = np.empty(MAX_VERTICES, dtype=np.int64)
    qx = np.empty(MAX_VERTICES)
    qy = np.empty(MAX_VERTICES)
    q_in = np.empty(MAX_VERTICES, dtype=np.int64)
    q_out = np.empty(MAX_VERTICES, dtype=np.int64)

    n = 4
    for i in range(4):
        px[i] = a[i, 0]
        py[i] = a[i, 1]
        p_in[i] = (i + 3) % 4
        p_out[i] = i

    for j in range(4):
        sx = b[j, 0]
        sy = b[j, 1]
        dx = b[(j + 1) % 4, 0] - sx
        dy = b[(j + 1) % 4, 1] - sy
        norm = np.sqrt(dx * dx + dy * dy)
        m = 0
        for k in range(n):
            nxt = (k + 1) % n
            dc = (dx * (py[k] - sy) - dy * (px[k] - sx)) / norm
            dn = (dx * (py[nxt] - sy) - dy * (px[nxt] - sx)) / norm
            c_in = dc >= -COLLINEAR_TOLERANCE
            n_in = dn >= -COLLINEAR_TOLERANCE
            if c_in != n_in and m < MAX_VERTICES:
                t = dc / (dc - dn)
                qx[m] = px[k] + t * (px[nxt] - px[k])
                qy[m] = py[k] + t * (py[nxt] - py[k])
                if c_in:
                    q_in[m] = p_out[k]
                    q_out[m] = 4 + j
                else:
                    q_in[m] = 4 + j
                    q_out[m] = p_in[nxt]
                m += 1
            if n_in and m < MAX_VERTICES:
                qx[m] = px[nxt]
                qy[m] = py[nxt]
                q_in[m] = p_in[nxt]
                q_out[m] = p_out[nxt]
                m += 1
        n = m
        for k in range(n):
            px[k] = qx[k]
            py[k] = qy[k]
            p_in[k] = q_in[k]
            p_out[k] = q_out[k]
        if n == 0:
            break

    area = 0.0
    for k in range(n):
        nxt = (k + 1) % n
        area += px[k] * py[nxt] - px[nxt] * py[k]
    area = 0.5 * area

    if n < 3 or area < SLIVER_AREA:
        return 0, 0.0

    for k in range(n):
        lines[k, 0] = p_in[k]
        lines[k, 1] = p_out[k]
    return n, area


@njit(cache=True)
def _clip_batch(corners_a: np.ndarray, corners_b: np.ndarray, lines: np.ndarray, counts: np.ndarray,
                areas: np.ndarray) -> None:
    for i in range(corners_a.shape[0]):
        n, area = _clip_pair(corners_a[i], corners_b[i], lines[i])
        counts[i] = n
        areas[i] = area


def clip_footprints(corners_a: np.ndarray, corners_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Intersects aligned pairs of counter-clockwise quadrilaterals.

    Parameters
    ----------
    corners_a : np.ndarray
        (M, 4, 2) corners of the first footprints
    corners_b : np.ndarray
        (M, 4, 2) corners of the second footprints

    Returns
    -------
    clip_footprints : Tuple[np.ndarray, np.ndarray, np.ndarray]
        the (M, MAX_VERTICES, 2) line pairs of the intersection vertices, the (M,) vertex counts (0 for empty
        intersections) and the (M,) intersection areas
    """
    corners_a = np.ascontiguousarray(corners_a, dtype=np.float64).reshape(-1, 4, 2)
    corners_b = np.ascontiguousarray(corners_b, dtype=np.float64).reshape(-1, 4, 2)
    m = corners_a.shape[0]
    lines = np.zeros((m, MAX_VERTICES, 2), dtype=np.int64)
    # unused slots point at two adjacent edges of A, which always intersect
    lines[:, :, 1] = 1
    counts = np.zeros(m, dtype=np.int64)
    areas = np.zeros(m)
    if m:
        _clip_batch(corners_a, corners_b, lines, counts, areas)
    return lines, counts, areas


def intersection_vertices(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """Returns the counter-clockwise (n, 2) vertices of the intersection of two footprints (n = 0 if empty)."""
    lines, counts, _ = clip_footprints(corners_a[None], corners_b[None])
    corners = np.concatenate([corners_a, corners_b])
    n = counts[0]
    return _line_points(corners, lines[0, :n])


def _line_points(corners: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    start = pairs
    end = (pairs + 1) % 4 + 4 * (pairs >= 4)
    p1, p2 = corners[start[:, 0]], corners[end[:, 0]]
    p3, p4 = corners[start[:, 1]], corners[end[:, 1]]
    d1, d2 = p2 - p1, p4 - p3
    denominator = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    t = ((p3[:, 0] - p1[:, 0]) * d2[:, 1] - (p3[:, 1] - p1[:, 1]) * d2[:, 0]) / denominator
    return p1 + t[:, None] * d1


class ConvexPolygon2D:
    """
    A convex polygon with counter-clockwise vertices. Polygons with fewer than three distinct vertices or zero area
    are empty.

    Parameters
    ----------
    vertices : np.ndarray
        (n, 2) counter-clockwise vertices
    """
    __vertices: np.ndarray

    def __init__(self, vertices: np.ndarray):
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
        if vertices.shape[0]:
            distinct = np.linalg.norm(vertices - np.roll(vertices, -1, axis=0), axis=1) > COLLINEAR_TOLERANCE
            vertices = vertices[distinct] if distinct.any() else vertices[:1]
        self.__vertices = vertices

    @classmethod
    def intersection(cls, corners_a: np.ndarray, corners_b: np.ndarray) -> 'ConvexPolygon2D':
        return cls(intersection_vertices(np.asarray(corners_a, dtype=np.float64),
                                         np.asarray(corners_b, dtype=np.float64)))

    def vertices(self) -> np.ndarray:
        return self.__vertices

    def area(self) -> float:
        v = self.__vertices
        if v.shape[0] < 3:
            return 0.0
        nxt = np.roll(v, -1, axis=0)
        return float(0.5 * np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))

    def is_empty(self) -> bool:
        return self.__vertices.shape[0] < 3 or self.area() < SLIVER_AREA

    def __len__(self) -> int:
        return self.__vertices.shape[0]
