"""Triangulated rectangles, P1 functions with zero trace, and per-element quadrature.

Only piecewise-linear elements are supported.  The gradient of a P1 function
is constant on each triangle, so every gradient-dependent integrand is
evaluated exactly per element and only the coefficient fields (exponents,
weights) go through quadrature.

JSON mesh schema::

    {"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}

Optional keys ``"boundary"`` (list of bools, one per vertex) and
``"rect"`` (``[x0, y0, width, height]``) are written by :meth:`Mesh.to_json`
and honoured on import.  When ``"boundary"`` is missing it is recomputed
from the edges that belong to a single triangle.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# symmetric 6-point rule, exact for total degree <= 4
_A1, _W1 = 0.44594849091596488632, 0.22338158967801146570
_A2, _W2 = 0.09157621350977074346, 0.10995174365532186764
QUAD_BARY = np.array([
    [_A1, _A1, 1.0 - 2.0 * _A1],
    [_A1, 1.0 - 2.0 * _A1, _A1],
    [1.0 - 2.0 * _A1, _A1, _A1],
    [_A2, _A2, 1.0 - 2.0 * _A2],
    [_A2, 1.0 - 2.0 * _A2, _A2],
    [1.0 - 2.0 * _A2, _A2, _A2],
])
QUAD_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

MAX_TRIANGLES = 20_000_000


class MeshError(ValueError):
    pass


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Mesh:
    """Immutable triangle mesh with cached geometry.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    boundary : (nv,) bool array
    areas : (nt,) element areas
    basis_grads : (nt, 3, 2) gradients of the three hat functions per element
    qpoints : (nt, 6, 2) quadrature points
    qweights : (nt, 6) quadrature weights (already multiplied by the area)
    rect : (x0, y0, width, height) when the mesh tiles an axis-aligned rectangle
    """

    def __init__(self, vertices, triangles, boundary=None, rect=None):
        v = np.asarray(vertices, dtype=float)
        t = np.array(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise MeshError("vertices must have shape (nv, 2)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError("triangles must have shape (nt, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")

        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        flip = det < 0
        if flip.any():
            t[flip] = t[flip][:, [0, 2, 1]]
            det = np.abs(det)
        if np.any(det <= 0):
            raise MeshError("degenerate triangle (zero area)")

        self.vertices = _frozen(v)
        self.triangles = _frozen(t)
        self.areas = _frozen(0.5 * det)

        if boundary is None:
            boundary = _boundary_from_edges(len(v), t)
        boundary = np.asarray(boundary, dtype=bool)
        if boundary.shape != (len(v),):
            raise MeshError("boundary flags must have one entry per vertex")
        self.boundary = _frozen(boundary)
        self.interior = _frozen(np.flatnonzero(~boundary))
        self.rect = None if rect is None else tuple(float(r) for r in rect)

        # hat-function gradients: grad(lambda_i) = rot(opposite edge) / (2 area)
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        inv = 1.0 / det
        g = np.empty((len(t), 3, 2))
        for i, (a, b) in enumerate(((p1, p2), (p2, p0), (p0, p1))):
            g[:, i, 0] = (a[:, 1] - b[:, 1]) * inv
            g[:, i, 1] = (b[:, 0] - a[:, 0]) * inv
        self.basis_grads = _frozen(g)

        corners = v[t]  # (nt, 3, 2)
        self.qpoints = _frozen(np.einsum("qk,tkd->tqd", QUAD_BARY, corners))
        self.qweights = _frozen(self.areas[:, None] * QUAD_WEIGHTS[None, :])

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def h(self):
        """Longest edge length."""
        c = self.vertices[self.triangles]
        edges = c[:, [1, 2, 0]] - c
        return float(np.sqrt((edges ** 2).sum(-1)).max())

    @property
    def total_area(self):
        return float(self.areas.sum())

    def bounding_box(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def to_dict(self):
        d = {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": self.boundary.tolist(),
        }
        if self.rect is not None:
            d["rect"] = list(self.rect)
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(d["vertices"], d["triangles"], d.get("boundary"), d.get("rect"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _boundary_from_edges(nv, tri):
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    flags = np.zeros(nv, dtype=bool)
    flags[uniq[counts == 1].ravel()] = True
    return flags


def build_rect_mesh(nx, ny, width=1.0, height=1.0, origin=(0.0, 0.0)):
    """Structured triangulation of ``[x0, x0+width] x [y0, y0+height]``.

    Each of the ``nx * ny`` cells is split along its lower-left to
    upper-right diagonal, giving ``2 * nx * ny`` triangles.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")
    if not (width > 0 and height > 0):
        raise MeshError("width and height must be positive")
    if 2 * nx * ny > MAX_TRIANGLES:
        raise MeshError(f"mesh too large: {2 * nx * ny} triangles")
    x0, y0 = origin
    xs = x0 + width * np.arange(nx + 1) / nx
    ys = y0 + height * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    a = (j * (nx + 1) + i).ravel()
    b, c, d = a + 1, a + nx + 2, a + nx + 1
    tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([a, b, c])
    tris[1::2] = np.column_stack([a, c, d])

    ii = np.arange(nx + 1)[None, :]
    jj = np.arange(ny + 1)[:, None]
    bnd = ((ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)).ravel()
    return Mesh(verts, tris, bnd, rect=(x0, y0, width, height))


def rect_mesh(level, width=1.0, height=1.0, origin=(0.0, 0.0)):
    """Level-``k`` mesh: ``2**k`` cells along each side."""
    n = 2 ** int(level)
    return build_rect_mesh(n, n, width, height, origin)


def refine(mesh):
    """Uniform red refinement: every triangle is split into four."""
    v = mesh.vertices
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    nv = len(v)
    mids = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    nt = len(t)
    m01, m12, m20 = (nv + inv[k * nt:(k + 1) * nt] for k in range(3))
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    new_t = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    mid_bnd = mesh.boundary[uniq[:, 0]] & mesh.boundary[uniq[:, 1]]
    # an edge joining two boundary vertices can still be interior (a chord);
    # recompute from topology and keep old flags for original vertices
    new_v = np.vstack([v, mids])
    topo = _boundary_from_edges(len(new_v), new_t)
    bnd = np.concatenate([mesh.boundary, mid_bnd & topo[nv:]])
    return Mesh(new_v, new_t, bnd, rect=mesh.rect)


def inradius(mesh):
    """Radius of the largest inscribed disc and its centre.

    Exact for rectangles.  A mesh without rectangle metadata is accepted when
    its area equals that of its bounding box (it then tiles the box).
    """
    if mesh.rect is not None:
        x0, y0, w, h = mesh.rect
    else:
        xa, xb, ya, yb = mesh.bounding_box()
        w, h = xb - xa, yb - ya
        if abs(mesh.total_area - w * h) > 1e-12 * w * h:
            raise MeshError("inradius is only implemented for rectangular domains")
        x0, y0 = xa, ya
    R = 0.5 * min(w, h)
    return R, np.array([x0 + 0.5 * w, y0 + 0.5 * h])


@dataclass
class DiscreteFunction:
    """Nodal values of a P1 function on ``mesh``.

    With ``dirichlet_zero`` set, every boundary value must be exactly zero.
    """

    mesh: Mesh
    values: np.ndarray
    dirichlet_zero: bool = True
    _grad: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise MeshError(
                f"expected {self.mesh.n_vertices} nodal values, got shape {self.values.shape}")
        if self.dirichlet_zero and np.any(self.values[self.mesh.boundary] != 0.0):
            raise MeshError("boundary values must be zero when dirichlet_zero is set")

    def at_quadrature(self):
        """Values at the quadrature points, shape (nt, 6)."""
        return self.values[self.mesh.triangles] @ QUAD_BARY.T

    def gradient(self):
        if self._grad is None:
            self._grad = gradient_of(self.mesh, self.values)
        return self._grad

    def grad_norm(self):
        g = self.gradient()
        return np.sqrt(g[:, 0] ** 2 + g[:, 1] ** 2)

    def __neg__(self):
        return DiscreteFunction(self.mesh, -self.values, self.dirichlet_zero)

    def scaled(self, c):
        return DiscreteFunction(self.mesh, c * self.values, self.dirichlet_zero)


def gradient_of(mesh, values):
    """Per-element constant gradient of the P1 interpolant, shape (nt, 2)."""
    return np.einsum("tk,tkd->td", np.asarray(values)[mesh.triangles], mesh.basis_grads)


def gradient(u):
    return u.gradient()


def interpolate(mesh, fn, dirichlet_zero=True):
    """Nodal interpolant of ``fn(points) -> values``; boundary zeroed if requested."""
    vals = np.asarray(fn(mesh.vertices), dtype=float).copy()
    if dirichlet_zero:
        vals[mesh.boundary] = 0.0
    return DiscreteFunction(mesh, vals, dirichlet_zero)


def zero_boundary(mesh, values):
    out = np.array(values, dtype=float)
    out[mesh.boundary] = 0.0
    return out


def zero_function(mesh):
    return DiscreteFunction(mesh, np.zeros(mesh.n_vertices))
