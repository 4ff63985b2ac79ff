"""Discrete oriented surfaces as CW complexes.

A surface bundles integer boundary operators d0, d1, diagonal positive
mass matrices M0/M1/M2 and an orthogonal complex structure J1 on
1-cochains (the discrete stand-in for the Hodge star on one-forms).
Faces are stored as closed signed edge cycles; the base vertex of a face
is the starting vertex of its cycle, which fixes where holonomies and
transported face values live.

Conventions (used consistently everywhere downstream):
  * d0 row of edge e = head - tail,
  * faces are traversed in the stored cyclic order,
  * edge-based quantities live at the edge tail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidMeshError,
    MeshFormatError,
    NoComplexStructureError,
    TopologyError,
)

J1_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteSurface:
    """CW complex with mass matrices and a complex structure on 1-cochains."""

    vertex_count: int
    edges: np.ndarray  # (E, 2) int: [tail, head]
    faces: tuple  # tuple of tuples of (edge_index, sign)
    face_base: np.ndarray  # (F,) int: starting vertex of each face cycle
    d0: np.ndarray  # (E, V) int
    d1: np.ndarray  # (F, E) int
    M0: np.ndarray  # (V,) positive diagonal
    M1: np.ndarray  # (E,) positive diagonal
    M2: np.ndarray  # (F,) positive diagonal
    J1: np.ndarray  # (E, E) real, J1^2 = -I, M1-orthogonal

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    @property
    def genus(self) -> int:
        return 1 - self.euler_characteristic // 2

    def j1_apply(self, values: np.ndarray) -> np.ndarray:
        """Apply J1 on the edge index of a (possibly matrix-valued) 1-cochain."""
        return np.einsum("ef,f...->e...", self.J1, values)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _face_path_vertices(edges: np.ndarray, cycle) -> list[int]:
    """Vertices visited by the signed cycle, checking consistency.

    Returns [v0, v1, ..., vk] with vk == v0; raises TopologyError if the
    steps do not chain up or the path does not close.
    """
    verts = []
    for idx, (e, s) in enumerate(cycle):
        tail, head = int(edges[e, 0]), int(edges[e, 1])
        enter, leave = (tail, head) if s > 0 else (head, tail)
        if idx == 0:
            verts.append(enter)
        elif verts[-1] != enter:
            raise TopologyError(
                f"face step {idx}: path is at vertex {verts[-1]} but edge "
                f"{e}{'+' if s > 0 else '-'} starts at vertex {enter}"
            )
        verts.append(leave)
    if verts[0] != verts[-1]:
        raise TopologyError(
            f"face cycle does not close: starts at {verts[0]}, ends at {verts[-1]}"
        )
    return verts


def _rotation_candidate(edge_count: int, faces) -> np.ndarray:
    """Skew candidate for J1 from the rotation system of the faces.

    Each consecutive boundary pair (e_i, e_{i+1}) contributes a signed
    "rotate one step around the face" entry; the skew part of the total
    is a geometry-flavoured candidate whose orthogonal factor defines J1.
    """
    k = np.zeros((edge_count, edge_count))
    for cycle in faces:
        m = len(cycle)
        for i in range(m):
            e1, s1 = cycle[i]
            e2, s2 = cycle[(i + 1) % m]
            k[e2, e1] += s1 * s2
    return (k - k.T) / 2.0


def _complex_structure_from_candidate(k: np.ndarray, m1: np.ndarray) -> np.ndarray:
    """M1-orthogonal complex structure closest to a skew candidate.

    Works in the M1^(1/2)-rescaled coordinates where the target is a plain
    orthogonal J with J^2 = -I.  The rotation planes of the candidate are
    kept (its orthogonal polar factor); the kernel, which is always
    even-dimensional, is paired off deterministically.
    """
    e = k.shape[0]
    s = np.sqrt(m1)
    kt = k / np.outer(s, s)
    kt = (kt - kt.T) / 2.0
    w, z = np.linalg.eigh(1j * kt)
    scale = max(float(np.max(np.abs(w))), 1.0)
    tol = 1e-10 * scale
    j = np.zeros((e, e))
    kernel_cols = []
    for i in range(e):
        if w[i] > tol:
            # K u = mu v, K v = -mu u on the plane spanned by (u, v).
            zi = z[:, i]
            u = zi.real
            v = zi.imag
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu < 1e-13 or nv < 1e-13:
                kernel_cols.append(zi)
                continue
            u = u / nu
            v = v / nv
            j += np.outer(v, u) - np.outer(u, v)
        elif abs(w[i]) <= tol:
            kernel_cols.append(z[:, i])
    if kernel_cols:
        # Real orthonormal basis of the kernel, paired in deterministic order.
        raw = []
        for zi in kernel_cols:
            raw.append(zi.real)
            raw.append(zi.imag)
        basis = []
        for vct in raw:
            for b in basis:
                vct = vct - np.dot(b, vct) * b
            nrm = np.linalg.norm(vct)
            if nrm > 1e-10:
                basis.append(vct / nrm)
        if len(basis) % 2 != 0:
            raise NoComplexStructureError(
                "candidate kernel is odd-dimensional; no complex structure"
            )
        for a in range(0, len(basis), 2):
            u, v = basis[a], basis[a + 1]
            j += np.outer(v, u) - np.outer(u, v)
    residual = float(np.max(np.abs(j @ j + np.eye(e))))
    if residual > J1_TOL:
        raise NoComplexStructureError(
            f"complex structure construction failed: ||J^2 + I|| = {residual:.3e}"
        )
    return (j * s[None, :]) / s[:, None]  # back to plain coordinates


def _j1_from_pairs(pairs, edge_count: int, m1: np.ndarray) -> np.ndarray:
    """Exact block-rotation J1 from a perfect matching of edges.

    Pair (e, f) means J1 sends the e-component to the f-slot and the
    f-component to minus the e-slot, exactly the intersection-form rotation
    on a symplectic edge basis.  Requires M1[e] == M1[f] per pair.
    """
    seen = np.zeros(edge_count, dtype=bool)
    j = np.zeros((edge_count, edge_count))
    for e, f in pairs:
        if seen[e] or seen[f] or e == f:
            raise InvalidMeshError(f"j_pairs is not a perfect matching at ({e},{f})")
        if abs(m1[e] - m1[f]) > 1e-15 * max(m1[e], m1[f]):
            raise InvalidMeshError(
                f"j_pairs ({e},{f}): paired edges must carry equal M1 weights"
            )
        seen[e] = seen[f] = True
        j[f, e] = 1.0
        j[e, f] = -1.0
    if not np.all(seen):
        raise InvalidMeshError("j_pairs does not cover every edge")
    return j


def build_cw_complex(
    vertex_count: int,
    edges,
    faces,
    weights: dict | None = None,
    j_pairs=None,
) -> DiscreteSurface:
    """Assemble and validate a closed oriented surface.

    ``edges`` is a list of (tail, head); ``faces`` a list of cycles, each a
    list of (edge_index, sign) with sign +-1.  Every edge must appear in the
    face boundaries exactly twice with opposite orientation.  ``weights``
    may supply diagonal masses {"M0": [...], "M1": [...], "M2": [...]}
    (identity by default).  ``j_pairs``, when given, fixes J1 exactly as a
    block rotation on the paired edges; otherwise J1 is built from the
    face-rotation candidate by polar orthogonalization.
    """
    edges = np.asarray(edges, dtype=int)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise InvalidMeshError("edges must be a list of (tail, head) pairs")
    ne = edges.shape[0]
    nv = int(vertex_count)
    if nv < 1:
        raise InvalidMeshError("vertex_count must be >= 1")
    if np.any(edges < 0) or np.any(edges >= nv):
        raise InvalidMeshError("edge endpoint out of range")
    if ne % 2 != 0:
        raise NoComplexStructureError(
            f"|E| = {ne} is odd: no complex structure on 1-cochains exists"
        )

    faces = tuple(tuple((int(e), int(s)) for e, s in cycle) for cycle in faces)
    nf = len(faces)
    for cycle in faces:
        for e, s in cycle:
            if not 0 <= e < ne:
                raise InvalidMeshError(f"face references edge {e} out of range")
            if s not in (1, -1):
                raise InvalidMeshError(f"face orientation sign must be +-1, got {s}")

    # Closed oriented surface: each edge used exactly twice, net orientation 0.
    use_count = np.zeros(ne, dtype=int)
    use_sign = np.zeros(ne, dtype=int)
    for cycle in faces:
        for e, s in cycle:
            use_count[e] += 1
            use_sign[e] += s
    bad = np.nonzero((use_count != 2) | (use_sign != 0))[0]
    if bad.size:
        e = int(bad[0])
        raise TopologyError(
            f"edge {e} appears {use_count[e]} time(s) with net orientation "
            f"{use_sign[e]}; a closed oriented surface needs exactly two "
            f"opposite traversals"
        )

    face_base = np.zeros(nf, dtype=int)
    for i, cycle in enumerate(faces):
        verts = _face_path_vertices(edges, cycle)
        face_base[i] = verts[0]

    d0 = np.zeros((ne, nv), dtype=int)
    for e in range(ne):
        t, h = edges[e]
        d0[e, h] += 1
        d0[e, t] -= 1
    d1 = np.zeros((nf, ne), dtype=int)
    for i, cycle in enumerate(faces):
        for e, s in cycle:
            d1[i, e] += s
    if np.any(d1 @ d0 != 0):
        raise TopologyError("d1 . d0 != 0: boundary operators are inconsistent")

    chi = nv - ne + nf
    if chi % 2 != 0:
        raise TopologyError(f"Euler characteristic {chi} is odd: not a closed surface")
    genus = 1 - chi // 2
    if genus < 1:
        raise InvalidMeshError(f"genus {genus} < 1 is not supported")

    weights = weights or {}

    def _mass(key, count):
        if key in weights:
            m = np.asarray(weights[key], dtype=float)
            if m.shape != (count,):
                raise InvalidMeshError(f"{key} must have {count} diagonal entries")
            if np.any(m <= 0):
                raise InvalidMeshError(f"{key} must be positive")
            return m
        return np.ones(count)

    m0 = _mass("M0", nv)
    m1 = _mass("M1", ne)
    m2 = _mass("M2", nf)

    if j_pairs is not None:
        j1 = _j1_from_pairs(j_pairs, ne, m1)
    else:
        j1 = _complex_structure_from_candidate(_rotation_candidate(ne, faces), m1)

    surf = DiscreteSurface(
        vertex_count=nv,
        edges=_freeze(edges),
        faces=faces,
        face_base=_freeze(face_base),
        d0=_freeze(d0),
        d1=_freeze(d1),
        M0=_freeze(m0),
        M1=_freeze(m1),
        M2=_freeze(m2),
        J1=_freeze(j1),
    )
    diag = validate(surf)
    if not diag["ok"]:
        raise InvalidMeshError(f"constructed surface violates invariants: {diag}")
    return surf


def build_torus_grid(nx: int, ny: int) -> DiscreteSurface:
    """Periodic nx x ny grid on the torus with the site-paired J1.

    Edge layout: x-edges first (id i*ny + j, from (i,j) to (i+1,j)), then
    y-edges (id nx*ny + i*ny + j, from (i,j) to (i,j+1)).  J1 rotates the
    (x, y) edge pair at each grid site: x -> y slot, y -> -x slot.  All
    masses are identity (unit cells).
    """
    if nx < 2 or ny < 2:
        raise InvalidMeshError(f"torus grid needs nx, ny >= 2, got {nx}x{ny}")

    def v(i, j):
        return (i % nx) * ny + (j % ny)

    def ex(i, j):
        return (i % nx) * ny + (j % ny)

    def ey(i, j):
        return nx * ny + (i % nx) * ny + (j % ny)

    edges = []
    for i in range(nx):
        for j in range(ny):
            edges.append((v(i, j), v(i + 1, j)))
    for i in range(nx):
        for j in range(ny):
            edges.append((v(i, j), v(i, j + 1)))

    faces = []
    for i in range(nx):
        for j in range(ny):
            faces.append(
                [
                    (ex(i, j), 1),
                    (ey(i + 1, j), 1),
                    (ex(i, j + 1), -1),
                    (ey(i, j), -1),
                ]
            )

    pairs = [(ex(i, j), ey(i, j)) for i in range(nx) for j in range(ny)]
    return build_cw_complex(nx * ny, edges, faces, j_pairs=pairs)


def build_octmin() -> DiscreteSurface:
    """Minimal genus-2 surface: one vertex, four loops, one octagon.

    The octagon boundary word is a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 and
    J1 is the intersection-form rotation a1 -> b1, b1 -> -a1, a2 -> b2,
    b2 -> -a2.
    """
    cycle = [(0, 1), (1, 1), (0, -1), (1, -1), (2, 1), (3, 1), (2, -1), (3, -1)]
    return build_cw_complex(
        1, [(0, 0)] * 4, [cycle], j_pairs=[(0, 1), (2, 3)]
    )


def validate(surface: DiscreteSurface) -> dict:
    """Residuals of all structural invariants; purely diagnostic."""
    ne = surface.edge_count
    d1d0 = float(np.max(np.abs(surface.d1 @ surface.d0))) if ne else 0.0
    mass_min = float(
        min(surface.M0.min(), surface.M1.min(), surface.M2.min())
    )
    j1 = surface.J1
    jsq = float(np.max(np.abs(j1 @ j1 + np.eye(ne))))
    m1 = np.diag(surface.M1)
    orth = float(np.max(np.abs(j1.T @ m1 @ j1 - m1)))
    m1j1 = m1 @ j1
    skew = float(np.max(np.abs(m1j1 + m1j1.T)))
    chi = surface.euler_characteristic
    ok = (
        d1d0 == 0.0
        and mass_min > 0.0
        and jsq <= J1_TOL
        and orth <= J1_TOL
        and skew <= J1_TOL
        and chi % 2 == 0
        and surface.genus >= 1
    )
    return {
        "d1d0_max": d1d0,
        "mass_min": mass_min,
        "j1_square_residual": jsq,
        "j1_orthogonality_residual": orth,
        "m1j1_skew_residual": skew,
        "euler_characteristic": chi,
        "genus": surface.genus,
        "ok": bool(ok),
    }


def oneform_projector(surface: DiscreteSurface) -> np.ndarray:
    """(1,0)-projector P = (I - i J1)/2 on complexified 1-cochains."""
    ne = surface.edge_count
    return (np.eye(ne) - 1j * surface.J1) / 2.0


def write_mesh(surface: DiscreteSurface, path) -> None:
    """Write the mesh file (JSON document, 1-based signed face entries)."""
    doc = {
        "vertices": surface.vertex_count,
        "edges": [[int(t), int(h)] for t, h in surface.edges],
        "faces": [
            [int(s * (e + 1)) for e, s in cycle] for cycle in surface.faces
        ],
        "weights": {
            "M0": [float(x) for x in surface.M0],
            "M1": [float(x) for x in surface.M1],
            "M2": [float(x) for x in surface.M2],
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def read_mesh(path) -> DiscreteSurface:
    """Read a mesh file, rejecting malformed input with a position diagnostic.

    Face entries are 1-based signed integers: entry k traverses edge |k|-1
    with orientation sign(k).  An optional "j_pairs" field fixes J1.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshFormatError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    for key in ("vertices", "edges", "faces"):
        if key not in doc:
            raise MeshFormatError(f"{path}: missing required field '{key}'")
    faces = []
    for i, cycle in enumerate(doc["faces"]):
        steps = []
        for k in cycle:
            k = int(k)
            if k == 0:
                raise MeshFormatError(
                    f"{path}: faces[{i}]: zero is not a valid signed edge index"
                )
            steps.append((abs(k) - 1, 1 if k > 0 else -1))
        faces.append(steps)
    return build_cw_complex(
        int(doc["vertices"]),
        doc["edges"],
        faces,
        weights=doc.get("weights"),
        j_pairs=doc.get("j_pairs"),
    )
