"""Real coordinates for cochain spaces and dense operator assembly.

Coordinates are taken against the orthonormal u(n) trace basis and are
premultiplied by sqrt(mass), so the vec maps are isometries from the
weighted L2 inner products to the standard dot product.  Assembled
matrices of formally (anti)self-adjoint operators are then plain
(anti)symmetric, which keeps every algebra test a pure matrix check.
"""

from __future__ import annotations

import numpy as np

from . import matalg
from .gaugefield import TangentPair
from .surface import DiscreteSurface


def _coeffs(basis, m: np.ndarray) -> np.ndarray:
    return np.array([matalg.trace_inner(b, m) for b in basis])


def _from_coeffs(basis, c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(basis[0])
    for b, x in zip(basis, c):
        out = out + x * b
    return out


class CochainCoords:
    """vec/unvec maps for the cochain spaces of one surface at rank n."""

    def __init__(self, surface: DiscreteSurface, n: int):
        self.surface = surface
        self.n = n
        self.basis = matalg.skew_basis(n)
        self.nb = n * n
        self.dim0 = surface.vertex_count * self.nb
        self.dim1 = surface.edge_count * self.nb
        self.dim2 = surface.face_count * self.nb
        self.pair_dim = 2 * self.dim1
        self._s0 = np.sqrt(surface.M0)
        self._s1 = np.sqrt(surface.M1)
        self._s2 = np.sqrt(surface.M2)

    # -- skew-valued cochains -------------------------------------------
    def _vec(self, values: np.ndarray, s: np.ndarray) -> np.ndarray:
        out = np.empty(values.shape[0] * self.nb)
        for i in range(values.shape[0]):
            out[i * self.nb : (i + 1) * self.nb] = s[i] * _coeffs(
                self.basis, values[i]
            )
        return out

    def _unvec(self, x: np.ndarray, s: np.ndarray, count: int) -> np.ndarray:
        out = np.zeros((count, self.n, self.n), dtype=complex)
        for i in range(count):
            out[i] = _from_coeffs(self.basis, x[i * self.nb : (i + 1) * self.nb] / s[i])
        return out

    def vec0(self, xi: np.ndarray) -> np.ndarray:
        return self._vec(xi, self._s0)

    def unvec0(self, x: np.ndarray) -> np.ndarray:
        return self._unvec(x, self._s0, self.surface.vertex_count)

    def vec1(self, a: np.ndarray) -> np.ndarray:
        return self._vec(a, self._s1)

    def unvec1(self, x: np.ndarray) -> np.ndarray:
        return self._unvec(x, self._s1, self.surface.edge_count)

    def vec2(self, w: np.ndarray) -> np.ndarray:
        return self._vec(w, self._s2)

    def vec_pair(self, tp: TangentPair) -> np.ndarray:
        return np.concatenate([self.vec1(tp.a), self.vec1(tp.psi)])

    def unvec_pair(self, x: np.ndarray) -> TangentPair:
        return TangentPair(self.unvec1(x[: self.dim1]), self.unvec1(x[self.dim1 :]))

    # -- End-valued complex cochains (2 n^2 real coordinates per cell) ---
    def vec_end(self, values: np.ndarray, s: np.ndarray | None = None) -> np.ndarray:
        """Real coordinates of an End-valued complex cochain.

        Decomposes each matrix as (skew) + i (skew) against the trace basis.
        """
        count = values.shape[0]
        if s is None:
            s = np.ones(count)
        out = np.empty(count * 2 * self.nb)
        for i in range(count):
            m = values[i]
            sk = (m - m.conj().T) / 2.0
            hm = (m + m.conj().T) / 2.0  # = i * skew
            block = np.concatenate(
                [_coeffs(self.basis, sk), _coeffs(self.basis, -1j * hm)]
            )
            out[i * 2 * self.nb : (i + 1) * 2 * self.nb] = s[i] * block
        return out

    def unvec_end(
        self, x: np.ndarray, count: int, s: np.ndarray | None = None
    ) -> np.ndarray:
        if s is None:
            s = np.ones(count)
        out = np.zeros((count, self.n, self.n), dtype=complex)
        for i in range(count):
            block = x[i * 2 * self.nb : (i + 1) * 2 * self.nb] / s[i]
            sk = _from_coeffs(self.basis, block[: self.nb])
            hk = _from_coeffs(self.basis, block[self.nb :])
            out[i] = sk + 1j * hk
        return out

    def vec_end1(self, values: np.ndarray) -> np.ndarray:
        return self.vec_end(values, self._s1)

    def unvec_end1(self, x: np.ndarray) -> np.ndarray:
        return self.unvec_end(x, self.surface.edge_count, self._s1)

    def vec_end2(self, values: np.ndarray) -> np.ndarray:
        return self.vec_end(values, self._s2)

    # -- basis iterators -------------------------------------------------
    def basis_pairs(self):
        """Tangent-pair basis vectors (unit vectors in pair coordinates)."""
        for k in range(self.pair_dim):
            x = np.zeros(self.pair_dim)
            x[k] = 1.0
            yield self.unvec_pair(x)

    def basis_vertex(self):
        for k in range(self.dim0):
            x = np.zeros(self.dim0)
            x[k] = 1.0
            yield self.unvec0(x)


def assemble(apply_fn, in_dim: int, unvec_in, vec_out) -> np.ndarray:
    """Dense matrix of a real-linear map by applying it to basis vectors."""
    cols = []
    for k in range(in_dim):
        x = np.zeros(in_dim)
        x[k] = 1.0
        cols.append(vec_out(apply_fn(unvec_in(x))))
    return np.column_stack(cols)


def center_complement_basis(coords: CochainCoords) -> np.ndarray:
    """Orthonormal basis (columns) of the M0-orthocomplement of i*Id.

    The centre direction is the constant 0-cochain i*Id; its complement is
    computed by SVD, which is deterministic.
    """
    surf = coords.surface
    n = coords.n
    center = np.zeros((surf.vertex_count, n, n), dtype=complex)
    for v in range(surf.vertex_count):
        center[v] = 1j * np.eye(n)
    c = coords.vec0(center)
    c = c / np.linalg.norm(c)
    # Null space of the row vector c^T.
    _, _, vt = np.linalg.svd(c[None, :])
    return vt[1:].T  # (dim0, dim0-1)
