"""Connections as unitary link fields, Higgs cochains and their calculus.

A connection assigns a unitary transport matrix to every oriented edge
(transport of the reversed edge is the inverse, i.e. the dagger, so that
invariant holds exactly).  Field states pair a connection with a
skew-hermitian 1-cochain phi.  The affine chart around a connection is
multiplicative, U_e -> exp(a_e) U_e with a_e based at the edge tail, so
flatness, the gauge action and chart round-trips are exact.

Covariant face operations walk the face cycle and parallel-transport every
contribution to the face base vertex; with that convention
covariant_d1(covariant_d0(xi)) telescopes to Ad(holonomy) xi - xi exactly,
hence vanishes identically on flat connections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import matalg
from .errors import BranchCutError, DimensionMismatchError
from .surface import DiscreteSurface, oneform_projector


@dataclass(frozen=True)
class Connection:
    """Unitary parallel transport per oriented edge of a surface."""

    surface: DiscreteSurface
    transport: np.ndarray  # (E, n, n) complex, unitary per edge

    @property
    def rank(self) -> int:
        return self.transport.shape[1]


@dataclass(frozen=True)
class FieldState:
    """Pair (connection, skew-hermitian 1-cochain phi)."""

    conn: Connection
    phi: np.ndarray  # (E, n, n) complex, skew-hermitian per edge

    @property
    def surface(self) -> DiscreteSurface:
        return self.conn.surface

    @property
    def rank(self) -> int:
        return self.conn.rank


@dataclass(frozen=True)
class TangentPair:
    """Tangent vector (a, psi): two skew-hermitian valued 1-cochains."""

    a: np.ndarray
    psi: np.ndarray


def _check_rank(conn: Connection, values: np.ndarray, kind: str) -> None:
    if values.shape[-1] != conn.rank or values.shape[-2] != conn.rank:
        raise DimensionMismatchError(
            f"{kind}: value rank {values.shape[-2:]} != connection rank {conn.rank}"
        )


def identity_connection(surface: DiscreteSurface, n: int) -> Connection:
    tr = np.broadcast_to(
        np.eye(n, dtype=complex), (surface.edge_count, n, n)
    ).copy()
    return Connection(surface, tr)


def zero_phi(surface: DiscreteSurface, n: int) -> np.ndarray:
    return np.zeros((surface.edge_count, n, n), dtype=complex)


def random_phi(
    rng: np.random.Generator, surface: DiscreteSurface, n: int, scale: float = 1.0
) -> np.ndarray:
    out = zero_phi(surface, n)
    for e in range(surface.edge_count):
        out[e] = matalg.random_skew(rng, n, scale)
    return out


def random_vertex_skew(
    rng: np.random.Generator, surface: DiscreteSurface, n: int, scale: float = 1.0
) -> np.ndarray:
    out = np.zeros((surface.vertex_count, n, n), dtype=complex)
    for v in range(surface.vertex_count):
        out[v] = matalg.random_skew(rng, n, scale)
    return out


def random_tangent(
    rng: np.random.Generator, surface: DiscreteSurface, n: int, scale: float = 1.0
) -> TangentPair:
    return TangentPair(
        random_phi(rng, surface, n, scale), random_phi(rng, surface, n, scale)
    )


def random_gauge(
    rng: np.random.Generator, surface: DiscreteSurface, n: int, scale: float = 1.0
) -> np.ndarray:
    out = np.zeros((surface.vertex_count, n, n), dtype=complex)
    for v in range(surface.vertex_count):
        out[v] = matalg.random_unitary(rng, n, scale)
    return out


def cochain_norm(weights: np.ndarray, values: np.ndarray) -> float:
    """Weighted L2 norm sqrt(sum_i w_i ||x_i||_F^2)."""
    sq = np.sum(np.abs(values) ** 2, axis=(-2, -1))
    return float(np.sqrt(np.sum(weights * sq)))


def cochain_inner(weights: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Weighted real L2 pairing sum_i w_i Re tr(x_i^dagger y_i)."""
    return float(np.sum(weights * np.sum(x.conj() * y, axis=(-2, -1)).real))


# ---------------------------------------------------------------------------
# Face walks


def face_steps(conn: Connection, f: int, values: np.ndarray):
    """Signed, base-transported contributions of ``values`` around face f.

    Returns (steps, holonomy): steps[i] is the i-th boundary edge value
    conjugated to the face base vertex with the traversal sign applied;
    holonomy is the ordered product of transports around the face, based
    at the face base.
    """
    surf = conn.surface
    n = conn.rank
    u = conn.transport
    p = np.eye(n, dtype=complex)
    steps = []
    for e, s in surf.faces[f]:
        if s > 0:
            steps.append(p @ values[e] @ p.conj().T)
            p = p @ u[e]
        else:
            p = p @ u[e].conj().T
            steps.append(-(p @ values[e] @ p.conj().T))
    return steps, p


def face_holonomy(conn: Connection, f: int) -> np.ndarray:
    surf = conn.surface
    n = conn.rank
    u = conn.transport
    p = np.eye(n, dtype=complex)
    for e, s in surf.faces[f]:
        p = p @ u[e] if s > 0 else p @ u[e].conj().T
    return p


def covariant_d0(conn: Connection, xi: np.ndarray) -> np.ndarray:
    """Covariant difference per edge: U_e xi_head U_e^-1 - xi_tail.

    Reduces to the signed incidence d0 for trivial transports at n = 1;
    kills central sections exactly.
    """
    _check_rank(conn, xi, "covariant_d0")
    surf = conn.surface
    u = conn.transport
    out = np.empty((surf.edge_count,) + xi.shape[1:], dtype=complex)
    for e in range(surf.edge_count):
        t, h = surf.edges[e]
        out[e] = u[e] @ xi[h] @ u[e].conj().T - xi[t]
    return out


def covariant_d1(conn: Connection, values: np.ndarray) -> np.ndarray:
    """Signed base-transported boundary sum per face.

    Works for any matrix-valued (real or complexified) 1-cochain.  On a
    flat connection covariant_d1(covariant_d0(xi)) = 0 exactly.
    """
    _check_rank(conn, values, "covariant_d1")
    surf = conn.surface
    n = conn.rank
    out = np.zeros((surf.face_count, n, n), dtype=complex)
    for f in range(surf.face_count):
        steps, _ = face_steps(conn, f, values)
        out[f] = sum(steps)
    return out


def curvature(conn: Connection) -> np.ndarray:
    """Principal log of each face holonomy (skew-hermitian per face)."""
    surf = conn.surface
    n = conn.rank
    out = np.zeros((surf.face_count, n, n), dtype=complex)
    for f in range(surf.face_count):
        try:
            out[f] = matalg.group_log(face_holonomy(conn, f), where=f)
        except BranchCutError as exc:
            raise BranchCutError(
                f"curvature: face {f} holonomy is on the log branch cut",
                where=f,
            ) from exc
    return out


# ---------------------------------------------------------------------------
# Gauge action


def gauge_act_connection(u: np.ndarray, conn: Connection) -> Connection:
    """transport_e -> u_tail^-1 transport_e u_head (right action)."""
    _check_rank(conn, u, "gauge_act")
    surf = conn.surface
    tr = np.empty_like(conn.transport)
    for e in range(surf.edge_count):
        t, h = surf.edges[e]
        tr[e] = u[t].conj().T @ conn.transport[e] @ u[h]
    return Connection(surf, tr)


def gauge_act(u: np.ndarray, state: FieldState) -> FieldState:
    """Right gauge action on a field state; phi conjugates at edge tails."""
    conn = gauge_act_connection(u, state.conn)
    surf = state.surface
    phi = np.empty_like(state.phi)
    for e in range(surf.edge_count):
        t = surf.edges[e, 0]
        phi[e] = u[t].conj().T @ state.phi[e] @ u[t]
    return FieldState(conn, phi)


def gauge_compose(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pointwise product u.v, the composite of acting by u then by v."""
    return np.einsum("vij,vjk->vik", u, v)


def gauge_exp(xi: np.ndarray) -> np.ndarray:
    """Pointwise exponential of a skew-hermitian 0-cochain."""
    out = np.empty_like(xi)
    for v in range(xi.shape[0]):
        out[v] = matalg.group_exp(xi[v])
    return out


# ---------------------------------------------------------------------------
# Infinitesimal action and adjoints


def d1_action(state: FieldState, xi: np.ndarray) -> TangentPair:
    """Linearized gauge action: (covariant_d0 xi, [phi_e, xi_tail])."""
    _check_rank(state.conn, xi, "d1_action")
    surf = state.surface
    a = covariant_d0(state.conn, xi)
    psi = np.empty_like(state.phi)
    for e in range(surf.edge_count):
        t = surf.edges[e, 0]
        psi[e] = state.phi[e] @ xi[t] - xi[t] @ state.phi[e]
    return TangentPair(a, psi)


def _covariant_d0_adjoint(conn: Connection, a: np.ndarray) -> np.ndarray:
    """Adjoint of covariant_d0 in the M0/M1 inner products."""
    surf = conn.surface
    n = conn.rank
    u = conn.transport
    out = np.zeros((surf.vertex_count, n, n), dtype=complex)
    m1 = surf.M1
    for e in range(surf.edge_count):
        t, h = surf.edges[e]
        out[h] += m1[e] * (u[e].conj().T @ a[e] @ u[e])
        out[t] -= m1[e] * a[e]
    return out / surf.M0[:, None, None]


def d1_l2_adjoint(state: FieldState, tp: TangentPair) -> np.ndarray:
    """Adjoint of d1_action for the positive L2 metric on pairs."""
    surf = state.surface
    out = _covariant_d0_adjoint(state.conn, tp.a)
    m1 = surf.M1
    for e in range(surf.edge_count):
        t = surf.edges[e, 0]
        # adjoint of xi -> [phi, xi] is psi -> [psi, phi]
        out[t] += (m1[e] / surf.M0[t]) * (
            tp.psi[e] @ state.phi[e] - state.phi[e] @ tp.psi[e]
        )
    return out


def d1_split_adjoint(state: FieldState, tp: TangentPair) -> np.ndarray:
    """Adjoint of d1_action for the split metric <a,b> - <psi,chi>."""
    flipped = TangentPair(tp.a, -tp.psi)
    return d1_l2_adjoint(state, flipped)


# ---------------------------------------------------------------------------
# Complexification bridge


def tau(values: np.ndarray) -> np.ndarray:
    """Cellwise conjugate transpose (the discrete form-and-matrix involution)."""
    return np.conjugate(np.swapaxes(values, -1, -2))


def phi_to_higgs(surface: DiscreteSurface, phi: np.ndarray) -> np.ndarray:
    """(1,0)-part Phi = (phi - i J1 phi)/2; satisfies J1 Phi = i Phi."""
    return (phi - 1j * surface.j1_apply(phi)) / 2.0


def higgs_to_phi(higgs: np.ndarray) -> np.ndarray:
    """Inverse bridge phi = Phi - Phi^* (cellwise dagger); exact round-trip."""
    return higgs - tau(higgs)


# ---------------------------------------------------------------------------
# Charts


def connection_plus(conn: Connection, a: np.ndarray, t: float = 1.0) -> Connection:
    """Multiplicative chart U_e -> exp(t a_e) U_e (a based at edge tails)."""
    _check_rank(conn, a, "connection_plus")
    tr = np.empty_like(conn.transport)
    for e in range(conn.surface.edge_count):
        tr[e] = matalg.group_exp(t * a[e]) @ conn.transport[e]
    return Connection(conn.surface, tr)


def connection_diff(c2: Connection, c1: Connection) -> np.ndarray:
    """Log-chart difference log(U2_e U1_e^-1) per edge (skew-hermitian)."""
    if c2.rank != c1.rank or c2.surface is not c1.surface:
        raise DimensionMismatchError("connection_diff: connections do not match")
    ne = c1.surface.edge_count
    out = np.empty_like(c1.transport)
    for e in range(ne):
        try:
            out[e] = matalg.group_log(
                c2.transport[e] @ c1.transport[e].conj().T, where=e
            )
        except BranchCutError as exc:
            raise BranchCutError(
                f"connection_diff: edge {e} difference is on the log branch cut",
                where=e,
            ) from exc
    return out


# ---------------------------------------------------------------------------
# Field files


def write_field(state: FieldState, path, mesh_ref: str = "") -> None:
    """Field file: mesh reference, rank and exact per-edge matrices."""
    doc = {
        "mesh_ref": mesh_ref,
        "rank": state.rank,
        "transports": [matalg.to_reim_pairs(m) for m in state.conn.transport],
        "phi": [matalg.to_reim_pairs(m) for m in state.phi],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def read_field(path, surface: DiscreteSurface) -> tuple[FieldState, str]:
    with open(path) as fh:
        doc = json.load(fh)
    n = int(doc["rank"])
    ne = surface.edge_count
    if len(doc["transports"]) != ne or len(doc["phi"]) != ne:
        raise DimensionMismatchError(
            f"field file has {len(doc['transports'])} edges, surface has {ne}"
        )
    tr = np.stack([matalg.from_reim_pairs(m, n) for m in doc["transports"]])
    phi = np.stack([matalg.from_reim_pairs(m, n) for m in doc["phi"]])
    return FieldState(Connection(surface, tr), phi), doc.get("mesh_ref", "")


# ---------------------------------------------------------------------------
# Vector-valued sections (used for rank-n^2 endomorphism bundles)


def vector_covariant_d0(conn: Connection, sections: np.ndarray) -> np.ndarray:
    """Covariant difference of vector-valued 0-cochains: U_e s_head - s_tail."""
    surf = conn.surface
    out = np.empty((surf.edge_count, sections.shape[1]), dtype=complex)
    for e in range(surf.edge_count):
        t, h = surf.edges[e]
        out[e] = conn.transport[e] @ sections[h] - sections[t]
    return out


def vector_covariant_d0_adjoint(conn: Connection, values: np.ndarray) -> np.ndarray:
    surf = conn.surface
    out = np.zeros((surf.vertex_count, values.shape[1]), dtype=complex)
    m1 = surf.M1
    for e in range(surf.edge_count):
        t, h = surf.edges[e]
        out[h] += m1[e] * (conn.transport[e].conj().T @ values[e])
        out[t] -= m1[e] * values[e]
    return out / surf.M0[:, None]
