"""Newton and Gauss-Newton machinery for the gauge equations.

Coulomb gauge fixing against an irreducible reference, flat-connection
projection, construction of irreducible genus-2 holonomies, harmonic-state
reconstruction from a pair of flat endpoint connections, the deformation
dimension count, and the unitary-equivalence upgrade of a complex gauge
equivalence.

All linear solves run dense (desk scale), center-projected, with a small
Tikhonov floor so pure gauge directions never poison the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matalg
from .errors import (
    BasinError,
    DegenerateGaugeError,
    NonConvergenceError,
    ReducibleReferenceError,
)
from .gaugefield import (
    Connection,
    FieldState,
    TangentPair,
    cochain_norm,
    connection_diff,
    connection_plus,
    covariant_d0,
    covariant_d1,
    curvature,
    d1_action,
    d1_l2_adjoint,
    face_steps,
    gauge_act,
    gauge_exp,
    phi_to_higgs,
    tau,
    vector_covariant_d0,
    vector_covariant_d0_adjoint,
    zero_phi,
)
from .linear import CochainCoords, assemble, center_complement_basis
from .moment import graded_face_wedge, real_form_residual, wedge_bracket_phi

TIKHONOV_FLOOR = 1e-14
KERNEL_THRESHOLD = 1e-8  # relative to the largest singular value
GAP_MINIMUM = 1e3
BASIN_RADIUS = 0.1  # log-chart norm bound for endpoint reconstruction


@dataclass(frozen=True)
class NewtonConfig:
    """Iteration budget and tolerances for the Newton-type solvers."""

    max_iter: int = 200
    tol: float = 1e-10
    step_damping: float = 1.0
    center_projection: bool = True

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.step_damping <= 1:
            raise ValueError("step_damping must lie in (0, 1]")


@dataclass(frozen=True)
class SpectrumReport:
    """Ascending singular values with the kernel count under the gap rule."""

    values: np.ndarray
    kernel_count: int
    gap_ratio: float

    @property
    def lambda_min(self) -> float:
        return float(self.values[0]) if self.values.size else 0.0


def spectrum_report(values: np.ndarray) -> SpectrumReport:
    """Classify ascending nonnegative values by the shared threshold rule.

    Values below KERNEL_THRESHOLD times the largest value count as kernel;
    gap_ratio is (first kept)/(last dropped), infinite when either side is
    empty.
    """
    vals = np.sort(np.abs(np.asarray(values, dtype=float)))
    if vals.size == 0:
        return SpectrumReport(vals, 0, float("inf"))
    cut = KERNEL_THRESHOLD * vals[-1]
    k = int(np.searchsorted(vals, cut))
    if k == 0 or k == vals.size:
        gap = float("inf")
    else:
        last_dropped = max(vals[k - 1], np.finfo(float).tiny)
        gap = float(vals[k] / last_dropped)
    return SpectrumReport(vals, k, gap)


def _trace(trace_cb, it: int, res: float, step: float) -> None:
    if trace_cb is not None:
        trace_cb(it, res, step)


# ---------------------------------------------------------------------------
# Coulomb gauge fixing


def _gauge_laplacian_matrix(ref: FieldState, coords: CochainCoords) -> np.ndarray:
    """Dense matrix of d1_l2_adjoint . d1_action at the reference state."""
    return assemble(
        lambda xi: d1_l2_adjoint(ref, d1_action(ref, xi)),
        coords.dim0,
        coords.unvec0,
        coords.vec0,
    )


def coulomb_fix(
    ref: FieldState,
    target: FieldState,
    cfg: NewtonConfig = NewtonConfig(),
    trace_cb=None,
) -> np.ndarray:
    """Gauge transformation putting ``target`` in Coulomb gauge w.r.t. ``ref``.

    Newton iteration on xi in the centre-orthogonal complement, driving
    d1_l2_adjoint at ref of the log-chart difference of exp(xi).target and
    ref below cfg.tol.  The returned vertex field u = exp(xi) is the
    representative with xi orthogonal to the centre direction.
    """
    surf = ref.surface
    n = ref.rank
    coords = CochainCoords(surf, n)
    basis_cc = center_complement_basis(coords)

    lap = _gauge_laplacian_matrix(ref, coords)
    lap_cc = basis_cc.T @ lap @ basis_cc
    lap_cc = (lap_cc + lap_cc.T) / 2.0
    eigvals = np.linalg.eigvalsh(lap_cc)
    if eigvals[0] <= KERNEL_THRESHOLD * max(eigvals[-1], 1.0):
        raise ReducibleReferenceError(
            "coulomb_fix: reference stabiliser exceeds the centre "
            f"(smallest centre-orthogonal eigenvalue {eigvals[0]:.3e})"
        )
    solve_mat = lap_cc + TIKHONOV_FLOOR * np.eye(lap_cc.shape[0])

    xi_vec = np.zeros(basis_cc.shape[1])
    res = float("inf")
    for it in range(cfg.max_iter):
        u = gauge_exp(coords.unvec0(basis_cc @ xi_vec))
        moved = gauge_act(u, target)
        a = connection_diff(moved.conn, ref.conn)
        psi = moved.phi - ref.phi
        r = d1_l2_adjoint(ref, TangentPair(a, psi))
        r_vec = basis_cc.T @ coords.vec0(r)
        res = float(np.linalg.norm(r_vec))
        _trace(trace_cb, it, res, float(np.linalg.norm(xi_vec)))
        if res < cfg.tol:
            return gauge_exp(coords.unvec0(basis_cc @ xi_vec))
        step = np.linalg.solve(solve_mat, r_vec)
        xi_vec = xi_vec - cfg.step_damping * step
        if not cfg.center_projection:
            pass  # xi lives in the complement by construction
    raise NonConvergenceError(
        f"coulomb_fix did not reach tol={cfg.tol} in {cfg.max_iter} iterations "
        f"(residual {res:.3e})",
        residual=res,
    )


# ---------------------------------------------------------------------------
# Flat-connection projection


def find_flat(
    seed: Connection, cfg: NewtonConfig = NewtonConfig(), trace_cb=None
) -> Connection:
    """Gauss-Newton minimization of the face log-holonomy norm.

    The update lives in the multiplicative chart exp(a) U; the linear model
    uses covariant_d1, which is the exact derivative of the plaquette logs
    at flat points.  Gauge directions sit in the kernel of the normal
    matrix and are absorbed by the Tikhonov floor.
    """
    surf = seed.surface
    n = seed.rank
    coords = CochainCoords(surf, n)
    conn = seed
    res = float("inf")
    for it in range(cfg.max_iter):
        f = curvature(conn)
        res = cochain_norm(surf.M2, f)
        _trace(trace_cb, it, res, 0.0)
        if res < cfg.tol:
            return conn
        jac = assemble(
            lambda a: covariant_d1(conn, a),
            coords.dim1,
            coords.unvec1,
            lambda w: coords.vec_end(w, np.sqrt(surf.M2)),
        )
        rhs = -jac.T @ coords.vec_end(f, np.sqrt(surf.M2))
        normal = jac.T @ jac + TIKHONOV_FLOOR * np.eye(coords.dim1)
        step = np.linalg.solve(normal, rhs)
        conn = connection_plus(conn, coords.unvec1(cfg.step_damping * step))
        conn = Connection(
            surf, np.stack([matalg.nearest_unitary(m) for m in conn.transport])
        )
    raise NonConvergenceError(
        f"find_flat did not reach tol={cfg.tol} in {cfg.max_iter} iterations "
        f"(residual {res:.3e})",
        residual=res,
    )


# ---------------------------------------------------------------------------
# Irreducible genus-2 holonomies


def _su2_from_vec(x: np.ndarray) -> np.ndarray:
    """exp of the su(2) element with real coordinates x (Pauli basis)."""
    gen = np.array(
        [
            [[1j, 0], [0, -1j]],
            [[0, 1], [-1, 0]],
            [[0, 1j], [1j, 0]],
        ],
        dtype=complex,
    )
    m = x[0] * gen[0] + x[1] * gen[1] + x[2] * gen[2]
    return matalg.group_exp(m)


def _su2_log_vec(u: np.ndarray) -> np.ndarray:
    m = matalg.group_log(u)
    m = m - (np.trace(m) / 2.0) * np.eye(2)  # project onto su(2)
    return np.array([m[0, 0].imag, m[0, 1].real, m[0, 1].imag])


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b @ a.conj().T @ b.conj().T


def genus2_flat_seed(
    surface, rng_seed: int = 0, retries: int = 10
) -> Connection:
    """Irreducible flat U(2) connection on the one-face genus-2 complex.

    Draws random SU(2) holonomies (A1, B1) and solves the single relation
    [A2, B2] = [A1, B1]^-1 by Newton on the six su(2) x su(2) parameters
    (every SU(2) element is a commutator).  Retries with fresh draws until
    the representation is irreducible.
    """
    from .degeneracy import reducibility_check

    if surface.face_count != 1 or surface.edge_count != 4:
        raise ValueError("genus2_flat_seed expects the one-face genus-2 complex")
    rng = np.random.default_rng(rng_seed)
    for _ in range(retries):
        a1 = _su2_from_vec(rng.uniform(-1.2, 1.2, size=3))
        b1 = _su2_from_vec(rng.uniform(-1.2, 1.2, size=3))
        target = _commutator(a1, b1).conj().T
        xy = rng.uniform(-1.0, 1.0, size=6)
        ok = False
        for _ in range(60):
            a2 = _su2_from_vec(xy[:3])
            b2 = _su2_from_vec(xy[3:])
            g = _su2_log_vec(_commutator(a2, b2) @ target.conj().T)
            if np.linalg.norm(g) < 1e-13:
                ok = True
                break
            jac = np.zeros((3, 6))
            eps = 1e-7
            for k in range(6):
                pert = xy.copy()
                pert[k] += eps
                gp = _su2_log_vec(
                    _commutator(_su2_from_vec(pert[:3]), _su2_from_vec(pert[3:]))
                    @ target.conj().T
                )
                jac[:, k] = (gp - g) / eps
            xy = xy - np.linalg.pinv(jac) @ g
        if not ok:
            continue
        transports = np.stack([a1, b1, _su2_from_vec(xy[:3]), _su2_from_vec(xy[3:])])
        conn = Connection(surface, transports)
        hol = face_steps(conn, 0, zero_phi(surface, 2))[1]
        if np.abs(hol - np.eye(2)).max() > 1e-12:
            continue
        if reducibility_check(conn) == 1:
            return conn
    raise NonConvergenceError(
        f"genus2_flat_seed: no irreducible solution in {retries} attempts"
    )


# ---------------------------------------------------------------------------
# Harmonic states from endpoint pairs


def harmonic_from_endpoints(
    conn_plus_end: Connection,
    conn_minus_end: Connection,
    cfg: NewtonConfig = NewtonConfig(),
    trace_cb=None,
) -> FieldState:
    """Harmonic state whose flat-pair map reproduces the given endpoints.

    Puts the + endpoint in Coulomb gauge with respect to the - endpoint,
    then sets the connection to the chart midpoint and phi to half the
    log-chart difference.  Because conjugation by exp(phi) fixes phi, the
    midpoint coclosedness is exactly the Coulomb condition and both
    recovered connections match the inputs exactly, so the real-form
    residual of the output is bounded by the endpoint flatness and the
    gauge-fixing tolerance.
    """
    surf = conn_minus_end.surface
    n = conn_minus_end.rank
    for name, conn in (("plus", conn_plus_end), ("minus", conn_minus_end)):
        flat_res = cochain_norm(surf.M2, curvature(conn))
        if flat_res > 100 * cfg.tol:
            raise ValueError(
                f"harmonic_from_endpoints: {name} endpoint is not flat "
                f"(curvature norm {flat_res:.3e})"
            )
    raw = connection_diff(conn_plus_end, conn_minus_end)
    raw_norm = cochain_norm(surf.M1, raw)
    if raw_norm > BASIN_RADIUS:
        raise BasinError(
            f"endpoints are {raw_norm:.3f} apart in the log chart "
            f"(> {BASIN_RADIUS}); no reconstruction attempted"
        )
    ref = FieldState(conn_minus_end, zero_phi(surf, n))
    u = coulomb_fix(ref, FieldState(conn_plus_end, zero_phi(surf, n)), cfg, trace_cb)
    fixed_plus = gauge_act(u, FieldState(conn_plus_end, zero_phi(surf, n))).conn
    diff = connection_diff(fixed_plus, conn_minus_end)
    if cochain_norm(surf.M1, diff) > BASIN_RADIUS:
        raise BasinError("Coulomb-fixed endpoints left the reconstruction basin")
    phi = diff / 2.0
    mid = connection_plus(conn_minus_end, phi)
    state = FieldState(mid, phi)
    final = real_form_residual(state)
    if final > 10 * max(
        cfg.tol, cochain_norm(surf.M2, curvature(conn_plus_end)),
        cochain_norm(surf.M2, curvature(conn_minus_end)),
    ):
        raise NonConvergenceError(
            f"reconstructed state residual {final:.3e} exceeds bound",
            residual=final,
        )
    return state


# ---------------------------------------------------------------------------
# Deformation complex dimension


def dg_apply(state: FieldState, tp: TangentPair) -> tuple[np.ndarray, np.ndarray]:
    """Linearization of the equations at a state.

    Returns the pair (curvature slot, dbar slot):
    (d^nabla a - [Phi ^ psi*] - [psi ^ Phi*],  dbar psi + [a^{0,1} ^ Phi]),
    with the graded face wedges evaluated on base-transported boundary
    steps.
    """
    surf = state.surface
    conn = state.conn
    higgs = phi_to_higgs(surf, state.phi)
    beta = phi_to_higgs(surf, tp.psi)
    alpha = (tp.a + 1j * surf.j1_apply(tp.a)) / 2.0
    slot1 = (
        covariant_d1(conn, tp.a)
        - graded_face_wedge(conn, higgs, tau(beta))
        - graded_face_wedge(conn, beta, tau(higgs))
    )
    slot2 = covariant_d1(conn, beta) + graded_face_wedge(conn, alpha, higgs)
    return slot1, slot2


def deformation_operator(state: FieldState) -> np.ndarray:
    """Dense matrix of (d1_l2_adjoint, dG) on tangent pairs."""
    coords = CochainCoords(state.surface, state.rank)
    s2 = np.sqrt(state.surface.M2)

    def apply_fn(tp: TangentPair) -> np.ndarray:
        adj = d1_l2_adjoint(state, tp)
        slot1, slot2 = dg_apply(state, tp)
        return np.concatenate(
            [coords.vec0(adj), coords.vec2(slot1), coords.vec_end(slot2, s2)]
        )

    cols = [
        apply_fn(tp) for tp in coords.basis_pairs()
    ]
    return np.column_stack(cols)


def deformation_dimension(state: FieldState, residual_tol: float = 1e-6):
    """Kernel dimension of the deformation operator by dense SVD.

    The state must approximately solve the equations; the kernel count of
    (d1_l2_adjoint, dG) is the dimension of the solution space modulo
    gauge at the state.
    """
    res = real_form_residual(state)
    if res > residual_tol:
        raise ValueError(
            f"deformation_dimension: state residual {res:.3e} exceeds "
            f"{residual_tol}; not close enough to a solution"
        )
    mat = deformation_operator(state)
    svals = np.linalg.svd(mat, compute_uv=False)
    return spectrum_report(svals)


def cohomology_split(state: FieldState) -> tuple[int, int]:
    """(dim H^0, dim H^2) of the deformation complex at the state.

    H^0 is the kernel of the linearized action on 0-cochains; H^2 the
    cokernel of dG, computed by dense rank counts under the shared
    threshold rule.
    """
    coords = CochainCoords(state.surface, state.rank)
    s2 = np.sqrt(state.surface.M2)
    act = assemble(
        lambda xi: d1_action(state, xi),
        coords.dim0,
        coords.unvec0,
        coords.vec_pair,
    )
    h0 = spectrum_report(np.linalg.svd(act, compute_uv=False)).kernel_count

    def dg_vec(tp: TangentPair) -> np.ndarray:
        slot1, slot2 = dg_apply(state, tp)
        return np.concatenate([coords.vec2(slot1), coords.vec_end(slot2, s2)])

    dg_mat = assemble(dg_vec, coords.pair_dim, coords.unvec_pair, lambda x: x)
    svals = np.linalg.svd(dg_mat, compute_uv=False)
    rank = int(np.sum(svals > KERNEL_THRESHOLD * svals.max()))
    h2 = dg_mat.shape[0] - rank
    return h0, h2


# ---------------------------------------------------------------------------
# Unitary equivalence of complex-gauge-related solutions


@dataclass(frozen=True)
class EquivVerdict:
    """Outcome of the unitary-equivalence upgrade check."""

    conclusive: bool
    bound_margin: float  # lambda_1 - ||Phi ^ Phi*||^2 (positive => bound holds)
    lambda_1: float
    phi_wedge_norm_sq: float
    intertwine_residual: float
    unitary_residual: float
    gauge_residual: float
    u_unitary: np.ndarray | None = field(default=None, repr=False)


def _end_bundle_connection(
    s1: FieldState, s2: FieldState
) -> tuple[Connection, np.ndarray]:
    """Product connection and Higgs action on End(E) as a rank-n^2 bundle.

    Sections X of End(E) transform as X -> U2 X U1^-1 along edges; in
    vectorized form the transports are kron(U2, conj(U1)) and the Higgs
    field acts as X -> phi2 X - X phi1.
    """
    surf = s1.surface
    n = s1.rank
    ne = surf.edge_count
    tr = np.empty((ne, n * n, n * n), dtype=complex)
    ph = np.empty((ne, n * n, n * n), dtype=complex)
    eye = np.eye(n)
    for e in range(ne):
        tr[e] = np.kron(s2.conn.transport[e], s1.conn.transport[e].conj())
        ph[e] = np.kron(s2.phi[e], eye) - np.kron(eye, s1.phi[e].T)
    return Connection(surf, tr), ph


def unitary_equiv_check(
    s1: FieldState,
    s2: FieldState,
    u_c: np.ndarray,
    intertwine_tol: float = 1e-6,
) -> EquivVerdict:
    """Upgrade a complex gauge equivalence to a unitary one when possible.

    Checks that u_c intertwines the dbar-operators and Higgs fields of the
    two states, computes the first positive eigenvalue lambda_1 of the
    End-bundle Laplacian and the squared norm of the End-bundle Higgs
    wedge; if the wedge norm is below lambda_1, the polar unitary
    u (u* u)^{-1/2} is formed and verified to gauge s2 to s1.  A violated
    bound yields an inconclusive verdict, not an error.
    """
    surf = s1.surface
    n = s1.rank
    conn_end, phi_end = _end_bundle_connection(s1, s2)
    state_end = FieldState(conn_end, phi_end)

    w = np.stack([u_c[v].reshape(-1) for v in range(surf.vertex_count)])
    dw = vector_covariant_d0(conn_end, w)
    dbar_w = (dw + 1j * np.einsum("ef,fi->ei", surf.J1, dw)) / 2.0
    higgs_end = phi_to_higgs(surf, phi_end)
    higgs_w = np.stack(
        [higgs_end[e] @ w[surf.edges[e, 0]] for e in range(surf.edge_count)]
    )
    inter = np.sqrt(
        float(np.sum(surf.M1 * np.sum(np.abs(dbar_w) ** 2, axis=1)))
        + float(np.sum(surf.M1 * np.sum(np.abs(higgs_w) ** 2, axis=1)))
    )
    if inter > intertwine_tol:
        raise ValueError(
            f"unitary_equiv_check: u_c does not intertwine the states "
            f"(residual {inter:.3e} > {intertwine_tol})"
        )

    # lambda_1 of the End-bundle 0-Laplacian.
    nv = surf.vertex_count
    dim = nv * n * n

    def lap(sections: np.ndarray) -> np.ndarray:
        return vector_covariant_d0_adjoint(
            conn_end, vector_covariant_d0(conn_end, sections)
        )

    cols = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        x = np.zeros(dim, dtype=complex)
        x[k] = 1.0
        cols[:, k] = (
            lap(x.reshape(nv, n * n)) * surf.M0[:, None]
        ).reshape(-1)
    m0 = np.repeat(surf.M0, n * n)
    herm = (cols + cols.conj().T) / 2.0
    sm = np.sqrt(m0)
    herm = herm / sm[:, None] / sm[None, :]
    evals = np.linalg.eigvalsh(herm)
    rep = spectrum_report(evals)
    positive = rep.values[rep.kernel_count :]
    lam1 = float(positive[0]) if positive.size else 0.0

    wedge = wedge_bracket_phi(conn_end, phi_end)
    wedge_sq = float(
        np.sum(np.sum(np.abs(wedge) ** 2, axis=(1, 2)) / surf.M2)
    )
    margin = lam1 - wedge_sq

    if margin <= 0:
        return EquivVerdict(
            conclusive=False,
            bound_margin=margin,
            lambda_1=lam1,
            phi_wedge_norm_sq=wedge_sq,
            intertwine_residual=inter,
            unitary_residual=float("nan"),
            gauge_residual=float("nan"),
        )

    u_tilde = np.empty_like(u_c)
    for v in range(surf.vertex_count):
        h = u_c[v].conj().T @ u_c[v]
        evals_h, vecs = np.linalg.eigh(h)
        if evals_h.min() < 1e-12:
            raise DegenerateGaugeError(
                f"polar decomposition singular at vertex {v} "
                f"(min eigenvalue {evals_h.min():.3e})"
            )
        inv_sqrt = vecs @ np.diag(evals_h**-0.5) @ vecs.conj().T
        u_tilde[v] = u_c[v] @ inv_sqrt
    unit_res = max(
        float(np.abs(u_tilde[v].conj().T @ u_tilde[v] - np.eye(n)).max())
        for v in range(surf.vertex_count)
    )
    moved = gauge_act(u_tilde, s2)
    gauge_res = max(
        cochain_norm(surf.M1, connection_diff(moved.conn, s1.conn)),
        cochain_norm(surf.M1, moved.phi - s1.phi),
    )
    return EquivVerdict(
        conclusive=True,
        bound_margin=margin,
        lambda_1=lam1,
        phi_wedge_norm_sq=wedge_sq,
        intertwine_residual=inter,
        unitary_residual=unit_res,
        gauge_residual=gauge_res,
        u_unitary=u_tilde,
    )
