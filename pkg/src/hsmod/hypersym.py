"""The flat split-signature structure on the doubled field space.

Tangent pairs (a, psi) carry the indefinite metric
g = <a,a'> - <psi,psi'>, the complex structure I, the product structures
S, T with I^2 = -1, S^2 = T^2 = +1, IS = T = -SI, the rotated families
S_theta / T_theta, the hyperboloid of complex structures I_zeta, and the
maps they generate: the flat-pair map p_theta, the circle action on the
Higgs field, the lambda-connection picture and its rescalings.

Real-coordinate conventions (fixed here once, tested everywhere):
  * the (1,0)-projector is (1 - i J1)/2, as in phi_to_higgs;
  * I(a, psi) = (-J1 a, J1 psi), which is multiplication by i in the
    complex coordinates (a^{0,1}, psi^{1,0});
  * S(a, psi) = (-psi, -a) and T = I S, reproducing the complex-coordinate
    swap-with-dagger formulas;
  * S_theta = cos(theta) S + sin(theta) T, so the circle action on the
    Higgs field intertwines S_theta with S_{theta+alpha};
  * rot(theta) = cos(theta) I - sin(theta) J1 plays e^{star theta} both in
    S_theta and in p_theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matalg
from .errors import DimensionMismatchError, UnitCircleError
from .gaugefield import (
    Connection,
    FieldState,
    TangentPair,
    cochain_inner,
    connection_diff,
    connection_plus,
    higgs_to_phi,
    phi_to_higgs,
    tau,
)
from .linear import CochainCoords, assemble
from .surface import DiscreteSurface

UNIT_CIRCLE_MARGIN = 1e-9

STRUCTURE_KINDS = ("I", "S", "T", "S_theta", "T_theta", "I_zeta")


@dataclass(frozen=True)
class StructureSelector:
    """One member of the structure family acting on tangent pairs."""

    kind: str
    theta: float = 0.0
    zeta: complex = 0j

    def __post_init__(self):
        if self.kind not in STRUCTURE_KINDS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        if self.kind == "I_zeta":
            _check_zeta(self.zeta)


def _check_zeta(zeta: complex) -> None:
    if abs(abs(zeta) - 1.0) < UNIT_CIRCLE_MARGIN:
        raise UnitCircleError(
            f"zeta = {zeta} lies within {UNIT_CIRCLE_MARGIN} of the unit circle"
        )


def _rot(surface: DiscreteSurface, theta: float, values: np.ndarray) -> np.ndarray:
    """cos(theta) - sin(theta) J1 applied on the edge index."""
    return np.cos(theta) * values - np.sin(theta) * surface.j1_apply(values)


def metric_g(surface: DiscreteSurface, tp1: TangentPair, tp2: TangentPair) -> float:
    """Split-signature metric <a1,a2>_{M1} - <psi1,psi2>_{M1}."""
    if tp1.a.shape != tp2.a.shape:
        raise DimensionMismatchError("metric_g: tangent pairs do not match")
    return cochain_inner(surface.M1, tp1.a, tp2.a) - cochain_inner(
        surface.M1, tp1.psi, tp2.psi
    )


def apply_structure(
    surface: DiscreteSurface, sel: StructureSelector | str, tp: TangentPair, **kw
) -> TangentPair:
    """Apply I, S, T, S_theta(theta), T_theta(theta) or I_zeta(zeta)."""
    if isinstance(sel, str):
        sel = StructureSelector(sel, kw.get("theta", 0.0), kw.get("zeta", 0j))
    j = surface.j1_apply
    a, psi = tp.a, tp.psi
    if sel.kind == "I":
        return TangentPair(-j(a), j(psi))
    if sel.kind == "S":
        return TangentPair(-psi, -a)
    if sel.kind == "T":
        return TangentPair(j(psi), -j(a))
    if sel.kind == "S_theta":
        th = sel.theta
        return TangentPair(-_rot(surface, th, psi), -_rot(surface, -th, a))
    if sel.kind == "T_theta":
        s = apply_structure(surface, "S", tp)
        t = apply_structure(surface, "T", tp)
        c, sn = np.cos(sel.theta), np.sin(sel.theta)
        return TangentPair(c * t.a - sn * s.a, c * t.psi - sn * s.psi)
    if sel.kind == "I_zeta":
        _check_zeta(sel.zeta)
        z = complex(sel.zeta)
        r2 = abs(z) ** 2
        ci = (1 + r2) / (1 - r2)
        cs = 2 * z.real / (1 - r2)
        ct = -2 * z.imag / (1 - r2)
        ti = apply_structure(surface, "I", tp)
        ts = apply_structure(surface, "S", tp)
        tt = apply_structure(surface, "T", tp)
        return TangentPair(
            ci * ti.a + cs * ts.a + ct * tt.a,
            ci * ti.psi + cs * ts.psi + ct * tt.psi,
        )
    raise ValueError(f"unknown structure kind {sel.kind!r}")  # pragma: no cover


def omega(
    surface: DiscreteSurface, sel, tp1: TangentPair, tp2: TangentPair, **kw
) -> float:
    """Symplectic form omega_X(tp1, tp2) = g(X tp1, tp2)."""
    return metric_g(surface, apply_structure(surface, sel, tp1, **kw), tp2)


def wedge_int(surface: DiscreteSurface, x: np.ndarray, y: np.ndarray) -> complex:
    """Discrete integral of tr(x ^ y): sum_e M1_e tr(x_e (J1 y)_e).

    Complex bilinear and exactly antisymmetric because M1 J1 is
    antisymmetric; this is the wedge pairing that J1 induces on
    complexified 1-cochains.
    """
    jy = surface.j1_apply(y)
    return complex(np.sum(surface.M1 * np.einsum("eij,eji->e", x, jy)))


def omega_c(surface: DiscreteSurface, tp1: TangentPair, tp2: TangentPair) -> complex:
    """Holomorphic symplectic form from the pairing of complex coordinates.

    Computed directly from the discretized integral formula
    2i [ tr(Phi1 ^ a2^{0,1}) - tr(Phi2 ^ a1^{0,1}) ], independently of the
    assembled S and T operators; equals omega_S + i omega_T.
    """
    p10 = lambda v: phi_to_higgs(surface, v)
    p01 = lambda v: (v + 1j * surface.j1_apply(v)) / 2.0
    b1, b2 = p10(tp1.psi), p10(tp2.psi)
    a1, a2 = p01(tp1.a), p01(tp2.a)
    return 2j * (wedge_int(surface, b1, a2) - wedge_int(surface, b2, a1))


def structure_matrix(
    surface: DiscreteSurface, n: int, sel, coords: CochainCoords | None = None, **kw
) -> np.ndarray:
    """Dense real matrix of a structure in isometric pair coordinates."""
    coords = coords or CochainCoords(surface, n)
    return assemble(
        lambda tp: apply_structure(surface, sel, tp, **kw),
        coords.pair_dim,
        coords.unvec_pair,
        coords.vec_pair,
    )


def metric_signature_matrix(coords: CochainCoords) -> np.ndarray:
    """Matrix of g in isometric pair coordinates: diag(+1 ..., -1 ...)."""
    d = coords.dim1
    return np.diag(np.concatenate([np.ones(d), -np.ones(d)]))


# ---------------------------------------------------------------------------
# Flat-pair correspondence and the circle action


def p_theta(state: FieldState, theta: float = 0.0) -> tuple[Connection, Connection]:
    """Pair of connections exp(+-rot(theta) phi) . conn.

    For a state solving the equations at theta = 0 both outputs are flat.
    """
    rphi = _rot(state.surface, theta, state.phi)
    return (
        connection_plus(state.conn, rphi),
        connection_plus(state.conn, -rphi),
    )


def p_theta_inverse(
    pair: tuple[Connection, Connection], theta: float = 0.0
) -> FieldState:
    """Recover (midpoint connection, phi) from a pair of connections.

    Exact inverse of p_theta as long as the edgewise differences stay off
    the log branch cut.
    """
    c1, c2 = pair
    diff = connection_diff(c1, c2)  # = 2 rot(theta) phi
    phi = _rot(c1.surface, -theta, diff) / 2.0
    mid = connection_plus(c1, -diff / 2.0)
    return FieldState(mid, phi)


def circle_act(state: FieldState, alpha: float) -> FieldState:
    """Rotate the Higgs field, Phi -> e^{i alpha} Phi, keeping the connection.

    In real form phi -> cos(alpha) phi + sin(alpha) J1 phi, implemented
    through the Higgs round-trip so the complex convention stays pinned.
    """
    higgs = phi_to_higgs(state.surface, state.phi)
    return FieldState(state.conn, higgs_to_phi(np.exp(1j * alpha) * higgs))


def circle_act_linearized(
    surface: DiscreteSurface, alpha: float, tp: TangentPair
) -> TangentPair:
    """Derivative of circle_act on tangent pairs: identity on a, e^{J alpha} on psi."""
    return TangentPair(tp.a, _rot(surface, -alpha, tp.psi))


# ---------------------------------------------------------------------------
# lambda-connections and the hyperboloid maps


@dataclass(frozen=True)
class LambdaConnection:
    """First-order operator lam * (1,0)-part of D + Higgs multiplication.

    Applying to an End-valued 0-cochain s gives
    lam * P^{1,0}(U_e s_head U_e^-1 - s_tail) + higgs_e s_tail.
    The Leibniz derivative term scales exactly by lam.
    """

    lam: complex
    conn: Connection
    higgs: np.ndarray  # (E, n, n) complex, (1,0)-type


@dataclass(frozen=True)
class FZetaImage:
    """Deformed dbar operator data plus the associated lambda-connection."""

    dbar_conn: Connection
    dbar_deform: np.ndarray  # (0,1)-type End-valued 1-cochain
    lambda_conn: LambdaConnection


def _p10(surface: DiscreteSurface, v: np.ndarray) -> np.ndarray:
    return (v - 1j * surface.j1_apply(v)) / 2.0


def _p01(surface: DiscreteSurface, v: np.ndarray) -> np.ndarray:
    return (v + 1j * surface.j1_apply(v)) / 2.0


def _end_covariant_d0(conn: Connection, s: np.ndarray) -> np.ndarray:
    out = np.empty((conn.surface.edge_count,) + s.shape[1:], dtype=complex)
    u = conn.transport
    for e in range(conn.surface.edge_count):
        t, h = conn.surface.edges[e]
        out[e] = u[e] @ s[h] @ u[e].conj().T - s[t]
    return out


def apply_lambda(lc: LambdaConnection, s: np.ndarray) -> np.ndarray:
    """Apply the lambda-connection to an End-valued 0-cochain."""
    surf = lc.conn.surface
    deriv = lc.lam * _p10(surf, _end_covariant_d0(lc.conn, s))
    mult = np.empty_like(deriv)
    for e in range(surf.edge_count):
        t = surf.edges[e, 0]
        mult[e] = lc.higgs[e] @ s[t]
    return deriv + mult


def lambda_derivative_term(
    lc: LambdaConnection, f: np.ndarray, s: np.ndarray
) -> np.ndarray:
    """Leibniz defect apply(lc, f s) - f . apply(lc, s) for scalar vertex f.

    The multiplication term cancels edge-locally, so this isolates the
    derivative part, which scales exactly by lam under rescaling.
    """
    surf = lc.conn.surface
    fs = f[:, None, None] * s
    out = apply_lambda(lc, fs)
    base = apply_lambda(lc, s)
    for e in range(surf.edge_count):
        t = surf.edges[e, 0]
        out[e] = out[e] - f[t] * base[e]
    return out


def lambda_rescale(lc: LambdaConnection, zeta: complex) -> LambdaConnection:
    """Move along the equivalence lam -> zeta, scaling operator data by zeta/lam."""
    if lc.lam == 0:
        raise ValueError("lambda_rescale: lambda must be nonzero")
    if zeta == 0:
        raise ValueError("lambda_rescale: zeta must be nonzero")
    factor = zeta / lc.lam
    return LambdaConnection(zeta, lc.conn, factor * lc.higgs)


def f_zeta(state: FieldState, zeta: complex) -> FZetaImage:
    """Identification with pairs (deformed dbar operator, lambda-connection).

    (dbar, Phi) -> (dbar - i conj(zeta) Phi^*, -i conj(zeta) d^{1,0} + Phi);
    at zeta = 0 this is the identity pairing.
    """
    _check_zeta(zeta)
    surf = state.surface
    higgs = phi_to_higgs(surf, state.phi)
    zbar = np.conjugate(complex(zeta))
    return FZetaImage(
        dbar_conn=state.conn,
        dbar_deform=-1j * zbar * tau(higgs),
        lambda_conn=LambdaConnection(-1j * zbar, state.conn, higgs),
    )


def f_zeta_linearized(
    surface: DiscreteSurface, zeta: complex, tp: TangentPair
) -> tuple[np.ndarray, np.ndarray]:
    """Derivative of f_zeta in complex coordinates.

    (alpha, beta) -> (alpha - i conj(zeta) tau(beta), -i conj(zeta) tau(alpha) + beta),
    returned as the pair of complexified End-valued 1-cochains
    (dbar-slot deformation, lambda-slot deformation).
    """
    _check_zeta(zeta)
    zbar = np.conjugate(complex(zeta))
    alpha = _p01(surface, tp.a)
    beta = _p10(surface, tp.psi)
    return alpha - 1j * zbar * tau(beta), -1j * zbar * tau(alpha) + beta


def f_zeta_target_mult_i(
    pair: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Multiplication by i on both slots of the target space."""
    return 1j * pair[0], 1j * pair[1]


def export_structure_triplets(path, matrix: np.ndarray, tol: float = 0.0) -> None:
    """Write a dense structure matrix as sparse 'row col value' text lines."""
    with open(path, "w") as fh:
        fh.write("# row col value\n")
        rows, cols = np.nonzero(np.abs(matrix) > tol)
        for r, c in zip(rows, cols):
            fh.write(f"{r} {c} {matrix[r, c]!r}\n")
