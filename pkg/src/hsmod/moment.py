"""Moment maps and residuals of the harmonic-map equations.

The three moment maps are reported as mu_I (curvature minus the squared
Higgs term, skew-valued per face) and mu_C = mu_S + i mu_T (the covariant
(0,1)-derivative of the Higgs field, End-valued per face).  The residual
of a state is reported both in this complex form and in the real form
(flatness of the two associated connections plus coclosedness of phi);
the real form is evaluated on exact link fields, not by expansion.

The quadratic face term [Phi ^ Phi^*] is computed from the ordered
boundary steps of phi itself (cup-product antisymmetrization of the
transported step values).  That choice keeps the term exactly
skew-hermitian and matches the Baker-Campbell-Hausdorff expansion of the
two flat connections through second order, which is what ties the real
and complex forms of the equations together at small phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaugefield import (
    Connection,
    FieldState,
    TangentPair,
    cochain_norm,
    connection_plus,
    covariant_d1,
    curvature,
    d1_action,
    d1_l2_adjoint,
    face_steps,
    gauge_act,
    phi_to_higgs,
)
from .hypersym import omega, p_theta


@dataclass(frozen=True)
class MomentValue:
    """Values of the moment maps per face."""

    mu_I: np.ndarray  # (F, n, n) skew-hermitian
    mu_C: np.ndarray  # (F, n, n) complex (= mu_S + i mu_T)


def cup_antisymmetrized(conn: Connection, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-face sum over ordered step pairs of [x_i, y_j] - [y_i, x_j], halved.

    The steps are the signed boundary values parallel-transported to the
    face base, so the output conjugates at the base under gauge
    transformations.  For x = y this is the ordered bracket sum
    sum_{i<j} [x_i, x_j].
    """
    surf = conn.surface
    n = conn.rank
    out = np.zeros((surf.face_count, n, n), dtype=complex)
    for f in range(surf.face_count):
        xs, _ = face_steps(conn, f, x)
        ys, _ = face_steps(conn, f, y)
        acc = np.zeros((n, n), dtype=complex)
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                acc += xs[i] @ ys[j] - ys[j] @ xs[i]
                acc -= ys[i] @ xs[j] - xs[j] @ ys[i]
        out[f] = acc / 2.0
    return out


def graded_face_wedge(conn: Connection, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Discrete graded bracket [x ^ y] per face (symmetric in its arguments)."""
    surf = conn.surface
    n = conn.rank
    out = np.zeros((surf.face_count, n, n), dtype=complex)
    for f in range(surf.face_count):
        xs, _ = face_steps(conn, f, x)
        ys, _ = face_steps(conn, f, y)
        acc = np.zeros((n, n), dtype=complex)
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                acc += xs[i] @ ys[j] - ys[j] @ xs[i]
                acc += ys[i] @ xs[j] - xs[j] @ ys[i]
        out[f] = acc / 2.0
    return out


def wedge_bracket_phi(conn: Connection, phi: np.ndarray) -> np.ndarray:
    """Discrete [Phi ^ Phi^*] per face, computed from phi's boundary steps.

    Equals minus half the ordered bracket sum of the transported phi steps;
    exactly skew-hermitian, identically zero at rank 1, and the unique
    quadratic term that makes mu_I vanish through third order whenever the
    two associated connections are flat.
    """
    return -cup_antisymmetrized(conn, phi, phi) / 2.0


def moment(state: FieldState) -> MomentValue:
    """Moment map values (mu_I, mu_C) of a field state."""
    higgs = phi_to_higgs(state.surface, state.phi)
    mu_i = curvature(state.conn) - wedge_bracket_phi(state.conn, state.phi)
    mu_c = covariant_d1(state.conn, higgs)
    return MomentValue(mu_I=mu_i, mu_C=mu_c)


def coclosed_residual(state: FieldState) -> np.ndarray:
    """(d^nabla)^* phi at the state's own connection (0-cochain)."""
    zero = np.zeros_like(state.phi)
    return d1_l2_adjoint(state, TangentPair(state.phi, zero))


def residual(state: FieldState) -> dict:
    """Residual norms of the equations in complex and real form.

    complex_form: (||mu_I||, ||mu_C||) in the M2-weighted norm.
    real_form: flatness of the two exact p_theta(state, 0) link fields and
    the coclosedness norm of phi, all of which vanish together with the
    complex form on solutions.
    """
    surf = state.surface
    mv = moment(state)
    c_plus, c_minus = p_theta(state, 0.0)
    return {
        "complex_form": (
            cochain_norm(surf.M2, mv.mu_I),
            cochain_norm(surf.M2, mv.mu_C),
        ),
        "real_form": (
            cochain_norm(surf.M2, curvature(c_plus)),
            cochain_norm(surf.M2, curvature(c_minus)),
            cochain_norm(surf.M0, coclosed_residual(state)),
        ),
    }


def real_form_residual(state: FieldState) -> float:
    """Max of the three real-form residual norms."""
    return max(residual(state)["real_form"])


def moment_pairing(surface, values: np.ndarray, xi: np.ndarray, base: np.ndarray):
    """M2-weighted trace pairing of face values against xi at face bases."""
    acc = 0j
    for f in range(surface.face_count):
        acc += surface.M2[f] * np.trace(values[f] @ xi[base[f]])
    return acc


def moment_derivative_check(
    state: FieldState,
    tp: TangentPair,
    xi: np.ndarray,
    step: float = 1e-4,
) -> float:
    """First-order test of the moment-map property, max over I, S, T.

    Compares the finite difference of <mu_X, xi> along the chart curve
    (exp(t a) U, phi + t psi) against omega_X(d1_action(xi), tp).  The
    mu_I slot pairs by the plain weighted trace; the mu_C slot carries the
    dual-pairing normalization factor -2i of the identification between
    Higgs fields and functionals.  With these pairings the identity is
    exact at rank 1 on the 2x2 torus for arbitrary states, and exact at
    trivial-transport states in general; elsewhere it carries an
    h-independent discretization defect on top of the O(h) finite
    difference error (see ``moment_derivative_defect``).
    """
    surf = state.surface
    base = surf.face_base

    def paired(s: FieldState) -> tuple[float, float, float]:
        mv = moment(s)
        p_i = moment_pairing(surf, mv.mu_I, xi, base).real
        p_c = -2j * moment_pairing(surf, mv.mu_C, xi, base)
        return p_i, p_c.real, p_c.imag

    moved = FieldState(
        connection_plus(state.conn, tp.a, step), state.phi + step * tp.psi
    )
    f0 = paired(state)
    f1 = paired(moved)
    fd = [(b - a) / step for a, b in zip(f0, f1)]
    d1xi = d1_action(state, xi)
    om = [
        omega(surf, "I", d1xi, tp),
        omega(surf, "S", d1xi, tp),
        omega(surf, "T", d1xi, tp),
    ]
    return max(abs(a - b) for a, b in zip(fd, om))


def moment_derivative_defect(
    state: FieldState, tp: TangentPair, xi: np.ndarray
) -> float:
    """Step-independent part of the moment-derivative residual.

    Evaluated at a step small enough that the finite-difference truncation
    error is negligible; this is the structural discretization defect that
    ``moment_derivative_check`` converges to as the step vanishes.
    """
    return moment_derivative_check(state, tp, xi, step=1e-6)


def gauge_invariance_probe(state: FieldState, u: np.ndarray) -> float:
    """Max difference of residual norms under a gauge transformation."""
    r0 = residual(state)
    r1 = residual(gauge_act(u, state))
    vals0 = list(r0["complex_form"]) + list(r0["real_form"])
    vals1 = list(r1["complex_form"]) + list(r1["real_form"])
    return max(abs(a - b) for a, b in zip(vals0, vals1))
