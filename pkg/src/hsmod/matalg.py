"""Matrix kernel for u(n) and End(C^n).

Brackets, exponential/logarithm, the skew projection and the real trace
inner product, for small dense complex matrices (n <= 8 in practice).
Lie-algebra elements are skew-hermitian arrays, group elements unitary
arrays; validity is checked with explicit tolerances instead of wrapper
types, so everything here works on plain numpy arrays.

All functions are pure; arrays are never modified in place.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import BranchCutError, DimensionMismatchError

# Tolerances for the structural invariants.
SKEW_TOL = 1e-14  # relative, on ||M + M^dagger||
UNITARY_TOL = 1e-12  # on ||U^dagger U - I||
BRANCH_MARGIN = 1e-8  # eigenangles closer than this to +-pi are rejected


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def project_skew(m: np.ndarray) -> np.ndarray:
    """Skew-hermitian part (M - M^dagger)/2. Idempotent on skew input."""
    return (m - m.conj().T) / 2.0


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Commutator [x, y] = xy - yx."""
    if x.shape != y.shape:
        raise DimensionMismatchError(
            f"bracket: incompatible shapes {x.shape} and {y.shape}"
        )
    return x @ y - y @ x


def trace_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Real trace pairing Re tr(x^dagger y).

    Positive definite on all of End(C^n); restricts to the standard
    ad-invariant inner product on u(n).
    """
    if x.shape != y.shape:
        raise DimensionMismatchError(
            f"trace_inner: incompatible shapes {x.shape} and {y.shape}"
        )
    return float(np.sum(x.conj() * y).real)


def group_exp(x: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade, via scipy).

    For skew-hermitian input the result is unitary to ~1e-14.
    """
    return scipy.linalg.expm(x)


def group_log(u: np.ndarray, where=None) -> np.ndarray:
    """Principal logarithm of a unitary matrix.

    Computed from the Schur form (diagonal for normal input), with
    eigenangles constrained to (-pi, pi).  Eigenvalues within
    ``BRANCH_MARGIN`` of the cut at -1 raise ``BranchCutError`` rather
    than being perturbed, so the failure mode is deterministic.
    The output is exactly skew-hermitian.
    """
    t, z = scipy.linalg.schur(u, output="complex")
    eig = np.diag(t)
    angles = np.angle(eig)
    if np.any(np.pi - np.abs(angles) < BRANCH_MARGIN):
        raise BranchCutError(
            "matrix logarithm: eigenvalue within margin of the branch cut at -1",
            where=where,
        )
    log_u = (z * (1j * angles)) @ z.conj().T
    return project_skew(log_u)


def is_skew_hermitian(m: np.ndarray, tol: float = SKEW_TOL) -> bool:
    """Check M^dagger = -M entrywise, relative to the matrix scale."""
    scale = max(float(np.max(np.abs(m))), 1.0)
    return float(np.max(np.abs(m + m.conj().T))) <= tol * scale


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n)))) <= tol


def nearest_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary polar factor (projection onto U(n) via SVD)."""
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def skew_basis(n: int) -> list[np.ndarray]:
    """Orthonormal real basis of u(n) under ``trace_inner``.

    n^2 elements: i*E_kk on the diagonal, then (E_kl - E_lk)/sqrt(2)
    and i(E_kl + E_lk)/sqrt(2) for k < l.
    """
    basis = []
    for k in range(n):
        b = np.zeros((n, n), dtype=complex)
        b[k, k] = 1j
        basis.append(b)
    s = 1.0 / np.sqrt(2.0)
    for k in range(n):
        for l in range(k + 1, n):
            b = np.zeros((n, n), dtype=complex)
            b[k, l] = s
            b[l, k] = -s
            basis.append(b)
            b = np.zeros((n, n), dtype=complex)
            b[k, l] = 1j * s
            b[l, k] = 1j * s
            basis.append(b)
    return basis


def random_skew(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random skew-hermitian matrix with entries O(scale)."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * project_skew(z)


def random_unitary(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random unitary exp(X) for a random skew X of size ``scale``."""
    return group_exp(random_skew(rng, n, scale))


def to_reim_pairs(m: np.ndarray) -> list:
    """Serialize a complex matrix as a row-major list of [re, im] pairs."""
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in flat]


def from_reim_pairs(data, n: int) -> np.ndarray:
    """Inverse of ``to_reim_pairs`` for an n x n matrix."""
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    if flat.size != n * n:
        raise DimensionMismatchError(
            f"expected {n * n} entries for an {n}x{n} matrix, got {flat.size}"
        )
    return flat.reshape(n, n)
