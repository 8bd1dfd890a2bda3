"""Dense complex-matrix substrate: Hilbert-Schmidt geometry, superoperators,
Choi matrices and Hermitian spectral calculus.

Conventions used throughout the package:

  * Vectorization is COLUMN stacking:  vec(X)[i + k*n] = X[i, k].
    Under this convention the map  X |-> A X B  has the n^2 x n^2 matrix
    kron(B.T, A), and a superoperator S acts by  unvec(S @ vec(X)).
  * The normalized Hilbert-Schmidt inner product is
        <A, B> = Tr[A^* B] / n ,
    so that the identity has norm one.  The unnormalized trace pairing is
    used where an explicit flag or function name says so.
  * Hermitian matrices are symmetrized ((A + A^*)/2) before any eigensolve
    to absorb round-off, and eigenvector phases are fixed so the
    largest-magnitude entry of each column is real positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "vec",
    "unvec",
    "dag",
    "hs_inner",
    "hs_norm",
    "sharp",
    "apply_super",
    "super_of_left",
    "super_of_right",
    "commutator_super",
    "choi",
    "HermitianSpectrum",
    "hermitian_eig",
    "spectral_calculus",
    "check_finite",
    "is_star_preserving_residual",
    "star_swap_residual",
    "traceless_hermitian_basis",
]

# Eigenvalues closer than this (relative to the largest |eigenvalue|) are
# treated as degenerate when grouping spectral data.
DEGENERACY_RTOL = 1e-12


def check_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(a).T


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector: vec(X)[i + k*n] = X[i, k]."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v).reshape(-1)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a square matrix")
    return v.reshape((n, n), order="F")


def hs_inner(a: np.ndarray, b: np.ndarray, normalized: bool = False) -> complex:
    """Hilbert-Schmidt inner product Tr[A^* B], conjugate-linear in A.

    With ``normalized`` the trace is divided by the dimension, making the
    identity a unit vector.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    val = complex(np.sum(np.conj(a) * b))
    if normalized:
        val /= a.shape[0]
    return val


def hs_norm(a: np.ndarray, normalized: bool = False) -> float:
    return float(np.sqrt(max(hs_inner(a, a, normalized).real, 0.0)))


def sharp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of the two-sided multiplication X |-> A X B.

    Column stacking gives the Kronecker factorization kron(B.T, A); the
    adjoint in the Hilbert-Schmidt sense is sharp(A^*, B^*).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.kron(b.T, a)


def apply_super(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a superoperator matrix to a matrix argument."""
    x = np.asarray(x)
    return unvec(np.asarray(s) @ vec(x), x.shape[0])


def super_of_left(a: np.ndarray) -> np.ndarray:
    """Superoperator of left multiplication X |-> A X."""
    a = np.asarray(a, dtype=complex)
    return np.kron(np.eye(a.shape[0]), a)


def super_of_right(b: np.ndarray) -> np.ndarray:
    """Superoperator of right multiplication X |-> X B."""
    b = np.asarray(b, dtype=complex)
    return np.kron(b.T, np.eye(b.shape[0]))


def commutator_super(v: np.ndarray) -> np.ndarray:
    """Superoperator of X |-> [V, X]."""
    return super_of_left(v) - super_of_right(v)


def choi(s: np.ndarray) -> np.ndarray:
    """Choi matrix sum_ij K(E_ij) (x) E_ij of the superoperator K.

    The result is an n^2 x n^2 matrix; K is completely positive iff the
    Choi matrix is positive semidefinite.
    """
    s = np.asarray(s, dtype=complex)
    big = s.shape[0]
    n = int(round(np.sqrt(big)))
    out = np.zeros((n * n, n * n), dtype=complex)
    eij = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            eij[i, j] = 1.0
            out += np.kron(apply_super(s, eij), eij)
            eij[i, j] = 0.0
    return out


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dag(u)

    def apply(self, f) -> np.ndarray:
        """Matrix function f applied through the eigendecomposition."""
        u = self.eigenvectors
        with np.errstate(all="ignore"):
            fvals = np.asarray([f(x) for x in self.eigenvalues], dtype=complex)
        if not np.all(np.isfinite(fvals)):
            raise ValueError("function is not finite on the spectrum")
        if np.allclose(fvals.imag, 0.0):
            fvals = fvals.real
        return (u * fvals) @ dag(u)


def _fix_phases(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    u = np.array(u, copy=True)
    idx = np.argmax(np.abs(u), axis=0)
    for k, i in enumerate(idx):
        z = u[i, k]
        if abs(z) > 0:
            u[:, k] *= np.conj(z) / abs(z)
    return u


def hermitian_eig(a: np.ndarray, hermiticity_tol: float = 1e-10) -> HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix with deterministic phases.

    The input is symmetrized before the solve; inputs farther than
    ``hermiticity_tol`` (relative) from Hermitian are rejected.
    """
    a = check_finite(a)
    scale = max(float(np.linalg.norm(a)), 1.0)
    if np.linalg.norm(a - dag(a)) > hermiticity_tol * scale:
        raise ValueError("matrix is not Hermitian")
    sym = 0.5 * (a + dag(a))
    vals, vecs = np.linalg.eigh(sym)
    return HermitianSpectrum(vals, _fix_phases(vecs))


def spectral_calculus(a: np.ndarray, f, hermiticity_tol: float = 1e-10) -> np.ndarray:
    """f(A) = U f(Lambda) U^* for Hermitian A.

    ``f`` must be defined on the spectrum; for example log and negative
    powers require a positive definite argument.
    """
    spec = hermitian_eig(a, hermiticity_tol)
    return spec.apply(f)


def traceless_hermitian_basis(n: int) -> list:
    """Real-orthonormal basis of traceless Hermitian n x n matrices.

    Orthonormal for the unnormalized trace pairing Tr[B_a B_b] = delta_ab;
    there are n^2 - 1 elements.
    """
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = -1j / np.sqrt(2.0)
            m[j, i] = +1j / np.sqrt(2.0)
            basis.append(m)
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -k
        d /= np.linalg.norm(d)
        basis.append(np.diag(d).astype(complex))
    return basis


def is_star_preserving_residual(s: np.ndarray) -> float:
    """Relative deviation of a superoperator from K(X^*) = K(X)^*.

    With column stacking, vec(X^dag) = P conj(vec X) where P swaps the
    (i, k) index pair, so star preservation is exactly P S P = conj(S).
    """
    return star_swap_residual(s)


def star_swap_residual(s: np.ndarray) -> float:
    s = np.asarray(s, dtype=complex)
    big = s.shape[0]
    n = int(round(np.sqrt(big)))
    idx = np.arange(big).reshape(n, n, order="F").T.reshape(-1, order="F")
    resid = np.linalg.norm(s[np.ix_(idx, idx)] - np.conj(s))
    scale = max(np.linalg.norm(s), 1e-300)
    return float(resid / scale)
