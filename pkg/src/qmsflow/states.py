"""Faithful states, the modular operator and its eigenbasis, and the
sigma-weighted family of inner products.

For an invertible density matrix sigma the modular operator is
Delta_sigma(A) = sigma A sigma^{-1}.  Its eigenvalues are ratios of
eigenvalues of sigma and are written e^{-omega}; the exponents omega are
the Bohr frequencies.  The weighted inner products are

    <A, B>_s = Tr[sigma^s A^* sigma^{1-s} B]          (s in [0, 1])
    <A, B>_f = Tr[A^* f(Delta_sigma)(B) sigma]        (f > 0 on the spectrum)

with s = 1 the GNS form, s = 1/2 the KMS form and f(t) = (t-1)/log t the
BKM form.  All of them assign <1, A> = Tr[sigma A].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    HermitianSpectrum,
    check_finite,
    dag,
    hermitian_eig,
    hs_inner,
    sharp,
)

__all__ = [
    "DensityState",
    "ModularData",
    "modular_apply",
    "modular_shift",
    "modular_superoperator",
    "build_modular_basis",
    "inner_s",
    "inner_f",
    "bkm_weight",
    "weight_superoperator_s",
    "weight_superoperator_f",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
BOHR_RTOL = 1e-10


@dataclass(frozen=True)
class DensityState:
    """Strictly positive Hermitian matrix of unit trace with cached spectrum."""

    rho: np.ndarray
    spectrum: HermitianSpectrum

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "DensityState":
        rho = check_finite(rho, "density matrix")
        n = rho.shape[0]
        if rho.shape != (n, n):
            raise ValueError("density matrix must be square")
        herm_err = float(np.linalg.norm(rho - dag(rho)))
        if herm_err > HERMITICITY_TOL * max(1.0, float(np.linalg.norm(rho))):
            raise ValueError(f"not Hermitian: |rho - rho^*| = {herm_err:.3e}")
        trace_err = abs(complex(np.trace(rho)) - 1.0)
        if trace_err > TRACE_TOL:
            raise ValueError(f"trace differs from one by {trace_err:.3e}")
        spec = hermitian_eig(rho)
        lo = float(spec.eigenvalues[0])
        if lo <= 0.0:
            raise ValueError(f"not strictly positive: min eigenvalue = {lo:.3e}")
        return cls(0.5 * (rho + dag(rho)), spec)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.spectrum.eigenvectors

    def power(self, p: float) -> np.ndarray:
        return self.spectrum.apply(lambda x: x**p)

    def log(self) -> np.ndarray:
        return self.spectrum.apply(np.log)


def modular_apply(sigma: DensityState, a: np.ndarray) -> np.ndarray:
    """Delta_sigma(A) = sigma A sigma^{-1}."""
    a = np.asarray(a, dtype=complex)
    if a.shape != sigma.rho.shape:
        raise ValueError("dimension mismatch")
    return sigma.rho @ a @ sigma.power(-1.0)


def modular_shift(sigma: DensityState, t: float, a: np.ndarray) -> np.ndarray:
    """Imaginary-time modular flow A |-> sigma^t A sigma^{-t}."""
    return sigma.power(t) @ np.asarray(a, dtype=complex) @ sigma.power(-t)


def modular_superoperator(sigma: DensityState, power: float = 1.0) -> np.ndarray:
    """Matrix of Delta_sigma^power on column-stacked matrices."""
    return sharp(sigma.power(power), sigma.power(-power))


@dataclass(frozen=True)
class ModularData:
    """Orthonormal eigenbasis of the modular operator.

    The basis is orthonormal for the normalized Hilbert-Schmidt inner
    product, starts with the identity, is closed under adjoints via the
    index involution ``conj_pairing`` (F_{a'} = F_a^*, omega_{a'} =
    -omega_a), and satisfies Delta_sigma F_a = e^{-omega_a} F_a.
    Ordering: the identity first, then ascending Bohr frequency with the
    originating eigenvector pair (i, j) as tie-breaker.
    """

    sigma: DensityState
    bohr_frequencies: np.ndarray
    basis: list = field(repr=False)
    conj_pairing: np.ndarray

    @property
    def size(self) -> int:
        return len(self.basis)


def _group_indices(values: np.ndarray, rtol: float) -> list:
    """Group sorted positions of ``values`` whose gaps are below tolerance."""
    order = np.argsort(values)
    scale = max(float(np.max(np.abs(values))), 1.0) if values.size else 1.0
    groups: list[list[int]] = []
    for pos in order:
        if groups and abs(values[pos] - values[groups[-1][-1]]) <= rtol * scale:
            groups[-1].append(int(pos))
        else:
            groups.append([int(pos)])
    return groups


def _helmert_rows(m: int) -> np.ndarray:
    """Real orthogonal m x m matrix whose first row is (1, ..., 1)/sqrt(m)."""
    h = np.zeros((m, m))
    h[0] = 1.0 / np.sqrt(m)
    for k in range(1, m):
        h[k, :k] = 1.0
        h[k, k] = -k
        h[k] /= np.sqrt(k * (k + 1))
    return h


def build_modular_basis(sigma: DensityState, rtol: float = BOHR_RTOL) -> ModularData:
    """Construct a modular basis for ``sigma``.

    Starting from the rank-one units sqrt(n) |eta_i><eta_j| on the
    eigenvectors of sigma, eigenvalues of sigma are merged up to round-off
    before pairing.  Within the omega = 0 block every element is made
    self-adjoint: the diagonal units are rotated by a Helmert-style real
    orthogonal matrix whose first output is the identity, and off-diagonal
    units inside degenerate eigenspaces are replaced by their real and
    imaginary symmetrizations.  For omega != 0 the units are kept as
    adjoint-conjugate pairs.
    """
    n = sigma.dim
    lam = sigma.eigenvalues
    u = sigma.eigenvectors
    loglam = np.log(lam)

    eig_groups = _group_indices(lam, rtol=1e-12)
    group_of = np.empty(n, dtype=int)
    for g, members in enumerate(eig_groups):
        for i in members:
            group_of[i] = g
    # representative log-eigenvalue per merged group
    group_log = np.array([np.mean(loglam[members]) for members in eig_groups])

    def unit(i: int, j: int) -> np.ndarray:
        return np.sqrt(n) * np.outer(u[:, i], np.conj(u[:, j]))

    entries: list[tuple[float, tuple, np.ndarray, tuple]] = []
    # key = (omega, (i, j)); partner key recorded for adjoint pairing

    # omega = 0 block, diagonal part: Helmert rotation anchored at identity
    h = _helmert_rows(n)
    diag_units = [unit(i, i) for i in range(n)]
    for k in range(n):
        mat = sum(h[k, i] * diag_units[i] for i in range(n))
        entries.append((0.0, (-1, k), mat, (-1, k)))

    # off-diagonal units
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if group_of[i] == group_of[j]:
                # degenerate pair: self-adjoint symmetrizations, omega = 0
                if i < j:
                    f = unit(i, j)
                    fs = (f + dag(f)) / np.sqrt(2.0)
                    fa = 1j * (f - dag(f)) / np.sqrt(2.0)
                    entries.append((0.0, (i, j), fs, (i, j)))
                    entries.append((0.0, (j, i), fa, (j, i)))
            else:
                omega = float(group_log[group_of[j]] - group_log[group_of[i]])
                entries.append((omega, (i, j), unit(i, j), (j, i)))

    entries.sort(key=lambda e: (e[0], e[1]))
    # identity first, then ascending omega with lexicographic tie-break
    first = next(k for k, e in enumerate(entries) if e[1] == (-1, 0))
    entries.insert(0, entries.pop(first))

    basis = [e[2] for e in entries]
    omegas = np.array([e[0] for e in entries])
    keys = {e[1]: pos for pos, e in enumerate(entries)}
    pairing = np.array([keys[e[3]] for e in entries], dtype=int)
    return ModularData(sigma, omegas, basis, pairing)


def inner_s(sigma: DensityState, s: float, a: np.ndarray, b: np.ndarray) -> complex:
    """Weighted inner product Tr[sigma^s A^* sigma^{1-s} B] for s in [0, 1]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s = {s} outside [0, 1]")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return complex(np.trace(sigma.power(s) @ dag(a) @ sigma.power(1.0 - s) @ b))


def bkm_weight(t: float) -> float:
    """f_0(t) = (t - 1)/log t with the limit value 1 at t = 1."""
    if abs(t - 1.0) < 1e-9:
        d = t - 1.0
        return 1.0 + d / 2.0 - d * d / 12.0
    return (t - 1.0) / np.log(t)


def inner_f(sigma: DensityState, f, a: np.ndarray, b: np.ndarray) -> complex:
    """Weighted inner product Tr[A^* f(Delta_sigma)(B) sigma].

    ``f`` must be positive on the spectrum of Delta_sigma, which consists
    of the ratios of eigenvalues of sigma.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    lam = sigma.eigenvalues
    u = sigma.eigenvectors
    ratios = lam[:, None] / lam[None, :]
    fvals = np.vectorize(f)(ratios)
    if np.any(fvals <= 0.0):
        raise ValueError("f is not positive on the spectrum of the modular operator")
    b_tilde = dag(u) @ b @ u
    fb = u @ (fvals * b_tilde) @ dag(u)
    return complex(np.trace(dag(a) @ fb @ sigma.rho))


def weight_superoperator_s(sigma: DensityState, s: float) -> np.ndarray:
    """Superoperator Omega_s with <A, B>_s = <A, Omega_s B>_HS (unnormalized).

    Omega_s(B) = sigma^{1-s} B sigma^s.
    """
    return sharp(sigma.power(1.0 - s), sigma.power(s))


def vec_kernel(kernel: np.ndarray) -> np.ndarray:
    """Column-stacked ordering of an entrywise superoperator kernel."""
    return np.asarray(kernel).reshape(-1, order="F")


def weight_superoperator_f(sigma: DensityState, f) -> np.ndarray:
    """Superoperator Omega_f = R_sigma f(Delta_sigma) for <A, B>_f."""
    lam = sigma.eigenvalues
    u = sigma.eigenvectors
    ratios = lam[:, None] / lam[None, :]
    fvals = np.vectorize(f)(ratios)
    kernel = fvals * lam[None, :]  # right multiplication contributes lam_k
    w = sharp(dag(u), u)  # X |-> U^* X U
    return dag(w) @ (np.diag(vec_kernel(kernel)) @ w)
