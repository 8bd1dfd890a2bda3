"""Detailed-balance Lindblad generators: construction from jump data,
adjoints, semigroups, certification, and restriction to commutative
subalgebras.

A generator specification consists of an invariant state sigma and jumps
{(V_j, omega_j)} that are eigenvectors of the modular operator,

    Delta_sigma V_j = e^{-omega_j} V_j ,

with the set closed under adjoints (V_j^* appears with frequency
-omega_j).  The generator acting on observables is

    L(A) = sum_j e^{-omega_j/2} ( V_j^* [A, V_j] + [V_j^*, A] V_j )

and its Hilbert-Schmidt adjoint, generating the evolution of states, is

    L^+(rho) = sum_j ( e^{-omega_j/2} [V_j rho, V_j^*]
                     + e^{+omega_j/2} [V_j^*, rho V_j] ) .
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import (
    apply_super,
    check_finite,
    choi,
    dag,
    sharp,
    star_swap_residual,
    super_of_left,
    super_of_right,
    vec,
)
from .states import (
    DensityState,
    bkm_weight,
    modular_superoperator,
    weight_superoperator_f,
    weight_superoperator_s,
)

__all__ = [
    "GeneratorSpec",
    "RateMatrix",
    "CertificationReport",
    "build_generator",
    "build_adjoint",
    "certify_detailed_balance",
    "check_complete_positivity",
    "commutant_dimension",
    "ergodicity",
    "semigroup",
    "dual_semigroup",
    "restrict_to_commutative",
    "modular_subalgebra",
]

JUMP_EIGEN_TOL = 1e-10
STAR_CLOSURE_TOL = 1e-9
GNS_FLAG_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorSpec:
    """Invariant state plus modular-eigenvector jump data."""

    sigma: DensityState
    jumps: tuple  # tuple of (V_j: ndarray, omega_j: float)

    @classmethod
    def create(cls, sigma: DensityState, jumps, validate: bool = True) -> "GeneratorSpec":
        packed = tuple((check_finite(v, "jump operator"), float(w)) for v, w in jumps)
        spec = cls(sigma, packed)
        if validate:
            spec.validate()
        return spec

    @property
    def dim(self) -> int:
        return self.sigma.dim

    @property
    def njumps(self) -> int:
        return len(self.jumps)

    def jump_ops(self) -> list:
        return [v for v, _ in self.jumps]

    def omegas(self) -> np.ndarray:
        return np.array([w for _, w in self.jumps])

    def validate(self, eigen_tol: float = JUMP_EIGEN_TOL, star_tol: float = STAR_CLOSURE_TOL):
        """Check the modular-eigenvector and adjoint-closure invariants.

        Raises ValueError describing the worst offender.
        """
        sig = self.sigma
        worst = (0.0, "")
        for k, (v, w) in enumerate(self.jumps):
            if v.shape != sig.rho.shape:
                raise ValueError(f"jump {k} has shape {v.shape}, expected {sig.rho.shape}")
            resid = np.linalg.norm(sig.rho @ v @ sig.power(-1.0) - np.exp(-w) * v)
            rel = resid / max(np.linalg.norm(v), 1e-300)
            if rel > worst[0]:
                worst = (rel, f"jump {k}: |Delta_sigma V - e^(-omega) V| = {rel:.3e} relative")
        if worst[0] > eigen_tol:
            raise ValueError("modular eigenvector condition violated: " + worst[1])

        # adjoint closure must pair the jumps bijectively (self-pairs allowed)
        unconsumed = set(range(self.njumps))
        while unconsumed:
            k = min(unconsumed)
            v, w = self.jumps[k]
            best = None
            for m in unconsumed:
                vm, wm = self.jumps[m]
                err = np.linalg.norm(vm - dag(v)) / max(np.linalg.norm(v), 1e-300)
                err += abs(wm + w) / max(1.0, abs(w))
                if best is None or err < best[1]:
                    best = (m, err)
            if best is None or best[1] > star_tol:
                raise ValueError(
                    f"jump set not closed under adjoints: no partner for jump {k} "
                    f"(best mismatch {best[1] if best else float('inf'):.3e})"
                )
            unconsumed.discard(k)
            unconsumed.discard(best[0])
        return self


def build_generator(spec: GeneratorSpec) -> np.ndarray:
    """Superoperator of L(A) = sum_j e^{-omega_j/2}(V^*[A,V] + [V^*,A]V).

    Expanded per jump this is 2 V^* A V - {V^* V, A} times e^{-omega/2}.
    """
    n = spec.dim
    big = n * n
    out = np.zeros((big, big), dtype=complex)
    eye = np.eye(n)
    for v, w in spec.jumps:
        vv = dag(v) @ v
        out += np.exp(-w / 2.0) * (
            2.0 * sharp(dag(v), v) - sharp(vv, eye) - sharp(eye, vv)
        )
    return out


def build_adjoint(spec: GeneratorSpec) -> np.ndarray:
    """Superoperator of L^+(rho) per the commutator form above.

    Given adjoint closure of the jump set this equals the conjugate
    transpose of :func:`build_generator` exactly.
    """
    n = spec.dim
    big = n * n
    out = np.zeros((big, big), dtype=complex)
    eye = np.eye(n)
    for v, w in spec.jumps:
        vd = dag(v)
        # [V rho, V^*] = V rho V^* - V^* V rho
        out += np.exp(-w / 2.0) * (sharp(v, vd) - sharp(vd @ v, eye))
        # [V^*, rho V] = V^* rho V - rho V V^*
        out += np.exp(+w / 2.0) * (sharp(vd, v) - sharp(eye, v @ vd))
    return out


def _rel_opnorm(x: np.ndarray, scale: float) -> float:
    return float(np.linalg.norm(x, 2) / max(scale, 1e-300))


@dataclass
class CertificationReport:
    """Residuals of the detailed-balance battery for one superoperator."""

    dim: int
    s_residuals: dict
    bkm_residual: float
    modular_commutation: float
    star_preservation: float
    unital_residual: float
    gns_dbc: bool
    kms_only: bool
    tolerance: float = GNS_FLAG_TOL

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "s_residuals": {str(k): v for k, v in self.s_residuals.items()},
            "bkm_residual": self.bkm_residual,
            "modular_commutation": self.modular_commutation,
            "star_preservation": self.star_preservation,
            "unital_residual": self.unital_residual,
            "gns_dbc": self.gns_dbc,
            "kms_only": self.kms_only,
            "tolerance": self.tolerance,
        }


def _self_adjointness_residual(l: np.ndarray, omega_w: np.ndarray) -> float:
    """Relative size of Omega L - L^+ Omega, zero iff L is Omega-symmetric."""
    lhs = omega_w @ l - dag(l) @ omega_w
    scale = np.linalg.norm(omega_w, 2) * max(np.linalg.norm(l, 2), 1e-300)
    return _rel_opnorm(lhs, scale)


def certify_detailed_balance(
    l: np.ndarray,
    sigma: DensityState,
    s_grid=(0.0, 0.25, 0.5, 0.75, 1.0),
    tol: float = GNS_FLAG_TOL,
) -> CertificationReport:
    """Measure self-adjointness of a superoperator in the weighted forms.

    Reports residuals of s-self-adjointness on the given grid, of
    BKM-self-adjointness, of commutation with the modular operator, and of
    star preservation.  The GNS flag is set when the s = 1 residual is
    below ``tol``; ``kms_only`` flags maps that are KMS-symmetric without
    commuting with the modular operator.
    """
    l = check_finite(l, "superoperator")
    n = sigma.dim
    s_res = {}
    for s in s_grid:
        s_res[float(s)] = _self_adjointness_residual(l, weight_superoperator_s(sigma, s))
    bkm = _self_adjointness_residual(l, weight_superoperator_f(sigma, bkm_weight))
    delta = modular_superoperator(sigma)
    mod_comm = _rel_opnorm(
        l @ delta - delta @ l, np.linalg.norm(l, 2) * np.linalg.norm(delta, 2)
    )
    star = star_swap_residual(l)
    unital = float(np.linalg.norm(l @ vec(np.eye(n))) / max(np.linalg.norm(l, 2), 1e-300))
    gns = s_res.get(1.0, _self_adjointness_residual(l, weight_superoperator_s(sigma, 1.0)))
    kms = s_res.get(0.5, _self_adjointness_residual(l, weight_superoperator_s(sigma, 0.5)))
    return CertificationReport(
        dim=n,
        s_residuals=s_res,
        bkm_residual=bkm,
        modular_commutation=mod_comm,
        star_preservation=star,
        unital_residual=unital,
        gns_dbc=bool(gns < tol),
        kms_only=bool(kms < tol and mod_comm > 100 * tol),
        tolerance=tol,
    )


def _identity_anchored_basis(n: int) -> list:
    """Orthonormal basis of the normalized HS space with the identity first.

    Matrix units scaled by sqrt(n), with the diagonal ones rotated by a
    Helmert-style real orthogonal matrix so the first element is 1.
    """
    from .states import _helmert_rows

    h = _helmert_rows(n)
    basis = []
    diag_units = []
    for i in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[i, i] = np.sqrt(n)
        diag_units.append(m)
    for k in range(n):
        basis.append(sum(h[k, i] * diag_units[i] for i in range(n)))
    for i in range(n):
        for j in range(n):
            if i != j:
                m = np.zeros((n, n), dtype=complex)
                m[i, j] = np.sqrt(n)
                basis.append(m)
    return basis


def check_complete_positivity(
    l: np.ndarray,
    psd_tol: float = 1e-10,
    cross_check_times=(0.01, 0.1, 1.0),
) -> tuple[bool, float]:
    """Conditional complete positivity of a unital, star-preserving L.

    Tests positivity of the reduced coefficient matrix of L in an
    identity-anchored orthonormal basis (the generated semigroup is CP iff
    that block is PSD), and cross-checks that the Choi matrices of
    exp(t L) at a few times have no eigenvalue below the tolerance.
    Returns (verdict, minimum eigenvalue of the reduced block).
    """
    from .canonical import gks_matrix

    l = check_finite(l, "superoperator")
    big = l.shape[0]
    n = int(round(np.sqrt(big)))
    scale = max(np.linalg.norm(l, 2), 1e-300)
    if np.linalg.norm(l @ vec(np.eye(n))) > 1e-8 * scale:
        raise ValueError("superoperator does not annihilate the identity")
    if star_swap_residual(l) > 1e-8:
        raise ValueError("superoperator is not star-preserving")

    basis = _identity_anchored_basis(n)
    c = gks_matrix(l, basis).matrix
    reduced = c[1:, 1:]
    evals = np.linalg.eigvalsh(0.5 * (reduced + dag(reduced)))
    min_eig = float(evals[0])
    verdict = min_eig >= -psd_tol * max(1.0, float(evals[-1]) if evals.size else 1.0)

    if verdict:
        for t in cross_check_times:
            ch = choi(scipy.linalg.expm(t * l))
            lo = float(np.linalg.eigvalsh(0.5 * (ch + dag(ch)))[0])
            if lo < -1e-8 * max(1.0, np.linalg.norm(ch, 2)):
                verdict = False
                break
    return bool(verdict), min_eig


def commutant_dimension(ops, dim: int, tol: float = 1e-9) -> int:
    """Dimension of {X : [V, X] = 0 for all V} via a stacked null space."""
    if not ops:
        return dim * dim
    blocks = [super_of_left(v) - super_of_right(v) for v in ops]
    stacked = np.vstack(blocks)
    svals = np.linalg.svd(stacked, compute_uv=False)
    scale = max(float(svals[0]), 1.0)
    return int(np.sum(svals <= tol * scale))


def ergodicity(spec: GeneratorSpec, tol: float = 1e-9) -> int:
    """Commutant dimension of the jump set; 1 means ergodic."""
    return commutant_dimension(spec.jump_ops(), spec.dim, tol)


def _kms_symmetric_exp(l: np.ndarray, sigma: DensityState, t: float) -> np.ndarray:
    """exp(tL) through the Hermitian conjugation Omega^{1/2} L Omega^{-1/2}.

    Valid whenever L is KMS-symmetric for sigma; the conjugated matrix is
    Hermitian so a stable eigensolve replaces the general Pade route.
    """
    w_half = sharp(sigma.power(0.25), sigma.power(0.25))
    w_half_inv = sharp(sigma.power(-0.25), sigma.power(-0.25))
    h = w_half @ l @ w_half_inv
    h = 0.5 * (h + dag(h))
    vals, vecs = np.linalg.eigh(h)
    core = (vecs * np.exp(t * vals)) @ dag(vecs)
    return w_half_inv @ core @ w_half


def semigroup(l: np.ndarray, t: float, sigma: DensityState | None = None) -> np.ndarray:
    """exp(tL) for t >= 0.

    With ``sigma`` supplied and L KMS-symmetric for it (the detailed
    balance case), a spectral route through the KMS weighting is used;
    otherwise scaling-and-squaring Pade.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    l = check_finite(l, "superoperator")
    if sigma is not None:
        kms = _self_adjointness_residual(l, weight_superoperator_s(sigma, 0.5))
        if kms < 1e-8:
            return _kms_symmetric_exp(l, sigma, t)
    return scipy.linalg.expm(t * l)


def dual_semigroup(l_adj: np.ndarray, t: float, sigma: DensityState | None = None) -> np.ndarray:
    """exp(t L^+) acting on states; same routing as :func:`semigroup`."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    l_adj = check_finite(l_adj, "superoperator")
    if sigma is not None:
        kms = _self_adjointness_residual(dag(l_adj), weight_superoperator_s(sigma, 0.5))
        if kms < 1e-8:
            return dag(_kms_symmetric_exp(dag(l_adj), sigma, t))
    return scipy.linalg.expm(t * l_adj)


@dataclass(frozen=True)
class RateMatrix:
    """Transition-rate matrix of a restricted classical chain."""

    rates: np.ndarray  # off-diagonal >= 0, rows sum to zero
    stationary: np.ndarray

    @property
    def size(self) -> int:
        return self.rates.shape[0]

    def detailed_balance_residual(self) -> float:
        q = self.rates
        p = self.stationary
        flux = p[:, None] * q
        return float(np.max(np.abs(flux - flux.T)))

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.rates.sum(axis=1))))


def restrict_to_commutative(
    spec: GeneratorSpec,
    projections,
    invariance_tol: float = 1e-10,
    generator: np.ndarray | None = None,
) -> RateMatrix:
    """Jump rates Q_kl = Tr[E_k L(E_l)] / Tr[E_k] of the restricted chain.

    ``projections`` must be mutually orthogonal projections summing to the
    identity whose span is invariant under the dual generator.  The
    stationary vector is sigma_k = Tr[sigma E_k] and classical detailed
    balance sigma_k Q_kl = sigma_l Q_lk is inherited from the quantum
    detailed balance condition.
    """
    n = spec.dim
    projections = [check_finite(e, "projection") for e in projections]
    for k, e in enumerate(projections):
        if e.shape != (n, n):
            raise ValueError(f"projection {k} has shape {e.shape}, expected {(n, n)}")
    total = sum(projections)
    if np.linalg.norm(total - np.eye(n)) > 1e-10:
        raise ValueError("projections do not sum to the identity")
    for k, e in enumerate(projections):
        if np.linalg.norm(e @ e - e) > 1e-10 or np.linalg.norm(e - dag(e)) > 1e-10:
            raise ValueError(f"input {k} is not an orthogonal projection")
        for m in range(k):
            if np.linalg.norm(projections[m] @ e) > 1e-10:
                raise ValueError(f"projections {m} and {k} are not orthogonal")

    l = build_generator(spec) if generator is None else generator
    l_adj = dag(l)
    traces = np.array([float(np.trace(e).real) for e in projections])

    # invariance of the span under the dual generator
    for k, e in enumerate(projections):
        image = apply_super(l_adj, e)
        inside = sum(
            (np.trace(projections[m] @ image) / traces[m]) * projections[m]
            for m in range(len(projections))
        )
        resid = np.linalg.norm(image - inside)
        if resid > invariance_tol * max(1.0, np.linalg.norm(l, 2)):
            raise ValueError(
                f"span of projections is not invariant under the dual generator "
                f"(projection {k}, residual {resid:.3e})"
            )

    m = len(projections)
    q = np.zeros((m, m))
    for k in range(m):
        for ell in range(m):
            val = np.trace(projections[k] @ apply_super(l, projections[ell]))
            q[k, ell] = val.real / traces[k]
    stationary = np.array(
        [float(np.trace(spec.sigma.rho @ e).real) for e in projections]
    )
    return RateMatrix(q, stationary)


def modular_subalgebra(sigma: DensityState, degeneracy_rtol: float = 1e-10) -> list:
    """Minimal projections generating the fixed algebra of Delta_sigma.

    Only supports nondegenerate sigma, where the fixed algebra is the span
    of the rank-one spectral projections; degenerate input is rejected.
    """
    lam = sigma.eigenvalues
    gaps = np.diff(np.sort(lam))
    if np.any(gaps <= degeneracy_rtol * float(np.max(np.abs(lam)))):
        raise ValueError("sigma has (numerically) degenerate eigenvalues")
    u = sigma.eigenvectors
    return [np.outer(u[:, i], np.conj(u[:, i])) for i in range(sigma.dim)]
