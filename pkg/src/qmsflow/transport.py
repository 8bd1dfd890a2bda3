"""Transport Riemannian structure on faithful states.

A tangent vector at rho (traceless Hermitian rho-dot) is identified with
the unique traceless self-adjoint potential U solving the continuity
equation

    rho-dot = -div( [rho]_omega grad U ) ,

and the squared metric is

    g_rho(rho-dot, rho-dot) = sum_j <d_j U, [rho]_{omega_j} d_j U>
                            = Tr[U rho-dot]                (unnormalized).

On the real space of traceless Hermitian matrices the operator
A |-> -div([rho] grad A) is a symmetric positive-definite matrix M, so
the solve is a Cholesky factorization, the metric value is a quadratic
form in M^{-1}, and the coordinate metric tensor is M^{-1} itself in an
orthonormal coordinate basis.  Geodesic distances are estimated from
above by minimizing the midpoint-rule action of a piecewise-linear path;
the same discretization applied to a reversible Markov chain with
logarithmic-mean edge weights serves as the commutative reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import dag, traceless_hermitian_basis
from .states import DensityState
from .generators import GeneratorSpec, RateMatrix, build_adjoint, ergodicity
from .calculus import grad, log_mean, rho_mult, divergence

__all__ = [
    "TangentDecomposition",
    "continuity_solve",
    "metric_tensor",
    "weighted_laplacian_super",
    "riemannian_gradient_flow_check",
    "GeodesicResult",
    "geodesic_distance",
    "metric_monotonicity_check",
    "classical_transport_distance",
]

POSITIVITY_FLOOR = 1e-8
FD_STEP = 1e-6
CONVERGENCE_DROP = 1e-9
CONVERGENCE_SPAN = 5


# ---------------------------------------------------------------------------
# batched metric assembly
# ---------------------------------------------------------------------------


class _MetricWorkspace:
    """Precomputed jump data for batched metric-matrix assembly."""

    def __init__(self, spec: GeneratorSpec):
        self.spec = spec
        n = spec.dim
        self.n = n
        self.basis = traceless_hermitian_basis(n)
        self.nb = len(self.basis)
        # derivatives d_j B_a, stacked (J, nb, n, n)
        derivs = np.empty((spec.njumps, self.nb, n, n), dtype=complex)
        for j, (v, _) in enumerate(spec.jumps):
            for a, b in enumerate(self.basis):
                derivs[j, a] = v @ b - b @ v
        self.derivs = derivs
        self.omegas = spec.omegas()

    def coords(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of a (traceless Hermitian) matrix in the basis."""
        return np.array([np.trace(b @ x).real for b in self.basis])

    def matrix(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for c, b in zip(y, self.basis):
            out += c * b
        return out

    def metric_matrices(self, rhos: np.ndarray) -> np.ndarray:
        """M[b] for a batch of states, shape (B, nb, nb), real symmetric.

        M[b]_{a,c} = sum_j <d_j B_a, [rho_b]_{omega_j} d_j B_c>.
        """
        rhos = np.asarray(rhos, dtype=complex)
        lam, u = np.linalg.eigh(rhos)
        lam = np.clip(lam, 1e-14, None)
        # kernels (B, J, n, n)
        ker = log_mean(
            np.exp(self.omegas[None, :, None, None] / 2.0)
            * lam[:, None, :, None],
            np.exp(-self.omegas[None, :, None, None] / 2.0)
            * lam[:, None, None, :],
        )
        # derivatives in the eigenbasis of each state: U^* (d_j B_a) U
        t = np.einsum("bpi,japq,bqk->bjaik", np.conj(u), self.derivs, u)
        m = np.einsum("bjaik,bjik,bjcik->bac", np.conj(t), ker, t).real
        return 0.5 * (m + m.transpose(0, 2, 1))


def _require_ergodic(spec: GeneratorSpec):
    if ergodicity(spec) != 1:
        raise ValueError("specification is not ergodic; the metric is degenerate")


def weighted_laplacian_super(spec: GeneratorSpec, rho: DensityState) -> np.ndarray:
    """Superoperator of A |-> div([rho]_omega grad A).

    Negative semidefinite and Hermitian in the Hilbert-Schmidt inner
    product; its null space is the commutant of the jump set.
    """
    from .linalg import commutator_super
    from .calculus import rho_mult_super

    big = spec.dim ** 2
    out = np.zeros((big, big), dtype=complex)
    for v, w in spec.jumps:
        cj = commutator_super(v)
        cjd = commutator_super(dag(v))
        out -= cjd @ rho_mult_super(rho, w) @ cj
    return out


@dataclass
class TangentDecomposition:
    """Continuity-equation solution at a state."""

    rho_dot: np.ndarray
    potential: np.ndarray
    field: list
    metric_value: float


def _solve_metric_system(m: np.ndarray, b: np.ndarray, jitter: float = 1e-12) -> np.ndarray:
    """Cholesky solve of the (PD on traceless Hermitians) metric system."""
    import scipy.linalg

    scale = max(float(np.max(np.abs(m))), 1e-300)
    try:
        cho = scipy.linalg.cho_factor(m, lower=True)
        return scipy.linalg.cho_solve(cho, b)
    except np.linalg.LinAlgError:
        pass
    except scipy.linalg.LinAlgError:
        pass
    cho = scipy.linalg.cho_factor(m + jitter * scale * np.eye(m.shape[0]), lower=True)
    return scipy.linalg.cho_solve(cho, b)


def continuity_solve(
    spec: GeneratorSpec,
    rho: DensityState,
    rho_dot: np.ndarray,
    check_ergodic: bool = True,
    workspace: _MetricWorkspace | None = None,
) -> TangentDecomposition:
    """Solve rho-dot = -div([rho]_omega grad U) for traceless Hermitian U."""
    rho_dot = np.asarray(rho_dot, dtype=complex)
    if np.linalg.norm(rho_dot - dag(rho_dot)) > 1e-9 * max(1.0, np.linalg.norm(rho_dot)):
        raise ValueError("rho_dot must be Hermitian")
    if abs(np.trace(rho_dot)) > 1e-9 * max(1.0, np.linalg.norm(rho_dot)):
        raise ValueError("rho_dot must be traceless")
    if check_ergodic:
        _require_ergodic(spec)
    ws = workspace if workspace is not None else _MetricWorkspace(spec)
    m = ws.metric_matrices(rho.rho[None])[0]
    b = ws.coords(rho_dot)
    x = _solve_metric_system(m, b)
    u = ws.matrix(x)
    fld = [rho_mult(rho, w, d) for (_, w), d in zip(spec.jumps, grad(spec, u))]
    return TangentDecomposition(
        rho_dot=rho_dot,
        potential=u,
        field=fld,
        metric_value=float(x @ b),
    )


def metric_tensor(spec: GeneratorSpec, rho: DensityState, coord_basis) -> np.ndarray:
    """Coordinate metric tensor [g]_{k,l} for directions A_k.

    Entry (k, l) is the metric pairing of the tangent vectors A_k, A_l,
    i.e. a_k^T M^{-1} a_l in an orthonormal traceless-Hermitian basis.
    """
    _require_ergodic(spec)
    ws = _MetricWorkspace(spec)
    m = ws.metric_matrices(rho.rho[None])[0]
    a = np.array([ws.coords(np.asarray(x, dtype=complex)) for x in coord_basis]).T
    sol = _solve_metric_system(m, a)
    g = a.T @ sol
    return 0.5 * (g + g.T)


def riemannian_gradient_flow_check(spec: GeneratorSpec, rho: DensityState) -> dict:
    """Residuals of the gradient-flow identities at one state.

    Returns the relative residual of

        L^+(rho) = div( [rho]_omega grad(log rho - log sigma) )

    and the mismatch of the energy identity
    Tr[(log rho - log sigma) L^+ rho] = -g(L^+ rho, L^+ rho).
    """
    l_adj = build_adjoint(spec)
    from .linalg import apply_super

    rho_dot = apply_super(l_adj, rho.rho)
    rho_dot = 0.5 * (rho_dot + dag(rho_dot))
    entropy_grad = rho.log() - spec.sigma.log()
    fld = [rho_mult(rho, w, d) for (_, w), d in zip(spec.jumps, grad(spec, entropy_grad))]
    div_fld = divergence(spec, fld)
    denom = max(float(np.linalg.norm(rho_dot)), 1e-300)
    residual = float(np.linalg.norm(rho_dot - div_fld) / denom)

    dec = continuity_solve(spec, rho, rho_dot, check_ergodic=False)
    lhs = float(np.trace(entropy_grad @ rho_dot).real)
    energy_mismatch = abs(lhs + dec.metric_value)
    return {
        "gradient_flow_residual": residual,
        "energy_identity_mismatch": energy_mismatch,
        "metric_value": dec.metric_value,
    }


# ---------------------------------------------------------------------------
# geodesic action minimization
# ---------------------------------------------------------------------------


@dataclass
class GeodesicResult:
    distance: float
    action: float
    segment_actions: np.ndarray
    iterations: int
    converged: bool
    path: list = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "distance": self.distance,
            "action": self.action,
            "segment_actions": [float(x) for x in self.segment_actions],
            "iterations": self.iterations,
            "converged": self.converged,
        }


class _PathProblem:
    """Discretized action of a piecewise-linear path with fixed endpoints.

    Interior states are coordinates in the traceless Hermitian basis
    around the maximally mixed matrix; the action of segment k is
    K * delta_k^T M((rho_k + rho_{k+1})/2)^{-1} delta_k.
    """

    def __init__(self, ws: _MetricWorkspace, rho0: np.ndarray, rho1: np.ndarray, k: int):
        self.ws = ws
        self.k = k
        self.n = ws.n
        self.y0 = ws.coords(rho0 - np.eye(self.n) / self.n)
        self.y1 = ws.coords(rho1 - np.eye(self.n) / self.n)

    def initial(self) -> np.ndarray:
        ts = np.linspace(0.0, 1.0, self.k + 1)[1:-1]
        return self.y0[None, :] + ts[:, None] * (self.y1 - self.y0)[None, :]

    def full_coords(self, y: np.ndarray) -> np.ndarray:
        return np.vstack([self.y0[None, :], y, self.y1[None, :]])

    def states(self, coords: np.ndarray) -> np.ndarray:
        base = np.eye(self.n, dtype=complex) / self.n
        bs = np.stack(self.ws.basis)
        return base[None] + np.einsum("ka,aij->kij", coords, bs)

    def min_eigenvalue(self, y: np.ndarray) -> float:
        if y.size == 0:
            return np.inf
        states = self.states(y)
        return float(np.min(np.linalg.eigvalsh(states)))

    def segment_actions(self, coords: np.ndarray) -> np.ndarray:
        states = self.states(coords)
        mids = 0.5 * (states[:-1] + states[1:])
        deltas = coords[1:] - coords[:-1]
        m = self.ws.metric_matrices(mids)
        sol = np.linalg.solve(m, deltas[..., None])[..., 0]
        return self.k * np.einsum("ka,ka->k", deltas, sol)

    def action(self, y: np.ndarray) -> float:
        return float(np.sum(self.segment_actions(self.full_coords(y))))

    def gradient(self, y: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """Forward-difference gradient, evaluating only affected segments."""
        coords = self.full_coords(y)
        states = self.states(coords)
        mids = 0.5 * (states[:-1] + states[1:])
        deltas = coords[1:] - coords[:-1]
        m = self.ws.metric_matrices(mids)
        sol = np.linalg.solve(m, deltas[..., None])[..., 0]
        seg = self.k * np.einsum("ka,ka->k", deltas, sol)

        ni, d = y.shape
        # perturbed segment pairs: probe (p, a) shifts point p+1, touching
        # segments p and p+1
        probe_mids = np.empty((ni, d, 2, self.n, self.n), dtype=complex)
        probe_deltas = np.empty((ni, d, 2, d))
        bs = np.stack(self.ws.basis)
        for p in range(ni):
            for a in range(d):
                db = 0.5 * h * bs[a]
                probe_mids[p, a, 0] = mids[p] + db
                probe_mids[p, a, 1] = mids[p + 1] + db
                probe_deltas[p, a, 0] = deltas[p]
                probe_deltas[p, a, 0, a] += h
                probe_deltas[p, a, 1] = deltas[p + 1]
                probe_deltas[p, a, 1, a] -= h
        flat_mids = probe_mids.reshape(-1, self.n, self.n)
        flat_deltas = probe_deltas.reshape(-1, d)
        m_probe = self.ws.metric_matrices(flat_mids)
        sol_probe = np.linalg.solve(m_probe, flat_deltas[..., None])[..., 0]
        seg_probe = self.k * np.einsum("ka,ka->k", flat_deltas, sol_probe)
        seg_probe = seg_probe.reshape(ni, d, 2)
        base = (seg[:-1] + seg[1:])[:, None]
        return (seg_probe.sum(axis=2) - base) / h


def _minimize_path(problem, y, max_iter, floor):
    """Projected descent with Barzilai-Borwein steps and backtracking."""
    action = problem.action(y)
    g = problem.gradient(y)
    step = 1.0 / max(np.linalg.norm(g), 1.0)
    history = []
    prev_y = None
    prev_g = None
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if prev_y is not None:
            sy = (y - prev_y).ravel()
            sg = (g - prev_g).ravel()
            denom = float(sy @ sg)
            if denom > 1e-300:
                step = float(sy @ sy) / denom
            step = float(np.clip(step, 1e-12, 1e6))
        t = step
        accepted = False
        for _ in range(60):
            cand = y - t * g
            if problem.min_eigenvalue(cand) >= floor:
                cand_action = problem.action(cand)
                if cand_action < action:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # no decrease along the gradient at any feasible step
            return y, action, iterations, True
        prev_y, prev_g = y, g
        drop = action - cand_action
        y, action = cand, cand_action
        g = problem.gradient(y)
        history.append(drop)
        if len(history) >= CONVERGENCE_SPAN and sum(history[-CONVERGENCE_SPAN:]) < CONVERGENCE_DROP:
            return y, action, iterations, True
    return y, action, iterations, False


def geodesic_distance(
    spec: GeneratorSpec,
    rho0: DensityState,
    rho1: DensityState,
    segments: int = 16,
    max_iter: int = 400,
    positivity_floor: float = POSITIVITY_FLOOR,
) -> GeodesicResult:
    """Upper bound on the transport distance between two faithful states.

    Minimizes the midpoint-rule action over piecewise-linear paths by
    projected descent; the returned value sqrt(action) never falls below
    the true Riemannian distance for the same discretization, and is
    monotone nonincreasing across iterations.
    """
    _require_ergodic(spec)
    for r in (rho0, rho1):
        if float(r.eigenvalues[0]) < positivity_floor:
            raise ValueError("endpoint is not strictly positive at the working floor")
    ws = _MetricWorkspace(spec)
    problem = _PathProblem(ws, rho0.rho, rho1.rho, segments)
    y = problem.initial()
    if y.size == 0:
        seg = problem.segment_actions(problem.full_coords(y))
        return GeodesicResult(float(np.sqrt(seg.sum())), float(seg.sum()), seg, 0, True, [rho0.rho, rho1.rho])
    y, action, iterations, converged = _minimize_path(problem, y, max_iter, positivity_floor)
    coords = problem.full_coords(y)
    seg = problem.segment_actions(coords)
    path = [np.asarray(s) for s in problem.states(coords)]
    return GeodesicResult(
        distance=float(np.sqrt(max(action, 0.0))),
        action=float(action),
        segment_actions=seg,
        iterations=iterations,
        converged=converged,
        path=path,
    )


def metric_monotonicity_check(
    spec: GeneratorSpec,
    rho: DensityState,
    a: np.ndarray,
    omega: float,
    t: float,
    slack: float = 1e-10,
) -> tuple[bool, float, float]:
    """Contraction of <A, [rho]_omega^{-1} A> under the dual semigroup.

    Returns (passed, evolved value, initial value).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    from .calculus import rho_div
    from .generators import build_generator, dual_semigroup
    from .linalg import apply_super, hs_inner

    l = build_generator(spec)
    pt_dual = dual_semigroup(dag(l), t, spec.sigma)
    rho_t = apply_super(pt_dual, rho.rho)
    rho_t = 0.5 * (rho_t + dag(rho_t))
    rho_t = DensityState.from_matrix(rho_t / np.trace(rho_t).real)
    a_t = apply_super(pt_dual, np.asarray(a, dtype=complex))
    lhs = hs_inner(a_t, rho_div(rho_t, omega, a_t)).real
    rhs = hs_inner(a, rho_div(rho, omega, np.asarray(a, dtype=complex))).real
    return bool(lhs <= rhs + slack * max(1.0, abs(rhs))), float(lhs), float(rhs)


# ---------------------------------------------------------------------------
# classical chain oracle
# ---------------------------------------------------------------------------


class _ChainProblem:
    """Discrete-transport action for a reversible chain.

    Edge weights are logarithmic means w_xy(p) = LM(p_x Q_xy, p_y Q_yx);
    the quadratic form on increments solves the weighted graph Laplacian.
    This is the commutative reduction of the quantum metric.
    """

    def __init__(self, rates: np.ndarray, p0: np.ndarray, p1: np.ndarray, k: int):
        self.q = np.asarray(rates, dtype=float)
        self.m = self.q.shape[0]
        self.k = k
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.edges = [
            (x, y)
            for x in range(self.m)
            for y in range(x + 1, self.m)
            if self.q[x, y] > 1e-14 or self.q[y, x] > 1e-14
        ]

    def initial(self) -> np.ndarray:
        ts = np.linspace(0.0, 1.0, self.k + 1)[1:-1]
        return self.p0[None, :] + ts[:, None] * (self.p1 - self.p0)[None, :]

    def full(self, y: np.ndarray) -> np.ndarray:
        return np.vstack([self.p0[None, :], y, self.p1[None, :]])

    def min_eigenvalue(self, y: np.ndarray) -> float:
        # positivity of occupation probabilities plays the role of the
        # minimum eigenvalue in the matrix case
        if y.size == 0:
            return np.inf
        return float(np.min(y))

    def _g(self, p: np.ndarray, dp: np.ndarray) -> float:
        lap = np.zeros((self.m, self.m))
        for x, yv in self.edges:
            w = log_mean(p[x] * self.q[x, yv], p[yv] * self.q[yv, x])
            lap[x, x] += w
            lap[yv, yv] += w
            lap[x, yv] -= w
            lap[yv, x] -= w
        # solve on the mean-zero complement
        lap = lap + np.ones((self.m, self.m)) / self.m
        u = np.linalg.solve(lap, dp)
        return float(u @ dp)

    def segment_actions(self, full: np.ndarray) -> np.ndarray:
        out = np.empty(self.k)
        for seg in range(self.k):
            mid = 0.5 * (full[seg] + full[seg + 1])
            dp = full[seg + 1] - full[seg]
            out[seg] = self.k * self._g(mid, dp)
        return out

    def action(self, y: np.ndarray) -> float:
        return float(np.sum(self.segment_actions(self.full(y))))

    def _segment(self, left: np.ndarray, right: np.ndarray) -> float:
        mid = 0.5 * (left + right)
        return self.k * self._g(mid, right - left)

    def gradient(self, y: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        full = self.full(y)
        seg = self.segment_actions(full)
        out = np.zeros_like(y)
        shift = np.full(self.m, -h / self.m)
        for p in range(y.shape[0]):
            for x in range(y.shape[1]):
                # mean-zero probe keeps probabilities normalized
                point = full[p + 1] + shift
                point[x] += h
                before = self._segment(full[p], point) + self._segment(point, full[p + 2])
                out[p, x] = (before - seg[p] - seg[p + 1]) / h
        return out


def classical_transport_distance(
    rates: RateMatrix, p0, p1, segments: int = 16, max_iter: int = 400
) -> GeodesicResult:
    """Discrete transport distance of the restricted chain (upper bound).

    Independent of the quantum solver's metric assembly: works directly
    on probability vectors with logarithmic-mean edge weights.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for p in (p0, p1):
        if abs(p.sum() - 1.0) > 1e-12 or np.any(p <= 0):
            raise ValueError("endpoints must be strictly positive probability vectors")
    problem = _ChainProblem(rates.rates, p0, p1, segments)
    y = problem.initial()
    if y.size == 0:
        seg = problem.segment_actions(problem.full(y))
        return GeodesicResult(float(np.sqrt(seg.sum())), float(seg.sum()), seg, 0, True, [p0, p1])
    y, action, iterations, converged = _minimize_path(problem, y, max_iter, POSITIVITY_FLOOR)
    full = problem.full(y)
    seg = problem.segment_actions(full)
    return GeodesicResult(
        distance=float(np.sqrt(max(action, 0.0))),
        action=float(action),
        segment_actions=seg,
        iterations=iterations,
        converged=converged,
        path=[row for row in full],
    )
