import numpy as np
import pytest

from qmsflow.canonical import extract_canonical, gks_matrix, reduced_gks_psd
from qmsflow.generators import GeneratorSpec, build_generator
from qmsflow.linalg import commutator_super, dag, hs_inner, sharp
from qmsflow.models import random_dbc_spec, random_density
from qmsflow.states import DensityState, ModularData, build_modular_basis

from conftest import random_matrix


def identity_anchored_basis(n):
    from qmsflow.generators import _identity_anchored_basis

    return _identity_anchored_basis(n)


class TestGKSMatrix:
    def test_identity_map_coefficients(self, rng):
        n = 3
        basis = identity_anchored_basis(n)
        c = gks_matrix(np.eye(n * n), basis).matrix
        expect = np.zeros_like(c)
        expect[0, 0] = 1.0
        assert np.linalg.norm(c - expect) < 1e-12

    def test_two_sided_multiplication_is_rank_one(self, rng):
        n = 2
        basis = identity_anchored_basis(n)
        a, b = random_matrix(rng, n), random_matrix(rng, n)
        c = gks_matrix(sharp(a, b), basis).matrix
        expect = np.array(
            [
                [
                    np.trace(fa @ a) * np.trace(dag(fb) @ b) / n**2
                    for fb in basis
                ]
                for fa in basis
            ]
        )
        assert np.linalg.norm(c - expect) < 1e-12

    def test_reconstruction(self, rng):
        n = 3
        basis = identity_anchored_basis(n)
        k = random_matrix(rng, n * n)
        c = gks_matrix(k, basis).matrix
        rebuilt = sum(
            c[a, b] * sharp(dag(basis[a]), basis[b])
            for a in range(len(basis))
            for b in range(len(basis))
        )
        assert np.linalg.norm(rebuilt - k) < 1e-11 * np.linalg.norm(k)

    def test_hermitian_iff_star_preserving(self, rng):
        n = 2
        basis = identity_anchored_basis(n)
        a = random_matrix(rng, n)
        star = sharp(a, dag(a)) + sharp(dag(a), a)
        g1 = gks_matrix(star, basis)
        assert g1.hermiticity_residual() < 1e-12
        g2 = gks_matrix(sharp(a, random_matrix(rng, n)), basis)
        assert g2.hermiticity_residual() > 1e-3

    def test_rejects_bad_basis(self, rng):
        with pytest.raises(ValueError, match="orthonormal|identity"):
            gks_matrix(np.eye(4), [np.eye(2), np.eye(2), np.eye(2), np.eye(2)])


class TestReducedGKS:
    def test_zoo_generators_psd(self, rng, fermi_m2):
        l = build_generator(fermi_m2.spec)
        basis = identity_anchored_basis(4)
        ok, evals = reduced_gks_psd(l, basis)
        assert ok
        assert evals[0] > -1e-12

    def test_negated_double_commutator_fails(self, rng):
        x = random_matrix(rng, 2)
        v = x + dag(x)
        c = commutator_super(v)
        ok, evals = reduced_gks_psd(c @ c, identity_anchored_basis(2))
        assert not ok
        assert evals[0] < -1e-8

    def test_identity_map_zero_reduced_block(self):
        ok, evals = reduced_gks_psd(np.zeros((4, 4)), identity_anchored_basis(2))
        assert ok
        assert np.allclose(evals, 0.0)


class TestExtraction:
    def test_roundtrip_random_specs(self, rng):
        for _ in range(6):
            n = int(rng.integers(2, 6))
            spec = random_dbc_spec(n, rng)
            l = build_generator(spec)
            extracted, report = extract_canonical(l, spec.sigma)
            assert report.roundtrip_error < 1e-9
            assert np.allclose(
                sorted(extracted.omegas()), sorted(spec.omegas()), atol=1e-9
            )
            assert report.hamiltonian_norm < 1e-9
            assert report.hamiltonian_hat_norm < 1e-9
            assert max(report.block_residual, report.pairing_residual) < 1e-9

    def test_jump_properties(self, rng):
        spec = random_dbc_spec(4, rng)
        l = build_generator(spec)
        extracted, _ = extract_canonical(l, spec.sigma)
        n = spec.dim
        sig = spec.sigma
        ops = extracted.jump_ops()
        norms = [np.sqrt(hs_inner(v, v, normalized=True).real) for v in ops]
        for j, (v, w) in enumerate(extracted.jumps):
            assert abs(np.trace(v)) < 1e-10  # traceless
            # modular eigenvector property
            resid = np.linalg.norm(
                sig.rho @ v @ sig.power(-1) - np.exp(-w) * v
            )
            assert resid < 1e-9 * np.linalg.norm(v)
        # mutual orthogonality after normalization
        for j in range(len(ops)):
            for k in range(j):
                ip = hs_inner(ops[j], ops[k], normalized=True) / (norms[j] * norms[k])
                assert abs(ip) < 1e-9
        # star closure is exact by construction
        spec_validated = GeneratorSpec.create(
            extracted.sigma, extracted.jumps, validate=True
        )
        assert spec_validated.njumps == extracted.njumps

    def test_fermi_two_modes(self, fermi_m2):
        l = build_generator(fermi_m2.spec)
        extracted, report = extract_canonical(l, fermi_m2.spec.sigma)
        assert extracted.njumps == 4
        expect = sorted([-1.0, 1.0, -2.0, 2.0])
        assert np.allclose(sorted(extracted.omegas()), expect, atol=1e-10)
        assert report.roundtrip_error < 1e-10

    def test_depolarizing_self_adjoint_jumps(self, depolarizing_n2):
        l = build_generator(depolarizing_n2)
        extracted, report = extract_canonical(l, depolarizing_n2.sigma)
        assert extracted.njumps == 3
        assert np.allclose(extracted.omegas(), 0.0)
        for v, _ in extracted.jumps:
            assert np.linalg.norm(v - dag(v)) < 1e-10
            assert abs(np.trace(v)) < 1e-10
        assert report.roundtrip_error < 1e-10

    def test_degenerate_sigma_block(self, rng):
        # equal sigma eigenvalues merge Bohr frequencies into 2-dim blocks
        q, _ = np.linalg.qr(random_matrix(rng, 3))
        lam = np.array([0.2, 0.2, 0.6])
        sigma = DensityState.from_matrix((q * lam) @ dag(q))
        jumps = []
        for i in (0, 1):
            v = np.sqrt(3) * np.outer(q[:, i], np.conj(q[:, 2]))
            w = float(np.log(lam[2] / lam[i]))
            jumps.append((v, w))
            jumps.append((dag(v), -w))
        spec = GeneratorSpec.create(sigma, jumps)
        l = build_generator(spec)
        extracted, report = extract_canonical(l, sigma)
        assert report.roundtrip_error < 1e-9
        assert extracted.njumps == 4

    def test_rejects_non_dbc_input(self):
        u = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        v1 = np.array([1.0, 1.0]) / np.sqrt(2)
        v2 = np.array([1.0, 2.0]) / np.sqrt(5)
        from qmsflow.models import kms_counterexample

        l, sigma, _ = kms_counterexample(u, v1, v2)
        with pytest.raises(ValueError, match="GNS"):
            extract_canonical(l, sigma)

    def test_offblock_coefficients_vanish(self, rng):
        spec = random_dbc_spec(3, rng)
        l = build_generator(spec)
        md = build_modular_basis(spec.sigma)
        c = gks_matrix(l, md.basis, check_orthonormal=False).matrix
        om = md.bohr_frequencies
        scale = max(np.max(np.abs(c)), 1e-300)
        mask = np.abs(om[:, None] - om[None, :]) > 1e-8 * max(1.0, np.max(np.abs(om)))
        assert np.max(np.abs(c[mask])) < 1e-10 * scale

    def test_uniqueness_under_basis_reordering(self, rng):
        spec = random_dbc_spec(3, rng)
        l = build_generator(spec)
        md = build_modular_basis(spec.sigma)
        ex1, _ = extract_canonical(l, spec.sigma, modular=md)
        perm = [0] + [1 + int(i) for i in rng.permutation(md.size - 1)]
        md2 = ModularData(
            md.sigma,
            md.bohr_frequencies[perm],
            [md.basis[i] for i in perm],
            np.array([perm.index(int(md.conj_pairing[i])) for i in perm]),
        )
        ex2, _ = extract_canonical(l, spec.sigma, modular=md2)
        gap = np.linalg.norm(
            build_generator(ex1) - build_generator(ex2), 2
        ) / np.linalg.norm(l, 2)
        assert gap < 1e-9
        assert ex1.njumps == ex2.njumps

    def test_jump_count_bound(self, rng):
        for _ in range(4):
            n = int(rng.integers(2, 5))
            spec = random_dbc_spec(n, rng)
            extracted, _ = extract_canonical(build_generator(spec), spec.sigma)
            assert extracted.njumps <= n * n - 1

    def test_near_degenerate_sigma_window(self, rng):
        # eigenvalue gap between the merge tolerance and the frequency
        # grouping tolerance: the tiny +-omega units share a block with
        # the zero modes and must still extract cleanly
        lam = np.array([0.3, 0.3 * (1 + 3e-11), 0.4 - 0.3 * 3e-11])
        q, _ = np.linalg.qr(random_matrix(rng, 3))
        sigma = DensityState.from_matrix((q * (lam / lam.sum())) @ dag(q))
        u = sigma.eigenvectors
        ls = sigma.eigenvalues
        v = np.sqrt(3) * (0.8 + 0.4j) * np.outer(u[:, 0], np.conj(u[:, 1]))
        w = float(np.log(ls[1]) - np.log(ls[0]))
        spec = GeneratorSpec.create(sigma, [(v, w), (dag(v), -w)])
        extracted, report = extract_canonical(build_generator(spec), sigma)
        assert report.roundtrip_error < 1e-9
        assert extracted.njumps == 2

    def test_extraction_of_dropped_rank(self, rng):
        # two linearly dependent jumps in one block collapse to one
        sigma = random_density(3, rng)
        u = sigma.eigenvectors
        lam = sigma.eigenvalues
        v = np.sqrt(3) * np.outer(u[:, 0], np.conj(u[:, 1]))
        w = float(np.log(lam[1] / lam[0]))
        jumps = [(v, w), (dag(v), -w), (0.5 * v, w), (0.5 * dag(v), -w)]
        spec = GeneratorSpec.create(sigma, jumps)
        extracted, report = extract_canonical(build_generator(spec), sigma)
        assert extracted.njumps == 2
        assert report.roundtrip_error < 1e-10
