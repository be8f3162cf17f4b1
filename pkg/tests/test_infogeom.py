import numpy as np
import pytest

from geoqml import circuits as C, infogeom as IG
from geoqml.circuits import Gate, ParamCircuit, PauliObservable
from geoqml.states import random_state

from test_circuits import random_circuit

RX1 = ParamCircuit(1, (Gate("RX", (0,), 0),), 1)
RZ1 = ParamCircuit(1, (Gate("RZ", (0,), 0),), 1)
RZ_ONLY = C.parse_circuit("QUBITS 2\nRZ q0 p0\nRZ q1 p1\nRZ q0 p2\n")
# rotation about X followed by rotation about Y, on |0>
XY = C.parse_circuit("RX q0 p0\nRY q0 p1\n")


class TestJacobian:
    def test_empty(self):
        assert IG.state_jacobian(ParamCircuit(2), []).shape == (0, 4)

    def test_rz_analytic(self):
        t = 0.3
        np.testing.assert_allclose(IG.state_jacobian(RZ1, [t])[0], [-1j * np.exp(-1j * t), 0],
                                   atol=1e-9)

    def test_fd_matches_exact(self, rng):
        for _ in range(5):
            c = random_circuit(rng)
            theta = rng.uniform(0, 7, c.num_params)
            np.testing.assert_allclose(IG.state_jacobian(c, theta),
                                       IG.state_jacobian(c, theta, method="exact"), atol=1e-9)

    def test_richardson_ratio(self, rng):
        c = C.hardware_efficient(2, 2)
        theta = rng.uniform(0, 7, c.num_params)
        exact = IG.state_jacobian(c, theta, method="exact")
        e1 = np.max(np.abs(IG.state_jacobian(c, theta, h=1e-2) - exact))
        e2 = np.max(np.abs(IG.state_jacobian(c, theta, h=5e-3) - exact))
        assert 3.8 < e1 / e2 < 4.2

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            IG.state_jacobian(RX1, [0.1], method="magic")


class TestQGT:
    def test_rz_is_flat(self):
        assert IG.quantum_geometric_tensor(RZ1, [0.4])[0, 0] == pytest.approx(0, abs=1e-9)

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.7])
    def test_rx_unit(self, t):
        assert IG.quantum_geometric_tensor(RX1, [t])[0, 0].real == pytest.approx(1, abs=1e-9)

    def test_xy_circuit_geometry(self):
        # analytic: g = diag(1, cos^2 2t1), Im G_01 = cos 2t1 / 2 up to sign
        for t1, t2 in [(0.3, 0.8), (1.1, -0.4)]:
            G = IG.quantum_geometric_tensor(XY, [t1, t2], method="exact")
            np.testing.assert_allclose(G.real, np.diag([1, np.cos(2 * t1) ** 2]), atol=1e-12)
            assert abs(G[0, 1].imag) == pytest.approx(abs(np.cos(2 * t1)), abs=1e-12)
        g_a = IG.fs_metric(XY, [0.3, 0.8])
        g_b = IG.fs_metric(XY, [0.6, 0.8])
        assert np.max(np.abs(g_a - g_b)) > 0.1

    def test_gauge_invariance(self, rng):
        c = C.hardware_efficient(2, 1)
        theta = rng.uniform(0, 7, c.num_params)

        def family(t):
            return np.exp(1j * np.sum(np.sin(t))) * C.apply(c, t)

        jac = np.array(IG._central_difference(family, theta, IG.FD_STEP))
        G_phase = IG.qgt_from_jacobian(family(theta), jac)
        G = IG.quantum_geometric_tensor(c, theta)
        assert np.max(np.abs(G_phase - G)) < 2e-8
        assert np.max(np.abs(jac - IG.state_jacobian(c, theta))) > 0.1

    def test_hermitian_psd(self, rng):
        for _ in range(10):
            c = random_circuit(rng)
            G = IG.quantum_geometric_tensor(c, rng.uniform(0, 7, c.num_params))
            np.testing.assert_allclose(G, G.conj().T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(G)) > -1e-9


class TestMetric:
    def test_rz_only_zero(self):
        np.testing.assert_allclose(IG.fs_metric(RZ_ONLY, [0.1, 0.2, 0.3]), 0, atol=1e-9)
        np.testing.assert_array_equal(IG.fs_metric(RZ_ONLY, [0.1, 0.2, 0.3], method="exact"), 0)

    def test_rx_one(self):
        np.testing.assert_allclose(IG.fs_metric(RX1, [0.5]), [[1]], atol=1e-9)

    def test_rank_bound(self, rng):
        for _ in range(10):
            c = random_circuit(rng, max_qubits=2)
            r = IG.tangent_rank(c, rng.uniform(0, 7, c.num_params))
            assert r <= min(c.num_params, 2 ** (c.num_qubits + 1) - 2)


class TestQFI:
    def test_pure_rx(self):
        np.testing.assert_allclose(IG.qfi_pure(RX1, [0.2]), [[4]], atol=1e-8)

    def test_pure_rz(self):
        np.testing.assert_allclose(IG.qfi_pure(RZ1, [0.2]), [[0]], atol=1e-8)

    def test_mixed_matches_pure(self, rng):
        for _ in range(5):
            c = random_circuit(rng)
            theta = rng.uniform(0, 7, c.num_params)
            psi0 = random_state(c.num_qubits, rng)
            J, _ = IG.qfi_mixed(IG.circuit_density_family(c, psi0), theta)
            assert np.max(np.abs(J - IG.qfi_pure(c, theta, psi0))) < 1e-6

    def test_constant_family(self):
        J, _ = IG.qfi_mixed(lambda t: np.diag([0.25, 0.75]), np.array([0.3, 0.1]))
        np.testing.assert_allclose(J, 0, atol=1e-12)

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
    def test_bernoulli(self, p):
        J, slds = IG.qfi_mixed(lambda t: np.diag([t[0], 1 - t[0]]), [p])
        assert J[0, 0] == pytest.approx(1 / (p * (1 - p)), rel=1e-8)
        np.testing.assert_allclose(slds[0], np.diag([1 / p, -1 / (1 - p)]), rtol=1e-7)

    def test_diagonal_family_equals_classical(self, rng):
        def probs3(t):
            z = np.array([np.exp(t[0]), np.exp(t[1]), 1.0])
            return z / z.sum()

        def probs4(t):
            z = np.exp(np.array([t[0], t[1], t[0] * t[1], 0.0]))
            return z / z.sum()

        theta = rng.normal(size=2)
        for pf, dim in [(probs3, 3), (probs4, 4)]:
            fam = (lambda t, pf=pf: np.diag(np.pad(pf(t), (0, 4 - dim))))
            J, _ = IG.qfi_mixed(fam, theta)
            np.testing.assert_allclose(J, IG.classical_fisher(pf, theta), atol=1e-6)

    def test_rank_deficient_cutoff_no_nan(self, rng):
        c = C.hardware_efficient(2, 1)
        J, slds = IG.qfi_mixed(IG.circuit_density_family(c), rng.uniform(0, 7, c.num_params))
        assert np.all(np.isfinite(J)) and all(np.all(np.isfinite(L)) for L in slds)


class TestClassicalFisher:
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
    def test_bernoulli(self, p):
        F = IG.classical_fisher(lambda t: np.array([t[0], 1 - t[0]]), [p])
        assert F[0, 0] == pytest.approx(1 / (p * (1 - p)), rel=1e-8)

    def test_constant(self):
        np.testing.assert_allclose(IG.classical_fisher(lambda t: np.array([0.5, 0.5]), [0.1]), 0)

    def test_zero_probability_named(self):
        with pytest.raises(ValueError, match="index 1"):
            IG.classical_fisher(lambda t: np.array([1.0, 0.0]), [0.1])


class TestNaturalGradient:
    def test_identity_metric(self, rng):
        theta, grad = rng.normal(size=3), rng.normal(size=3)
        out = IG.natural_gradient_step(theta, grad, np.eye(3), 0.1)
        assert np.max(np.abs(out - (theta - 0.1 * grad))) < 1e-12

    def test_hand_solve(self):
        out = IG.natural_gradient_step(np.array([1.0, 2.0]), np.array([4.0, 1.0]), np.diag([4.0, 1.0]), 1.0)
        np.testing.assert_allclose(out, [0.0, 1.0])

    def test_zero_gradient(self, rng):
        theta = rng.normal(size=2)
        np.testing.assert_array_equal(IG.natural_gradient_step(theta, np.zeros(2), np.eye(2), 0.5), theta)

    def test_singular_requires_regularization(self):
        with pytest.raises(IG.SingularMetricError):
            IG.natural_gradient_step(np.zeros(2), np.ones(2), np.diag([1.0, 0.0]), 0.1)
        out = IG.natural_gradient_step(np.zeros(2), np.ones(2), np.diag([1.0, 0.0]), 0.1, lam_reg=1e-3)
        assert np.all(np.isfinite(out))


class TestTangentRank:
    def test_rz_only(self):
        assert IG.tangent_rank(RZ_ONLY, [0.1, 0.2, 0.3]) == 0

    def test_entangler_free(self):
        ranks = IG.tangent_rank_draws(C.euler_product(2), draws=20, seed=1)
        assert sum(r == 4 for r in ranks) >= 18

    def test_universal(self):
        ranks = IG.tangent_rank_draws(C.hardware_efficient(2, 3), draws=20, seed=1)
        assert sum(r == 6 for r in ranks) >= 18


class TestMinimize:
    def test_natural_gradient_reaches_ground(self):
        _, losses = IG.minimize_expectation(XY, PauliObservable.z(0, 1), [0.1, 0.1],
                                            "natural_gradient", eta=0.1, epochs=200)
        assert min(losses) < -0.99

    def test_vanilla_from_asymmetric_start(self):
        _, losses = IG.minimize_expectation(XY, PauliObservable.z(0, 1), [0.1, 0.3],
                                            "vanilla", eta=0.1, epochs=200)
        assert min(losses) < -0.99

    def test_vanilla_symmetric_start_stays_on_diagonal(self):
        # <Z> = cos 2a cos 2b is symmetric under a <-> b, so plain descent from
        # (0.1, 0.1) stays on a = b and stalls at the saddle (pi/4, pi/4)
        theta, losses = IG.minimize_expectation(XY, PauliObservable.z(0, 1), [0.1, 0.1],
                                                "vanilla", eta=0.1, epochs=200)
        assert theta[0] == theta[1]
        assert losses[-1] == pytest.approx(0.0, abs=1e-6)

    def test_target_stops_early(self):
        _, losses = IG.minimize_expectation(XY, PauliObservable.z(0, 1), [0.1, 0.3],
                                            "natural_gradient", eta=0.1, epochs=200, target=-0.5)
        assert losses[-1] < -0.5 and len(losses) < 201

    def test_unknown_optimizer(self):
        with pytest.raises(ValueError):
            IG.minimize_expectation(XY, PauliObservable.z(0, 1), [0.1, 0.1], "adam")
