import numpy as np
import pytest

from dqchain.qcore import (
    LindbladModel,
    LinearOperator,
    TimeGrid,
    basis_index,
    evolve_density,
    pauli_string,
    product_state,
)
from dqchain.symmetry import (
    ClassifierValidationError,
    apply_gate,
    bell_chain_state,
    bell_prep_circuit,
    conserved_classifier,
    jordan_wigner_modes,
    predicted_phase_curve,
    predicted_steady_value,
    sector_projectors,
    sector_state,
    sector_weights,
)

TWO_PI = 2 * np.pi


class TestJordanWigner:
    def test_first_mode_has_no_string(self):
        ms = jordan_wigner_modes(3)
        expected = pauli_string([(1, "-")], 3).to_dense()
        np.testing.assert_allclose(ms[1].to_dense(), expected, atol=1e-15)

    def test_modes_anticommute(self):
        ms = jordan_wigner_modes(3)
        f1, f2 = ms[1].to_dense(), ms[2].to_dense()
        assert np.max(np.abs(f1 @ f2 + f2 @ f1)) <= 1e-12

    def test_mode_occupation_equals_site_occupation(self):
        L = 4
        ms = jordan_wigner_modes(L)
        for k in range(1, L + 1):
            fk = ms[k].to_dense()
            nk = pauli_string([(k, "n")], L).to_dense()
            np.testing.assert_allclose(fk.conj().T @ fk, nk, atol=1e-12)

    def test_car_is_checked_on_request(self):
        jordan_wigner_modes(5, check=True)


class TestConservedClassifier:
    def test_symmetric_chain_validates(self):
        cls = conserved_classifier(3, test_couplings=TWO_PI * 11.0 * np.ones(2))
        assert max(cls.commutator_norms.values()) <= 1e-10
        assert cls.candidate == "exchange-hermitian"

    def test_squared_spectrum_l5(self):
        cls = conserved_classifier(5)
        w = np.linalg.eigvalsh(cls.squared.to_dense())
        found = sorted(set(np.round(w, 6)))
        assert found == [0.25, 2.25, 6.25]

    def test_asymmetric_couplings_rejected(self):
        bad = TWO_PI * 11.0 * np.ones(4)
        bad[0] *= 1.01
        with pytest.raises(ClassifierValidationError) as err:
            conserved_classifier(5, test_couplings=bad)
        # the Hermitian candidate must fail visibly, not marginally
        norms = eval(str(err.value).split(": ", 1)[1])
        assert norms["exchange-hermitian"]["hamiltonian"] > 1e-6

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            conserved_classifier(4)

    def test_charge_itself_hermitian_and_commutes_with_hamiltonian(self):
        # the charge (not only its square) commutes with a symmetric chain;
        # only the square commutes with the jumps
        from dqchain.chain import ChainSpec, xx_hamiltonian
        cls = conserved_classifier(5)
        assert cls.operator.hermitian_flag
        h = xx_hamiltonian(ChainSpec(5, TWO_PI * 11.0 * np.ones(4))).to_dense()
        c = cls.operator.to_dense()
        assert np.max(np.abs(c @ h - h @ c)) <= 1e-10


@pytest.fixture(scope="module")
def cls5():
    return conserved_classifier(5)


@pytest.fixture(scope="module")
def projs5(cls5):
    return sector_projectors(cls5)


class TestSectorProjectors:

    def test_ranks_resolve_identity(self, projs5):
        assert sum(int(round(np.trace(p).real)) for p in projs5) == 32

    def test_sector_states_live_in_their_sectors(self, projs5):
        for eta in range(3):
            psi = sector_state(5, eta)
            w = sector_weights(psi, projs5)
            assert w.weights[eta] == pytest.approx(1.0, abs=1e-10)
            assert abs(w.residual) <= 1e-9

    def test_bell_half_phase_splits_evenly(self, projs5):
        w = sector_weights(bell_chain_state(5, np.pi / 2), projs5)
        np.testing.assert_allclose(w.weights, [0.5, 0.5, 0.0], atol=1e-10)

    def test_bell_weights_follow_half_angle(self, projs5):
        for phi in (0.3, 1.1, 2.5):
            w = sector_weights(bell_chain_state(5, phi), projs5)
            np.testing.assert_allclose(
                w.weights, [np.cos(phi / 2) ** 2, np.sin(phi / 2) ** 2, 0.0],
                atol=1e-10)

    def test_sector_weights_constant_under_dissipation(self, cls5, projs5):
        # strong-symmetry conservation on the L=3 chain (fast); the L=5 case
        # runs in the acceptance suite
        cls3 = conserved_classifier(3)
        p3 = sector_projectors(cls3)
        j = TWO_PI * 11.0
        hop01 = pauli_string([(1, "+"), (2, "-")], 3)
        hop12 = pauli_string([(2, "+"), (3, "-")], 3)
        ham = LinearOperator((j * (hop01 + hop01.dag() + hop12 + hop12.dag())).entries,
                             hermitian=True)
        model = LindbladModel(ham, jumps=(
            (pauli_string([(2, "+")], 3), 1.0), (pauli_string([(2, "-")], 3), 1.0)))
        rho0 = bell_chain_state(3, 0.7).to_density()
        w0 = sector_weights(rho0, p3).weights
        for rho in evolve_density(model, rho0, TimeGrid(0.0, 2e-4, 10000, 2000)):
            w = sector_weights(rho, p3).weights
            assert np.max(np.abs(w - w0)) < 1e-6


class TestSectorStates:
    def test_eta_zero_is_all_ground(self):
        psi = sector_state(5, 0)
        assert abs(psi.amplitudes[0]) == pytest.approx(1.0)

    def test_eta_one_is_center_adjacent_singlet(self):
        # L=9: (|e>_4 |g>_6 - |g>_4 |e>_6)/sqrt(2), everything else ground
        psi = sector_state(9, 1)
        i46 = basis_index([4], 9), basis_index([6], 9)
        assert psi.amplitudes[i46[0]] == pytest.approx(1 / np.sqrt(2))
        assert psi.amplitudes[i46[1]] == pytest.approx(-1 / np.sqrt(2))
        assert np.sum(np.abs(psi.amplitudes) > 1e-12) == 2

    def test_orthonormality(self):
        states = [sector_state(5, eta) for eta in range(3)]
        for a in range(3):
            for b in range(3):
                ov = np.vdot(states[a].amplitudes, states[b].amplitudes)
                assert abs(ov - (a == b)) < 1e-12

    def test_excitation_number(self):
        L = 7
        n_tot = sum((pauli_string([(j, "n")], L) for j in range(2, L + 1)),
                    start=pauli_string([(1, "n")], L))
        n_tot = LinearOperator(n_tot.entries, hermitian=True)
        for eta in range(4):
            psi = sector_state(L, eta)
            val = np.vdot(psi.amplitudes, n_tot.dot(psi.amplitudes)).real
            assert val == pytest.approx(eta, abs=1e-12)

    def test_eta_out_of_range(self):
        with pytest.raises(ValueError):
            sector_state(5, 3)


class TestBellChainState:
    def test_phase_zero_amplitudes(self):
        psi = bell_chain_state(5, 0.0)
        assert psi.amplitudes[basis_index([2], 5)] == pytest.approx(1 / np.sqrt(2))
        assert psi.amplitudes[basis_index([4], 5)] == pytest.approx(1 / np.sqrt(2))

    def test_phase_pi_matches_sector_one_state(self):
        psi = bell_chain_state(5, np.pi)
        ref = sector_state(5, 1)
        assert abs(np.vdot(psi.amplitudes, ref.amplitudes)) == pytest.approx(1.0, abs=1e-12)


class TestGates:
    def test_rz_full_turn_is_minus_identity(self):
        psi = bell_chain_state(3, 0.4)
        out = apply_gate("rz", psi, 2 * np.pi, 2)
        np.testing.assert_allclose(out.amplitudes, -psi.amplitudes, atol=1e-12)

    def test_x_then_half_swap_builds_balanced_pair(self):
        psi = product_state([], 2)
        psi = apply_gate("x", psi, 1)
        psi = apply_gate("half_swap", psi, 1, 2)
        a = psi.amplitudes[basis_index([1], 2)]
        b = psi.amplitudes[basis_index([2], 2)]
        assert abs(a) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
        assert abs(b) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
        # documented convention: transferred amplitude picks up -i
        assert b / a == pytest.approx(-1j)

    def test_iswap_convention(self):
        psi = product_state([1], 2)
        out = apply_gate("iswap", psi, 1, 2)
        assert out.amplitudes[basis_index([2], 2)] == pytest.approx(1j)

    def test_gates_unitary(self):
        rng = np.random.default_rng(np.random.Philox(key=5))
        amp = rng.normal(size=8) + 1j * rng.normal(size=8)
        amp /= np.linalg.norm(amp)
        from dqchain.qcore import StateVector
        psi = StateVector(amp, 3)
        for gate, args in (("rz", (0.37, 2)), ("x", (3,)),
                           ("half_swap", (1, 3)), ("iswap", (2, 3))):
            out = apply_gate(gate, psi, *args)
            assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_invalid_sites(self):
        with pytest.raises(ValueError):
            apply_gate("iswap", product_state([], 2), 1, 1)
        with pytest.raises(ValueError):
            apply_gate("x", product_state([], 2), 5)


class TestBellPrepCircuit:
    @pytest.mark.parametrize("phi", [0.0, np.pi / 2, np.pi])
    def test_fidelity_against_target(self, phi):
        out = bell_prep_circuit(9, phi)
        target = bell_chain_state(9, phi)
        fid = abs(np.vdot(target.amplitudes, out.amplitudes)) ** 2
        assert fid >= 0.999

    def test_opposite_phases_orthogonal(self):
        a = bell_prep_circuit(5, 0.0)
        b = bell_prep_circuit(5, np.pi)
        assert abs(np.vdot(a.amplitudes, b.amplitudes)) < 1e-12

    def test_single_excitation(self):
        L = 5
        out = bell_prep_circuit(L, 1.3)
        n_val = 0.0
        for j in range(1, L + 1):
            op = pauli_string([(j, "n")], L)
            n_val += np.vdot(out.amplitudes, op.dot(out.amplitudes)).real
        assert n_val == pytest.approx(1.0, abs=1e-12)


class TestPredictedValues:
    def test_paper_sector_values(self):
        assert predicted_steady_value(9, 0) == pytest.approx(1 / 9)
        assert predicted_steady_value(9, 1) == pytest.approx(0.0)
        assert predicted_steady_value(5, 1) == pytest.approx(-0.2)

    def test_higher_sectors_unsupported(self):
        with pytest.raises(ValueError):
            predicted_steady_value(9, 2)

    def test_phase_curve_five_qubits(self):
        assert predicted_phase_curve(5, 0.0) == pytest.approx(0.2)
        assert predicted_phase_curve(5, np.pi / 2) == pytest.approx(0.0, abs=1e-15)
        assert predicted_phase_curve(5, np.pi) == pytest.approx(-0.2)
        for phi in np.linspace(0, np.pi, 9):
            assert predicted_phase_curve(5, phi) == pytest.approx(np.cos(phi) / 5)
