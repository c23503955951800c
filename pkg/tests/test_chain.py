import json

import numpy as np
import pytest
from scipy.special import jv

from dqchain.chain import (
    ChainSpec,
    FitError,
    FloquetDeviceSpec,
    Modulation,
    broken_chain_spec,
    calibrate_device_amplitudes,
    chain_spec_from_json,
    decoherence_jumps,
    effective_couplings,
    lab_frame_generator,
    lab_frame_hamiltonian,
    nnn_suppression_metric,
    nnn_testbed_device,
    paper_style_device,
    reflection_operator,
    two_site_device,
    xx_hamiltonian,
)
from dqchain.qcore import (
    LindbladModel,
    LinearOperator,
    TimeGrid,
    basis_index,
    evolve_density,
    evolve_state,
    expectation,
    pauli_string,
    product_state,
)

TWO_PI = 2 * np.pi


def total_number_operator(L):
    op = pauli_string([(1, "n")], L)
    for j in range(2, L + 1):
        op = op + pauli_string([(j, "n")], L)
    return LinearOperator(op.entries, hermitian=True)


class TestXXHamiltonian:
    def test_two_site_eigenvalues(self):
        j = TWO_PI * 11.0
        h = xx_hamiltonian(ChainSpec(2, [j]))
        w = np.linalg.eigvalsh(h.to_dense())
        np.testing.assert_allclose(w, [-j, 0.0, 0.0, j], atol=1e-9)

    def test_symmetric_profile_commutes_with_reflection(self):
        spec = ChainSpec(5, TWO_PI * np.array([9.0, 11.0, 11.0, 9.0]),
                         TWO_PI * np.array([0.0, 1.0, 0.0]))
        assert spec.symmetric_flag
        h = xx_hamiltonian(spec).to_dense()
        r = reflection_operator(5).to_dense()
        assert np.max(np.abs(h @ r - r @ h)) <= 1e-12

    def test_asymmetric_profile_does_not_commute(self):
        spec = ChainSpec(5, TWO_PI * np.array([9.0, 11.0, 11.0, 10.0]))
        assert not spec.symmetric_flag
        h = xx_hamiltonian(spec).to_dense()
        r = reflection_operator(5).to_dense()
        assert np.max(np.abs(h @ r - r @ h)) > 1e-6

    def test_zero_couplings_zero_operator(self):
        h = xx_hamiltonian(ChainSpec(4, np.zeros(3), np.zeros(2)))
        assert h.entries.nnz == 0

    def test_conserves_excitation_number(self):
        spec = broken_chain_spec(seed=3, L=5)
        h = xx_hamiltonian(spec).to_dense()
        n = total_number_operator(5).to_dense()
        assert np.max(np.abs(h @ n - n @ h)) <= 1e-12


class TestLabFrame:
    def test_reduces_to_static_chain_on_resonance(self):
        g = TWO_PI * 11.0
        dev = FloquetDeviceSpec(L=3, idle_freqs=np.zeros(3), modulations={},
                                g=np.array([g, g]), g2=np.array([0.0]))
        h = lab_frame_hamiltonian(dev, t=0.37)
        ref = xx_hamiltonian(ChainSpec(3, [g, g]))
        np.testing.assert_allclose(h.to_dense(), ref.to_dense(), atol=1e-12)

    def test_off_resonant_transfer_bound(self):
        # paper-scale detuning: transfer bounded by (2g/Delta)^2 ~ 0.011
        g = TWO_PI * 11.0
        delta = TWO_PI * 210.0
        dev = two_site_device(g, delta, eps=0.0, nu=delta)
        gen = lab_frame_generator(dev)
        grid = TimeGrid(0.0, 1e-5, 20000, 100)
        out = evolve_state(gen, product_state([1], 2), grid)
        n2 = pauli_string([(2, "n")], 2)
        peak = max(expectation(n2, s) for s in out)
        bound = (2 * g / delta) ** 2
        assert peak <= bound * 1.05
        assert peak >= bound * 0.5   # the bound is nearly saturated

    def test_hermitian_at_random_times(self):
        dev = paper_style_device()
        rng = np.random.default_rng(np.random.Philox(key=11))
        for t in rng.random(20) * 2.0:
            h = lab_frame_hamiltonian(dev, float(t))
            assert h.hermitian_flag

    def test_excitation_number_conserved(self):
        dev = paper_style_device()
        n = total_number_operator(9).to_dense()
        h = lab_frame_hamiltonian(dev, 0.123).to_dense()
        assert np.max(np.abs(h @ n - n @ h)) <= 1e-9

    def test_modulated_dynamics_match_effective_chain(self):
        # three-qubit device, middle site two-tone modulated: lab-frame
        # densities coarse-grained over one modulation period track the
        # effective chain within 0.05 over 1 us
        w = TWO_PI * np.array([4540.0, 4330.0, 4660.0])
        tones = tuple(sorted(
            (Modulation(1.1 * abs(w[1] - w[0]), abs(w[1] - w[0])),
             Modulation(1.1 * abs(w[1] - w[2]), abs(w[1] - w[2]))),
            key=lambda t: t.nu))
        dev = FloquetDeviceSpec(L=3, idle_freqs=w, modulations={2: tones},
                                g=np.full(2, TWO_PI * 11.0), g2=np.zeros(1))
        spec, _ = effective_couplings(dev)

        dt = 1e-5
        n = 100000
        stride = 50
        grid = TimeGrid(0.0, dt, n, sample_stride=stride)
        psi0 = product_state([1], 3)
        n_ops = [pauli_string([(j, "n")], 3) for j in (1, 2, 3)]

        lab = evolve_state(lab_frame_generator(dev), psi0, grid)
        dens_lab = np.array([[expectation(o, s) for o in n_ops] for s in lab])
        eff = evolve_state(xx_hamiltonian(spec), psi0, grid)
        dens_eff = np.array([[expectation(o, s) for o in n_ops] for s in eff])

        # boxcar over one slow-tone period
        period = 2 * np.pi / min(t.nu for t in tones)
        win = max(1, round(period / (dt * stride)))
        kernel = np.ones(win) / win
        smooth = np.stack([np.convolve(dens_lab[:, j], kernel, mode="valid")
                           for j in range(3)], axis=1)
        ref = np.stack([np.convolve(dens_eff[:, j], kernel, mode="valid")
                        for j in range(3)], axis=1)
        assert np.max(np.abs(smooth - ref)) <= 0.05


class TestEffectiveCouplings:
    @pytest.mark.parametrize("det_mhz", [210.0, 330.0])
    def test_fit_matches_bessel_estimate(self, det_mhz):
        g = TWO_PI * 11.0
        nu = TWO_PI * det_mhz
        dev = two_site_device(g, nu, 1.84 * nu, nu)
        spec, report = effective_couplings(dev)
        est = g * jv(1, 1.84)
        assert report["first_sideband"][0] == pytest.approx(est, rel=1e-12)
        assert abs(spec.J[0] - est) / est <= 0.05

    def test_no_modulation_means_no_coupling(self):
        g = TWO_PI * 11.0
        nu = TWO_PI * 210.0
        dev = two_site_device(g, nu, eps=0.0, nu=nu)
        spec, report = effective_couplings(dev)
        assert spec.J[0] == 0.0
        assert report["first_sideband"][0] == 0.0

    def test_calibrated_device_is_symmetric(self):
        dev = calibrate_device_amplitudes(paper_style_device(), TWO_PI * 3.0)
        spec, _ = effective_couplings(dev)
        assert spec.symmetric_flag
        np.testing.assert_allclose(spec.J, TWO_PI * 3.0, rtol=0.02)

    def test_mirror_symmetric_modulation_keeps_center_nnn(self):
        dev = paper_style_device()
        spec, _ = effective_couplings(dev)
        # identical tone sets on both endpoints cancel: full bare strength
        assert spec.J2[3] == pytest.approx(TWO_PI * 1.0, rel=1e-9)


class TestNNNSuppression:
    def test_resonant_nnn_alone_full_swap(self):
        g2 = TWO_PI * 1.0
        dev = FloquetDeviceSpec(
            L=3, idle_freqs=np.array([0.0, TWO_PI * 330.0, 0.0]),
            modulations={}, g=np.zeros(2), g2=np.array([g2]))
        metric = nnn_suppression_metric(dev, duration=0.25)
        assert metric == pytest.approx(1.0, abs=1e-6)

    def test_no_nnn_no_transfer(self):
        dev = FloquetDeviceSpec(
            L=3, idle_freqs=np.array([0.0, TWO_PI * 330.0, 0.0]),
            modulations={}, g=np.zeros(2), g2=np.array([0.0]))
        assert nnn_suppression_metric(dev, duration=0.25) < 1e-6

    def test_modulation_suppresses_transfer(self):
        on = nnn_suppression_metric(nnn_testbed_device(True), duration=1.0)
        off = nnn_suppression_metric(nnn_testbed_device(False), duration=1.0)
        assert on / off <= 0.5


class TestDecoherenceJumps:
    def test_relaxation_alone(self):
        jumps = decoherence_jumps([30.0], [np.inf], 1)
        model = LindbladModel(LinearOperator(np.zeros((2, 2)), hermitian=True),
                              jumps=tuple(jumps))
        grid = TimeGrid(0.0, 1e-2, 1000, 100)
        out = evolve_density(model, product_state([1], 1).to_density(), grid)
        sz = pauli_string([(1, "z")], 1)
        for t, rho in zip(grid.sample_times, out):
            assert expectation(sz, rho) == pytest.approx(2 * np.exp(-t / 30.0) - 1,
                                                         abs=1e-8)

    def test_dephasing_alone(self):
        jumps = decoherence_jumps([np.inf], [20.0], 1)
        model = LindbladModel(LinearOperator(np.zeros((2, 2)), hermitian=True),
                              jumps=tuple(jumps))
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
        from dqchain.qcore import StateVector
        rho0 = StateVector(plus, 1).to_density()
        grid = TimeGrid(0.0, 1e-2, 1000, 100)
        out = evolve_density(model, rho0, grid)
        sx = pauli_string([(1, "x")], 1)
        for t, rho in zip(grid.sample_times, out):
            assert expectation(sx, rho) == pytest.approx(np.exp(-t / 20.0), abs=1e-8)

    def test_infinite_times_drop_channels(self):
        assert decoherence_jumps(np.inf, np.inf, 3) == []

    def test_nonpositive_times_rejected(self):
        with pytest.raises(ValueError):
            decoherence_jumps(0.0, 20.0, 2)


class TestDissipationSpec:
    def test_symmetric_flag_and_channels(self):
        from dqchain.chain import DissipationSpec
        d = DissipationSpec(site=3, gamma_plus=1.0, gamma_minus=1.0,
                            T1=30.0, Tphi=20.0)
        assert d.symmetric
        jumps = d.pump_loss_jumps(5)
        assert len(jumps) == 2
        assert len(d.decoherence_channels(5)) == 10   # (relax + dephase) x 5

    def test_asymmetric_rates_allowed_but_flagged(self):
        from dqchain.chain import DissipationSpec
        d = DissipationSpec(site=1, gamma_plus=0.0, gamma_minus=1.0)
        assert not d.symmetric
        assert len(d.pump_loss_jumps(1)) == 1
        assert d.decoherence_channels(1) == []

    def test_negative_rate_rejected(self):
        from dqchain.chain import DissipationSpec
        with pytest.raises(ValueError):
            DissipationSpec(site=1, gamma_plus=-0.1, gamma_minus=0.1)


class TestSpecs:
    def test_broken_chain_is_deterministic_and_asymmetric(self):
        a = broken_chain_spec(seed=1)
        b = broken_chain_spec(seed=1)
        np.testing.assert_array_equal(a.J, b.J)
        assert not a.symmetric_flag
        assert np.all(np.abs(a.J / (TWO_PI * 11.0) - 1.0) <= 0.05)
        np.testing.assert_allclose(a.J2, TWO_PI * 1.0)

    def test_device_tone_must_match_a_detuning(self):
        with pytest.raises(ValueError, match="detuning"):
            FloquetDeviceSpec(L=2, idle_freqs=np.array([TWO_PI * 210.0, 0.0]),
                              modulations={2: (Modulation(1.0, TWO_PI * 100.0),)},
                              g=np.array([1.0]))

    def test_paper_device_modulates_even_sites(self):
        dev = paper_style_device()
        assert sorted(dev.modulations) == [2, 4, 6, 8]
        for s, tones in dev.modulations.items():
            assert len(tones) == 2

    def test_chain_spec_from_json(self, tmp_path):
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(
            {"L": 5, "J_over_2pi_MHz": 11.0, "J2_over_2pi_MHz": [0.0, 1.0, 0.0]}))
        spec = chain_spec_from_json(str(path))
        np.testing.assert_allclose(spec.J, TWO_PI * 11.0)
        np.testing.assert_allclose(spec.J2, TWO_PI * np.array([0.0, 1.0, 0.0]))

    def test_bad_lengths_rejected(self):
        with pytest.raises(ValueError):
            ChainSpec(5, np.ones(3))
