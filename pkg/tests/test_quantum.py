import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseghz.quantum import (
    DensityMatrix,
    LocalOperator,
    PostSelectionError,
    StateVector,
    apply_local_phase,
    basis_state,
    fidelity_pure_target,
    make_bell_phi_plus,
    make_bell_psi_plus,
    make_phase_ghz,
    maximally_mixed,
    pbs_fusion,
    pure_to_density,
    random_density_matrix,
    random_pure_state,
    state_fidelity,
    tensor,
)

INV_SQRT2 = 1 / np.sqrt(2)
angles = st.floats(min_value=-2 * np.pi, max_value=2 * np.pi, allow_nan=False)


def test_psi_plus_amplitudes():
    psi = make_bell_psi_plus()
    np.testing.assert_allclose(psi.amplitudes, [0, INV_SQRT2, INV_SQRT2, 0], atol=1e-15)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(psi.overlap(basis_state("HH"))) == 0


def test_phi_plus_amplitudes_and_orthogonality():
    phi = make_bell_phi_plus()
    np.testing.assert_allclose(phi.amplitudes, [INV_SQRT2, 0, 0, INV_SQRT2], atol=1e-15)
    assert abs(phi.overlap(make_bell_psi_plus())) < 1e-15


def test_two_pair_input_state():
    # expanding (HH + VV)(HH + VV)/2 by hand: HHHH, HHVV, VVHH, VVVV
    amps = tensor(make_bell_phi_plus(), make_bell_phi_plus()).amplitudes
    expected = np.zeros(16)
    expected[[0, 3, 12, 15]] = 0.5
    np.testing.assert_allclose(amps, expected, atol=1e-15)


def test_basis_index_convention():
    assert basis_state("HHVV").amplitudes[3] == 1
    assert basis_state("VHHH").amplitudes[8] == 1


def test_local_phase_pi_flips_sign():
    out = apply_local_phase(make_phase_ghz(4, 0.0), 4, np.pi)
    np.testing.assert_allclose(out.amplitudes[[0, 15]], [INV_SQRT2, -INV_SQRT2], atol=1e-15)


def test_local_phase_quarter_turn():
    out = apply_local_phase(make_phase_ghz(4, 0.0), 4, np.pi / 4)
    assert out.amplitude("VVVV") == pytest.approx(np.exp(1j * np.pi / 4) * INV_SQRT2, abs=1e-15)


def test_local_phase_zero_is_identity(rng):
    psi = random_pure_state(3, rng)
    for q in (1, 2, 3):
        np.testing.assert_array_equal(apply_local_phase(psi, q, 0.0).amplitudes, psi.amplitudes)


def test_local_phase_bad_qubit():
    with pytest.raises(IndexError):
        apply_local_phase(make_phase_ghz(4, 0.0), 5, 0.1)
    with pytest.raises(IndexError):
        apply_local_phase(make_phase_ghz(4, 0.0), 0, 0.1)


@settings(max_examples=50, deadline=None)
@given(theta=angles, qubit=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_local_phase_preserves_moduli(theta, qubit, seed):
    psi = random_pure_state(4, np.random.default_rng(seed))
    out = apply_local_phase(psi, qubit, theta)
    np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes), rtol=1e-14, atol=1e-15)
    assert abs(out.norm() - 1) < 1e-12


def test_phase_ghz_values():
    np.testing.assert_allclose(make_phase_ghz(4, 0).amplitudes[[0, 15]], [INV_SQRT2, INV_SQRT2])
    assert make_phase_ghz(4, np.pi / 2).amplitude("VVVV") == pytest.approx(1j * INV_SQRT2, abs=1e-15)
    with pytest.raises(ValueError):
        make_phase_ghz(1, 0.0)


def test_phase_ghz_equals_local_phase_on_grid():
    ghz0 = make_phase_ghz(4, 0.0)
    for theta in np.linspace(-np.pi, 3 * np.pi, 97):
        np.testing.assert_allclose(
            make_phase_ghz(4, theta).amplitudes,
            apply_local_phase(ghz0, 4, theta).amplitudes,
            atol=1e-15,
        )


def test_pbs_fusion_two_pairs():
    out, prob = pbs_fusion(tensor(make_bell_phi_plus(), make_bell_phi_plus()), (2, 3))
    assert prob == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(out.amplitudes, make_phase_ghz(4, 0).amplitudes, atol=1e-15)


def test_pbs_fusion_trivial_and_annihilating():
    out, prob = pbs_fusion(basis_state("HHHH"), (2, 3))
    assert prob == 1.0
    np.testing.assert_array_equal(out.amplitudes, basis_state("HHHH").amplitudes)
    with pytest.raises(PostSelectionError, match="annihilates") as exc:
        pbs_fusion(basis_state("HHVV"), (2, 3))
    assert exc.value.probability == 0.0
    with pytest.raises(ValueError):
        pbs_fusion(basis_state("HHHH"), (2, 2))


def test_pbs_fusion_probability_partition(rng):
    for _ in range(20):
        psi = random_pure_state(4, rng)
        _, kept = pbs_fusion(psi, (2, 3))
        # complementary projector: idlers differ
        idx = np.arange(16)
        differ = ((idx >> 2) & 1) != ((idx >> 1) & 1)
        discarded = float(np.sum(np.abs(psi.amplitudes[differ]) ** 2))
        assert kept + discarded == pytest.approx(1.0, abs=1e-12)


def test_fidelity_examples(rng):
    for theta in (0.0, 0.4, np.pi / 4):
        g = make_phase_ghz(4, theta)
        assert fidelity_pure_target(pure_to_density(g), g) == pytest.approx(1.0, abs=1e-12)
        assert fidelity_pure_target(maximally_mixed(4), g) == pytest.approx(1 / 16, abs=1e-15)
        for p in (0.0, 0.3, 0.85, 1.0):
            rho = DensityMatrix.from_hermitian(p * pure_to_density(g).entries + (1 - p) * np.eye(16) / 16)
            assert fidelity_pure_target(rho, g) == pytest.approx(p + (1 - p) / 16, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity_pure_target(maximally_mixed(3), make_phase_ghz(4, 0))


@settings(max_examples=30, deadline=None)
@given(phase=angles, seed=st.integers(0, 2**32 - 1))
def test_fidelity_global_phase_invariant(phase, seed):
    r = np.random.default_rng(seed)
    rho = random_density_matrix(4, r)
    psi = random_pure_state(4, r)
    shifted = StateVector(np.exp(1j * phase) * psi.amplitudes)
    assert abs(fidelity_pure_target(rho, psi) - fidelity_pure_target(rho, shifted)) < 1e-12


def test_tensor_associative(rng):
    a, b, c = (random_pure_state(k, rng) for k in (1, 2, 2))
    np.testing.assert_allclose(
        tensor(tensor(a, b), c).amplitudes, tensor(a, tensor(b, c)).amplitudes, atol=1e-12
    )
    ra, rb = random_density_matrix(1, rng), random_density_matrix(2, rng)
    assert tensor(ra, rb).n == 3
    with pytest.raises(TypeError):
        tensor(a, rb)


def test_state_validation():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        StateVector(np.ones(3) / np.sqrt(3))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        make_phase_ghz(11, 0.0)


def test_states_are_immutable():
    psi = make_phase_ghz(4, 0.1)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0


def test_local_operator_unitary_flag():
    with pytest.raises(ValueError):
        LocalOperator(1, np.array([[1, 1], [0, 1]]), unitary=True)
    with pytest.raises(ValueError):
        LocalOperator(1, np.eye(3))


def test_uhlmann_fidelity_reduces_to_pure_overlap(rng):
    rho = random_density_matrix(3, rng)
    psi = random_pure_state(3, rng)
    assert state_fidelity(rho, pure_to_density(psi)) == pytest.approx(fidelity_pure_target(rho, psi), abs=1e-9)
    assert state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
