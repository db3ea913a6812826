import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseghz.measurement import (
    BASES,
    CorrelationTable,
    CountsRecord,
    all_settings,
    correlation_from_counts,
    correlation_from_state,
    full_correlation_table,
    outcome_probabilities,
    pauli_correlation,
)
from phaseghz.quantum import (
    DensityMatrix,
    StateVector,
    make_phase_ghz,
    maximally_mixed,
    pure_to_density,
    random_density_matrix,
    random_pure_state,
)

INV_SQRT2 = 1 / np.sqrt(2)


def m_y(k):
    return sum(1 for x in k if x == 2)


@pytest.mark.parametrize("label", ["HV", "DA", "RL"])
def test_basis_projectors(label):
    p, q = BASES[label].projectors
    I = np.eye(2)
    for a in (p, q):
        assert np.max(np.abs(a @ a - a)) < 1e-12
    assert np.max(np.abs(p @ q)) < 1e-12
    assert np.max(np.abs(p + q - I)) < 1e-12


def test_basis_kets_explicit():
    np.testing.assert_allclose(BASES["DA"].plus, [INV_SQRT2, INV_SQRT2])
    np.testing.assert_allclose(BASES["DA"].minus, [INV_SQRT2, -INV_SQRT2])
    np.testing.assert_allclose(BASES["RL"].plus, [INV_SQRT2, 1j * INV_SQRT2])
    np.testing.assert_allclose(BASES["RL"].minus, [INV_SQRT2, -1j * INV_SQRT2])


def test_eigenstate_outcome():
    d = np.array([INV_SQRT2, INV_SQRT2])
    amps = d
    for _ in range(3):
        amps = np.kron(amps, d)
    probs = outcome_probabilities(StateVector(amps), (1, 1, 1, 1))
    assert probs[0] == pytest.approx(1.0, abs=1e-12)
    assert probs[1:].sum() == pytest.approx(0.0, abs=1e-12)


def _ghz_da_oracle(theta):
    # <b|GHZ> in the D/A basis, summed by hand: <D|H> = <A|H> = 1/sqrt2, <D|V> = -<A|V> = 1/sqrt2
    out = []
    for bits in itertools.product((0, 1), repeat=4):
        hv = 1.0
        vv = np.prod([1 if b == 0 else -1 for b in bits])
        amp = (hv + np.exp(1j * theta) * vv) / (np.sqrt(2) * 4)
        out.append(abs(amp) ** 2)
    return np.array(out)


def test_ghz_da_even_parity():
    probs = outcome_probabilities(make_phase_ghz(4, 0.0), (1, 1, 1, 1))
    np.testing.assert_allclose(probs, _ghz_da_oracle(0.0), atol=1e-14)
    parity = np.array([bin(i).count("1") % 2 for i in range(16)])
    np.testing.assert_allclose(probs[parity == 0], 1 / 8, atol=1e-14)
    np.testing.assert_allclose(probs[parity == 1], 0, atol=1e-14)


def test_mixed_uniform():
    for k in all_settings(4):
        np.testing.assert_allclose(outcome_probabilities(maximally_mixed(4), k), 1 / 16, atol=1e-15)


def test_probability_errors():
    with pytest.raises(ValueError):
        outcome_probabilities(maximally_mixed(3), (1, 1, 1, 1))
    with pytest.raises(ValueError):
        outcome_probabilities(maximally_mixed(4), (1, 3, 1, 1))


def test_correlation_examples():
    g0 = make_phase_ghz(4, 0.0)
    assert correlation_from_state(g0, (1, 1, 1, 1)) == pytest.approx(1.0, abs=1e-12)
    assert correlation_from_state(g0, (2, 2, 1, 1)) == pytest.approx(-1.0, abs=1e-12)
    g4 = make_phase_ghz(4, np.pi / 4)
    for k in all_settings(4):
        assert abs(correlation_from_state(g4, k)) == pytest.approx(INV_SQRT2, abs=1e-12)


def test_correlation_cosine_rule_grid():
    for theta in np.linspace(0, 2 * np.pi, 64, endpoint=False):
        rho = pure_to_density(make_phase_ghz(4, theta))
        for k in all_settings(4):
            assert abs(correlation_from_state(rho, k) - np.cos(theta - m_y(k) * np.pi / 2)) < 1e-12


def test_born_and_trace_paths_agree(rng):
    for _ in range(20):
        rho = random_density_matrix(4, rng)
        for k in all_settings(4):
            assert abs(correlation_from_state(rho, k) - pauli_correlation(rho, k)) < 1e-12


def test_counts_examples():
    even = np.zeros(16, dtype=int)
    even[[0, 3, 5, 6, 9, 10, 12, 15]] = 10
    assert correlation_from_counts(CountsRecord((1, 1, 1, 1), even))[0] == 1.0
    split = np.zeros(16, dtype=int)
    split[0], split[1] = 50, 50
    e, se = correlation_from_counts(CountsRecord((1, 1, 1, 1), split))
    assert e == 0.0 and se == pytest.approx(0.1)
    with pytest.raises(ValueError):
        correlation_from_counts(CountsRecord((1, 1, 1, 1), np.zeros(16, dtype=int)))


def test_counts_convergence_million_shots():
    r = np.random.default_rng(7)
    probs = outcome_probabilities(make_phase_ghz(4, np.pi / 4), (1, 1, 1, 1))
    e, se = correlation_from_counts(CountsRecord((1, 1, 1, 1), r.multinomial(10**6, probs)))
    assert abs(e - INV_SQRT2) < 1e-3
    assert abs(e - INV_SQRT2) < 3 * se


def test_counts_within_three_se(rng):
    rho = random_density_matrix(4, rng)
    for k in all_settings(4):
        rec = CountsRecord(k, rng.multinomial(200_000, outcome_probabilities(rho, k)))
        e, se = correlation_from_counts(rec)
        assert abs(e - correlation_from_state(rho, k)) < 3 * se + 1e-12


def test_full_tables_fig3_pattern():
    t0 = full_correlation_table(make_phase_ghz(4, 0.0), 4)
    t2 = full_correlation_table(make_phase_ghz(4, np.pi / 2), 4)
    t4 = full_correlation_table(make_phase_ghz(4, np.pi / 4), 4)
    even = [k for k in all_settings(4) if m_y(k) % 2 == 0]
    odd = [k for k in all_settings(4) if m_y(k) % 2 == 1]
    assert all(abs(abs(t0[k]) - 1) < 1e-12 for k in even)
    assert all(abs(t0[k]) < 1e-12 for k in odd)
    assert all(abs(abs(t2[k]) - 1) < 1e-12 for k in odd)
    assert all(abs(t2[k]) < 1e-12 for k in even)
    assert all(abs(abs(t4[k]) - INV_SQRT2) < 1e-12 for k in all_settings(4))
    with pytest.raises(ValueError):
        full_correlation_table(make_phase_ghz(4, 0.0), 3)


def _permute_state(rho, perm):
    n = rho.n
    t = rho.entries.reshape((2,) * (2 * n))
    t = np.transpose(t, list(perm) + [n + p for p in perm])
    return DensityMatrix(t.reshape(rho.dim, rho.dim))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), perm=st.permutations(range(4)), k=st.tuples(*[st.sampled_from((1, 2))] * 4))
def test_permutation_covariance(seed, perm, k):
    rho = random_density_matrix(4, np.random.default_rng(seed))
    p1 = outcome_probabilities(rho, k)
    p2 = outcome_probabilities(_permute_state(rho, perm), tuple(k[p] for p in perm))
    np.testing.assert_allclose(np.sort(p1), np.sort(p2), atol=1e-12)


def test_table_validation():
    with pytest.raises(ValueError):
        CorrelationTable(2, {(1, 1): 1.5})
    with pytest.raises(ValueError):
        CorrelationTable(2, {(1, 1, 1): 0.5})
    with pytest.raises(KeyError):
        CorrelationTable(2, {(1, 1): 0.5}).as_array()


def test_counts_record_json_round_trip(rng):
    rec = CountsRecord((1, 2, 2, 1), rng.integers(0, 100, 16), duration_s=300.0, seed=42, rate_hz=1.64)
    back = CountsRecord.from_json(rec.to_json())
    assert back.setting == rec.setting
    np.testing.assert_array_equal(back.counts, rec.counts)
    assert (back.duration_s, back.seed, back.rate_hz) == (300.0, 42, 1.64)
    assert back.to_json() == rec.to_json()
    assert set(json.loads(rec.to_json())) >= {"setting", "counts", "duration_s", "seed"}


def test_counts_record_rejects_bad_counts():
    with pytest.raises(ValueError):
        CountsRecord((1, 1), [1, -1, 0, 0])
    with pytest.raises(ValueError):
        CountsRecord((1, 1), [0.5, 0, 0, 0])
