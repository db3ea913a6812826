"""GHZ fidelity witness W(theta) = I/2 - |PGHZ(theta)><PGHZ(theta)| for four photons.

Besides the direct trace, the witness is evaluated the way it is measured:
the two coherence terms |H><V|^4 and |V><H|^4 are rewritten as a signed sum
of sigma_x/sigma_y correlations, and the two population terms come from one
extra run in the H/V basis.

    |H><V|^4 + e^{i theta} ... + h.c. = sum_k c_k E(k) sigma_{k1}...sigma_{k4}

so Tr(W rho) = 1/2 - (p_HHHH + p_VVVV)/2 - (1/2) sum_k c_k E(k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .measurement import CorrelationTable, CountsRecord, _as_density, correlation_from_counts
from .quantum import DensityMatrix, fidelity_pure_target, make_phase_ghz

N_PARTIES = 4
SUPPORTED_THETAS = (0.0, np.pi / 4, np.pi / 2)
THETA_MATCH_TOL = 1e-9
SUPPORTED_LABEL = "0, pi/4, pi/2"

# Signed correlation combinations for the three measured phases, before the
# common prefactor. Keys are (k1, k2, k3, k4); 1 = sigma_x, 2 = sigma_y.
_THETA_0 = {
    (1, 1, 1, 1): +1, (2, 2, 1, 1): -1, (1, 2, 2, 1): -1, (2, 1, 2, 1): -1,
    (1, 2, 1, 2): -1, (2, 1, 1, 2): -1, (1, 1, 2, 2): -1, (2, 2, 2, 2): +1,
}
_THETA_PI_2 = {
    (1, 2, 1, 1): +1, (2, 1, 1, 1): +1, (1, 1, 2, 1): +1, (2, 2, 2, 1): -1,
    (1, 1, 1, 2): +1, (2, 2, 1, 2): -1, (1, 2, 2, 2): -1, (2, 1, 2, 2): -1,
}
_THETA_PI_4 = {**_THETA_0, **_THETA_PI_2}

DECOMPOSITIONS = {
    0: (1 / 8, _THETA_0),
    1: (1 / (8 * np.sqrt(2)), _THETA_PI_4),
    2: (1 / 8, _THETA_PI_2),
}


@dataclass(frozen=True, eq=False)
class WitnessOperator:
    theta: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("witness must be Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _supported_index(theta: float) -> int:
    for i, t in enumerate(SUPPORTED_THETAS):
        if abs(theta - t) < THETA_MATCH_TOL:
            return i
    raise ValueError(f"witness decomposition is only available for theta in {{{SUPPORTED_LABEL}}}; got {theta}")


def decomposition(theta: float) -> tuple[float, dict]:
    """(prefactor, {setting: sign}) for one of the supported phases."""
    return DECOMPOSITIONS[_supported_index(theta)]


def required_settings(theta: float) -> list[tuple[int, ...]]:
    return list(decomposition(theta)[1])


def witness_operator(theta: float) -> WitnessOperator:
    psi = make_phase_ghz(N_PARTIES, theta).amplitudes
    dim = psi.size
    return WitnessOperator(theta, np.eye(dim) / 2 - np.outer(psi, psi.conj()))


def witness_expectation(rho, theta: float) -> float:
    rho = _as_density(rho)
    if rho.dim != 1 << N_PARTIES:
        raise ValueError(f"witness acts on 16-dimensional states, got dimension {rho.dim}")
    return float(np.real(np.trace(witness_operator(theta).matrix @ rho.entries)))


def witness_from_settings(
    correlations: CorrelationTable | Mapping,
    populations: tuple[float, float],
    theta: float,
) -> float:
    """Witness value from local correlations plus the two H/V populations."""
    pref, signs = decomposition(theta)
    missing = [k for k in signs if k not in correlations]
    if missing:
        raise ValueError(f"missing correlation settings {missing} for theta={theta}")
    c = pref * sum(sign * correlations[k] for k, sign in signs.items())
    p_h, p_v = populations
    return 0.5 - 0.5 * (p_h + p_v) - 0.5 * c


def populations_from_state(rho) -> tuple[float, float]:
    rho = _as_density(rho)
    return float(rho.entries[0, 0].real), float(rho.entries[-1, -1].real)


def witness_from_counts(
    records: Mapping[tuple[int, ...], CountsRecord],
    population_record: CountsRecord,
    theta: float,
) -> tuple[float, float]:
    """Witness estimate and its standard error from counting data.

    Each setting contributes its multinomial error independently and the
    errors add in quadrature; the H/V population sum q has variance
    q(1 - q)/N.
    """
    pref, signs = decomposition(theta)
    corr, var_c = {}, 0.0
    for k, sign in signs.items():
        if k not in records:
            raise ValueError(f"missing counts for setting {k}")
        e, se = correlation_from_counts(records[k])
        corr[k] = e
        var_c += (pref * se) ** 2
    n_pop = population_record.total
    if n_pop <= 0:
        raise ValueError("population run has zero counts")
    p_h = population_record.counts[0] / n_pop
    p_v = population_record.counts[-1] / n_pop
    q = p_h + p_v
    w = witness_from_settings(corr, (p_h, p_v), theta)
    sigma = 0.5 * np.sqrt(q * (1 - q) / n_pop + var_c)
    return float(w), float(sigma)


def witness_fidelity_identity(rho: DensityMatrix, theta: float) -> float:
    """1/2 - <PGHZ(theta)|rho|PGHZ(theta)>, the closed form of Tr(W rho)."""
    return 0.5 - fidelity_pure_target(rho, make_phase_ghz(N_PARTIES, theta))


def witness_result_json(theta: float, value: float, sigma: float, method: str) -> dict:
    if method not in ("direct", "decomposed"):
        raise ValueError(f"unknown method {method!r}")
    significance = abs(value) / sigma if sigma > 0 else None
    return {
        "theta": theta,
        "witness": value,
        "sigma": sigma,
        "significance_sd": significance,
        "method": method,
    }
