"""Zukowski-Brukner general Bell inequality for n parties with two settings each.

S is reported normalized so that every local-realistic model gives S <= 1:

    S = 2^-n * sum_s | sum_k prod_j s_j^(k_j - 1) E(k) |

with s ranging over {-1, +1}^n and k over {1, 2}^n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measurement import CorrelationTable, _as_density, all_settings, full_correlation_table

CLASSICAL_BOUND = 1.0
QUANTUM_MAX = 2.0 * np.sqrt(2.0)
MAX_LHV_PARTIES = 6


@dataclass(frozen=True)
class SignVector:
    s: tuple[int, ...]

    def __post_init__(self):
        if any(x not in (-1, 1) for x in self.s):
            raise ValueError(f"sign entries must be +/-1, got {self.s}")

    def coefficient(self, setting) -> int:
        """f(s, k) = prod_j s_j^(k_j - 1)."""
        out = 1
        for sj, kj in zip(self.s, setting):
            if kj == 2:
                out *= sj
        return out


@dataclass(frozen=True)
class DeterministicStrategy:
    """Predetermined outcomes: ``outcomes[j] = (result for k=1, result for k=2)``."""

    outcomes: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for pair in self.outcomes:
            if len(pair) != 2 or any(x not in (-1, 1) for x in pair):
                raise ValueError(f"strategy outcomes must be +/-1 pairs, got {pair}")

    @property
    def n(self) -> int:
        return len(self.outcomes)

    def correlation_table(self) -> CorrelationTable:
        values = {}
        for k in all_settings(self.n):
            e = 1
            for pair, kj in zip(self.outcomes, k):
                e *= pair[kj - 1]
            values[k] = float(e)
        return CorrelationTable(self.n, values)


def sign_vectors(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=n))


@lru_cache(maxsize=None)
def coefficient_matrix(n: int) -> np.ndarray:
    """F[a, b] = f(sign_vectors(n)[a], all_settings(n)[b])."""
    s = np.array(sign_vectors(n))
    k = np.array(all_settings(n))
    # s_j^(k_j - 1) is s_j where k_j == 2 and 1 elsewhere
    factors = np.where(k[None, :, :] == 2, s[:, None, :], 1)
    f = factors.prod(axis=2).astype(float)
    f.setflags(write=False)
    return f


def _table_vector(table: CorrelationTable, n: int) -> np.ndarray:
    if table.n != n:
        raise ValueError(f"table is for {table.n} parties, expected {n}")
    if not table.is_complete():
        raise ValueError(f"incomplete correlation table: {len(table)} of {1 << n} settings")
    return table.as_array()


def gbi_s_parameter(table: CorrelationTable, n: int | None = None) -> float:
    n = table.n if n is None else n
    e = _table_vector(table, n)
    return float(np.abs(coefficient_matrix(n) @ e).sum() / (1 << n))


def gbi_gradient(table: CorrelationTable, n: int | None = None) -> np.ndarray:
    """dS/dE(k) in ``all_settings`` order, with each |.| sign frozen at the point."""
    n = table.n if n is None else n
    f = coefficient_matrix(n)
    inner = f @ _table_vector(table, n)
    return f.T @ np.sign(inner) / (1 << n)


def quantum_prediction(theta: float) -> float:
    """Ideal four-party S for the phase-GHZ state under sigma_x/sigma_y analysis."""
    return 2.0 * (abs(np.cos(theta)) + abs(np.sin(theta)))


def lhv_max(n: int) -> tuple[float, DeterministicStrategy]:
    """Exhaustive maximum of S over all 4^n deterministic local strategies.

    Strategies are enumerated lexicographically over per-party outcome pairs
    ordered (+1,+1), (+1,-1), (-1,+1), (-1,-1); the first maximizer wins ties.
    """
    if n < 1:
        raise ValueError("need at least one party")
    if n > MAX_LHV_PARTIES:
        raise ValueError(f"exhaustive enumeration capped at {MAX_LHV_PARTIES} parties (4^n strategies)")
    pairs = list(itertools.product((1, -1), repeat=2))
    f = coefficient_matrix(n)
    k = np.array(all_settings(n)) - 1
    strategies = list(itertools.product(pairs, repeat=n))
    # E[strategy, setting] = prod_j outcome_j[k_j]
    outs = np.array(strategies)  # (4^n, n, 2)
    tables = outs[:, np.arange(n)[None, :], k].prod(axis=2).astype(float)
    scores = np.abs(tables @ f.T).sum(axis=1) / (1 << n)
    best = int(np.argmax(scores))
    return float(scores[best]), DeterministicStrategy(tuple(tuple(p) for p in strategies[best]))


def gbi_from_state(rho) -> tuple[float, CorrelationTable]:
    """S of a state and the correlation table it was computed from."""
    rho = _as_density(rho)
    table = full_correlation_table(rho)
    return gbi_s_parameter(table, rho.n), table


def gbi_result_json(theta: float | None, s: float, table: CorrelationTable, errors: dict | None = None) -> dict:
    per_setting = []
    for k in all_settings(table.n):
        entry = {"setting": list(k), "E": table[k]}
        if errors is not None:
            entry["sigma"] = errors[k]
        per_setting.append(entry)
    return {
        "theta": theta,
        "S": s,
        "per_setting_E": per_setting,
        "classical_bound": CLASSICAL_BOUND,
        "quantum_max": QUANTUM_MAX,
    }
