"""Polarization bases, Born-rule outcome statistics and correlation functions.

Outcome convention: the first vector of every basis (H, D, R) is the +1
outcome and is encoded as bit 0; (V, A, L) is -1 / bit 1. Setting k=1 is the
linear D/A analysis (sigma_x), k=2 the circular R/L analysis (sigma_y).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .quantum import DensityMatrix, StateVector, kron_all, pure_to_density

PROB_CLAMP_TOL = 1e-12
E_TOL = 1e-12

Setting = tuple[int, ...]

_S2 = 1 / np.sqrt(2)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class PolarizationBasis:
    label: str
    plus: np.ndarray
    minus: np.ndarray

    @property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return np.outer(self.plus, self.plus.conj()), np.outer(self.minus, self.minus.conj())

    @property
    def analyzer(self) -> np.ndarray:
        """Rows are <plus| and <minus|; maps amplitudes to this basis."""
        return np.vstack([self.plus.conj(), self.minus.conj()])


BASES = {
    "HV": PolarizationBasis("HV", np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "DA": PolarizationBasis("DA", np.array([_S2, _S2], dtype=complex), np.array([_S2, -_S2], dtype=complex)),
    "RL": PolarizationBasis("RL", np.array([_S2, 1j * _S2]), np.array([_S2, -1j * _S2])),
}

SETTING_BASIS = {1: "DA", 2: "RL"}
SETTING_PAULI = {1: SIGMA_X, 2: SIGMA_Y}


def check_setting(setting: Iterable[int], n: int | None = None) -> Setting:
    k = tuple(int(x) for x in setting)
    if any(x not in (1, 2) for x in k):
        raise ValueError(f"setting entries must be 1 or 2, got {k}")
    if n is not None and len(k) != n:
        raise ValueError(f"setting {k} has length {len(k)}, expected {n}")
    return k


def all_settings(n: int) -> list[Setting]:
    """Every setting vector in lexicographic order, (1,...,1) first."""
    return list(itertools.product((1, 2), repeat=n))


def outcome_parities(n: int) -> np.ndarray:
    """Product of the +/-1 outcomes for every outcome index."""
    idx = np.arange(1 << n)
    ones = np.array([bin(i).count("1") for i in idx])
    return np.where(ones % 2 == 0, 1.0, -1.0)


def _as_density(rho) -> DensityMatrix:
    if isinstance(rho, StateVector):
        return pure_to_density(rho)
    if isinstance(rho, DensityMatrix):
        return rho
    raise TypeError(f"expected DensityMatrix or StateVector, got {type(rho).__name__}")


def basis_probabilities(rho, bases: Sequence[str]) -> np.ndarray:
    """Joint outcome probabilities for per-party basis labels ("HV", "DA", "RL")."""
    rho = _as_density(rho)
    if len(bases) != rho.n:
        raise ValueError(f"{len(bases)} bases given for a {rho.n}-qubit state")
    u = kron_all([BASES[b].analyzer for b in bases])
    probs = np.real(np.einsum("ij,jk,ik->i", u, rho.entries, u.conj()))
    if probs.min() < -PROB_CLAMP_TOL:
        raise ValueError(f"negative probability {probs.min():.3g}")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def outcome_probabilities(rho, setting: Iterable[int]) -> np.ndarray:
    """Born-rule probabilities of the 2^n outcomes for a sigma_x/sigma_y setting."""
    rho = _as_density(rho)
    k = check_setting(setting, rho.n)
    return basis_probabilities(rho, [SETTING_BASIS[x] for x in k])


def correlation_from_state(rho, setting: Iterable[int]) -> float:
    """Expected product of the +/-1 outcomes, via the outcome distribution."""
    rho = _as_density(rho)
    probs = outcome_probabilities(rho, setting)
    return float(np.dot(outcome_parities(rho.n), probs))


def pauli_correlation(rho, setting: Iterable[int]) -> float:
    """Tr(rho sigma_{k1} x ... x sigma_{kn}); cross-check for correlation_from_state."""
    rho = _as_density(rho)
    k = check_setting(setting, rho.n)
    op = kron_all([SETTING_PAULI[x] for x in k])
    return float(np.real(np.trace(rho.entries @ op)))


@dataclass(frozen=True)
class CorrelationTable(Mapping):
    """Correlation values E(k) keyed by setting vector."""

    n: int
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, e in self.values.items():
            k = check_setting(k, self.n)
            e = float(e)
            if not -1 - E_TOL <= e <= 1 + E_TOL:
                raise ValueError(f"correlation {e} for {k} outside [-1, 1]")
            clean[k] = e
        object.__setattr__(self, "values", clean)

    def __getitem__(self, key) -> float:
        return self.values[tuple(key)]

    def __iter__(self) -> Iterator[Setting]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def is_complete(self) -> bool:
        return len(self.values) == 1 << self.n

    def as_array(self) -> np.ndarray:
        """Values in ``all_settings`` order; raises KeyError if incomplete."""
        missing = [k for k in all_settings(self.n) if k not in self.values]
        if missing:
            raise KeyError(f"correlation table is missing settings {missing}")
        return np.array([self.values[k] for k in all_settings(self.n)])

    def permuted(self, perm: Sequence[int]) -> "CorrelationTable":
        """Relabel parties: new party j is old party perm[j] (0-based)."""
        return CorrelationTable(self.n, {tuple(k[p] for p in perm): e for k, e in self.values.items()})


def full_correlation_table(rho, n: int | None = None) -> CorrelationTable:
    rho = _as_density(rho)
    if n is not None and n != rho.n:
        raise ValueError(f"n={n} does not match the {rho.n}-qubit state")
    return CorrelationTable(rho.n, {k: correlation_from_state(rho, k) for k in all_settings(rho.n)})


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Outcome counts for one analyzer configuration.

    ``setting`` is either a sigma_x/sigma_y setting vector or a string label
    (e.g. ``"HVHV"`` for a computational-basis run or a tomography projector).
    """

    setting: Setting | str
    counts: np.ndarray
    duration_s: float = 0.0
    seed: int | None = None
    rate_hz: float | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if counts.size and not np.issubdtype(counts.dtype, np.integer):
            if not np.all(np.equal(np.mod(counts, 1), 0)):
                raise ValueError("counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if not isinstance(self.setting, str):
            object.__setattr__(self, "setting", check_setting(self.setting))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n(self) -> int:
        return int(self.counts.size).bit_length() - 1

    def to_dict(self) -> dict:
        setting = self.setting if isinstance(self.setting, str) else list(self.setting)
        return {
            "setting": setting,
            "counts": [int(c) for c in self.counts],
            "duration_s": float(self.duration_s),
            "seed": self.seed,
            "rate_hz": self.rate_hz,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CountsRecord":
        setting = d["setting"]
        if not isinstance(setting, str):
            setting = tuple(setting)
        return cls(
            setting=setting,
            counts=np.array(d["counts"], dtype=np.int64),
            duration_s=float(d.get("duration_s", 0.0)),
            seed=d.get("seed"),
            rate_hz=d.get("rate_hz"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CountsRecord":
        return cls.from_dict(json.loads(text))


def correlation_from_counts(record: CountsRecord) -> tuple[float, float]:
    """Parity-weighted mean of the counts and its standard error sqrt((1 - E^2)/N)."""
    total = record.total
    if total <= 0:
        raise ValueError("cannot estimate a correlation from zero counts")
    e = float(np.dot(outcome_parities(record.n), record.counts) / total)
    return e, float(np.sqrt(max(1.0 - e * e, 0.0) / total))
