"""Projective four-qubit state tomography with a Poisson maximum-likelihood fit.

Protocol: every product projector from the alphabet {H, V, D, R} on every
photon (4^4 = 256 configurations), each accumulated independently. The
expected count of projector i is

    mu_i = Tr(Pi_i T^dagger T)

with T lower triangular (real diagonal). Leaving T unnormalized lets the
overall intensity float, so the Poisson log-likelihood

    L(T) = sum_i n_i log mu_i - mu_i

is maximized without a separate rate parameter; the state is
rho = T^dagger T / Tr(T^dagger T).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .measurement import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, _as_density
from .quantum import DensityMatrix, StateVector, fidelity_pure_target, kron_all

PROJECTOR_ALPHABET = "HVDR"
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000

_S2 = 1 / np.sqrt(2)
KETS = {
    "H": np.array([1, 0], dtype=np.complex128),
    "V": np.array([0, 1], dtype=np.complex128),
    "D": np.array([_S2, _S2], dtype=np.complex128),
    "A": np.array([_S2, -_S2], dtype=np.complex128),
    "R": np.array([_S2, 1j * _S2], dtype=np.complex128),
    "L": np.array([_S2, -1j * _S2], dtype=np.complex128),
}


@dataclass(frozen=True, eq=False)
class TomographyProjector:
    labels: str
    vector: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())

    @classmethod
    def from_labels(cls, labels: str) -> "TomographyProjector":
        vec = np.ones(1, dtype=np.complex128)
        for ch in labels:
            vec = np.kron(vec, KETS[ch])
        return cls(labels, vec)


def make_tomography_set(n: int = 4, alphabet: str = PROJECTOR_ALPHABET) -> list[TomographyProjector]:
    """All product projectors over ``alphabet`` in lexicographic order."""
    return [TomographyProjector.from_labels("".join(t)) for t in itertools.product(alphabet, repeat=n)]


def pauli_basis(n: int) -> list[np.ndarray]:
    paulis = [IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z]
    return [kron_all(p) for p in itertools.product(paulis, repeat=n)]


def measurement_matrix(projectors: Sequence[TomographyProjector]) -> np.ndarray:
    """Real matrix A with p_i = A[i] . c for rho = 2^-n sum_a c_a P_a."""
    n = len(projectors[0].labels)
    basis = pauli_basis(n)
    vecs = np.array([p.vector for p in projectors])
    return np.array([np.real(np.einsum("ij,jk,ik->i", vecs.conj(), b, vecs)) for b in basis]).T / (1 << n)


@dataclass(frozen=True, eq=False)
class TomographySet:
    """Projectors with their observed counts (one independent run each)."""

    projectors: tuple[TomographyProjector, ...]
    counts: np.ndarray
    duration_s: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.projectors),):
            raise ValueError("need exactly one count per projector")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "projectors", tuple(self.projectors))

    @property
    def n(self) -> int:
        return len(self.projectors[0].labels)

    @property
    def vectors(self) -> np.ndarray:
        return np.array([p.vector for p in self.projectors])

    def with_counts(self, counts) -> "TomographySet":
        return TomographySet(self.projectors, counts, self.duration_s, dict(self.metadata))

    def to_list(self) -> list[dict]:
        return [
            {"labels": list(p.labels), "counts": int(c), "duration_s": float(self.duration_s)}
            for p, c in zip(self.projectors, self.counts)
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, entries: Sequence[dict]) -> "TomographySet":
        if not entries:
            raise ValueError("empty tomography set")
        projectors = [TomographyProjector.from_labels("".join(e["labels"])) for e in entries]
        durations = {float(e.get("duration_s", 0.0)) for e in entries}
        return cls(projectors, [int(e["counts"]) for e in entries], max(durations))

    @classmethod
    def from_json(cls, text: str) -> "TomographySet":
        return cls.from_list(json.loads(text))


def simulate_tomography_counts(
    rho,
    shots_per_setting: float,
    rng_seed: int,
    projectors: Sequence[TomographyProjector] | None = None,
) -> TomographySet:
    """Poisson counts with mean shots_per_setting * Tr(Pi rho) for each projector."""
    if shots_per_setting <= 0:
        raise ValueError("shots_per_setting must be positive")
    rho = _as_density(rho)
    projectors = make_tomography_set(rho.n) if projectors is None else list(projectors)
    probs = projector_probabilities(rho, projectors)
    rng = np.random.default_rng(rng_seed)
    counts = rng.poisson(shots_per_setting * probs)
    return TomographySet(projectors, counts, metadata={"shots_per_setting": shots_per_setting, "seed": rng_seed})


def projector_probabilities(rho, projectors: Sequence[TomographyProjector]) -> np.ndarray:
    rho = _as_density(rho)
    vecs = np.array([p.vector for p in projectors])
    probs = np.real(np.einsum("ij,jk,ik->i", vecs.conj(), rho.entries, vecs))
    return np.clip(probs, 0.0, None)


# -- Cholesky parameterization ------------------------------------------------


def n_params(dim: int) -> int:
    return dim * dim


def params_to_t(x: np.ndarray, dim: int) -> np.ndarray:
    """Layout: dim real diagonal entries, then real parts, then imaginary parts
    of the strictly lower triangle (row-major)."""
    x = np.asarray(x, dtype=float)
    if x.size != n_params(dim):
        raise ValueError(f"expected {n_params(dim)} parameters, got {x.size}")
    rows, cols = np.tril_indices(dim, -1)
    m = rows.size
    t = np.zeros((dim, dim), dtype=np.complex128)
    t[np.diag_indices(dim)] = x[:dim]
    t[rows, cols] = x[dim : dim + m] + 1j * x[dim + m :]
    return t


def t_to_params(t: np.ndarray) -> np.ndarray:
    dim = t.shape[0]
    rows, cols = np.tril_indices(dim, -1)
    return np.concatenate([np.real(np.diag(t)), t[rows, cols].real, t[rows, cols].imag])


def rho_from_params(x: np.ndarray, dim: int) -> DensityMatrix:
    t = params_to_t(x, dim)
    return DensityMatrix.from_hermitian(t.conj().T @ t)


def params_from_matrix(m: np.ndarray) -> np.ndarray:
    """Parameters of the lower-triangular T with T^dagger T = m (m positive definite)."""
    j = np.eye(m.shape[0])[::-1]
    # reversing the basis turns an upper-triangular factor into a lower one
    low = np.linalg.cholesky(j @ m @ j)
    t = (j @ low @ j).conj().T
    return t_to_params(t)


def log_likelihood(x: np.ndarray, vectors: np.ndarray, counts: np.ndarray) -> float:
    return log_likelihood_and_gradient(x, vectors, counts)[0]


def saturated_log_likelihood(counts: np.ndarray) -> float:
    """sum n log n - n: the likelihood ceiling reached when every mu_i = n_i."""
    counts = np.asarray(counts, dtype=float)
    pos = counts > 0
    return float(np.dot(counts[pos], np.log(counts[pos])) - counts.sum())


def log_likelihood_and_gradient(
    x: np.ndarray, vectors: np.ndarray, counts: np.ndarray
) -> tuple[float, np.ndarray]:
    """Poisson log-likelihood (without the log n! constant) and its gradient."""
    dim = vectors.shape[1]
    t = params_to_t(x, dim)
    v = vectors @ t.T
    mu = np.sum(np.abs(v) ** 2, axis=1)
    counts = np.asarray(counts, dtype=float)
    pos = counts > 0
    mu_safe = np.maximum(mu, 1e-300)
    value = float(np.dot(counts[pos], np.log(mu_safe[pos])) - mu.sum())
    w = counts / mu_safe - 1.0
    # dL/dT* = T sum_i w_i |phi_i><phi_i|
    g = 2.0 * t @ (vectors.T @ (w[:, None] * vectors.conj()))
    rows, cols = np.tril_indices(dim, -1)
    grad = np.concatenate([np.real(np.diag(g)), g[rows, cols].real, g[rows, cols].imag])
    return value, grad


def linear_inversion(tset: TomographySet) -> np.ndarray:
    """Least-squares estimate of the unnormalized intensity matrix (may be non-PSD)."""
    a = measurement_matrix(tset.projectors)
    c, *_ = np.linalg.lstsq(a, tset.counts.astype(float), rcond=None)
    basis = pauli_basis(tset.n)
    m = sum(ci * b for ci, b in zip(c, basis)) / (1 << tset.n)
    return 0.5 * (m + m.conj().T)


def _initial_params(tset: TomographySet) -> np.ndarray:
    m = linear_inversion(tset)
    lam, u = np.linalg.eigh(m)
    lam = np.clip(lam, 0.0, None)
    scale = lam.sum() if lam.sum() > 0 else float(tset.counts.sum()) / len(tset.counts)
    lam = lam + 1e-3 * scale / lam.size
    return params_from_matrix((u * lam) @ u.conj().T)


@dataclass(frozen=True, eq=False)
class MLEResult:
    rho: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    history: tuple[float, ...]
    params: np.ndarray


def mle_reconstruct(
    tset: TomographySet,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: np.ndarray | None = None,
) -> MLEResult:
    """Maximum-likelihood density matrix for a tomography data set.

    The ascent runs L-BFGS on the Cholesky parameters with the analytic
    gradient. It stops when the relative log-likelihood improvement drops
    below ``tol`` or after ``max_iter`` iterations. Improvements are measured
    on the likelihood minus its saturated ceiling (half the deviance), whose
    scale does not grow with the number of counts.

    Raises
    ------
    ValueError
        On all-zero counts or a non-finite likelihood.
    """
    counts = tset.counts.astype(float)
    if counts.sum() <= 0:
        raise ValueError("all tomography counts are zero")
    vectors = tset.vectors
    dim = vectors.shape[1]
    x0 = _initial_params(tset) if x0 is None else np.asarray(x0, dtype=float)

    ceiling = saturated_log_likelihood(counts)
    history: list[float] = []

    def objective(x):
        value, grad = log_likelihood_and_gradient(x, vectors, counts)
        return ceiling - value, -grad

    def record(intermediate_result):
        history.append(ceiling - float(intermediate_result.fun))

    res = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iter, "maxfun": 20 * max_iter, "ftol": tol, "gtol": 0.0, "maxcor": 20},
    )
    value = ceiling - float(res.fun)
    if not np.isfinite(value) or not np.all(np.isfinite(res.x)):
        raise ValueError("likelihood became non-finite during reconstruction")
    return MLEResult(
        rho=rho_from_params(res.x, dim),
        log_likelihood=value,
        iterations=int(res.nit),
        converged=bool(res.nit < max_iter),
        history=tuple(history),
        params=res.x,
    )


def fidelity_with_error(
    tset: TomographySet,
    target: StateVector,
    n_bootstrap: int = 100,
    rng_seed: int = 0,
    **mle_kwargs,
) -> tuple[float, float]:
    """Point fidelity of the MLE state and its parametric-bootstrap spread.

    Each resample redraws every count from Poisson(observed count) with its
    own spawned RNG stream and is reconstructed independently.
    """
    if n_bootstrap < 2:
        raise ValueError("bootstrap needs at least two resamples")
    point = mle_reconstruct(tset, **mle_kwargs)
    f0 = fidelity_pure_target(point.rho, target)
    streams = np.random.SeedSequence(rng_seed).spawn(n_bootstrap)
    fids = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        resampled = tset.with_counts(rng.poisson(tset.counts))
        rec = mle_reconstruct(resampled, x0=point.params, **mle_kwargs)
        fids.append(fidelity_pure_target(rec.rho, target))
    return f0, float(np.std(fids, ddof=1))


def total_variation(tset: TomographySet, rho) -> float:
    """TV distance between empirical count frequencies and the model's counts."""
    probs = projector_probabilities(rho, tset.projectors)
    emp = tset.counts / tset.counts.sum()
    return 0.5 * float(np.abs(emp - probs / probs.sum()).sum())


def reconstruction_json(rho: DensityMatrix, fidelity: float, sigma: float, **extra) -> dict:
    out = {
        "real": np.real(rho.entries).tolist(),
        "imag": np.imag(rho.entries).tolist(),
        "F": fidelity,
        "sigma_F": sigma,
    }
    out.update(extra)
    return out
