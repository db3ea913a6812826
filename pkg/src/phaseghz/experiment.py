"""Noise channels and Monte Carlo of the fourfold-coincidence experiment.

Each analyzer setting is accumulated for a fixed time, so its total count is
Poisson(rate * duration) and the outcomes split multinomially by the Born
probabilities. Every setting (and every scan point) draws from its own
stream spawned from the configured seed, so results do not depend on the
order of evaluation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .gbi import CLASSICAL_BOUND, gbi_gradient, gbi_s_parameter, quantum_prediction
from .measurement import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CorrelationTable,
    CountsRecord,
    _as_density,
    all_settings,
    basis_probabilities,
    correlation_from_counts,
    full_correlation_table,
    outcome_probabilities,
)
from .quantum import DensityMatrix, make_phase_ghz, pure_to_density
from .witness import N_PARTIES, required_settings, witness_expectation, witness_from_counts

NOISE_KINDS = ("none", "white", "dephasing", "depolarizing_local")
MODES = ("counts", "exact")

DEFAULT_RATE_HZ = 1.64
DEFAULT_DURATION_S = 300.0
DEFAULT_WINDOW_NS = 2.5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """``parameter`` is the retained fraction: 1 leaves the state untouched.

    - white: p rho + (1 - p) I/d
    - dephasing: phase flip on the last photon with probability (1 - V)/2,
      which scales the |H..H><V..V| coherence of any GHZ-type state by V
    - depolarizing_local: each photon depolarized, rho -> p rho + (1 - p) I/2 (x) Tr_j rho
    """

    kind: str = "none"
    parameter: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= float(self.parameter) <= 1.0:
            raise ConfigError(f"noise parameter must lie in [0, 1], got {self.parameter}")


def _conjugate_local(rho: np.ndarray, op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """op_q rho op_q^dagger for a single-qubit operator on ``qubit`` (1-based)."""
    t = rho.reshape((2,) * (2 * n))
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [qubit - 1])), 0, qubit - 1)
    t = np.moveaxis(np.tensordot(op.conj(), t, axes=([1], [n + qubit - 1])), 0, n + qubit - 1)
    return t.reshape(rho.shape)


def apply_noise(rho, model: NoiseModel) -> DensityMatrix:
    rho = _as_density(rho)
    m = rho.entries
    n, d = rho.n, rho.dim
    p = float(model.parameter)
    if model.kind == "none":
        return rho
    if model.kind == "white":
        out = p * m + (1 - p) * np.eye(d) / d
    elif model.kind == "dephasing":
        flipped = _conjugate_local(m, SIGMA_Z, n, n)
        out = 0.5 * (1 + p) * m + 0.5 * (1 - p) * flipped
    elif model.kind == "depolarizing_local":
        out = m
        for q in range(1, n + 1):
            twirl = sum(_conjugate_local(out, s, q, n) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
            out = 0.25 * (1 + 3 * p) * out + 0.25 * (1 - p) * twirl
    else:
        raise ConfigError(f"unknown noise kind {model.kind!r}")
    return DensityMatrix.from_hermitian(out)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    theta: float = np.pi / 4
    noise: NoiseModel = field(default_factory=NoiseModel)
    fourfold_rate_hz: float = DEFAULT_RATE_HZ
    duration_s: float = DEFAULT_DURATION_S
    coincidence_window_ns: float = DEFAULT_WINDOW_NS
    mode: str = "counts"
    n_bootstrap: int = 100

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not self.fourfold_rate_hz > 0:
            raise ConfigError("fourfold_rate_hz must be positive")
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not np.isfinite(self.theta):
            raise ConfigError("theta must be finite")
        if int(self.n_bootstrap) < 2:
            raise ConfigError("n_bootstrap must be at least 2")

    @property
    def expected_counts(self) -> float:
        return self.fourfold_rate_hz * self.duration_s

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a JSON object")
        if "seed" not in d:
            raise ConfigError("config must specify a seed")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kw = dict(d)
        noise = kw.pop("noise", None) or {}
        try:
            kw["noise"] = NoiseModel(**noise)
            for key in ("theta", "fourfold_rate_hz", "duration_s", "coincidence_window_ns"):
                if key in kw:
                    kw[key] = float(kw[key])
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["seed"] = int(self.seed)
        return out

    def with_theta(self, theta: float) -> "ExperimentConfig":
        return replace(self, theta=float(theta))


def prepare_state(config: ExperimentConfig, theta: float | None = None) -> DensityMatrix:
    theta = config.theta if theta is None else theta
    return apply_noise(pure_to_density(make_phase_ghz(N_PARTIES, theta)), config.noise)


def _draw_counts(probs: np.ndarray, mean_total: float, rng: np.random.Generator) -> np.ndarray:
    total = rng.poisson(mean_total)
    return rng.multinomial(total, probs)


def simulate_setting_counts(
    rho,
    setting,
    config: ExperimentConfig,
    rng: np.random.Generator,
    seed_label: int | None = None,
) -> CountsRecord:
    if isinstance(setting, str):
        probs = basis_probabilities(rho, [{"H": "HV", "D": "DA", "R": "RL"}[c] for c in setting])
    else:
        probs = outcome_probabilities(rho, setting)
    counts = _draw_counts(probs, config.expected_counts, rng)
    return CountsRecord(
        setting=setting,
        counts=counts,
        duration_s=config.duration_s,
        seed=seed_label,
        rate_hz=config.fourfold_rate_hz,
    )


@dataclass(frozen=True, eq=False)
class BellRun:
    theta: float
    S: float
    sigma_S: float
    table: CorrelationTable
    errors: dict
    records: dict

    @property
    def significance_sd(self) -> float | None:
        return significance(self.S, self.sigma_S, CLASSICAL_BOUND) if self.sigma_S > 0 else None


def _bell_from_state(rho: DensityMatrix, config: ExperimentConfig, root: np.random.SeedSequence, theta) -> BellRun:
    if config.mode == "exact":
        table = full_correlation_table(rho)
        return BellRun(theta, gbi_s_parameter(table), 0.0, table, {k: 0.0 for k in table}, {})
    if config.expected_counts <= 0:
        raise ValueError("zero expected counts per setting")
    settings = all_settings(rho.n)
    records, values, errors = {}, {}, {}
    for k, ss in zip(settings, root.spawn(len(settings))):
        rec = simulate_setting_counts(rho, k, config, np.random.default_rng(ss), seed_label=int(config.seed))
        if rec.total == 0:
            raise ValueError(f"setting {k} recorded zero coincidences; increase rate or duration")
        records[k] = rec
        values[k], errors[k] = correlation_from_counts(rec)
    table = CorrelationTable(rho.n, values)
    s = gbi_s_parameter(table)
    grad = gbi_gradient(table)
    sig = np.array([errors[k] for k in settings])
    return BellRun(theta, s, float(np.sqrt(np.sum((grad * sig) ** 2))), table, errors, records)


def run_bell_experiment(config: ExperimentConfig) -> BellRun:
    """Counts for all 16 settings, the GBI S and its propagated standard error.

    The error treats the sign inside each |.| as fixed at the point estimate,
    which breaks down only where an inner sum crosses zero.
    """
    rho = prepare_state(config)
    return _bell_from_state(rho, config, np.random.SeedSequence(config.seed), config.theta)


def significance(value: float, sigma: float, classical_bound: float | None = None) -> float:
    """Distance from the classical bound in standard errors.

    With ``classical_bound=None`` the witness convention |value|/sigma is used.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if classical_bound is None:
        return abs(value) / sigma
    return (value - classical_bound) / sigma


@dataclass(frozen=True)
class ScanRow:
    theta: float
    S: float
    sigma_S: float
    quantum_prediction: float
    classical_bound: float


def theta_scan(config: ExperimentConfig, theta_grid: Iterable[float]) -> list[ScanRow]:
    grid = [float(t) for t in theta_grid]
    if not grid:
        raise ValueError("theta grid is empty")
    rows = []
    for theta, ss in zip(grid, np.random.SeedSequence(config.seed).spawn(len(grid))):
        run = _bell_from_state(prepare_state(config, theta), config, ss, theta)
        rows.append(ScanRow(theta, run.S, run.sigma_S, quantum_prediction(theta), CLASSICAL_BOUND))
    return rows


@dataclass(frozen=True, eq=False)
class WitnessRun:
    theta: float
    witness: float
    sigma: float
    method: str
    records: dict
    population_record: CountsRecord | None


def run_witness_experiment(config: ExperimentConfig, theta: float | None = None) -> WitnessRun:
    """Witness at one of the three decomposable phases.

    Counts mode measures the required sigma_x/sigma_y settings plus one H/V
    run for the populations; exact mode returns the direct trace.
    """
    theta = config.theta if theta is None else theta
    settings = required_settings(theta)
    rho = prepare_state(config, theta)
    if config.mode == "exact":
        return WitnessRun(theta, witness_expectation(rho, theta), 0.0, "direct", {}, None)
    streams = np.random.SeedSequence(config.seed).spawn(len(settings) + 1)
    records = {
        k: simulate_setting_counts(rho, k, config, np.random.default_rng(ss), seed_label=int(config.seed))
        for k, ss in zip(settings, streams)
    }
    pop = simulate_setting_counts(rho, "H" * N_PARTIES, config, np.random.default_rng(streams[-1]), int(config.seed))
    w, sigma = witness_from_counts(records, pop, theta)
    return WitnessRun(theta, w, sigma, "decomposed", records, pop)


def expectation_values(config: ExperimentConfig, theta: float | None = None) -> list[dict]:
    """All 16 correlations with errors and the ideal cos(theta - m pi/2) reference."""
    theta = config.theta if theta is None else theta
    run = _bell_from_state(prepare_state(config, theta), config, np.random.SeedSequence(config.seed), theta)
    out = []
    for k in all_settings(N_PARTIES):
        m_y = sum(1 for x in k if x == 2)
        out.append({
            "setting": list(k),
            "E": run.table[k],
            "sigma": run.errors[k],
            "ideal": float(np.cos(theta - m_y * np.pi / 2)),
        })
    return out


def repeat_bell_experiment(config: ExperimentConfig, repetitions: int) -> tuple[np.ndarray, np.ndarray]:
    """S and sigma_S over independent runs seeded seed, seed+1, ..."""
    s, sig = np.empty(repetitions), np.empty(repetitions)
    rho = prepare_state(config)
    for i in range(repetitions):
        run = _bell_from_state(rho, config, np.random.SeedSequence(config.seed + i), config.theta)
        s[i], sig[i] = run.S, run.sigma_S
    return s, sig
