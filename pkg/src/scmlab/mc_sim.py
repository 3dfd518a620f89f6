"""Finite-size Metropolis training of a committee student on a fixed dataset.

The student is K rows of N weights, each constrained to the sphere
||w||^2 = N.  Training energy is the summed squared output deviation over
P stored patterns labeled by an orthonormal teacher; one Monte Carlo step
perturbs all rows simultaneously with Gaussian noise of scale sigma,
renormalizes, and accepts by the Metropolis rule at inverse temperature
beta.  The step scale adapts toward a target acceptance rate during an
initial burn-in window and is frozen afterwards, so measurements are taken
under a fixed kernel.

Everything is deterministic given the config seed: the teacher, dataset,
initializations and chains derive their streams from
``SeedSequence([seed, purpose, run_index])``, which also makes the
parallel path (one process per run) bit-identical to the sequential one.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .activations import get_activation
from .gen_error import eps_g_general
from .order_params import FullOverlapMatrix, validate

__all__ = [
    "McConfig",
    "Dataset",
    "McRunRecord",
    "McObservables",
    "make_teacher",
    "make_dataset",
    "energy",
    "metropolis_accept",
    "mc_step",
    "adapt_sigma",
    "init_student",
    "measure_overlaps",
    "run",
]

HIST_BINS = 40


@dataclass(frozen=True)
class McConfig:
    """Full description of a simulation campaign (all runs share the data)."""

    N: int = 50
    K: int = 4
    M: int = 4
    activation: str = "erf"
    beta: float = 1.0
    alpha_tilde: float = 8.0
    mcs_total: int = 20000
    measure_window: int = 1000
    runs: int = 20
    seed: int = 0
    init_bias: str | None = None  # None | "PositiveSpecialized" | "AntiSpecialized"
    init_magnitude: float = 1.0
    step_sigma: float = 0.1
    target_acceptance: float = 0.5
    adapt_interval: int = 100
    burn_in_fraction: float = 0.2
    measure_every: int = 10

    @property
    def P(self) -> int:
        return max(1, round(self.alpha_tilde * self.K * self.N))

    def validated(self) -> "McConfig":
        if self.M > self.N:
            raise ValueError(f"teacher needs M <= N, got M={self.M}, N={self.N}")
        if self.init_bias not in (None, "PositiveSpecialized", "AntiSpecialized"):
            raise ValueError(f"unknown init_bias {self.init_bias!r}")
        if self.init_bias is not None and self.K != self.M:
            raise ValueError("biased initializations require K == M")
        if self.measure_window > self.mcs_total:
            raise ValueError("measurement window longer than the chain")
        if self.beta < 0.0 or self.alpha_tilde <= 0.0:
            raise ValueError("beta must be >= 0 and alpha_tilde > 0")
        return self

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["P"] = self.P
        return d


@dataclass(frozen=True)
class Dataset:
    """P input patterns and their teacher labels."""

    inputs: np.ndarray  # (P, N)
    labels: np.ndarray  # (P,)

    @property
    def P(self) -> int:
        return self.inputs.shape[0]


def make_teacher(N: int, M: int, seed) -> np.ndarray:
    """M orthogonal teacher rows of squared norm N (overlap matrix N * I)."""
    if M > N:
        raise ValueError(f"need M <= N, got M={M}, N={N}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, M))
    Q, _ = np.linalg.qr(A)
    return math.sqrt(N) * Q.T


def _output(weights: np.ndarray, inputs: np.ndarray, activation) -> np.ndarray:
    """Committee output for each input row: mean unit response times sqrt(K)."""
    a = get_activation(activation)
    K, N = weights.shape
    fields = inputs @ weights.T / math.sqrt(N)
    return a.eval(fields).sum(axis=1) / math.sqrt(K)


def make_dataset(N: int, P: int, teacher: np.ndarray, activation, seed) -> Dataset:
    rng = np.random.default_rng(seed)
    inputs = rng.standard_normal((P, N))
    labels = _output(teacher, inputs, activation)
    return Dataset(inputs=inputs, labels=labels)


def energy(weights: np.ndarray, dataset: Dataset, activation) -> float:
    """Training energy: half the summed squared output deviation."""
    if dataset.P == 0:
        return 0.0
    out = _output(weights, dataset.inputs, activation)
    diff = out - dataset.labels
    return 0.5 * float(diff @ diff)


def metropolis_accept(delta_e: float, beta: float, u: float) -> bool:
    """Pure Metropolis decision given the proposal's energy change and one
    uniform variate u in [0, 1)."""
    if delta_e <= 0.0:
        return True
    if beta == 0.0:
        return True
    return u < math.exp(-beta * delta_e)


def _propose(weights: np.ndarray, sigma: float, rng) -> np.ndarray:
    N = weights.shape[1]
    trial = weights + sigma * rng.standard_normal(weights.shape)
    norms = np.linalg.norm(trial, axis=1, keepdims=True)
    return trial * (math.sqrt(N) / norms)


def mc_step(weights: np.ndarray, dataset: Dataset, activation, beta: float,
            sigma: float, rng) -> tuple[np.ndarray, bool, float]:
    """One reference Metropolis step (energies recomputed from scratch).

    Consumes exactly K*N normals and one uniform from ``rng`` regardless of
    the outcome, so trajectories are reproducible step by step.
    """
    N = weights.shape[1]
    norms = np.linalg.norm(weights, axis=1)
    if not np.allclose(norms, math.sqrt(N), atol=1e-12 * math.sqrt(N)):
        raise ValueError("student rows must lie on the sphere ||w||^2 = N")
    trial = _propose(weights, sigma, rng)
    delta_e = energy(trial, dataset, activation) - energy(weights, dataset, activation)
    u = float(rng.uniform())
    if metropolis_accept(delta_e, beta, u):
        return trial, True, delta_e
    return weights, False, delta_e


def adapt_sigma(sigma: float, acceptance_rate: float, target: float = 0.5) -> float:
    """Nudge the proposal scale toward the target acceptance rate."""
    if acceptance_rate > target + 0.05:
        return sigma * 1.1
    if acceptance_rate < target - 0.05:
        return sigma * 0.9
    return sigma


def init_student(teacher: np.ndarray, K: int, bias: str | None,
                 magnitude: float, seed) -> np.ndarray:
    """Random student, optionally biased toward (or against) the teacher.

    ``PositiveSpecialized`` pulls each row toward its own teacher vector;
    ``AntiSpecialized`` pushes it away while mixing in the other teachers
    equally, which lands near the configuration where every diagonal
    overlap is negative.
    """
    M, N = teacher.shape
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((K, N))
    # teacher rows and Gaussian rows both have norm ~ sqrt(N), so after
    # normalization a bias of magnitude m yields diagonal overlaps near
    # m / sqrt(1 + m^2)
    if bias == "PositiveSpecialized":
        if K != M:
            raise ValueError("biased initializations require K == M")
        W = W + magnitude * teacher
    elif bias == "AntiSpecialized":
        if K != M:
            raise ValueError("biased initializations require K == M")
        total = teacher.sum(axis=0)
        for i in range(K):
            others = (total - teacher[i]) / max(K - 1, 1)
            W[i] = W[i] + magnitude * (others - teacher[i])
    elif bias is not None:
        raise ValueError(f"unknown init bias {bias!r}")
    norms = np.linalg.norm(W, axis=1, keepdims=True)
    return W * (math.sqrt(N) / norms)


def measure_overlaps(weights: np.ndarray, teacher: np.ndarray) -> FullOverlapMatrix:
    N = weights.shape[1]
    Q = weights @ weights.T / N
    R = weights @ teacher.T / N
    T = teacher @ teacher.T / N
    return FullOverlapMatrix(Q=Q, R=R, T=T)


@dataclass
class McRunRecord:
    """Per-chain trajectory and measurements."""

    run_index: int
    energy_per_p: np.ndarray       # after each step
    acceptance: np.ndarray         # bool, per step
    measure_steps: np.ndarray      # step indices where overlaps were measured
    eps_series: np.ndarray         # eps_g from measured overlaps at those steps
    r_window_samples: np.ndarray   # student-teacher overlaps sampled in the window
    sigma_final: float
    final_overlaps: FullOverlapMatrix

    def windowed_energy(self, window: int) -> float:
        return float(self.energy_per_p[-window:].mean())

    def windowed_eps(self, window_start_step: int) -> float:
        sel = self.measure_steps >= window_start_step
        return float(self.eps_series[sel].mean())


@dataclass
class McObservables:
    config: McConfig
    run_records: list[McRunRecord] = field(default_factory=list)

    @property
    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """Distribution of all student-teacher overlaps over the measurement
        window, pooled across runs: (bin_edges, mass) with mass summing to 1."""
        samples = np.concatenate([r.r_window_samples.ravel() for r in self.run_records])
        counts, edges = np.histogram(np.clip(samples, -1.0, 1.0),
                                     bins=HIST_BINS, range=(-1.0, 1.0))
        return edges, counts / max(counts.sum(), 1)

    def summary(self) -> dict:
        cfg = self.config
        window_start = cfg.mcs_total - cfg.measure_window + 1
        e = np.array([r.windowed_energy(cfg.measure_window) for r in self.run_records])
        eps = np.array([r.windowed_eps(window_start) for r in self.run_records])
        acc = np.array([float(r.acceptance.mean()) for r in self.run_records])
        edges, mass = self.histogram
        n = len(self.run_records)
        sd = math.sqrt(max(n - 1, 1))
        return {
            "P": cfg.P,
            "runs": n,
            "energy_per_p_mean": float(e.mean()),
            "energy_per_p_se": float(e.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            "eps_g_mean": float(eps.mean()),
            "eps_g_se": float(eps.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            "acceptance_mean": float(acc.mean()),
            "histogram_edges": edges.tolist(),
            "histogram_mass": mass.tolist(),
            "negative_overlap_mass": float(mass[edges[:-1] < 0.0].sum()),
        }


def _run_chain(config: McConfig, run_index: int) -> McRunRecord:
    cfg = config.validated()
    a = get_activation(cfg.activation)
    teacher = make_teacher(cfg.N, cfg.M, np.random.SeedSequence([cfg.seed, 1]))
    dataset = make_dataset(cfg.N, cfg.P, teacher, a,
                           np.random.SeedSequence([cfg.seed, 2]))
    W = init_student(teacher, cfg.K, cfg.init_bias, cfg.init_magnitude,
                     np.random.SeedSequence([cfg.seed, 3, run_index]))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4, run_index]))

    sqK, sqN = math.sqrt(cfg.K), math.sqrt(cfg.N)
    inputs, labels = dataset.inputs, dataset.labels
    window_start = cfg.mcs_total - cfg.measure_window + 1
    burn_in_end = int(cfg.burn_in_fraction * cfg.mcs_total)

    def total_energy(weights):
        out = a.eval(inputs @ weights.T / sqN).sum(axis=1) / sqK
        d = out - labels
        return 0.5 * float(d @ d)

    E = total_energy(W)
    sigma = cfg.step_sigma
    e_per_p = np.empty(cfg.mcs_total)
    accepted = np.zeros(cfg.mcs_total, dtype=bool)
    measure_steps, eps_series, r_samples = [], [], []

    for step in range(1, cfg.mcs_total + 1):
        trial = _propose(W, sigma, rng)
        E_trial = total_energy(trial)
        # cached current energy: identical to recomputing it, checked in tests
        delta_e = E_trial - E
        u = float(rng.uniform())
        if metropolis_accept(delta_e, cfg.beta, u):
            W, E = trial, E_trial
            accepted[step - 1] = True
        e_per_p[step - 1] = E / cfg.P
        if step <= burn_in_end and step % cfg.adapt_interval == 0:
            rate = accepted[step - cfg.adapt_interval:step].mean()
            sigma = adapt_sigma(sigma, float(rate), cfg.target_acceptance)
        if step % cfg.measure_every == 0 or step == cfg.mcs_total:
            m = measure_overlaps(W, teacher)
            measure_steps.append(step)
            eps_series.append(eps_g_general(a, m, check=False))
            if step >= window_start:
                r_samples.append(m.R.ravel().copy())

    final = measure_overlaps(W, teacher)
    ok, diag = validate(final)
    if not ok:
        raise RuntimeError(f"measured overlaps failed validation: {diag}")
    return McRunRecord(
        run_index=run_index,
        energy_per_p=e_per_p,
        acceptance=accepted,
        measure_steps=np.array(measure_steps),
        eps_series=np.array(eps_series),
        r_window_samples=np.array(r_samples) if r_samples else np.empty((0, cfg.K * cfg.M)),
        sigma_final=sigma,
        final_overlaps=final,
    )


def run(config: McConfig, threads: int = 1) -> McObservables:
    """Execute all runs of a campaign; parallel execution is bit-identical
    to sequential because every chain seeds its own streams."""
    cfg = config.validated()
    obs = McObservables(config=cfg)
    if threads > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_chain, cfg, r) for r in range(cfg.runs)]
            obs.run_records = [f.result() for f in futures]
    else:
        obs.run_records = [_run_chain(cfg, r) for r in range(cfg.runs)]
    return obs
